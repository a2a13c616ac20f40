//! Triangular splitting of a skew-symmetric matrix.

use crate::error::Result;
use crate::linalg::{Matrix, StrictLower, Vector};
use crate::problem::check_skew;
use crate::spectral::{spectral_norm_sym_or_dense, DEFAULT_SPECTRAL_TOL};

/// `N = Bsym - 2B = 2B^T - Bsym` with `B^T` the strict upper part of `N`.
#[derive(Clone, Debug)]
pub struct SkewSplit {
    b: StrictLower,
    b_dense: Matrix,
    bsym: Matrix,
    l_bsym: f64,
}

/// Splits `N` into its strictly lower factor `B` (`B_ij = N_ji` for `i > j`).
pub fn split_skew(n: &Matrix) -> Result<SkewSplit> {
    check_skew(n)?;
    let dim = n.nrows();
    let b_dense = Matrix::from_fn(dim, dim, |i, j| if i > j { n[(j, i)] } else { 0.0 });
    let bsym = &b_dense + b_dense.transpose();
    let l_bsym = spectral_norm_sym_or_dense(&bsym, DEFAULT_SPECTRAL_TOL)?;
    Ok(SkewSplit {
        b: StrictLower::from_dense_lower(&b_dense),
        b_dense,
        bsym,
        l_bsym,
    })
}

impl SkewSplit {
    pub fn dim(&self) -> usize {
        self.bsym.nrows()
    }

    pub fn lower(&self) -> &StrictLower {
        &self.b
    }

    /// `B` as a dense matrix.
    pub fn b(&self) -> &Matrix {
        &self.b_dense
    }

    pub fn bsym(&self) -> &Matrix {
        &self.bsym
    }

    /// `|Bsym|_2`
    pub fn l_bsym(&self) -> f64 {
        self.l_bsym
    }

    /// `Bsym x`
    pub fn bsym_mul(&self, x: &Vector) -> Vector {
        self.b.sym_mul(x)
    }

    /// `N = Bsym - 2B`
    pub fn reconstruct(&self) -> Matrix {
        &self.bsym - &self.b_dense * 2.0
    }

    /// `N = 2B^T - Bsym`
    pub fn reconstruct_upper(&self) -> Matrix {
        self.b_dense.transpose() * 2.0 - &self.bsym
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let n = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = split_skew(&n).unwrap();
        assert_eq!(s.b(), &Matrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
        assert_eq!(
            s.bsym(),
            &Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        );
        assert!((s.l_bsym() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero() {
        let s = split_skew(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(s.b(), &Matrix::zeros(3, 3));
        assert_eq!(s.bsym(), &Matrix::zeros(3, 3));
        assert_eq!(s.l_bsym(), 0.0);
    }

    #[test]
    fn three_by_three() {
        let n = Matrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, -1.0, 0.0, 3.0, -2.0, -3.0, 0.0]);
        let s = split_skew(&n).unwrap();
        assert_eq!(
            s.b(),
            &Matrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 3.0, 0.0])
        );
        assert_eq!(
            s.bsym(),
            &Matrix::from_row_slice(3, 3, &[0.0, 1.0, 2.0, 1.0, 0.0, 3.0, 2.0, 3.0, 0.0])
        );
        let oracle = s
            .bsym()
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0_f64, |a, &b| a.max(b.abs()));
        assert!((s.l_bsym() - oracle).abs() <= 1e-10 * oracle);
        assert_eq!(s.reconstruct(), n);
        assert_eq!(s.reconstruct_upper(), n);
        assert_eq!(s.bsym().trace(), 0.0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(split_skew(&Matrix::zeros(2, 3)).is_err());
        assert!(split_skew(&Matrix::from_row_slice(2, 2, &[0.0, 1.0, -0.5, 0.0])).is_err());
    }
}
