//! Matrix Market coordinate files for dense matrices.

use std::path::Path;

use nalgebra_sparse::io::{
    load_coo_from_matrix_market_file, load_coo_from_matrix_market_str, save_to_matrix_market_str,
};
use nalgebra_sparse::CooMatrix;

use monosplit::Matrix;

use crate::error::{HarnessError, Result};

fn to_coo(m: &Matrix) -> CooMatrix<f64> {
    let mut coo = CooMatrix::new(m.nrows(), m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                coo.push(i, j, v);
            }
        }
    }
    coo
}

fn from_coo(coo: &CooMatrix<f64>) -> Matrix {
    let mut m = Matrix::zeros(coo.nrows(), coo.ncols());
    for (i, j, v) in coo.triplet_iter() {
        m[(i, j)] += *v;
    }
    m
}

/// Coordinate-format text of the nonzeros of `m`.
pub fn to_string(m: &Matrix) -> String {
    save_to_matrix_market_str(&to_coo(m))
}

pub fn from_str(s: &str) -> Result<Matrix> {
    let coo = load_coo_from_matrix_market_str::<f64>(s)
        .map_err(|e| HarnessError::MatrixMarket(e.to_string()))?;
    Ok(from_coo(&coo))
}

pub fn write_dense(m: &Matrix, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(m))?;
    Ok(())
}

pub fn read_dense(path: &Path) -> Result<Matrix> {
    let coo = load_coo_from_matrix_market_file::<f64, _>(path)
        .map_err(|e| HarnessError::MatrixMarket(format!("{}: {e}", path.display())))?;
    Ok(from_coo(&coo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let m = Matrix::from_row_slice(
            2,
            3,
            &[0.1, 0.0, -1.0 / 3.0, 0.0, 1e-300, std::f64::consts::PI],
        );
        let back = from_str(&to_string(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_garbage() {
        assert!(from_str("not a matrix").is_err());
    }
}
