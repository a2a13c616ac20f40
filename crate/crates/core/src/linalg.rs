//! Dense and sparse linear-algebra helpers shared by the solvers.
//!
//! Dense work goes through `nalgebra`. The strictly lower triangular factor of
//! the skew splitting is kept in compressed row form (both `B` and `B^T`) so
//! forward and backward substitution touch only the stored entries.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Below this dimension substitution runs over a dense copy of `B`.
pub const DENSE_SUBSTITUTION_CUTOFF: usize = 64;

#[derive(Clone, Debug, Default)]
struct Csr {
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.ptr[i], self.ptr[i + 1]);
        self.idx[a..b]
            .iter()
            .copied()
            .zip(self.val[a..b].iter().copied())
    }
}

/// A strictly lower triangular matrix `B` with fast products and
/// substitution against `dI + cB` and `dI + cB^T`.
#[derive(Clone, Debug)]
pub struct StrictLower {
    n: usize,
    rows: Csr,
    rows_t: Csr,
    dense: Option<Matrix>,
}

impl StrictLower {
    /// Builds from the strictly lower part of `m`. Entries on or above the
    /// diagonal are ignored.
    pub fn from_dense_lower(m: &Matrix) -> Self {
        let n = m.nrows();
        let mut rows = Csr {
            ptr: vec![0],
            ..Default::default()
        };
        for i in 0..n {
            for j in 0..i {
                let v = m[(i, j)];
                if v != 0.0 {
                    rows.idx.push(j);
                    rows.val.push(v);
                }
            }
            rows.ptr.push(rows.idx.len());
        }
        let mut rows_t = Csr {
            ptr: vec![0],
            ..Default::default()
        };
        for j in 0..n {
            for i in (j + 1)..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    rows_t.idx.push(i);
                    rows_t.val.push(v);
                }
            }
            rows_t.ptr.push(rows_t.idx.len());
        }
        let dense = (n < DENSE_SUBSTITUTION_CUTOFF)
            .then(|| m.lower_triangle() - Matrix::from_diagonal(&m.diagonal()));
        Self {
            n,
            rows,
            rows_t,
            dense,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rows.val.len()
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.rows.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Forces the sparse substitution path regardless of dimension.
    pub fn without_dense_fallback(mut self) -> Self {
        self.dense = None;
        self
    }

    /// `B x`
    pub fn mul(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(self.n);
        for i in 0..self.n {
            out[i] = self.rows.row(i).map(|(j, v)| v * x[j]).sum();
        }
        out
    }

    /// `B^T x`
    pub fn mul_t(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(self.n);
        for i in 0..self.n {
            out[i] = self.rows_t.row(i).map(|(j, v)| v * x[j]).sum();
        }
        out
    }

    /// `(B + B^T) x`
    pub fn sym_mul(&self, x: &Vector) -> Vector {
        let mut out = self.mul(x);
        out += self.mul_t(x);
        out
    }

    /// Solves `(d I + c B) x = rhs` by forward substitution.
    pub fn solve_lower(&self, d: f64, c: f64, rhs: &Vector) -> Vector {
        debug_assert!(d != 0.0);
        let mut x = rhs.clone();
        match &self.dense {
            Some(b) => {
                for i in 0..self.n {
                    let mut s = x[i];
                    for j in 0..i {
                        s -= c * b[(i, j)] * x[j];
                    }
                    x[i] = s / d;
                }
            }
            None => {
                for i in 0..self.n {
                    let s: f64 = self.rows.row(i).map(|(j, v)| v * x[j]).sum();
                    x[i] = (x[i] - c * s) / d;
                }
            }
        }
        x
    }

    /// Solves `(d I + c B^T) x = rhs` by backward substitution.
    pub fn solve_upper(&self, d: f64, c: f64, rhs: &Vector) -> Vector {
        debug_assert!(d != 0.0);
        let mut x = rhs.clone();
        match &self.dense {
            Some(b) => {
                for i in (0..self.n).rev() {
                    let mut s = x[i];
                    for j in (i + 1)..self.n {
                        s -= c * b[(j, i)] * x[j];
                    }
                    x[i] = s / d;
                }
            }
            None => {
                for i in (0..self.n).rev() {
                    let s: f64 = self.rows_t.row(i).map(|(j, v)| v * x[j]).sum();
                    x[i] = (x[i] - c * s) / d;
                }
            }
        }
        x
    }
}

/// Largest absolute entry, zero for empty input.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
}

/// Checks `M = M^T` to `rel_tol * max|M|`.
pub fn check_symmetric(m: &Matrix, rel_tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let violation = max_abs(&(m - m.transpose()));
    let tolerance = rel_tol * max_abs(m);
    if violation > tolerance {
        return Err(Error::NotSymmetric {
            violation,
            tolerance,
        });
    }
    Ok(())
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Eigenvalues of the pencil `(A, M)` with `A` symmetric and `M` SPD,
/// ascending.
pub fn generalized_sym_eigenvalues(a: &Matrix, m: &Matrix) -> Result<Vec<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("metric of generalized eigenproblem".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("Cholesky factor inverse"))?;
    let c = &linv * a * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    Ok(sym_eigenvalues(&c))
}

/// Spectral norm of a general matrix via its largest singular value.
pub fn dense_norm2(m: &Matrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b))
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vector,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

/// Conjugate gradient for an SPD operator. Stops once
/// `||rhs - A x|| <= tol * ||rhs||` or after `max_iter` iterations.
pub fn conjugate_gradient<A>(
    apply: A,
    rhs: &Vector,
    x0: Vector,
    tol: f64,
    max_iter: usize,
) -> CgOutcome
where
    A: Fn(&Vector) -> Vector,
{
    let target = tol * rhs.norm();
    let mut x = x0;
    let mut r = rhs - apply(&x);
    let mut rr = r.norm_squared();
    if rr.sqrt() <= target {
        return CgOutcome {
            x,
            iterations: 0,
            residual_norm: rr.sqrt(),
            converged: true,
        };
    }
    let mut p = r.clone();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            break;
        }
        let a = rr / pap;
        x.axpy(a, &p, 1.0);
        r.axpy(-a, &ap, 1.0);
        let rr_new = r.norm_squared();
        if rr_new.sqrt() <= target {
            return CgOutcome {
                x,
                iterations: it,
                residual_norm: rr_new.sqrt(),
                converged: true,
            };
        }
        p = &r + (rr_new / rr) * &p;
        rr = rr_new;
    }
    let residual_norm = (rhs - apply(&x)).norm();
    CgOutcome {
        x,
        iterations: max_iter,
        residual_norm,
        converged: residual_norm <= target,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_lower(n: usize) -> Matrix {
        Matrix::from_fn(n, n, |i, j| {
            if i > j {
                ((i * 7 + j * 3) % 5) as f64 - 2.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn substitution_matches_dense_solve() {
        for n in [5usize, 80] {
            let b = sample_lower(n);
            let lower = StrictLower::from_dense_lower(&b);
            let rhs = Vector::from_fn(n, |i, _| (i as f64).sin());
            let x = lower.solve_lower(1.5, -0.3, &rhs);
            let dense = Matrix::identity(n, n) * 1.5 - &b * 0.3;
            let r = &dense * &x - &rhs;
            assert!(r.norm() <= 1e-13 * dense.norm() * x.norm());
            let y = lower.solve_upper(2.0, 0.7, &rhs);
            let dense_t = Matrix::identity(n, n) * 2.0 + b.transpose() * 0.7;
            assert!((&dense_t * &y - &rhs).norm() <= 1e-13 * dense_t.norm() * y.norm());
        }
    }

    #[test]
    fn dense_and_sparse_paths_agree() {
        let b = sample_lower(20);
        let a = StrictLower::from_dense_lower(&b);
        let s = a.clone().without_dense_fallback();
        let rhs = Vector::from_fn(20, |i, _| 1.0 + i as f64);
        let (x1, x2) = (a.solve_lower(1.1, 0.4, &rhs), s.solve_lower(1.1, 0.4, &rhs));
        assert!((&x1 - &x2).amax() <= 1e-13 * x1.amax());
        let (y1, y2) = (a.solve_upper(1.1, 0.4, &rhs), s.solve_upper(1.1, 0.4, &rhs));
        assert!((&y1 - &y2).amax() <= 1e-13 * y1.amax());
        assert_eq!(a.mul(&rhs), &b * &rhs);
        assert_eq!(a.mul_t(&rhs), b.transpose() * &rhs);
    }

    #[test]
    fn cg_solves_spd() {
        let m = Matrix::from_fn(6, 6, |i, j| {
            if i == j {
                4.0
            } else {
                1.0 / (1.0 + (i + j) as f64)
            }
        });
        let rhs = Vector::from_element(6, 1.0);
        let out = conjugate_gradient(|v| &m * v, &rhs, Vector::zeros(6), 1e-12, 100);
        assert!(out.converged);
        assert!((&m * &out.x - &rhs).norm() < 1e-11);
    }

    #[test]
    fn generalized_eigenvalues_of_diagonal_pencil() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1.0]));
        let m = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 4.0]));
        let ev = generalized_sym_eigenvalues(&a, &m).unwrap();
        assert!((ev[0] - 0.25).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }
}
