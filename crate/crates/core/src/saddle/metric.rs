//! SPD inner-product operators and proximal oracles.

use std::sync::Arc;

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{check_symmetric, Matrix, Vector};
use crate::problem::Quadratic;

/// An SPD operator `M` with `apply` and inverse-apply.
#[derive(Clone, Debug)]
pub enum InnerProduct {
    Identity(usize),
    Scaled(usize, f64),
    Diagonal(Vector),
    Dense { m: Matrix, chol: Cholesky<f64, Dyn> },
}

impl InnerProduct {
    pub fn identity(n: usize) -> Self {
        InnerProduct::Identity(n)
    }

    pub fn scaled(n: usize, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::NotPositiveDefinite(format!(
                "scaled identity with factor {c}"
            )));
        }
        Ok(InnerProduct::Scaled(n, c))
    }

    pub fn diagonal(d: Vector) -> Result<Self> {
        if let Some((i, v)) = d
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
        {
            return Err(Error::NotPositiveDefinite(format!(
                "diagonal entry {v} at index {i}"
            )));
        }
        Ok(InnerProduct::Diagonal(d))
    }

    pub fn dense(m: Matrix) -> Result<Self> {
        check_symmetric(&m, 1e-12)?;
        let chol = Cholesky::new(m.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("dense inner product".into()))?;
        Ok(InnerProduct::Dense { m, chol })
    }

    pub fn dim(&self) -> usize {
        match self {
            InnerProduct::Identity(n) | InnerProduct::Scaled(n, _) => *n,
            InnerProduct::Diagonal(d) => d.len(),
            InnerProduct::Dense { m, .. } => m.nrows(),
        }
    }

    /// `M x`
    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            InnerProduct::Identity(_) => x.clone(),
            InnerProduct::Scaled(_, c) => x * *c,
            InnerProduct::Diagonal(d) => d.component_mul(x),
            InnerProduct::Dense { m, .. } => m * x,
        }
    }

    /// `M^{-1} x`
    pub fn solve(&self, x: &Vector) -> Vector {
        match self {
            InnerProduct::Identity(_) => x.clone(),
            InnerProduct::Scaled(_, c) => x / *c,
            InnerProduct::Diagonal(d) => x.component_div(d),
            InnerProduct::Dense { chol, .. } => chol.solve(x),
        }
    }

    /// `x'Mx`
    pub fn norm_sq(&self, x: &Vector) -> f64 {
        x.dot(&self.apply(x))
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            InnerProduct::Identity(n) => Matrix::identity(*n, *n),
            InnerProduct::Scaled(n, c) => Matrix::identity(*n, *n) * *c,
            InnerProduct::Diagonal(d) => Matrix::from_diagonal(d),
            InnerProduct::Dense { m, .. } => m.clone(),
        }
    }

    /// `M^{-1} A` column by column.
    pub fn solve_matrix(&self, a: &Matrix) -> Matrix {
        let mut out = a.clone();
        for j in 0..a.ncols() {
            let col = self.solve(&a.column(j).into_owned());
            out.set_column(j, &col);
        }
        out
    }

    /// `c M`
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "c",
                reason: format!("scaling factor must be positive, got {c}"),
            });
        }
        Ok(match self {
            InnerProduct::Identity(n) => InnerProduct::Scaled(*n, c),
            InnerProduct::Scaled(n, s) => InnerProduct::Scaled(*n, s * c),
            InnerProduct::Diagonal(d) => InnerProduct::Diagonal(d * c),
            InnerProduct::Dense { m, .. } => InnerProduct::dense(m * c)?,
        })
    }

    /// The factor `c` when `M = c I`.
    pub fn scaled_identity_factor(&self) -> Option<f64> {
        match self {
            InnerProduct::Identity(_) => Some(1.0),
            InnerProduct::Scaled(_, c) => Some(*c),
            _ => None,
        }
    }
}

/// `prox_{gamma h}(w) = argmin_u h(u) + 1/(2 gamma) |u - w|_M^2` in the metric
/// of the space the oracle lives on.
pub trait Prox: Send + Sync {
    fn dim(&self) -> usize;
    fn prox(&self, w: &Vector, gamma: f64) -> Result<Vector>;
}

/// Prox of `1/2 u'Hu - c'u`: solves `(H + M/gamma) u = c + M w / gamma`.
pub struct QuadraticProx {
    q: Quadratic,
    metric: InnerProduct,
}

impl QuadraticProx {
    pub fn new(q: Quadratic, metric: InnerProduct) -> Result<Self> {
        check_dim(q.c.len(), metric.dim())?;
        Ok(Self { q, metric })
    }
}

impl Prox for QuadraticProx {
    fn dim(&self) -> usize {
        self.q.c.len()
    }

    fn prox(&self, w: &Vector, gamma: f64) -> Result<Vector> {
        check_dim(self.dim(), w.len())?;
        check_gamma(gamma)?;
        let m = self.metric.to_dense();
        let lhs = &self.q.h + &m / gamma;
        let rhs = &self.q.c + &m * w / gamma;
        lhs.cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::NotPositiveDefinite("H + M / gamma in quadratic prox".into()))
    }
}

/// Prox of `lambda |u|_2` in a scaled identity metric `s I`: block soft
/// thresholding at `lambda gamma / s`.
pub struct L2NormProx {
    dim: usize,
    lambda: f64,
    metric_scale: f64,
}

impl L2NormProx {
    pub fn new(dim: usize, lambda: f64, metric: &InnerProduct) -> Result<Self> {
        check_dim(dim, metric.dim())?;
        let metric_scale = metric.scaled_identity_factor().ok_or_else(|| {
            Error::Unsupported("built-in l2-norm prox needs a scaled identity metric".into())
        })?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be non-negative, got {lambda}"),
            });
        }
        Ok(Self {
            dim,
            lambda,
            metric_scale,
        })
    }
}

impl Prox for L2NormProx {
    fn dim(&self) -> usize {
        self.dim
    }

    fn prox(&self, w: &Vector, gamma: f64) -> Result<Vector> {
        check_dim(self.dim, w.len())?;
        check_gamma(gamma)?;
        let t = self.lambda * gamma / self.metric_scale;
        let nw = w.norm();
        if nw <= t {
            Ok(Vector::zeros(self.dim))
        } else {
            Ok(w * (1.0 - t / nw))
        }
    }
}

/// Prox in the metric `c M` expressed through a prox in `M`.
pub struct RescaledProx {
    inner: Arc<dyn Prox>,
    c: f64,
}

impl RescaledProx {
    pub fn new(inner: Arc<dyn Prox>, c: f64) -> Self {
        Self { inner, c }
    }
}

impl Prox for RescaledProx {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn prox(&self, w: &Vector, gamma: f64) -> Result<Vector> {
        self.inner.prox(w, gamma / self.c)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must be positive and finite, got {gamma}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(a: &[f64]) -> Vector {
        Vector::from_row_slice(a)
    }

    #[test]
    fn apply_and_solve_roundtrip() {
        let x = v(&[1.0, -2.0, 0.5]);
        let m = Matrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        for ip in [
            InnerProduct::identity(3),
            InnerProduct::scaled(3, 2.5).unwrap(),
            InnerProduct::diagonal(v(&[1.0, 2.0, 3.0])).unwrap(),
            InnerProduct::dense(m).unwrap(),
        ] {
            assert!((ip.solve(&ip.apply(&x)) - &x).amax() < 1e-14);
            assert!((ip.to_dense() * &x - ip.apply(&x)).amax() < 1e-14);
        }
        assert!(InnerProduct::diagonal(v(&[1.0, 0.0])).is_err());
        assert!(InnerProduct::dense(Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn quadratic_prox_closed_form() {
        let q = Quadratic::isotropic(1.0, Vector::zeros(2));
        let p = QuadraticProx::new(q, InnerProduct::identity(2)).unwrap();
        let w = v(&[3.0, -1.5]);
        let out = p.prox(&w, 0.5).unwrap();
        assert!((out - &w / 1.5).amax() < 1e-15);
    }

    #[test]
    fn l2_prox_thresholds() {
        let p = L2NormProx::new(2, 1.0, &InnerProduct::identity(2)).unwrap();
        assert_eq!(p.prox(&v(&[0.3, 0.4]), 1.0).unwrap(), v(&[0.0, 0.0]));
        let out = p.prox(&v(&[3.0, 4.0]), 1.0).unwrap();
        assert!((out - v(&[2.4, 3.2])).amax() < 1e-15);
        let diag = InnerProduct::diagonal(v(&[1.0, 2.0])).unwrap();
        assert!(L2NormProx::new(2, 1.0, &diag).is_err());
    }

    #[test]
    fn rescaled_prox_matches_scaled_metric() {
        let q = Quadratic::new(Matrix::from_diagonal(&v(&[2.0, 5.0])), v(&[1.0, 1.0])).unwrap();
        let base: Arc<dyn Prox> =
            Arc::new(QuadraticProx::new(q.clone(), InnerProduct::identity(2)).unwrap());
        let direct = QuadraticProx::new(q, InnerProduct::scaled(2, 3.0).unwrap()).unwrap();
        let w = v(&[0.2, -0.7]);
        let a = RescaledProx::new(base, 3.0).prox(&w, 0.4).unwrap();
        assert!((a - direct.prox(&w, 0.4).unwrap()).amax() < 1e-14);
    }
}
