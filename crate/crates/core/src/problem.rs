//! Strongly monotone problems `A(x) = grad F(x) + N x`.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{max_abs, Matrix, Vector};

/// Relative tolerance used when validating skew symmetry.
pub const SKEW_TOL: f64 = 1e-12;

/// Smooth convex function given by oracles.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn gradient(&self, x: &Vector) -> Vector;

    /// `F(x)`, when available.
    fn value(&self, _x: &Vector) -> Option<f64> {
        None
    }

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        None
    }

    /// The `(H, c)` pair when the function is exactly `1/2 x'Hx - c'x`.
    fn as_quadratic(&self) -> Option<&Quadratic> {
        None
    }

    /// `D_F(x, y) = F(x) - F(y) - <grad F(y), x - y>`. Implementations may
    /// override this with a cancellation-free formula.
    fn bregman(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(self.value(x)? - self.value(y)? - self.gradient(y).dot(&(x - y)))
    }
}

/// `F(x) = 1/2 x'Hx - c'x`.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub h: Matrix,
    pub c: Vector,
}

impl Quadratic {
    pub fn new(h: Matrix, c: Vector) -> Result<Self> {
        crate::linalg::check_symmetric(&h, 1e-12)?;
        check_dim(h.nrows(), c.len())?;
        Ok(Self { h, c })
    }

    /// `mu/2 |x|^2 - b'x`
    pub fn isotropic(mu: f64, b: Vector) -> Self {
        let n = b.len();
        Self {
            h: Matrix::identity(n, n) * mu,
            c: b,
        }
    }

    /// A linear function `c'x` (note the sign convention: `c` enters as `-c`).
    pub fn linear(c: Vector) -> Self {
        let n = c.len();
        Self {
            h: Matrix::zeros(n, n),
            c: -c,
        }
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.h * x - &self.c
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        Some(0.5 * x.dot(&(&self.h * x)) - self.c.dot(x))
    }

    fn hessian(&self, _x: &Vector) -> Option<Matrix> {
        Some(self.h.clone())
    }

    fn as_quadratic(&self) -> Option<&Quadratic> {
        Some(self)
    }

    fn bregman(&self, x: &Vector, y: &Vector) -> Option<f64> {
        let d = x - y;
        Some(0.5 * d.dot(&(&self.h * &d)))
    }
}

/// `F(x) = 1/2 x'Hx - c'x + eps * sum log cosh(x_i)`.
///
/// The log-cosh term has curvature in `[0, eps]`, so `F` is
/// `lambda_min(H)`-strongly convex with `lambda_max(H) + eps` Lipschitz gradient.
#[derive(Clone, Debug)]
pub struct LogCoshQuadratic {
    pub quad: Quadratic,
    pub eps: f64,
}

fn logcosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Bregman divergence of `log cosh` between scalars, Taylor-expanded when the
/// arguments are close.
fn logcosh_bregman(x: f64, y: f64) -> f64 {
    let d = x - y;
    if d.abs() < 1e-3 {
        let t = y.tanh();
        let s2 = 1.0 - t * t;
        let f3 = -2.0 * s2 * t;
        let f4 = -2.0 * s2 * (1.0 - 3.0 * t * t);
        d * d * (0.5 * s2 + d * (f3 / 6.0 + d * f4 / 24.0))
    } else {
        logcosh(x) - logcosh(y) - y.tanh() * d
    }
}

impl Objective for LogCoshQuadratic {
    fn dim(&self) -> usize {
        self.quad.dim()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        self.quad.gradient(x) + x.map(|t| self.eps * t.tanh())
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        let q = self.quad.value(x)?;
        Some(q + self.eps * x.iter().map(|&t| logcosh(t)).sum::<f64>())
    }

    fn hessian(&self, x: &Vector) -> Option<Matrix> {
        let d = x.map(|t| {
            let c = t.cosh();
            if c.is_finite() {
                self.eps / (c * c)
            } else {
                0.0
            }
        });
        Some(&self.quad.h + Matrix::from_diagonal(&d))
    }

    fn bregman(&self, x: &Vector, y: &Vector) -> Option<f64> {
        let q = self.quad.bregman(x, y)?;
        Some(
            q + self.eps
                * x.iter()
                    .zip(y.iter())
                    .map(|(&a, &b)| logcosh_bregman(a, b))
                    .sum::<f64>(),
        )
    }
}

type GradFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type ValueFn = dyn Fn(&Vector) -> f64 + Send + Sync;

/// Objective assembled from user closures.
pub struct FnObjective {
    dim: usize,
    grad: Box<GradFn>,
    value: Option<Box<ValueFn>>,
}

impl FnObjective {
    pub fn new(dim: usize, grad: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        Self {
            dim,
            grad: Box::new(grad),
            value: None,
        }
    }

    pub fn with_value(mut self, value: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        self.value = Some(Box::new(value));
        self
    }
}

impl fmt::Debug for FnObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnObjective")
            .field("dim", &self.dim)
            .field("has_value", &self.value.is_some())
            .finish()
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn gradient(&self, x: &Vector) -> Vector {
        (self.grad)(x)
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        self.value.as_ref().map(|v| v(x))
    }
}

/// Checks `N + N^T = 0` to `SKEW_TOL * max|N|` and a zero diagonal.
pub fn check_skew(n: &Matrix) -> Result<()> {
    if n.nrows() != n.ncols() {
        return Err(Error::NotSquare {
            rows: n.nrows(),
            cols: n.ncols(),
        });
    }
    for i in 0..n.nrows() {
        if n[(i, i)] != 0.0 {
            return Err(Error::NonzeroDiagonal {
                index: i,
                value: n[(i, i)],
            });
        }
    }
    let violation = max_abs(&(n + n.transpose()));
    let tolerance = SKEW_TOL * max_abs(n);
    if violation > tolerance {
        return Err(Error::NotSkewSymmetric {
            violation,
            tolerance,
        });
    }
    Ok(())
}

/// `A(x) = grad F(x) + N x` with `F` `mu`-strongly convex and `L_F`-smooth.
#[derive(Clone)]
pub struct MonotoneProblem {
    objective: Arc<dyn Objective>,
    n: Matrix,
    mu: f64,
    l_f: f64,
    x_star: Option<Vector>,
}

impl fmt::Debug for MonotoneProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneProblem")
            .field("dim", &self.dim())
            .field("mu", &self.mu)
            .field("l_f", &self.l_f)
            .field("has_x_star", &self.x_star.is_some())
            .finish()
    }
}

impl MonotoneProblem {
    pub fn new(objective: Arc<dyn Objective>, n: Matrix, mu: f64, l_f: f64) -> Result<Self> {
        check_skew(&n)?;
        check_dim(n.nrows(), objective.dim())?;
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("must be positive and finite, got {mu}"),
            });
        }
        if !(l_f >= mu && l_f.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "l_f",
                reason: format!("must satisfy mu <= L_F, got mu = {mu}, L_F = {l_f}"),
            });
        }
        Ok(Self {
            objective,
            n,
            mu,
            l_f,
            x_star: None,
        })
    }

    /// `(mu I + N) x = b`, i.e. `F(x) = mu/2 |x|^2 - b'x`.
    pub fn shifted_skew(mu: f64, n: Matrix, b: Vector) -> Result<Self> {
        Self::new(Arc::new(Quadratic::isotropic(mu, b)), n, mu, mu)
    }

    pub fn with_x_star(mut self, x_star: Vector) -> Result<Self> {
        check_dim(self.dim(), x_star.len())?;
        self.x_star = Some(x_star);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n.nrows()
    }

    pub fn objective(&self) -> &Arc<dyn Objective> {
        &self.objective
    }

    pub fn skew(&self) -> &Matrix {
        &self.n
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn l_f(&self) -> f64 {
        self.l_f
    }

    pub fn x_star(&self) -> Option<&Vector> {
        self.x_star.as_ref()
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.objective.gradient(x)
    }

    pub fn value(&self, x: &Vector) -> Option<f64> {
        self.objective.value(x)
    }

    /// `A(x)`
    pub fn operator(&self, x: &Vector) -> Vector {
        self.objective.gradient(x) + &self.n * x
    }

    /// `(H + N, c)` when `A(x) = (H + N) x - c` is affine.
    pub fn linear_system(&self) -> Option<(Matrix, Vector)> {
        let q = self.objective.as_quadratic()?;
        Some((&q.h + &self.n, q.c.clone()))
    }

    /// Randomized sanity check of the monotonicity and Lipschitz constants.
    pub fn check_oracles(&self, samples: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = self.dim();
        let scale = self.x_star.as_ref().map_or(1.0, |x| 1.0 + x.amax());
        for _ in 0..samples {
            let x = Vector::from_fn(dim, |_, _| {
                scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            let y = Vector::from_fn(dim, |_, _| {
                scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            let d = &x - &y;
            let dg = self.gradient(&x) - self.gradient(&y);
            let dd = d.norm_squared();
            let tol = 1e-8 * (self.l_f * dd).max(f64::MIN_POSITIVE);
            let inner = dg.dot(&d);
            if inner < self.mu * dd - tol {
                return Err(Error::OracleCheck(format!(
                    "<grad F(x) - grad F(y), x - y> = {inner:e} < mu |x - y|^2 = {:e}",
                    self.mu * dd
                )));
            }
            if dg.norm() > self.l_f * dd.sqrt() + 1e-8 * self.l_f * dd.sqrt() {
                return Err(Error::OracleCheck(format!(
                    "|grad F(x) - grad F(y)| = {:e} > L_F |x - y| = {:e}",
                    dg.norm(),
                    self.l_f * dd.sqrt()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_skew() {
        let n = Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            check_skew(&n),
            Err(Error::NotSkewSymmetric { .. })
        ));
        let n = Matrix::from_row_slice(2, 2, &[1e-30, 1.0, -1.0, 0.0]);
        assert!(matches!(check_skew(&n), Err(Error::NonzeroDiagonal { .. })));
        let n = Matrix::from_row_slice(2, 3, &[0.0; 6]);
        assert!(matches!(check_skew(&n), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn rejects_bad_constants() {
        let n = Matrix::zeros(2, 2);
        let q = Arc::new(Quadratic::isotropic(1.0, Vector::zeros(2)));
        assert!(MonotoneProblem::new(q.clone(), n.clone(), 0.0, 1.0).is_err());
        assert!(MonotoneProblem::new(q, n, 2.0, 1.0).is_err());
    }

    #[test]
    fn oracle_check_catches_wrong_constants() {
        let h = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 4.0]));
        let q = Arc::new(Quadratic::new(h, Vector::zeros(2)).unwrap());
        let n = Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let good = MonotoneProblem::new(q.clone(), n.clone(), 1.0, 4.0).unwrap();
        good.check_oracles(200, 3).unwrap();
        let bad = MonotoneProblem::new(q.clone(), n.clone(), 1.0, 2.0).unwrap();
        assert!(bad.check_oracles(200, 3).is_err());
        let bad = MonotoneProblem::new(q, n, 1.5, 4.0).unwrap();
        assert!(bad.check_oracles(200, 3).is_err());
    }

    #[test]
    fn logcosh_is_stable_for_large_arguments() {
        assert!((logcosh(1000.0) - (1000.0 - std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(logcosh(0.0), 0.0);
        assert!((logcosh(0.5) - 0.5f64.cosh().ln()).abs() < 1e-15);
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn logcosh_bregman_matches_high_precision_values() {
        // reference values from 50-digit arithmetic
        let cases = [
            (0.3, 0.3009, 3.7050079452652936855e-7),
            (-1.2, -1.2005, 3.8106314586071225626e-8),
            (2.0, 1.9991, 2.8646705935815343054e-8),
            (0.7, -0.4, 0.56726060245142055158),
        ];
        for (x, y, want) in cases {
            let got = logcosh_bregman(x, y);
            assert!(
                (got - want).abs() <= 1e-9 * want,
                "{x} {y}: {got} vs {want}"
            );
        }
    }
}
