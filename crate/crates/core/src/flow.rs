//! Discretizations of the gradient flow `x' = -A(x)`: explicit and implicit
//! Euler, linear AOR, nonlinear GSS, and the HSS baseline.

use std::sync::Arc;

use nalgebra::linalg::{Cholesky, LU};
use nalgebra::Dyn;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{sym_eigenvalues, Matrix, Vector};
use crate::lyapunov::{bregman, lyapunov_eq, shifted_form};
use crate::problem::MonotoneProblem;
use crate::spectral::condition_numbers;
use crate::split::{split_skew, SkewSplit};
use crate::trace::{ConvergenceTrace, DivergenceGuard, OpCensus, TraceEntry};

/// Strict-inequality margin applied to `alpha < 1 / L_Bsym`.
pub const AOR_BOUNDARY_MARGIN: f64 = 1e-6;

/// Forward uses `N = Bsym - 2B` (lower solve), backward `N = 2B^T - Bsym`
/// (upper solve).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Variant {
    #[default]
    Forward,
    Backward,
}

impl Variant {
    /// Coefficient of `Bsym` in the variant's Lyapunov metric `I - s alpha Bsym`.
    pub fn sign(self) -> f64 {
        match self {
            Variant::Forward => 1.0,
            Variant::Backward => -1.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepConfig {
    /// `None` selects the default step size of the scheme.
    pub alpha: Option<f64>,
    pub variant: Variant,
    pub max_iter: usize,
    /// Stop once `|A(x_k)| <= stop_tol`.
    pub stop_tol: f64,
    /// Run even when `alpha` violates the rate guarantee.
    pub allow_unguaranteed: bool,
    /// Accept explicit Euler steps up to `2 mu / L_A^2` without a rate claim.
    pub relaxed_explicit_bound: bool,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            variant: Variant::Forward,
            max_iter: 10_000,
            stop_tol: 1e-10,
            allow_unguaranteed: false,
            relaxed_explicit_bound: false,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "alpha",
                    reason: format!("must be positive and finite, got {a}"),
                });
            }
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iter",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "stop_tol",
                reason: format!("must be positive, got {}", self.stop_tol),
            });
        }
        Ok(())
    }
}

/// `x - alpha A(x)`
pub fn explicit_euler_step(problem: &MonotoneProblem, x: &Vector, alpha: f64) -> Result<Vector> {
    check_dim(problem.dim(), x.len())?;
    let out = x - alpha * problem.operator(x);
    check_finite(&out, "explicit Euler step")?;
    Ok(out)
}

/// `x_k -> (I + alpha A)^{-1} x_k`
pub trait Resolvent: Send + Sync {
    fn resolve(&self, x_k: &Vector, alpha: f64) -> Result<Vector>;
}

/// Resolvent of an affine `A(x) = (H + N) x - c` via a dense LU of
/// `I + alpha (H + N)`.
pub struct LinearResolvent {
    alpha: f64,
    lu: LU<f64, Dyn, Dyn>,
    c: Vector,
}

impl LinearResolvent {
    pub fn new(problem: &MonotoneProblem, alpha: f64) -> Result<Self> {
        let (a, c) = problem.linear_system().ok_or_else(|| {
            Error::Unsupported("built-in resolvent needs an affine operator".into())
        })?;
        let n = a.nrows();
        let lu = (Matrix::identity(n, n) + a * alpha).lu();
        Ok(Self { alpha, lu, c })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl Resolvent for LinearResolvent {
    fn resolve(&self, x_k: &Vector, alpha: f64) -> Result<Vector> {
        if alpha != self.alpha {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!(
                    "resolvent was factored for {} but called with {alpha}",
                    self.alpha
                ),
            });
        }
        self.lu
            .solve(&(x_k + alpha * &self.c))
            .ok_or(Error::Singular("I + alpha A"))
    }
}

/// Solves `(I + alpha A)(x_{k+1}) = x_k`. Without a user resolvent the problem
/// must be affine.
pub fn implicit_euler_step(
    problem: &MonotoneProblem,
    x_k: &Vector,
    alpha: f64,
    resolvent: Option<&dyn Resolvent>,
) -> Result<Vector> {
    check_dim(problem.dim(), x_k.len())?;
    let out = match resolvent {
        Some(r) => r.resolve(x_k, alpha)?,
        None => LinearResolvent::new(problem, alpha)?.resolve(x_k, alpha)?,
    };
    check_finite(&out, "implicit Euler step")?;
    Ok(out)
}

/// One AOR step for `(mu I + N) x = b`.
///
/// Forward: `[(1 + alpha mu) I - 2 alpha B] x = x_k - alpha (Bsym x_k - b)`.
/// Backward: `[(1 + alpha mu) I + 2 alpha B^T] x = x_k + alpha (Bsym x_k + b)`.
pub fn aor_linear_step(
    split: &SkewSplit,
    mu: f64,
    b: &Vector,
    x_k: &Vector,
    alpha: f64,
    variant: Variant,
) -> Result<Vector> {
    check_dim(split.dim(), x_k.len())?;
    check_dim(split.dim(), b.len())?;
    let bx = split.bsym_mul(x_k);
    let d = 1.0 + alpha * mu;
    let out = match variant {
        Variant::Forward => split
            .lower()
            .solve_lower(d, -2.0 * alpha, &(x_k - alpha * (bx - b))),
        Variant::Backward => split
            .lower()
            .solve_upper(d, 2.0 * alpha, &(x_k + alpha * (bx + b))),
    };
    check_finite(&out, "AOR step")?;
    Ok(out)
}

/// One GSS step.
///
/// Forward: `(I - 2 alpha B) x = x_k - alpha (grad F(x_k) + Bsym x_k)`.
/// Backward: `(I + 2 alpha B^T) x = x_k - alpha (grad F(x_k) - Bsym x_k)`.
pub fn gss_step(
    problem: &MonotoneProblem,
    split: &SkewSplit,
    x_k: &Vector,
    alpha: f64,
    variant: Variant,
) -> Result<Vector> {
    check_dim(problem.dim(), x_k.len())?;
    check_dim(split.dim(), x_k.len())?;
    let g = problem.gradient(x_k);
    let bx = split.bsym_mul(x_k);
    let out = match variant {
        Variant::Forward => split
            .lower()
            .solve_lower(1.0, -2.0 * alpha, &(x_k - alpha * (g + bx))),
        Variant::Backward => split
            .lower()
            .solve_upper(1.0, 2.0 * alpha, &(x_k - alpha * (g - bx))),
    };
    check_finite(&out, "GSS step")?;
    Ok(out)
}

/// Hermitian/skew-Hermitian splitting iteration for `A x = b` with factored
/// shifted parts:
///
/// `(alpha I + H) x_half = (alpha I - S) x_k + b`,
/// `(alpha I + S) x_next = (alpha I - H) x_half + b`.
pub struct Hss {
    alpha: f64,
    h: Matrix,
    s: Matrix,
    b: Vector,
    chol: Cholesky<f64, Dyn>,
    lu: LU<f64, Dyn, Dyn>,
}

impl Hss {
    pub fn new(a: &Matrix, b: Vector, alpha: f64) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        check_dim(a.nrows(), b.len())?;
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be positive, got {alpha}"),
            });
        }
        let n = a.nrows();
        let h = (a + a.transpose()) * 0.5;
        let s = (a - a.transpose()) * 0.5;
        let eye = Matrix::identity(n, n);
        let chol = Cholesky::new(&eye * alpha + &h)
            .ok_or_else(|| Error::NotPositiveDefinite("alpha I + H in HSS".into()))?;
        let lu = (&eye * alpha + &s).lu();
        Ok(Self {
            alpha,
            h,
            s,
            b,
            chol,
            lu,
        })
    }

    /// `sqrt(lambda_min lambda_max)` of the symmetric part.
    pub fn optimal_alpha(a: &Matrix) -> Result<f64> {
        let (lo, hi) = sym_extremes(a)?;
        Ok((lo * hi).sqrt())
    }

    /// `(sqrt(kappa) - 1) / (sqrt(kappa) + 1)` for `kappa` of the symmetric part.
    pub fn optimal_contraction(a: &Matrix) -> Result<f64> {
        let (lo, hi) = sym_extremes(a)?;
        let r = (hi / lo).sqrt();
        Ok((r - 1.0) / (r + 1.0))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `max |(alpha - lambda) / (alpha + lambda)|` over the symmetric spectrum.
    pub fn contraction_factor(&self) -> f64 {
        sym_eigenvalues(&self.h)
            .into_iter()
            .map(|l| ((self.alpha - l) / (self.alpha + l)).abs())
            .fold(0.0, f64::max)
    }

    /// `|(alpha I + S) e|`, the norm in which each step contracts by
    /// [`Hss::contraction_factor`].
    pub fn weighted_norm(&self, e: &Vector) -> f64 {
        (e * self.alpha + &self.s * e).norm()
    }

    pub fn step(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.b.len(), x.len())?;
        let half = self.chol.solve(&(x * self.alpha - &self.s * x + &self.b));
        let out = self
            .lu
            .solve(&(&half * self.alpha - &self.h * &half + &self.b))
            .ok_or(Error::Singular("alpha I + S"))?;
        check_finite(&out, "HSS step")?;
        Ok(out)
    }
}

fn sym_extremes(a: &Matrix) -> Result<(f64, f64)> {
    let h = (a + a.transpose()) * 0.5;
    let ev = sym_eigenvalues(&h);
    let (lo, hi) = (ev[0], ev[ev.len() - 1]);
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "symmetric part has lambda_min = {lo:e}"
        )));
    }
    Ok((lo, hi))
}

/// One HSS step, factoring the shifted parts on the fly.
pub fn hss_step(a: &Matrix, b: &Vector, x_k: &Vector, alpha: f64) -> Result<Vector> {
    Hss::new(a, b.clone(), alpha)?.step(x_k)
}

/// Scheme selector for [`solve_flow`].
#[derive(Clone)]
pub enum FlowMethod {
    ExplicitEuler,
    ImplicitEuler(Option<Arc<dyn Resolvent>>),
    /// Requires `F = mu/2 |x|^2 - b'x`.
    Aor,
    Gss,
    /// Requires an affine operator.
    Hss,
}

impl FlowMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FlowMethod::ExplicitEuler => "explicit_euler",
            FlowMethod::ImplicitEuler(_) => "implicit_euler",
            FlowMethod::Aor => "aor",
            FlowMethod::Gss => "gss",
            FlowMethod::Hss => "hss",
        }
    }
}

/// Step size chosen for a scheme together with its rate guarantee.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepChoice {
    pub alpha: f64,
    pub guaranteed: bool,
    /// Contraction factor of the designated Lyapunov value when guaranteed.
    pub rate: Option<f64>,
}

/// Default AOR step `1 / (2 L_Bsym)`; `1 / mu` when `N = 0`.
pub fn aor_default_alpha(mu: f64, l_bsym: f64) -> f64 {
    if l_bsym > 0.0 {
        0.5 / l_bsym
    } else {
        1.0 / mu
    }
}

/// Whether `alpha` satisfies the AOR guarantee `alpha < 1 / L_Bsym` with margin.
pub fn aor_guaranteed(alpha: f64, l_bsym: f64) -> bool {
    alpha > 0.0 && (l_bsym == 0.0 || alpha * l_bsym <= 1.0 - AOR_BOUNDARY_MARGIN)
}

/// Default GSS step `min{1/(4 L_Bsym), 1/(4 L_F)}`.
pub fn gss_default_alpha(l_f: f64, l_bsym: f64) -> f64 {
    0.25 / l_f.max(l_bsym)
}

/// Whether `alpha < 1 / max{2 L_Bsym, 2 L_F}`.
pub fn gss_guaranteed(alpha: f64, l_f: f64, l_bsym: f64) -> bool {
    alpha > 0.0 && alpha * 2.0 * l_f.max(l_bsym) < 1.0
}

fn linear_rhs_for_aor(problem: &MonotoneProblem) -> Result<Vector> {
    let q = problem
        .objective()
        .as_quadratic()
        .ok_or_else(|| Error::Unsupported("AOR needs F = mu/2 |x|^2 - b'x".into()))?;
    let n = problem.dim();
    let dev = crate::linalg::max_abs(&(&q.h - Matrix::identity(n, n) * problem.mu()));
    if dev > 1e-12 * problem.mu() {
        return Err(Error::Unsupported(format!(
            "AOR needs grad F(x) = mu x - b; Hessian deviates from mu I by {dev:e}"
        )));
    }
    Ok(q.c.clone())
}

/// Lyapunov value with small negative round-off clamped to zero.
pub(crate) fn clamp_roundoff(value: f64, scale: f64) -> f64 {
    if value < 0.0 && value >= -1e-12 * scale.abs().max(f64::MIN_POSITIVE) {
        0.0
    } else {
        value
    }
}

fn reject_or_warn(trace: &mut ConvergenceTrace, allow: bool, msg: String) -> Result<()> {
    if allow {
        trace.warnings.push(msg);
        Ok(())
    } else {
        Err(Error::StepSize(msg))
    }
}

/// Iterates a flow scheme from `x0` until `|A(x_k)| <= stop_tol` or
/// `max_iter` steps.
///
/// With a known `x*` the trace records the scheme's Lyapunov value: `E_q`
/// for the Euler schemes, `E^{alpha B}` for AOR, `E^{alpha BD}` for GSS and
/// `1/2 |(alpha I + S)(x - x*)|^2` for HSS. Without `x*` it records the
/// residual. Ten consecutive increases under a satisfied step-size guarantee
/// abort with [`Error::Divergence`].
pub fn solve_flow(
    problem: &MonotoneProblem,
    method: &FlowMethod,
    config: &StepConfig,
    x0: &Vector,
) -> Result<(Vector, ConvergenceTrace)> {
    config.validate()?;
    check_dim(problem.dim(), x0.len())?;
    let split = split_skew(problem.skew())?;
    let mu = problem.mu();
    let l_f = problem.l_f();
    let l_bsym = split.l_bsym();
    let mut trace = ConvergenceTrace::new(true);

    let (choice, aor_b, hss, resolvent): (
        StepChoice,
        Option<Vector>,
        Option<Hss>,
        Option<Arc<dyn Resolvent>>,
    ) = match method {
        FlowMethod::ExplicitEuler => {
            let est = condition_numbers(problem, &split)?;
            let bound = mu / (est.l_a * est.l_a);
            let alpha = config.alpha.unwrap_or(bound);
            let guaranteed = alpha <= bound;
            if !guaranteed {
                let relaxed_ok = config.relaxed_explicit_bound && alpha < 2.0 * bound;
                let msg =
                    format!("explicit Euler alpha = {alpha:e} exceeds mu / L_A^2 = {bound:e}");
                if relaxed_ok {
                    trace
                        .warnings
                        .push(format!("{msg}; relaxed bound in use, no rate asserted"));
                } else {
                    reject_or_warn(&mut trace, config.allow_unguaranteed, msg)?;
                }
            }
            let choice = StepChoice {
                alpha,
                guaranteed,
                rate: guaranteed.then(|| 1.0 / (1.0 + alpha * mu)),
            };
            (choice, None, None, None)
        }
        FlowMethod::ImplicitEuler(user) => {
            let alpha = config.alpha.unwrap_or(1.0 / mu);
            let r: Arc<dyn Resolvent> = match user {
                Some(r) => r.clone(),
                None => Arc::new(LinearResolvent::new(problem, alpha)?),
            };
            let choice = StepChoice {
                alpha,
                guaranteed: true,
                rate: Some(1.0 / (1.0 + 2.0 * alpha * mu)),
            };
            (choice, None, None, Some(r))
        }
        FlowMethod::Aor => {
            let b = linear_rhs_for_aor(problem)?;
            let alpha = config
                .alpha
                .unwrap_or_else(|| aor_default_alpha(mu, l_bsym));
            let guaranteed = aor_guaranteed(alpha, l_bsym);
            if !guaranteed {
                reject_or_warn(
                        &mut trace,
                        config.allow_unguaranteed,
                        format!("AOR alpha = {alpha:e} violates alpha < (1 - 1e-6) / L_Bsym with L_Bsym = {l_bsym:e}"),
                    )?;
            }
            let choice = StepChoice {
                alpha,
                guaranteed,
                rate: guaranteed.then(|| 1.0 / (1.0 + alpha * mu)),
            };
            (choice, Some(b), None, None)
        }
        FlowMethod::Gss => {
            let alpha = config
                .alpha
                .unwrap_or_else(|| gss_default_alpha(l_f, l_bsym));
            let guaranteed = gss_guaranteed(alpha, l_f, l_bsym);
            if !guaranteed {
                reject_or_warn(
                    &mut trace,
                    config.allow_unguaranteed,
                    format!("GSS alpha = {alpha:e} violates alpha < 1 / max(2 L_Bsym, 2 L_F)"),
                )?;
            }
            let choice = StepChoice {
                alpha,
                guaranteed,
                rate: guaranteed.then(|| 1.0 / (1.0 + alpha * mu)),
            };
            (choice, None, None, None)
        }
        FlowMethod::Hss => {
            let (a, c) = problem
                .linear_system()
                .ok_or_else(|| Error::Unsupported("HSS needs an affine operator".into()))?;
            let alpha = match config.alpha {
                Some(a) => a,
                None => Hss::optimal_alpha(&a)?,
            };
            let h = Hss::new(&a, c, alpha)?;
            let choice = StepChoice {
                alpha,
                guaranteed: true,
                rate: Some(h.contraction_factor().powi(2)),
            };
            (choice, None, Some(h), None)
        }
    };
    trace.guaranteed = choice.guaranteed;
    let alpha = choice.alpha;
    let sign = config.variant.sign();
    let f = problem.objective().clone();

    let designated = |x: &Vector, xs: &Vector| -> Result<f64> {
        let e = x - xs;
        match method {
            FlowMethod::ExplicitEuler | FlowMethod::ImplicitEuler(_) => lyapunov_eq(x, xs),
            FlowMethod::Aor => shifted_form(&e, 1.0, sign * alpha, split.bsym()),
            FlowMethod::Gss => Ok(shifted_form(&e, 1.0, sign * alpha, split.bsym())?
                - alpha * bregman(f.as_ref(), xs, x)?),
            FlowMethod::Hss => {
                let w = hss.as_ref().expect("HSS state").weighted_norm(&e);
                Ok(0.5 * w * w)
            }
        }
    };
    let value = |x: &Vector, residual: f64, scale: f64| -> Result<f64> {
        match problem.x_star() {
            Some(xs) if choice.guaranteed => Ok(clamp_roundoff(designated(x, xs)?, scale)),
            Some(xs) => lyapunov_eq(x, xs),
            None => Ok(residual),
        }
    };
    if problem.x_star().is_some() && !choice.guaranteed {
        trace
            .warnings
            .push("step size outside the guarantee; recording 1/2 |x - x*|^2 instead of the scheme's functional".into());
    }
    if problem.x_star().is_none() {
        trace
            .warnings
            .push("x* unknown; recording the residual |A(x)|".into());
    }

    let err = |x: &Vector| problem.x_star().map(|xs| (x - xs).norm());
    let mut x = x0.clone();
    let mut residual = problem.operator(&x).norm();
    let e0 = value(&x, residual, 0.0)?;
    trace.push(TraceEntry::new(0, e0, residual).with_err(err(&x)))?;
    let mut guard = DivergenceGuard::new(e0);
    let mut prev = e0;
    let mut census = OpCensus::default();
    for k in 1..=config.max_iter {
        if residual <= config.stop_tol {
            break;
        }
        x = match method {
            FlowMethod::ExplicitEuler => {
                census.gradient_evals += 1;
                census.matvecs += 1;
                explicit_euler_step(problem, &x, alpha)?
            }
            FlowMethod::ImplicitEuler(_) => {
                census.general_solves += 1;
                implicit_euler_step(problem, &x, alpha, resolvent.as_deref())?
            }
            FlowMethod::Aor => {
                census.matvecs += 1;
                census.triangular_solves += 1;
                aor_linear_step(
                    &split,
                    mu,
                    aor_b.as_ref().expect("AOR rhs"),
                    &x,
                    alpha,
                    config.variant,
                )?
            }
            FlowMethod::Gss => {
                census.gradient_evals += 1;
                census.matvecs += 1;
                census.triangular_solves += 1;
                gss_step(problem, &split, &x, alpha, config.variant)?
            }
            FlowMethod::Hss => {
                census.symmetric_solves += 1;
                census.skew_solves += 1;
                census.matvecs += 2;
                hss.as_ref().expect("HSS state").step(&x)?
            }
        };
        residual = problem.operator(&x).norm();
        let e = value(&x, residual, e0)?;
        guard.observe(k, prev, e, choice.guaranteed && problem.x_star().is_some())?;
        trace.push(TraceEntry::new(k, e, residual).with_err(err(&x)))?;
        prev = e;
    }
    trace.census = census;
    Ok((x, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::lyapunov_alpha_b;
    use crate::problem::Quadratic;

    fn v(a: &[f64]) -> Vector {
        Vector::from_row_slice(a)
    }

    fn rot() -> Matrix {
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    }

    fn two_by_two() -> MonotoneProblem {
        MonotoneProblem::shifted_skew(1.0, rot(), v(&[1.0, 0.0]))
            .unwrap()
            .with_x_star(v(&[0.5, 0.5]))
            .unwrap()
    }

    #[test]
    fn explicit_euler_examples() {
        let p = two_by_two();
        let xs = p.x_star().unwrap().clone();
        assert!((explicit_euler_step(&p, &xs, 0.3).unwrap() - &xs).amax() < 1e-15);
        let x1 = explicit_euler_step(&p, &v(&[0.0, 0.0]), 0.25).unwrap();
        assert_eq!(x1, v(&[0.25, 0.0]));
        let iso =
            MonotoneProblem::shifted_skew(1.0, Matrix::zeros(2, 2), Vector::zeros(2)).unwrap();
        assert_eq!(
            explicit_euler_step(&iso, &v(&[2.0, 0.0]), 0.5).unwrap(),
            v(&[1.0, 0.0])
        );
    }

    #[test]
    fn implicit_euler_examples() {
        let iso =
            MonotoneProblem::shifted_skew(1.0, Matrix::zeros(2, 2), Vector::zeros(2)).unwrap();
        let x1 = implicit_euler_step(&iso, &v(&[2.0, 2.0]), 1.0, None).unwrap();
        assert!((x1 - v(&[1.0, 1.0])).amax() < 1e-15);
        let p = two_by_two();
        let xs = p.x_star().unwrap().clone();
        assert!((implicit_euler_step(&p, &xs, 0.7, None).unwrap() - &xs).amax() < 1e-15);
    }

    #[test]
    fn implicit_euler_needs_resolvent_for_nonlinear() {
        let f = crate::problem::LogCoshQuadratic {
            quad: Quadratic::isotropic(1.0, Vector::zeros(2)),
            eps: 0.1,
        };
        let p = MonotoneProblem::new(Arc::new(f), rot(), 1.0, 1.1).unwrap();
        assert!(matches!(
            implicit_euler_step(&p, &v(&[1.0, 0.0]), 0.5, None),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn aor_examples() {
        let split = split_skew(&Matrix::zeros(2, 2)).unwrap();
        let x1 = aor_linear_step(
            &split,
            1.0,
            &v(&[2.0, 2.0]),
            &v(&[0.0, 0.0]),
            0.5,
            Variant::Forward,
        )
        .unwrap();
        assert!((x1 - v(&[2.0 / 3.0, 2.0 / 3.0])).amax() < 1e-15);
        let split = split_skew(&rot()).unwrap();
        let b = v(&[1.0, 0.0]);
        let xs = v(&[0.5, 0.5]);
        for variant in [Variant::Forward, Variant::Backward] {
            let x = aor_linear_step(&split, 1.0, &b, &xs, 0.5, variant).unwrap();
            assert!((x - &xs).amax() < 1e-15);
        }
        let mut x = v(&[3.0, -1.0]);
        for _ in 0..30 {
            let e_prev = lyapunov_alpha_b(&x, &xs, 0.5, split.bsym()).unwrap();
            x = aor_linear_step(&split, 1.0, &b, &x, 0.5, Variant::Forward).unwrap();
            let e = lyapunov_alpha_b(&x, &xs, 0.5, split.bsym()).unwrap();
            assert!(e <= e_prev / 1.5 + 1e-12);
        }
    }

    #[test]
    fn gss_reduces_to_explicit_euler_without_skew() {
        let h = Matrix::from_diagonal(&v(&[1.0, 3.0]));
        let q = Arc::new(Quadratic::new(h, v(&[1.0, -1.0])).unwrap());
        let p = MonotoneProblem::new(q, Matrix::zeros(2, 2), 1.0, 3.0).unwrap();
        let split = split_skew(p.skew()).unwrap();
        let x = v(&[0.3, 2.0]);
        assert_eq!(
            gss_step(&p, &split, &x, 0.1, Variant::Forward).unwrap(),
            explicit_euler_step(&p, &x, 0.1).unwrap()
        );
    }

    #[test]
    fn gss_per_step_contraction() {
        let h = Matrix::from_diagonal(&v(&[1.0, 10.0]));
        let c = v(&[1.0, 2.0]);
        let a = &h + rot();
        let xs = a.clone().lu().solve(&c).unwrap();
        let q = Arc::new(Quadratic::new(h, c).unwrap());
        let p = MonotoneProblem::new(q, rot(), 1.0, 10.0)
            .unwrap()
            .with_x_star(xs)
            .unwrap();
        let cfg = StepConfig {
            alpha: Some(1.0 / 40.0),
            stop_tol: 1e-13,
            ..Default::default()
        };
        let (_, trace) = solve_flow(&p, &FlowMethod::Gss, &cfg, &v(&[2.0, -3.0])).unwrap();
        assert!(trace.guaranteed);
        assert!(trace.violations(1.0 / (1.0 + 1.0 / 40.0), 1e-12).is_empty());
    }

    #[test]
    fn hss_scalar_reduction() {
        let a = Matrix::identity(2, 2);
        let b = Vector::zeros(2);
        let x = v(&[1.0, -2.0]);
        let alpha = 3.0;
        let out = hss_step(&a, &b, &x, alpha).unwrap();
        assert!((out - &x * ((alpha - 1.0) / (alpha + 1.0))).amax() < 1e-15);
        assert!(hss_step(&a, &b, &x, 1.0).unwrap().amax() < 1e-15);
    }

    #[test]
    fn solve_flow_zero_iterations_at_solution() {
        let p = two_by_two();
        let xs = p.x_star().unwrap().clone();
        for m in [
            FlowMethod::ExplicitEuler,
            FlowMethod::Aor,
            FlowMethod::Gss,
            FlowMethod::Hss,
        ] {
            let (x, t) = solve_flow(&p, &m, &StepConfig::default(), &xs).unwrap();
            assert_eq!(t.iterations(), 0, "{}", m.name());
            assert_eq!(x, xs);
        }
    }

    #[test]
    fn aor_solves_two_by_two() {
        let p = two_by_two();
        let (x, t) = solve_flow(
            &p,
            &FlowMethod::Aor,
            &StepConfig::default(),
            &v(&[0.0, 0.0]),
        )
        .unwrap();
        assert!((x - v(&[0.5, 0.5])).amax() < 1e-9);
        assert!(t.violations(1.0 / 1.5, 1e-12).is_empty());
    }

    #[test]
    fn step_size_violation_is_rejected_unless_allowed() {
        let p = two_by_two();
        let cfg = StepConfig {
            alpha: Some(2.0),
            ..Default::default()
        };
        assert!(matches!(
            solve_flow(&p, &FlowMethod::Aor, &cfg, &v(&[0.0, 0.0])),
            Err(Error::StepSize(_))
        ));
        let cfg = StepConfig {
            alpha: Some(2.0),
            allow_unguaranteed: true,
            max_iter: 5,
            ..Default::default()
        };
        let (_, t) = solve_flow(&p, &FlowMethod::Aor, &cfg, &v(&[0.0, 0.0])).unwrap();
        assert!(!t.guaranteed);
        assert!(!t.warnings.is_empty());
    }

    #[test]
    fn relaxed_explicit_bound_is_opt_in() {
        let p = two_by_two();
        // L_A = 1 + 1, mu / L_A^2 = 0.25
        let cfg = StepConfig {
            alpha: Some(0.4),
            max_iter: 5,
            ..Default::default()
        };
        assert!(solve_flow(&p, &FlowMethod::ExplicitEuler, &cfg, &v(&[0.0, 0.0])).is_err());
        let cfg = StepConfig {
            relaxed_explicit_bound: true,
            ..cfg
        };
        let (_, t) = solve_flow(&p, &FlowMethod::ExplicitEuler, &cfg, &v(&[0.0, 0.0])).unwrap();
        assert!(!t.guaranteed);
    }
}
