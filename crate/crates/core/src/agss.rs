//! Accelerated gradient flow `x' = y - x`, `y' = x - y - (grad F(x) + N y) / mu`
//! and its IMEX, inexact IMEX and explicit (AGSS) discretizations.

use std::sync::{Arc, Mutex};

use nalgebra::linalg::LU;
use nalgebra::Dyn;
use num_complex::Complex64;

use crate::error::{check_dim, check_finite, Error, Result};
use crate::flow::{aor_linear_step, clamp_roundoff, Variant};
use crate::linalg::{Matrix, Vector};
use crate::lyapunov::{bregman, lyapunov_acc, lyapunov_acc_alpha_b};
use crate::problem::MonotoneProblem;
use crate::split::{split_skew, SkewSplit};
use crate::trace::{ConvergenceTrace, DivergenceGuard, OpCensus, TraceEntry};

/// Largest dimension accepted by the dense direct inner solver.
pub const DIRECT_MAX_DIM: usize = 2048;
/// Dimension up to which [`InnerMethod::default_for`] picks the direct solver.
pub const DIRECT_DEFAULT_MAX_DIM: usize = 512;
pub const DEFAULT_INNER_MAX_ITER: usize = 20_000;

#[derive(Clone, Debug, PartialEq)]
pub struct AccState {
    pub x: Vector,
    pub y: Vector,
    /// Predictor of the last step; equals `x` for a fresh state.
    pub x_hat: Vector,
}

impl AccState {
    pub fn new(x: Vector, y: Vector) -> Result<Self> {
        check_dim(x.len(), y.len())?;
        check_finite(&x, "x")?;
        check_finite(&y, "y")?;
        Ok(Self {
            x_hat: x.clone(),
            x,
            y,
        })
    }

    /// `x = y = x0`
    pub fn at(x0: &Vector) -> Self {
        Self {
            x: x0.clone(),
            y: x0.clone(),
            x_hat: x0.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Constants of `(1 + alpha c1)(x_{k+1} - x_hat) = alpha c2 (y_{k+1} - y_k)`
/// and the step-size condition `alpha^2 L_F c2^2 <= (1 + alpha c1) c3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionParams {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl CorrectionParams {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        for (name, v) in [("c1", c1), ("c2", c2), ("c3", c3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        Ok(Self { c1, c2, c3 })
    }

    /// IMEX correction `x_{k+1} = (x_k + alpha y_{k+1}) / (1 + alpha)`.
    pub fn imex(mu: f64) -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: mu,
        }
    }

    /// Midpoint correction of the inexact and explicit schemes.
    pub fn midpoint(mu: f64) -> Self {
        Self {
            c1: 0.5,
            c2: 1.0,
            c3: mu,
        }
    }
}

/// Largest `alpha` with `alpha^2 L_F c2^2 <= (1 + alpha c1) c3`.
pub fn max_step_size(params: &CorrectionParams, l_f: f64) -> Result<f64> {
    if !(l_f > 0.0 && l_f.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "l_f",
            reason: format!("must be positive and finite, got {l_f}"),
        });
    }
    let CorrectionParams { c1, c2, c3 } = *params;
    let lin = c1 * c3;
    Ok((lin + (lin * lin + 4.0 * l_f * c2 * c2 * c3).sqrt()) / (2.0 * l_f * c2 * c2))
}

/// `x_hat_new + alpha c2 / (1 + alpha c1) (y_new - y_old)`
pub fn correction_extrapolate(
    x_hat_new: &Vector,
    y_new: &Vector,
    y_old: &Vector,
    alpha: f64,
    params: &CorrectionParams,
) -> Result<Vector> {
    check_dim(x_hat_new.len(), y_new.len())?;
    check_dim(x_hat_new.len(), y_old.len())?;
    let out = x_hat_new + (y_new - y_old) * (alpha * params.c2 / (1.0 + alpha * params.c1));
    check_finite(&out, "corrected iterate")?;
    Ok(out)
}

/// Eigenvalues `-1 + i (b +- sqrt(b^2 + 4(a - 1))) / 2` of the linearized
/// accelerated flow for a scalar mode with `grad F = a mu` and `N = i b mu`.
pub fn flow_spectrum(a: f64, b: f64) -> Result<[Complex64; 2]> {
    if !(a >= 1.0) || !b.is_finite() || !a.is_finite() {
        return Err(Error::InvalidParameter {
            name: "a",
            reason: format!("need finite a >= 1 and finite b, got a = {a}, b = {b}"),
        });
    }
    let r = (b * b + 4.0 * (a - 1.0)).sqrt();
    Ok([
        Complex64::new(-1.0, (b + r) / 2.0),
        Complex64::new(-1.0, (b - r) / 2.0),
    ])
}

/// Slack of the strong Lyapunov inequality
/// `-grad E . G - E - mu/2 |y - x|^2` for
/// `E = D_F(x, x*) + mu/2 |y - x*|^2`. Non-negative for valid problems.
pub fn strong_lyapunov_gap(problem: &MonotoneProblem, x: &Vector, y: &Vector) -> Result<f64> {
    let xs = problem.x_star().ok_or_else(|| Error::InvalidParameter {
        name: "x_star",
        reason: "strong Lyapunov check needs x*".into(),
    })?;
    check_dim(problem.dim(), x.len())?;
    check_dim(problem.dim(), y.len())?;
    let mu = problem.mu();
    let gx = problem.gradient(x);
    let gs = problem.gradient(xs);
    let de_x = &gx - &gs;
    let de_y = (y - xs) * mu;
    let g_x = y - x;
    let g_y = x - y - (&gx + problem.skew() * y) / mu;
    let e = lyapunov_acc(x, y, xs, problem.objective().as_ref(), mu)?;
    Ok(-(de_x.dot(&g_x) + de_y.dot(&g_y)) - e - 0.5 * mu * (y - x).norm_squared())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerMethod {
    /// Dense LU of `beta I + N`, cached per `beta`.
    Direct,
    /// Conjugate gradient on `(beta^2 I + N'N) y = (beta I - N) b`.
    CgNormal,
    /// AOR iteration with `mu <- beta` and step `1 / (2 L_Bsym)`.
    AorInner,
}

impl InnerMethod {
    pub fn default_for(dim: usize) -> Self {
        if dim <= DIRECT_DEFAULT_MAX_DIM {
            InnerMethod::Direct
        } else {
            InnerMethod::CgNormal
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InnerMethod::Direct => "direct",
            InnerMethod::CgNormal => "cg_normal",
            InnerMethod::AorInner => "aor_inner",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerSolveReport {
    /// Norm of the inner residual (in the units of the calling scheme).
    pub residual_norm: f64,
    pub iterations: usize,
    pub method: InnerMethod,
    pub converged: bool,
}

impl InnerSolveReport {
    fn census(&self) -> OpCensus {
        let mut c = OpCensus::default();
        match self.method {
            InnerMethod::Direct => c.skew_solves = 1,
            InnerMethod::CgNormal => c.matvecs = 2 * self.iterations + 2,
            InnerMethod::AorInner => {
                c.triangular_solves = self.iterations;
                c.matvecs = 2 * self.iterations + 1;
            }
        }
        c
    }
}

/// Solver for `(beta I + N) y = b`.
pub struct ShiftedSkewSolver {
    n: Matrix,
    split: SkewSplit,
    method: InnerMethod,
    tol: f64,
    max_iter: usize,
    lu: Mutex<Option<(f64, Arc<LU<f64, Dyn, Dyn>>)>>,
}

impl ShiftedSkewSolver {
    pub fn new(n: &Matrix, method: InnerMethod, tol: f64) -> Result<Self> {
        let split = split_skew(n)?;
        Self::with_split(n, split, method, tol)
    }

    pub fn with_split(n: &Matrix, split: SkewSplit, method: InnerMethod, tol: f64) -> Result<Self> {
        check_dim(n.nrows(), split.dim())?;
        if method == InnerMethod::Direct && n.nrows() > DIRECT_MAX_DIM {
            return Err(Error::Unsupported(format!(
                "direct inner solve limited to dim <= {DIRECT_MAX_DIM}, got {}",
                n.nrows()
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: format!("must be positive, got {tol}"),
            });
        }
        Ok(Self {
            n: n.clone(),
            split,
            method,
            tol,
            max_iter: DEFAULT_INNER_MAX_ITER,
            lu: Mutex::new(None),
        })
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn method(&self) -> InnerMethod {
        self.method
    }

    pub fn split(&self) -> &SkewSplit {
        &self.split
    }

    /// `(beta I + N) y`
    pub fn apply(&self, beta: f64, y: &Vector) -> Vector {
        y * beta + self.skew_mul(y)
    }

    fn skew_mul(&self, y: &Vector) -> Vector {
        self.split.bsym_mul(y) - self.split.lower().mul(y) * 2.0
    }

    fn factor(&self, beta: f64) -> Arc<LU<f64, Dyn, Dyn>> {
        let mut guard = self.lu.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((b, lu)) = guard.as_ref() {
            if *b == beta {
                return lu.clone();
            }
        }
        let dim = self.n.nrows();
        let lu = Arc::new((Matrix::identity(dim, dim) * beta + &self.n).lu());
        *guard = Some((beta, lu.clone()));
        lu
    }

    /// Solves to the configured tolerance, warm-starting iterative methods
    /// from `y0`.
    pub fn solve(&self, beta: f64, b: &Vector, y0: &Vector) -> Result<(Vector, InnerSolveReport)> {
        let target = self.tol * b.norm();
        self.iterate(beta, b, y0, self.max_iter, |_, s| s.norm() <= target)
    }

    /// Runs the configured method and stops at the first iterate (including the
    /// start) for which `stop(y, b - (beta I + N) y)` holds. The direct method
    /// evaluates `stop` once and reports convergence only if it holds.
    pub fn iterate<F>(
        &self,
        beta: f64,
        b: &Vector,
        y0: &Vector,
        max_iter: usize,
        mut stop: F,
    ) -> Result<(Vector, InnerSolveReport)>
    where
        F: FnMut(&Vector, &Vector) -> bool,
    {
        check_dim(self.split.dim(), b.len())?;
        check_dim(self.split.dim(), y0.len())?;
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must be positive and finite, got {beta}"),
            });
        }
        let report =
            |_: &Vector, s: &Vector, iterations: usize, converged: bool| InnerSolveReport {
                residual_norm: s.norm(),
                iterations,
                method: self.method,
                converged,
            };
        match self.method {
            InnerMethod::Direct => {
                let y = self
                    .factor(beta)
                    .solve(b)
                    .ok_or(Error::Singular("beta I + N"))?;
                let s = b - self.apply(beta, &y);
                let ok = stop(&y, &s);
                let r = report(&y, &s, 1, ok);
                Ok((y, r))
            }
            InnerMethod::CgNormal => {
                let mut y = y0.clone();
                let mut s = b - self.apply(beta, &y);
                if stop(&y, &s) {
                    let r = report(&y, &s, 0, true);
                    return Ok((y, r));
                }
                let mut r = &s * beta - self.skew_mul(&s);
                let mut p = r.clone();
                let mut gamma = r.norm_squared();
                for it in 1..=max_iter {
                    if gamma == 0.0 {
                        break;
                    }
                    let q = self.apply(beta, &p);
                    let a = gamma / q.norm_squared();
                    y.axpy(a, &p, 1.0);
                    s.axpy(-a, &q, 1.0);
                    if stop(&y, &s) {
                        let rep = report(&y, &s, it, true);
                        return Ok((y, rep));
                    }
                    r = &s * beta - self.skew_mul(&s);
                    let g_new = r.norm_squared();
                    p = &r + &p * (g_new / gamma);
                    gamma = g_new;
                }
                check_finite(&y, "inner CG iterate")?;
                let s = b - self.apply(beta, &y);
                let rep = report(&y, &s, max_iter, false);
                Ok((y, rep))
            }
            InnerMethod::AorInner => {
                let l = self.split.l_bsym();
                if l == 0.0 {
                    let y = b / beta;
                    let s = b - self.apply(beta, &y);
                    let ok = stop(&y, &s);
                    let r = report(&y, &s, 1, ok);
                    return Ok((y, r));
                }
                let a_in = 0.5 / l;
                let mut y = y0.clone();
                let mut s = b - self.apply(beta, &y);
                if stop(&y, &s) {
                    let r = report(&y, &s, 0, true);
                    return Ok((y, r));
                }
                for it in 1..=max_iter {
                    y = aor_linear_step(&self.split, beta, b, &y, a_in, Variant::Forward)?;
                    s = b - self.apply(beta, &y);
                    if stop(&y, &s) {
                        let r = report(&y, &s, it, true);
                        return Ok((y, r));
                    }
                }
                let r = report(&y, &s, max_iter, false);
                Ok((y, r))
            }
        }
    }
}

/// Solves `(beta I + N) y = b` once, from a zero start.
pub fn shifted_skew_solve(
    beta: f64,
    n: &Matrix,
    b: &Vector,
    method: InnerMethod,
    tol: f64,
) -> Result<(Vector, InnerSolveReport)> {
    let solver = ShiftedSkewSolver::new(n, method, tol)?;
    solver.solve(beta, b, &Vector::zeros(b.len()))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive and finite, got {alpha}"),
        })
    }
}

/// Shared predictor and scaled inner system of the IMEX schemes:
/// `x_hat = (x + alpha y)/(1 + alpha)`, `beta = mu (1 + alpha)/alpha`,
/// `r = (mu/alpha)(y + alpha x_hat) - grad F(x_hat)`.
fn imex_inner_system(
    problem: &MonotoneProblem,
    state: &AccState,
    alpha: f64,
) -> Result<(Vector, f64, Vector)> {
    check_alpha(alpha)?;
    check_dim(problem.dim(), state.dim())?;
    let mu = problem.mu();
    let x_hat = (&state.x + &state.y * alpha) / (1.0 + alpha);
    let g = problem.gradient(&x_hat);
    let beta = mu * (1.0 + alpha) / alpha;
    let rhs = (&state.y + &x_hat * alpha) * (mu / alpha) - g;
    Ok((x_hat, beta, rhs))
}

/// One IMEX step with the inner system solved by `solver` to its tolerance.
/// The report carries `|eps_in|` in the unscaled `(1 + alpha) I + alpha N / mu`
/// form.
pub fn agss_imex_step_with(
    problem: &MonotoneProblem,
    solver: &ShiftedSkewSolver,
    state: &AccState,
    alpha: f64,
) -> Result<(AccState, InnerSolveReport)> {
    let (x_hat, beta, rhs) = imex_inner_system(problem, state, alpha)?;
    let (y, mut report) = solver.solve(beta, &rhs, &state.y)?;
    report.residual_norm *= alpha / problem.mu();
    let x = (&state.x + &y * alpha) / (1.0 + alpha);
    check_finite(&x, "IMEX iterate")?;
    Ok((AccState { x, y, x_hat }, report))
}

/// One IMEX step, building the inner solver on the fly.
pub fn agss_imex_step(
    problem: &MonotoneProblem,
    state: &AccState,
    alpha: f64,
    method: InnerMethod,
    tol: f64,
) -> Result<(AccState, InnerSolveReport)> {
    let solver = ShiftedSkewSolver::new(problem.skew(), method, tol)?;
    agss_imex_step_with(problem, &solver, state, alpha)
}

/// Acceptance rule for the inexact inner solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InexactRule {
    /// `|eps_in|^2 <= alpha/2 (|x_hat - x_k|^2 + alpha |y - x_hat|^2)`,
    /// checked at the start and after every inner iteration.
    Criterion,
    /// `|eps_in| <= tol |b|` with no coupling to the outer state.
    FixedTolerance(f64),
}

/// One inexact IMEX step with the midpoint correction
/// `x_{k+1} = (x_k + alpha y_{k+1} - alpha/2 x_hat) / (1 + alpha/2)`.
/// An inner budget overrun returns the step with a non-converged report.
pub fn agss_imex_inexact_step(
    problem: &MonotoneProblem,
    solver: &ShiftedSkewSolver,
    state: &AccState,
    alpha: f64,
    rule: InexactRule,
    budget: usize,
) -> Result<(AccState, InnerSolveReport)> {
    let (x_hat, beta, rhs) = imex_inner_system(problem, state, alpha)?;
    let scale = alpha / problem.mu();
    let dx2 = (&x_hat - &state.x).norm_squared();
    let rhs_norm = rhs.norm();
    let eps = f64::EPSILON;
    let (y, mut report) = match rule {
        InexactRule::Criterion => solver.iterate(beta, &rhs, &state.y, budget, |y, s| {
            let e2 = (s * scale).norm_squared();
            let bound = 0.5 * alpha * (dx2 + alpha * (y - &x_hat).norm_squared());
            let floor = 8.0 * eps * (rhs_norm + beta * y.norm());
            e2 <= bound || s.norm() <= floor
        })?,
        InexactRule::FixedTolerance(tol) => {
            solver.iterate(beta, &rhs, &state.y, budget, |_, s| {
                s.norm() <= tol * rhs_norm
            })?
        }
    };
    report.residual_norm *= scale;
    let x = (&state.x + &y * alpha - &x_hat * (0.5 * alpha)) / (1.0 + 0.5 * alpha);
    check_finite(&x, "inexact IMEX iterate")?;
    Ok((AccState { x, y, x_hat }, report))
}

/// One explicit AGSS step:
/// `((1 + alpha) I - (2 alpha / mu) B) y = y_k + alpha x_hat - (alpha/mu)(grad F(x_hat) + Bsym y_k)`
/// by forward substitution, then the midpoint correction.
pub fn agss_explicit_step(
    problem: &MonotoneProblem,
    split: &SkewSplit,
    state: &AccState,
    alpha: f64,
) -> Result<AccState> {
    check_alpha(alpha)?;
    check_dim(problem.dim(), state.dim())?;
    check_dim(split.dim(), state.dim())?;
    let mu = problem.mu();
    let x_hat = (&state.x + &state.y * alpha) / (1.0 + alpha);
    let g = problem.gradient(&x_hat);
    let rhs = &state.y + &x_hat * alpha - (g + split.bsym_mul(&state.y)) * (alpha / mu);
    let y = split
        .lower()
        .solve_lower(1.0 + alpha, -2.0 * alpha / mu, &rhs);
    let x = (&state.x + &y * alpha - &x_hat * (0.5 * alpha)) / (1.0 + 0.5 * alpha);
    check_finite(&x, "explicit AGSS iterate")?;
    Ok(AccState { x, y, x_hat })
}

/// `min{mu / (2 L_Bsym), sqrt(mu / (2 L_F))}`
pub fn explicit_step_bound(mu: f64, l_f: f64, l_bsym: f64) -> f64 {
    let a = (mu / (2.0 * l_f)).sqrt();
    if l_bsym > 0.0 {
        a.min(mu / (2.0 * l_bsym))
    } else {
        a
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AgssScheme {
    Imex {
        inner: InnerMethod,
        tol: f64,
    },
    Inexact {
        inner: InnerMethod,
        rule: InexactRule,
    },
    Explicit,
}

impl AgssScheme {
    pub fn name(&self) -> &'static str {
        match self {
            AgssScheme::Imex { .. } => "imex",
            AgssScheme::Inexact { .. } => "imex_inexact",
            AgssScheme::Explicit => "agss_explicit",
        }
    }
}

#[derive(Clone, Debug)]
pub struct AgssConfig {
    pub alpha: Option<f64>,
    pub max_iter: usize,
    pub stop_tol: f64,
    pub allow_unguaranteed: bool,
    /// Default to the larger root from [`max_step_size`] instead of
    /// `sqrt(mu / L_F)` for the IMEX schemes.
    pub use_max_step: bool,
    pub inner_max_iter: usize,
}

impl Default for AgssConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            max_iter: 10_000,
            stop_tol: 1e-10,
            allow_unguaranteed: false,
            use_max_step: false,
            inner_max_iter: DEFAULT_INNER_MAX_ITER,
        }
    }
}

/// Step size, guarantee flag and Lyapunov rate for a scheme on a problem.
pub fn agss_step_choice(
    problem: &MonotoneProblem,
    split: &SkewSplit,
    scheme: &AgssScheme,
    config: &AgssConfig,
) -> Result<(f64, bool, f64)> {
    let mu = problem.mu();
    let l_f = problem.l_f();
    Ok(match scheme {
        AgssScheme::Imex { .. } => {
            let params = CorrectionParams::imex(mu);
            let alpha = match config.alpha {
                Some(a) => a,
                None if config.use_max_step => max_step_size(&params, l_f)?,
                None => (mu / l_f).sqrt(),
            };
            let ok = alpha * alpha * l_f <= (1.0 + alpha) * mu * (1.0 + 1e-12);
            (alpha, ok, 1.0 / (1.0 + alpha))
        }
        AgssScheme::Inexact { .. } => {
            let params = CorrectionParams::midpoint(mu);
            let alpha = match config.alpha {
                Some(a) => a,
                None if config.use_max_step => max_step_size(&params, l_f)?,
                None => (mu / l_f).sqrt(),
            };
            let ok = alpha * alpha * l_f <= (1.0 + 0.5 * alpha) * mu * (1.0 + 1e-12);
            (alpha, ok, 1.0 / (1.0 + 0.5 * alpha))
        }
        AgssScheme::Explicit => {
            let bound = explicit_step_bound(mu, l_f, split.l_bsym());
            let alpha = config.alpha.unwrap_or(bound);
            (alpha, alpha <= bound, 1.0 / (1.0 + 0.5 * alpha))
        }
    })
}

/// Iterates an accelerated scheme from `x = y = x0` until `|A(x_k)| <= stop_tol`.
///
/// With `x*` known the trace records `D_F(x, x*) + mu/2 |y - x*|^2` for the
/// IMEX schemes and `D_F(x, x*) + 1/2 |y - x*|^2_{mu I - alpha Bsym}` for the
/// explicit scheme (falling back to the former outside its step bound).
pub fn solve_agss(
    problem: &MonotoneProblem,
    scheme: &AgssScheme,
    config: &AgssConfig,
    x0: &Vector,
) -> Result<(Vector, ConvergenceTrace)> {
    check_dim(problem.dim(), x0.len())?;
    if config.max_iter == 0 || !(config.stop_tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "config",
            reason: "max_iter must be positive and stop_tol positive".into(),
        });
    }
    let split = split_skew(problem.skew())?;
    let (alpha, guaranteed, _) = agss_step_choice(problem, &split, scheme, config)?;
    check_alpha(alpha)?;
    let mut trace = ConvergenceTrace::new(guaranteed);
    if !guaranteed {
        let msg = format!(
            "{} alpha = {alpha:e} is outside the rate guarantee",
            scheme.name()
        );
        if config.allow_unguaranteed {
            trace.warnings.push(msg);
        } else {
            return Err(Error::StepSize(msg));
        }
    }
    let solver = match scheme {
        AgssScheme::Imex { inner, tol } => Some(
            ShiftedSkewSolver::with_split(problem.skew(), split.clone(), *inner, *tol)?
                .with_max_iter(config.inner_max_iter),
        ),
        AgssScheme::Inexact { inner, .. } => Some(
            ShiftedSkewSolver::with_split(problem.skew(), split.clone(), *inner, 1e-14)?
                .with_max_iter(config.inner_max_iter),
        ),
        AgssScheme::Explicit => None,
    };
    let f = problem.objective().clone();
    let mu = problem.mu();
    let value = |s: &AccState, residual: f64, scale: f64| -> Result<f64> {
        let Some(xs) = problem.x_star() else {
            return Ok(residual);
        };
        let v = match scheme {
            AgssScheme::Explicit if guaranteed => {
                lyapunov_acc_alpha_b(&s.x, &s.y, xs, alpha, split.bsym(), f.as_ref(), mu)?
            }
            _ => lyapunov_acc(&s.x, &s.y, xs, f.as_ref(), mu)?,
        };
        Ok(clamp_roundoff(v, scale))
    };
    if problem.x_star().is_none() {
        trace
            .warnings
            .push("x* unknown; recording the residual |A(x)|".into());
    }
    let err = |x: &Vector| problem.x_star().map(|xs| (x - xs).norm());

    let mut state = AccState::at(x0);
    let mut residual = problem.operator(&state.x).norm();
    let e0 = value(&state, residual, 0.0)?;
    trace.push(TraceEntry::new(0, e0, residual).with_err(err(&state.x)))?;
    let mut guard = DivergenceGuard::new(e0);
    let mut prev = e0;
    let mut census = OpCensus::default();
    for k in 1..=config.max_iter {
        if residual <= config.stop_tol {
            break;
        }
        census.gradient_evals += 1;
        let (next, report) = match scheme {
            AgssScheme::Imex { .. } => {
                let (s, r) = agss_imex_step_with(
                    problem,
                    solver.as_ref().expect("inner solver"),
                    &state,
                    alpha,
                )?;
                (s, Some(r))
            }
            AgssScheme::Inexact { rule, .. } => {
                let (s, r) = agss_imex_inexact_step(
                    problem,
                    solver.as_ref().expect("inner solver"),
                    &state,
                    alpha,
                    *rule,
                    config.inner_max_iter,
                )?;
                (s, Some(r))
            }
            AgssScheme::Explicit => {
                census.matvecs += 1;
                census.triangular_solves += 1;
                (agss_explicit_step(problem, &split, &state, alpha)?, None)
            }
        };
        state = next;
        residual = problem.operator(&state.x).norm();
        let e = value(&state, residual, e0)?;
        guard.observe(k, prev, e, guaranteed && problem.x_star().is_some())?;
        let mut entry = TraceEntry::new(k, e, residual).with_err(err(&state.x));
        if let Some(r) = report {
            if !r.converged {
                trace
                    .warnings
                    .push(format!("inner solve not converged at step {k}"));
            }
            census.merge(&r.census());
            entry = entry.with_inner(r.iterations, r.residual_norm);
        }
        trace.push(entry)?;
        prev = e;
    }
    trace.census = census;
    Ok((state.x, trace))
}

/// Guaranteed per-step Lyapunov contraction of a scheme at `alpha`.
pub fn agss_rate(scheme: &AgssScheme, alpha: f64) -> f64 {
    match scheme {
        AgssScheme::Imex { .. } => 1.0 / (1.0 + alpha),
        _ => 1.0 / (1.0 + 0.5 * alpha),
    }
}

/// `D_F(x, x*) + mu/2 |y - x*|^2` for a state; convenience wrapper.
pub fn acc_energy(problem: &MonotoneProblem, state: &AccState) -> Result<f64> {
    let xs = problem.x_star().ok_or_else(|| Error::InvalidParameter {
        name: "x_star",
        reason: "energy needs x*".into(),
    })?;
    Ok(bregman(problem.objective().as_ref(), &state.x, xs)?
        + 0.5 * problem.mu() * (&state.y - xs).norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Quadratic;

    fn v(a: &[f64]) -> Vector {
        Vector::from_row_slice(a)
    }

    fn rot() -> Matrix {
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    }

    #[test]
    fn max_step_size_examples() {
        let p = CorrectionParams::new(1.0, 1.0, 1.0).unwrap();
        let a = max_step_size(&p, 1.0).unwrap();
        assert!((a - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((a * a - a - 1.0).abs() < 1e-14);
        let a = max_step_size(&p, 100.0).unwrap();
        assert!((a - (1.0 + 401f64.sqrt()) / 200.0).abs() < 1e-15);
        assert!(a * a * 100.0 <= 1.0 + a + 1e-14);
        assert!(max_step_size(&p, 0.0).is_err());
        assert!(CorrectionParams::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn correction_examples() {
        let p = CorrectionParams::new(0.5, 1.0, 1.0).unwrap();
        let z = v(&[0.0, 0.0]);
        let x = correction_extrapolate(&z, &v(&[1.0, 0.0]), &z, 0.5, &p).unwrap();
        assert!((x - v(&[0.4, 0.0])).amax() < 1e-16);
        let xh = v(&[0.3, -0.7]);
        assert_eq!(correction_extrapolate(&xh, &z, &z, 0.5, &p).unwrap(), xh);
    }

    #[test]
    fn flow_spectrum_examples() {
        let [l1, l2] = flow_spectrum(1.0, 0.0).unwrap();
        assert_eq!(l1, Complex64::new(-1.0, 0.0));
        assert_eq!(l2, Complex64::new(-1.0, 0.0));
        let [l1, l2] = flow_spectrum(5.0, 0.0).unwrap();
        assert_eq!(
            (l1, l2),
            (Complex64::new(-1.0, 2.0), Complex64::new(-1.0, -2.0))
        );
        assert!(flow_spectrum(0.5, 0.0).is_err());
    }

    #[test]
    fn shifted_skew_examples() {
        let b = v(&[1.0, 0.0]);
        for m in [
            InnerMethod::Direct,
            InnerMethod::CgNormal,
            InnerMethod::AorInner,
        ] {
            let (y, r) = shifted_skew_solve(1.0, &rot(), &b, m, 1e-13).unwrap();
            assert!((y - v(&[0.5, 0.5])).amax() < 1e-12, "{}", m.name());
            assert!(r.converged);
            let (y, _) =
                shifted_skew_solve(2.0, &Matrix::zeros(2, 2), &v(&[4.0, -2.0]), m, 1e-13).unwrap();
            assert!((y - v(&[2.0, -1.0])).amax() < 1e-12);
        }
    }

    fn rot_problem() -> MonotoneProblem {
        // F = 1/2 |x|^2, N = rot, x* = 0
        MonotoneProblem::shifted_skew(1.0, rot(), Vector::zeros(2))
            .unwrap()
            .with_x_star(Vector::zeros(2))
            .unwrap()
    }

    #[test]
    fn imex_two_by_two_matches_dense_substeps() {
        let p = rot_problem();
        let s = AccState::at(&v(&[1.0, 0.0]));
        let (next, _) = agss_imex_step(&p, &s, 1.0, InnerMethod::Direct, 1e-14).unwrap();
        // x_hat = (1,0); rhs = y + x_hat - grad F(x_hat) = (1,0); (2I + N) y = (1,0)
        let x_hat = v(&[1.0, 0.0]);
        let m = Matrix::identity(2, 2) * 2.0 + rot();
        let y = m.lu().solve(&v(&[1.0, 0.0])).unwrap();
        let x = (v(&[1.0, 0.0]) + &y) / 2.0;
        assert!((next.x_hat - x_hat).amax() < 1e-15);
        assert!((&next.y - &y).amax() < 1e-15);
        assert!((&next.x - &x).amax() < 1e-15);
    }

    #[test]
    fn imex_isotropic_reduction() {
        let p = MonotoneProblem::shifted_skew(2.0, Matrix::zeros(3, 3), Vector::zeros(3)).unwrap();
        let s = AccState::new(v(&[1.0, -1.0, 2.0]), v(&[0.5, 0.0, 3.0])).unwrap();
        let (next, _) = agss_imex_step(&p, &s, 0.7, InnerMethod::Direct, 1e-14).unwrap();
        assert!((next.y - &s.y / 1.7).amax() < 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed() {
        let h = Matrix::from_diagonal(&v(&[1.0, 4.0]));
        let c = v(&[1.0, 2.0]);
        let xs = (&h + rot()).lu().solve(&c).unwrap();
        let p = MonotoneProblem::new(Arc::new(Quadratic::new(h, c).unwrap()), rot(), 1.0, 4.0)
            .unwrap()
            .with_x_star(xs.clone())
            .unwrap();
        let s = AccState::at(&xs);
        let split = split_skew(p.skew()).unwrap();
        let solver = ShiftedSkewSolver::new(p.skew(), InnerMethod::CgNormal, 1e-14).unwrap();
        let (a, _) = agss_imex_step_with(&p, &solver, &s, 0.5).unwrap();
        let (b, _) =
            agss_imex_inexact_step(&p, &solver, &s, 0.5, InexactRule::Criterion, 100).unwrap();
        let c = agss_explicit_step(&p, &split, &s, 0.2).unwrap();
        for st in [a, b, c] {
            assert!((&st.x - &xs).amax() < 1e-14 && (&st.y - &xs).amax() < 1e-14);
        }
        let (_, t) = solve_agss(&p, &AgssScheme::Explicit, &AgssConfig::default(), &xs).unwrap();
        assert_eq!(t.iterations(), 0);
    }

    #[test]
    fn explicit_matches_inexact_without_skew() {
        let h = Matrix::from_diagonal(&v(&[1.0, 9.0]));
        let p = MonotoneProblem::new(
            Arc::new(Quadratic::new(h, v(&[1.0, -1.0])).unwrap()),
            Matrix::zeros(2, 2),
            1.0,
            9.0,
        )
        .unwrap();
        let split = split_skew(p.skew()).unwrap();
        let s = AccState::new(v(&[0.4, 1.0]), v(&[-2.0, 0.3])).unwrap();
        let solver = ShiftedSkewSolver::new(p.skew(), InnerMethod::Direct, 1e-14).unwrap();
        let a = agss_explicit_step(&p, &split, &s, 0.2).unwrap();
        let (b, _) =
            agss_imex_inexact_step(&p, &solver, &s, 0.2, InexactRule::Criterion, 1).unwrap();
        assert!((&a.x - &b.x).amax() < 1e-14);
        assert!((&a.y - &b.y).amax() < 1e-14);
    }

    #[test]
    fn imex_rate_on_small_problem() {
        let h = Matrix::from_diagonal(&v(&[1.0, 3.0, 100.0]));
        let n = Matrix::from_row_slice(3, 3, &[0.0, 2.0, -1.0, -2.0, 0.0, 0.5, 1.0, -0.5, 0.0]);
        let c = v(&[1.0, 0.0, -1.0]);
        let xs = (&h + &n).lu().solve(&c).unwrap();
        let p = MonotoneProblem::new(Arc::new(Quadratic::new(h, c).unwrap()), n, 1.0, 100.0)
            .unwrap()
            .with_x_star(xs)
            .unwrap();
        let scheme = AgssScheme::Imex {
            inner: InnerMethod::Direct,
            tol: 1e-14,
        };
        let (_, t) = solve_agss(&p, &scheme, &AgssConfig::default(), &v(&[1.0, 1.0, 1.0])).unwrap();
        assert!(t.violations(1.0 / 1.1, 1e-12).is_empty());
        let (_, t) = solve_agss(
            &p,
            &AgssScheme::Explicit,
            &AgssConfig::default(),
            &v(&[1.0, 1.0, 1.0]),
        )
        .unwrap();
        let alpha = explicit_step_bound(1.0, 100.0, split_skew(p.skew()).unwrap().l_bsym());
        assert!(t.violations(1.0 / (1.0 + alpha / 2.0), 1e-12).is_empty());
    }

    #[test]
    fn strong_lyapunov_on_rot_problem() {
        let p = rot_problem();
        let gap = strong_lyapunov_gap(&p, &v(&[1.0, 2.0]), &v(&[-0.5, 0.3])).unwrap();
        assert!(gap >= -1e-12);
    }
}
