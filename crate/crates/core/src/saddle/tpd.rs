//! Transformed primal-dual schemes: GSS-TPD and the accelerated ATPD, the
//! augmented dual objective `g_S` and the preconditioner scaling recipe.

use std::sync::Arc;

use crate::agss::AccState;
use crate::error::{check_dim, check_finite, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::problem::Objective;
use crate::spectral::DENSE_FALLBACK_MAX_DIM;

use super::metric::InnerProduct;
use super::problem::{metric_extremes, SaddleProblem, SchurSpectrum};

/// Relative tolerance when checking the two-sided Schur condition.
pub const SCALING_CHECK_RTOL: f64 = 1e-12;

/// `g_S(p) = g(p) + 1/2 |B'p|^2_{I_V^{-1}}`
pub struct SchurAugmented {
    g: Arc<dyn Objective>,
    b: Matrix,
    i_v: InnerProduct,
}

impl SchurAugmented {
    pub fn new(problem: &SaddleProblem) -> Self {
        Self {
            g: problem.g().clone(),
            b: problem.coupling().clone(),
            i_v: problem.i_v().clone(),
        }
    }

    fn s_norm_sq(&self, d: &Vector) -> f64 {
        let btd = self.b.transpose() * d;
        btd.dot(&self.i_v.solve(&btd))
    }

    fn s_apply(&self, p: &Vector) -> Vector {
        &self.b * self.i_v.solve(&(self.b.transpose() * p))
    }
}

impl Objective for SchurAugmented {
    fn dim(&self) -> usize {
        self.g.dim()
    }

    fn gradient(&self, p: &Vector) -> Vector {
        self.g.gradient(p) + self.s_apply(p)
    }

    fn value(&self, p: &Vector) -> Option<f64> {
        Some(self.g.value(p)? + 0.5 * self.s_norm_sq(p))
    }

    fn hessian(&self, p: &Vector) -> Option<Matrix> {
        let ivbt = self.i_v.solve_matrix(&self.b.transpose());
        Some(self.g.hessian(p)? + &self.b * ivbt)
    }

    fn bregman(&self, x: &Vector, y: &Vector) -> Option<f64> {
        Some(self.g.bregman(x, y)? + 0.5 * self.s_norm_sq(&(x - y)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TpdConstants {
    /// The constant used by the GSS-TPD rate: exact when `exact`, otherwise
    /// the lower bound.
    pub mu_g_plus: f64,
    /// `2 mu_g + (2 - L_f) mu_S`
    pub mu_g_plus_lower: f64,
    pub mu_gs: f64,
    pub l_gs: f64,
    /// Constants from a dense eigensolve of a quadratic `g`.
    pub exact: bool,
}

/// Builds `g_S` and its constants in the `I_Q` metric.
pub fn build_gs(
    problem: &SaddleProblem,
    spectrum: &SchurSpectrum,
) -> Result<(SchurAugmented, TpdConstants)> {
    let c = problem.consts();
    let gs = SchurAugmented::new(problem);
    let lower = 2.0 * c.mu_g + (2.0 - c.l_f) * spectrum.mu_s;
    let consts = match problem.g().as_quadratic() {
        Some(q) if problem.n() <= DENSE_FALLBACK_MAX_DIM => {
            let s = problem.schur_dense();
            let (mu_gs, l_gs) = metric_extremes(&(&q.h + &s), problem.i_q())?;
            let (mu_plus, _) = metric_extremes(&(&q.h * 2.0 + &s * (2.0 - c.l_f)), problem.i_q())?;
            TpdConstants {
                mu_g_plus: mu_plus,
                mu_g_plus_lower: lower,
                mu_gs,
                l_gs,
                exact: true,
            }
        }
        _ => TpdConstants {
            mu_g_plus: lower,
            mu_g_plus_lower: lower,
            mu_gs: c.mu_g + spectrum.mu_s,
            l_gs: c.l_g + spectrum.l_s,
            exact: false,
        },
    };
    Ok((gs, consts))
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

fn require_x_star(problem: &SaddleProblem) -> Result<(&Vector, &Vector)> {
    problem.x_star().ok_or_else(|| Error::InvalidParameter {
        name: "x_star",
        reason: "Lyapunov evaluation needs the saddle point".into(),
    })
}

/// `1 / max{2 sqrt(L_S), 2 L_f, 2 L_gS}`, a strict upper bound.
pub fn tpd_gss_step_bound(
    problem: &SaddleProblem,
    spectrum: &SchurSpectrum,
    consts: &TpdConstants,
) -> f64 {
    let l = (2.0 * spectrum.l_s.sqrt())
        .max(2.0 * problem.consts().l_f)
        .max(2.0 * consts.l_gs);
    1.0 / l
}

/// `min{mu_f, mu_g^+}` for the GSS-TPD rate `1 / (1 + mu alpha / 2)`.
pub fn tpd_gss_mu(problem: &SaddleProblem, consts: &TpdConstants) -> f64 {
    problem.consts().mu_f.min(consts.mu_g_plus)
}

/// One GSS-TPD step on `x = (u, p)`; the `u` update comes first and feeds
/// the `p` update.
pub fn tpd_gss_step(
    problem: &SaddleProblem,
    gs: &SchurAugmented,
    x: &Vector,
    alpha: f64,
) -> Result<Vector> {
    check_alpha(alpha)?;
    check_dim(problem.dim(), x.len())?;
    if problem.consts().l_f >= 2.0 {
        return Err(Error::StepSize(format!(
            "GSS-TPD needs L_f < 2 in the I_V metric, got {}; rescale with choose_scaling",
            problem.consts().l_f
        )));
    }
    let b = problem.coupling();
    let (uk, pk) = problem.split(x);
    let u = &uk
        - problem
            .i_v()
            .solve(&(problem.f().gradient(&uk) + b.transpose() * &pk))
            * alpha;
    let r = b * problem.i_v().solve(&problem.f().gradient(&u)) + gs.gradient(&pk)
        - b * (&u * 2.0 - &uk);
    let p = &pk - problem.i_q().solve(&r) * alpha;
    let out = problem.join(&u, &p);
    check_finite(&out, "GSS-TPD iterate")?;
    Ok(out)
}

/// `1/2 (|e_u|^2_{I_V} + |e_p|^2_{I_Q} - 2 alpha (B e_u, e_p)) - alpha (D_f(u*, u) + D_gS(p*, p))`
pub fn tpd_gss_lyapunov(
    problem: &SaddleProblem,
    gs: &SchurAugmented,
    x: &Vector,
    alpha: f64,
) -> Result<f64> {
    check_dim(problem.dim(), x.len())?;
    let (us, ps) = require_x_star(problem)?;
    let (u, p) = problem.split(x);
    let eu = &u - us;
    let ep = &p - ps;
    let quad = 0.5 * (problem.i_v().norm_sq(&eu) + problem.i_q().norm_sq(&ep))
        - alpha * (problem.coupling() * &eu).dot(&ep);
    let df = problem
        .f()
        .bregman(us, &u)
        .ok_or(Error::MissingValueOracle("Bregman divergence of f"))?;
    let dg = gs
        .bregman(ps, &p)
        .ok_or(Error::MissingValueOracle("Bregman divergence of g"))?;
    Ok(quad - alpha * (df + dg))
}

/// `min{sqrt(mu_f / (4 L_S)), sqrt(mu_f / (2 L_f)), sqrt(1 / (2 L_gS))}`
pub fn atpd_step_bound(
    problem: &SaddleProblem,
    spectrum: &SchurSpectrum,
    consts: &TpdConstants,
) -> f64 {
    let c = problem.consts();
    let mut a = (c.mu_f / (4.0 * spectrum.l_s)).sqrt();
    if c.l_f > 0.0 {
        a = a.min((c.mu_f / (2.0 * c.l_f)).sqrt());
    }
    if consts.l_gs > 0.0 {
        a = a.min((0.5 / consts.l_gs).sqrt());
    }
    a
}

/// One ATPD step. The `q` update evaluates `g_S` and `f` at the extrapolated
/// point `x_hat`.
pub fn atpd_step(
    problem: &SaddleProblem,
    gs: &SchurAugmented,
    state: &AccState,
    alpha: f64,
) -> Result<AccState> {
    check_alpha(alpha)?;
    check_dim(problem.dim(), state.dim())?;
    let c = problem.consts();
    if !(c.mu_f > 0.0) {
        return Err(Error::Unsupported("ATPD needs mu_f > 0".into()));
    }
    let b = problem.coupling();
    let x_hat = (&state.x + &state.y * alpha) / (1.0 + alpha);
    let (uh, ph) = problem.split(&x_hat);
    let (vk, qk) = problem.split(&state.y);
    let gfu = problem.f().gradient(&uh);
    let v = (&vk + &uh * (0.5 * alpha)
        - problem.i_v().solve(&(&gfu + b.transpose() * &qk)) * (alpha / c.mu_f))
        / (1.0 + 0.5 * alpha);
    let r = gs.gradient(&ph) + b * &vk - b * &v * 2.0 + b * problem.i_v().solve(&gfu);
    let q = (&qk + &ph * alpha - problem.i_q().solve(&r) * alpha) / (1.0 + alpha);
    let y = problem.join(&v, &q);
    let x = &x_hat + (&y - &state.y) * (alpha / (1.0 + 0.25 * alpha));
    check_finite(&x, "ATPD iterate")?;
    Ok(AccState { x, y, x_hat })
}

/// `D_f(u, u*) + D_gS(p, p*) + 1/2 (mu_f |e_v|^2_{I_V} + |e_q|^2_{I_Q} - 2 alpha (B e_v, e_q))`
pub fn atpd_lyapunov(
    problem: &SaddleProblem,
    gs: &SchurAugmented,
    state: &AccState,
    alpha: f64,
) -> Result<f64> {
    check_dim(problem.dim(), state.dim())?;
    let (us, ps) = require_x_star(problem)?;
    let (u, p) = problem.split(&state.x);
    let (v, q) = problem.split(&state.y);
    let df = problem
        .f()
        .bregman(&u, us)
        .ok_or(Error::MissingValueOracle("Bregman divergence of f"))?;
    let dg = gs
        .bregman(&p, ps)
        .ok_or(Error::MissingValueOracle("Bregman divergence of g"))?;
    let ev = &v - us;
    let eq = &q - ps;
    let quad = 0.5
        * (problem.consts().mu_f * problem.i_v().norm_sq(&ev) + problem.i_q().norm_sq(&eq))
        - alpha * (problem.coupling() * &ev).dot(&eq);
    Ok(df + dg + quad)
}

/// Rescaling `I_V -> c_v I_V`, `I_Q -> c_q I_Q` and the constants in the new
/// metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PreconScaling {
    pub c_v: f64,
    pub c_q: f64,
    pub mu_f: f64,
    pub l_f: f64,
    pub mu_g: f64,
    pub l_g: f64,
    pub mu_s: f64,
    pub l_s: f64,
    /// `mu_S - (2/3 - mu_g)` after scaling.
    pub lower_margin: f64,
    /// `1 / (2 L_f) - L_S` after scaling.
    pub upper_margin: f64,
}

impl PreconScaling {
    pub fn spectrum(&self) -> SchurSpectrum {
        SchurSpectrum {
            l_s: self.l_s,
            mu_s: self.mu_s,
            kappa_s: self.l_s / self.mu_s,
        }
    }

    pub fn satisfied(&self) -> bool {
        margins_ok(self.lower_margin, self.upper_margin, self.mu_s, self.l_s)
    }
}

fn margins_ok(lower: f64, upper: f64, mu_s: f64, l_s: f64) -> bool {
    lower >= -SCALING_CHECK_RTOL * mu_s.max(1.0) && upper >= -SCALING_CHECK_RTOL * l_s.max(1.0)
}

/// Margins `(mu_S - (2/3 - mu_g), 1/(2 L_f) - L_S)` of the two-sided condition
/// `2/3 - mu_g <= lambda(I_Q^{-1} S) <= 1/(2 L_f)` in the current metrics.
pub fn approx_s_margins(problem: &SaddleProblem, spectrum: &SchurSpectrum) -> (f64, f64) {
    let c = problem.consts();
    let upper = if c.l_f > 0.0 {
        0.5 / c.l_f - spectrum.l_s
    } else {
        f64::INFINITY
    };
    (spectrum.mu_s - (2.0 / 3.0 - c.mu_g), upper)
}

/// Whether the two-sided Schur condition holds up to [`SCALING_CHECK_RTOL`].
pub fn approx_s_condition(problem: &SaddleProblem, spectrum: &SchurSpectrum) -> bool {
    let (lo, hi) = approx_s_margins(problem, spectrum);
    margins_ok(lo, hi, spectrum.mu_s, spectrum.l_s)
}

/// `c_v = 4/3 L_f kappa_S` and `c_q = 3 mu_S / (2 c_v)`, so that `L_f` becomes
/// `3 / (4 kappa_S)` and `mu_S` becomes `2/3`.
pub fn choose_scaling(problem: &SaddleProblem, spectrum: &SchurSpectrum) -> Result<PreconScaling> {
    let c = problem.consts();
    if !(c.l_f > 0.0) {
        return Err(Error::InvalidParameter {
            name: "l_f",
            reason: "scaling recipe needs L_f > 0".into(),
        });
    }
    let c_v = 4.0 / 3.0 * c.l_f * spectrum.kappa_s;
    let c_q = 1.5 * spectrum.mu_s / c_v;
    let cs = c_v * c_q;
    let (mu_s, l_s) = (spectrum.mu_s / cs, spectrum.l_s / cs);
    let (l_f, mu_g) = (c.l_f / c_v, c.mu_g / c_q);
    Ok(PreconScaling {
        c_v,
        c_q,
        mu_f: c.mu_f / c_v,
        l_f,
        mu_g,
        l_g: c.l_g / c_q,
        mu_s,
        l_s,
        lower_margin: mu_s - (2.0 / 3.0 - mu_g),
        upper_margin: 0.5 / l_f - l_s,
    })
}

/// The problem in the rescaled metrics together with its spectrum.
pub fn apply_scaling(
    problem: &SaddleProblem,
    scaling: &PreconScaling,
) -> Result<(SaddleProblem, SchurSpectrum)> {
    Ok((
        problem.rescaled(scaling.c_v, scaling.c_q)?,
        scaling.spectrum(),
    ))
}
