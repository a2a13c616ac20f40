//! Driver iterating one of the saddle schemes until the KKT residual is small.

use crate::agss::{AccState, DEFAULT_INNER_MAX_ITER};
use crate::error::{check_dim, Error, Result};
use crate::flow::clamp_roundoff;
use crate::linalg::Vector;
use crate::trace::{ConvergenceTrace, DivergenceGuard, OpCensus, TraceEntry};

use super::problem::{schur_spectrum, SaddleProblem, SchurSpectrum};
use super::schemes::{
    agss_saddle_lyapunov, agss_saddle_step, agss_saddle_step_bound, imex_saddle_guaranteed,
    imex_saddle_lyapunov, imex_saddle_step, prox_saddle_lyapunov, prox_saddle_step,
    prox_saddle_step_bound, SaddleInner, SaddleInnerSolver,
};
use super::tpd::{
    apply_scaling, approx_s_condition, approx_s_margins, atpd_lyapunov, atpd_step, atpd_step_bound,
    build_gs, choose_scaling, tpd_gss_lyapunov, tpd_gss_mu, tpd_gss_step, tpd_gss_step_bound,
};

/// Default GSS-TPD step as a fraction of its strict upper bound.
pub const TPD_GSS_DEFAULT_FRACTION: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SaddleScheme {
    Agss,
    Imex { inner: SaddleInner, tol: f64 },
    Prox,
    TpdGss,
    Atpd,
}

impl SaddleScheme {
    pub fn name(&self) -> &'static str {
        match self {
            SaddleScheme::Agss => "agss_saddle",
            SaddleScheme::Imex { .. } => "imex_saddle",
            SaddleScheme::Prox => "prox_saddle",
            SaddleScheme::TpdGss => "gss_tpd",
            SaddleScheme::Atpd => "atpd",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SaddleConfig {
    pub alpha: Option<f64>,
    pub max_iter: usize,
    pub stop_tol: f64,
    pub allow_unguaranteed: bool,
    pub inner_max_iter: usize,
    /// Rescale `I_V`, `I_Q` with [`choose_scaling`] when a TPD scheme's
    /// precondition fails, instead of returning an error.
    pub auto_scale: bool,
}

impl Default for SaddleConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            max_iter: 10_000,
            stop_tol: 1e-10,
            allow_unguaranteed: false,
            inner_max_iter: DEFAULT_INNER_MAX_ITER,
            auto_scale: true,
        }
    }
}

/// Step size, guarantee flag and rate chosen for a scheme, together with the
/// (possibly rescaled) problem the scheme runs on.
#[derive(Clone, Debug)]
pub struct SaddleStepChoice {
    pub alpha: f64,
    pub guaranteed: bool,
    pub rate: f64,
    pub problem: SaddleProblem,
    pub spectrum: SchurSpectrum,
    pub warnings: Vec<String>,
}

pub fn saddle_step_choice(
    problem: &SaddleProblem,
    scheme: &SaddleScheme,
    config: &SaddleConfig,
) -> Result<SaddleStepChoice> {
    let spectrum = schur_spectrum(problem)?;
    let c = *problem.consts();
    let mut warnings = Vec::new();
    let (alpha, guaranteed, rate, problem, spectrum) = match scheme {
        SaddleScheme::Agss => {
            let bound = agss_saddle_step_bound(problem, &spectrum);
            let a = config.alpha.unwrap_or(bound);
            (
                a,
                a <= bound * (1.0 + 1e-12),
                1.0 / (1.0 + 0.5 * a),
                problem.clone(),
                spectrum,
            )
        }
        SaddleScheme::Imex { .. } => {
            let a = config
                .alpha
                .unwrap_or_else(|| 1.0 / (c.l_f / c.mu_f).sqrt().max((c.l_g / c.mu_g).sqrt()));
            (
                a,
                imex_saddle_guaranteed(problem, a),
                1.0 / (1.0 + a),
                problem.clone(),
                spectrum,
            )
        }
        SaddleScheme::Prox => {
            let bound = prox_saddle_step_bound(problem, &spectrum);
            let a = config.alpha.unwrap_or(0.5 * bound);
            (a, a < bound, 1.0 / (1.0 + a), problem.clone(), spectrum)
        }
        SaddleScheme::TpdGss => {
            let (p, s) = if c.l_f >= 2.0 {
                let msg = format!("L_f = {} >= 2 in the I_V metric", c.l_f);
                if !config.auto_scale {
                    return Err(Error::StepSize(msg));
                }
                let sc = choose_scaling(problem, &spectrum)?;
                warnings.push(format!(
                    "{msg}; rescaled with c_v = {:e}, c_q = {:e}",
                    sc.c_v, sc.c_q
                ));
                apply_scaling(problem, &sc)?
            } else {
                (problem.clone(), spectrum)
            };
            let (_, k) = build_gs(&p, &s)?;
            let bound = tpd_gss_step_bound(&p, &s, &k);
            let a = config.alpha.unwrap_or(TPD_GSS_DEFAULT_FRACTION * bound);
            let mu = tpd_gss_mu(&p, &k);
            (
                a,
                a < bound && k.mu_g_plus > 0.0,
                1.0 / (1.0 + 0.5 * mu * a),
                p,
                s,
            )
        }
        SaddleScheme::Atpd => {
            let (p, s) = if approx_s_condition(problem, &spectrum) {
                (problem.clone(), spectrum)
            } else {
                let (lo, hi) = approx_s_margins(problem, &spectrum);
                let msg =
                    format!("Schur condition fails (lower margin {lo:e}, upper margin {hi:e})");
                if !config.auto_scale {
                    return Err(Error::StepSize(msg));
                }
                let sc = choose_scaling(problem, &spectrum)?;
                if !sc.satisfied() {
                    return Err(Error::StepSize(format!(
                        "{msg}; rescaling leaves margins {:e}, {:e}",
                        sc.lower_margin, sc.upper_margin
                    )));
                }
                warnings.push(format!(
                    "{msg}; rescaled with c_v = {:e}, c_q = {:e}",
                    sc.c_v, sc.c_q
                ));
                apply_scaling(problem, &sc)?
            };
            let (_, k) = build_gs(&p, &s)?;
            let bound = atpd_step_bound(&p, &s, &k);
            let a = config.alpha.unwrap_or(bound);
            (a, a <= bound * (1.0 + 1e-12), 1.0 / (1.0 + 0.25 * a), p, s)
        }
    };
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive and finite, got {alpha}"),
        });
    }
    Ok(SaddleStepChoice {
        alpha,
        guaranteed,
        rate,
        problem,
        spectrum,
        warnings,
    })
}

/// Iterates a saddle scheme from `u0`, `p0` (with `y_0 = x_0` for the
/// accelerated schemes) until the KKT residual falls below `stop_tol`.
///
/// With `(u*, p*)` known the trace records the scheme's Lyapunov functional
/// when the step-size guarantee holds and `1/2 |x - x*|^2` otherwise; without
/// it, the KKT residual.
pub fn solve_saddle(
    problem: &SaddleProblem,
    scheme: &SaddleScheme,
    config: &SaddleConfig,
    u0: &Vector,
    p0: &Vector,
) -> Result<(Vector, Vector, ConvergenceTrace)> {
    check_dim(problem.m(), u0.len())?;
    check_dim(problem.n(), p0.len())?;
    if config.max_iter == 0 || !(config.stop_tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "config",
            reason: "max_iter must be positive and stop_tol positive".into(),
        });
    }
    let choice = saddle_step_choice(problem, scheme, config)?;
    let alpha = choice.alpha;
    let guaranteed = choice.guaranteed;
    let p = &choice.problem;
    let mut trace = ConvergenceTrace::new(guaranteed);
    trace.warnings.extend(choice.warnings.iter().cloned());
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
    let gs = match scheme {
        SaddleScheme::TpdGss | SaddleScheme::Atpd => Some(build_gs(p, &choice.spectrum)?.0),
        _ => None,
    };
    let inner = match scheme {
        SaddleScheme::Imex { inner, tol } => {
            let mut s = SaddleInnerSolver::new(*inner, *tol, &choice.spectrum);
            s.max_iter = config.inner_max_iter;
            Some(s)
        }
        _ => None,
    };
    let x_star = p.x_star_joint();
    if x_star.is_none() {
        trace
            .warnings
            .push("saddle point unknown; recording the KKT residual".into());
    }
    let value = |s: &AccState, residual: f64, scale: f64| -> Result<f64> {
        let Some(xs) = x_star.as_ref() else {
            return Ok(residual);
        };
        if !guaranteed {
            return Ok(0.5 * (&s.x - xs).norm_squared());
        }
        let v = match scheme {
            SaddleScheme::Agss => agss_saddle_lyapunov(p, s, alpha)?,
            SaddleScheme::Imex { .. } => imex_saddle_lyapunov(p, s)?,
            SaddleScheme::Prox => prox_saddle_lyapunov(p, &s.x, alpha)?,
            SaddleScheme::TpdGss => tpd_gss_lyapunov(p, gs.as_ref().expect("g_S"), &s.x, alpha)?,
            SaddleScheme::Atpd => atpd_lyapunov(p, gs.as_ref().expect("g_S"), s, alpha)?,
        };
        Ok(clamp_roundoff(v, scale))
    };
    let kkt = |x: &Vector| {
        let (u, q) = p.split(x);
        p.kkt_residual(&u, &q)
    };
    let err = |x: &Vector| x_star.as_ref().map(|xs| (x - xs).norm());

    let mut state = AccState::at(&p.join(u0, p0));
    let mut residual = kkt(&state.x);
    let e0 = value(&state, residual, 0.0)?;
    trace.push(TraceEntry::new(0, e0, residual).with_err(err(&state.x)))?;
    let mut guard = DivergenceGuard::new(e0);
    let mut prev = e0;
    let mut census = OpCensus::default();
    for k in 1..=config.max_iter {
        if residual <= config.stop_tol {
            break;
        }
        let mut report = None;
        state = match scheme {
            SaddleScheme::Agss => {
                census.gradient_evals += 2;
                census.matvecs += 3;
                agss_saddle_step(p, &state, alpha)?
            }
            SaddleScheme::Imex { .. } => {
                census.gradient_evals += 2;
                let (s, r) =
                    imex_saddle_step(p, inner.as_ref().expect("inner solver"), &state, alpha)?;
                report = Some(r);
                s
            }
            SaddleScheme::Prox => {
                census.matvecs += 2;
                AccState::at(&prox_saddle_step(p, &state.x, alpha)?)
            }
            SaddleScheme::TpdGss => {
                census.gradient_evals += 3;
                census.matvecs += 5;
                AccState::at(&tpd_gss_step(
                    p,
                    gs.as_ref().expect("g_S"),
                    &state.x,
                    alpha,
                )?)
            }
            SaddleScheme::Atpd => {
                census.gradient_evals += 2;
                census.matvecs += 6;
                atpd_step(p, gs.as_ref().expect("g_S"), &state, alpha)?
            }
        };
        residual = kkt(&state.x);
        let e = value(&state, residual, e0)?;
        guard.observe(k, prev, e, guaranteed && x_star.is_some())?;
        let mut entry = TraceEntry::new(k, e, residual).with_err(err(&state.x));
        if let Some(r) = report {
            if !r.converged {
                trace
                    .warnings
                    .push(format!("inner solve not converged at step {k}"));
            }
            census.matvecs += 2 * r.iterations.max(1);
            entry = entry.with_inner(r.iterations, r.residual_norm);
        }
        trace.push(entry)?;
        prev = e;
    }
    trace.census = census;
    let (u, q) = p.split(&state.x);
    Ok((u, q, trace))
}
