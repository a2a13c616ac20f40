//! Method names accepted by the CLI and dispatch onto the core drivers.

use monosplit::agss::{solve_agss, AgssConfig, AgssScheme, InexactRule, InnerMethod};
use monosplit::flow::{solve_flow, FlowMethod, StepConfig, Variant};
use monosplit::saddle::{solve_saddle, SaddleConfig, SaddleInner, SaddleScheme};
use monosplit::{ConvergenceTrace, Vector};

use crate::error::{HarnessError, Result};
use crate::generate::Instance;

pub const MONOTONE_METHODS: &[&str] = &[
    "explicit_euler",
    "implicit_euler",
    "aor",
    "aor_backward",
    "gss",
    "gss_backward",
    "hss",
    "imex",
    "imex_cg",
    "imex_aor",
    "imex_inexact",
    "agss_explicit",
];

pub const SADDLE_METHODS: &[&str] = &[
    "agss_saddle",
    "imex_saddle",
    "imex_saddle_cg",
    "imex_saddle_aor",
    "prox_saddle",
    "gss_tpd",
    "atpd",
];

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub alpha: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub allow_unguaranteed: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            alpha: None,
            max_iter: 100_000,
            tol: 1e-10,
            allow_unguaranteed: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub method: String,
    /// Final iterate; `(u, p)` stacked for saddle problems.
    pub x: Vector,
    pub trace: ConvergenceTrace,
}

impl RunOutcome {
    pub fn converged(&self, tol: f64) -> bool {
        self.trace.entries.last().is_some_and(|e| e.residual <= tol)
    }
}

fn unknown(method: &str, kind: &str, list: &[&str]) -> HarnessError {
    HarnessError::Usage(format!(
        "unknown {kind} method `{method}`; expected one of {}",
        list.join(", ")
    ))
}

/// Runs `method` from the zero initial guess.
pub fn run_method(instance: &Instance, method: &str, opts: &RunOptions) -> Result<RunOutcome> {
    match instance {
        Instance::Monotone(p) => {
            let x0 = Vector::zeros(p.dim());
            let flow = |m: FlowMethod, variant: Variant| -> Result<(Vector, ConvergenceTrace)> {
                let cfg = StepConfig {
                    alpha: opts.alpha,
                    variant,
                    max_iter: opts.max_iter,
                    stop_tol: opts.tol,
                    allow_unguaranteed: opts.allow_unguaranteed,
                    relaxed_explicit_bound: false,
                };
                Ok(solve_flow(p, &m, &cfg, &x0)?)
            };
            let agss = |s: AgssScheme| -> Result<(Vector, ConvergenceTrace)> {
                let cfg = AgssConfig {
                    alpha: opts.alpha,
                    max_iter: opts.max_iter,
                    stop_tol: opts.tol,
                    allow_unguaranteed: opts.allow_unguaranteed,
                    ..Default::default()
                };
                Ok(solve_agss(p, &s, &cfg, &x0)?)
            };
            let inner_tol = 1e-13;
            let (x, trace) = match method {
                "explicit_euler" => flow(FlowMethod::ExplicitEuler, Variant::Forward)?,
                "implicit_euler" => flow(FlowMethod::ImplicitEuler(None), Variant::Forward)?,
                "aor" => flow(FlowMethod::Aor, Variant::Forward)?,
                "aor_backward" => flow(FlowMethod::Aor, Variant::Backward)?,
                "gss" => flow(FlowMethod::Gss, Variant::Forward)?,
                "gss_backward" => flow(FlowMethod::Gss, Variant::Backward)?,
                "hss" => flow(FlowMethod::Hss, Variant::Forward)?,
                "imex" => agss(AgssScheme::Imex {
                    inner: InnerMethod::default_for(p.dim()),
                    tol: inner_tol,
                })?,
                "imex_cg" => agss(AgssScheme::Imex {
                    inner: InnerMethod::CgNormal,
                    tol: inner_tol,
                })?,
                "imex_aor" => agss(AgssScheme::Imex {
                    inner: InnerMethod::AorInner,
                    tol: inner_tol,
                })?,
                "imex_inexact" => agss(AgssScheme::Inexact {
                    inner: InnerMethod::AorInner,
                    rule: InexactRule::Criterion,
                })?,
                "agss_explicit" => agss(AgssScheme::Explicit)?,
                _ if SADDLE_METHODS.contains(&method) => {
                    return Err(HarnessError::Usage(format!(
                        "`{method}` needs a saddle problem"
                    )))
                }
                _ => return Err(unknown(method, "monotone", MONOTONE_METHODS)),
            };
            Ok(RunOutcome {
                method: method.to_string(),
                x,
                trace,
            })
        }
        Instance::Saddle(p) => {
            let scheme = match method {
                "agss_saddle" => SaddleScheme::Agss,
                "imex_saddle" => SaddleScheme::Imex {
                    inner: SaddleInner::Direct,
                    tol: 1e-13,
                },
                "imex_saddle_cg" => SaddleScheme::Imex {
                    inner: SaddleInner::SchurCg,
                    tol: 1e-13,
                },
                "imex_saddle_aor" => SaddleScheme::Imex {
                    inner: SaddleInner::AorInner,
                    tol: 1e-13,
                },
                "prox_saddle" => SaddleScheme::Prox,
                "gss_tpd" => SaddleScheme::TpdGss,
                "atpd" => SaddleScheme::Atpd,
                _ if MONOTONE_METHODS.contains(&method) => {
                    return Err(HarnessError::Usage(format!(
                        "`{method}` needs a monotone problem"
                    )))
                }
                _ => return Err(unknown(method, "saddle", SADDLE_METHODS)),
            };
            let cfg = SaddleConfig {
                alpha: opts.alpha,
                max_iter: opts.max_iter,
                stop_tol: opts.tol,
                allow_unguaranteed: opts.allow_unguaranteed,
                ..Default::default()
            };
            let (u, q, trace) = solve_saddle(
                p,
                &scheme,
                &cfg,
                &Vector::zeros(p.m()),
                &Vector::zeros(p.n()),
            )?;
            Ok(RunOutcome {
                method: method.to_string(),
                x: p.join(&u, &q),
                trace,
            })
        }
    }
}
