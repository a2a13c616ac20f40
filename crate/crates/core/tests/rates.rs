//! Per-step Lyapunov contraction on small random instances with `x* = 0`.

mod common;

use common::*;
use monosplit::agss::{
    agss_rate, explicit_step_bound, solve_agss, AgssConfig, AgssScheme, InnerMethod,
};
use monosplit::flow::{solve_flow, FlowMethod, StepConfig};
use monosplit::saddle::{
    saddle_step_choice, solve_saddle, SaddleConfig, SaddleInner, SaddleScheme,
};
use monosplit::{MonotoneProblem, Vector};
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-12;
const STEPS: usize = 400;

fn flow_config() -> StepConfig {
    StepConfig {
        max_iter: STEPS,
        stop_tol: 1e-250,
        ..Default::default()
    }
}

fn agss_config() -> AgssConfig {
    AgssConfig {
        max_iter: STEPS,
        stop_tol: 1e-250,
        ..Default::default()
    }
}

fn saddle_config() -> SaddleConfig {
    SaddleConfig {
        max_iter: STEPS,
        stop_tol: 1e-250,
        ..Default::default()
    }
}

fn instance(seed: u64, n: usize, kappa: f64, skew_scale: f64) -> (MonotoneProblem, Vector) {
    let mut r = rng(seed);
    let p = homogeneous(&quadratic_skew(n, kappa, skew_scale, &mut r));
    let x0 = gaussian(n, &mut r);
    (p, x0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn flow_schemes_contract(seed in any::<u64>(), n in 2usize..16, kappa in 1.0f64..200.0, s in 0.1f64..20.0) {
        let (p, x0) = instance(seed, n, kappa, s);
        for method in [FlowMethod::ExplicitEuler, FlowMethod::Gss] {
            let (_, trace) = solve_flow(&p, &method, &flow_config(), &x0).unwrap();
            prop_assert!(trace.guaranteed);
            let rate = 1.0 / (1.0 + trace_alpha(&p, &method) * p.mu());
            let excess = max_ratio_excess(&trace.lyapunov_values(), rate);
            prop_assert!(excess <= TOL, "{}: excess {excess:e}", method.name());
        }
    }

    #[test]
    fn aor_contracts(seed in any::<u64>(), n in 2usize..16, mu in 0.1f64..10.0, s in 0.1f64..50.0) {
        let mut r = rng(seed);
        let p = MonotoneProblem::shifted_skew(mu, skew(n, s, &mut r), Vector::zeros(n))
            .unwrap()
            .with_x_star(Vector::zeros(n))
            .unwrap();
        let x0 = gaussian(n, &mut r);
        let (_, trace) = solve_flow(&p, &FlowMethod::Aor, &flow_config(), &x0).unwrap();
        let rate = 1.0 / (1.0 + trace_alpha(&p, &FlowMethod::Aor) * mu);
        prop_assert!(max_ratio_excess(&trace.lyapunov_values(), rate) <= TOL);
    }

    #[test]
    fn accelerated_schemes_contract(seed in any::<u64>(), n in 2usize..16, kappa in 1.0f64..500.0, s in 0.1f64..20.0) {
        let (p, x0) = instance(seed, n, kappa, s);
        let l_bsym = monosplit::split_skew(p.skew()).unwrap().l_bsym();
        for scheme in [AgssScheme::Imex { inner: InnerMethod::Direct, tol: 1e-14 }, AgssScheme::Explicit] {
            let (_, trace) = solve_agss(&p, &scheme, &agss_config(), &x0).unwrap();
            prop_assert!(trace.guaranteed);
            let alpha = match scheme {
                AgssScheme::Explicit => explicit_step_bound(p.mu(), p.l_f(), l_bsym),
                _ => (p.mu() / p.l_f()).sqrt(),
            };
            let excess = max_ratio_excess(&trace.lyapunov_values(), agss_rate(&scheme, alpha));
            prop_assert!(excess <= TOL, "{scheme:?}: excess {excess:e}");
        }
    }

    #[test]
    fn saddle_schemes_contract(seed in any::<u64>(), m in 2usize..12, kf in 1.0f64..50.0, kg in 1.0f64..50.0) {
        let mut r = rng(seed);
        let n = r.random_range(1..=m);
        let p = homogeneous_saddle(&saddle(m, n, kf, kg, false, true, &mut r));
        let (u0, p0) = (gaussian(m, &mut r), gaussian(n, &mut r));
        let schemes = [
            SaddleScheme::Agss,
            SaddleScheme::Imex { inner: SaddleInner::Direct, tol: 1e-14 },
            SaddleScheme::Prox,
        ];
        for scheme in &schemes {
            let choice = saddle_step_choice(&p, scheme, &saddle_config()).unwrap();
            prop_assert!(choice.guaranteed);
            let (_, _, trace) = solve_saddle(&p, scheme, &saddle_config(), &u0, &p0).unwrap();
            let excess = max_ratio_excess(&trace.lyapunov_values(), choice.rate);
            prop_assert!(excess <= TOL, "{}: excess {excess:e}", scheme.name());
        }
    }
}

/// Default step size of a flow scheme, read back from the solver's choice.
fn trace_alpha(p: &MonotoneProblem, method: &FlowMethod) -> f64 {
    let split = monosplit::split_skew(p.skew()).unwrap();
    match method {
        FlowMethod::Aor => monosplit::flow::aor_default_alpha(p.mu(), split.l_bsym()),
        FlowMethod::Gss => monosplit::flow::gss_default_alpha(p.l_f(), split.l_bsym()),
        _ => {
            let est = monosplit::spectral::condition_numbers(p, &split).unwrap();
            p.mu() / (est.l_a * est.l_a)
        }
    }
}
