use monosplit_harness::rate::{estimate_rate, fit_loglog};
use proptest::prelude::*;

proptest! {
    #[test]
    fn geometric_sequence_rate_is_recovered(rho in 0.05f64..0.999, e0 in 1e-3f64..1e3, len in 20usize..400) {
        let values: Vec<f64> = (0..len).map(|k| e0 * rho.powi(k as i32)).collect();
        let fit = estimate_rate(&values).unwrap();
        prop_assert!((fit.rho_hat - rho).abs() <= 1e-9 * rho);
        prop_assert!(fit.r_squared > 1.0 - 1e-9);
    }

    #[test]
    fn slower_sequences_fit_larger_rates(rho in 0.1f64..0.95, step in 0.001f64..0.04) {
        let seq = |r: f64| (0..200).map(|k| r.powi(k)).collect::<Vec<_>>();
        let a = estimate_rate(&seq(rho)).unwrap().rho_hat;
        let b = estimate_rate(&seq(rho + step)).unwrap().rho_hat;
        prop_assert!(a < b);
    }

    #[test]
    fn power_law_slope_is_recovered(slope in -2.0f64..3.0, c in 0.1f64..100.0) {
        let x: [f64; 4] = [1e2, 1e3, 1e4, 3e4];
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(slope)).collect();
        let fit = fit_loglog(&x, &y).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-9);
        prop_assert!(fit.ci95.0 <= fit.slope && fit.slope <= fit.ci95.1);
    }
}

#[test]
fn too_short_or_nonpositive_input_is_rejected() {
    assert!(estimate_rate(&[1.0, 0.5, 0.25]).is_err());
    assert!(estimate_rate(&[]).is_err());
    assert!(fit_loglog(&[1.0], &[1.0]).is_err());
    assert!(fit_loglog(&[1.0, 2.0], &[1.0, -1.0]).is_err());
}
