use monosplit_harness::generate::{generate, Instance, ProblemKind, ProblemSpec};
use monosplit_harness::methods::{run_method, RunOptions, MONOTONE_METHODS, SADDLE_METHODS};
use monosplit_harness::mm;
use monosplit_harness::rate::estimate_rate;

fn monotone(kappa_f: f64, seed: u64) -> ProblemSpec {
    ProblemSpec::monotone(ProblemKind::QuadraticPlusSkew, 30, kappa_f, 2.0, seed)
}

fn saddle(seed: u64) -> ProblemSpec {
    ProblemSpec::saddle(ProblemKind::BilinearSaddle, 16, 8, 10.0, 10.0, 4.0, seed)
}

#[test]
fn matrix_market_files_reproduce_generated_instances() {
    let dir = tempfile::tempdir().unwrap();

    let spec = monotone(10.0, 3);
    let Instance::Monotone(p) = generate(&spec).unwrap() else {
        panic!()
    };
    let path = dir.path().join("n.mtx");
    mm::write_dense(p.skew(), &path).unwrap();
    let mut from_file = spec.clone();
    from_file.paths.skew = Some(path);
    let Instance::Monotone(q) = generate(&from_file).unwrap() else {
        panic!()
    };
    assert_eq!(p.skew(), q.skew());
    assert_eq!(p.x_star(), q.x_star());

    let spec = saddle(3);
    let Instance::Saddle(p) = generate(&spec).unwrap() else {
        panic!()
    };
    let path = dir.path().join("b.mtx");
    mm::write_dense(p.coupling(), &path).unwrap();
    let mut from_file = spec.clone();
    from_file.paths.coupling = Some(path);
    let Instance::Saddle(q) = generate(&from_file).unwrap() else {
        panic!()
    };
    assert_eq!(p.coupling(), q.coupling());
    assert_eq!(p.x_star(), q.x_star());

    let mut wrong = monotone(10.0, 3);
    wrong.dim = Some(31);
    wrong.paths.skew = from_file.paths.coupling.clone();
    assert!(generate(&wrong).is_err());
}

#[test]
fn seeded_runs_are_bitwise_reproducible() {
    let opts = RunOptions {
        max_iter: 300,
        ..Default::default()
    };
    let (quadratic, sad) = (monotone(20.0, 7), saddle(7));
    let shifted = ProblemSpec::monotone(ProblemKind::ShiftedSkewLinear, 30, 1.0, 2.0, 7);
    let runs = MONOTONE_METHODS
        .iter()
        .map(|m| {
            (
                if m.starts_with("aor") {
                    &shifted
                } else {
                    &quadratic
                },
                m,
            )
        })
        .chain(SADDLE_METHODS.iter().map(|m| (&sad, m)));
    for (spec, m) in runs {
        let a = run_method(&generate(spec).unwrap(), m, &opts).unwrap();
        let b = run_method(&generate(spec).unwrap(), m, &opts).unwrap();
        assert_eq!(a.x, b.x, "{m}");
        assert_eq!(a.trace.entries, b.trace.entries, "{m}");
    }
}

#[test]
fn fitted_rate_grows_with_condition_number() {
    for method in ["gss", "imex", "explicit_euler"] {
        let rates: Vec<f64> = [10.0, 100.0, 1000.0]
            .iter()
            .map(|&k| {
                let out = run_method(
                    &generate(&monotone(k, 1)).unwrap(),
                    method,
                    &RunOptions::default(),
                )
                .unwrap();
                estimate_rate(&out.trace.lyapunov_values()).unwrap().rho_hat
            })
            .collect();
        assert!(rates.windows(2).all(|w| w[0] < w[1]), "{method}: {rates:?}");
        assert!(rates.iter().all(|&r| r < 1.0), "{method}: {rates:?}");
    }
}
