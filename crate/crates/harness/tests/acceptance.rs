//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use monosplit_harness::bench::criterion;
use monosplit_harness::properties::run_properties;
use monosplit_harness::report::Report;
use monosplit_harness::Result;

const TITLES: [&str; 9] = [
    "AOR per-step ratio and error bound on shifted skew systems",
    "GSS per-step ratio on quadratic-plus-skew instances",
    "IMEX per-step ratio and sqrt(kappa) iteration scaling vs GSS and GD",
    "inexact IMEX ratio with the residual rule, violated without it",
    "explicit AGSS per-step ratio",
    "saddle AGSS / IMEX / prox ratios and KKT limits",
    "GSS-TPD and ATPD ratios, ATPD sqrt(kappa) scaling with I_Q = S",
    "HSS contraction and symmetric-solve census",
    "property suites",
];

fn run(n: u32) -> Result<Report> {
    if n == 9 {
        run_properties()
    } else {
        criterion(n)
    }
}

fn main() -> ExitCode {
    let results: Vec<(Result<Report>, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = (1..=9u32)
            .map(|n| {
                s.spawn(move || {
                    let t = Instant::now();
                    let r = run(n);
                    (r, t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion thread"))
            .collect()
    });
    let mut all = true;
    for (i, (res, secs)) in results.iter().enumerate() {
        let n = i + 1;
        match res {
            Ok(r) if r.passed() => {
                println!(
                    "criterion {n}: PASS ({} assertions, {secs:.1}s) {}",
                    r.assertions.len(),
                    TITLES[i]
                );
            }
            Ok(r) => {
                all = false;
                println!(
                    "criterion {n}: FAIL ({} of {} assertions, {secs:.1}s) {}",
                    r.failures().len(),
                    r.assertions.len(),
                    TITLES[i]
                );
                for a in r.failures() {
                    println!(
                        "    {}: observed {:e}, expected {:e}, tolerance {:e}{}",
                        a.name,
                        a.observed,
                        a.expected,
                        a.tolerance,
                        a.detail
                            .as_ref()
                            .map(|d| format!(" ({d})"))
                            .unwrap_or_default()
                    );
                }
            }
            Err(e) => {
                all = false;
                println!("criterion {n}: FAIL (error: {e}) {}", TITLES[i]);
            }
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
