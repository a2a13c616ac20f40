use std::path::Path;
use std::process::{Command, Output};

use monosplit_harness::report::Report;
use monosplit_harness::trace_io::read_trace;

const QPS: &str = r#"{"kind":"quadratic_plus_skew","dim":20,"kappa_f":10,"kappa_bsym":1,"seed":0}"#;

fn monosplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monosplit"))
        .args(args)
        .output()
        .expect("spawn monosplit")
}

fn write_problem(dir: &Path, json: &str) -> String {
    let p = dir.join("problem.json");
    std::fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn solve_writes_trace_with_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), QPS);
    let trace = dir.path().join("t.csv");
    let out = monosplit(&[
        "solve",
        "--problem",
        &problem,
        "--method",
        "gss",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "k,lyapunov,err_norm,residual,inner_iters,inner_residual"
    );
    let entries = read_trace(text.as_bytes()).unwrap();
    assert_eq!(entries[0].k, 0);
    assert!(entries.windows(2).all(|w| w[1].k == w[0].k + 1));
    assert!(entries.last().unwrap().residual <= 1e-10);
}

#[test]
fn unconverged_solve_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), QPS);
    let out = monosplit(&[
        "solve",
        "--problem",
        &problem,
        "--method",
        "gss",
        "--max-iter",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), QPS);
    for args in [
        vec!["solve", "--problem", problem.as_str(), "--method", "nope"],
        vec![
            "solve",
            "--problem",
            problem.as_str(),
            "--method",
            "gss",
            "--alpha",
            "-1",
        ],
        vec![
            "solve",
            "--problem",
            problem.as_str(),
            "--method",
            "explicit_euler",
            "--alpha",
            "100",
        ],
        vec!["solve", "--problem", problem.as_str(), "--method", "atpd"],
        vec!["bench", "--suite", "nope"],
        vec!["frobnicate"],
    ] {
        assert_eq!(monosplit(&args).status.code(), Some(2), "{args:?}");
    }
    let bad = write_problem(
        dir.path(),
        r#"{"kind":"quadratic_plus_skew","dim":0,"seed":0}"#,
    );
    assert_eq!(
        monosplit(&["solve", "--problem", &bad, "--method", "gss"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), QPS);
    let out = monosplit(&[
        "solve",
        "--problem",
        &problem,
        "--method",
        "explicit_euler",
        "--alpha",
        "100",
        "--allow-unguaranteed",
        "--max-iter",
        "5000",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bench_report_records() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = monosplit(&["bench", "--suite", "", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: Report = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(report.passed() && report.assertions.is_empty());

    let out = monosplit(&["bench", "--suite", "imex", "--out", path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let records = value["assertions"].as_array().unwrap();
    assert!(!records.is_empty());
    for r in records {
        for field in ["name", "expected", "observed", "tolerance", "pass"] {
            assert!(r.get(field).is_some(), "missing {field} in {r}");
        }
    }
}

#[test]
fn compare_prints_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(
        dir.path(),
        r#"{"kind":"bilinear_saddle","m":12,"n":6,"kappa_f":10,"kappa_g":10,"kappa_s":3,"seed":1}"#,
    );
    let out = monosplit(&[
        "compare",
        "--problem",
        &problem,
        "--methods",
        "agss_saddle,imex_saddle,atpd",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 4);
    assert!(stdout.lines().nth(3).unwrap().starts_with("atpd"));
}

#[test]
fn sweep_writes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("s.csv");
    let out = monosplit(&[
        "sweep",
        "--kind",
        "quadratic_plus_skew",
        "--kappa-list",
        "10,100",
        "--method",
        "imex",
        "--dim",
        "20",
        "--seeds",
        "0",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 3);
}
