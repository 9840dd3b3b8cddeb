//! Drives the built binary end to end and reloads everything it writes.

use std::path::Path;
use std::process::{Command, Output};

use rsh_lab::{
    read_rate_bounds_csv, AnalysisReport, Certificate, DriftFunction, DriftReport, RunStats,
};
use tempfile::TempDir;

fn rsh_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsh-lab"))
        .args(args)
        .env_remove("RSH_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn out_arg(dir: &TempDir) -> String {
    dir.path().to_str().unwrap().to_owned()
}

fn write_drift(dir: &Path, name: &str, d: Vec<f64>) -> String {
    let path = dir.join(name);
    std::fs::write(&path, DriftFunction::new(d).unwrap().to_json_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn example_one() -> Vec<f64> {
    let c = 100.0 * 101.0 / 99.0;
    (0..100)
        .map(|x: usize| c * (100 - x.max(1)) as f64)
        .collect()
}

/// Reads `key=value` from a summary line.
fn field(text: &str, key: &str) -> String {
    text.split_whitespace()
        .find_map(|w| w.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text:?}"))
        .to_owned()
}

#[test]
fn analyze_square_writes_reloadable_files() {
    let dir = TempDir::new().unwrap();
    let o = rsh_lab(&[
        "analyze",
        "--builtin",
        "square",
        "--algo",
        "rsh1",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = AnalysisReport::load(&dir.path().join("report.json")).unwrap();
    assert!(report.convergent);
    assert!((report.rho - 0.99).abs() < 1e-10);
    let text = std::fs::read_to_string(dir.path().join("rate_bounds.csv")).unwrap();
    assert!(text.starts_with("t,exact_rate,finite_lower,finite_upper\n"));
    let rows = read_rate_bounds_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.first().unwrap().t, 1);
    assert_eq!(rows.last().unwrap().t, 10_000);
    for r in rows {
        assert!(r.finite_lower <= r.exact_rate + 1e-12);
        assert!(r.exact_rate <= r.finite_upper.unwrap() + 1e-12);
    }
}

#[test]
fn analyze_trap_with_hitting_fails_the_precondition() {
    let dir = TempDir::new().unwrap();
    let o = rsh_lab(&[
        "analyze",
        "--builtin",
        "shifted_square",
        "--algo",
        "rsh1",
        "--hitting",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 2);
    assert!(
        stderr(&o).contains("stuck states (no path to an optimum): 0-48"),
        "{}",
        stderr(&o)
    );
    // the report is still written
    let report = AnalysisReport::load(&dir.path().join("report.json")).unwrap();
    assert!(!report.convergent);
    assert_eq!(report.stuck_states[0], 0);
}

#[test]
fn analyze_trap_without_hitting_succeeds() {
    let dir = TempDir::new().unwrap();
    let o = rsh_lab(&[
        "analyze",
        "--builtin",
        "shifted_square",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("convergent=false"));
}

#[test]
fn analyze_uniform_mean_hitting_time() {
    let dir = TempDir::new().unwrap();
    let o = rsh_lab(&[
        "analyze",
        "--builtin",
        "square",
        "--algo",
        "rsh1",
        "--hitting",
        "--init",
        "uniform",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0);
    let report = AnalysisReport::load(&dir.path().join("report.json")).unwrap();
    assert!((report.mean_hitting_time.unwrap() - 5000.0).abs() < 1e-6);
    let printed: f64 = field(&stdout(&o), "mean_hitting_time").parse().unwrap();
    assert!((printed - 5000.0).abs() < 1e-6);
}

#[test]
fn analyze_problem_file_errors_name_the_field() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"domain_size": 3, "fitness": [1, 2]}"#).unwrap();
    let o = rsh_lab(&[
        "analyze",
        "--problem",
        bad.to_str().unwrap(),
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 1);
    assert!(
        stderr(&o).contains("fitness: expected 3 values"),
        "{}",
        stderr(&o)
    );

    std::fs::write(
        &bad,
        r#"{"domain_size": 3, "fitness": [1, 2, 3], "extra": 0}"#,
    )
    .unwrap();
    let o = rsh_lab(&["analyze", "--problem", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("extra"), "{}", stderr(&o));

    let o = rsh_lab(&["analyze", "--problem", "/nonexistent/p.json"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn analyze_custom_problem_file() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("p.json");
    std::fs::write(&p, r#"{"domain_size": 5, "fitness": [0, 1, 2, 3, 4]}"#).unwrap();
    let o = rsh_lab(&[
        "analyze",
        "--problem",
        p.to_str().unwrap(),
        "--init",
        "0",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = AnalysisReport::load(&dir.path().join("report.json")).unwrap();
    // four improving steps at rate 0.01
    assert!((report.mean_hitting_time.unwrap() - 400.0).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&rsh_lab(&[])), 1);
    assert_eq!(code(&rsh_lab(&["analyze"])), 1);
    assert_eq!(
        code(&rsh_lab(&[
            "analyze",
            "--builtin",
            "square",
            "--problem",
            "x.json"
        ])),
        1
    );
    assert_eq!(code(&rsh_lab(&["analyze", "--builtin", "cube"])), 1);
    assert_eq!(
        code(&rsh_lab(&[
            "analyze",
            "--builtin",
            "square",
            "--algo",
            "rsh3"
        ])),
        1
    );
    assert_eq!(
        code(&rsh_lab(&[
            "analyze",
            "--builtin",
            "square",
            "--init",
            "101"
        ])),
        1
    );
    assert_eq!(
        code(&rsh_lab(&[
            "analyze",
            "--builtin",
            "square",
            "--rate-horizon",
            "0"
        ])),
        1
    );
    assert_eq!(code(&rsh_lab(&["--help"])), 0);
}

#[test]
fn simulate_rsh1_matches_exact_hitting_time() {
    let dir = TempDir::new().unwrap();
    let o = rsh_lab(&[
        "simulate",
        "--builtin",
        "square",
        "--algo",
        "rsh1",
        "--init",
        "20",
        "--runs",
        "100000",
        "--seed",
        "7",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o);
    let mean: f64 = field(&line, "mean_tau").parse().unwrap();
    assert!(((mean - 8000.0) / 8000.0).abs() <= 0.02, "{line}");
    assert_eq!(field(&line, "censored"), "0");
    let stats = RunStats::read_files(dir.path()).unwrap();
    assert_eq!(stats.runs, 100_000);
    let rate =
        RunStats::read_rate_csv(std::fs::File::open(dir.path().join("rate.csv")).unwrap()).unwrap();
    assert_eq!(rate, rsh_lab::empirical_average_rate(&stats));
}

#[test]
fn simulate_trap_censors_every_run() {
    let dir = TempDir::new().unwrap();
    let o = rsh_lab(&[
        "simulate",
        "--builtin",
        "shifted_square",
        "--algo",
        "rsh1",
        "--init",
        "20",
        "--runs",
        "1000",
        "--max-iter",
        "100000",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(field(&stdout(&o), "censored"), "1000");
    let stats = RunStats::read_files(dir.path()).unwrap();
    assert!(stats.opt_counts.iter().all(|&c| c == 0));
}

#[test]
fn simulate_rejects_invalid_flags() {
    let o = rsh_lab(&["simulate", "--builtin", "square", "--runs", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("runs"));
    assert_eq!(
        code(&rsh_lab(&[
            "simulate",
            "--builtin",
            "square",
            "--stride",
            "0"
        ])),
        1
    );
    assert_eq!(
        code(&rsh_lab(&[
            "simulate",
            "--builtin",
            "square",
            "--init",
            "-3"
        ])),
        1
    );
}

#[test]
fn simulate_is_independent_of_thread_count() {
    let run = |threads: &str| {
        let dir = TempDir::new().unwrap();
        let o = Command::new(env!("CARGO_BIN_EXE_rsh-lab"))
            .args([
                "simulate",
                "--builtin",
                "square",
                "--algo",
                "rsh2",
                "--init",
                "uniform",
                "--runs",
                "2000",
                "--max-iter",
                "30000",
                "--seed",
                "5",
                "--out",
                &out_arg(&dir),
            ])
            .env("RSH_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read_to_string(dir.path().join("tau.csv")).unwrap()
    };
    assert_eq!(run("1"), run("3"));
    assert_eq!(run("0"), run("1"));
}

#[test]
fn bad_thread_variable_is_an_input_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_rsh-lab"))
        .args(["analyze", "--builtin", "square", "--out", "/tmp"])
        .env("RSH_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("RSH_LAB_THREADS"));
}

#[test]
fn drift_average_upper_is_granted() {
    let dir = TempDir::new().unwrap();
    let d = write_drift(dir.path(), "d.json", example_one());
    let o = rsh_lab(&[
        "drift",
        "--builtin",
        "square",
        "--algo",
        "rsh1",
        "--drift",
        &d,
        "--mode",
        "avg_upper",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("index map: d[0..100] belongs to states 0-99"));
    let report = DriftReport::load(&dir.path().join("drift_report.json")).unwrap();
    assert_eq!(report.certificate, Certificate::UpperHitting);
    let bound = report.bound.unwrap();
    let printed: f64 = field(&stdout(&o), "bound").parse().unwrap();
    assert_eq!(printed, bound);
}

#[test]
fn drift_pointwise_upper_is_denied_at_zero() {
    let dir = TempDir::new().unwrap();
    let d = write_drift(dir.path(), "d.json", example_one());
    let o = rsh_lab(&[
        "drift",
        "--builtin",
        "square",
        "--drift",
        &d,
        "--mode",
        "pointwise_upper",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 3);
    let report = DriftReport::load(&dir.path().join("drift_report.json")).unwrap();
    assert_eq!(report.certificate, Certificate::None);
    assert_eq!(report.witness.unwrap().state, Some(0));
}

#[test]
fn zero_drift_is_denied_in_every_upper_mode() {
    let dir = TempDir::new().unwrap();
    let d = write_drift(dir.path(), "zero.json", vec![0.0; 100]);
    for mode in ["avg_upper", "pointwise_upper", "backward_upper"] {
        let o = rsh_lab(&[
            "drift",
            "--builtin",
            "square",
            "--drift",
            &d,
            "--mode",
            mode,
            "--out",
            &out_arg(&dir),
        ]);
        assert_eq!(code(&o), 3, "{mode}");
    }
}

#[test]
fn drift_dimension_mismatch_names_m() {
    let dir = TempDir::new().unwrap();
    let d = write_drift(dir.path(), "long.json", vec![1.0; 101]);
    let o = rsh_lab(&[
        "drift",
        "--builtin",
        "square",
        "--drift",
        &d,
        "--mode",
        "avg_upper",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("expected m = 100"), "{}", stderr(&o));
    assert!(!dir.path().join("drift_report.json").exists());
}

#[test]
fn reproduce_filters_groups() {
    let dir = TempDir::new().unwrap();
    let o = rsh_lab(&[
        "reproduce",
        "--only",
        "spectral,hitting,convergence",
        "--out",
        &out_arg(&dir),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let md = std::fs::read_to_string(dir.path().join("reproduction.md")).unwrap();
    assert!(md.contains(
        "| spectral | rho(Q), RSH-I on x^2 | 0.99 (abs 1e-10) | 0.990000000000 | pass |"
    ));
    assert!(md.contains("| hitting |"));
    assert!(!md.contains("| rate |"));
    assert!(md.contains("10 of 10 rows pass"), "{md}");

    let o = rsh_lab(&[
        "reproduce",
        "--only",
        "rate",
        "--runs",
        "3000",
        "--out",
        &out_arg(&dir),
    ]);
    let md = std::fs::read_to_string(dir.path().join("reproduction.md")).unwrap();
    assert!(
        md.lines().filter(|l| l.starts_with("| rate |")).count() == 4,
        "{md}"
    );
    assert!(md
        .lines()
        .filter(|l| l.starts_with("| "))
        .skip(1)
        .all(|l| l.starts_with("| rate |") || l.starts_with("|---")));
    assert!(matches!(code(&o), 0 | 2));

    assert_eq!(code(&rsh_lab(&["reproduce", "--only", "everything"])), 1);
}

#[test]
fn reproduce_exact_rows_do_not_depend_on_the_seed() {
    let table = |seed: &str| {
        let dir = TempDir::new().unwrap();
        let o = rsh_lab(&[
            "reproduce",
            "--only",
            "spectral,drift,trap",
            "--seed",
            seed,
            "--out",
            &out_arg(&dir),
        ]);
        assert!(matches!(code(&o), 0 | 2));
        let md = std::fs::read_to_string(dir.path().join("reproduction.md")).unwrap();
        md.lines()
            .filter(|l| {
                l.starts_with("| spectral") || l.starts_with("| drift") || l.starts_with("| trap")
            })
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    let (a, b) = (table("7"), table("8"));
    assert_eq!(a, b);
    assert!(a
        .iter()
        .filter(|l| l.starts_with("| trap"))
        .all(|l| l.ends_with("| pass |")));
}
