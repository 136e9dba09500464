use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_outer-approx"))
        .args(args)
        .env_remove("OUTER_APPROX_OUT")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn solve_with_zero_iterations_writes_only_the_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["solve", "--seed", "7", "--method", "cyclic", "--iters", "0", "--out", out]);
    assert!(o.status.success(), "{o:?}");
    let csv = fs::read_to_string(dir.path().join("cyclic_seed7.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "k,err_log10,dist_C,op_residual");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0,0,"));
}

#[test]
fn solve_round_trips_a_saved_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = ["--method", "composition", "--block", "10", "--iters", "300", "--stride", "100", "--out", out];
    let mut first = vec!["solve", "--seed", "3", "--n", "6", "--m", "10", "--save-problem"];
    first.extend(args);
    assert!(run(&first).status.success());
    let generated = fs::read_to_string(dir.path().join("composition_b10_seed3.csv")).unwrap();

    let problem = dir.path().join("composition_b10_seed3_problem.json");
    let mut second = vec!["solve", "--problem", problem.to_str().unwrap()];
    second.extend(args);
    let o = run(&second);
    assert!(o.status.success(), "{o:?}");
    let loaded = fs::read_to_string(dir.path().join("composition_b10.csv")).unwrap();
    assert_eq!(generated, loaded);
    assert_eq!(loaded.lines().count(), 1 + 4);
}

#[test]
fn out_directory_defaults_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_outer-approx"))
        .args(["solve", "--n", "3", "--m", "4", "--iters", "5"])
        .env("OUTER_APPROX_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("cyclic_seed0.csv").exists());
}

#[test]
fn bench_writes_aggregate_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&[
        "bench", "--n", "5", "--m", "12", "--sims", "3", "--iters", "100", "--method", "maxprox", "--block", "1",
        "--augmented", "--out", out,
    ]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("maxprox b=1+"));
    let aggregate = fs::read_to_string(dir.path().join("aggregate.csv")).unwrap();
    assert!(aggregate.starts_with("method,k,median,p10,p20,p30,p40,p60,p70,p80,p90\n"));
    assert_eq!(aggregate.lines().count(), 1 + 3);
    for name in ["plot.gp", "metadata.json", "traces/maxprox_b1p_seed2.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

#[test]
fn verify_passes_every_suite() {
    let o = run(&["verify", "--samples", "200"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    assert!(text.contains("[PASS] cutter: half-space projection"));
    assert!(!text.contains("[FAIL]"));
}

#[test]
fn usage_errors_exit_with_two() {
    let cases: &[&[&str]] = &[
        &["solve", "--method", "cyclic", "--block", "1", "--augmented"],
        &["solve", "--method", "maxprox", "--block", "0"],
        &["solve", "--m", "10", "--method", "composition", "--block", "11"],
        &["solve", "--alpha", "2"],
        &["solve", "--alpha", "often"],
        &["solve", "--lambda", "sometimes"],
        &["solve", "--method", "composition", "--weights", "residual"],
        &["solve", "--frobnicate"],
        &["bench", "--preset", "figures", "--m", "50"],
        &["bench", "--threads", "0"],
        &["verify", "--samples", "0"],
    ];
    for args in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {o:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn runtime_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = run(&["solve", "--problem", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
}

#[test]
fn help_lists_every_flag() {
    let text = stdout(&run(&["solve", "--help"]));
    for flag in [
        "--seed", "--n", "--m", "--problem", "--method", "--block", "--augmented", "--alpha", "--lambda", "--weights",
        "--scheme", "--iters", "--stride", "--out",
    ] {
        assert!(text.contains(flag), "{flag}");
    }
    let text = stdout(&run(&["bench", "--help"]));
    for flag in ["--sims", "--threads", "--preset"] {
        assert!(text.contains(flag), "{flag}");
    }
}
