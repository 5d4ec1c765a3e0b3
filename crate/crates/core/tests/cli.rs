use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lodiag::estimator::FitConfig;
use lodiag::io::{read_matrix_path, write_matrix_path};
use lodiag::simulation::{make_sigma, sample_mvn};
use lodiag::{fit_rank_penalized, sample_covariance};

fn lodiag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lodiag"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn toy_panel() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/toy_panel.csv")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn estimate_writes_the_library_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let truth = make_sigma(2, 15, 3).unwrap();
    let x = sample_mvn(&truth.sigma, 60, 4).unwrap();
    let data = dir.path().join("x.csv");
    let out = dir.path().join("theta.csv");
    write_matrix_path(&x, None, &data).unwrap();

    let run = lodiag(&[
        "estimate",
        "--data",
        data.to_str().unwrap(),
        "--ranks",
        "1,3,5",
        "--delta",
        "0.8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout(&run).contains("selected_rank"));

    let written = read_matrix_path(&out).unwrap().values;
    let s = sample_covariance(&read_matrix_path(&data).unwrap().values).unwrap();
    let fit = fit_rank_penalized(&s, &[1, 3, 5], 60, 0.8, &FitConfig::default()).unwrap();
    let err = (written - fit.theta().as_matrix()).amax();
    assert!(err <= 1e-12, "round trip error {err:e}");
}

#[test]
fn estimate_from_covariance_needs_sample_size() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("s.csv");
    std::fs::write(&cov, "2,0.5\n0.5,1\n").unwrap();
    let out = dir.path().join("t.csv");
    let missing = lodiag(&["estimate", "--cov", cov.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));

    let run = lodiag(&[
        "estimate",
        "--cov",
        cov.to_str().unwrap(),
        "--n",
        "50",
        "--ranks",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(read_matrix_path(&out).unwrap().values.shape(), (2, 2));
}

#[test]
fn simulate_prints_a_loss_table() {
    let run = lodiag(&["simulate", "--example", "1", "--p", "10", "--reps", "3", "--seed", "1"]);
    assert!(run.status.success());
    let text = stdout(&run);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,mean_kl,stderr");
    assert!(lines[1].starts_with("S,") && lines[2].starts_with("D_S,") && lines[3].starts_with("LD,"));

    let table = lodiag(&["simulate", "--example", "1", "--p", "10", "--reps", "3", "--seed", "1", "--format", "table"]);
    assert!(stdout(&table).contains("Example 1"));
}

#[test]
fn rank_recovery_writes_eigenvalue_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eig.csv");
    let run = lodiag(&[
        "rank-recovery",
        "--example",
        "2",
        "--p",
        "10",
        "--reps",
        "2",
        "--k",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("index,true_eigenvalue,mean,lower,upper"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn backtest_on_toy_panel() {
    let panel = toy_panel();
    let run = lodiag(&["backtest", "--panel", panel.to_str().unwrap(), "--estimator", "diagonal"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = stdout(&run);
    assert!(text.starts_with("period,date,return,A01"));
    let rows = text.lines().filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit())).count();
    assert_eq!(rows, 28);
    assert!(text.contains("sharpe"));
}

#[test]
fn bad_input_exit_codes() {
    assert_eq!(lodiag(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lodiag(&["simulate", "--example", "9", "--p", "10"]).status.code(), Some(2));
    assert_eq!(lodiag(&["backtest", "--panel", "/nonexistent/panel.csv"]).status.code(), Some(2));
    assert_eq!(lodiag(&["--help"]).status.code(), Some(0));
}
