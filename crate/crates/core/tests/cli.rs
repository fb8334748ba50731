//! End-to-end checks of the command-line interface: exit codes, config-file
//! precedence, and output formats.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irsa-bpr"))
        .args(args)
        .output()
        .expect("failed to launch the CLI")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tmp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("irsa-bpr-cli-{}-{name}", std::process::id()))
}

#[test]
fn threshold_prints_value_and_csv() {
    let out = run(&["threshold", "--dist", "3:1.0", "--T", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("G*"));
    assert!(text.contains("dist,T,eta,G_star"));
    // 0.818 +/- tolerance shows up in the CSV line.
    assert!(text.contains("0.818"), "unexpected output:\n{text}");
}

#[test]
fn bounds_coordinated_value() {
    let out = run(&[
        "bounds",
        "--scheme",
        "coordinated",
        "--T",
        "4",
        "--eps",
        "0.99",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("T,scheme,eta,nu,gamma,eps,G_converse,Rsum_bound"));
    assert!(text.contains("4,coordinated"));
    assert!(text.contains("0.0100000000"), "unexpected output:\n{text}");
}

#[test]
fn usage_errors_exit_1() {
    // Unknown flag.
    let out = run(&["threshold", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    // Distribution that does not sum to one.
    let out = run(&[
        "simulate",
        "--K",
        "10",
        "--Ns",
        "10",
        "--pi",
        "0.5",
        "--dist",
        "2:0.5,3:0.6",
        "--T",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    // Missing required simulate inputs.
    let out = run(&["simulate", "--K", "10", "--Ns", "10", "--dist", "2:1.0"]);
    assert_eq!(out.status.code(), Some(1));
    // pi and G together are ambiguous.
    let out = run(&[
        "simulate", "--K", "10", "--Ns", "10", "--pi", "0.5", "--G", "0.5", "--dist", "2:1.0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_2() {
    // eta = 1 puts the self-consistency gap below zero everywhere on the
    // scan: no bracket, which is a numerical failure, not a usage error.
    let out = run(&[
        "bounds", "--scheme", "irsa", "--T", "1", "--eps", "0.5", "--eta", "1.0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_emits_csv_row() {
    let out_path = tmp_path("simulate.csv");
    let out = run(&[
        "simulate",
        "--K",
        "50",
        "--Ns",
        "50",
        "--G",
        "0.5",
        "--dist",
        "3:1.0",
        "--T",
        "1",
        "--trials",
        "20",
        "--seed",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains(
        "G,pi,K,Ns,T,m,trials,puer,puer_ci,fer,fer_ci,mean_iters,mean_kc,mean_C_over_Ns,seed"
    ));
    let file = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.ends_with(&file) || text.contains(&file));
    assert_eq!(file.lines().count(), 2);
    let _ = std::fs::remove_file(&out_path);
}

#[test]
fn config_file_supplies_and_flags_override() {
    let cfg_path = tmp_path("config.txt");
    std::fs::write(
        &cfg_path,
        "# sweep configuration\nK=60\nNs=60\ndist=3:1.0\nT=1\ntrials=10\nseed=77\ng-list=0.4\n",
    )
    .unwrap();

    let from_file = run(&["sweep", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(from_file.status.code(), Some(0));
    let text = stdout(&from_file);
    assert!(
        text.contains(",60,60,1,0,10,"),
        "row missing config values:\n{text}"
    );
    assert!(
        text.trim_end().ends_with(",77"),
        "seed from file not used:\n{text}"
    );

    // A flag overrides the file value for the same key.
    let overridden = run(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--seed",
        "123",
    ]);
    assert_eq!(overridden.status.code(), Some(0));
    let text = stdout(&overridden);
    assert!(
        text.trim_end().ends_with(",123"),
        "flag did not override file:\n{text}"
    );
    let _ = std::fs::remove_file(&cfg_path);
}

#[test]
fn selftest_passes() {
    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("[pass]"));
    assert!(!text.contains("[FAIL]"));
}
