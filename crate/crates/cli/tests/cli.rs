use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "cells = 8\nsamples = 4\nreference_samples = 16\nt_final = 0.05\ncell_sweep = [8, 16]\nsample_sweep = [2, 4]\n";

fn stochdg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochdg"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_prints_header_and_one_row() {
    let dir = setup();
    let o = stochdg(&["run", "--config", "small.toml"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("h,error,residual,errorsample,errorreconst,A,B,L,total_bound,seed"));
    assert!(lines[1].starts_with("1.25000000000000e-1,"));
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = setup();
    let a = stochdg(&["spatial-study", "--config", "small.toml", "--out", "a.csv"], dir.path());
    let b = stochdg(&["spatial-study", "--config", "small.toml", "--out", "b.csv"], dir.path());
    assert!(a.status.success() && b.status.success());
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 3);
}

#[test]
fn flags_override_the_config() {
    let dir = setup();
    let o = stochdg(&["run", "--config", "small.toml", "--seed", "9", "--samples", "3"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[9], "9");
    assert_eq!(row[10], "3");

    let o = stochdg(&["stochastic-study", "--config", "small.toml", "--samples", "2"], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn unknown_key_fails_with_a_category() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.toml"), "samplez = 3\n").unwrap();
    let o = stochdg(&["run", "--config", "bad.toml"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    let last = err.lines().last().unwrap();
    assert!(last.starts_with("error[config]: "), "{last}");
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = setup();
    let o = stochdg(&["run", "--config", "nope.toml"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().contains("error[io]: "));
}

#[test]
fn emd_solves_csv_problems() {
    let dir = setup();
    std::fs::write(dir.path().join("cost.csv"), "1,3\n4,1\n").unwrap();
    std::fs::write(dir.path().join("a.csv"), "0.5,0.5\n").unwrap();
    std::fs::write(dir.path().join("b.csv"), "0.5,0.6\n").unwrap();
    let o = stochdg(
        &["emd", "--cost", "cost.csv", "--weights-a", "a.csv", "--weights-b", "a.csv"],
        dir.path(),
    );
    assert!(o.status.success());
    assert_eq!(
        stdout(&o),
        "cost,1.00000000000000e0\n5.00000000000000e-1,0.00000000000000e0\n0.00000000000000e0,5.00000000000000e-1\n"
    );

    let o = stochdg(
        &["emd", "--cost", "cost.csv", "--weights-a", "a.csv", "--weights-b", "b.csv"],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr)
        .unwrap()
        .starts_with("error[infeasible-marginals]: "));

    let o = stochdg(&["emd", "--cost", "cost.csv"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error[config]: "));
}
