use std::fs;
use std::path::Path;
use std::process::Command;

use revising::cli::{run, CliError};

fn run_ok(args: &[&str]) -> String {
    let mut out = Vec::new();
    let full: Vec<&str> = std::iter::once("revising").chain(args.iter().copied()).collect();
    run(full, &mut out).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    String::from_utf8(out).unwrap()
}

fn run_err(args: &[&str]) -> CliError {
    let full: Vec<&str> = std::iter::once("revising").chain(args.iter().copied()).collect();
    run(full, &mut Vec::new()).expect_err("command should fail")
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).map(|r| r.trim_start_matches([' ', '='].as_slice()).trim()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{report}"))
}

const XOR: &str = "inputs 2\noutputs 1\naux 1\n00 0\n10 1\n01 1\n11 0\n";

#[test]
fn truth_table_reports_sizes() {
    let out = run_ok(&["truth-table", "--problem", "1"]);
    assert_eq!(value(&out, "shape"), "(9, 4, 1)");
    assert_eq!(value(&out, "rows"), "16");
    assert_eq!(value(&out, "coefficients"), "45");
    assert_eq!(value(&out, "aux_arrays"), "65536");
}

#[test]
fn table_file_round_trips_through_truth_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    run_ok(&["truth-table", "--multiplier", "2,2,1", "--out", path.to_str().unwrap()]);
    let again = run_ok(&["truth-table", "--table", path.to_str().unwrap(), "--shape", "9,4,1"]);
    assert_eq!(again, run_ok(&["truth-table", "--problem", "1"]));
    assert!(matches!(
        run_err(&["truth-table", "--table", path.to_str().unwrap(), "--shape", "8,4,0"]),
        CliError::Config(_)
    ));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# run settings\nproblem = 2\n").unwrap();
    let out = run_ok(&["truth-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(value(&out, "shape"), "(11, 5, 1)");
    fs::write(&cfg, "multiplier = 1,1,0\nseed = 3\n").unwrap();
    let out = run_ok(&["truth-table", "--config", cfg.to_str().unwrap()]);
    assert_eq!(value(&out, "rows"), "4");
    fs::write(&cfg, "problems = 2\n").unwrap();
    assert!(matches!(run_err(&["truth-table", "--config", cfg.to_str().unwrap()]), CliError::Config(_)));
}

#[test]
fn solve_reports_rho_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("xor.txt");
    fs::write(&table, XOR).unwrap();
    let trace = dir.path().join("trace.tsv");
    // aux = OR of the inputs makes XOR expressible.
    let out = run_ok(&[
        "solve",
        "--table",
        table.to_str().unwrap(),
        "--aux",
        "0111",
        "--starts",
        "2",
        "--trace",
        trace.to_str().unwrap(),
    ]);
    let rho: f64 = value(&out, "rho").parse().unwrap();
    assert!(rho > 0.9, "{out}");
    assert_eq!(value(&out, "psi").split(',').count(), 10);
    let trace = fs::read_to_string(trace).unwrap();
    assert!(trace.starts_with("start\titeration\tf"));
    assert!(trace.lines().count() > 2);

    let out = run_ok(&["solve", "--table", table.to_str().unwrap(), "--aux-index", "0", "--starts", "2"]);
    let flat: f64 = value(&out, "rho").parse().unwrap();
    assert!(flat < rho);
    assert!(matches!(run_err(&["solve", "--table", table.to_str().unwrap()]), CliError::Config(_)));
    assert!(matches!(run_err(&["solve", "--table", table.to_str().unwrap(), "--aux", "01"]), CliError::Config(_)));
}

fn datagen(dir: &Path, seed: &str) -> String {
    run_ok(&[
        "datagen",
        "--multiplier",
        "1,2,1",
        "--count",
        "30",
        "--starts",
        "1",
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn datagen_train_eval_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = datagen(&data, "5");
    assert_eq!(value(&out, "rows"), "30");
    assert_eq!(value(&out, "train"), "24");
    assert_eq!(value(&out, "test"), "6");
    let manifest = fs::read_to_string(data.join("manifest.txt")).unwrap();
    assert!(manifest.contains("rows = 30"), "{manifest}");

    let again = dir.path().join("again");
    datagen(&again, "5");
    for f in ["dataset.csv", "train.csv", "test.csv", "manifest.txt"] {
        assert_eq!(fs::read(data.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }

    let train = data.join("train.csv");
    let test = data.join("test.csv");
    let forest = dir.path().join("forest.txt");
    let out = run_ok(&[
        "train",
        "--data",
        train.to_str().unwrap(),
        "--kind",
        "forest",
        "--trees",
        "10",
        "--out",
        forest.to_str().unwrap(),
    ]);
    assert_eq!(value(&out, "kind"), "forest");
    let mlp = dir.path().join("mlp.txt");
    let losses = dir.path().join("losses.csv");
    run_ok(&[
        "train",
        "--data",
        train.to_str().unwrap(),
        "--kind",
        "mlp",
        "--epochs",
        "5",
        "--out",
        mlp.to_str().unwrap(),
        "--losses",
        losses.to_str().unwrap(),
    ]);
    assert_eq!(fs::read_to_string(&losses).unwrap().lines().count(), 6);

    for model in [&forest, &mlp] {
        let out = run_ok(&["eval", "--model", model.to_str().unwrap(), "--data", test.to_str().unwrap()]);
        let mse: f64 = value(&out, "mse").parse().unwrap();
        assert!(mse.is_finite() && mse >= 0.0);
        let preds = run_ok(&["predict", "--model", model.to_str().unwrap(), "--data", test.to_str().unwrap()]);
        assert_eq!(preds.lines().count(), 6);
        assert!(preds.lines().all(|l| l.parse::<f64>().is_ok()));
    }
    let wrong = dir.path().join("wrong");
    run_ok(&["datagen", "--multiplier", "1,1,1", "--count", "4", "--starts", "1", "--out", wrong.to_str().unwrap()]);
    let err =
        run_err(&["eval", "--model", forest.to_str().unwrap(), "--data", wrong.join("test.csv").to_str().unwrap()]);
    assert!(matches!(err, CliError::Config(_)));
}

#[test]
fn bench_reports_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("xor.txt");
    fs::write(&table, XOR).unwrap();
    let out = dir.path().join("bench");
    let text = run_ok(&[
        "bench",
        "--table",
        table.to_str().unwrap(),
        "--count",
        "2",
        "--starts",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(text.contains("finite-difference") && text.contains("analytic"), "{text}");
    assert_eq!(fs::read_to_string(out.join("bench.csv")).unwrap().lines().count(), 3);
    let empty = run_ok(&["bench", "--table", table.to_str().unwrap(), "--count", "0"]);
    assert_eq!(empty.lines().count(), 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_revising");
    let status = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(status(&["truth-table", "--problem", "1"]), Some(0));
    assert_eq!(status(&["truth-table"]), Some(2));
    assert_eq!(status(&["truth-table", "--problem", "9"]), Some(2));
    assert_eq!(status(&["no-such-command"]), Some(2));
    assert_eq!(status(&["--help"]), Some(0));
    let out = Command::new(bin).args(["truth-table", "--problem", "1"]).output().unwrap();
    assert!(String::from_utf8(out.stdout).unwrap().contains("rows 16"));
}
