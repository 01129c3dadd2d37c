use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gedyn::records::read_records;

fn gedyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gedyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: [&str; 8] = [
    "--parents",
    "20",
    "--offspring",
    "20",
    "--generations",
    "3",
    "--genotype-bits",
    "64",
];

fn run_small(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out-dir", out.to_str().unwrap(), "--runs", "2"];
    args.extend(SMALL);
    args.extend(extra);
    gedyn(&args)
}

#[test]
fn exit_codes() {
    assert_eq!(gedyn(&["--help"]).status.code(), Some(0));
    assert_eq!(gedyn(&["run", "--runs", "zero"]).status.code(), Some(1));
    assert_eq!(gedyn(&["run", "--problem", "tsp"]).status.code(), Some(1));
    assert_eq!(
        gedyn(&["run", "--param", "9", "--problem", "parity"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(gedyn(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.tsv");
    assert_eq!(
        gedyn(&["aggregate", "--records", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn single_snapshot_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = gedyn(&[
        "run",
        "--problem",
        "parity",
        "--param",
        "3",
        "--runs",
        "1",
        "--generations",
        "0",
        "--parents",
        "10",
        "--offspring",
        "10",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_records(&fs::read_to_string(dir.path().join("records.tsv")).unwrap()).unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!((records[0].run, records[0].generation), (0, 0));
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_small(a.path(), &["--jobs", "1"]).status.success());
    assert!(run_small(b.path(), &["--jobs", "3"]).status.success());
    for name in [
        "records.tsv",
        "parity.tsv",
        "klandscapes.tsv",
        "parity.gp",
        "klandscapes.gp",
    ] {
        let (x, y) = (
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
        );
        assert!(x == y, "{name} differs");
    }
    let records = read_records(&fs::read_to_string(a.path().join("records.tsv")).unwrap()).unwrap();
    assert_eq!(records.len(), 2 * 5 * 2 * 4);
}

#[test]
fn plot_script_has_a_series_per_parameter() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_small(dir.path(), &["--problem", "klandscapes"])
        .status
        .success());
    let script = fs::read_to_string(dir.path().join("klandscapes.gp")).unwrap();
    let series = script.matches("$1==").count();
    assert_eq!(series, 3 * 5, "{script}");
    assert!(!dir.path().join("parity.tsv").exists());

    fs::remove_file(dir.path().join("klandscapes.gp")).unwrap();
    let out = gedyn(&["plot", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("klandscapes.gp")).unwrap(),
        script
    );
}

#[test]
fn aggregate_subcommand_reproduces_run_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_small(a.path(), &["--problem", "parity"]).status.success());
    let records = a.path().join("records.tsv");
    let out = gedyn(&[
        "aggregate",
        "--records",
        records.to_str().unwrap(),
        "--out-dir",
        b.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        fs::read(a.path().join("parity.tsv")).unwrap(),
        fs::read(b.path().join("parity.tsv")).unwrap()
    );
}

#[test]
fn grammar_export() {
    let out = gedyn(&["grammar", "--problem", "parity", "--param", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let grammar = gedyn_core::parse_bnf(&text).unwrap();
    assert_eq!(grammar, gedyn_core::problems::parity_grammar(3));

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("k.bnf");
    assert!(gedyn(&[
        "grammar",
        "--problem",
        "klandscapes",
        "-o",
        file.to_str().unwrap()
    ])
    .status
    .success());
    let grammar = gedyn_core::parse_bnf(&fs::read_to_string(file).unwrap()).unwrap();
    assert_eq!(grammar, gedyn_core::problems::klandscapes_grammar());
    assert_eq!(
        gedyn(&["grammar", "--problem", "parity", "--param", "8"])
            .status
            .code(),
        Some(1)
    );
}
