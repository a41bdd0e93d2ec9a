use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use smartps_core::dataset::{write_dataset, LabeledRecord};
use smartps_core::Priority;

fn smartps(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smartps"))
        .args(args)
        .current_dir(dir)
        .env("SMARTPS_LOG", "off")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/four_rows.csv")
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

const SIM: [&str; 8] = [
    "simulate",
    "--scenario",
    "builtin:walkaway",
    "--selector",
    "minrtt",
    "--seed",
    "1",
    "--duration",
];

#[test]
fn simulate_twice_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = smartps(tmp.path(), &[&SIM[..], &["8", "--output", out]].concat());
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = dir_contents(&tmp.path().join("a"));
    assert_eq!(a.len(), 6);
    assert_eq!(a, dir_contents(&tmp.path().join("b")));
}

#[test]
fn manifest_replays_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = smartps(tmp.path(), &[&SIM[..], &["3", "-o", "first"]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = smartps(tmp.path(), &["simulate", "--config", "first/run-manifest.toml", "-o", "again"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(dir_contents(&tmp.path().join("first")), dir_contents(&tmp.path().join("again")));
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("run.toml"),
        "seed = 5\n[simulate]\nselector = \"rr\"\nduration = 1.0\n[sim]\nmin_rto = 250.0\n",
    )
    .unwrap();
    let o = smartps(
        tmp.path(),
        &["simulate", "--config", "run.toml", "-s", "builtin:stable-0", "--selector", "lf", "-o", "out"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = fs::read_to_string(tmp.path().join("out/run-manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 5"), "{manifest}");
    assert!(manifest.contains("selector = \"lf\""), "{manifest}");
    assert!(manifest.contains("min_rto = 250.0"), "{manifest}");
    let ag = fs::read_to_string(tmp.path().join("out/ag.csv")).unwrap();
    assert_eq!(ag.lines().count(), 1 + 10);
}

#[test]
fn analyze_table_fixture_gives_ten_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture();
    let o = smartps(tmp.path(), &["analyze", "-i", input.to_str().unwrap(), "-o", "corr.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("corr.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "attribute,kendall_ag,kendall_ad,cig_ag,cig_ad");
    assert_eq!(lines.len(), 11);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
    assert!(tmp.path().join("corr.csv.run-manifest.toml").exists());
}

#[test]
fn train_rejects_more_folds_than_class_members() {
    let tmp = tempfile::tempdir().unwrap();
    let records: Vec<LabeledRecord> = (0..9)
        .map(|i| LabeledRecord {
            features: [f64::from(i); 12],
            label: if i % 2 == 0 { Priority::WF } else { Priority::LF },
        })
        .collect();
    fs::write(tmp.path().join("nine.csv"), write_dataset(&records)).unwrap();
    let o = smartps(
        tmp.path(),
        &["train", "-i", "nine.csv", "-o", "m.txt", "--folds", "10", "--seed", "1"],
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("fewer than the 10 folds"), "{}", stderr(&o));
    assert!(!tmp.path().join("m.txt").exists());
}

#[test]
fn outputs_need_force_to_be_replaced() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture();
    let args = ["analyze", "-i", input.to_str().unwrap(), "-o", "corr.csv"];
    fs::write(tmp.path().join("corr.csv"), "keep me").unwrap();
    let o = smartps(tmp.path(), &args);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--force"));
    assert_eq!(fs::read_to_string(tmp.path().join("corr.csv")).unwrap(), "keep me");
    let o = smartps(tmp.path(), &[&args[..], &["--force"]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(tmp.path().join("corr.csv")).unwrap().starts_with("attribute,"));
}

#[test]
fn usage_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["frobnicate"],
        vec!["simulate", "--bogus"],
        vec!["simulate", "-s", "builtin:walkaway", "-o", "x"],
        vec!["simulate", "-s", "builtin:walkaway", "-o", "x", "--seed", "1", "--selector", "fastest"],
        vec!["simulate", "-s", "builtin:nowhere-9", "-o", "x", "--seed", "1"],
    ] {
        let o = smartps(tmp.path(), &args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn pipeline_from_synthesis_to_evaluation() {
    let tmp = tempfile::tempdir().unwrap();
    let steps: [&[&str]; 5] = [
        &["synthesize", "-s", "builtin:oscillating-0", "-o", "trace.csv", "--seed", "4"],
        &["build-dataset", "-i", "trace.csv", "-o", "data.csv"],
        &["train", "-i", "data.csv", "-o", "model.txt", "--trees", "0", "--min-leaf", "2", "--seed", "4"],
        &["prune", "-m", "model.txt", "--validation", "data.csv", "-o", "pruned.txt"],
        &["evaluate", "-m", "pruned.txt", "-i", "data.csv", "-o", "metrics.csv"],
    ];
    for args in steps {
        let o = smartps(tmp.path(), args);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    }
    let metrics = fs::read_to_string(tmp.path().join("metrics.csv")).unwrap();
    let values: Vec<f64> = metrics.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(values.len(), 4);
    assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
}
