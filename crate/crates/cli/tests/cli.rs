use std::path::Path;
use std::process::{Command, Output};

use soa_core::quad::closed_form_bs;
use soa_core::tuner::reference_option;
use soa_core::OptionKind;

fn soa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soa")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Value of `column` in the first data row of a CSV.
fn csv_field(text: &str, column: &str) -> String {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    row[header.iter().position(|h| *h == column).unwrap()].to_string()
}

#[test]
fn price_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = soa(
        dir.path(),
        &[
            "price", "--model", "gbm", "--sigma", "0.25", "--kind", "european", "--s0", "150", "--k", "100", "--t",
            "0.25", "--r", "0.02", "--offset", "smooth", "--B", "40", "--N", "64",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let p: f64 = csv_field(&stdout(&o), "price").parse().unwrap();
    let bs = closed_form_bs(&reference_option(OptionKind::European), 0.25);
    assert!((p / bs - 1.0).abs() < 2e-4);
    assert!(dir.path().join("soa-price.manifest.json").exists());
}

#[test]
fn floats_carry_seventeen_digits() {
    let dir = tempfile::tempdir().unwrap();
    let o = soa(dir.path(), &["price", "--sigma", "0.25"]);
    let p = csv_field(&stdout(&o), "price");
    let mantissa = p.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{p}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(soa(dir.path(), &["price", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(soa(dir.path(), &["frobnicate"]).status.code(), Some(2));
    // heston without its parameters
    assert_eq!(soa(dir.path(), &["price", "--model", "heston"]).status.code(), Some(2));
    assert_eq!(soa(dir.path(), &["price", "--sigma", "-0.2"]).status.code(), Some(2));
    // a grid too coarse for the ladder violates a precondition
    assert_eq!(soa(dir.path(), &["fft", "--sigma", "0.25", "--B", "40", "--N", "8"]).status.code(), Some(2));
    // no cell of a one-cell grid reaches a zero threshold
    let o = soa(
        dir.path(),
        &[
            "tune", "--offset", "cm", "--b-min", "10", "--b-max", "10", "--iota-min", "1.6", "--iota-max", "1.6",
            "--e-th-bps", "0", "--mc-paths", "2000",
        ],
    );
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn empty_dataset_is_valid() {
    let dir = tempfile::tempdir().unwrap();
    let o = soa(dir.path(), &["gen-data", "--n", "0", "--out", "empty.jsonl"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, records) = soa_core::dataset::read_dataset(&dir.path().join("empty.jsonl")).unwrap();
    assert!(header.is_some() && records.is_empty());
    assert!(dir.path().join("empty.jsonl.manifest.json").exists());
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), "workers = 1\n[price]\nsigma = 0.25\nk = 120\noffset = \"cm\"\n").unwrap();
    let o = soa(dir.path(), &["--config", "run.toml", "price", "--k", "110"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert_eq!(csv_field(&out, "k").parse::<f64>().unwrap(), 110.0);
    assert_eq!(csv_field(&out, "offset"), "carrmadan");
    assert_eq!(csv_field(&out, "n"), "576");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("soa-price.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["k"], 110.0);
    assert_eq!(manifest["config"]["sigma"], 0.25);
    assert_eq!(manifest["workers"], 1);
    std::fs::write(dir.path().join("bad.toml"), "[price]\nstrike = 3\n").unwrap();
    assert_eq!(soa(dir.path(), &["--config", "bad.toml", "price"]).status.code(), Some(2));
}

#[test]
fn fft_ladder_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("k.csv"), "strike\n140\n150\n160\n").unwrap();
    let o = soa(dir.path(), &["fft", "--sigma", "0.25", "--strikes", "k.csv", "--B", "400", "--N", "4096", "--out", "p.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "strike,price,flag_otm_unstable");
    assert_eq!(lines.len(), 4);
    let prices: Vec<f64> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(prices.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn generate_train_predict_bench_report() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let o = soa(dir.path(), args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        o
    };
    run(&["gen-data", "--n", "400", "--seed", "9", "--out", "d.jsonl", "--labeler", "fixed"]);
    run(&["gen-data", "--n", "400", "--seed", "9", "--out", "d2.jsonl", "--labeler", "fixed", "--workers", "1"]);
    assert_eq!(std::fs::read(dir.path().join("d.jsonl")).unwrap(), std::fs::read(dir.path().join("d2.jsonl")).unwrap());
    run(&["train", "--algo", "gbdt", "--data", "d.jsonl", "--out", "g.json", "--n-trees", "5", "--cv-depths", "2,4", "--folds", "2"]);
    run(&["train", "--algo", "rf", "--data", "d.jsonl", "--out", "r.json", "--n-trees", "5"]);
    run(&["train", "--algo", "nn", "--preset", "desk", "--epochs", "2", "--data", "d.jsonl", "--out", "n.json"]);
    for f in ["g.json.cv.csv", "g.json.loss.csv", "n.json.loss.csv", "n.json.manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let o = run(&["predict", "--model", "g.json", "--in", "d.jsonl"]);
    let out = stdout(&o);
    let (_, records) = soa_core::dataset::read_dataset(&dir.path().join("d.jsonl")).unwrap();
    assert!(records.len() > 350);
    assert_eq!(out.lines().count(), records.len() + 1);
    let first: f64 = csv_field(&out, "normalized_price").parse().unwrap();
    assert!((0.0..=1.0).contains(&first));
    run(&["bench", "--data", "d.jsonl", "--models", "n.json,g.json,r.json", "--repetitions", "3", "--limit", "50", "--out", "b.csv"]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("b.csv.json")).unwrap()).unwrap();
    assert_eq!(summary["regressions"].as_array().unwrap().len(), 4);
    run(&["report", "--bench", "b.csv.json", "--models", "n.json,g.json", "--out-dir", "rep", "--b-max", "40"]);
    for f in ["table3.csv", "table5.csv", "table7.csv", "figure11.csv", "figure4.csv"] {
        assert!(dir.path().join("rep").join(f).exists(), "{f}");
    }
}
