//! Command-level behavior: exit codes, output shapes, and the
//! state-feature flow, driven through the binary.

use std::path::Path;
use std::process::{Command, Output};

use namefair_core::baselines::{mock::MockServer, Service};

fn namefair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_namefair"))
        .args(args)
        .output()
        .expect("spawn namefair")
}

fn write_exam_csv(path: &Path) {
    let mut rows = String::from("name,gender,caste,year,state,rank\n");
    let stems = ["ANITA", "KAVITA", "SUNITA", "NAMITA", "BABITA", "SARITA"];
    let males = ["RAJESH", "MAHESH", "SURESH", "RAMESH", "DINESH", "NARESH"];
    let mut rank = 1;
    for year in [2004, 2005] {
        for (i, stem) in stems.iter().enumerate() {
            rows.push_str(&format!(
                "{stem} DEVI,Female,{},{year},WB,{rank}\n",
                if i % 2 == 0 { "Reserved" } else { "General" }
            ));
            rank += 1;
            rows.push_str(&format!(
                "{} KUMAR,Male,{},{year},MH,{rank}\n",
                males[i],
                if i % 3 == 0 { "Reserved" } else { "General" }
            ));
            rank += 1;
        }
        rank = 1;
    }
    std::fs::write(path, rows).unwrap();
}

#[test]
fn usage_errors_exit_one() {
    let out = namefair(&["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let out = namefair(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ingest"));
}

#[test]
fn config_errors_exit_one_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.csv");
    std::fs::write(&input, "name\nANITA DEVI\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = namefair(&[
        "ingest",
        "--input",
        input.to_str().unwrap(),
        "--map",
        "name=NoSuchColumn",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists(), "no partial output on config errors");
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.csv");
    // single-label corpus: a data error, not a usage error
    std::fs::write(
        &corpus,
        "name,gender\nANITA DEVI,Female\nKAVITA RAO,Female\n",
    )
    .unwrap();
    let out = namefair(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--task",
        "gender",
        "--family",
        "logreg",
        "--out",
        dir.path().join("t").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quota_errors_exit_three() {
    let server = MockServer::start(Service::Genderize);
    let dir = tempfile::tempdir().unwrap();
    let names = dir.path().join("names.csv");
    let mut text = String::from("name\n");
    for i in 0..5 {
        text.push_str(&format!("NAME{} DAS\n", char::from(b'A' + i)));
    }
    std::fs::write(&names, text).unwrap();

    let out = namefair(&[
        "baseline-export",
        "--service",
        "genderize",
        "--base-url",
        &server.url(),
        "--names",
        names.to_str().unwrap(),
        "--quota",
        "2",
        "--cache",
        dir.path().join("cache.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("preds.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    // partial export with exactly the quota's worth of rows
    let rows = std::fs::read_to_string(dir.path().join("preds.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(rows, 2);
}

#[test]
fn ingest_reports_table_shaped_stats() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.csv");
    write_exam_csv(&input);
    let out_dir = dir.path().join("out");
    let out = namefair(&[
        "ingest",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["total"], 24);
    assert_eq!(stats["unique"], 12);
    let pct = stats["unique_pct"].as_f64().unwrap();
    assert!((pct - 50.0).abs() < 1e-9);
    assert!(out_dir.join("config.toml").exists());
    assert!(out_dir.join("log.txt").exists());
}

#[test]
fn state_feature_flows_from_train_to_predict() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.csv");
    write_exam_csv(&input);
    let ingest_dir = dir.path().join("ingest");
    assert!(namefair(&[
        "ingest",
        "--input",
        input.to_str().unwrap(),
        "--out",
        ingest_dir.to_str().unwrap(),
    ])
    .status
    .success());

    let train_dir = dir.path().join("train");
    let out = namefair(&[
        "train",
        "--corpus",
        ingest_dir.join("corpus.csv").to_str().unwrap(),
        "--task",
        "caste",
        "--family",
        "logreg",
        "--with-state",
        "--epochs",
        "30",
        "--ratio",
        "0.6",
        "--out",
        train_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // split files carry the combined input strings
    let train_csv = std::fs::read_to_string(train_dir.join("train.csv")).unwrap();
    assert!(train_csv.contains(" - WB") || train_csv.contains(" - MH"));

    // predicting without --state is a usage error; with it, fine
    let no_state = namefair(&[
        "predict",
        "--model",
        train_dir.join("model.bin").to_str().unwrap(),
        "--name",
        "ANITA DEVI",
    ]);
    assert_eq!(no_state.status.code(), Some(2));
    let with_state = namefair(&[
        "predict",
        "--model",
        train_dir.join("model.bin").to_str().unwrap(),
        "--name",
        "ANITA DEVI",
        "--state",
        "WB",
    ]);
    assert!(with_state.status.success());
    let value: serde_json::Value =
        serde_json::from_slice(&with_state.stdout).unwrap();
    assert_eq!(value["input"], "ANITA DEVI - WB");
}

#[test]
fn buckets_csv_is_table_shaped() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.csv");
    std::fs::write(
        &gold,
        "name,label\nANITA DEVI,Female\nRAJESH KUMAR,Male\nKAVITA RAO,Female\n",
    )
    .unwrap();
    let preds_a = dir.path().join("a.csv");
    std::fs::write(
        &preds_a,
        "name,label\nANITA DEVI,Female\nRAJESH KUMAR,Female\nKAVITA RAO,Female\n",
    )
    .unwrap();
    let preds_b = dir.path().join("b.csv");
    std::fs::write(
        &preds_b,
        "name,label\nANITA DEVI,Female\nRAJESH KUMAR,Male\nKAVITA RAO,Unknown\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = namefair(&[
        "buckets",
        "--gold",
        gold.to_str().unwrap(),
        "--preds-a",
        "model=/nonexistent/preds.csv",
        "--preds-b",
        "api=b.csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    // missing prediction file is a data error
    assert_eq!(out.status.code(), Some(2));

    let out = namefair(&[
        "buckets",
        "--gold",
        gold.to_str().unwrap(),
        "--preds-a",
        &format!("model={}", preds_a.display()),
        "--preds-b",
        &format!("api={}", preds_b.display()),
        "--allow-unknown",
        "--task",
        "gender",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("buckets.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bucket,name,gold,model,api"));
    // ANITA: both correct; RAJESH: A wrong B correct; KAVITA: A correct B unknown->wrong
    let body: Vec<&str> = lines.collect();
    assert!(body.iter().any(|l| l.starts_with("CC,ANITA DEVI")));
    assert!(body.iter().any(|l| l.starts_with("WC,RAJESH KUMAR")));
    assert!(body.iter().any(|l| l.starts_with("CW,KAVITA RAO")));
}
