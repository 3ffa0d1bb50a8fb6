use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ibmap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibmap"))
        .args(args)
        .current_dir(dir)
        .env_remove("IBMAP_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Vec<Value> {
    let out = ibmap(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn gen_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--n", "20", "--tau", "2", "--rows", "1000", "--seed", "7"];
    let recs = ok(dir.path(), &args);
    assert_eq!(recs[0]["n"], 20);
    assert_eq!(recs[0]["seed"], 7);
    let csv = fs::read(dir.path().join("gen.csv")).unwrap();
    let json = fs::read(dir.path().join("gen.json")).unwrap();
    ok(dir.path(), &args);
    assert_eq!(csv, fs::read(dir.path().join("gen.csv")).unwrap());
    assert_eq!(json, fs::read(dir.path().join("gen.json")).unwrap());
    let g: Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(g["edges"].as_array().unwrap().len(), 20);
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1001);
}

#[test]
fn learn_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "--n",
            "8",
            "--tau",
            "1",
            "--rows",
            "800",
            "--test-rows",
            "400",
            "--seed",
            "3",
        ],
    );
    for algo in ["ibmap-hc", "gsmn"] {
        let rec = &ok(d, &["learn", "--algo", algo, "--data", "gen.csv", "--out", "g.json"])[0];
        assert_eq!(rec["algorithm"], algo);
        assert_eq!(rec["D"], 800);
        assert!(rec["tests_computed"].as_u64().unwrap() > 0);
        let ev = &ok(
            d,
            &[
                "eval",
                "--learned",
                "g.json",
                "--true",
                "gen.json",
                "--test",
                "gen.test.csv",
            ],
        )[0];
        assert!(ev["hamming"].is_u64());
        for f in ["f_edges", "f_nonedges", "f_triplets", "accuracy"] {
            let v = ev[f].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&v), "{f} = {v}");
        }
    }
}

#[test]
fn landscape_writes_full_table() {
    let dir = tempfile::tempdir().unwrap();
    let rec = &ok(
        dir.path(),
        &["landscape", "--n", "6", "--tau", "1", "--rows", "1000", "--seed", "3"],
    )[0];
    let table = fs::read_to_string(dir.path().join("landscape.tsv")).unwrap();
    assert_eq!(table.lines().count(), 32769);
    let best = table
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((rec["argmax_score"].as_f64().unwrap() - best).abs() < 1e-9);
}

#[test]
fn eda_records_and_csv_export() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = ok(d, &["eda", "--n", "12", "--seed", "4", "--csv", "runs.csv"]);
    let b = ok(d, &["eda", "--n", "12", "--seed", "4", "--csv", "runs.csv"]);
    assert_eq!(a[0]["f_star"], b[0]["f_star"]);
    assert_eq!(a[0]["success"], true);
    let csv = fs::read_to_string(d.join("runs.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "one header, two rows");

    let runs = ok(
        d,
        &[
            "eda",
            "--n",
            "8",
            "--critical",
            "--ladder",
            "20,40",
            "--repetitions",
            "3",
        ],
    );
    let summary = runs.last().unwrap();
    assert_eq!(summary["status"], "critical");
    assert!(runs.len() >= 4);
}

#[test]
fn bench_records_every_cell_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let recs = ok(
        dir.path(),
        &[
            "--workers",
            "2",
            "bench",
            "--n",
            "6",
            "--tau",
            "1",
            "--rows",
            "50,200",
            "--seeds",
            "2",
            "--test-rows",
            "100",
        ],
    );
    assert_eq!(recs.len(), 2 * 2 * 2);
    let seeds: Vec<_> = recs.iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, [0, 0, 0, 0, 1, 1, 1, 1]);
    assert!(recs.iter().all(|r| r["accuracy"].is_f64()));
}

#[test]
fn records_file_is_appended() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for _ in 0..2 {
        let out = ibmap(d, &["--records", "r.jsonl", "eda", "--n", "6"]);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
    }
    assert_eq!(fs::read_to_string(d.join("r.jsonl")).unwrap().lines().count(), 2);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = ibmap(d, &["learn", "--data", "nope.csv", "--out", "g.json"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.csv"));
    assert!(!d.join("g.json").exists());

    fs::write(d.join("bad.csv"), "A,B\n0,1\n0,x\n").unwrap();
    let bad = ibmap(d, &["learn", "--data", "bad.csv", "--out", "g.json"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 3"));

    assert!(!ibmap(d, &["frobnicate"]).status.success());
    assert!(
        !ibmap(d, &["eda", "--n", "6", "--fitness", "royal-road", "--gamma", "4"])
            .status
            .success()
    );
}
