use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use grovermin::objectives::{GoldsteinPrice, LjTrimer, Objective, Shubert};
use serde_json::Value;

fn grovermin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grovermin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = grovermin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    for entry in walk(dir) {
        let rel = entry
            .strip_prefix(dir)
            .unwrap()
            .to_string_lossy()
            .into_owned();
        files.push((rel, fs::read(&entry).unwrap()));
    }
    files.sort();
    files
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}

fn json_lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect()
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let cases: [&[&str]; 4] = [
        &["run", "gp", "--seed", "5", "--runs", "3"],
        &[
            "run",
            "lj-trimer",
            "--seed",
            "1",
            "--schedule",
            "constant:2",
            "--runs",
            "2",
        ],
        &["ensemble", "--seed", "9", "--runs", "20"],
        &["run", "shubert-pivot", "--seed", "4", "--runs", "2"],
    ];
    for args in cases {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut with_a = args.to_vec();
        with_a.extend(["--out", a.path().to_str().unwrap()]);
        let mut with_b = args.to_vec();
        with_b.extend(["--out", b.path().to_str().unwrap()]);
        let sa = ok(&with_a);
        let sb = ok(&with_b);
        assert_eq!(sa, sb, "{args:?}");
        let (ca, cb) = (dir_contents(a.path()), dir_contents(b.path()));
        assert!(!ca.is_empty());
        assert_eq!(ca, cb, "{args:?}");
    }
}

#[test]
fn different_seeds_give_different_traces() {
    let a = ok(&[
        "run",
        "gp",
        "--seed",
        "1",
        "--runs",
        "4",
        "--schedule",
        "incremental",
    ]);
    let b = ok(&[
        "run",
        "gp",
        "--seed",
        "2",
        "--runs",
        "4",
        "--schedule",
        "incremental",
    ]);
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    ok(&[
        "run",
        "gp",
        "--seed",
        "1",
        "--out",
        dir_a.path().to_str().unwrap(),
    ]);
    ok(&[
        "run",
        "gp",
        "--seed",
        "2",
        "--out",
        dir_b.path().to_str().unwrap(),
    ]);
    assert_ne!(
        fs::read(dir_a.path().join("traces.jsonl")).unwrap(),
        fs::read(dir_b.path().join("traces.jsonl")).unwrap()
    );
    assert!(a.starts_with("experiment=gp runs=4") && b.starts_with("experiment=gp runs=4"));
}

#[test]
fn bad_config_exits_with_code_two_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(
        &path,
        "experiment = \"gp\"\nobjective = \"goldstein-price\"\nseed = 0\n\n[[layout]]\nname = \"x\"\nqubits = 0\nlo = 0.0\nhi = 1.0\n",
    )
    .unwrap();
    let out = grovermin(&["run", "gp", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 5"), "{err}");

    fs::write(&path, "experiment = \"gp\"\nseed = -1\n").unwrap();
    let out = grovermin(&["run", "gp", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));

    fs::write(&path, "experiment = \"gp\"\nseed = 0\nbogus = 1\n").unwrap();
    let out = grovermin(&["run", "gp", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 3"));
}

#[test]
fn invalid_flags_are_rejected() {
    assert_eq!(
        grovermin(&["run", "brute", "--schedule", "incremental"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        grovermin(&["run", "gp", "--emit-distributions"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        grovermin(&["run", "gp", "--runs", "0"]).status.code(),
        Some(2)
    );
    // clap's own usage errors also exit with 2
    assert_eq!(
        grovermin(&["run", "gp", "--schedule", "fibonacci"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(grovermin(&["run", "nonsense"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gp.toml");
    fs::write(&path, grovermin::cli::Experiment::Gp.default_config()).unwrap();
    let out = grovermin(&["run", "lj-trimer", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emitted_distributions_are_normalised() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "run",
        "gp",
        "--seed",
        "3",
        "--out",
        out,
        "--emit-distributions",
    ]);
    let traces = json_lines(&dir.path().join("traces.jsonl"));
    let rounds = traces[0]["rounds"].as_array().unwrap().len();
    let dist = dir.path().join("distributions");
    assert_eq!(fs::read_dir(&dist).unwrap().count(), rounds);

    let mut first = csv::Reader::from_path(dist.join("run000_round001.csv")).unwrap();
    assert_eq!(
        first.headers().unwrap().iter().collect::<Vec<_>>(),
        ["index", "x1", "x2", "f", "probability"]
    );
    let rows: Vec<csv::StringRecord> = first.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1024);
    for r in &rows {
        let p: f64 = r[4].parse().unwrap();
        assert!((p - 1.0 / 1024.0).abs() < 1e-15);
        let point = [r[1].parse::<f64>().unwrap(), r[2].parse::<f64>().unwrap()];
        assert_eq!(
            r[3].parse::<f64>().unwrap(),
            GoldsteinPrice.evaluate(&point)
        );
    }

    for round in 1..=rounds {
        let mut rd =
            csv::Reader::from_path(dist.join(format!("run000_round{round:03}.csv"))).unwrap();
        let total: f64 = rd
            .records()
            .map(|r| r.unwrap()[4].parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-10, "round {round}: {total}");
    }
}

#[test]
fn appendix_distributions_show_full_amplification() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&[
        "run",
        "appendix-demo",
        "--out",
        dir.path().to_str().unwrap(),
        "--emit-distributions",
    ]);
    assert!(stdout.contains("experiment=appendix-demo"));
    let dist = dir.path().join("distributions");
    let source: Vec<csv::StringRecord> = csv::Reader::from_path(dist.join("step1_source.csv"))
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect();
    assert_eq!(source.len(), 4);
    assert!(source.iter().all(|r| &r[4] == "0.25"));
    let last: Vec<csv::StringRecord> = csv::Reader::from_path(dist.join("step5_final.csv"))
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect();
    assert_eq!(last.len(), 1);
    assert_eq!(&last[0][0], "0");
    assert_eq!(last[0][4].parse::<f64>().unwrap(), 1.0);

    let doc: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("appendix.json")).unwrap())
            .unwrap();
    assert_eq!(floats(&doc["final_state"]), vec![1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn search_traces_revalidate_against_the_objective() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["run", "gp", "--seed", "11", "--runs", "3", "--out", out]);
    check_search_traces(&dir.path().join("traces.jsonl"), &GoldsteinPrice);

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "run",
        "lj-trimer",
        "--seed",
        "11",
        "--runs",
        "3",
        "--out",
        out,
    ]);
    check_search_traces(
        &dir.path().join("traces.jsonl"),
        &LjTrimer { shared_bond: true },
    );

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "run",
        "shubert-pivot",
        "--seed",
        "11",
        "--runs",
        "2",
        "--out",
        out,
    ]);
    for doc in json_lines(&dir.path().join("traces.jsonl")) {
        let p = floats(&doc["best_point"]);
        let v = doc["best_value"].as_f64().unwrap();
        assert!((Shubert.evaluate(&p) - v).abs() <= 1e-12 * v.abs().max(1.0));
        let gens = doc["generations"].as_array().unwrap();
        let total: u64 = gens
            .iter()
            .map(|g| g["grover_iterations"].as_u64().unwrap())
            .sum();
        assert_eq!(total, doc["total_iterations"].as_u64().unwrap());
    }
}

fn check_search_traces(path: &Path, objective: &dyn Objective) {
    let docs = json_lines(path);
    assert!(!docs.is_empty());
    for (i, doc) in docs.iter().enumerate() {
        assert_eq!(doc["run_id"].as_u64().unwrap(), i as u64);
        let mut threshold = f64::INFINITY;
        let mut iterations = 0;
        for round in doc["rounds"].as_array().unwrap() {
            let point = floats(&round["point"]);
            let value = round["value"].as_f64().unwrap();
            assert!((objective.evaluate(&point) - value).abs() <= 1e-12 * value.abs().max(1.0));
            threshold = threshold.min(value);
            assert_eq!(round["threshold"].as_f64().unwrap(), threshold);
            iterations += round["iterations"].as_u64().unwrap();
        }
        assert_eq!(doc["best_value"].as_f64().unwrap(), threshold);
        assert_eq!(doc["total_iterations"].as_u64().unwrap(), iterations);
    }
}

#[test]
fn brute_agrees_with_search_and_ensemble_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let stdout = ok(&["brute", "--out", out]);
    assert!(
        stdout.contains("best=3 point=[0,-1] num_evaluations=1024"),
        "{stdout}"
    );
    let brute: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("brute.json")).unwrap()).unwrap();
    assert_eq!(brute["value"].as_f64(), Some(3.0));

    let gp = ok(&["run", "gp"]);
    assert!(gp.contains("best=3 point=[0,-1]"), "{gp}");

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["ensemble", "--runs", "25", "--out", out]);
    let stats: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["runs"].as_u64(), Some(25));
    for name in [
        "runs.jsonl",
        "rounds_histogram.csv",
        "iterations_histogram.csv",
    ] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let hist: usize = csv::Reader::from_path(dir.path().join("rounds_histogram.csv"))
        .unwrap()
        .records()
        .map(|r| r.unwrap()[1].parse::<usize>().unwrap())
        .sum();
    assert_eq!(hist, 25);
}

#[test]
fn growth_run_reports_each_stage() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["run", "lj-grow", "--out", dir.path().to_str().unwrap()]);
    assert!(stdout.lines().any(|l| l.starts_with("atoms=4")));
    assert!(stdout.lines().any(|l| l.starts_with("atoms=5")));
    let doc: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("growth.json")).unwrap()).unwrap();
    let stages = doc["stages"].as_array().unwrap();
    assert_eq!(stages.last().unwrap()["atoms"].as_u64(), Some(5));
    let energies: Vec<f64> = stages
        .iter()
        .map(|s| s["energy"].as_f64().unwrap())
        .collect();
    assert!(energies.windows(2).all(|w| w[1] < w[0]), "{energies:?}");
}
