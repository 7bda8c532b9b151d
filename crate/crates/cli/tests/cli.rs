use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use elm_uq_cli::table::VarianceTable;

fn elm_uq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elm-uq")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = elm_uq(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A generated 1-D data set in `dir/data.csv`.
fn dataset(dir: &Path, n: usize) -> PathBuf {
    ok(&["generate", "--generator", "trapeze1d", "--n", &n.to_string(), "--seed", "5", "--out", s(dir)]);
    dir.join("data.csv")
}

fn fit(dir: &Path, data: &Path, neurons: usize, m: usize, seed: &str) -> PathBuf {
    let out = dir.join("fit");
    ok(&[
        "fit", "--data", s(data), "--neurons", &neurons.to_string(), "--m", &m.to_string(), "--seed", seed, "--out", s(&out),
    ]);
    out.join("model.json")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn same_seed_gives_identical_fit_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 60);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&["fit", "--data", s(&data), "--neurons", "4", "--m", "5", "--seed", "11", "--out", s(out)]);
    }
    for name in ["fit_report.csv", "model.json", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let c = dir.path().join("c");
    ok(&["fit", "--data", s(&data), "--neurons", "4", "--m", "5", "--seed", "12", "--out", s(&c)]);
    assert_ne!(fs::read(a.join("fit_report.csv")).unwrap(), fs::read(c.join("fit_report.csv")).unwrap());
}

#[test]
fn fit_report_lists_members_and_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 60);
    let model = fit(dir.path(), &data, 4, 3, "1");
    let rows = read_csv(&model.with_file_name("fit_report.csv"));
    assert_eq!(rows[0].join(","), "member,seed,rss,trace_p,trace_p2,gamma,sigma2_eps");
    assert_eq!(rows.len(), 5);
    // At alpha = 0 every member uses exactly N degrees of freedom.
    for r in &rows[1..4] {
        assert_eq!(r[5].parse::<f64>().unwrap(), 4.0);
    }
    assert_eq!(rows[4][0], "ensemble");
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(model.with_file_name("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["seed_source"], "given");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["status"], "complete");
}

#[test]
fn too_few_points_for_the_network_is_a_numeric_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 8);
    let out = elm_uq(&["fit", "--data", s(&data), "--neurons", "10", "--alpha", "0", "--seed", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("degrees of freedom"), "{msg}");
}

#[test]
fn predict_at_training_points_reproduces_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 60);
    let model = fit(dir.path(), &data, 4, 5, "3");
    let out = dir.path().join("pred");
    ok(&["predict", "--model", s(&model), "--query", s(&data), "--out", s(&out)]);
    let pred = read_csv(&out.join("predictions.csv"));
    assert_eq!(pred[0], ["point", "x1", "f_hat"]);

    let container: serde_json::Value = serde_json::from_slice(&fs::read(&model).unwrap()).unwrap();
    let y: Vec<f64> = read_csv(&data)[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    let members = container["members"].as_array().unwrap();
    for (i, row) in pred[1..].iter().enumerate() {
        // f_hat = y - mean residual over members.
        let r: f64 = members.iter().map(|m| m["residuals"][0][i].as_f64().unwrap()).sum::<f64>() / members.len() as f64;
        let fhat: f64 = row[2].parse().unwrap();
        assert!((fhat - (y[i] - r)).abs() < 1e-10, "point {i}: {fhat} vs {}", y[i] - r);
    }
}

#[test]
fn homoskedastic_request_has_no_heteroskedastic_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 60);
    let model = fit(dir.path(), &data, 4, 5, "3");
    let out = dir.path().join("var");
    ok(&["variance", "--model", s(&model), "--query", s(&data), "--estimators", "NHo,BR", "--out", s(&out)]);
    let rows = read_csv(&out.join("variance.csv"));
    assert_eq!(rows[0], ["point", "f_hat", "sigma2_fhat", "sigma2_NHo", "sigma2_BR", "flags"]);
    assert_eq!(rows.len(), 61);
}

#[test]
fn two_members_mark_s3_unavailable() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 60);
    let model = fit(dir.path(), &data, 4, 2, "3");
    let out = dir.path().join("var");
    let res = ok(&["variance", "--model", s(&model), "--query", s(&data), "--estimators", "S2,S3", "--out", s(&out)]);
    assert!(String::from_utf8_lossy(&res.stderr).contains("S3 needs at least 3 members"));
    let rows = read_csv(&out.join("variance.csv"));
    assert_eq!(rows[0][4], "sigma2_S3");
    for r in &rows[1..] {
        assert_ne!(r[3], "NA");
        assert_eq!(r[4], "NA");
        assert!(r[5].contains("S3:unavailable"), "{r:?}");
    }
}

#[test]
fn variance_table_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 60);
    let model = fit(dir.path(), &data, 4, 4, "9");
    let out = dir.path().join("var");
    ok(&["variance", "--model", s(&model), "--query", s(&data), "--out", s(&out)]);
    let bytes = fs::read(out.join("variance.csv")).unwrap();
    let table = VarianceTable::parse(bytes.as_slice()).unwrap();
    assert_eq!(table.estimators.len(), 6);
    let mut again = Vec::new();
    table.write(&mut again).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn tampered_model_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 60);
    let model = fit(dir.path(), &data, 4, 2, "3");
    let text = fs::read_to_string(&model).unwrap().replacen("\"format\":\"elm-uq-ensemble\"", "\"format\":\"other\"", 1);
    fs::write(&model, text).unwrap();
    let out = elm_uq(&["predict", "--model", s(&model), "--query", s(&data), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_data_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "x1,y\n0.1,0.2\n0.3,oops\n").unwrap();
    let out = elm_uq(&["fit", "--data", s(&data), "--seed", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(elm_uq(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(elm_uq(&["fit"]).status.code(), Some(1));
    assert_eq!(elm_uq(&["variance", "--model", "m", "--query", "q", "--estimators", "XYZ"]).status.code(), Some(1));
    assert_eq!(elm_uq(&["--help"]).status.code(), Some(0));
    assert_eq!(elm_uq(&["--version"]).status.code(), Some(0));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let data = dataset(dir.path(), 60);
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("data = {:?}\nneurons = 3\nm = 2\nseed = 4\n", s(&data))).unwrap();
    let out = dir.path().join("o");
    ok(&["fit", "--config", s(&cfg), "--neurons", "5", "--out", s(&out)]);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["neurons"], 5);
    assert_eq!(manifest["config"]["m"], 2);
    assert_eq!(manifest["seed"], 4);

    fs::write(&cfg, "nerons = 3\n").unwrap();
    assert_eq!(elm_uq(&["fit", "--config", s(&cfg)]).status.code(), Some(1));
}

#[test]
fn missing_seed_is_generated_and_recorded() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--n", "10", "--out", s(dir.path())]);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["seed"].is_u64());
    assert_eq!(manifest["seed_source"], "generated");
}

fn tiny_experiment(out: &Path, reps: &str, seed: &str) {
    ok(&[
        "experiment", "--generator", "trapeze1d", "--n", "30", "--n-test", "20", "--grid", "11", "--neurons", "3", "--m",
        "2,4", "--reps", reps, "--gt-reps", "20", "--seed", seed, "--out", s(out),
    ]);
}

#[test]
fn experiment_is_deterministic_and_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    tiny_experiment(&a, "3", "8");
    ok(&[
        "experiment", "--generator", "trapeze1d", "--n", "30", "--n-test", "20", "--grid", "11", "--neurons", "3", "--m",
        "2,4", "--reps", "3", "--gt-reps", "20", "--seed", "8", "--threads", "1", "--out", s(&b),
    ]);
    for name in ["summary.csv", "repetitions.csv", "coverage.csv", "g_samples.csv", "ground_truth.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    let summary = read_csv(&a.join("summary.csv"));
    assert_eq!(summary[0], ["M", "split", "source", "metric", "mean", "sd"]);
    // The ground-truth se is a single number; everything else varies over repetitions.
    assert!(summary[1..].iter().all(|r| r[2] == "truth" || !r[5].is_empty()));
    // S3 needs three members, so M = 2 has no S3 rows.
    assert!(!summary.iter().any(|r| r[0] == "2" && r[2] == "S3"));
    assert!(summary.iter().any(|r| r[0] == "4" && r[2] == "S3"));
}

#[test]
fn single_repetition_has_no_standard_deviations() {
    let dir = tempfile::tempdir().unwrap();
    tiny_experiment(dir.path(), "1", "2");
    let summary = read_csv(&dir.path().join("summary.csv"));
    assert!(summary.len() > 1);
    assert!(summary[1..].iter().all(|r| r[5].is_empty()), "{summary:?}");
}

#[test]
fn ground_truth_command_matches_experiment_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let exp = dir.path().join("exp");
    tiny_experiment(&exp, "2", "6");
    let gt = dir.path().join("gt");
    ok(&[
        "ground-truth", "--generator", "trapeze1d", "--n", "30", "--n-test", "20", "--grid", "11", "--neurons", "3", "--m",
        "2,4", "--gt-reps", "20", "--seed", "6", "--out", s(&gt),
    ]);
    assert_eq!(fs::read(exp.join("ground_truth.csv")).unwrap(), fs::read(gt.join("ground_truth.csv")).unwrap());
}

#[test]
fn select_reports_a_grid_value() {
    let dir = tempfile::tempdir().unwrap();
    let res = ok(&[
        "select", "neurons", "--generator", "trapeze1d", "--n", "60", "--values", "2,3,5", "--folds", "5", "--generations",
        "2", "--seed", "1", "--out", s(dir.path()),
    ]);
    assert!(String::from_utf8_lossy(&res.stdout).contains("most frequent choice"));
    let rows = read_csv(&dir.path().join("selection.csv"));
    assert_eq!(rows[0], ["generation", "neurons", "score", "selected"]);
    assert_eq!(rows.len(), 7);
    for g in ["0", "1"] {
        assert_eq!(rows.iter().filter(|r| r[0] == g && r[3] == "1").count(), 1);
    }

    let data = dataset(dir.path(), 60);
    let out = dir.path().join("alpha");
    ok(&["select", "alpha", "--data", s(&data), "--neurons", "20", "--draws", "3", "--seed", "1", "--out", s(&out)]);
    assert_eq!(read_csv(&out.join("selection.csv")).len(), 12);
}
