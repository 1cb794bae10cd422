use std::path::Path;
use std::process::{Command, Output};

use glyphline::neuralnet::{lr_at, SolverConfig};
use serde_json::Value;

fn glyphline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glyphline"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = glyphline(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn run_writes_one_report_per_seal_and_lists_unreadable_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let seals = dir.path().join("seals");
    ok(&["synth", "--count", "3", "--seed", "4", "--out", s(&seals)]);
    std::fs::write(seals.join("zz_broken.png"), b"not an image").unwrap();

    let out = dir.path().join("out");
    let res = glyphline(&["run", s(&seals), "--out", s(&out), "--stage", "seal"]);
    assert_eq!(res.status.code(), Some(1));
    for i in 0..3 {
        let report = read_json(&out.join(format!("seal_{i:04}.json")));
        assert_eq!(report["completed"], "seal");
    }
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["reports"].as_array().unwrap().len(), 3);
    let failed = summary["failed"].as_array().unwrap();
    assert_eq!(failed.len(), 1);
    assert!(failed[0]["input"].as_str().unwrap().ends_with("zz_broken.png"));
}

#[test]
fn proposals_stage_stops_before_classification() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--count", "1", "--seed", "9", "--out", s(dir.path())]);
    let stdout = ok(&["stage", "proposals", s(&dir.path().join("seal_0000.png"))]);
    let report: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(report["completed"], "proposals");
    assert!(!report["proposals"].as_array().unwrap().is_empty());
    assert!(report["regions"].as_array().unwrap().is_empty());
    assert!(report["glyphs"].as_array().unwrap().is_empty());
    assert!(report.get("timings").is_none());
}

#[test]
fn missing_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["synth", "--count", "1", "--out", s(dir.path())]);
    let res = glyphline(&[
        "stage",
        "regions",
        s(&dir.path().join("seal_0000.png")),
        "--region-model",
        "/nonexistent/region.json",
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("/nonexistent/region.json"));

    let res = glyphline(&["stage", "regions", s(&dir.path().join("seal_0000.png"))]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn bad_flags_and_config_exit_with_two() {
    assert_eq!(glyphline(&["run"]).status.code(), Some(2));
    assert_eq!(glyphline(&["synth", "--out", "x", "--layout", "diagonal"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[pipeline]\nno_such_key = 1\n").unwrap();
    let res = glyphline(&["--config", s(&cfg), "synth", "--count", "1", "--out", s(dir.path())]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn training_trace_and_evaluation_agree() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("glyphs");
    ok(&["synth", "--kind", "glyphs", "--count", "20", "--seed", "3", "--out", s(&corpus)]);
    let manifest = corpus.join("manifest.csv");
    let model = dir.path().join("glyph.json");
    let report: Value = serde_json::from_str(&ok(&[
        "train",
        "--role",
        "glyph2",
        "--manifest",
        s(&manifest),
        "--out",
        s(&model),
        "--max-iter",
        "25",
        "--seed",
        "3",
    ]))
    .unwrap();
    assert_eq!(report["train_samples"], 28);
    assert_eq!(report["val_samples"], 12);

    let solver = SolverConfig::glyph_classifier();
    let mut rows = csv::Reader::from_path(dir.path().join("glyph.trace.csv")).unwrap();
    assert_eq!(
        rows.headers().unwrap(),
        vec!["iteration", "loss", "lr", "val_accuracy"]
    );
    let mut n = 0;
    for row in rows.records() {
        let row = row.unwrap();
        let it: u64 = row[0].parse().unwrap();
        let lr: f64 = row[2].parse().unwrap();
        assert!((lr - lr_at(&solver, it)).abs() <= 1e-12, "iteration {it}");
        assert!(row[1].parse::<f64>().unwrap().is_finite());
        n += 1;
    }
    assert_eq!(n, report["iterations"].as_u64().unwrap());

    let eval: Value =
        serde_json::from_str(&ok(&["eval", "--model", s(&model), "--manifest", s(&manifest)])).unwrap();
    let confusion: Vec<Vec<u64>> = serde_json::from_value(eval["confusion"].clone()).unwrap();
    let total: u64 = confusion.iter().flatten().sum();
    let diagonal: u64 = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    assert_eq!(total, 40);
    assert_eq!(eval["total"], 40);
    assert_eq!(eval["correct"], diagonal);
    let acc = eval["accuracy"].as_f64().unwrap();
    assert!((acc - diagonal as f64 / 40.0).abs() < 1e-12);
}

#[test]
fn training_without_every_class_fails() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("glyphs");
    ok(&["synth", "--kind", "glyphs", "--count", "5", "--out", s(&corpus)]);
    let text = std::fs::read_to_string(corpus.join("manifest.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let rows: Vec<&str> = lines.collect();
    let first_label = rows[0].rsplit(',').next().unwrap();
    let kept: Vec<&str> = rows.into_iter().filter(|r| r.rsplit(',').next() == Some(first_label)).collect();
    let one_class = corpus.join("one_class.csv");
    std::fs::write(&one_class, format!("{header}\n{}\n", kept.join("\n"))).unwrap();

    let model = dir.path().join("m.json");
    let res = glyphline(&["train", "--role", "glyph2", "--manifest", s(&one_class), "--out", s(&model), "--max-iter", "20"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(!model.exists());
    assert!(!String::from_utf8_lossy(&res.stderr).is_empty());
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["synth", "--count", "2", "--seed", "21", "--noise", "0.5", "--layout", "mixed", "--out", s(d)]);
    }
    for name in ["seal_0000.png", "seal_0000.json", "seal_0001.png", "seal_0001.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}
