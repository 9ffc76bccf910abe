use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use influtopic::pipeline::{load_model, run, PipelineConfig, Stage};
use influtopic::synthetic::{write_jsonl, InfluenceCorpusSpec};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_influtopic"));
    c.env("RUST_LOG", "warn");
    c
}

fn mini() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mini_corpus.jsonl")
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn fit_without_graph_names_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["fit", "--out-dir"]).arg(dir.path()).args(["--k", "3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("run `graph` first"), "{stderr}");
}

#[test]
fn bad_flag_values_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("all").arg("--input").arg(mini()).arg("--out-dir").arg(dir.path()).args(["--k", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().arg("all").arg("--input").arg(mini()).arg("--out-dir").arg(dir.path()).args(["--preset", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.jsonl");
    std::fs::write(&input, "{\"post_id\":\"a\",\"timestamp\":\"2024-01-01T00:00:00Z\",\"text\":\"x y\",\"likes\":\"abc\",\"comments\":0,\"followers\":1}\n").unwrap();
    let out = bin().arg("ingest").arg("--input").arg(&input).arg("--out-dir").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(":1:") && stderr.contains("likes"), "{stderr}");
}

#[test]
fn chained_stages_write_every_artifact_with_a_schema_header() {
    let dir = tempfile::tempdir().unwrap();
    let base = |stage: &str| {
        let mut c = bin();
        c.arg(stage).arg("--out-dir").arg(dir.path());
        c
    };
    ok(base("ingest").arg("--input").arg(mini()).output().unwrap());
    ok(base("weights").output().unwrap());
    ok(base("graph").output().unwrap());
    ok(base("fit").args(["--k", "3", "--seed", "7"]).output().unwrap());
    ok(base("report").args(["--m", "5"]).output().unwrap());

    for name in ["weights.tsv", "vocab.txt", "edges.tsv", "trace.csv", "topics.tsv", "events.tsv", "assignments.tsv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with("# influtopic-schema: 1\n"), "{name}");
    }
    for name in ["graph.json", "model.json", "metrics.json", "run_fit.json"] {
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap();
        assert_eq!(v["schema_version"], 1, "{name}");
    }
    let weights = std::fs::read_to_string(dir.path().join("weights.tsv")).unwrap();
    assert!(weights.lines().nth(1).unwrap().starts_with("post_id\titf\tiidf\tY\tmean_gap_hours"));
    let run_fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_fit.json")).unwrap()).unwrap();
    assert_eq!(run_fit["config"]["solver"]["seed"], 7);
    assert_eq!(run_fit["config"]["solver"]["k"], 3);

    let (model, _) = load_model(dir.path()).unwrap();
    assert_eq!(model.k(), 3);
    let topics = std::fs::read_to_string(dir.path().join("topics.tsv")).unwrap();
    assert_eq!(topics.lines().count(), 2 + 3);
    let assignments = std::fs::read_to_string(dir.path().join("assignments.tsv")).unwrap();
    assert_eq!(assignments.lines().count(), 2 + 12);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, format!("# mini corpus\ninput = {}\nk = 4\nseed = 7\nm = 5\n", mini().display())).unwrap();
    ok(bin().arg("all").arg("--config").arg(&conf).arg("--out-dir").arg(dir.path()).args(["--k", "2"]).output().unwrap());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(m["K"], 2);
}

#[test]
fn planted_sweep_selects_three_topics() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("planted.jsonl");
    let spec = InfluenceCorpusSpec {
        posts: 60,
        theme_vocab: 5,
        theme_words_per_post: 5,
        coherent_every: 1,
        ..Default::default()
    };
    write_jsonl(&spec.generate(), &input).unwrap();
    ok(bin()
        .arg("all")
        .arg("--input")
        .arg(&input)
        .arg("--out-dir")
        .arg(dir.path())
        .args(["--k-list", "2,3,4", "--m", "5"])
        .output()
        .unwrap());
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sidecar["selected_k"], 3);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("K,NPMI,Cv,TD"));
    assert_eq!(csv.lines().count(), 2 + 3);
}

#[test]
fn presets_change_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = |preset: &str| {
        PipelineConfig::from_pairs(&[
            ("input".to_string(), mini().display().to_string()),
            ("out-dir".to_string(), dir.path().join(preset).display().to_string()),
            ("k".to_string(), "2".to_string()),
            ("preset".to_string(), preset.to_string()),
        ])
        .unwrap()
    };
    let no_h = cfg("no-h");
    assert!(no_h.solver.freeze_h);
    run(Stage::All, &no_h).unwrap();
    let plain = cfg("plain-graph");
    run(Stage::All, &plain).unwrap();
    let g: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("plain-graph/graph.json")).unwrap()).unwrap();
    assert_eq!(g["uniform_post_weights"], true);
    assert_eq!(g["salience"], "unit");
}
