use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const CONFIG: &str = r#"{
  "seed": 5,
  "synth": {
    "block_sizes": [60, 60],
    "p_in": 0.15,
    "p_out": 0.01,
    "sens_alignment": 0.9,
    "label_homophily": [0.85, 0.35],
    "feature_dim": 6,
    "feature_signal": 3.0
  },
  "walks": { "walks_per_node": 4, "walk_length": 20 },
  "skipgram": { "dim": 16, "epochs": 2 },
  "cluster": { "k": 2 },
  "coreset": { "total_budget": 20 },
  "train": { "epochs": 60 },
  "sweep": { "total_budgets": [10, 20, 30, 50] }
}"#;

fn commaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_commaudit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config_file(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, CONFIG).unwrap();
    path
}

fn stage(name: &str, config: &Path, out: &Path, extra: &[&str]) -> Value {
    let mut args = vec![
        name,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = commaudit(&args);
    assert!(
        o.status.success(),
        "{name} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1, "one summary line");
    serde_json::from_str(&stdout).unwrap()
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.clone(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn ground_truth_predictions_audit_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_file(dir.path());
    let out = dir.path().join("out");
    stage("synth", &config, &out, &[]);
    let labels = std::fs::read_to_string(out.join("graph/labels.txt")).unwrap();
    let mut csv = String::from("node_id,pred_label,score\n");
    for (u, y) in labels.lines().enumerate() {
        csv.push_str(&format!("{u},{y},{y}\n"));
    }
    let preds = dir.path().join("truth.csv");
    std::fs::write(&preds, csv).unwrap();
    let summary = stage(
        "audit",
        &config,
        &out,
        &["--predictions", preds.to_str().unwrap(), "--all-nodes"],
    );
    assert_eq!(summary["acc"], 1.0);
    let report = read_json(&out.join("report.json"));
    let graph = &report["scopes"][0];
    assert_eq!(graph["scope"], "graph");
    assert_eq!(graph["acc"], 1.0);
    assert_eq!(graph["auc"], 1.0);
    for key in ["sp_signed", "sp_abs", "eo_signed", "eo_abs"] {
        assert!(graph[key].is_number(), "{key} undefined");
    }
    assert_eq!(graph["eo_abs"], 0.0);
}

#[test]
fn staged_pipeline_preserves_inputs_and_records_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_file(dir.path());
    let out = dir.path().join("out");
    for name in [
        "synth",
        "embed",
        "cluster",
        "homophily",
        "coreset",
        "train",
        "audit",
        "sweep",
    ] {
        let before = snapshot(dir.path());
        let summary = stage(name, &config, &out, &[]);
        assert_eq!(summary["stage"], name);
        let after = snapshot(dir.path());
        for (path, bytes) in &before {
            assert_eq!(
                after.get(path),
                Some(bytes),
                "{name} modified {}",
                path.display()
            );
        }
    }
    let sidecars = [
        "embeddings.json",
        "communities.json",
        "homophily.json",
        "coreset.json",
        "train.json",
        "audit.json",
        "sweep.json",
    ];
    let manifest = read_json(&out.join("graph/manifest.json"));
    let hash = manifest["provenance"]["config_hash"]
        .as_str()
        .unwrap()
        .to_string();
    assert_eq!(hash.len(), 64);
    for name in sidecars {
        let prov = &read_json(&out.join(name))["provenance"];
        assert_eq!(prov["config_hash"], hash.as_str(), "{name}");
        assert_eq!(prov["seed"], 5, "{name}");
    }
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);
    let plot = std::fs::read_to_string(out.join("sweep_plot.csv")).unwrap();
    assert_eq!(plot.lines().next().unwrap().split(',').count(), 5);
}

#[test]
fn full_run_is_byte_identical_across_directories() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_file(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    stage("run", &config, &a, &[]);
    stage("run", &config, &b, &[]);
    for f in [
        "report.json",
        "report.csv",
        "plot_data.csv",
        "audit.json",
        "predictions.csv",
        "model.bin",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_file(dir.path());
    let out = dir.path().join("out");
    stage("synth", &config, &out, &["--seed", "77"]);
    let manifest = read_json(&out.join("graph/manifest.json"));
    assert_eq!(manifest["provenance"]["seed"], 77);
}

fn failure(args: &[&str]) -> (i32, Value) {
    let o = commaudit(args);
    let err: Value = serde_json::from_slice(&o.stderr).unwrap_or(Value::Null);
    (o.status.code().unwrap(), err)
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let (code, err) = failure(&["synth", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(code, 2);
    assert_eq!(err["error"], "config");

    let unknown = dir.path().join("unknown.json");
    std::fs::write(&unknown, r#"{"sede": 3}"#).unwrap();
    assert_eq!(
        failure(&["synth", "--config", unknown.to_str().unwrap(), "--out", out]).0,
        2
    );

    let invalid = dir.path().join("invalid.json");
    std::fs::write(&invalid, r#"{"synth": {"block_sizes": [10], "p_in": 1.5, "p_out": 0.1, "sens_alignment": 0.9, "feature_dim": 2, "feature_signal": 1.0}}"#).unwrap();
    assert_eq!(
        failure(&["synth", "--config", invalid.to_str().unwrap(), "--out", out]).0,
        2
    );

    let (code, err) = failure(&["embed", "--out", out]);
    assert_eq!(code, 3);
    assert_eq!(err["error"], "data");
    assert!(err["message"].is_string());

    assert_eq!(
        commaudit(&["embed", "--dim", "many"]).status.code(),
        Some(2)
    );
}
