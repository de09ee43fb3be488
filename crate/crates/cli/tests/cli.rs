//! End-to-end checks of the `simrec` binary and bundle invariants.

use std::path::{Path, PathBuf};
use std::process::Command;

fn simrec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_simrec"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("simrec-cli-tests").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn graph_gen_writes_sorted_edge_list() {
    let dir = temp_dir("graph-gen");
    let out = dir.join("graph.txt");
    let result = simrec()
        .args(["graph", "gen", "--n", "500", "--alpha", "2.5", "--seed", "3"])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(result.status.success(), "{result:?}");
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("mean degree"), "stdout: {stdout}");
    let text = std::fs::read_to_string(&out).unwrap();
    let mut last: Option<(u32, u32)> = None;
    for line in text.lines() {
        let mut it = line.split_whitespace();
        let u: u32 = it.next().unwrap().parse().unwrap();
        let v: u32 = it.next().unwrap().parse().unwrap();
        assert_ne!(u, v, "self-loop survived cleanup");
        let edge = (u, v);
        if let Some(prev) = last {
            assert!(edge > prev, "edge list not sorted: {prev:?} then {edge:?}");
        }
        last = Some(edge);
    }
    let loaded = simrec_core::diffusion::DiffusionNetwork::load_edge_list(&out).unwrap();
    assert!(loaded.num_edges() > 0);
}

#[test]
fn unknown_preset_fails_with_diagnostic() {
    let result = simrec().args(["replicate", "chanye-single"]).output().unwrap();
    assert!(!result.status.success());
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("chanye-single"), "stderr: {stderr}");
}

#[test]
fn config_typo_names_the_key() {
    let dir = temp_dir("typo");
    let config = dir.join("bad.json");
    std::fs::write(&config, r#"{"preset": "goel", "usres": 4}"#).unwrap();
    let result = simrec()
        .arg("run")
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert!(!result.status.success());
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("usres"), "stderr: {stderr}");
}

#[test]
fn existing_output_directory_is_refused() {
    let dir = temp_dir("noclobber");
    let out = dir.join("bundle");
    std::fs::create_dir_all(&out).unwrap();
    let result = simrec()
        .args([
            "replicate",
            "goel",
            "--override",
            r#"{"goel": {"alphas": [2.3], "rs": [0.5], "nodes": 300,
                 "graphs_per_alpha": 1, "cascades_per_cell": 100}}"#,
        ])
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!result.status.success());
    let stderr = String::from_utf8(result.stderr).unwrap();
    assert!(stderr.contains("already exists"), "stderr: {stderr}");
}

fn run_tiny_feedback(out: &Path) {
    let result = simrec()
        .args([
            "replicate",
            "chaney-single",
            "--trials",
            "3",
            "--seed",
            "21",
            "--workers",
            "2",
            "--override",
            r#"{"sim": {"num_users": 8, "timesteps": 15, "startup_steps": 6,
                 "new_items_per_step": 3, "list_size": 3, "mf_factors": 2}}"#,
        ])
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stdout = String::from_utf8(result.stdout).unwrap();
    assert!(stdout.contains("\"preset\""), "resolved config not echoed");
    assert!(stdout.contains("bundle written"), "stdout: {stdout}");
}

#[test]
fn bundle_is_self_describing_and_aggregate_is_recomputable() {
    let dir = temp_dir("bundle");
    let out = dir.join("bundle");
    run_tiny_feedback(&out);

    // The per-trial CSVs carry the exact schema.
    let csv = std::fs::read_to_string(out.join("trials/trial_00000.csv")).unwrap();
    assert!(csv.starts_with("trial,timestep,metric,value\n"));

    // Recompute the aggregate from the CSV text and compare to the emitted
    // aggregate within 1e-12.
    let mut per_metric: std::collections::BTreeMap<String, std::collections::BTreeMap<u32, Vec<f64>>> =
        Default::default();
    for trial in 0..3 {
        let text =
            std::fs::read_to_string(out.join(format!("trials/trial_{trial:05}.csv"))).unwrap();
        for line in text.lines().skip(1) {
            let mut parts = line.splitn(4, ',');
            let _trial: usize = parts.next().unwrap().parse().unwrap();
            let t: u32 = parts.next().unwrap().parse().unwrap();
            let metric = parts.next().unwrap().to_string();
            let value: f64 = parts.next().unwrap().parse().unwrap();
            per_metric.entry(metric).or_default().entry(t).or_default().push(value);
        }
    }
    let aggregate: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("aggregate.json")).unwrap())
            .unwrap();
    let metrics = aggregate["metrics"].as_object().unwrap();
    assert_eq!(metrics.len(), per_metric.len());
    for (name, by_t) in &per_metric {
        let series = &metrics[name];
        let timesteps: Vec<u32> = series["timesteps"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap() as u32)
            .collect();
        let means: Vec<f64> = series["mean"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        let sds: Vec<f64> = series["sd"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert_eq!(timesteps.len(), by_t.len());
        for (idx, (t, values)) in by_t.iter().enumerate() {
            assert_eq!(*t, timesteps[idx], "{name}: timestep order differs");
            let n = values.len() as f64;
            let m = values.iter().sum::<f64>() / n;
            let s = if values.len() < 2 {
                0.0
            } else {
                (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
            };
            assert!((m - means[idx]).abs() <= 1e-12, "{name}: mean {m} vs {}", means[idx]);
            assert!((s - sds[idx]).abs() <= 1e-12, "{name}: sd {s} vs {}", sds[idx]);
        }
    }

    // The bundle embeds the resolved config: re-running it reproduces the
    // trial files byte for byte.
    let config_text = std::fs::read_to_string(out.join("config.json")).unwrap();
    let resolved: simrec::config::ResolvedExperiment =
        serde_json::from_str(&config_text).unwrap();
    let out2 = dir.join("bundle2");
    simrec::experiment::run_experiment(&resolved, 1, &out2).unwrap();
    for trial in 0..3 {
        let rel = format!("trials/trial_{trial:05}.csv");
        assert_eq!(
            std::fs::read_to_string(out.join(&rel)).unwrap(),
            std::fs::read_to_string(out2.join(&rel)).unwrap(),
            "re-run from embedded config differs at {rel}"
        );
    }
}
