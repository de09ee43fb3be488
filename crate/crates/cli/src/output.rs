//! Result bundles: per-trial CSVs, aggregate JSON, and cascade summaries,
//! written atomically (staging directory + rename).
//!
//! CSV columns are exactly `trial,timestep,metric,value`; floats print in
//! Rust's shortest round-trip form, so bundles are byte-identical across
//! runs and worker counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use simrec_core::diffusion::CascadeStats;

use crate::config::ResolvedExperiment;
use crate::trial::{NameTable, TrialOutput};

/// Start an atomic bundle: everything is written under a `.partial` staging
/// directory and renamed into place on commit.
pub struct BundleWriter {
    final_dir: PathBuf,
    staging: PathBuf,
}

impl BundleWriter {
    pub fn create(out: &Path) -> Result<BundleWriter> {
        if out.exists() {
            bail!(
                "output directory {} already exists; refusing to overwrite",
                out.display()
            );
        }
        if let Some(parent) = out.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
        }
        let staging = out.with_extension("partial");
        if staging.exists() {
            std::fs::remove_dir_all(&staging)
                .with_context(|| format!("clearing stale {}", staging.display()))?;
        }
        std::fs::create_dir_all(&staging)
            .with_context(|| format!("creating {}", staging.display()))?;
        Ok(BundleWriter {
            final_dir: out.to_path_buf(),
            staging,
        })
    }

    pub fn write_file(&self, rel: &str, contents: &str) -> Result<()> {
        let path = self.staging.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    pub fn commit(self) -> Result<PathBuf> {
        std::fs::rename(&self.staging, &self.final_dir).with_context(|| {
            format!(
                "renaming {} to {}",
                self.staging.display(),
                self.final_dir.display()
            )
        })?;
        Ok(self.final_dir)
    }
}

/// Aggregate statistics across trials, per metric and timestep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub metrics: BTreeMap<String, AggregateSeries>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregateSeries {
    pub timesteps: Vec<u32>,
    pub count: Vec<usize>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Mean and sample SD (n−1 denominator; 0 when n < 2) across trials for
/// every (metric, timestep) pair, in trial order.
pub fn compute_aggregate(outputs: &[TrialOutput], names: &NameTable) -> Aggregate {
    let mut per_metric: BTreeMap<String, BTreeMap<u32, Vec<f64>>> = BTreeMap::new();
    for out in outputs {
        for &(id, t, v) in &out.rows {
            per_metric
                .entry(names.name(id).to_string())
                .or_default()
                .entry(t)
                .or_default()
                .push(v);
        }
    }
    let mut metrics = BTreeMap::new();
    for (name, by_t) in per_metric {
        let mut series = AggregateSeries {
            timesteps: Vec::new(),
            count: Vec::new(),
            mean: Vec::new(),
            sd: Vec::new(),
        };
        for (t, values) in by_t {
            let n = values.len();
            let mean = values.iter().sum::<f64>() / n as f64;
            let sd = if n < 2 {
                0.0
            } else {
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
                    .sqrt()
            };
            series.timesteps.push(t);
            series.count.push(n);
            series.mean.push(mean);
            series.sd.push(sd);
        }
        metrics.insert(name, series);
    }
    Aggregate {
        trials: outputs.len(),
        metrics,
    }
}

pub fn trial_csv(out: &TrialOutput, names: &NameTable) -> String {
    let mut csv = String::from("trial,timestep,metric,value\n");
    for &(id, t, v) in &out.rows {
        writeln!(csv, "{},{},{},{}", out.trial, t, names.name(id), v).expect("string write");
    }
    csv
}

pub fn trial_file_name(trial: usize) -> String {
    format!("trials/trial_{trial:05}.csv")
}

/// Write a feedback-loop experiment bundle and return the final path.
pub fn write_feedback_bundle(
    out: &Path,
    resolved: &ResolvedExperiment,
    outputs: &[TrialOutput],
    names: &NameTable,
) -> Result<PathBuf> {
    let writer = BundleWriter::create(out)?;
    writer.write_file(
        "config.json",
        &serde_json::to_string_pretty(resolved).context("serializing config")?,
    )?;
    for output in outputs {
        writer.write_file(&trial_file_name(output.trial), &trial_csv(output, names))?;
    }
    let aggregate = compute_aggregate(outputs, names);
    #[derive(Serialize)]
    struct AggregateFile<'a> {
        config: &'a ResolvedExperiment,
        #[serde(flatten)]
        aggregate: &'a Aggregate,
    }
    writer.write_file(
        "aggregate.json",
        &serde_json::to_string_pretty(&AggregateFile {
            config: resolved,
            aggregate: &aggregate,
        })
        .context("serializing aggregate")?,
    )?;
    writer.commit()
}

/// Per-cell cascade results: grid coordinates plus the batch statistics.
#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub alpha: f64,
    pub r: f64,
    pub mean_degrees: Vec<f64>,
    #[serde(flatten)]
    pub stats: CascadeStats,
}

pub fn cell_dir(alpha: f64, r: f64) -> String {
    format!("cells/alpha_{alpha}_r_{r}")
}

pub fn write_goel_bundle(
    out: &Path,
    resolved: &ResolvedExperiment,
    cells: &[CellSummary],
) -> Result<PathBuf> {
    let writer = BundleWriter::create(out)?;
    writer.write_file(
        "config.json",
        &serde_json::to_string_pretty(resolved).context("serializing config")?,
    )?;
    for cell in cells {
        let dir = cell_dir(cell.alpha, cell.r);
        writer.write_file(
            &format!("{dir}/summary.json"),
            &serde_json::to_string_pretty(cell).context("serializing cell")?,
        )?;
        let mut csv = String::from("trial,size,virality\n");
        for &(trial, size, virality) in &cell.stats.popular {
            writeln!(csv, "{trial},{size},{virality}").expect("string write");
        }
        writer.write_file(&format!("{dir}/popular.csv"), &csv)?;
    }
    #[derive(Serialize)]
    struct SummaryFile<'a> {
        config: &'a ResolvedExperiment,
        cells: &'a [CellSummary],
    }
    writer.write_file(
        "summary.json",
        &serde_json::to_string_pretty(&SummaryFile {
            config: resolved,
            cells,
        })
        .context("serializing summary")?,
    )?;
    writer.commit()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_mean_sd_hand_check() {
        let names = NameTable {
            names: vec!["m/a".into()],
        };
        let outputs = vec![
            TrialOutput {
                trial: 0,
                rows: vec![(0, 0, 1.0), (0, 1, 2.0)],
            },
            TrialOutput {
                trial: 1,
                rows: vec![(0, 0, 3.0), (0, 1, 2.0)],
            },
        ];
        let agg = compute_aggregate(&outputs, &names);
        let s = &agg.metrics["m/a"];
        assert_eq!(s.timesteps, vec![0, 1]);
        assert_eq!(s.mean, vec![2.0, 2.0]);
        assert!((s.sd[0] - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(s.sd[1], 0.0);
    }

    #[test]
    fn csv_format_is_exact() {
        let names = NameTable {
            names: vec!["homogenization/content".into()],
        };
        let out = TrialOutput {
            trial: 3,
            rows: vec![(0, 7, 0.125)],
        };
        assert_eq!(
            trial_csv(&out, &names),
            "trial,timestep,metric,value\n3,7,homogenization/content,0.125\n"
        );
    }

    #[test]
    fn bundle_refuses_existing_output() {
        let dir = std::env::temp_dir().join("simrec-bundle-exists-test");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        assert!(BundleWriter::create(&dir).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bundle_commit_renames_staging() {
        let base = std::env::temp_dir().join("simrec-bundle-commit-test");
        let _ = std::fs::remove_dir_all(&base);
        let out = base.join("bundle");
        let writer = BundleWriter::create(&out).unwrap();
        writer.write_file("config.json", "{}").unwrap();
        assert!(!out.exists());
        writer.commit().unwrap();
        assert!(out.join("config.json").exists());
        assert!(!out.with_extension("partial").exists());
        std::fs::remove_dir_all(&base).unwrap();
    }
}
