//! One trial of a feedback-loop experiment: a shared dataset, one run per
//! recommender kind, and homogenization measured relative to the ideal run
//! over the same user pairing.

use std::collections::BTreeSet;

use anyhow::{anyhow, Context, Result};

use simrec_core::engine::{
    dataset_stream, generate_dataset, run_stream, MetricSelection, Simulation,
};
use simrec_core::metrics::homogenization_jaccard;
use simrec_core::models::ModelKind;

use crate::config::FeedbackExperiment;

pub fn metric_name(sel: MetricSelection) -> &'static str {
    match sel {
        MetricSelection::Homogenization => "homogenization",
        MetricSelection::Mse => "mse",
        MetricSelection::CreatorEntropy => "creator_entropy",
        MetricSelection::ConsumptionDistance => "consumption_distance",
    }
}

/// Deterministic table of row labels (`metric/model`) for one experiment.
pub struct NameTable {
    pub(crate) names: Vec<String>,
}

impl NameTable {
    pub fn build(fx: &FeedbackExperiment) -> NameTable {
        let mut names = Vec::new();
        for kind in &fx.models {
            for sel in &fx.sim.metrics {
                names.push(format!("{}/{}", metric_name(*sel), kind.name()));
            }
            if fx.relative_to_ideal {
                names.push(format!("relative_homogenization/{}", kind.name()));
            }
        }
        NameTable { names }
    }

    pub fn id(&self, name: &str) -> u16 {
        self.names
            .iter()
            .position(|n| n == name)
            .unwrap_or_else(|| panic!("unknown metric name {name}")) as u16
    }

    pub fn name(&self, id: u16) -> &str {
        &self.names[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// All metric rows produced by one trial, as (name id, timestep, value).
pub struct TrialOutput {
    pub trial: usize,
    pub rows: Vec<(u16, u32, f64)>,
}

struct ModelRun {
    kind: ModelKind,
    outcome: simrec_core::engine::RunOutcome,
}

/// Run every model of the experiment against the trial's shared dataset.
pub fn run_trial(
    fx: &FeedbackExperiment,
    base_seed: u64,
    trial: usize,
    names: &NameTable,
) -> Result<TrialOutput> {
    let dataset = generate_dataset(&fx.sim, dataset_stream(base_seed, trial as u64))
        .map_err(|e| anyhow!("trial {trial}: dataset generation failed: {e}"))?;

    let mut runs: Vec<ModelRun> = Vec::with_capacity(fx.models.len());
    for &kind in &fx.models {
        let mut cfg = fx.sim.clone();
        cfg.model = kind;
        cfg.seed = base_seed;
        let mut sim = Simulation::with_dataset(
            cfg,
            dataset.clone(),
            run_stream(base_seed, trial as u64, kind),
        )
        .map_err(|e| anyhow!("trial {trial}, model {}: {e}", kind.name()))?;
        sim.run_to_completion()
            .map_err(|e| anyhow!("trial {trial}, model {}: {e}", kind.name()))?;
        runs.push(ModelRun {
            kind,
            outcome: sim.into_outcome(),
        });
    }

    let mut rows: Vec<(u16, u32, f64)> = Vec::new();
    for run in &runs {
        for series in &run.outcome.series {
            let id = names.id(&format!("{}/{}", series.name, run.kind.name()));
            for &(t, v) in &series.samples {
                rows.push((id, t, v));
            }
        }
    }

    if fx.relative_to_ideal {
        let ideal = runs
            .iter()
            .find(|r| r.kind == ModelKind::Ideal)
            .context("relative homogenization requires the ideal model in the run set")?;
        for run in &runs {
            let id = names.id(&format!("relative_homogenization/{}", run.kind.name()));
            for (t, v) in relative_homogenization_series(&run.outcome, &ideal.outcome) {
                rows.push((id, t, v));
            }
        }
    }
    Ok(TrialOutput { trial, rows })
}

/// Pointwise `model − ideal` mean Jaccard homogenization, where both sides
/// are evaluated over the model's own per-step pairing ("the same pairs").
/// Histories are replayed from the interaction logs.
fn relative_homogenization_series(
    model: &simrec_core::engine::RunOutcome,
    ideal: &simrec_core::engine::RunOutcome,
) -> Vec<(u32, f64)> {
    let num_users = model.users.num_users();
    let mut own_sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); num_users];
    let mut ideal_sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); num_users];
    let mut own_log = model.interaction_log.iter().peekable();
    let mut ideal_log = ideal.interaction_log.iter().peekable();
    let ideal_steps = ideal.executed_steps;

    let mut out = Vec::new();
    for (t, pairs) in &model.pairs_per_step {
        if *t >= ideal_steps {
            break;
        }
        while own_log.peek().map_or(false, |(_, _, ts)| ts <= t) {
            let (u, i, _) = own_log.next().unwrap();
            own_sets[*u as usize].insert(*i);
        }
        while ideal_log.peek().map_or(false, |(_, _, ts)| ts <= t) {
            let (u, i, _) = ideal_log.next().unwrap();
            ideal_sets[*u as usize].insert(*i);
        }
        let own = homogenization_jaccard(pairs, &own_sets);
        let base = homogenization_jaccard(pairs, &ideal_sets);
        out.push((*t, own - base));
    }
    out
}
