//! Experiment configuration: presets, JSON parsing with typo rejection, and
//! resolution into a fully explicit experiment description.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use simrec_core::agents::CreatorMode;
use simrec_core::engine::{
    CreatorConfig, MetricSelection, SimulationConfig, TrainingSchedule,
};
use simrec_core::models::{ModelHyperparams, ModelKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    ChaneySingle,
    ChaneyRepeated,
    Goel,
    Creators,
    Custom,
}

impl Preset {
    pub fn parse(name: &str) -> Result<Preset> {
        Ok(match name {
            "chaney-single" => Preset::ChaneySingle,
            "chaney-repeated" => Preset::ChaneyRepeated,
            "goel" => Preset::Goel,
            "creators" => Preset::Creators,
            "custom" => Preset::Custom,
            other => bail!(
                "unknown preset '{other}' (expected chaney-single, chaney-repeated, goel, \
                 creators, or custom)"
            ),
        })
    }
}

/// Raw configuration file shape. Unknown keys anywhere are an error so a
/// typo cannot silently fall back to a default.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentFile {
    pub preset: Option<Preset>,
    pub trials: Option<usize>,
    pub base_seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub sim: SimOverrides,
    pub goel: GoelOverrides,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOverrides {
    pub num_users: Option<usize>,
    pub num_items: Option<usize>,
    pub num_attrs: Option<usize>,
    pub timesteps: Option<u32>,
    pub list_size: Option<usize>,
    pub startup_steps: Option<u32>,
    pub training: Option<TrainingSchedule>,
    pub new_items_per_step: Option<usize>,
    pub repeat_interaction: Option<bool>,
    pub drift_weight: Option<f64>,
    pub attention_decay: Option<f64>,
    pub attention_during_startup: Option<bool>,
    pub persistent_interleave: Option<bool>,
    pub user_concentration: Option<f64>,
    pub item_attr_concentration: Option<f64>,
    pub true_utility_concentration: Option<f64>,
    pub known_fraction_mean: Option<f64>,
    pub known_fraction_concentration: Option<f64>,
    pub mf_factors: Option<usize>,
    pub mf_reg: Option<f64>,
    pub mf_confidence_alpha: Option<f64>,
    pub mf_iters: Option<usize>,
    pub mf_warm_iters: Option<usize>,
    pub mf_cold_restart: Option<bool>,
    /// Social adjacency neighborhood size; null/omitted keeps the default,
    /// 0 selects the mean-covariance threshold rule.
    pub social_neighbors: Option<usize>,
    /// Which recommender kinds to run per trial.
    pub models: Option<Vec<ModelKind>>,
    pub metrics: Option<Vec<MetricSelection>>,
    pub creators: Option<CreatorOverrides>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CreatorOverrides {
    pub num_creators: Option<usize>,
    pub creation_prob: Option<f64>,
    pub item_concentration: Option<f64>,
    pub learn_rate: Option<f64>,
    pub profile_concentration: Option<f64>,
    pub mode: Option<CreatorMode>,
    pub weight_by_counts: Option<bool>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoelOverrides {
    pub alphas: Option<Vec<f64>>,
    pub rs: Option<Vec<f64>>,
    pub nodes: Option<usize>,
    pub graphs_per_alpha: Option<usize>,
    pub cascades_per_cell: Option<usize>,
    pub popularity_threshold: Option<usize>,
}

/// Fully resolved experiment, embedded verbatim in every result bundle.
/// Re-running a bundle's config reproduces the bundle (worker count is
/// execution infrastructure, not experiment identity, so it is not part of
/// this record).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResolvedExperiment {
    pub preset: Preset,
    pub trials: usize,
    pub base_seed: u64,
    pub kind: ExperimentKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FeedbackLoop(FeedbackExperiment),
    Cascades(CascadeExperiment),
}

/// Multi-model feedback-loop experiment (the chaney/creators presets).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeedbackExperiment {
    /// Template simulation config; the per-trial seed is `base_seed` with
    /// the trial index as the stream id.
    pub sim: SimulationConfig,
    pub models: Vec<ModelKind>,
    /// Compute homogenization relative to the ideal run of the same trial.
    /// Requires a shared item universe, so it is off for creator-driven
    /// items.
    pub relative_to_ideal: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CascadeExperiment {
    pub alphas: Vec<f64>,
    pub rs: Vec<f64>,
    pub nodes: usize,
    pub graphs_per_alpha: usize,
    pub cascades_per_cell: usize,
    pub popularity_threshold: usize,
}

fn chaney_base() -> SimulationConfig {
    SimulationConfig {
        num_users: 100,
        num_items: 0,
        num_attrs: 20,
        timesteps: 100,
        list_size: 10,
        startup_steps: 50,
        training: TrainingSchedule::Single,
        new_items_per_step: 10,
        repeat_interaction: false,
        drift_weight: 0.0,
        attention_decay: 0.9,
        attention_during_startup: true,
        persistent_interleave: false,
        seed: 0,
        model: ModelKind::Ideal,
        hyperparams: ModelHyperparams::default(),
        user_concentration: 0.5,
        item_attr_concentration: 0.5,
        true_utility_concentration: 100.0,
        known_fraction_mean: 0.98,
        known_fraction_concentration: 100.0,
        creators: None,
        metrics: vec![MetricSelection::Homogenization, MetricSelection::Mse],
    }
}

fn preset_defaults(preset: Preset) -> (usize, ExperimentKind) {
    match preset {
        Preset::ChaneySingle => (
            100,
            ExperimentKind::FeedbackLoop(FeedbackExperiment {
                sim: chaney_base(),
                models: ModelKind::ALL.to_vec(),
                relative_to_ideal: true,
            }),
        ),
        Preset::ChaneyRepeated => {
            let mut sim = chaney_base();
            sim.startup_steps = 10;
            sim.training = TrainingSchedule::Repeated;
            (
                100,
                ExperimentKind::FeedbackLoop(FeedbackExperiment {
                    sim,
                    models: ModelKind::ALL.to_vec(),
                    relative_to_ideal: true,
                }),
            )
        }
        Preset::Creators => {
            let mut sim = chaney_base();
            sim.timesteps = 500;
            sim.startup_steps = 10;
            sim.training = TrainingSchedule::Repeated;
            sim.new_items_per_step = 0;
            sim.creators = Some(CreatorConfig::default());
            sim.metrics = vec![
                MetricSelection::Homogenization,
                MetricSelection::Mse,
                MetricSelection::CreatorEntropy,
                MetricSelection::ConsumptionDistance,
            ];
            (
                200,
                ExperimentKind::FeedbackLoop(FeedbackExperiment {
                    sim,
                    models: ModelKind::ALL.to_vec(),
                    relative_to_ideal: false,
                }),
            )
        }
        Preset::Goel => (
            1,
            ExperimentKind::Cascades(CascadeExperiment {
                alphas: vec![2.1, 2.3, 2.5, 2.7, 2.9],
                rs: vec![0.1, 0.3, 0.5, 0.7, 0.9],
                nodes: 100_000,
                graphs_per_alpha: 5,
                cascades_per_cell: 1_000_000,
                popularity_threshold: 100,
            }),
        ),
        Preset::Custom => (
            1,
            ExperimentKind::FeedbackLoop(FeedbackExperiment {
                sim: SimulationConfig::default(),
                models: vec![SimulationConfig::default().model],
                relative_to_ideal: false,
            }),
        ),
    }
}

/// Apply file/CLI overrides on top of the preset defaults.
pub fn resolve(file: &ExperimentFile) -> Result<ResolvedExperiment> {
    let preset = file.preset.context("config must name a preset")?;
    let (default_trials, mut kind) = preset_defaults(preset);
    match &mut kind {
        ExperimentKind::FeedbackLoop(fx) => {
            apply_sim_overrides(&mut fx.sim, &file.sim)?;
            if let Some(models) = &file.sim.models {
                if models.is_empty() {
                    bail!("sim.models must not be empty");
                }
                fx.models = models.clone();
            }
            fx.relative_to_ideal = fx.sim.creators.is_none()
                && fx.models.contains(&ModelKind::Ideal)
                && fx.models.len() > 1;
            fx.sim.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        }
        ExperimentKind::Cascades(cx) => {
            let o = &file.goel;
            if let Some(v) = &o.alphas {
                cx.alphas = v.clone();
            }
            if let Some(v) = &o.rs {
                cx.rs = v.clone();
            }
            if let Some(v) = o.nodes {
                cx.nodes = v;
            }
            if let Some(v) = o.graphs_per_alpha {
                cx.graphs_per_alpha = v;
            }
            if let Some(v) = o.cascades_per_cell {
                cx.cascades_per_cell = v;
            }
            if let Some(v) = o.popularity_threshold {
                cx.popularity_threshold = v;
            }
            if cx.alphas.is_empty() || cx.rs.is_empty() {
                bail!("goel.alphas and goel.rs must not be empty");
            }
            if cx.graphs_per_alpha == 0 || cx.cascades_per_cell == 0 {
                bail!("goel.graphs_per_alpha and goel.cascades_per_cell must be positive");
            }
        }
    }
    Ok(ResolvedExperiment {
        preset,
        trials: file.trials.unwrap_or(default_trials),
        base_seed: file.base_seed.unwrap_or(0),
        kind,
    })
}

fn apply_sim_overrides(sim: &mut SimulationConfig, o: &SimOverrides) -> Result<()> {
    macro_rules! set {
        ($($field:ident),*) => {
            $(if let Some(v) = o.$field { sim.$field = v; })*
        };
    }
    set!(
        num_users,
        num_items,
        num_attrs,
        timesteps,
        list_size,
        startup_steps,
        training,
        new_items_per_step,
        repeat_interaction,
        drift_weight,
        attention_decay,
        attention_during_startup,
        persistent_interleave,
        user_concentration,
        item_attr_concentration,
        true_utility_concentration,
        known_fraction_mean,
        known_fraction_concentration
    );
    if let Some(v) = o.mf_factors {
        sim.hyperparams.mf_factors = v;
    }
    if let Some(v) = o.mf_reg {
        sim.hyperparams.mf_reg = v;
    }
    if let Some(v) = o.mf_confidence_alpha {
        sim.hyperparams.mf_confidence_alpha = v;
    }
    if let Some(v) = o.mf_iters {
        sim.hyperparams.mf_iters = v;
    }
    if let Some(v) = o.mf_warm_iters {
        sim.hyperparams.mf_warm_iters = v;
    }
    if let Some(v) = o.mf_cold_restart {
        sim.hyperparams.mf_cold_restart = v;
    }
    if let Some(v) = o.social_neighbors {
        sim.hyperparams.social_neighbors = if v == 0 { None } else { Some(v) };
    }
    if let Some(metrics) = &o.metrics {
        sim.metrics = metrics.clone();
    }
    if let Some(co) = &o.creators {
        let mut cc = sim.creators.clone().unwrap_or_default();
        if let Some(v) = co.num_creators {
            cc.num_creators = v;
        }
        if let Some(v) = co.creation_prob {
            cc.creation_prob = v;
        }
        if let Some(v) = co.item_concentration {
            cc.item_concentration = v;
        }
        if let Some(v) = co.learn_rate {
            cc.learn_rate = v;
        }
        if let Some(v) = co.profile_concentration {
            cc.profile_concentration = v;
        }
        if let Some(v) = co.mode {
            cc.mode = v;
        }
        if let Some(v) = co.weight_by_counts {
            cc.weight_by_counts = v;
        }
        sim.creators = Some(cc);
    }
    Ok(())
}

/// Parse a JSON config file; unknown keys are rejected with the offending
/// key named.
pub fn parse_config(path: &Path) -> Result<ExperimentFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn parse_config_str(text: &str) -> Result<ExperimentFile> {
    let file: ExperimentFile = serde_json::from_str(text)?;
    Ok(file)
}

/// Deep-merge JSON objects (`extra` wins) and reparse; used for CLI
/// `--override` payloads so they go through the same unknown-key checks.
pub fn merge_override(base: &ExperimentFile, extra: &str) -> Result<ExperimentFile> {
    let mut value = serde_json::to_value(base)?;
    let extra: serde_json::Value =
        serde_json::from_str(extra).context("parsing --override JSON")?;
    deep_merge(&mut value, extra);
    let merged: ExperimentFile = serde_json::from_value(value)?;
    Ok(merged)
}

fn deep_merge(base: &mut serde_json::Value, extra: serde_json::Value) {
    match (base, extra) {
        (serde_json::Value::Object(a), serde_json::Value::Object(b)) => {
            for (k, v) in b {
                deep_merge(a.entry(k).or_insert(serde_json::Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_with_preset_gets_defaults() {
        let file = parse_config_str(r#"{"preset": "chaney-single"}"#).unwrap();
        let resolved = resolve(&file).unwrap();
        assert_eq!(resolved.trials, 100);
        assert_eq!(resolved.base_seed, 0);
        match resolved.kind {
            ExperimentKind::FeedbackLoop(fx) => {
                assert_eq!(fx.sim.timesteps, 100);
                assert_eq!(fx.sim.startup_steps, 50);
                assert_eq!(fx.sim.new_items_per_step, 10);
                assert_eq!(fx.models.len(), 6);
                assert!(fx.relative_to_ideal);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = parse_config_str(r#"{"preset": "goel", "usres": 5}"#).unwrap_err();
        assert!(err.to_string().contains("usres"), "error was: {err}");
    }

    #[test]
    fn sim_override_applies() {
        let file = parse_config_str(
            r#"{"preset": "chaney-single", "sim": {"timesteps": 50, "startup_steps": 25}}"#,
        )
        .unwrap();
        let resolved = resolve(&file).unwrap();
        match resolved.kind {
            ExperimentKind::FeedbackLoop(fx) => {
                assert_eq!(fx.sim.timesteps, 50);
                assert_eq!(fx.sim.startup_steps, 25);
                // untouched defaults stay
                assert_eq!(fx.sim.num_users, 100);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn goel_defaults_match_grid() {
        let file = parse_config_str(r#"{"preset": "goel"}"#).unwrap();
        let resolved = resolve(&file).unwrap();
        match resolved.kind {
            ExperimentKind::Cascades(cx) => {
                assert_eq!(cx.alphas, vec![2.1, 2.3, 2.5, 2.7, 2.9]);
                assert_eq!(cx.rs, vec![0.1, 0.3, 0.5, 0.7, 0.9]);
                assert_eq!(cx.nodes, 100_000);
                assert_eq!(cx.graphs_per_alpha, 5);
                assert_eq!(cx.popularity_threshold, 100);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn merge_override_wins_and_rejects_typos() {
        let base = parse_config_str(r#"{"preset": "goel"}"#).unwrap();
        let merged =
            merge_override(&base, r#"{"goel": {"alphas": [2.3], "nodes": 1000}}"#).unwrap();
        let resolved = resolve(&merged).unwrap();
        match resolved.kind {
            ExperimentKind::Cascades(cx) => {
                assert_eq!(cx.alphas, vec![2.3]);
                assert_eq!(cx.nodes, 1000);
            }
            _ => panic!("wrong kind"),
        }
        assert!(merge_override(&base, r#"{"goel": {"nods": 1}}"#).is_err());
    }

    #[test]
    fn creators_preset_enables_pool_and_metrics() {
        let file = parse_config_str(r#"{"preset": "creators"}"#).unwrap();
        let resolved = resolve(&file).unwrap();
        assert_eq!(resolved.trials, 200);
        match resolved.kind {
            ExperimentKind::FeedbackLoop(fx) => {
                assert_eq!(fx.sim.timesteps, 500);
                let cc = fx.sim.creators.unwrap();
                assert_eq!(cc.num_creators, 50);
                assert_eq!(cc.creation_prob, 0.5);
                assert_eq!(cc.item_concentration, 0.1);
                assert!(!fx.relative_to_ideal);
            }
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn invalid_resolved_sim_is_rejected() {
        let file = parse_config_str(
            r#"{"preset": "chaney-single", "sim": {"startup_steps": 200}}"#,
        )
        .unwrap();
        assert!(resolve(&file).is_err());
    }
}
