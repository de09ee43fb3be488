//! Observer-style measurement framework and the concrete metrics.
//!
//! The engine owns a [`MetricRegistry`]; at the end of every executed step it
//! hands each registered observer a read-only [`StepView`] and stores the
//! sampled value in that observer's time series. System-state recorders work
//! the same way but store raw snapshots (pairings, internal user
//! representations, recommendation lists) for offline recomputation and
//! debugging.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::agents::{CreatorPool, ItemCatalog, UserPool};
use crate::error::{config_err, domain_err, Result};
use crate::models::Recommender;
use crate::numerics::matrix::Matrix;
use crate::numerics::scores::cosine;
use crate::numerics::stats::{jaccard, shannon_entropy};

/// Read-only view of one executed simulation step.
pub struct StepView<'a> {
    pub t: u32,
    pub trained_this_step: bool,
    pub users: &'a UserPool,
    pub items: &'a ItemCatalog,
    pub creators: Option<&'a CreatorPool>,
    pub model: &'a dyn Recommender,
    /// Current similarity pairing (recomputed at training events).
    pub pairs: &'a [u32],
    /// Whether the current pairing came from the degenerate tie rule.
    pub pairs_degenerate: bool,
    /// Interactions logged this step as (user, item).
    pub step_interactions: &'a [(u32, u32)],
    /// Scored (non-interleaved) recommendation list per user this step.
    pub recommended: &'a [Vec<u32>],
    /// Full presented list per user this step (after interleaving, or the
    /// startup random sample).
    pub presented: &'a [Vec<u32>],
}

/// A named scalar time series, one sample per executed step, timesteps
/// strictly increasing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub samples: Vec<(u32, f64)>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>) -> Self {
        TimeSeries {
            name: name.into(),
            samples: Vec::new(),
        }
    }

    pub fn push(&mut self, t: u32, value: f64) {
        if let Some(&(last, _)) = self.samples.last() {
            assert!(t > last, "timesteps must be strictly increasing");
        }
        self.samples.push((t, value));
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|(_, v)| *v)
    }
}

pub trait MetricObserver: Send {
    fn name(&self) -> &str;
    fn sample(&mut self, view: &StepView) -> f64;
}

/// Raw system-state snapshots, recorded as-is each step.
pub enum StateRecorder {
    /// Similarity pairing per step.
    Pairs(Vec<(u32, Vec<u32>)>),
    /// Model's internal user representation per step (when it has one).
    UserRepr(Vec<(u32, Matrix)>),
    /// Scored recommendation lists per step.
    Recommended(Vec<(u32, Vec<Vec<u32>>)>),
    /// Presented (post-interleave) lists per step.
    Presented(Vec<(u32, Vec<Vec<u32>>)>),
}

impl StateRecorder {
    pub fn name(&self) -> &'static str {
        match self {
            StateRecorder::Pairs(_) => "pairs",
            StateRecorder::UserRepr(_) => "user_repr",
            StateRecorder::Recommended(_) => "recommended",
            StateRecorder::Presented(_) => "presented",
        }
    }

    fn record(&mut self, view: &StepView) {
        match self {
            StateRecorder::Pairs(hist) => hist.push((view.t, view.pairs.to_vec())),
            StateRecorder::UserRepr(hist) => {
                if let Some(repr) = view.model.predicted_user_repr() {
                    hist.push((view.t, repr.clone()));
                }
            }
            StateRecorder::Recommended(hist) => {
                hist.push((view.t, view.recommended.to_vec()));
            }
            StateRecorder::Presented(hist) => {
                hist.push((view.t, view.presented.to_vec()));
            }
        }
    }
}

struct MetricEntry {
    observer: Box<dyn MetricObserver>,
    series: TimeSeries,
    active: bool,
}

/// Registry of metric observers and system-state recorders.
#[derive(Default)]
pub struct MetricRegistry {
    metrics: Vec<MetricEntry>,
    states: Vec<StateRecorder>,
}

impl MetricRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_metric(&mut self, observer: Box<dyn MetricObserver>) {
        let series = TimeSeries::new(observer.name());
        self.metrics.push(MetricEntry {
            observer,
            series,
            active: true,
        });
    }

    /// Stop sampling a metric; its history is kept.
    pub fn unregister_metric(&mut self, name: &str) {
        for entry in &mut self.metrics {
            if entry.series.name == name {
                entry.active = false;
            }
        }
    }

    pub fn register_state(&mut self, recorder: StateRecorder) {
        self.states.push(recorder);
    }

    /// Sample every active observer exactly once for this step.
    pub fn sample_step(&mut self, view: &StepView) {
        for entry in &mut self.metrics {
            if entry.active {
                let value = entry.observer.sample(view);
                entry.series.push(view.t, value);
            }
        }
        for state in &mut self.states {
            state.record(view);
        }
    }

    pub fn series(&self) -> Vec<&TimeSeries> {
        self.metrics.iter().map(|e| &e.series).collect()
    }

    pub fn into_results(self) -> (Vec<TimeSeries>, Vec<StateRecorder>) {
        (
            self.metrics.into_iter().map(|e| e.series).collect(),
            self.states,
        )
    }
}

/// Pair each user with the most cosine-similar other user according to the
/// model's internal representation; ties resolve to the lowest id, so
/// degenerate representations (identical rows) collapse to the tie rule.
/// The pairing is directional: |U| pairs, duplicates allowed.
pub fn pair_users_by_similarity(user_repr: &Matrix) -> Result<Vec<u32>> {
    let n = user_repr.rows();
    if n < 2 {
        return config_err("pairing: need at least two users");
    }
    let mut pairs = Vec::with_capacity(n);
    for u in 0..n {
        let mut best: Option<(u32, f64)> = None;
        for v in 0..n {
            if v == u {
                continue;
            }
            let c = cosine(user_repr.row(u), user_repr.row(v));
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((v as u32, c));
            }
        }
        pairs.push(best.unwrap().0);
    }
    Ok(pairs)
}

/// Fallback pairing when a model has no meaningful user representation:
/// every user pairs with the lowest id other than itself.
pub fn tie_rule_pairs(n: usize) -> Vec<u32> {
    (0..n).map(|u| if u == 0 { 1 } else { 0 }).collect()
}

/// Mean Jaccard index of interaction histories over the given pairs.
pub fn homogenization_jaccard(pairs: &[u32], interacted: &[BTreeSet<u32>]) -> f64 {
    assert!(!pairs.is_empty(), "pairing must be nonempty");
    let total: f64 = pairs
        .iter()
        .enumerate()
        .map(|(u, &v)| jaccard(&interacted[u], &interacted[v as usize]))
        .sum();
    total / pairs.len() as f64
}

/// Pointwise difference `model − ideal` of two aligned series.
pub fn relative_homogenization(model: &TimeSeries, ideal: &TimeSeries) -> Result<TimeSeries> {
    if model.samples.len() != ideal.samples.len() {
        return domain_err("relative homogenization: series lengths differ");
    }
    let mut out = TimeSeries::new(format!("relative_{}", model.name));
    for (&(tm, vm), &(ti, vi)) in model.samples.iter().zip(&ideal.samples) {
        if tm != ti {
            return domain_err(format!(
                "relative homogenization: timestep mismatch {tm} vs {ti}"
            ));
        }
        out.push(tm, vm - vi);
    }
    Ok(out)
}

/// Mean squared error between two equally shaped matrices.
pub fn mse_scores(predicted: &Matrix, actual: &Matrix) -> Result<f64> {
    if predicted.rows() != actual.rows() || predicted.cols() != actual.cols() {
        return config_err(format!(
            "mse: shape mismatch {}x{} vs {}x{}",
            predicted.rows(),
            predicted.cols(),
            actual.rows(),
            actual.cols()
        ));
    }
    let n = (predicted.rows() * predicted.cols()).max(1);
    let mut acc = 0.0;
    for r in 0..predicted.rows() {
        for (a, b) in predicted.row(r).iter().zip(actual.row(r)) {
            let d = a - b;
            acc += d * d;
        }
    }
    Ok(acc / n as f64)
}

/// Mean Shannon entropy of the creators' profile rows.
pub fn average_creator_entropy(creators: &CreatorPool) -> Result<f64> {
    let n = creators.num_creators();
    if n == 0 {
        return config_err("creator entropy: empty pool");
    }
    let mut acc = 0.0;
    for c in 0..n {
        acc += shannon_entropy(creators.profiles.row(c))?;
    }
    Ok(acc / n as f64)
}

/// Mean pairwise Euclidean distance between users' mean consumed-item
/// attribute vectors, over all unordered pairs of users with nonempty
/// histories (users without interactions are excluded and logged).
pub fn mean_consumed_item_distance(interacted: &[BTreeSet<u32>], items: &ItemCatalog) -> f64 {
    let num_attrs = items.num_attrs();
    let mut means: Vec<Vec<f64>> = Vec::new();
    for (u, history) in interacted.iter().enumerate() {
        if history.is_empty() {
            log::debug!("consumption distance: user {u} has no interactions, excluded");
            continue;
        }
        let mut sum = vec![0.0; num_attrs];
        for &item in history {
            for (a, slot) in sum.iter_mut().enumerate() {
                *slot += items.attributes.get(a, item as usize);
            }
        }
        for slot in sum.iter_mut() {
            *slot /= history.len() as f64;
        }
        means.push(sum);
    }
    pairwise_distance_mean(&means)
}

fn pairwise_distance_mean(means: &[Vec<f64>]) -> f64 {
    if means.len() < 2 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut pairs = 0usize;
    for i in 0..means.len() {
        for j in (i + 1)..means.len() {
            let d: f64 = means[i]
                .iter()
                .zip(&means[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            acc += d;
            pairs += 1;
        }
    }
    acc / pairs as f64
}

// ---------------------------------------------------------------------------
// Concrete observers

/// Mean Jaccard homogenization over the current similarity pairing.
pub struct HomogenizationObserver;

impl MetricObserver for HomogenizationObserver {
    fn name(&self) -> &str {
        "homogenization"
    }

    fn sample(&mut self, view: &StepView) -> f64 {
        homogenization_jaccard(view.pairs, &view.users.interacted)
    }
}

/// MSE between predicted scores and true utility.
pub struct MseObserver;

impl MetricObserver for MseObserver {
    fn name(&self) -> &str {
        "mse"
    }

    fn sample(&mut self, view: &StepView) -> f64 {
        let n_users = view.users.num_users();
        let n_items = view.model.num_scored_items();
        let mut acc = 0.0;
        for u in 0..n_users {
            let predicted = view.model.score_row(u);
            for i in 0..n_items {
                let d = predicted[i] - view.users.true_utility.get(u, i);
                acc += d * d;
            }
        }
        acc / (n_users * n_items).max(1) as f64
    }
}

/// Average creator entropy.
pub struct CreatorEntropyObserver;

impl MetricObserver for CreatorEntropyObserver {
    fn name(&self) -> &str {
        "creator_entropy"
    }

    fn sample(&mut self, view: &StepView) -> f64 {
        let creators = view
            .creators
            .expect("creator entropy requires a creator pool");
        average_creator_entropy(creators).expect("profiles stay on the simplex")
    }
}

/// Mean pairwise distance between users' mean consumed items, maintained
/// incrementally from each step's interactions.
pub struct ConsumptionDistanceObserver {
    sums: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

impl ConsumptionDistanceObserver {
    pub fn new(num_users: usize, num_attrs: usize) -> Self {
        ConsumptionDistanceObserver {
            sums: vec![vec![0.0; num_attrs]; num_users],
            counts: vec![0; num_users],
        }
    }
}

impl MetricObserver for ConsumptionDistanceObserver {
    fn name(&self) -> &str {
        "consumption_distance"
    }

    fn sample(&mut self, view: &StepView) -> f64 {
        for &(u, item) in view.step_interactions {
            let sum = &mut self.sums[u as usize];
            for (a, slot) in sum.iter_mut().enumerate() {
                *slot += view.items.attributes.get(a, item as usize);
            }
            self.counts[u as usize] += 1;
        }
        let means: Vec<Vec<f64>> = self
            .sums
            .iter()
            .zip(&self.counts)
            .filter(|(_, c)| **c > 0)
            .map(|(s, c)| s.iter().map(|v| v / *c as f64).collect())
            .collect();
        pairwise_distance_mean(&means)
    }
}
