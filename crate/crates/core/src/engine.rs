//! The per-timestep simulation loop.
//!
//! Each step: new items enter the catalog (scheduled stream or creator
//! pool), the model optionally retrains on the interactions collected so
//! far, every user receives a recommendation list (uniform random during
//! startup) with fresh items interleaved at random positions, picks one item
//! by known utility discounted by rank attention, and the system updates its
//! bookkeeping, creators, preference drift, and metric observers.
//!
//! Steps with zero interactions deactivate the run without advancing the
//! metric log. Every random decision draws from a stream keyed by
//! (step, purpose, user), so runs replay identically regardless of thread
//! schedule.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    creators_generate, creators_update, generate_creators, generate_items, generate_users,
    generate_utilities, utility_columns, CreatorMode, CreatorPool, ItemCatalog, NewItem, UserPool,
};
use crate::error::{config_err, Result};
use crate::metrics::{
    pair_users_by_similarity, tie_rule_pairs, ConsumptionDistanceObserver, CreatorEntropyObserver,
    HomogenizationObserver, MetricRegistry, MseObserver, StateRecorder, StepView, TimeSeries,
};
use crate::models::{
    build_model, select_top_k_where, ModelHyperparams, ModelKind, Recommender, TrainCtx,
};
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::RngStream;

/// When the model retrains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainingSchedule {
    /// Train once, at the step right after startup ends.
    Single,
    /// Train at the start of every post-startup step.
    Repeated,
    Never,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricSelection {
    Homogenization,
    Mse,
    CreatorEntropy,
    ConsumptionDistance,
}

/// Creator-pool configuration (enables creator-driven item generation).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreatorConfig {
    pub num_creators: usize,
    pub creation_prob: f64,
    /// Scale applied to γ for the item-generating Dirichlet.
    pub item_concentration: f64,
    pub learn_rate: f64,
    /// Per-component concentration for the initial Dirichlet profiles.
    pub profile_concentration: f64,
    pub mode: CreatorMode,
    pub weight_by_counts: bool,
}

impl Default for CreatorConfig {
    fn default() -> Self {
        CreatorConfig {
            num_creators: 50,
            creation_prob: 0.5,
            item_concentration: 0.1,
            learn_rate: 0.1,
            profile_concentration: 10.0,
            mode: CreatorMode::DirichletAttrs,
            weight_by_counts: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub num_users: usize,
    /// Initial catalog size.
    pub num_items: usize,
    pub num_attrs: usize,
    pub timesteps: u32,
    pub list_size: usize,
    pub startup_steps: u32,
    pub training: TrainingSchedule,
    /// Scheduled new items per step (ignored when creators are configured).
    pub new_items_per_step: usize,
    pub repeat_interaction: bool,
    pub drift_weight: f64,
    /// Geometric rank-attention decay ρ; 1 recovers pure utility choice.
    pub attention_decay: f64,
    pub attention_during_startup: bool,
    /// Keep interleaving unconsumed discovery items at later steps instead
    /// of letting them compete through model scores only.
    pub persistent_interleave: bool,
    pub seed: u64,
    pub model: ModelKind,
    pub hyperparams: ModelHyperparams,
    /// Per-component Dirichlet concentration for user preference rows.
    pub user_concentration: f64,
    /// Per-component Dirichlet concentration for item attribute columns.
    pub item_attr_concentration: f64,
    pub true_utility_concentration: f64,
    pub known_fraction_mean: f64,
    pub known_fraction_concentration: f64,
    pub creators: Option<CreatorConfig>,
    pub metrics: Vec<MetricSelection>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            num_users: 100,
            num_items: 1250,
            num_attrs: 20,
            timesteps: 100,
            list_size: 10,
            startup_steps: 0,
            training: TrainingSchedule::Repeated,
            new_items_per_step: 0,
            repeat_interaction: false,
            drift_weight: 0.0,
            attention_decay: 0.9,
            attention_during_startup: true,
            persistent_interleave: false,
            seed: 0,
            model: ModelKind::Popularity,
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
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_users < 1 {
            return config_err("num_users must be at least 1");
        }
        if self.num_attrs < 1 {
            return config_err("num_attrs must be at least 1");
        }
        if self.list_size < 1 {
            return config_err("list_size must be at least 1");
        }
        if self.timesteps > 0 {
            if self.startup_steps >= self.timesteps {
                return config_err(format!(
                    "startup_steps ({}) must be below timesteps ({})",
                    self.startup_steps, self.timesteps
                ));
            }
        } else if self.startup_steps > 0 {
            return config_err("startup_steps requires timesteps > 0");
        }
        if !(0.0..=1.0).contains(&self.drift_weight) {
            return config_err("drift_weight must lie in [0,1]");
        }
        if !(self.attention_decay > 0.0 && self.attention_decay <= 1.0) {
            return config_err("attention_decay must lie in (0,1]");
        }
        if self.user_concentration <= 0.0 || self.item_attr_concentration <= 0.0 {
            return config_err("Dirichlet concentrations must be positive");
        }
        if self.true_utility_concentration <= 0.0 || self.known_fraction_concentration <= 0.0 {
            return config_err("utility Beta concentrations must be positive");
        }
        if !(0.0..=1.0).contains(&self.known_fraction_mean) {
            return config_err("known_fraction_mean must lie in [0,1]");
        }
        if self.model == ModelKind::MatrixFactorization
            && self.hyperparams.mf_factors > self.num_users
        {
            return config_err("mf_factors may not exceed num_users");
        }
        if let Some(c) = &self.creators {
            if c.num_creators < 1 {
                return config_err("num_creators must be at least 1");
            }
            if !(0.0..=1.0).contains(&c.creation_prob) {
                return config_err("creation_prob must lie in [0,1]");
            }
            if !(c.learn_rate > 0.0 && c.learn_rate <= 1.0) {
                return config_err("creator learn_rate must lie in (0,1]");
            }
            if c.item_concentration <= 0.0 || c.profile_concentration <= 0.0 {
                return config_err("creator concentrations must be positive");
            }
        }
        if self.metrics.contains(&MetricSelection::Homogenization) && self.num_users < 2 {
            return config_err("homogenization metric needs at least two users");
        }
        if self.metrics.contains(&MetricSelection::CreatorEntropy) && self.creators.is_none() {
            return config_err("creator_entropy metric needs a creator pool");
        }
        Ok(())
    }
}

// Stream derivation salts. The layout is
// trial → {dataset → {users, items, utilities, schedule·t, creators},
//          run·model → step·t → {create, new-utilities, train, user·u}}.
mod salt {
    pub const DATASET: u64 = 1;
    pub const RUN: u64 = 2;
    pub const USERS: u64 = 10;
    pub const ITEMS: u64 = 11;
    pub const UTILITIES: u64 = 12;
    pub const SCHEDULE: u64 = 13;
    pub const CREATORS: u64 = 14;
    pub const STEP: u64 = 20;
    pub const CREATE: u64 = 21;
    pub const NEW_UTILITIES: u64 = 22;
    pub const TRAIN: u64 = 23;
    pub const USER: u64 = 24;
}

/// Stream for generating trial `trial`'s shared dataset.
pub fn dataset_stream(seed: u64, trial: u64) -> RngStream {
    RngStream::new(seed, trial).derive(salt::DATASET)
}

/// Stream driving one model's run within a trial. Distinct models of one
/// trial get independent streams while sharing the dataset.
pub fn run_stream(seed: u64, trial: u64, model: ModelKind) -> RngStream {
    let index = ModelKind::ALL
        .iter()
        .position(|k| *k == model)
        .expect("known model kind") as u64;
    RngStream::new(seed, trial).derive(salt::RUN).derive(index)
}

/// One pre-generated batch of scheduled items plus their utility columns.
#[derive(Clone, Debug)]
pub struct ScheduledBatch {
    pub items: Vec<NewItem>,
    pub true_cols: Vec<Vec<f64>>,
    pub known_cols: Vec<Vec<f64>>,
}

/// Everything shared across model runs within one trial: populations,
/// utilities, and the full schedule of future items.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub users: UserPool,
    pub items: ItemCatalog,
    pub schedule: Vec<ScheduledBatch>,
    pub creators: Option<CreatorPool>,
}

/// Generate the per-trial dataset from one stream. Model runs sharing a
/// trial share this object bit-for-bit.
pub fn generate_dataset(config: &SimulationConfig, stream: RngStream) -> Result<Dataset> {
    config.validate()?;
    let a = config.num_attrs;
    let user_conc = vec![config.user_concentration; a];
    let item_conc = vec![config.item_attr_concentration; a];

    let mut users = generate_users(
        config.num_users,
        a,
        &user_conc,
        stream.derive(salt::USERS),
    )?;
    users.drift_weight = config.drift_weight;
    users.attention_decay = config.attention_decay;

    let items = generate_items(config.num_items, a, &item_conc, stream.derive(salt::ITEMS))?;
    generate_utilities(
        &mut users,
        &items,
        config.true_utility_concentration,
        config.known_fraction_mean,
        config.known_fraction_concentration,
        stream.derive(salt::UTILITIES),
    )?;

    let mut schedule = Vec::new();
    if config.creators.is_none() && config.new_items_per_step > 0 {
        let sched_stream = stream.derive(salt::SCHEDULE);
        for t in 0..config.timesteps {
            let mut rng = sched_stream.derive(t as u64).rng();
            let mut batch_items = Vec::with_capacity(config.new_items_per_step);
            for _ in 0..config.new_items_per_step {
                let attrs = crate::numerics::sample::sample_dirichlet(&item_conc, &mut rng)?;
                batch_items.push(NewItem {
                    attrs,
                    created_at: t,
                    created_by: None,
                });
            }
            let cols: Vec<Vec<f64>> = batch_items.iter().map(|it| it.attrs.clone()).collect();
            let (true_cols, known_cols) = utility_columns(
                &users,
                &cols,
                config.true_utility_concentration,
                config.known_fraction_mean,
                config.known_fraction_concentration,
                sched_stream.derive(t as u64).derive(salt::NEW_UTILITIES),
            )?;
            schedule.push(ScheduledBatch {
                items: batch_items,
                true_cols,
                known_cols,
            });
        }
    }

    let creators = match &config.creators {
        Some(cc) => Some(generate_creators(
            cc.num_creators,
            a,
            &vec![cc.profile_concentration; a],
            cc.creation_prob,
            cc.item_concentration,
            cc.learn_rate,
            cc.mode,
            stream.derive(salt::CREATORS),
        )?)
        .map(|mut pool| {
            pool.weight_by_counts = cc.weight_by_counts;
            pool
        }),
        None => None,
    };

    Ok(Dataset {
        users,
        items,
        schedule,
        creators,
    })
}

/// Insert each new item at an independent uniform position, preserving the
/// relative order of the original list.
pub fn interleave<R: Rng + ?Sized>(rec: &[u32], new_items: &[u32], rng: &mut R) -> Vec<u32> {
    debug_assert!(new_items.iter().all(|n| !rec.contains(n)));
    let mut out = Vec::with_capacity(rec.len() + new_items.len());
    out.extend_from_slice(rec);
    for &item in new_items {
        let pos = rng.random_range(0..=out.len());
        out.insert(pos, item);
    }
    out
}

/// Pick the presented item maximizing `known_utility × decay^rank`
/// (0-based rank); ties go to the earlier rank. Empty lists yield no
/// interaction.
pub fn select_interaction(presented: &[u32], known: &[f64], decay: f64) -> Option<u32> {
    let mut best: Option<(f64, u32)> = None;
    let mut weight = 1.0;
    for &item in presented {
        let v = known[item as usize] * weight;
        if best.map_or(true, |(bv, _)| v > bv) {
            best = Some((v, item));
        }
        weight *= decay;
    }
    best.map(|(_, item)| item)
}

fn sample_without_replacement<R: Rng + ?Sized>(
    mut candidates: Vec<u32>,
    k: usize,
    rng: &mut R,
) -> Vec<u32> {
    let take = k.min(candidates.len());
    for i in 0..take {
        let j = rng.random_range(i..candidates.len());
        candidates.swap(i, j);
    }
    candidates.truncate(take);
    candidates
}

/// Complete results of one simulation run.
pub struct RunOutcome {
    pub series: Vec<TimeSeries>,
    pub states: Vec<StateRecorder>,
    /// (user, item, timestep) log of every interaction.
    pub interaction_log: Vec<(u32, u32, u32)>,
    pub training_events: Vec<u32>,
    pub executed_steps: u32,
    /// Similarity pairing per executed step (when pairing applies).
    pub pairs_per_step: Vec<(u32, Vec<u32>)>,
    /// True whenever any pairing event fell back to the tie rule.
    pub pairing_degenerate: bool,
    pub users: UserPool,
    pub items: ItemCatalog,
    pub creators: Option<CreatorPool>,
}

pub struct Simulation {
    config: SimulationConfig,
    users: UserPool,
    items: ItemCatalog,
    creators: Option<CreatorPool>,
    schedule: Vec<ScheduledBatch>,
    model: Box<dyn Recommender + Send>,
    registry: MetricRegistry,
    run_stream: RngStream,
    t: u32,
    active: bool,
    interaction_log: Vec<(u32, u32, u32)>,
    counts: Vec<BTreeMap<u32, f64>>,
    /// Per-user interacted bitmask, kept in sync with `users.interacted`
    /// for O(1) exclusion checks on the recommendation hot path.
    interacted_mask: Vec<Vec<bool>>,
    training_events: Vec<u32>,
    pairs: Vec<u32>,
    pairs_degenerate: bool,
    pairing_ever_degenerate: bool,
    pairs_per_step: Vec<(u32, Vec<u32>)>,
    pending_interleave: Vec<BTreeSet<u32>>,
    executed_steps: u32,
}

impl Simulation {
    /// Standalone run: derives its dataset and run stream from the config
    /// seed (as trial 0).
    pub fn new(config: SimulationConfig) -> Result<Self> {
        let dataset = generate_dataset(&config, dataset_stream(config.seed, 0))?;
        let stream = run_stream(config.seed, 0, config.model);
        Self::with_dataset(config, dataset, stream)
    }

    /// Run against a pre-generated (shared) dataset. The caller supplies the
    /// run stream; distinct models of one trial must use distinct streams.
    pub fn with_dataset(
        config: SimulationConfig,
        dataset: Dataset,
        run_stream: RngStream,
    ) -> Result<Self> {
        config.validate()?;
        let model = build_model(
            config.model,
            &config.hyperparams,
            &dataset.users,
            &dataset.items,
        )?;
        let mut registry = MetricRegistry::new();
        for selection in &config.metrics {
            match selection {
                MetricSelection::Homogenization => {
                    registry.register_metric(Box::new(HomogenizationObserver))
                }
                MetricSelection::Mse => registry.register_metric(Box::new(MseObserver)),
                MetricSelection::CreatorEntropy => {
                    registry.register_metric(Box::new(CreatorEntropyObserver))
                }
                MetricSelection::ConsumptionDistance => registry.register_metric(Box::new(
                    ConsumptionDistanceObserver::new(config.num_users, config.num_attrs),
                )),
            }
        }
        let num_users = config.num_users;
        let n_items = dataset.items.len();
        Ok(Simulation {
            config,
            users: dataset.users,
            items: dataset.items,
            creators: dataset.creators,
            schedule: dataset.schedule,
            model,
            registry,
            run_stream,
            t: 0,
            active: true,
            interaction_log: Vec::new(),
            counts: vec![BTreeMap::new(); num_users],
            interacted_mask: vec![vec![false; n_items]; num_users],
            training_events: Vec::new(),
            pairs: Vec::new(),
            pairs_degenerate: false,
            pairing_ever_degenerate: false,
            pairs_per_step: Vec::new(),
            pending_interleave: vec![BTreeSet::new(); num_users],
            executed_steps: 0,
        })
    }

    /// Registry access, for registering extra observers or state recorders
    /// before the run starts.
    pub fn registry_mut(&mut self) -> &mut MetricRegistry {
        &mut self.registry
    }

    pub fn active(&self) -> bool {
        self.active && self.t < self.config.timesteps
    }

    fn training_due(&self) -> bool {
        match self.config.training {
            TrainingSchedule::Single => self.t == self.config.startup_steps,
            TrainingSchedule::Repeated => self.t >= self.config.startup_steps,
            TrainingSchedule::Never => false,
        }
    }

    fn build_counts_matrix(&self) -> Result<Matrix> {
        let rows: Vec<Vec<(usize, f64)>> = self
            .counts
            .iter()
            .map(|m| m.iter().map(|(&i, &c)| (i as usize, c)).collect())
            .collect();
        Matrix::from_sparse_rows(self.config.num_users, self.items.len(), &rows)
    }

    fn refresh_pairs(&mut self) {
        if self.config.num_users < 2 {
            return;
        }
        match self.model.predicted_user_repr() {
            Some(repr) => {
                self.pairs = pair_users_by_similarity(repr).expect("at least two users");
                let first = repr.row(0);
                let identical = (1..repr.rows()).all(|u| repr.row(u) == first);
                self.pairs_degenerate = identical;
            }
            None => {
                self.pairs = tie_rule_pairs(self.config.num_users);
                self.pairs_degenerate = true;
            }
        }
        self.pairing_ever_degenerate |= self.pairs_degenerate;
    }

    /// Execute one step. Returns false when the simulation has terminated
    /// (either the timestep budget or a step with zero interactions).
    pub fn step(&mut self) -> Result<bool> {
        if !self.active() {
            return Ok(false);
        }
        let t = self.t;
        let step_stream = self.run_stream.derive(salt::STEP).derive(t as u64);

        // 1. New items enter the catalog.
        let n_before = self.items.len();
        let mut new_items: Vec<NewItem> = Vec::new();
        let mut true_cols = Vec::new();
        let mut known_cols = Vec::new();
        if let Some(creators) = &self.creators {
            let generated = creators_generate(creators, t, step_stream.derive(salt::CREATE));
            if !generated.is_empty() {
                let cols: Vec<Vec<f64>> = generated.iter().map(|it| it.attrs.clone()).collect();
                let (tc, kc) = utility_columns(
                    &self.users,
                    &cols,
                    self.config.true_utility_concentration,
                    self.config.known_fraction_mean,
                    self.config.known_fraction_concentration,
                    step_stream.derive(salt::NEW_UTILITIES),
                )?;
                true_cols = tc;
                known_cols = kc;
                new_items = generated;
            }
        } else if let Some(batch) = self.schedule.get(t as usize) {
            new_items = batch.items.clone();
            true_cols = batch.true_cols.clone();
            known_cols = batch.known_cols.clone();
        }
        if !new_items.is_empty() {
            self.items.append_items(&new_items);
            self.users.extend_utilities(&true_cols, &known_cols);
            self.model.items_added(&self.users, new_items.len());
            for mask in &mut self.interacted_mask {
                mask.resize(self.items.len(), false);
            }
        }
        let new_ids: Vec<u32> = (n_before as u32..self.items.len() as u32).collect();

        // 2. Optional training, then score prediction (startup skips it).
        let mut trained = false;
        let in_startup = t < self.config.startup_steps;
        if !in_startup && self.training_due() {
            let counts = self.build_counts_matrix()?;
            self.model.train(&TrainCtx {
                interactions: &counts,
                users: &self.users,
                items: &self.items,
                stream: step_stream.derive(salt::TRAIN),
            })?;
            self.training_events.push(t);
            trained = true;
        }
        if self.pairs.is_empty() || trained {
            self.refresh_pairs();
        }

        // 3–4. Per-user recommendation, interleaving, and choice.
        let decay = if in_startup && !self.config.attention_during_startup {
            1.0
        } else {
            self.config.attention_decay
        };
        let mut recommended: Vec<Vec<u32>> = Vec::with_capacity(self.config.num_users);
        let mut presented: Vec<Vec<u32>> = Vec::with_capacity(self.config.num_users);
        let mut step_interactions: Vec<(u32, u32)> = Vec::new();
        let repeat = self.config.repeat_interaction;
        for u in 0..self.config.num_users {
            let user_stream = step_stream.derive(salt::USER).derive(u as u64);
            let mut rng = user_stream.rng();
            let mask = &self.interacted_mask[u];
            let consumed = |id: u32| !repeat && mask[id as usize];
            let list = if in_startup {
                // Uniform random sample of unseen items; discovery of the
                // step's new items is covered by the sample itself.
                let candidates: Vec<u32> =
                    (0..self.items.len() as u32).filter(|i| !consumed(*i)).collect();
                recommended.push(Vec::new());
                sample_without_replacement(candidates, self.config.list_size, &mut rng)
            } else {
                // Fresh items are excluded from scoring (they only reach the
                // user through interleaving this step) — they sit past
                // `n_before`, so limiting the scan excludes them.
                let mut pool: Vec<u32> = new_ids.clone();
                if self.config.persistent_interleave {
                    for &pending in &self.pending_interleave[u] {
                        if !consumed(pending) && !pool.contains(&pending) {
                            pool.push(pending);
                        }
                    }
                    pool.sort_unstable();
                }
                let scores = &self.model.score_row(u)[..n_before];
                let rec = select_top_k_where(scores, self.config.list_size, |id| {
                    consumed(id)
                        || (self.config.persistent_interleave
                            && pool.binary_search(&id).is_ok())
                });
                let list = interleave(&rec, &pool, &mut rng);
                recommended.push(rec);
                list
            };

            let choice = select_interaction(&list, self.users.known_utility.row(u), decay);
            if let Some(item) = choice {
                step_interactions.push((u as u32, item));
            }
            if self.config.persistent_interleave {
                let consumed = choice;
                let pending = &mut self.pending_interleave[u];
                for &i in &new_ids {
                    pending.insert(i);
                }
                if let Some(item) = consumed {
                    pending.remove(&item);
                }
            }
            presented.push(list);
        }

        // Event-driven termination: a step with no interactions ends the
        // run without advancing metrics.
        if step_interactions.is_empty() {
            self.active = false;
            return Ok(false);
        }

        // 4. Bookkeeping, creator updates, preference drift.
        for &(u, item) in &step_interactions {
            self.users.record_interaction(u as usize, item);
            self.interacted_mask[u as usize][item as usize] = true;
            *self.counts[u as usize].entry(item).or_insert(0.0) += 1.0;
            self.items.interaction_counts[item as usize] += 1;
            self.interaction_log.push((u, item, t));
        }
        if let Some(creators) = &mut self.creators {
            let mut per_item: BTreeMap<u32, u64> = BTreeMap::new();
            for &(_, item) in &step_interactions {
                *per_item.entry(item).or_insert(0) += 1;
            }
            let mut per_creator: BTreeMap<u32, Vec<(Vec<f64>, u64)>> = BTreeMap::new();
            for (&item, &count) in &per_item {
                if let Some(creator) = self.items.created_by[item as usize] {
                    per_creator
                        .entry(creator)
                        .or_default()
                        .push((self.items.attribute_col(item as usize), count));
                }
            }
            creators_update(creators, &per_creator)?;
        }
        if self.config.drift_weight > 0.0 {
            for &(u, item) in &step_interactions {
                let attrs = self.items.attribute_col(item as usize);
                crate::agents::drift_preferences(&mut self.users, u as usize, &attrs)?;
            }
        }

        // 5. Notify observers.
        self.pairs_per_step.push((t, self.pairs.clone()));
        let view = StepView {
            t,
            trained_this_step: trained,
            users: &self.users,
            items: &self.items,
            creators: self.creators.as_ref(),
            model: self.model.as_ref(),
            pairs: &self.pairs,
            pairs_degenerate: self.pairs_degenerate,
            step_interactions: &step_interactions,
            recommended: &recommended,
            presented: &presented,
        };
        self.registry.sample_step(&view);

        self.executed_steps += 1;
        self.t += 1;
        Ok(true)
    }

    pub fn run_to_completion(&mut self) -> Result<()> {
        while self.step()? {}
        Ok(())
    }

    pub fn into_outcome(self) -> RunOutcome {
        let (series, states) = self.registry.into_results();
        RunOutcome {
            series,
            states,
            interaction_log: self.interaction_log,
            training_events: self.training_events,
            executed_steps: self.executed_steps,
            pairs_per_step: self.pairs_per_step,
            pairing_degenerate: self.pairing_ever_degenerate,
            users: self.users,
            items: self.items,
            creators: self.creators,
        }
    }
}

/// Build a simulation from the config, run it to completion, and return the
/// outcome. Deterministic in `config.seed`.
pub fn run(config: &SimulationConfig) -> Result<RunOutcome> {
    let mut sim = Simulation::new(config.clone())?;
    sim.run_to_completion()?;
    Ok(sim.into_outcome())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> SimulationConfig {
        SimulationConfig {
            num_users: 3,
            num_items: 12,
            num_attrs: 4,
            timesteps: 5,
            list_size: 3,
            startup_steps: 2,
            training: TrainingSchedule::Repeated,
            new_items_per_step: 0,
            seed: 99,
            model: ModelKind::Popularity,
            metrics: vec![MetricSelection::Homogenization, MetricSelection::Mse],
            ..Default::default()
        }
    }

    #[test]
    fn one_interaction_per_user_per_step() {
        let outcome = run(&base_config()).unwrap();
        assert_eq!(outcome.executed_steps, 5);
        assert_eq!(outcome.interaction_log.len(), 3 * 5);
        for t in 0..5u32 {
            let this_step = outcome
                .interaction_log
                .iter()
                .filter(|(_, _, ts)| *ts == t)
                .count();
            assert_eq!(this_step, 3);
        }
    }

    #[test]
    fn no_repeat_interactions_by_default() {
        let outcome = run(&base_config()).unwrap();
        let mut seen = BTreeSet::new();
        for &(u, i, _) in &outcome.interaction_log {
            assert!(seen.insert((u, i)), "pair ({u},{i}) repeated");
        }
    }

    #[test]
    fn catalog_exhaustion_deactivates_without_metrics() {
        // 3 users, 4 items, no new items: after ceil(4/1) steps users run
        // out (each consumes one per step).
        let config = SimulationConfig {
            timesteps: 50,
            num_items: 4,
            startup_steps: 1,
            ..base_config()
        };
        let outcome = run(&config).unwrap();
        // Each user can interact at most 4 times.
        assert_eq!(outcome.executed_steps, 4);
        for series in &outcome.series {
            assert_eq!(series.samples.len(), 4);
        }
        assert_eq!(outcome.interaction_log.len(), 12);
    }

    #[test]
    fn startup_lists_are_samples_of_unseen() {
        let mut sim = Simulation::new(base_config()).unwrap();
        sim.registry_mut()
            .register_state(StateRecorder::Presented(Vec::new()));
        sim.run_to_completion().unwrap();
        let outcome = sim.into_outcome();
        let presented = outcome
            .states
            .iter()
            .find_map(|s| match s {
                StateRecorder::Presented(h) => Some(h),
                _ => None,
            })
            .unwrap();
        // During the 2 startup steps, each user sees list_size distinct
        // items they have not consumed before.
        let mut consumed: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); 3];
        for (t, lists) in presented {
            if *t < 2 {
                for (u, list) in lists.iter().enumerate() {
                    assert_eq!(list.len(), 3);
                    let set: BTreeSet<u32> = list.iter().copied().collect();
                    assert_eq!(set.len(), 3, "duplicates in startup list");
                    assert!(set.is_disjoint(&consumed[u]));
                }
            }
            for &(u, item, ts) in &outcome.interaction_log {
                if ts == *t {
                    consumed[u as usize].insert(item);
                }
            }
        }
    }

    #[test]
    fn single_training_trains_once_at_startup_end() {
        let config = SimulationConfig {
            training: TrainingSchedule::Single,
            startup_steps: 2,
            timesteps: 5,
            ..base_config()
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.training_events, vec![2]);
    }

    #[test]
    fn repeated_training_trains_every_post_startup_step() {
        let outcome = run(&base_config()).unwrap();
        assert_eq!(outcome.training_events, vec![2, 3, 4]);
    }

    #[test]
    fn zero_timesteps_yield_empty_log() {
        let config = SimulationConfig {
            timesteps: 0,
            startup_steps: 0,
            ..base_config()
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.executed_steps, 0);
        assert!(outcome.interaction_log.is_empty());
        for s in &outcome.series {
            assert!(s.samples.is_empty());
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = run(&base_config()).unwrap();
        let b = run(&base_config()).unwrap();
        assert_eq!(a.interaction_log, b.interaction_log);
        for (sa, sb) in a.series.iter().zip(&b.series) {
            assert_eq!(sa.samples.len(), sb.samples.len());
            for ((ta, va), (tb, vb)) in sa.samples.iter().zip(&sb.samples) {
                assert_eq!(ta, tb);
                assert_eq!(va.to_bits(), vb.to_bits());
            }
        }
    }

    #[test]
    fn interleave_identity_cases() {
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(interleave(&[7, 8], &[], &mut rng), vec![7, 8]);
        assert_eq!(interleave(&[], &[3], &mut rng), vec![3]);
    }

    #[test]
    fn interleave_uniform_positions() {
        let rec = [10u32, 11, 12];
        let mut counts = [0usize; 4];
        let n = 10_000;
        for s in 0..n {
            let mut rng = RngStream::new(5, s).rng();
            let out = interleave(&rec, &[99], &mut rng);
            let pos = out.iter().position(|x| *x == 99).unwrap();
            counts[pos] += 1;
        }
        for (slot, &c) in counts.iter().enumerate() {
            let freq = c as f64 / n as f64;
            assert!(
                (freq - 0.25).abs() < 0.02,
                "slot {slot} frequency {freq}"
            );
        }
    }

    #[test]
    fn interleave_preserves_relative_order() {
        let rec: Vec<u32> = (0..6).collect();
        let mut rng = RngStream::new(9, 2).rng();
        let out = interleave(&rec, &[100, 101, 102], &mut rng);
        let positions: Vec<usize> = rec
            .iter()
            .map(|r| out.iter().position(|x| x == r).unwrap())
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(out.len(), 9);
    }

    #[test]
    fn selection_attention_examples() {
        // utilities indexed by item id
        let known = [0.9, 0.5];
        assert_eq!(select_interaction(&[0, 1], &known, 0.5), Some(0));
        let known2 = [0.4, 0.9];
        // decay 0.4: rank-0 item 0 wins (0.4 > 0.9×0.4 = 0.36)
        assert_eq!(select_interaction(&[0, 1], &known2, 0.4), Some(0));
        // decay off: pure utility argmax
        assert_eq!(select_interaction(&[0, 1], &known2, 1.0), Some(1));
        assert_eq!(select_interaction(&[], &known, 0.9), None);
    }

    #[test]
    fn scheduled_items_grow_catalog() {
        let config = SimulationConfig {
            num_items: 0,
            new_items_per_step: 4,
            timesteps: 6,
            startup_steps: 2,
            ..base_config()
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.items.len(), 24);
        for (i, &t) in outcome.items.created_at.iter().enumerate() {
            assert_eq!(t, (i / 4) as u32);
        }
        // utilities cover the whole catalog
        assert_eq!(outcome.users.true_utility.cols(), 24);
        assert_eq!(outcome.users.known_utility.cols(), 24);
    }

    #[test]
    fn creator_driven_runs_update_profiles() {
        let config = SimulationConfig {
            num_items: 0,
            new_items_per_step: 0,
            timesteps: 8,
            startup_steps: 2,
            num_users: 4,
            creators: Some(CreatorConfig {
                num_creators: 6,
                creation_prob: 1.0,
                ..Default::default()
            }),
            metrics: vec![
                MetricSelection::Homogenization,
                MetricSelection::CreatorEntropy,
                MetricSelection::ConsumptionDistance,
            ],
            ..base_config()
        };
        let outcome = run(&config).unwrap();
        assert_eq!(outcome.items.len(), 6 * 8);
        let creators = outcome.creators.unwrap();
        for c in 0..6 {
            let row = creators.profiles.row(c);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|v| *v >= 0.0));
        }
        let entropy = outcome
            .series
            .iter()
            .find(|s| s.name == "creator_entropy")
            .unwrap();
        assert!(entropy.samples.iter().all(|(_, v)| v.is_finite()));
    }

    #[test]
    fn drift_moves_preferences() {
        let config = SimulationConfig {
            drift_weight: 0.4,
            ..base_config()
        };
        let dataset = generate_dataset(&config, dataset_stream(99, 0)).unwrap();
        let before = dataset.users.actual_prefs.clone();
        let outcome = run(&config).unwrap();
        let mut moved = false;
        for u in 0..3 {
            let norm_before: f64 = before.row(u).iter().map(|v| v * v).sum::<f64>().sqrt();
            let norm_after: f64 = outcome
                .users
                .actual_prefs
                .row(u)
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            assert!((norm_before - norm_after).abs() < 1e-9);
            if outcome.users.actual_prefs.row(u) != before.row(u) {
                moved = true;
            }
        }
        assert!(moved, "drift enabled but no preferences changed");
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = base_config();
        c.startup_steps = 5;
        assert!(run(&c).is_err());
        let mut c = base_config();
        c.list_size = 0;
        assert!(run(&c).is_err());
        let mut c = base_config();
        c.attention_decay = 0.0;
        assert!(run(&c).is_err());
        let mut c = base_config();
        c.metrics = vec![MetricSelection::CreatorEntropy];
        assert!(run(&c).is_err());
    }
}
