//! The three agent populations: users, items, and content creators.
//!
//! Populations are generated synthetically (Dirichlet preference/attribute
//! vectors, Beta-distributed utilities) and mutate only through the engine:
//! users accumulate interaction histories and optionally drift toward
//! consumed items, creators shift their profiles toward items that earned
//! interactions.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, domain_err, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::RngStream;
use crate::numerics::sample::{sample_beta_mean, sample_dirichlet};
use crate::numerics::slerp::slerp;

/// User population state.
///
/// `actual_prefs` rows live on the simplex at generation time; they keep
/// their Euclidean norm under drift. `known_utility` is elementwise at most
/// `true_utility` — users underestimate, never overestimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UserPool {
    pub actual_prefs: Matrix,
    pub true_utility: Matrix,
    pub known_utility: Matrix,
    pub interacted: Vec<BTreeSet<u32>>,
    pub drift_weight: f64,
    pub attention_decay: f64,
}

impl UserPool {
    pub fn num_users(&self) -> usize {
        self.actual_prefs.rows()
    }

    pub fn num_attrs(&self) -> usize {
        self.actual_prefs.cols()
    }

    /// Record a user/item interaction. Histories only grow.
    pub fn record_interaction(&mut self, user: usize, item: u32) {
        self.interacted[user].insert(item);
    }

    /// Append utility columns for newly created items.
    pub fn extend_utilities(&mut self, true_cols: &[Vec<f64>], known_cols: &[Vec<f64>]) {
        debug_assert_eq!(true_cols.len(), known_cols.len());
        self.true_utility.append_cols(true_cols);
        self.known_utility.append_cols(known_cols);
    }
}

/// Item catalog. The attribute matrix is A×|I| (items are columns) and only
/// ever grows; predicted item attributes equal actual ones, so there is a
/// single attribute matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ItemCatalog {
    pub attributes: Matrix,
    pub created_at: Vec<u32>,
    pub created_by: Vec<Option<u32>>,
    pub interaction_counts: Vec<u64>,
}

impl ItemCatalog {
    pub fn len(&self) -> usize {
        self.attributes.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_attrs(&self) -> usize {
        self.attributes.rows()
    }

    pub fn attribute_col(&self, item: usize) -> Vec<f64> {
        (0..self.num_attrs())
            .map(|a| self.attributes.get(a, item))
            .collect()
    }

    pub fn append_items(&mut self, items: &[NewItem]) {
        if items.is_empty() {
            return;
        }
        let cols: Vec<Vec<f64>> = items.iter().map(|it| it.attrs.clone()).collect();
        self.attributes.append_cols(&cols);
        for it in items {
            self.created_at.push(it.created_at);
            self.created_by.push(it.created_by);
            self.interaction_counts.push(0);
        }
    }
}

/// An item emitted by a creator (or by the scheduled item stream).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NewItem {
    pub attrs: Vec<f64>,
    pub created_at: u32,
    pub created_by: Option<u32>,
}

/// How creators turn their profile into item attributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CreatorMode {
    /// Each attribute is an independent Bernoulli(γ_a) coin.
    BernoulliAttrs,
    /// Items are Dirichlet(γ · item_concentration) draws.
    DirichletAttrs,
}

/// Content-creator population. Profile rows γ stay on the simplex through
/// every update.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CreatorPool {
    pub profiles: Matrix,
    pub creation_prob: f64,
    pub item_concentration: f64,
    pub learn_rate: f64,
    pub mode: CreatorMode,
    /// Weight the profile update by interaction counts; the alternative is a
    /// plain mean over interacted items.
    pub weight_by_counts: bool,
}

impl CreatorPool {
    pub fn num_creators(&self) -> usize {
        self.profiles.rows()
    }

    pub fn num_attrs(&self) -> usize {
        self.profiles.cols()
    }
}

/// Generate `num` users with Dirichlet(concentration) preference rows.
/// Utilities start empty; histories start empty; drift is off until the
/// engine configures it.
pub fn generate_users(
    num: usize,
    num_attrs: usize,
    concentration: &[f64],
    stream: RngStream,
) -> Result<UserPool> {
    if num < 1 || num_attrs < 1 {
        return config_err("generate_users: need at least one user and one attribute");
    }
    if concentration.len() != num_attrs {
        return domain_err("generate_users: concentration length must equal num_attrs");
    }
    let mut rng = stream.rng();
    let mut rows = Vec::with_capacity(num);
    for _ in 0..num {
        rows.push(sample_dirichlet(concentration, &mut rng)?);
    }
    Ok(UserPool {
        actual_prefs: Matrix::from_rows(rows)?,
        true_utility: Matrix::zeros(num, 0),
        known_utility: Matrix::zeros(num, 0),
        interacted: vec![BTreeSet::new(); num],
        drift_weight: 0.0,
        attention_decay: 1.0,
    })
}

/// Generate `num` items with Dirichlet(concentration) attribute columns,
/// all tagged `created_at = 0`. `num = 0` yields an empty catalog (valid
/// when creators supply every item).
pub fn generate_items(
    num: usize,
    num_attrs: usize,
    concentration: &[f64],
    stream: RngStream,
) -> Result<ItemCatalog> {
    if num_attrs < 1 {
        return config_err("generate_items: need at least one attribute");
    }
    if concentration.len() != num_attrs {
        return domain_err("generate_items: concentration length must equal num_attrs");
    }
    let mut rng = stream.rng();
    let mut data = vec![0.0; num_attrs * num];
    for i in 0..num {
        let col = sample_dirichlet(concentration, &mut rng)?;
        for (a, v) in col.into_iter().enumerate() {
            data[a * num + i] = v;
        }
    }
    Ok(ItemCatalog {
        attributes: Matrix::from_dense(num_attrs, num, data)?,
        created_at: vec![0; num],
        created_by: vec![None; num],
        interaction_counts: vec![0; num],
    })
}

/// Sample true and known utility columns for a batch of items.
///
/// For each user u and item column i:
/// `true[u][i] ~ BetaMean(dot(prefs_u, attrs_i), true_conc)` and
/// `known[u][i] = true[u][i] · BetaMean(known_frac_mean, known_frac_conc)`.
/// Returns `(true_cols, known_cols)`, one column per item.
pub fn utility_columns(
    users: &UserPool,
    item_cols: &[Vec<f64>],
    true_conc: f64,
    known_frac_mean: f64,
    known_frac_conc: f64,
    stream: RngStream,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut rng = stream.rng();
    let n_users = users.num_users();
    let mut true_cols = Vec::with_capacity(item_cols.len());
    let mut known_cols = Vec::with_capacity(item_cols.len());
    for attrs in item_cols {
        let mut tcol = Vec::with_capacity(n_users);
        let mut kcol = Vec::with_capacity(n_users);
        for u in 0..n_users {
            let dot: f64 = users
                .actual_prefs
                .row(u)
                .iter()
                .zip(attrs)
                .map(|(p, a)| p * a)
                .sum();
            let mean = dot.clamp(0.0, 1.0);
            let t = sample_beta_mean(mean, true_conc, &mut rng)?;
            let frac = sample_beta_mean(known_frac_mean, known_frac_conc, &mut rng)?;
            tcol.push(t);
            kcol.push(t * frac);
        }
        true_cols.push(tcol);
        known_cols.push(kcol);
    }
    Ok((true_cols, known_cols))
}

/// Populate `users.true_utility` / `users.known_utility` for a whole catalog.
pub fn generate_utilities(
    users: &mut UserPool,
    items: &ItemCatalog,
    true_conc: f64,
    known_frac_mean: f64,
    known_frac_conc: f64,
    stream: RngStream,
) -> Result<()> {
    let cols: Vec<Vec<f64>> = (0..items.len()).map(|i| items.attribute_col(i)).collect();
    let (tcols, kcols) = utility_columns(
        users,
        &cols,
        true_conc,
        known_frac_mean,
        known_frac_conc,
        stream,
    )?;
    users.true_utility = Matrix::zeros(users.num_users(), 0);
    users.known_utility = Matrix::zeros(users.num_users(), 0);
    users.extend_utilities(&tcols, &kcols);
    Ok(())
}

/// Drift one user's preference row toward an item's attributes by the pool's
/// drift weight, preserving the row norm. A zero item vector is a logged
/// no-op rather than an error.
pub fn drift_preferences(users: &mut UserPool, user: usize, item_attrs: &[f64]) -> Result<()> {
    let w = users.drift_weight;
    if !(0.0..=1.0).contains(&w) {
        return domain_err(format!("drift weight {w} outside [0,1]"));
    }
    if w == 0.0 {
        return Ok(());
    }
    if item_attrs.iter().all(|v| *v == 0.0) {
        log::debug!("drift skipped for user {user}: zero item vector");
        return Ok(());
    }
    let new_row = slerp(users.actual_prefs.row(user), item_attrs, w)?;
    users.actual_prefs.row_mut(user).copy_from_slice(&new_row);
    Ok(())
}

/// Each creator independently emits one item with probability
/// `creation_prob`. Per-creator substreams make the output independent of
/// iteration order.
pub fn creators_generate(creators: &CreatorPool, t: u32, stream: RngStream) -> Vec<NewItem> {
    let mut out = Vec::new();
    for c in 0..creators.num_creators() {
        let mut rng = stream.derive(c as u64).rng();
        if !rng.random_bool(creators.creation_prob) {
            continue;
        }
        let gamma = creators.profiles.row(c);
        let attrs = match creators.mode {
            CreatorMode::BernoulliAttrs => gamma
                .iter()
                .map(|&p| if rng.random_bool(p.clamp(0.0, 1.0)) { 1.0 } else { 0.0 })
                .collect(),
            CreatorMode::DirichletAttrs => {
                sample_scaled_profile(gamma, creators.item_concentration, &mut rng)
            }
        };
        out.push(NewItem {
            attrs,
            created_at: t,
            created_by: Some(c as u32),
        });
    }
    out
}

/// Dirichlet(γ·scale) draw that tolerates exact zeros in γ: zero-weight
/// components get zero mass, the rest are sampled on their sub-simplex.
fn sample_scaled_profile(gamma: &[f64], scale: f64, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let positive: Vec<usize> = (0..gamma.len()).filter(|&a| gamma[a] > 0.0).collect();
    let mut out = vec![0.0; gamma.len()];
    if positive.len() == 1 {
        out[positive[0]] = 1.0;
        return out;
    }
    let alphas: Vec<f64> = positive.iter().map(|&a| gamma[a] * scale).collect();
    let draw = sample_dirichlet(&alphas, rng).expect("positive alphas");
    for (slot, v) in positive.into_iter().zip(draw) {
        out[slot] = v;
    }
    out
}

/// Shift creator profiles toward their interacted items:
/// `γ ← normalize((1−η)·γ + η·ī)` where ī is the (optionally
/// interaction-count-weighted) mean attribute vector of the creator's
/// interacted items this step. Creators without interactions are unchanged.
pub fn creators_update(
    creators: &mut CreatorPool,
    interactions: &BTreeMap<u32, Vec<(Vec<f64>, u64)>>,
) -> Result<()> {
    let eta = creators.learn_rate;
    if !(0.0..=1.0).contains(&eta) {
        return domain_err(format!("creator learn rate {eta} outside [0,1]"));
    }
    let num_attrs = creators.num_attrs();
    for (&c, items) in interactions {
        if items.is_empty() {
            continue;
        }
        let c = c as usize;
        let mut mean = vec![0.0; num_attrs];
        let mut total = 0.0;
        for (attrs, count) in items {
            let w = if creators.weight_by_counts {
                *count as f64
            } else {
                1.0
            };
            for (m, a) in mean.iter_mut().zip(attrs) {
                *m += w * a;
            }
            total += w;
        }
        if total == 0.0 {
            continue;
        }
        for m in mean.iter_mut() {
            *m /= total;
        }
        let row = creators.profiles.row_mut(c);
        let mut sum = 0.0;
        for (g, m) in row.iter_mut().zip(&mean) {
            *g = (1.0 - eta) * *g + eta * m;
            sum += *g;
        }
        if sum > 0.0 {
            for g in row.iter_mut() {
                *g /= sum;
            }
        }
    }
    Ok(())
}

/// Generate a creator pool with Dirichlet(profile_concentration) rows.
#[allow(clippy::too_many_arguments)]
pub fn generate_creators(
    num: usize,
    num_attrs: usize,
    profile_concentration: &[f64],
    creation_prob: f64,
    item_concentration: f64,
    learn_rate: f64,
    mode: CreatorMode,
    stream: RngStream,
) -> Result<CreatorPool> {
    if num < 1 || num_attrs < 1 {
        return config_err("generate_creators: need at least one creator and attribute");
    }
    if !(0.0..=1.0).contains(&creation_prob) {
        return config_err(format!("creation probability {creation_prob} outside [0,1]"));
    }
    let mut rng = stream.rng();
    let mut rows = Vec::with_capacity(num);
    for _ in 0..num {
        rows.push(sample_dirichlet(profile_concentration, &mut rng)?);
    }
    Ok(CreatorPool {
        profiles: Matrix::from_rows(rows)?,
        creation_prob,
        item_concentration,
        learn_rate,
        mode,
        weight_by_counts: true,
    })
}
