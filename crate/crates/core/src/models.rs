//! The six recommender models behind a uniform train/score/recommend
//! interface: content filtering, popularity, matrix factorization, social
//! filtering, plus the random and ideal baselines.
//!
//! Each model keeps its own internal user representation Û (shape varies by
//! kind) and a predicted score matrix Ŝ of shape |U|×|I|. Between training
//! events Ŝ is only extended: newly created items score 0 until the next
//! training pass (the ideal baseline scores them by true utility, since it
//! is never trained).

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{ItemCatalog, UserPool};
use crate::error::{config_err, Result};
use crate::numerics::als::{als_factorize_warm, AlsParams};
use crate::numerics::matrix::Matrix;
use crate::numerics::nnls::NnlsProblem;
use crate::numerics::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Content,
    Popularity,
    MatrixFactorization,
    Social,
    Random,
    Ideal,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Content,
        ModelKind::Popularity,
        ModelKind::MatrixFactorization,
        ModelKind::Social,
        ModelKind::Random,
        ModelKind::Ideal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Content => "content",
            ModelKind::Popularity => "popularity",
            ModelKind::MatrixFactorization => "matrix_factorization",
            ModelKind::Social => "social",
            ModelKind::Random => "random",
            ModelKind::Ideal => "ideal",
        }
    }
}

/// Model hyperparameters beyond the kind itself.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelHyperparams {
    pub mf_factors: usize,
    pub mf_reg: f64,
    pub mf_confidence_alpha: f64,
    pub mf_iters: usize,
    /// Iterations when warm-starting from the previous factors; the loop
    /// only needs to track the newly arrived interactions then.
    pub mf_warm_iters: usize,
    /// Retrain matrix factorization from scratch instead of warm-starting
    /// from the previous factors.
    pub mf_cold_restart: bool,
    /// Social adjacency: connect each user to this many nearest neighbors
    /// by preference covariance; `None` thresholds at the mean off-diagonal
    /// covariance instead.
    pub social_neighbors: Option<usize>,
}

impl Default for ModelHyperparams {
    fn default() -> Self {
        let als = AlsParams::default();
        ModelHyperparams {
            mf_factors: als.k,
            mf_reg: als.reg,
            mf_confidence_alpha: als.confidence_alpha,
            mf_iters: als.iters,
            mf_warm_iters: 3,
            mf_cold_restart: false,
            social_neighbors: Some(10),
        }
    }
}

/// Everything a model may consult during a training pass.
pub struct TrainCtx<'a> {
    /// Interaction counts, |U|×|I| (sparse storage in practice).
    pub interactions: &'a Matrix,
    pub users: &'a UserPool,
    pub items: &'a ItemCatalog,
    /// Fresh stream for this training event (matrix-factorization init,
    /// random scores).
    pub stream: RngStream,
}

pub trait Recommender {
    fn kind(&self) -> ModelKind;

    /// Refresh Û and Ŝ from the supplied interaction data.
    fn train(&mut self, ctx: &TrainCtx) -> Result<()>;

    /// Extend Ŝ for `n_new` items appended to the catalog. Models score them
    /// 0 until retrained; the ideal baseline copies their true utility.
    fn items_added(&mut self, users: &UserPool, n_new: usize);

    /// Current predicted score row for one user.
    fn score_row(&self, user: usize) -> &[f64];

    fn num_scored_items(&self) -> usize;

    /// Internal user representation for similarity pairing, when the model
    /// has a meaningful one.
    fn predicted_user_repr(&self) -> Option<&Matrix>;

    /// Top `list_size` items by predicted score, excluding `exclude`;
    /// ties break toward the lower item id. Returns fewer when the catalog
    /// runs out.
    fn recommend(&self, user: usize, list_size: usize, exclude: &BTreeSet<u32>) -> Vec<u32> {
        select_top_k(self.score_row(user), list_size, exclude)
    }
}

/// Top-k selection by (score descending, id ascending).
pub fn select_top_k(scores: &[f64], list_size: usize, exclude: &BTreeSet<u32>) -> Vec<u32> {
    select_top_k_where(scores, list_size, |id| exclude.contains(&id))
}

/// Top-k selection with an arbitrary exclusion predicate; the closure is
/// monomorphized, so hot paths can use bitmask lookups.
pub fn select_top_k_where(
    scores: &[f64],
    list_size: usize,
    excluded: impl Fn(u32) -> bool,
) -> Vec<u32> {
    if list_size == 0 {
        return Vec::new();
    }
    let mut top: Vec<(f64, u32)> = Vec::with_capacity(list_size + 1);
    for (id, &s) in scores.iter().enumerate() {
        let id = id as u32;
        if top.len() >= list_size && s <= top.last().unwrap().0 {
            continue;
        }
        if excluded(id) {
            continue;
        }
        let pos = top.partition_point(|&(ts, _)| ts >= s);
        top.insert(pos, (s, id));
        top.truncate(list_size);
    }
    top.into_iter().map(|(_, id)| id).collect()
}

fn preference_covariance(actual_prefs: &Matrix) -> Result<Vec<f64>> {
    let n = actual_prefs.rows();
    let a = actual_prefs.cols();
    if n < 2 {
        return config_err("adjacency: need at least two users");
    }
    let means: Vec<f64> = (0..n)
        .map(|u| actual_prefs.row(u).iter().sum::<f64>() / a as f64)
        .collect();
    let mut cov = vec![0.0; n * n];
    for u in 0..n {
        for v in u..n {
            let mut acc = 0.0;
            for (x, y) in actual_prefs.row(u).iter().zip(actual_prefs.row(v)) {
                acc += (x - means[u]) * (y - means[v]);
            }
            let c = acc / a as f64;
            cov[u * n + v] = c;
            cov[v * n + u] = c;
        }
    }
    Ok(cov)
}

/// Binary symmetric user adjacency from the covariance of true preferences:
/// edge (u,v) iff cov(row u, row v) exceeds the mean off-diagonal
/// covariance. Users left isolated by that rule are joined to their nearest
/// neighbor (highest covariance, ties toward the lower id) so social
/// filtering always has someone to borrow from. Diagonal is 1.
pub fn adjacency_from_covariance(actual_prefs: &Matrix) -> Result<Matrix> {
    let n = actual_prefs.rows();
    let cov = preference_covariance(actual_prefs)?;
    let mut off_sum = 0.0;
    for u in 0..n {
        for v in 0..n {
            if u != v {
                off_sum += cov[u * n + v];
            }
        }
    }
    let threshold = off_sum / (n * (n - 1)) as f64;

    let mut adj = vec![0.0; n * n];
    for u in 0..n {
        adj[u * n + u] = 1.0;
        for v in 0..n {
            if u != v && cov[u * n + v] > threshold {
                adj[u * n + v] = 1.0;
            }
        }
    }
    for u in 0..n {
        let isolated = (0..n).all(|v| v == u || adj[u * n + v] == 0.0);
        if isolated {
            let mut best = if u == 0 { 1 } else { 0 };
            for v in 0..n {
                if v != u && cov[u * n + v] > cov[u * n + best] {
                    best = v;
                }
            }
            adj[u * n + best] = 1.0;
            adj[best * n + u] = 1.0;
        }
    }
    Matrix::from_dense(n, n, adj)
}

/// Sparse variant: each user connects to their `k` highest-covariance
/// neighbors (ties toward the lower id), symmetrized, diagonal 1. Small
/// neighborhoods keep social filtering local instead of collapsing it into
/// near-global popularity.
pub fn adjacency_nearest_neighbors(actual_prefs: &Matrix, k: usize) -> Result<Matrix> {
    let n = actual_prefs.rows();
    let cov = preference_covariance(actual_prefs)?;
    let mut adj = vec![0.0; n * n];
    for u in 0..n {
        adj[u * n + u] = 1.0;
        let mut order: Vec<usize> = (0..n).filter(|v| *v != u).collect();
        order.sort_by(|&a, &b| {
            cov[u * n + b]
                .partial_cmp(&cov[u * n + a])
                .unwrap()
                .then(a.cmp(&b))
        });
        for &v in order.iter().take(k) {
            adj[u * n + v] = 1.0;
            adj[v * n + u] = 1.0;
        }
    }
    Matrix::from_dense(n, n, adj)
}

/// Construct a model of the given kind for the supplied populations.
pub fn build_model(
    kind: ModelKind,
    params: &ModelHyperparams,
    users: &UserPool,
    items: &ItemCatalog,
) -> Result<Box<dyn Recommender + Send>> {
    let n_users = users.num_users();
    let n_items = items.len();
    Ok(match kind {
        ModelKind::Content => Box::new(ContentModel {
            user_repr: Matrix::zeros(n_users, users.num_attrs()),
            scores: Matrix::zeros(n_users, n_items),
        }),
        ModelKind::Popularity => Box::new(PopularityModel {
            user_repr: Matrix::from_dense(n_users, 1, vec![1.0; n_users])?,
            item_scores: vec![0.0; n_items],
        }),
        ModelKind::MatrixFactorization => Box::new(MfModel {
            params: AlsParams {
                k: params.mf_factors,
                reg: params.mf_reg,
                confidence_alpha: params.mf_confidence_alpha,
                iters: params.mf_iters,
            },
            warm_iters: params.mf_warm_iters,
            cold_restart: params.mf_cold_restart,
            factors: None,
            scores: Matrix::zeros(n_users, n_items),
        }),
        ModelKind::Social => Box::new(SocialModel {
            adjacency: match params.social_neighbors {
                Some(k) => adjacency_nearest_neighbors(&users.actual_prefs, k)?,
                None => adjacency_from_covariance(&users.actual_prefs)?,
            },
            scores: Matrix::zeros(n_users, n_items),
        }),
        ModelKind::Random => Box::new(RandomModel {
            scores: Matrix::zeros(n_users, n_items),
        }),
        ModelKind::Ideal => Box::new(IdealModel {
            scores: users.true_utility.clone(),
        }),
    })
}

/// Content filtering: Û rows are non-negative least-squares fits of the
/// user's interaction counts against item attributes; Ŝ = Û·I.
struct ContentModel {
    user_repr: Matrix,
    scores: Matrix,
}

impl Recommender for ContentModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Content
    }

    fn train(&mut self, ctx: &TrainCtx) -> Result<()> {
        let attrs = &ctx.items.attributes; // A×|I|
        let num_attrs = attrs.rows();
        let design = attrs.transpose(); // |I|×A, dense rows per item
        let problem = NnlsProblem::from_design(&design)?;
        for u in 0..ctx.users.num_users() {
            let mut atb = vec![0.0; num_attrs];
            for (i, count) in ctx.interactions.row_nz(u) {
                for (slot, a) in atb.iter_mut().zip(design.row(i)) {
                    *slot += a * count;
                }
            }
            let x = problem.solve(&atb);
            self.user_repr.row_mut(u).copy_from_slice(&x);
        }
        self.scores = self.user_repr.matmul(attrs)?;
        Ok(())
    }

    fn items_added(&mut self, _users: &UserPool, n_new: usize) {
        append_zero_cols(&mut self.scores, n_new);
    }

    fn score_row(&self, user: usize) -> &[f64] {
        self.scores.row(user)
    }

    fn num_scored_items(&self) -> usize {
        self.scores.cols()
    }

    fn predicted_user_repr(&self) -> Option<&Matrix> {
        Some(&self.user_repr)
    }
}

/// Popularity: every user scores an item by its total interaction count.
struct PopularityModel {
    user_repr: Matrix,
    item_scores: Vec<f64>,
}

impl Recommender for PopularityModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Popularity
    }

    fn train(&mut self, ctx: &TrainCtx) -> Result<()> {
        self.item_scores = ctx.interactions.col_sums();
        Ok(())
    }

    fn items_added(&mut self, _users: &UserPool, n_new: usize) {
        self.item_scores.extend(std::iter::repeat(0.0).take(n_new));
    }

    fn score_row(&self, _user: usize) -> &[f64] {
        &self.item_scores
    }

    fn num_scored_items(&self) -> usize {
        self.item_scores.len()
    }

    fn predicted_user_repr(&self) -> Option<&Matrix> {
        Some(&self.user_repr)
    }
}

/// Implicit-feedback matrix factorization; Ŝ = Û·Î.
struct MfModel {
    params: AlsParams,
    warm_iters: usize,
    cold_restart: bool,
    factors: Option<(Matrix, Matrix)>,
    scores: Matrix,
}

impl Recommender for MfModel {
    fn kind(&self) -> ModelKind {
        ModelKind::MatrixFactorization
    }

    fn train(&mut self, ctx: &TrainCtx) -> Result<()> {
        let warm = if self.cold_restart {
            None
        } else {
            self.factors.as_ref().map(|(u, i)| (u, i))
        };
        let mut params = self.params;
        if warm.is_some() {
            params.iters = self.warm_iters.max(1);
        }
        let (xu, yi) = als_factorize_warm(ctx.interactions, &params, warm, ctx.stream)?;
        self.scores = xu.matmul(&yi)?;
        self.factors = Some((xu, yi));
        Ok(())
    }

    fn items_added(&mut self, _users: &UserPool, n_new: usize) {
        append_zero_cols(&mut self.scores, n_new);
    }

    fn score_row(&self, user: usize) -> &[f64] {
        self.scores.row(user)
    }

    fn num_scored_items(&self) -> usize {
        self.scores.cols()
    }

    fn predicted_user_repr(&self) -> Option<&Matrix> {
        self.factors.as_ref().map(|(u, _)| u)
    }
}

/// Social filtering: Ŝ = Adj·counts, so a user scores items by how much
/// their network neighborhood interacted with them.
struct SocialModel {
    adjacency: Matrix,
    scores: Matrix,
}

impl SocialModel {
    #[cfg(test)]
    fn with_adjacency(adjacency: Matrix, n_items: usize) -> Self {
        let n = adjacency.rows();
        SocialModel {
            adjacency,
            scores: Matrix::zeros(n, n_items),
        }
    }
}

impl Recommender for SocialModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Social
    }

    fn train(&mut self, ctx: &TrainCtx) -> Result<()> {
        self.scores = self.adjacency.matmul(ctx.interactions)?;
        Ok(())
    }

    fn items_added(&mut self, _users: &UserPool, n_new: usize) {
        append_zero_cols(&mut self.scores, n_new);
    }

    fn score_row(&self, user: usize) -> &[f64] {
        self.scores.row(user)
    }

    fn num_scored_items(&self) -> usize {
        self.scores.cols()
    }

    fn predicted_user_repr(&self) -> Option<&Matrix> {
        Some(&self.adjacency)
    }
}

/// Random baseline: Ŝ is redrawn uniformly at every training event, from the
/// training stream, keeping full-run determinism.
struct RandomModel {
    scores: Matrix,
}

impl Recommender for RandomModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Random
    }

    fn train(&mut self, ctx: &TrainCtx) -> Result<()> {
        let n_users = ctx.users.num_users();
        let n_items = ctx.items.len();
        let mut rng = ctx.stream.rng();
        let data: Vec<f64> = (0..n_users * n_items).map(|_| rng.random()).collect();
        self.scores = Matrix::from_dense(n_users, n_items, data)?;
        Ok(())
    }

    fn items_added(&mut self, _users: &UserPool, n_new: usize) {
        append_zero_cols(&mut self.scores, n_new);
    }

    fn score_row(&self, user: usize) -> &[f64] {
        self.scores.row(user)
    }

    fn num_scored_items(&self) -> usize {
        self.scores.cols()
    }

    fn predicted_user_repr(&self) -> Option<&Matrix> {
        None
    }
}

/// Ideal baseline: Ŝ is the true utility, including for new items; train()
/// never changes it.
struct IdealModel {
    scores: Matrix,
}

impl Recommender for IdealModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Ideal
    }

    fn train(&mut self, _ctx: &TrainCtx) -> Result<()> {
        Ok(())
    }

    fn items_added(&mut self, users: &UserPool, n_new: usize) {
        let total = users.true_utility.cols();
        let start = total - n_new;
        let cols: Vec<Vec<f64>> = (start..total)
            .map(|i| {
                (0..users.num_users())
                    .map(|u| users.true_utility.get(u, i))
                    .collect()
            })
            .collect();
        self.scores.append_cols(&cols);
    }

    fn score_row(&self, user: usize) -> &[f64] {
        self.scores.row(user)
    }

    fn num_scored_items(&self) -> usize {
        self.scores.cols()
    }

    fn predicted_user_repr(&self) -> Option<&Matrix> {
        None
    }
}

fn append_zero_cols(m: &mut Matrix, n_new: usize) {
    if n_new > 0 {
        let zeros = vec![vec![0.0; m.rows()]; n_new];
        m.append_cols(&zeros);
    }
}
