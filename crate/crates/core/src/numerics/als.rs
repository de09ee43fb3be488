//! Alternating least squares for implicit-feedback matrix factorization.
//!
//! Interaction counts are fit directly as preferences with per-entry
//! confidence c = 1 + alpha·count (unobserved entries keep confidence 1 and
//! preference 0). When counts are 0/1 — the engine's case whenever repeat
//! interactions are disabled — this coincides exactly with the classic
//! binarized implicit-feedback model. Each half-step solves its
//! ridge-regularized subproblem exactly, so the weighted objective is
//! non-increasing across iterations.

use rand::Rng;

use crate::error::{config_err, Result};
use crate::numerics::linalg::{solve_spd, CholeskyFactor};
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::RngStream;

/// Rows with at most this many interactions are solved through the
/// Sherman–Morrison–Woodbury identity against the shared prefactored Gram
/// base instead of building and factoring their own k×k system.
const WOODBURY_MAX: usize = 8;

#[derive(Clone, Copy, Debug)]
pub struct AlsParams {
    pub k: usize,
    pub reg: f64,
    pub confidence_alpha: f64,
    pub iters: usize,
}

impl Default for AlsParams {
    fn default() -> Self {
        AlsParams {
            k: 20,
            reg: 0.01,
            confidence_alpha: 40.0,
            iters: 15,
        }
    }
}

/// Factorize an interaction-count matrix into
/// (user factors |U|×k, item factors k×|I|).
pub fn als_factorize(
    interactions: &Matrix,
    k: usize,
    reg: f64,
    confidence_alpha: f64,
    iters: usize,
    stream: RngStream,
) -> Result<(Matrix, Matrix)> {
    let params = AlsParams {
        k,
        reg,
        confidence_alpha,
        iters,
    };
    als_factorize_warm(interactions, &params, None, stream)
}

/// As `als_factorize`, optionally warm-starting from previous factors.
/// Warm-start item factors may cover fewer items than `interactions`; new
/// items start at zero and are picked up by the item half-step.
pub fn als_factorize_warm(
    interactions: &Matrix,
    params: &AlsParams,
    warm: Option<(&Matrix, &Matrix)>,
    stream: RngStream,
) -> Result<(Matrix, Matrix)> {
    let n_users = interactions.rows();
    let n_items = interactions.cols();
    let k = params.k;
    if k < 1 {
        return config_err("als: k must be at least 1");
    }
    if k > n_users.min(n_items) {
        return config_err(format!(
            "als: k={} exceeds min(|U|,|I|) = {}",
            k,
            n_users.min(n_items)
        ));
    }
    if !(params.reg > 0.0) {
        return config_err("als: reg must be > 0");
    }
    if params.iters < 1 {
        return config_err("als: iters must be at least 1");
    }

    // Row-major factor tables: users |U|×k, items |I|×k.
    let mut x = vec![0.0; n_users * k];
    let mut y = vec![0.0; n_items * k];
    match warm {
        Some((xu, yi)) => {
            for u in 0..xu.rows().min(n_users) {
                x[u * k..u * k + k].copy_from_slice(xu.row(u));
            }
            // yi is k×|I'|; copy item columns into rows.
            let prev_items = yi.cols();
            for i in 0..prev_items.min(n_items) {
                for f in 0..k {
                    y[i * k + f] = yi.get(f, i);
                }
            }
        }
        None => {
            let mut rng = stream.rng();
            for v in y.iter_mut() {
                *v = rng.random::<f64>() * 0.1;
            }
        }
    }

    let interactions_t = interactions.transpose();
    for _ in 0..params.iters {
        half_step(interactions, &y, &mut x, n_users, k, params);
        half_step(&interactions_t, &x, &mut y, n_items, k, params);
    }

    let user_factors = Matrix::from_dense(n_users, k, x)?;
    let item_factors = Matrix::from_dense(n_items, k, y)?.transpose();
    Ok((user_factors, item_factors))
}

/// Solve for every row factor in `out` given the opposite-side factors.
/// `counts` is oriented so its rows correspond to `out` rows. Normal
/// equations are accumulated in the lower triangle only (the Cholesky solve
/// never reads above the diagonal).
fn half_step(
    counts: &Matrix,
    other: &[f64],
    out: &mut [f64],
    n_rows: usize,
    k: usize,
    params: &AlsParams,
) {
    let n_other = other.len() / k;
    // Gram of the opposite factors plus the ridge term, shared by all rows.
    let mut base = vec![0.0; k * k];
    for j in 0..n_other {
        let row = &other[j * k..(j + 1) * k];
        for a in 0..k {
            let ra = row[a];
            if ra != 0.0 {
                let dst = &mut base[a * k..a * k + a + 1];
                for (slot, rb) in dst.iter_mut().zip(row) {
                    *slot += ra * rb;
                }
            }
        }
    }
    for a in 0..k {
        base[a * k + a] += params.reg;
    }

    let base_factor = CholeskyFactor::new(&base, k).expect("ridge base is positive definite");
    // Lazily memoized B⁻¹·y_j; popular columns are shared by many rows.
    let mut base_inv_cache: Vec<Option<Box<[f64]>>> = vec![None; n_other];

    let mut m = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    let mut nz: Vec<(usize, f64)> = Vec::new();
    for r in 0..n_rows {
        nz.clear();
        nz.extend(counts.row_nz(r));
        if nz.is_empty() {
            // No interactions: the exact ridge solution is zero.
            out[r * k..(r + 1) * k].fill(0.0);
            continue;
        }
        rhs.fill(0.0);
        for &(j, count) in &nz {
            let conf_extra = params.confidence_alpha * count;
            let rhs_scale = (1.0 + conf_extra) * count;
            let row = &other[j * k..(j + 1) * k];
            for (slot, ra) in rhs.iter_mut().zip(row) {
                *slot += rhs_scale * ra;
            }
        }
        let dst = &mut out[r * k..(r + 1) * k];
        if nz.len() <= WOODBURY_MAX {
            low_rank_solve(
                &base_factor,
                other,
                k,
                &nz,
                params.confidence_alpha,
                &rhs,
                &mut base_inv_cache,
                dst,
            );
        } else {
            m.copy_from_slice(&base);
            for &(j, count) in &nz {
                let conf_extra = params.confidence_alpha * count;
                let row = &other[j * k..(j + 1) * k];
                for a in 0..k {
                    let scaled = conf_extra * row[a];
                    let tri = &mut m[a * k..a * k + a + 1];
                    for (slot, rb) in tri.iter_mut().zip(row) {
                        *slot += scaled * rb;
                    }
                }
            }
            let solved = solve_spd(&m, k, &rhs).expect("ridge system is positive definite");
            dst.copy_from_slice(&solved);
        }
    }
}

/// Solve (B + Σ s_j y_j y_jᵀ) x = rhs through the Woodbury identity:
/// x = z₀ − Z (D⁻¹ + YᵀZ)⁻¹ Yᵀ z₀ with z₀ = B⁻¹rhs and Z = B⁻¹Y.
#[allow(clippy::too_many_arguments)]
fn low_rank_solve(
    base: &CholeskyFactor,
    other: &[f64],
    k: usize,
    nz: &[(usize, f64)],
    confidence_alpha: f64,
    rhs: &[f64],
    cache: &mut [Option<Box<[f64]>>],
    out: &mut [f64],
) {
    let m = nz.len();
    let mut z0 = rhs.to_vec();
    base.solve_in_place(&mut z0);

    for &(j, _) in nz {
        if cache[j].is_none() {
            let mut z = other[j * k..(j + 1) * k].to_vec();
            base.solve_in_place(&mut z);
            cache[j] = Some(z.into_boxed_slice());
        }
    }

    // Small capacitance system (D⁻¹ + YᵀZ) w = Yᵀz₀, lower triangle only.
    let mut cap = vec![0.0; m * m];
    let mut v = vec![0.0; m];
    for (a, &(ja, sa)) in nz.iter().enumerate() {
        let ya = &other[ja * k..(ja + 1) * k];
        v[a] = dot(ya, &z0);
        for (b, &(jb, _)) in nz.iter().enumerate().take(a + 1) {
            let zb = cache[jb].as_ref().expect("cached above");
            cap[a * m + b] = dot(ya, zb);
        }
        cap[a * m + a] += 1.0 / (confidence_alpha * sa);
    }
    let w = solve_spd(&cap, m, &v).expect("capacitance system is positive definite");

    out.copy_from_slice(&z0);
    for (b, &(jb, _)) in nz.iter().enumerate() {
        let zb = cache[jb].as_ref().expect("cached above");
        for (slot, zv) in out.iter_mut().zip(zb.iter()) {
            *slot -= w[b] * zv;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Full training objective
/// Σ c_ui (p_ui − x_u·y_i)² + reg (Σ‖x_u‖² + Σ‖y_i‖²)
/// with p = count and c = 1 + alpha·count.
/// Quadratic in |U|·|I|; intended for tests and diagnostics.
pub fn als_objective(
    interactions: &Matrix,
    user_factors: &Matrix,
    item_factors: &Matrix,
    reg: f64,
    confidence_alpha: f64,
) -> f64 {
    let n_users = interactions.rows();
    let n_items = interactions.cols();
    let k = user_factors.cols();
    let mut obj = 0.0;
    for u in 0..n_users {
        let xu = user_factors.row(u);
        for i in 0..n_items {
            let count = interactions.get(u, i);
            let pred: f64 = (0..k).map(|f| xu[f] * item_factors.get(f, i)).sum();
            let c = 1.0 + confidence_alpha * count;
            let d = count - pred;
            obj += c * d * d;
        }
    }
    for u in 0..n_users {
        obj += reg * user_factors.row(u).iter().map(|v| v * v).sum::<f64>();
    }
    for f in 0..item_factors.rows() {
        obj += reg * item_factors.row(f).iter().map(|v| v * v).sum::<f64>();
    }
    obj
}
