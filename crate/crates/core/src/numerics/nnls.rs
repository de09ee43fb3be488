//! Non-negative least squares via the Lawson–Hanson active-set method.
//!
//! Problems here are tiny (n ≈ 20 attributes) while the row count can reach
//! the full item catalog, so the solver works on the normal equations: the
//! Gram matrix AᵀA is formed once and reused when many targets share one
//! design (the content model solves one problem per user per training step).

use crate::error::{config_err, Result};
use crate::numerics::linalg::solve_spd;
use crate::numerics::matrix::Matrix;

const KKT_TOL: f64 = 1e-8;

/// A design matrix prepared once for repeated NNLS solves.
pub struct NnlsProblem {
    gram: Vec<f64>, // n×n, AᵀA
    n: usize,
}

impl NnlsProblem {
    pub fn from_design(design: &Matrix) -> Result<Self> {
        let m = design.rows();
        let n = design.cols();
        if m == 0 || n == 0 {
            return config_err("nnls: design must have at least one row and column");
        }
        let gram_m = design.transpose().matmul(design)?;
        let mut gram = vec![0.0; n * n];
        for r in 0..n {
            gram[r * n..(r + 1) * n].copy_from_slice(gram_m.row(r));
        }
        Ok(NnlsProblem { gram, n })
    }

    /// Project a raw target through the design: returns Aᵀb.
    pub fn project_target(design: &Matrix, target: &[f64]) -> Vec<f64> {
        let n = design.cols();
        let mut atb = vec![0.0; n];
        for r in 0..design.rows() {
            let t = target[r];
            if t != 0.0 {
                for (c, v) in design.row_nz(r) {
                    atb[c] += v * t;
                }
            }
        }
        atb
    }

    /// Minimize ‖Ax − b‖₂ subject to x ≥ 0, given Aᵀb.
    ///
    /// Terminates when the KKT conditions hold within `1e-8` (scaled by the
    /// magnitude of Aᵀb): active coordinates have non-positive gradient
    /// components, passive ones are solved exactly.
    pub fn solve(&self, atb: &[f64]) -> Vec<f64> {
        let n = self.n;
        debug_assert_eq!(atb.len(), n);
        let scale = atb.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = KKT_TOL * scale;

        let mut x = vec![0.0; n];
        let mut passive = vec![false; n];
        let mut banned = vec![false; n];

        // gradient w = Aᵀb − AᵀA·x
        let gradient = |x: &[f64]| -> Vec<f64> {
            let mut w = atb.to_vec();
            for j in 0..n {
                if x[j] != 0.0 {
                    for i in 0..n {
                        w[i] -= self.gram[i * n + j] * x[j];
                    }
                }
            }
            w
        };

        for _outer in 0..(3 * n + 10) {
            let w = gradient(&x);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                if !passive[j] && !banned[j] && w[j] > tol {
                    if best.map_or(true, |(_, bw)| w[j] > bw) {
                        best = Some((j, w[j]));
                    }
                }
            }
            let Some((enter, _)) = best else { break };
            passive[enter] = true;

            // Inner loop: solve the unconstrained subproblem on the passive
            // set and clip back to feasibility until all passive coords are
            // positive.
            for _inner in 0..(3 * n + 10) {
                let idx: Vec<usize> = (0..n).filter(|j| passive[*j]).collect();
                let p = idx.len();
                let mut sub = vec![0.0; p * p];
                let mut rhs = vec![0.0; p];
                for (a, &ja) in idx.iter().enumerate() {
                    rhs[a] = atb[ja];
                    for (b, &jb) in idx.iter().enumerate() {
                        sub[a * p + b] = self.gram[ja * n + jb];
                    }
                }
                let z = match solve_spd(&sub, p, &rhs) {
                    Ok(z) => z,
                    Err(_) => {
                        // Degenerate subproblem: back the entering variable out.
                        passive[enter] = false;
                        banned[enter] = true;
                        break;
                    }
                };
                if z.iter().all(|v| *v > 0.0) {
                    for v in x.iter_mut() {
                        *v = 0.0;
                    }
                    for (a, &j) in idx.iter().enumerate() {
                        x[j] = z[a];
                    }
                    break;
                }
                // Step as far toward z as feasibility allows.
                let mut alpha = f64::INFINITY;
                for (a, &j) in idx.iter().enumerate() {
                    if z[a] <= 0.0 {
                        let denom = x[j] - z[a];
                        if denom > 0.0 {
                            alpha = alpha.min(x[j] / denom);
                        } else {
                            alpha = 0.0;
                        }
                    }
                }
                let alpha = alpha.min(1.0).max(0.0);
                for (a, &j) in idx.iter().enumerate() {
                    x[j] += alpha * (z[a] - x[j]);
                }
                for &j in &idx {
                    if x[j] <= 0.0 {
                        x[j] = 0.0;
                        passive[j] = false;
                    }
                }
                if !passive[enter] {
                    // Entering variable was clipped straight back out; do not
                    // keep reselecting it.
                    banned[enter] = true;
                    break;
                }
            }
        }
        x
    }
}

/// One-shot NNLS: minimize ‖design·x − target‖₂ subject to x ≥ 0.
pub fn nnls(design: &Matrix, target: &[f64]) -> Result<Vec<f64>> {
    if target.len() != design.rows() {
        return config_err(format!(
            "nnls: target length {} does not match design rows {}",
            target.len(),
            design.rows()
        ));
    }
    let problem = NnlsProblem::from_design(design)?;
    let atb = NnlsProblem::project_target(design, target);
    Ok(problem.solve(&atb))
}
