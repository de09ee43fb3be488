//! Spherical linear interpolation between direction vectors.

use crate::error::{domain_err, Result};

const PARALLEL_EPS: f64 = 1e-12;

/// Interpolate from `from` toward `to` by fraction `t` of the angle between
/// them. The result keeps the Euclidean norm of `from`.
///
/// Antiparallel inputs have no unique rotation plane; the plane is fixed
/// deterministically using the first coordinate axis not collinear with
/// `from`.
pub fn slerp(from: &[f64], to: &[f64], t: f64) -> Result<Vec<f64>> {
    if from.len() != to.len() {
        return domain_err("slerp: vectors must have equal length");
    }
    if !(0.0..=1.0).contains(&t) {
        return domain_err(format!("slerp: t={t} outside [0,1]"));
    }
    let norm_from = norm(from);
    let norm_to = norm(to);
    if norm_from == 0.0 || norm_to == 0.0 {
        return domain_err("slerp: zero vector");
    }
    let u: Vec<f64> = from.iter().map(|x| x / norm_from).collect();
    let v: Vec<f64> = to.iter().map(|x| x / norm_to).collect();
    let cos = dot(&u, &v).clamp(-1.0, 1.0);

    if cos >= 1.0 - PARALLEL_EPS {
        // Same direction: nothing to rotate.
        return Ok(from.to_vec());
    }

    let (omega, w) = if cos <= -1.0 + PARALLEL_EPS {
        // Antiparallel: rotate through π in a fixed plane.
        (std::f64::consts::PI, orthogonal_complement(&u)?)
    } else {
        let omega = cos.acos();
        // Component of v orthogonal to u, normalized.
        let sin = omega.sin();
        let w: Vec<f64> = v
            .iter()
            .zip(&u)
            .map(|(vi, ui)| (vi - cos * ui) / sin)
            .collect();
        (omega, w)
    };

    let a = (t * omega).cos();
    let b = (t * omega).sin();
    Ok(u.iter()
        .zip(&w)
        .map(|(ui, wi)| norm_from * (a * ui + b * wi))
        .collect())
}

/// Unit vector orthogonal to `u`, built from the first coordinate axis that
/// is not collinear with it.
fn orthogonal_complement(u: &[f64]) -> Result<Vec<f64>> {
    for axis in 0..u.len() {
        // e_axis - (u·e_axis) u
        let proj = u[axis];
        let mut w: Vec<f64> = u.iter().map(|ui| -proj * ui).collect();
        w[axis] += 1.0;
        let n = norm(&w);
        if n > 1e-9 {
            return Ok(w.into_iter().map(|x| x / n).collect());
        }
    }
    domain_err("slerp: no orthogonal complement exists (dimension 1)")
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
