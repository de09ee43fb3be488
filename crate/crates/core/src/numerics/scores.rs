//! Score functions mapping user and item representations to a score matrix.

use crate::error::{config_err, Result};
use crate::numerics::matrix::Matrix;

/// Inner-product scores: `result[u][i] = dot(users row u, items column i)`.
pub fn inner_product_scores(users: &Matrix, items: &Matrix) -> Result<Matrix> {
    if users.cols() != items.rows() {
        return config_err(format!(
            "score dimension mismatch: users {}x{} vs items {}x{}",
            users.rows(),
            users.cols(),
            items.rows(),
            items.cols()
        ));
    }
    users.matmul(items)
}

/// Cosine-similarity scores. Rows or columns with zero norm score 0, so a
/// user or item with no attributes matches nothing instead of producing NaN.
pub fn cosine_scores(users: &Matrix, items: &Matrix) -> Result<Matrix> {
    if users.cols() != items.rows() {
        return config_err(format!(
            "score dimension mismatch: users {}x{} vs items {}x{}",
            users.rows(),
            users.cols(),
            items.rows(),
            items.cols()
        ));
    }
    let items_t = items.transpose();
    let user_norms: Vec<f64> = (0..users.rows()).map(|u| users.row_norm(u)).collect();
    let item_norms: Vec<f64> = (0..items_t.rows()).map(|i| items_t.row_norm(i)).collect();
    let mut out = vec![0.0; users.rows() * items_t.rows()];
    for u in 0..users.rows() {
        for i in 0..items_t.rows() {
            let denom = user_norms[u] * item_norms[i];
            out[u * items_t.rows() + i] = if denom == 0.0 {
                0.0
            } else {
                users.row_dot(u, &items_t, i) / denom
            };
        }
    }
    Matrix::from_dense(users.rows(), items_t.rows(), out)
}

/// Cosine similarity of two vectors, zero-norm convention as above.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let denom = na.sqrt() * nb.sqrt();
    if denom == 0.0 {
        0.0
    } else {
        dot / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rows_select_entries() {
        let users = Matrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let items = Matrix::from_rows(vec![vec![2.0], vec![3.0]]).unwrap();
        let s = inner_product_scores(&users, &items).unwrap();
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(1, 0), 3.0);
    }

    #[test]
    fn zero_row_scores_zero() {
        let users = Matrix::from_rows(vec![vec![0.0, 0.0]]).unwrap();
        let items = Matrix::from_rows(vec![vec![5.0], vec![7.0]]).unwrap();
        let s = inner_product_scores(&users, &items).unwrap();
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn hand_dot_product() {
        let users = Matrix::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        let items = Matrix::from_rows(vec![vec![3.0], vec![4.0]]).unwrap();
        assert_eq!(inner_product_scores(&users, &items).unwrap().get(0, 0), 11.0);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let users = Matrix::zeros(1, 3);
        let items = Matrix::zeros(2, 1);
        assert!(inner_product_scores(&users, &items).is_err());
        assert!(cosine_scores(&users, &items).is_err());
    }

    #[test]
    fn cosine_45_degrees() {
        let users = Matrix::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        let items = Matrix::from_rows(vec![vec![1.0], vec![1.0]]).unwrap();
        let s = cosine_scores(&users, &items).unwrap();
        assert!((s.get(0, 0) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn cosine_scale_invariant() {
        let users = Matrix::from_rows(vec![vec![2.0, 0.0]]).unwrap();
        let items = Matrix::from_rows(vec![vec![1.0], vec![0.0]]).unwrap();
        let s = cosine_scores(&users, &items).unwrap();
        assert!((s.get(0, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_zero_norm_convention() {
        let users = Matrix::from_rows(vec![vec![0.0, 0.0]]).unwrap();
        let items = Matrix::from_rows(vec![vec![1.0], vec![0.0]]).unwrap();
        let s = cosine_scores(&users, &items).unwrap();
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn cosine_equals_inner_product_on_unit_vectors() {
        // rows and columns already unit norm
        let users = Matrix::from_rows(vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
        ])
        .unwrap();
        let items = users.transpose();
        let a = inner_product_scores(&users, &items).unwrap();
        let b = cosine_scores(&users, &items).unwrap();
        for u in 0..a.rows() {
            for i in 0..a.cols() {
                assert!((a.get(u, i) - b.get(u, i)).abs() < 1e-12);
            }
        }
    }
}
