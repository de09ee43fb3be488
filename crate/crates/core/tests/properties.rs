//! Property tests for the numeric kernels: storage-independence of matrix
//! arithmetic, conservation laws of the samplers and interpolators, and
//! solver feasibility guarantees.

use std::collections::BTreeSet;

use proptest::prelude::*;

use simrec_core::numerics::matrix::Matrix;
use simrec_core::numerics::rng::RngStream;
use simrec_core::numerics::sample::sample_dirichlet;
use simrec_core::numerics::scores::{cosine_scores, inner_product_scores};
use simrec_core::numerics::slerp::slerp;
use simrec_core::numerics::stats::{jaccard, shannon_entropy};
use simrec_core::numerics::nnls::nnls;

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    // Sparse-ish values so the CSR path actually exercises skipped entries.
    proptest::collection::vec(
        prop_oneof![
            3 => Just(0.0),
            2 => -5.0..5.0f64,
        ],
        rows * cols,
    )
    .prop_map(move |data| Matrix::from_dense(rows, cols, data).unwrap())
}

fn bits(m: &Matrix) -> Vec<u64> {
    let d = m.to_dense();
    (0..d.rows())
        .flat_map(|r| d.row(r).iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_is_storage_independent(a in matrix_strategy(4, 6), b in matrix_strategy(6, 3)) {
        let dd = a.matmul(&b).unwrap();
        let ss = a.to_sparse().matmul(&b.to_sparse()).unwrap();
        let ds = a.matmul(&b.to_sparse()).unwrap();
        let sd = a.to_sparse().matmul(&b).unwrap();
        prop_assert_eq!(bits(&dd), bits(&ss));
        prop_assert_eq!(bits(&dd), bits(&ds));
        prop_assert_eq!(bits(&dd), bits(&sd));
    }

    #[test]
    fn score_functions_are_storage_independent(u in matrix_strategy(3, 5), i in matrix_strategy(5, 4)) {
        let dense = cosine_scores(&u, &i).unwrap();
        let sparse = cosine_scores(&u.to_sparse(), &i.to_sparse()).unwrap();
        prop_assert_eq!(bits(&dense), bits(&sparse));
        let ip_dense = inner_product_scores(&u, &i).unwrap();
        let ip_sparse = inner_product_scores(&u.to_sparse(), &i.to_sparse()).unwrap();
        prop_assert_eq!(bits(&ip_dense), bits(&ip_sparse));
    }

    #[test]
    fn cosine_equals_inner_product_on_unit_norm(rows in proptest::collection::vec(proptest::collection::vec(0.01..1.0f64, 4), 2..5)) {
        // Normalize rows, use the transpose as items: every vector unit norm.
        let unit: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                r.iter().map(|v| v / n).collect()
            })
            .collect();
        let users = Matrix::from_rows(unit).unwrap();
        let items = users.transpose();
        let a = inner_product_scores(&users, &items).unwrap();
        let b = cosine_scores(&users, &items).unwrap();
        for r in 0..a.rows() {
            for c in 0..a.cols() {
                prop_assert!((a.get(r, c) - b.get(r, c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn slerp_preserves_norm_and_fixed_points(
        from in proptest::collection::vec(-2.0..2.0f64, 3),
        to in proptest::collection::vec(-2.0..2.0f64, 3),
        t in 0.0..=1.0f64,
    ) {
        prop_assume!(from.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        prop_assume!(to.iter().map(|v| v * v).sum::<f64>() > 1e-6);
        let out = slerp(&from, &to, t).unwrap();
        let n_from = from.iter().map(|v| v * v).sum::<f64>().sqrt();
        let n_out = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((n_from - n_out).abs() < 1e-12);
        let same = slerp(&from, &from, t).unwrap();
        prop_assert_eq!(same, from);
    }

    #[test]
    fn dirichlet_draws_live_on_simplex(alpha in proptest::collection::vec(0.05..20.0f64, 1..10), seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).rng();
        let x = sample_dirichlet(&alpha, &mut rng).unwrap();
        prop_assert!(x.iter().all(|v| *v >= 0.0));
        prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn jaccard_symmetric_bounded_and_exact_on_equal(
        a in proptest::collection::btree_set(0u32..40, 0..12),
        b in proptest::collection::btree_set(0u32..40, 0..12),
    ) {
        let ab = jaccard(&a, &b);
        prop_assert_eq!(ab.to_bits(), jaccard(&b, &a).to_bits());
        prop_assert!((0.0..=1.0).contains(&ab));
        if !a.is_empty() {
            prop_assert_eq!(jaccard(&a, &a.clone()), 1.0);
            if ab == 1.0 {
                prop_assert_eq!(&a, &b);
            }
        }
    }

    #[test]
    fn entropy_bounded_by_uniform(weights in proptest::collection::vec(0.01..5.0f64, 2..12)) {
        let total: f64 = weights.iter().sum();
        let p: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let h = shannon_entropy(&p).unwrap();
        let d = p.len() as f64;
        prop_assert!(h >= 0.0);
        prop_assert!(h <= d.ln() + 1e-9);
    }

    #[test]
    fn nnls_feasible_and_no_worse_than_zero(
        data in proptest::collection::vec(-2.0..2.0f64, 12),
        target in proptest::collection::vec(-2.0..2.0f64, 4),
    ) {
        let design = Matrix::from_dense(4, 3, data).unwrap();
        let x = nnls(&design, &target).unwrap();
        prop_assert!(x.iter().all(|v| *v >= 0.0));
        let residual = |x: &[f64]| -> f64 {
            (0..4)
                .map(|r| {
                    let pred: f64 = design.row(r).iter().zip(x).map(|(a, b)| a * b).sum();
                    (pred - target[r]).powi(2)
                })
                .sum()
        };
        prop_assert!(residual(&x) <= residual(&[0.0, 0.0, 0.0]) + 1e-9);
    }

    #[test]
    fn entropy_uniform_is_maximal(d in 2usize..16) {
        let uniform = vec![1.0 / d as f64; d];
        let h = shannon_entropy(&uniform).unwrap();
        prop_assert!((h - (d as f64).ln()).abs() < 1e-9);
    }
}

#[test]
fn sampling_is_pure_in_the_stream() {
    let stream = RngStream::new(99, 17);
    let a = sample_dirichlet(&[0.4, 1.5, 3.0], &mut stream.rng()).unwrap();
    let b = sample_dirichlet(&[0.4, 1.5, 3.0], &mut stream.rng()).unwrap();
    assert_eq!(a, b);
    let sets: BTreeSet<u64> = (0..4)
        .map(|salt| stream.derive(salt).stream_id())
        .collect();
    assert_eq!(sets.len(), 4, "derived stream ids collide");
}
