use simrec_core::numerics::als::{als_factorize_warm, AlsParams};
use simrec_core::numerics::matrix::Matrix;
use simrec_core::numerics::rng::RngStream;
use simrec_core::models::select_top_k;
use std::collections::BTreeSet;
use std::time::Instant;

fn main() {
    let mut state = 0x12345678u64;
    let mut next = move || { state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (state >> 33) as usize };
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); 100];
    for row in rows.iter_mut() {
        let mut cols: BTreeSet<usize> = BTreeSet::new();
        while cols.len() < 500 { cols.insert(next() % 12500); }
        *row = cols.into_iter().map(|c| (c, 1.0)).collect();
    }
    let counts = Matrix::from_sparse_rows(100, 12500, &rows).unwrap();
    let params = AlsParams { k: 20, reg: 0.01, confidence_alpha: 40.0, iters: 3 };
    let t0 = Instant::now();
    let (xu, yi) = als_factorize_warm(&counts, &params, None, RngStream::new(2, 0)).unwrap();
    println!("ALS 3 iters cold: {:?}", t0.elapsed());
    let t1 = Instant::now();
    let _ = als_factorize_warm(&counts, &params, Some((&xu, &yi)), RngStream::new(2, 1)).unwrap();
    println!("ALS 3 iters warm(copy incl): {:?}", t1.elapsed());
    let t2 = Instant::now();
    let mut s = Matrix::zeros(1,1);
    for _ in 0..10 { s = xu.matmul(&yi).unwrap(); }
    println!("S=U*V matmul x10: {:?}", t2.elapsed());

    let exclude: BTreeSet<u32> = (0..500u32).map(|i| i * 25).collect();
    let row = s.row(0);
    let t3 = Instant::now();
    let mut acc = 0u32;
    for _ in 0..50_000 {
        acc = acc.wrapping_add(select_top_k(row, 10, &exclude)[0]);
    }
    println!("select_top_k 50k scans of 12.5k items: {:?} ({acc})", t3.elapsed());
}
