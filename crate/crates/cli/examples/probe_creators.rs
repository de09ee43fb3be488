use simrec::config::{parse_config_str, resolve, ExperimentKind};
use simrec::trial::{run_trial, NameTable};
use std::time::Instant;

fn main() {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let threads: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().unwrap();
    let t0 = Instant::now();
    let file = parse_config_str(r#"{"preset": "creators"}"#).unwrap();
    let resolved = resolve(&file).unwrap();
    let fx = match &resolved.kind { ExperimentKind::FeedbackLoop(f) => f.clone(), _ => panic!() };
    let names = NameTable::build(&fx);
    use rayon::prelude::*;
    let outs: Vec<_> = (0..trials).into_par_iter()
        .map(|t| run_trial(&fx, 1, t, &names).unwrap())
        .collect();
    println!("creators {trials} trials took {:.1?}", t0.elapsed());
    for m in ["content", "popularity", "matrix_factorization", "social", "random", "ideal"] {
        let id = names.id(&format!("creator_entropy/{m}"));
        let mut first = Vec::new();
        let mut last = Vec::new();
        let mut win_means = vec![Vec::new(); 10];
        for o in &outs {
            let vals: Vec<(u32, f64)> = o.rows.iter().filter(|(n,_,_)| *n==id).map(|(_,t,v)| (*t,*v)).collect();
            first.push(vals.first().unwrap().1);
            last.push(vals.last().unwrap().1);
            for w in 0..10 {
                let lo = (w*50) as u32; let hi = lo+50;
                let vs: Vec<f64> = vals.iter().filter(|(t,_)| *t>=lo && *t<hi).map(|(_,v)|*v).collect();
                if !vs.is_empty() { win_means[w].push(vs.iter().sum::<f64>()/vs.len() as f64); }
            }
        }
        let f = first.iter().sum::<f64>()/first.len() as f64;
        let l = last.iter().sum::<f64>()/last.len() as f64;
        let windows: Vec<f64> = win_means.iter().map(|v| v.iter().sum::<f64>()/v.len().max(1) as f64).collect();
        let monotone = windows.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        println!("  {m:22} ACE t0={f:.4} t_end={l:.4} monotone_windows={monotone} {windows:.3?}");
    }
}
