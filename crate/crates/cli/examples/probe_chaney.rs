use simrec::config::{parse_config_str, resolve, ExperimentKind};
use simrec::trial::{run_trial, NameTable};
use std::time::Instant;

fn main() {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let threads: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(8);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().unwrap();
    let models = ["content", "popularity", "matrix_factorization", "social", "random", "ideal"];
    for preset in ["chaney-single", "chaney-repeated"] {
        let t0 = Instant::now();
        let file = parse_config_str(&format!(r#"{{"preset": "{preset}"}}"#)).unwrap();
        let resolved = resolve(&file).unwrap();
        let fx = match &resolved.kind { ExperimentKind::FeedbackLoop(f) => f.clone(), _ => panic!() };
        let names = NameTable::build(&fx);
        use rayon::prelude::*;
        let outs: Vec<_> = (0..trials).into_par_iter()
            .map(|t| run_trial(&fx, 1, t, &names).unwrap())
            .collect();
        println!("== {preset} ({trials} trials) [{:.1?}]", t0.elapsed());
        for m in models {
            let id = names.id(&format!("relative_homogenization/{m}"));
            // mean over final 20 steps, and mean over all steps, across trials
            let mut final20 = Vec::new();
            let mut all = Vec::new();
            for o in &outs {
                let vals: Vec<(u32, f64)> = o.rows.iter().filter(|(n,_,_)| *n==id).map(|(_,t,v)| (*t,*v)).collect();
                let tmax = vals.iter().map(|(t,_)| *t).max().unwrap();
                let f: Vec<f64> = vals.iter().filter(|(t,_)| *t > tmax.saturating_sub(20)).map(|(_,v)| *v).collect();
                final20.push(f.iter().sum::<f64>() / f.len() as f64);
                all.push(vals.iter().map(|(_,v)| *v).sum::<f64>() / vals.len() as f64);
            }
            let mf = final20.iter().sum::<f64>()/trials as f64;
            let ma = all.iter().sum::<f64>()/trials as f64;
            println!("  {m:22} rel_homog final20: {mf:+.4}   all steps: {ma:+.4}");
        }
    }
}
