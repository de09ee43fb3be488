use simrec::config::{parse_config_str, resolve, ExperimentKind};
use simrec::trial::{run_trial, NameTable};
use std::time::Instant;

fn series_for<'a>(rows: &'a [(u16, u32, f64)], id: u16) -> Vec<(u32, f64)> {
    rows.iter().filter(|(n, _, _)| *n == id).map(|(_, t, v)| (*t, *v)).collect()
}

fn main() {
    // Chaney criteria at seed 0, 100 trials each.
    let mut final20: std::collections::BTreeMap<String, [f64; 2]> = Default::default();
    for (pi, preset) in ["chaney-single", "chaney-repeated"].iter().enumerate() {
        let t0 = Instant::now();
        let file = parse_config_str(&format!(r#"{{"preset": "{preset}"}}"#)).unwrap();
        let resolved = resolve(&file).unwrap();
        let fx = match &resolved.kind { ExperimentKind::FeedbackLoop(f) => f.clone(), _ => panic!() };
        let names = NameTable::build(&fx);
        let mut rand_all = 0.0;
        for trial in 0..100 {
            let out = run_trial(&fx, 0, trial, &names).unwrap();
            for m in ["content", "popularity", "matrix_factorization", "social", "random"] {
                let id = names.id(&format!("relative_homogenization/{m}"));
                let vals = series_for(&out.rows, id);
                let tmax = vals.iter().map(|(t, _)| *t).max().unwrap();
                let f: Vec<f64> = vals.iter().filter(|(t, _)| *t > tmax - 20).map(|(_, v)| *v).collect();
                final20.entry(m.to_string()).or_insert([0.0; 2])[pi] += f.iter().sum::<f64>() / f.len() as f64 / 100.0;
                if m == "random" {
                    rand_all += vals.iter().map(|(_, v)| *v).sum::<f64>() / vals.len() as f64 / 100.0;
                }
            }
        }
        println!("{preset}: random全steps mean = {rand_all:+.5}  [{:.0?}]", t0.elapsed());
    }
    for (m, [s, r]) in &final20 {
        println!("criterion5 {m:22} single={s:+.4} repeated={r:+.4} ordered={}", r > s);
    }

    // Creators criterion at seed 0, 20 trials.
    let t0 = Instant::now();
    let file = parse_config_str(r#"{"preset": "creators"}"#).unwrap();
    let resolved = resolve(&file).unwrap();
    let fx = match &resolved.kind { ExperimentKind::FeedbackLoop(f) => f.clone(), _ => panic!() };
    let names = NameTable::build(&fx);
    let trials = 20;
    let outs: Vec<_> = (0..trials).map(|t| run_trial(&fx, 0, t, &names).unwrap()).collect();
    println!("creators {trials} trials [{:.0?}]", t0.elapsed());
    for m in ["content", "popularity", "matrix_factorization", "social", "random", "ideal"] {
        let id = names.id(&format!("creator_entropy/{m}"));
        let mut first = 0.0;
        let mut last = 0.0;
        let mut windows = vec![0.0; 10];
        for o in &outs {
            let vals = series_for(&o.rows, id);
            first += vals.first().unwrap().1 / trials as f64;
            last += vals.last().unwrap().1 / trials as f64;
            for w in 0..10 {
                let lo = (w * 50) as u32;
                let vs: Vec<f64> = vals.iter().filter(|(t, _)| *t >= lo && *t < lo + 50).map(|(_, v)| *v).collect();
                windows[w] += vs.iter().sum::<f64>() / vs.len() as f64 / trials as f64;
            }
        }
        let mono = windows.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        println!("criterion7 {m:22} t0={first:.4} tEnd={last:.4} decline={} windows_mono={mono} {windows:.4?}", last < first);
    }
}
