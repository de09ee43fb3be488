use simrec::config::{parse_config_str, resolve, ExperimentKind};
use simrec_core::engine::{dataset_stream, generate_dataset, run_stream, Simulation};
use simrec_core::models::ModelKind;
use std::time::Instant;

fn main() {
    let file = parse_config_str(r#"{"preset": "creators"}"#).unwrap();
    let resolved = resolve(&file).unwrap();
    let fx = match &resolved.kind { ExperimentKind::FeedbackLoop(f) => f.clone(), _ => panic!() };
    let dataset = generate_dataset(&fx.sim, dataset_stream(1, 0)).unwrap();
    for kind in ModelKind::ALL {
        let t0 = Instant::now();
        let mut cfg = fx.sim.clone();
        cfg.model = kind;
        let mut sim = Simulation::with_dataset(cfg, dataset.clone(), run_stream(1, 0, kind)).unwrap();
        sim.run_to_completion().unwrap();
        let outcome = sim.into_outcome();
        println!("{:22} {:?}  items={} interactions={}", kind.name(), t0.elapsed(), outcome.items.len(), outcome.interaction_log.len());
    }
}
