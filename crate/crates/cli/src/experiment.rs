//! Experiment orchestration: a bounded worker pool dispatches independent
//! trials (or cascade chunks), results are collected in trial order, and the
//! bundle is written once everything has finished. Trial-level random
//! streams make the output independent of the worker count.

use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;

use simrec_core::diffusion::{
    build_graph, run_one_cascade, structural_virality, summarize_batch, CascadeWorkspace,
    DiffusionNetwork,
};
use simrec_core::numerics::rng::RngStream;

use crate::config::{CascadeExperiment, ExperimentKind, FeedbackExperiment, ResolvedExperiment};
use crate::output::{write_feedback_bundle, write_goel_bundle, CellSummary};
use crate::trial::{run_trial, NameTable, TrialOutput};

// Stream salts for cascade experiments: one family of streams per graph,
// one per cell for the cascades themselves.
const SALT_GRAPH: u64 = 0x67;
const SALT_CASCADE: u64 = 0x63;

pub fn graph_stream(seed: u64, alpha_idx: usize, graph_idx: usize) -> RngStream {
    RngStream::new(seed, 0)
        .derive(SALT_GRAPH)
        .derive(alpha_idx as u64)
        .derive(graph_idx as u64)
}

pub fn cascade_stream(seed: u64, alpha_idx: usize, r_idx: usize) -> RngStream {
    RngStream::new(seed, 0)
        .derive(SALT_CASCADE)
        .derive(alpha_idx as u64)
        .derive(r_idx as u64)
}

/// Run an experiment on `workers` threads and write its bundle to `out`.
pub fn run_experiment(
    resolved: &ResolvedExperiment,
    workers: usize,
    out: &Path,
) -> Result<PathBuf> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .context("building worker pool")?;
    match &resolved.kind {
        ExperimentKind::FeedbackLoop(fx) => {
            let outputs = pool.install(|| run_feedback_trials(fx, resolved))?;
            let names = NameTable::build(fx);
            write_feedback_bundle(out, resolved, &outputs, &names)
        }
        ExperimentKind::Cascades(cx) => {
            let cells = pool.install(|| run_cascade_cells(cx, resolved.base_seed));
            write_goel_bundle(out, resolved, &cells?)
        }
    }
}

fn run_feedback_trials(
    fx: &FeedbackExperiment,
    resolved: &ResolvedExperiment,
) -> Result<Vec<TrialOutput>> {
    let names = NameTable::build(fx);
    let results: Vec<Result<TrialOutput>> = (0..resolved.trials)
        .into_par_iter()
        .map(|trial| {
            std::panic::catch_unwind(AssertUnwindSafe(|| {
                run_trial(fx, resolved.base_seed, trial, &names)
            }))
            .unwrap_or_else(|panic| {
                let msg = panic
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| panic.downcast_ref::<&str>().copied())
                    .unwrap_or("panic");
                Err(anyhow!("trial panicked: {msg}"))
            })
            .map_err(|e| {
                anyhow!(
                    "trial {trial} failed (reproduce with base_seed={} trial={trial}): {e}",
                    resolved.base_seed
                )
            })
        })
        .collect();
    results.into_iter().collect()
}

/// Run every (alpha, r) cell of the grid. Graphs are generated once per
/// alpha and shared (read-only) across the r values and cascade workers.
pub fn run_cascade_cells(cx: &CascadeExperiment, base_seed: u64) -> Result<Vec<CellSummary>> {
    let mut cells = Vec::new();
    for (alpha_idx, &alpha) in cx.alphas.iter().enumerate() {
        let graphs: Vec<DiffusionNetwork> = (0..cx.graphs_per_alpha)
            .into_par_iter()
            .map(|g| {
                build_graph(cx.nodes, alpha, graph_stream(base_seed, alpha_idx, g))
                    .map_err(|e| anyhow!("graph (alpha={alpha}, idx={g}): {e}"))
            })
            .collect::<Result<_>>()?;
        log::info!(
            "alpha={alpha}: {} graphs of {} nodes, mean degrees {:?}",
            graphs.len(),
            cx.nodes,
            graphs.iter().map(|g| g.mean_degree).collect::<Vec<_>>()
        );
        for (r_idx, &r) in cx.rs.iter().enumerate() {
            let stats = run_cell(cx, &graphs, r, cascade_stream(base_seed, alpha_idx, r_idx))?;
            log::info!(
                "alpha={alpha} r={r}: P(popular)={:.3e} ({} of {}), virality {:.3}±{:.3}, corr {:.4}",
                stats.p_popular,
                stats.popular_count,
                stats.trials,
                stats.mean_virality,
                stats.sd_virality,
                stats.size_virality_correlation
            );
            cells.push(CellSummary {
                alpha,
                r,
                mean_degrees: graphs.iter().map(|g| g.mean_degree).collect(),
                stats,
            });
        }
    }
    Ok(cells)
}

/// One cell: `cascades_per_cell` trials, chunked for parallelism, merged in
/// trial order so the summary is schedule-independent.
fn run_cell(
    cx: &CascadeExperiment,
    graphs: &[DiffusionNetwork],
    r: f64,
    stream: RngStream,
) -> Result<simrec_core::diffusion::CascadeStats> {
    let betas: Vec<f64> = graphs
        .iter()
        .map(|g| simrec_core::diffusion::beta_for_r(g, r).map_err(|e| anyhow!("{e}")))
        .collect::<Result<_>>()?;
    const CHUNK: usize = 8192;
    let trials = cx.cascades_per_cell;
    let n_chunks = trials.div_ceil(CHUNK);
    let chunks: Vec<Vec<(usize, usize, f64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(trials);
            let mut workspaces: Vec<CascadeWorkspace> = graphs
                .iter()
                .map(|g| CascadeWorkspace::new(g.num_nodes()))
                .collect();
            let mut popular = Vec::new();
            for trial in start..end {
                let which = trial % graphs.len();
                let tree = run_one_cascade(
                    &graphs[which],
                    betas[which],
                    trial,
                    stream,
                    &mut workspaces[which],
                );
                if tree.size() >= cx.popularity_threshold {
                    let v = structural_virality(&tree).expect("popular cascade has >= 2 nodes");
                    popular.push((trial, tree.size(), v));
                }
            }
            popular
        })
        .collect();
    let popular: Vec<(usize, usize, f64)> = chunks.into_iter().flatten().collect();
    Ok(summarize_batch(trials, cx.popularity_threshold, popular))
}
