use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use simrec::config::{self, ExperimentFile, Preset};
use simrec::experiment::run_experiment;
use simrec_core::diffusion::build_graph;
use simrec_core::numerics::rng::RngStream;

#[derive(Parser)]
#[command(
    name = "simrec",
    about = "Agent-based simulation of recommender feedback loops and network diffusion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a named experiment preset.
    Replicate {
        /// chaney-single | chaney-repeated | goel | creators | custom
        preset: String,
        /// JSON object merged over the preset defaults (same schema as the
        /// config file, e.g. '{"sim":{"timesteps":50}}').
        #[arg(long = "override", value_name = "JSON")]
        override_json: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Graph utilities.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
}

#[derive(Subcommand)]
enum GraphCommand {
    /// Generate a scale-free broadcast graph and save it as an edge list.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Number of trials (overrides config/preset default).
    #[arg(long)]
    trials: Option<usize>,
    /// Base seed; trial t uses stream (seed, t).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: $SIMREC_WORKERS, then all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for the result bundle.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_workers() -> usize {
    std::env::var("SIMREC_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(usize::from)
                .unwrap_or(1)
        })
}

fn execute(file: ExperimentFile, common: CommonArgs) -> Result<()> {
    let mut file = file;
    if let Some(t) = common.trials {
        file.trials = Some(t);
    }
    if let Some(s) = common.seed {
        file.base_seed = Some(s);
    }
    let workers = common
        .workers
        .or(file.workers)
        .unwrap_or_else(default_workers);
    let out = common.out.or_else(|| file.out.clone()).unwrap_or_else(|| {
        let name = file
            .preset
            .map(|p| {
                serde_json::to_value(p)
                    .expect("preset serializes")
                    .as_str()
                    .expect("preset is a string")
                    .to_string()
            })
            .unwrap_or_else(|| "experiment".into());
        PathBuf::from("results").join(name)
    });
    let resolved = config::resolve(&file)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&resolved).context("echoing resolved config")?
    );
    let written = run_experiment(&resolved, workers, &out)?;
    println!("bundle written to {}", written.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run {
            config: path,
            common,
        } => {
            let file = config::parse_config(&path)?;
            execute(file, common)
        }
        Command::Replicate {
            preset,
            override_json,
            common,
        } => {
            let mut file = ExperimentFile {
                preset: Some(Preset::parse(&preset)?),
                ..Default::default()
            };
            if let Some(json) = override_json {
                file = config::merge_override(&file, &json)?;
            }
            execute(file, common)
        }
        Command::Graph { command } => match command {
            GraphCommand::Gen {
                n,
                alpha,
                seed,
                out,
            } => {
                let graph = build_graph(n, alpha, RngStream::new(seed, 0))
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                graph
                    .save_edge_list(&out)
                    .with_context(|| format!("writing {}", out.display()))?;
                println!(
                    "graph: {} nodes, {} edges, mean degree {:.4} -> {}",
                    graph.num_nodes(),
                    graph.num_edges(),
                    graph.mean_degree,
                    out.display()
                );
                Ok(())
            }
        },
    }
}
