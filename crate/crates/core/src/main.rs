use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use ckm::experiments::{self, ConstructMethod, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "ckm",
    version,
    about = "Channel knowledge map construction and multi-UAV placement"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a building layout and one truth CKM per GBS.
    GenTruth,
    /// Draw measurement samples from truth CKMs.
    Sample {
        #[arg(long, num_args = 1.., required = true)]
        truth: Vec<PathBuf>,
        /// Draw this many random nodes instead of the column pattern.
        #[arg(long)]
        random: Option<usize>,
    },
    /// Sample truth CKMs, construct estimates and report MAE.
    Construct {
        #[arg(long, num_args = 1.., required = true)]
        truth: Vec<PathBuf>,
        #[arg(long)]
        random: Option<usize>,
        /// kriging-exponential, kriging-spherical, knn or los.
        #[arg(long)]
        method: Option<String>,
    },
    /// MAE between two grids, or the full sample-count sweep when no grids are given.
    EvalMae {
        #[arg(long, requires = "truth")]
        estimate: Option<PathBuf>,
        #[arg(long, requires = "estimate")]
        truth: Option<PathBuf>,
    },
    /// Place the UAVs by derivative-free optimization on the given CKMs.
    Optimize {
        #[arg(long, num_args = 1.., required = true)]
        ckm: Vec<PathBuf>,
        /// Truth CKMs used to score the final placement.
        #[arg(long, num_args = 1..)]
        truth: Vec<PathBuf>,
    },
    /// Exhaustive grid search over the CKM lattice.
    Exhaustive {
        #[arg(long, num_args = 1.., required = true)]
        ckm: Vec<PathBuf>,
    },
    /// Sum rate versus transmit power for every placement scheme.
    SweepPower,
    /// Render a grid file as a binary graymap.
    ExportHeatmap {
        #[arg(long)]
        grid: PathBuf,
        /// Lower gray-scale limit in dB; overrides the config.
        #[arg(long, allow_negative_numbers = true)]
        min_db: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        max_db: Option<f64>,
        /// Output file name inside the output directory.
        #[arg(long, default_value = "heatmap.pgm")]
        output: PathBuf,
    },
}

fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = load_config(&cli.common)?;
    let out: &Path = &cli.common.out_dir;
    match cli.command {
        Command::GenTruth => report(&experiments::cmd_gen_truth(&cfg, out)?),
        Command::Sample { truth, random } => report(&experiments::cmd_sample(&cfg, &truth, random, out)?),
        Command::Construct { truth, random, method } => {
            if let Some(m) = method {
                cfg.method = ConstructMethod::parse(&m, cfg.knn_k)?;
            }
            report(&experiments::cmd_construct(&cfg, &truth, random, out)?)
        }
        Command::EvalMae { estimate, truth } => match (estimate, truth) {
            (Some(e), Some(t)) => println!("{}", experiments::cmd_eval_mae_pair(&e, &t)?),
            _ => report(&experiments::cmd_eval_mae_sweep(&cfg, out)?),
        },
        Command::Optimize { ckm, truth } => {
            let (paths, trace) = experiments::cmd_optimize(&cfg, &ckm, &truth, out)?;
            eprintln!(
                "dfo: {} after {} iterations, best {:.4} in {:.3?}",
                trace.termination.as_str(),
                trace.iterations,
                trace.best_value,
                trace.wall_time
            );
            report(&paths)
        }
        Command::Exhaustive { ckm } => report(&experiments::cmd_exhaustive(&cfg, &ckm, out)?),
        Command::SweepPower => report(&experiments::cmd_sweep_power(&cfg, out)?),
        Command::ExportHeatmap {
            grid,
            min_db,
            max_db,
            output,
        } => {
            let range = (
                min_db.unwrap_or(cfg.heatmap_range.0),
                max_db.unwrap_or(cfg.heatmap_range.1),
            );
            let path = experiments::cmd_export_heatmap(&grid, range, &out.join(output))?;
            report(&[path])
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let result = run(cli);
    eprintln!("wall time: {:.3?}", start.elapsed());
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
