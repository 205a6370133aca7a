//! `binpick`: synthesize bin scenes, train models, detect and evaluate.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Point pair feature detection for random bin picking.
///
/// Every subcommand reads the optional `--config` file first; flags given
/// on the command line win over config values.
#[derive(Debug, Parser)]
#[command(name = "binpick", version)]
pub struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic scenes, one directory per (bin, sigma, seed).
    Synth(SynthArgs),
    /// Build a model file from a mesh.
    Train(TrainArgs),
    /// Detect objects in scene directories.
    Detect(DetectArgs),
    /// Score detection reports against ground truth; writes CSV and SVG.
    Eval(EvalArgs),
    /// Train, then synthesize, detect and evaluate over sigma x seed.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SceneArgs {
    /// Mesh file or `builtin:<name>` (hook, bracket, cube, sphere).
    #[arg(long)]
    pub mesh: Option<String>,
    /// Seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seed: Vec<u64>,
    /// Depth noise in percent of the object diameter, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,
    /// Scenes per (sigma, seed).
    #[arg(long)]
    pub bins: Option<usize>,
    /// Drop layers per bin.
    #[arg(long)]
    pub layers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DetectorArgs {
    /// Fraction of region points used as reference points.
    #[arg(long)]
    pub ref_fraction: Option<f64>,
    /// Number of highest-point hypotheses.
    #[arg(long)]
    pub hypotheses: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Mesh file or `builtin:<name>`.
    #[arg(long)]
    pub mesh: Option<String>,
    /// Model file to write [default: <out>/model.ppfm].
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Scene directories written by `synth`.
    #[arg(required = true)]
    pub scenes: Vec<PathBuf>,
    /// Model file [default: <out>/model.ppfm].
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Write 0 for every per-hypothesis time so reports are reproducible.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Detection reports (files or directories of `.json` files)
    /// [default: <out>/detections].
    pub reports: Vec<PathBuf>,
    /// Directory holding the scene directories [default: <out>/scenes].
    #[arg(long)]
    pub scenes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

fn thread_pool() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(commands::THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("{} must be a positive integer, got {v:?}", commands::THREADS_ENV))?;
        if n == 0 {
            anyhow::bail!("{} must be a positive integer", commands::THREADS_ENV);
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = std::panic::catch_unwind(|| thread_pool().and_then(|()| commands::run(&cli)));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(_) => {
            eprintln!("internal error: invariant violated");
            ExitCode::from(2)
        }
    }
}
