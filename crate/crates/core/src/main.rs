use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dmcmc::harness::{self, ExperimentConfig, RunManifest};

#[derive(Parser)]
#[command(name = "dmcmc", version, about = "Denoising MCMC experiments on Gaussian-mixture targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (a run manifest also works).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// DLG against its baselines: coverage, class fit, autocorrelation.
    Mixing(Common),
    /// Error and FGD against NFE for every integrator and starting level.
    BenchmarkIntegrators(Common),
    /// Sweep over step size, n_den/n and NFE.
    Ablation(Common),
    /// Train the noise-level classifier and save it.
    TrainClassifier(Common),
    /// Check a config and list every problem found.
    ValidateConfig(Common),
}

fn run(cli: Cli) -> dmcmc::Result<()> {
    let (common, cmd): (&Common, fn(&ExperimentConfig) -> dmcmc::Result<RunManifest>) = match &cli.command {
        Command::Mixing(c) => (c, harness::cmd_mixing),
        Command::BenchmarkIntegrators(c) => (c, harness::cmd_benchmark_integrators),
        Command::Ablation(c) => (c, harness::cmd_ablation),
        Command::TrainClassifier(c) => (c, harness::cmd_train_classifier),
        Command::ValidateConfig(c) => {
            let cfg = ExperimentConfig::load(&c.config)?;
            let cfg = harness::resolve(cfg, c.seed, c.out.clone())?;
            let mix = cfg.mixture()?;
            println!(
                "config ok: {} modes in R^{}, {} noise levels, seed {}",
                mix.n_modes(),
                mix.dim(),
                cfg.schedule.m,
                cfg.seed
            );
            return Ok(());
        }
    };
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| dmcmc::Error::Internal(format!("thread pool: {e}")))?;
    }
    let cfg = harness::resolve(ExperimentConfig::load(&common.config)?, common.seed, common.out.clone())?;
    let manifest = cmd(&cfg)?;
    let dir = cfg.output_dir.as_deref().map(|p| p.display().to_string()).unwrap_or_default();
    println!("{}: wrote {} files to {dir}", manifest.command, manifest.outputs.len() + 1);
    if let Some(runs) = manifest.diagnostics.get("runs") {
        println!("{}", serde_json::to_string_pretty(runs).unwrap_or_default());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
