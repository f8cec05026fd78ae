use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use raman_sdk::cli;
use raman_sdk::config::RunConfig;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "RAMAN_SDK_OUT";

#[derive(Parser, Debug)]
#[command(name = "raman-sdk", version, about = "Simulate and optimize Raman spin-dependent kicks")]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,

    /// Output directory [env: RAMAN_SDK_OUT, default: out].
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Dotted-path override, e.g. `trap.phi_rf="0.17 turn"`. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Propagate one kick and write populations and a summary.
    Simulate,
    /// Infidelity over RF frequency and phase.
    Landscape,
    /// Robustness against a relative parameter error.
    Sweep,
    /// Nelder-Mead optimization of the drive.
    Optimize,
    /// Stability and validity diagnostics.
    Check,
}

fn run(args: &Args) -> raman_sdk::Result<()> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| raman_sdk::Error::Config("--config <path> is required".into()))?;
    let cfg = RunConfig::load(path, &args.overrides)?;
    let out = args
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    match args.command {
        Command::Simulate => cli::cmd_simulate(&cfg, &out).map(drop),
        Command::Landscape => cli::cmd_landscape(&cfg, &out).map(drop),
        Command::Sweep => cli::cmd_sweep(&cfg, &out).map(drop),
        Command::Optimize => cli::cmd_optimize(&cfg, &out).map(drop),
        Command::Check => cli::cmd_check(&cfg, &out).map(drop),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::error!("cannot size thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let start = std::time::Instant::now();
    match run(&args) {
        Ok(()) => {
            log::info!("{:?} done in {:.2?}", args.command, start.elapsed());
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
