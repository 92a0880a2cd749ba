use clap::Parser;
use ctqrw_cli::{run_experiment, ConfigError, ExperimentConfig, RunError};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs a configured CTQRW experiment and writes CSV plus a JSON manifest.
#[derive(Debug, Parser)]
#[command(name = "ctqrw", version)]
struct Args {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Replaces `run.seed` from the config.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads for realizations and walkers.
    #[arg(long, env = "CTQRW_THREADS")]
    threads: Option<usize>,
}

fn run(args: &Args) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| ConfigError::new("--config", e))?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(seed) = args.seed_override {
        cfg.run.seed = seed;
    }
    let threads = match args.threads {
        Some(0) => return Err(ConfigError::new("--threads", "must be at least 1").into()),
        Some(n) => {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| ConfigError::new("--threads", e))?;
            n
        }
        None => rayon::current_num_threads(),
    };
    let report = run_experiment(&cfg, &args.out_dir, threads)?;
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ctqrw: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
