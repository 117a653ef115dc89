use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pulsecomp::experiment::{run, ExperimentConfig, RunError};

/// Run a pulse-compression experiment described by a JSON config.
#[derive(Parser, Debug)]
#[command(name = "pulsecomp", version)]
struct Args {
    /// Path to the experiment config (UTF-8 JSON).
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(args: &Args) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| RunError::Io(format!("{}: {e}", args.config.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| RunError::Config { path: ".".into(), message: e.to_string() })?;
    if let Some(obj) = value.as_object_mut() {
        if let Some(seed) = args.seed {
            obj.insert("seed".into(), seed.into());
        }
        if let Some(workers) = args.workers {
            obj.insert("workers".into(), workers.into());
        }
        if let Some(out) = &args.out {
            obj.insert("output_dir".into(), out.display().to_string().into());
        }
    }
    ExperimentConfig::from_value(value)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match load(&args).and_then(|config| run(&config).map(|out| (config, out))) {
        Ok((config, out)) => {
            for f in out.files {
                println!("{}", config.output_dir.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pulsecomp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
