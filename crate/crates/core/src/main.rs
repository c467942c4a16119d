use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Monte Carlo experiments for robust multiuser MIMO transceiver design.
#[derive(Debug, Parser)]
#[command(name = "mimo-sim", version)]
struct Args {
    /// ber-vs-snr, mse-vs-w or convergence
    experiment: String,
    /// Key-value (or JSON) configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path [default: <experiment>.csv]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "MIMO_SIM_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", args.experiment)));
    if let Some(path) = &args.config {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(config) = robust_mimo::parse_config(&text) {
                for w in config.warnings() {
                    eprintln!("warning: {w}");
                }
            }
        }
    }
    match robust_mimo::run(
        args.config.as_deref(),
        &args.experiment,
        &out,
        args.seed,
        args.threads,
        |line| println!("{line}"),
    ) {
        Ok(records) => {
            eprintln!("wrote {} rows to {}", records.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
