use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chsh_mdi_qkd::cli::{parse_config, run_diagnostics, run_scan, CliError, RunConfig};

/// Decoy-state simulator and certification engine for CHSH-witnessed
/// measurement-device-independent QKD.
#[derive(Parser)]
#[command(name = "chsh-mdi-qkd", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a distance scan and write the key-rate CSV.
    Scan {
        /// Path to a key=value run configuration file.
        #[arg(long)]
        config: PathBuf,
    },
    /// Print bound diagnostics (LP statuses, oracle comparison, model
    /// residuals) at a single distance.
    Diag {
        /// Path to a key=value run configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Distance in km at which to evaluate.
        #[arg(long)]
        distance: f64,
    },
}

fn load_config(path: &PathBuf) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read `{}`: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("CHSH_MDI_QKD_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
                return;
            }
        }
        eprintln!("warning: ignoring CHSH_MDI_QKD_THREADS={value} (expected a positive integer)");
    }
}

fn main() -> ExitCode {
    init_thread_pool();
    let args = Args::parse();
    let (config, action): (_, Box<dyn FnOnce(&RunConfig) -> Result<(), CliError>>) =
        match args.command {
            Command::Scan { config } => match load_config(&config) {
                Ok(c) => (c, Box::new(|c: &RunConfig| run_scan(c, &mut std::io::stdout()))),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            },
            Command::Diag { config, distance } => match load_config(&config) {
                Ok(c) => (
                    c,
                    Box::new(move |c: &RunConfig| {
                        run_diagnostics(c, distance, &mut std::io::stdout())
                    }),
                ),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            },
        };
    match action(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (CliError::Parse { .. } | CliError::MissingKey(_) | CliError::Invalid(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
