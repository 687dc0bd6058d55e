use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use diffagg::runner::{error_exit_code, run_file, RunOptions};

#[derive(Parser)]
#[command(
    name = "diffagg",
    version,
    about = "Diffusion-aggregation particle and grid solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write CSV artifacts plus a manifest.
    Run {
        file: PathBuf,
        /// Worker threads for particle replicas (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Output directory, overriding `output` in the file.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Seed, overriding `seed` in the file.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Run {
            file,
            workers,
            output,
            seed,
        } => {
            let options = RunOptions {
                output,
                seed,
                workers,
            };
            match run_file(&file, &options) {
                Ok(summary) => {
                    for f in &summary.files {
                        println!("{}", f.display());
                    }
                    if let Some(report) = &summary.blowup {
                        eprintln!(
                            "blow-up at t = {}: {} (a/(2b) = {})",
                            report.time, report.reason, report.threshold
                        );
                    }
                    ExitCode::from(summary.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(error_exit_code(&e) as u8)
                }
            }
        }
    }
}
