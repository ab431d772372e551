use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dqlab_harness::config::LoadedConfig;
use dqlab_harness::{list_experiments, run, RunOptions};

#[derive(Parser)]
#[command(name = "dqlab", version, about = "Run dressed-qubit experiments from a config file")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in a TOML (or .json) config.
    Run {
        config: PathBuf,
        /// Output directory (default: output.directory or out/<experiment>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweeps.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Overrides experiment.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the experiment registry.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run {
            config,
            out,
            workers,
            seed,
        } => {
            let opts = RunOptions { out, workers, seed };
            match LoadedConfig::from_path(&config).and_then(|c| run(&c, &opts)) {
                Ok(res) => {
                    for line in &res.outcome.summary {
                        println!("{line}");
                    }
                    println!("wrote {} files to {}", res.files.len(), res.dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
