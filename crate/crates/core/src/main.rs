use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use srpcr::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "srpcr", version, about = "Recycled conjugate residual solves for sequences of symmetric systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured sequence with PMINRES and the recycled solver.
    Run {
        config: PathBuf,
        /// Override output.dir (also SRPCR_OUTPUT_DIR).
        #[arg(long, env = "SRPCR_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Write only the Q and G stability maps.
    Diagnose {
        config: PathBuf,
        #[arg(long, env = "SRPCR_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
    },
    /// Write the right-hand side sequence.
    SequenceDump {
        config: PathBuf,
        #[arg(long, env = "SRPCR_OUTPUT_DIR")]
        output_dir: Option<PathBuf>,
    },
}

fn load(path: &PathBuf, output_dir: Option<PathBuf>) -> srpcr::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = output_dir {
        cfg.output.dir = dir;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output_dir } => load(&config, output_dir).and_then(|cfg| {
            let summary = harness::run_experiment(&cfg)?;
            print!("{}", summary.table());
            println!("artifacts in {}", cfg.output.dir.display());
            Ok(summary.all_converged())
        }),
        Command::Diagnose { config, output_dir } => load(&config, output_dir).and_then(|cfg| {
            harness::run_diagnostics(&cfg)?;
            println!("maps in {}", cfg.output.dir.display());
            Ok(true)
        }),
        Command::SequenceDump { config, output_dir } => load(&config, output_dir).and_then(|cfg| {
            let path = harness::dump_sequence(&cfg)?;
            println!("{}", path.display());
            Ok(true)
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error[not-converged]: at least one solve missed the tolerance");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.tag());
            ExitCode::from(2)
        }
    }
}
