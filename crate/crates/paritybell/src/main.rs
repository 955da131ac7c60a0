use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use paritybell::calibration::{calibrate_targets, parse_targets};
use paritybell::{run_config, Error, Experiment};

/// Simulator of heralded parity measurements on a two-nuclear-spin register.
#[derive(Parser)]
#[command(name = "paritybell", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run { config: PathBuf },
    /// List the experiments
    List,
    /// Fit the noise and readout models to a targets file
    Calibrate {
        #[arg(long)]
        targets: PathBuf,
        /// Write the calibration here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
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

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config } => {
            let run = run_config(&config)?;
            let width = run.report.values.iter().map(|v| v.name.len()).max().unwrap_or(0);
            println!("{} ({}, {})", run.config.experiment.name(), run.config.bell, run.config.mode_name());
            for v in &run.report.values {
                if v.stderr > 0.0 {
                    println!("  {:width$}  {:.6} ± {:.6}", v.name, v.value, v.stderr);
                } else {
                    println!("  {:width$}  {:.6}", v.name, v.value);
                }
            }
            for f in &run.files {
                println!("wrote {}", f.display());
            }
        }
        Command::List => {
            for e in Experiment::ALL {
                println!("{:18} {}", e.name(), e.description());
            }
        }
        Command::Calibrate { targets, out } => {
            let text = std::fs::read_to_string(&targets).map_err(|e| Error::io(&targets, e))?;
            let file = calibrate_targets(&parse_targets(&text)?)?;
            let toml = file.to_toml();
            match out {
                Some(path) => std::fs::write(&path, toml).map_err(|e| Error::io(&path, e))?,
                None => print!("{toml}"),
            }
        }
    }
    Ok(())
}
