use clap::{Parser, Subcommand};
use nsch_cli::config::{parse_config, RunMode};
use nsch_cli::driver::{
    execute_convergence, execute_scenario, execute_single_run, execute_sweep, exit_code,
    DriverError,
};
use nsch_core::{classify_mean, StabilityClass};
use std::path::PathBuf;
use std::process::ExitCode;

/// 1-D compressible Navier-Stokes-Cahn-Hilliard simulator.
#[derive(Parser)]
#[command(name = "nsch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the simulation (or sweep/scenario) described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Execute a named canned experiment and print its assertion summary.
    Scenario {
        /// stable_decay, spinodal, lambda_sweep, convergence, mixed_stability
        name: String,
        /// directory for the summary file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fan a config out over a parameter list (mode.sweep_key/sweep_values).
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the mesh-refinement ladder and print observed orders.
    Convergence,
    /// Classify a mean concentration as Stable/Unstable/Boundary.
    Classify { chi_bar: f64 },
}

fn load_config(path: &PathBuf) -> Result<nsch_cli::config::RunConfig, DriverError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| DriverError::Config(format!("{}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn dispatch(cli: Cli) -> Result<(), DriverError> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            match &cfg.mode {
                RunMode::Run => {
                    let dir = execute_single_run(&cfg)?;
                    println!("run complete: {}", dir.display());
                }
                RunMode::Scenario(name) => {
                    let name = name.clone();
                    execute_scenario(&name, Some(PathBuf::from(&cfg.directory).as_path()))?;
                }
                RunMode::Sweep { .. } => {
                    let dirs = execute_sweep(&cfg)?;
                    println!("sweep complete: {} runs", dirs.len());
                }
                RunMode::Convergence => {
                    execute_convergence()?;
                }
            }
            Ok(())
        }
        Command::Scenario { name, out } => {
            execute_scenario(&name, out.as_deref())?;
            Ok(())
        }
        Command::Sweep { config } => {
            let cfg = load_config(&config)?;
            let dirs = execute_sweep(&cfg)?;
            println!("sweep complete: {} runs", dirs.len());
            Ok(())
        }
        Command::Convergence => {
            execute_convergence()?;
            Ok(())
        }
        Command::Classify { chi_bar } => {
            let label = match classify_mean(chi_bar, nsch_core::potential::CLASSIFY_TOL) {
                StabilityClass::Stable => "Stable",
                StabilityClass::Unstable => "Unstable",
                StabilityClass::Boundary => "Boundary",
            };
            println!("{label}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
