use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use herald_core::config::{parse_config, ExperimentConfig};
use herald_core::runner::{patterns_table, run, sweep, sweep_csv};
use herald_core::verify::verify;
use herald_core::Error;

#[derive(Parser)]
#[command(name = "herald", version, about = "Exact simulation of PBS Bell-state heralding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its JSON report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the built-in verification suite.
    Verify,
    /// Re-run an experiment with one numeric parameter varied.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path into the config, e.g. source.lambda
        #[arg(long)]
        param: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        /// Write the JSON array of reports here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a flat CSV of accepted patterns.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Print the pattern to Bell-state table for a config.
    Patterns {
        #[arg(long)]
        config: PathBuf,
    },
}

enum Failure {
    Config(String),
    Verification,
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Config(e.to_string()),
            other => Failure::Internal(other.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, report } => {
            let cfg = load(&config)?;
            let result = run(&cfg)?;
            write(&report, &result.to_json())?;
            if result.table_mismatch {
                eprintln!("warning: heralded states disagree with the pattern table");
            }
        }
        Command::Verify => {
            let results = verify();
            for r in &results {
                println!("[{}] {:>2} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.id, r.name, r.detail);
            }
            if results.iter().any(|r| !r.passed) {
                return Err(Failure::Verification);
            }
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
            csv,
        } => {
            let cfg = load(&config)?;
            let reports = sweep(&cfg, &param, &values)?;
            let json = serde_json::to_string_pretty(&reports).map_err(|e| Failure::Internal(e.to_string()))?;
            match out {
                Some(path) => write(&path, &json)?,
                None => println!("{json}"),
            }
            if let Some(path) = csv {
                write(&path, &sweep_csv(&values, &reports))?;
            }
        }
        Command::Patterns { config } => {
            let cfg = load(&config)?;
            print!("{}", patterns_table(&run(&cfg)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
