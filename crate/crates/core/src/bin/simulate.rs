use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lambda_pbg::config::{parse_config, Format, Scenario};
use lambda_pbg::scenario::run_scenario;
use lambda_pbg::Error;

/// Fluorescence and trapping of a driven Λ-atom at a photonic band edge.
///
/// Exit status: 0 on success, 2 on a configuration error, 3 on a numerical
/// or accuracy failure, 1 otherwise.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    /// nojump, ensemble, montecarlo, scan, oracle or branching
    scenario: Scenario,
    /// Configuration file in the `key = value` grammar
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the config
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or jsonl, overriding the config
    #[arg(long)]
    format: Option<Format>,
}

fn run(cli: Cli) -> Result<(), Error> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| Error::Io(format!("{}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text)?;
    cfg.scenario = cli.scenario;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    if let Some(out) = cli.out {
        cfg.output = Some(out);
    }
    let bytes = run_scenario(&cfg)?;
    match &cfg.output {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => io::stdout().lock().write_all(&bytes).map_err(Error::from),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let scenario = cli.scenario;
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("simulate {scenario}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
