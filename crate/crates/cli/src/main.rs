//! `mwsn`: run single scenarios, seed/speed sweeps, or check a config file.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use mwsn_core::metrics::sweep::{summarize, SUMMARY_HEADER};
use mwsn_core::metrics::write_csv;
use mwsn_core::{Protocol, RunReport, ScenarioConfig, Simulation};

#[derive(Parser, Debug)]
#[command(name = "mwsn", version, about = "Mobile sensor network routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and emit its report.
    Run {
        /// Scenario file; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides `rng_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `protocol`.
        #[arg(long)]
        protocol: Option<Protocol>,
        /// Report destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Also write the line-oriented event log to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Repeat a scenario over seeds, protocols and maximum speeds.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of seeds per (protocol, speed) cell.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// First seed; cells use `first_seed .. first_seed + seeds`.
        #[arg(long, default_value_t = 1)]
        first_seed: u64,
        #[arg(long, value_delimiter = ',', default_value = "e2rp,aodv")]
        protocols: Vec<Protocol>,
        /// Maximum speeds in m/s; the config's value when omitted.
        #[arg(long, value_delimiter = ',')]
        speeds: Vec<f64>,
        /// Per-run CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write mean/std per (protocol, speed) to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Parse and check a scenario file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Failure with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Failure { code: 1, message: format!("{}: {err}", path.display()) }
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, Failure> {
    let Some(path) = path else {
        return Ok(ScenarioConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let cfg = ScenarioConfig::parse(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    cfg.validate().map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::io(path, e)),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(|e| Failure::io(Path::new("<stdout>"), e)),
    }
}

fn simulate(cfg: ScenarioConfig, trace: bool) -> Result<mwsn_core::engine::sim::RunOutput, Failure> {
    Simulation::new(cfg).map(|s| s.with_trace(trace).run()).map_err(|e| Failure::usage(e.to_string()))
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, seed, protocol, out, format, trace } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg.rng_seed = seed;
            }
            if let Some(protocol) = protocol {
                cfg.protocol = protocol;
            }
            let output = simulate(cfg, trace.is_some())?;
            if let (Some(path), Some(records)) = (trace.as_deref(), output.trace.as_ref()) {
                let mut text = String::new();
                for record in records {
                    text.push_str(&record.to_string());
                    text.push('\n');
                }
                fs::write(path, text).map_err(|e| Failure::io(path, e))?;
            }
            let text = match format {
                Format::Json => output.report.to_json() + "\n",
                Format::Csv => write_csv(std::slice::from_ref(&output.report)),
            };
            emit(out.as_deref(), &text)
        }
        Command::Sweep { config, seeds, first_seed, protocols, speeds, out, summary } => {
            let base = load_config(config.as_deref())?;
            if seeds == 0 {
                return Err(Failure::usage("--seeds must be at least 1"));
            }
            if protocols.is_empty() {
                return Err(Failure::usage("--protocols must name at least one protocol"));
            }
            let speeds = if speeds.is_empty() { vec![base.speed_max] } else { speeds };
            let mut cells = Vec::new();
            for &protocol in &protocols {
                for &speed in &speeds {
                    for seed in first_seed..first_seed + seeds {
                        let mut cfg = base.clone();
                        cfg.protocol = protocol;
                        cfg.speed_max = speed;
                        cfg.rng_seed = seed;
                        cfg.validate().map_err(|e| Failure::usage(format!("speed {speed}: {e}")))?;
                        cells.push(cfg);
                    }
                }
            }
            let mut reports: Vec<RunReport> = cells
                .into_par_iter()
                .map(|cfg| simulate(cfg, false).map(|o| o.report))
                .collect::<Result<_, _>>()?;
            reports.sort_by(|a, b| {
                (a.protocol, a.speed_max, a.seed)
                    .partial_cmp(&(b.protocol, b.speed_max, b.seed))
                    .expect("speeds are finite")
            });
            emit(out.as_deref(), &write_csv(&reports))?;
            if let Some(path) = summary {
                let mut text = String::from(SUMMARY_HEADER);
                text.push('\n');
                for row in summarize(&reports) {
                    text.push_str(&row.csv_row());
                    text.push('\n');
                }
                fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
            }
            Ok(())
        }
        Command::Validate { config } => {
            load_config(Some(&config))?;
            eprintln!("{}: ok", config.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("mwsn: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use mwsn_core::metrics::CSV_HEADER;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn csv_header_is_the_documented_one() {
        assert!(write_csv(&[]).starts_with(CSV_HEADER));
    }
}
