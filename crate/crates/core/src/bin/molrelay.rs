use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use molrelay::experiment::{self, emit_csv, load_config, parse_detectors, run_experiment, to_config_string};

#[derive(Parser)]
#[command(name = "molrelay", version, about = "Bidirectional molecular relaying simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file and write CSV.
    Simulate {
        config: PathBuf,
        /// Root random seed (overrides system.seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path (overrides experiment.output; stdout if neither is set).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated detectors: fixed, dfe_threshold, proposed_ml.
        #[arg(long)]
        detectors: Option<String>,
        /// Number of sweep points (overrides sweep.points).
        #[arg(long)]
        points: Option<usize>,
        /// Symbols per point (overrides system.symbols).
        #[arg(long)]
        symbols: Option<usize>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Validate a configuration file and print it with every default filled in.
    Check { config: PathBuf },
}

fn run(cli: Cli) -> molrelay::Result<()> {
    match cli.command {
        Command::Check { config } => {
            print!("{}", to_config_string(&load_config(&config)?));
            Ok(())
        }
        Command::Simulate {
            config,
            seed,
            out,
            detectors,
            points,
            symbols,
            threads,
        } => {
            let mut spec = load_config(&config)?;
            if let Some(seed) = seed {
                spec.system.seed = seed;
            }
            if let Some(list) = detectors {
                spec.detectors = parse_detectors(&list).map_err(|reason| molrelay::Error::InvalidParameter {
                    field: "--detectors",
                    reason,
                })?;
            }
            if let Some(n) = points {
                spec.sweep.points = n;
            }
            if let Some(n) = symbols {
                spec.system.num_symbols = n;
            }
            spec.validate()?;
            let output = run_experiment(&spec, threads)?;
            match out.or(spec.output.clone()) {
                Some(path) => emit_csv(&output, &path),
                None => {
                    let mut stdout = std::io::stdout().lock();
                    experiment::write_csv(&output, &mut stdout)
                        .and_then(|_| stdout.flush())
                        .map_err(|source| molrelay::Error::Io {
                            path: "<stdout>".into(),
                            source,
                        })
                }
            }
        }
    }
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
