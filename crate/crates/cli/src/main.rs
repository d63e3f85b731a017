//! `asymtrust`: quorum analysis, seeded consensus batches and the attack demo.
//!
//! Records go to standard output (or `--out`) one JSON object per line;
//! tables go to standard error.

mod commands;
mod config;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use asymtrust::consensus::Variant;
use clap::{Parser, Subcommand};

use commands::{AttackArgs, Failure, Outcome, RunArgs, EXIT_PARSE};

#[derive(Parser)]
#[command(
    name = "asymtrust",
    version,
    about = "Asymmetric-trust quorum analysis and consensus simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// B3 verdict, quorum and kernel tables, classification of the faulty set.
    Analyze {
        #[arg(long)]
        config: PathBuf,
        /// Exit with status 3 when B3 fails.
        #[arg(long)]
        require_b3: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the configured scenario once per seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `A..B` (end exclusive) or a single seed.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Option<std::ops::Range<u64>>,
        #[arg(long)]
        max_rounds: Option<u64>,
        #[arg(long)]
        variant: Option<Variant>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the scripted liveness attack on four processes.
    Attack {
        #[arg(long)]
        variant: Variant,
        #[arg(long, value_parser = parse_seeds, default_value = "0")]
        seeds: std::ops::Range<u64>,
        /// Writes the event trace of the first seed as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_seeds(s: &str) -> Result<std::ops::Range<u64>, String> {
    config::parse_seeds(s).map_err(|e| format!("{e:#}"))
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Analyze {
            config,
            require_b3,
            out,
        } => {
            let cfg = commands::load(&config)?;
            commands::analyze(&cfg, require_b3, &mut writer(&out)?)
        }
        Command::Run {
            config,
            seeds,
            max_rounds,
            variant,
            out,
        } => {
            let cfg = commands::load(&config)?;
            let name = config
                .file_stem()
                .map_or_else(|| "config".into(), |s| s.to_string_lossy().into_owned());
            commands::run(
                &cfg,
                &RunArgs {
                    name,
                    seeds,
                    max_rounds,
                    variant,
                },
                &mut writer(&out)?,
            )
        }
        Command::Attack {
            variant,
            seeds,
            trace,
            out,
        } => commands::attack(
            &AttackArgs {
                variant,
                seeds,
                trace,
            },
            &mut writer(&out)?,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
