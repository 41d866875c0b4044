use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use granular_mix::cli::sweep::{cmd_sweep, parse_grid};
use granular_mix::cli::verify::Suite;
use granular_mix::cli::{cmd_run, cmd_verify, load_config, reference_config, CliError};

#[derive(Parser)]
#[command(name = "granular-mix", version, about = "DSMC for inelastic granular mixtures with analytic bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its CSV series and JSON manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Run property suites and write a JSON array of bound reports.
    Verify {
        /// Defaults to the built-in reference mixture.
        #[arg(long)]
        config: Option<PathBuf>,
        /// kinematics, povzner, envelopes, haff, entropy or all; repeatable.
        #[arg(long, default_value = "all")]
        suite: Vec<String>,
        /// Samples per configuration in the sampling campaigns.
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Run every cell of a parameter grid.
    Sweep {
        /// Grid specification: {"base": <config>, "grid": {"e", "masses", "lambda", "gamma"}}.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
}

fn parse_suites(names: &[String]) -> Result<Vec<Suite>, CliError> {
    let mut out = Vec::new();
    for name in names.iter().flat_map(|n| n.split(',')) {
        if name == "all" {
            out.extend(Suite::ALL);
        } else {
            out.push(Suite::parse(name).ok_or_else(|| CliError::Config(format!("unknown suite {name:?}")))?);
        }
    }
    out.dedup();
    Ok(out)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed, out, quiet } => {
            let cfg = load_config(&config, seed)?;
            let art = cmd_run(&cfg, &out)?;
            if !quiet {
                let last = art.outcome.series.records.last().expect("at least one record");
                println!(
                    "t = {} E = {} collisions = {} ({:.1} s)\nwrote {} and {}",
                    last.time,
                    last.energy,
                    last.collisions,
                    art.outcome.wall_clock_seconds,
                    art.csv_path.display(),
                    art.manifest_path.display()
                );
            }
        }
        Command::Verify { config, suite, samples, seed, out, quiet } => {
            let mut cfg = match config {
                Some(p) => load_config(&p, None)?,
                None => reference_config(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let suites = parse_suites(&suite)?;
            let reports = cmd_verify(&cfg, &suites, samples, &out)?;
            if !quiet {
                for r in &reports {
                    println!("[PASS] {} margin={:.3e} samples={}", r.name, r.margin, r.samples);
                }
            }
        }
        Command::Sweep { config, out, quiet } => {
            let text = fs::read_to_string(&config).map_err(|e| CliError::Io(format!("{}: {e}", config.display())))?;
            let rows = cmd_sweep(&parse_grid(&text)?, &out)?;
            if !quiet {
                for r in &rows {
                    println!(
                        "cell {} e={} masses={:?} lambda={} gamma={} exponent={}",
                        r.cell.index,
                        r.cell.e,
                        r.cell.masses,
                        r.cell.lambda,
                        r.cell.gamma,
                        r.fitted_exponent.map_or("-".into(), |x| format!("{x:.3}"))
                    );
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
