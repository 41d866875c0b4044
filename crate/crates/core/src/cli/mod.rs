//! Command implementations behind the `granular-mix` binary.
//!
//! Exit codes: 0 success, 1 verification failure, 2 IO, 3 configuration or
//! step-size error.

pub mod config;
pub mod output;
pub mod sweep;
pub mod verify;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bounds::BoundReport;
use crate::engine::{init_ensemble, run_with, snapshot, EngineError, Observable, RunOutcome};
use config::{parse_config, SimConfig};
use output::{channel_totals, resolve, series_csv, to_pretty_json, write_file, RunManifest};
use verify::Suite;

/// Hard-sphere binary mixture used by the cooling checks. Both species carry
/// the same particle weight; `b` integrates to one over the sphere.
pub const REFERENCE_CONFIG: &str = r#"{
  "dimension": 3,
  "species": [
    {"mass": 1.0, "count": 133334, "init": {"type": "gaussian", "temperature": 1.0, "drift": [0, 0, 0]}},
    {"mass": 2.0, "count": 66667, "init": {"type": "gaussian", "temperature": 1.0, "drift": [0, 0, 0]}}
  ],
  "kernel": {"lambda": 1.0, "gamma": 0.0, "b_preset": "const", "b_coefficients": [0.07957747154594767], "e": 0.7},
  "time": {"steps": 12000, "sample_every": 100},
  "seed": 20240917,
  "observables": {"entropy": true},
  "outputs": {"csv_path": "series.csv", "manifest_path": "manifest.json"}
}"#;

pub fn reference_config() -> SimConfig {
    parse_config(REFERENCE_CONFIG).expect("reference configuration is valid")
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Verification(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Io(_) | EngineError::Snapshot(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

/// Summary reports attached to every run manifest.
pub fn run_acceptance(outcome: &RunOutcome) -> Vec<BoundReport> {
    let series = &outcome.series;
    let mut out = vec![verify::energy_monotone_report(series), verify::momentum_report(series, 1e-9)];
    if let Ok(r) = verify::envelope_report(series, &outcome.resolved) {
        out.push(r);
    }
    out
}

pub struct RunArtifacts {
    pub outcome: RunOutcome,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Runs `config`, writing the series CSV, the manifest and any snapshots under `out_dir`.
pub fn execute_run(config: &SimConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let csv_path = resolve(out_dir, &config.outputs.csv_path);
    let manifest_path = resolve(out_dir, &config.outputs.manifest_path);
    let observers = Observable::standard(config);
    let outcome = run_with(config, &observers, |ens, k| {
        let path = out_dir.join(format!("snapshot_{k:08}.bin"));
        fs::create_dir_all(out_dir)?;
        snapshot::write_snapshot(ens, &path)
    })?;
    let m = config.species.len();
    write_file(&csv_path, &series_csv(&outcome.series, m)).map_err(io(&csv_path))?;
    let manifest = RunManifest {
        config: outcome.resolved.clone(),
        config_digest: outcome.series.config_digest.clone(),
        seed: config.seed,
        library_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: outcome.wall_clock_seconds,
        channel_collisions: channel_totals(&outcome.channel_totals, m),
        candidates: outcome.candidates,
        majorant_violations: outcome.majorant_violations,
        error: outcome.error.clone(),
        fitted_exponent: verify::late_window_fit(&outcome.series),
        acceptance: run_acceptance(&outcome),
    };
    write_file(&manifest_path, &to_pretty_json(&manifest)).map_err(io(&manifest_path))?;
    Ok(RunArtifacts { outcome, csv_path, manifest_path })
}

/// `run` subcommand. A step-size failure still writes the partial outputs.
pub fn cmd_run(config: &SimConfig, out_dir: &Path) -> Result<RunArtifacts, CliError> {
    let art = execute_run(config, out_dir)?;
    if let Some(err) = &art.outcome.error {
        return Err(CliError::Config(err.clone()));
    }
    Ok(art)
}

/// Runs the requested suites; the simulation-based ones share one run of `config`.
pub fn verify_suites(config: &SimConfig, suites: &[Suite], samples: u64) -> Result<Vec<BoundReport>, CliError> {
    let digest = config.digest();
    let mut reports = Vec::new();
    let outcome = if suites.iter().any(|s| s.needs_run()) {
        let mut cfg = config.clone();
        if suites.contains(&Suite::Entropy) {
            cfg.observables.entropy = true;
        }
        cfg.outputs.snapshot_every = None;
        let out = crate::engine::run(&cfg, &Observable::standard(&cfg))?;
        if let Some(e) = &out.error {
            return Err(CliError::Config(e.clone()));
        }
        Some(out)
    } else {
        None
    };
    for suite in suites {
        match suite {
            Suite::Kinematics => reports.extend(verify::kinematics_reports(samples, config.seed, &digest)),
            Suite::Povzner => reports.extend(verify::povzner_reports(samples, config.seed, &digest)),
            Suite::Envelopes => {
                let out = outcome.as_ref().expect("run performed");
                reports.push(verify::envelope_report(&out.series, config).map_err(|e| CliError::Config(e.to_string()))?);
                reports.push(verify::energy_monotone_report(&out.series));
                reports.push(verify::momentum_report(&out.series, 1e-9));
                let ens = init_ensemble(config, config.seed)?;
                let constants = verify::fitted_moment_constants(config, config.seed).map_err(CliError::Config)?;
                reports.extend(verify::moment_reports(
                    &out.series,
                    config,
                    verify::moment_relative_error(&ens),
                    &constants,
                ));
            }
            Suite::Haff => {
                let out = outcome.as_ref().expect("run performed");
                reports.push(verify::envelope_report(&out.series, config).map_err(|e| CliError::Config(e.to_string()))?);
                reports.push(verify::haff_exponent_report(&out.series).0);
                reports.push(verify::concentration_report(&out.series));
            }
            Suite::Entropy => {
                let out = outcome.as_ref().expect("run performed");
                reports.extend(verify::entropy_reports(&out.series, config));
            }
        }
    }
    Ok(reports)
}

/// `verify` subcommand: writes `verify.json` under `out_dir` and fails with
/// exit code 1 when any report fails.
pub fn cmd_verify(config: &SimConfig, suites: &[Suite], samples: u64, out_dir: &Path) -> Result<Vec<BoundReport>, CliError> {
    let reports = verify_suites(config, suites, samples)?;
    let path = out_dir.join("verify.json");
    write_file(&path, &to_pretty_json(&reports)).map_err(io(&path))?;
    let failed: Vec<&BoundReport> = reports.iter().filter(|r| !r.passed).collect();
    if !failed.is_empty() {
        return Err(CliError::Verification(format!("verification failed:\n{}", to_pretty_json(&failed))));
    }
    Ok(reports)
}
