//! Parameter sweeps: the cartesian product of `e`, species masses, `lambda`
//! and `gamma` over a base configuration, one independent run per cell.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::{parse_config, SimConfig};
use super::output::{to_pretty_json, write_file};
use super::{execute_run, CliError};

/// Environment variable capping the number of concurrently running cells.
pub const THREADS_ENV: &str = "GRANULAR_MIX_THREADS";

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxes {
    pub e: Option<Vec<f64>>,
    /// One mass list (one entry per species) per grid point.
    pub masses: Option<Vec<Vec<f64>>>,
    pub lambda: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub base: Value,
    #[serde(default)]
    pub grid: GridAxes,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub index: usize,
    pub e: f64,
    pub masses: Vec<f64>,
    pub lambda: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    #[serde(flatten)]
    pub cell: Cell,
    pub csv_path: PathBuf,
    pub config_digest: Option<String>,
    pub fitted_exponent: Option<f64>,
    /// `exp(intercept)` of the late-window log-log fit.
    pub fitted_prefactor: Option<f64>,
    pub final_energy: Option<f64>,
    pub error: Option<String>,
}

/// Expands the grid. Axes that are absent keep the base value.
pub fn expand(spec: &GridSpec) -> Result<(SimConfig, Vec<(Cell, SimConfig)>), CliError> {
    let base = parse_config(&spec.base.to_string()).map_err(|e| CliError::Config(format!("base: {e}")))?;
    let g = &spec.grid;
    let es = g.e.clone().unwrap_or_else(|| vec![base.kernel.e]);
    let ms = g.masses.clone().unwrap_or_else(|| vec![base.masses()]);
    let ls = g.lambda.clone().unwrap_or_else(|| vec![base.kernel.lambda]);
    let gs = g.gamma.clone().unwrap_or_else(|| vec![base.kernel.gamma]);
    let mut cells = Vec::new();
    for &e in &es {
        for m in &ms {
            for &l in &ls {
                for &ga in &gs {
                    let index = cells.len();
                    if m.len() != base.species.len() {
                        return Err(CliError::Config(format!(
                            "grid.masses[{}] lists {} masses for {} species",
                            ms.iter().position(|x| x == m).unwrap_or(0),
                            m.len(),
                            base.species.len()
                        )));
                    }
                    let mut cfg = base.clone();
                    cfg.kernel.e = e;
                    cfg.kernel.lambda = l;
                    cfg.kernel.gamma = ga;
                    for (sp, &mass) in cfg.species.iter_mut().zip(m) {
                        sp.mass = mass;
                    }
                    cfg.outputs.csv_path = format!("cell_{index:03}.csv").into();
                    cfg.outputs.manifest_path = format!("cell_{index:03}.json").into();
                    // Re-validate the modified document.
                    let text = serde_json::to_string(&cfg).expect("config serializes");
                    let cfg = parse_config(&text).map_err(|err| CliError::Config(format!("cell {index}: {err}")))?;
                    cells.push((Cell { index, e, masses: m.clone(), lambda: l, gamma: ga }, cfg));
                }
            }
        }
    }
    Ok((base, cells))
}

fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.parse().ok().filter(|&n| n > 0)
}

/// Runs every cell into `out_dir` and writes `summary.json`. Fails with exit
/// code 1 if any cell failed; the summary is written either way.
pub fn cmd_sweep(spec: &GridSpec, out_dir: &Path) -> Result<Vec<CellSummary>, CliError> {
    let (_, cells) = expand(spec)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Config(e.to_string()))?;
    let rows: Vec<CellSummary> = pool.install(|| {
        cells
            .par_iter()
            .map(|(cell, cfg)| {
                let csv_path = out_dir.join(&cfg.outputs.csv_path);
                match execute_run(cfg, out_dir) {
                    Ok(art) => {
                        let fit = super::verify::late_window_fit(&art.outcome.series);
                        CellSummary {
                            cell: cell.clone(),
                            csv_path,
                            config_digest: Some(art.outcome.series.config_digest.clone()),
                            fitted_exponent: fit.as_ref().map(|f| f.exponent),
                            fitted_prefactor: fit.as_ref().map(|f| f.intercept.exp()),
                            final_energy: art.outcome.series.records.last().map(|r| r.energy),
                            error: art.outcome.error.clone(),
                        }
                    }
                    Err(e) => CellSummary {
                        cell: cell.clone(),
                        csv_path,
                        config_digest: None,
                        fitted_exponent: None,
                        fitted_prefactor: None,
                        final_energy: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    let path = out_dir.join("summary.json");
    write_file(&path, &to_pretty_json(&rows)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} of {} sweep cells failed", rows.len())));
    }
    Ok(rows)
}

pub fn parse_grid(text: &str) -> Result<GridSpec, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid grid specification: {e}")))
}
