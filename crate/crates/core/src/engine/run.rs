use std::time::Instant;

use super::{init_ensemble, step, EngineError, Ensemble};
use crate::cli::config::SimConfig;
use crate::observables::{
    concentration_metric, entropy_estimate, moment_mu_k, species_masses, weighted_moment_ys,
    ObservableRecord, ObservableSeries,
};

/// Observables a run may record. Energy, momentum, species masses,
/// variances and collision counts are always recorded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Observable {
    Ys(f64),
    MuK(f64),
    Entropy,
}

impl Observable {
    /// The set written to the CSV series: `Y^3`, `mu_{1/2}` and, if enabled, entropy.
    pub fn standard(config: &SimConfig) -> Vec<Observable> {
        let mut v = vec![Observable::Ys(3.0), Observable::MuK(0.5)];
        if config.observables.entropy {
            v.push(Observable::Entropy);
        }
        v
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub series: ObservableSeries,
    /// Configuration with `time.dt` resolved.
    pub resolved: SimConfig,
    /// Accepted collisions per channel, row-major `M x M`, upper triangle.
    pub channel_totals: Vec<u64>,
    pub candidates: u64,
    pub majorant_violations: u64,
    pub wall_clock_seconds: f64,
    /// Set when the run aborted; `series` then holds the records up to the failure.
    pub error: Option<String>,
    pub ensemble: Ensemble,
}

pub fn record(ens: &Ensemble, observers: &[Observable], dissipated_sq: f64) -> ObservableRecord {
    let mut rec = ObservableRecord {
        time: ens.time,
        energy: ens.energy(),
        momentum: ens.total_momentum(),
        species_masses: species_masses(ens),
        y_s: Vec::new(),
        mu_k: Vec::new(),
        entropy: None,
        bold_h: None,
        variance_per_species: concentration_metric(ens),
        collisions: ens.collisions.iter().sum(),
        energy_std_error: dissipated_sq.sqrt(),
    };
    for obs in observers {
        match *obs {
            Observable::Ys(s) => rec.y_s.push((s, weighted_moment_ys(ens, s))),
            Observable::MuK(k) => rec.mu_k.push((k, moment_mu_k(ens, k))),
            Observable::Entropy => {
                if let Some((h, b)) = entropy_estimate(ens) {
                    rec.entropy = Some(h);
                    rec.bold_h = Some(b);
                }
            }
        }
    }
    rec
}

/// Runs `config` from its own seed, sampling `observers`.
pub fn run(config: &SimConfig, observers: &[Observable]) -> Result<RunOutcome, EngineError> {
    run_with(config, observers, |_, _| Ok(()))
}

/// As [`run`], calling `on_snapshot(ensemble, step_index)` every
/// `outputs.snapshot_every` steps (and at step 0).
///
/// Initialization errors are returned as `Err`; step errors end the run early
/// and are reported in [`RunOutcome::error`].
pub fn run_with<F>(config: &SimConfig, observers: &[Observable], mut on_snapshot: F) -> Result<RunOutcome, EngineError>
where
    F: FnMut(&Ensemble, u64) -> Result<(), EngineError>,
{
    let clock = Instant::now();
    let spec = config.kernel.spec();
    let mut ens = init_ensemble(config, config.seed)?;
    let dt = match config.time.dt {
        Some(dt) => dt,
        None => ens.default_dt(&spec)?,
    };
    let mut resolved = config.clone();
    resolved.time.dt = Some(dt);
    let mut series = ObservableSeries {
        records: Vec::new(),
        seed: config.seed,
        config_digest: config.digest(),
    };
    let mut dissipated_sq = 0.0;
    let mut candidates = 0;
    let mut violations = 0;
    let mut error = None;
    series.records.push(record(&ens, observers, 0.0));
    let snap_every = config.outputs.snapshot_every;
    if snap_every.is_some() {
        on_snapshot(&ens, 0)?;
    }
    let steps = config.time.steps;
    for k in 1..=steps {
        match step(&mut ens, &spec, dt) {
            Ok(rep) => {
                dissipated_sq += rep.energy_change_sq;
                candidates += rep.total_candidates();
                violations += rep.majorant_violations;
            }
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        }
        if k % config.time.sample_every == 0 || k == steps {
            series.records.push(record(&ens, observers, dissipated_sq));
        }
        if let Some(n) = snap_every {
            if k % n == 0 {
                on_snapshot(&ens, k)?;
            }
        }
    }
    Ok(RunOutcome {
        series,
        resolved,
        channel_totals: ens.collisions.clone(),
        candidates,
        majorant_violations: violations,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        error,
        ensemble: ens,
    })
}
