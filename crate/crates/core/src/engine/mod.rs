//! Space-homogeneous DSMC for an M-species inelastic mixture.
//!
//! Each species carries unit mass: `weight * mass * count = 1`, so the
//! represented density is `f_s = weight_s * sum_i delta(v - v_i)`.

mod run;
pub mod snapshot;
mod step;
mod weak_form;

use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::cli::config::{InitSpec, SimConfig};
use crate::kernels::{KernelError, KernelSpec};
use crate::kinematics::SpeciesPair;
use crate::quadrature::sphere_area;
use crate::rng::init_stream;
use crate::vector::Vec3;

pub use run::{run, run_with, Observable, RunOutcome};
pub use step::{step, StepReport};
pub use weak_form::{
    weak_form_moment_rate, weak_form_moment_rate_sampled, weak_form_moment_rate_with, TestFunction,
};

/// Fraction of all particles expected to collide per step under the default dt.
pub const DEFAULT_ACCEPT_FRACTION: f64 = 0.05;
/// Initial majorant as a multiple of the RMS relative speed.
pub const U_MAX_INIT_FACTOR: f64 = 3.0;
/// Safety factor applied when an observed speed exceeds the majorant.
pub const U_MAX_GROWTH: f64 = 1.2;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(
        "time step too large: channel ({s}, {r}) needs {candidates} candidates, cap is {cap}; reduce dt"
    )]
    StepSize { s: usize, r: usize, candidates: f64, cap: u64 },
    #[error("invalid time step {0}")]
    TimeStep(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("snapshot error: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesState {
    pub mass: f64,
    pub weight: f64,
    pub velocities: Vec<Vec3>,
}

impl SpeciesState {
    /// Builds a species with unit total mass.
    pub fn new(mass: f64, velocities: Vec<Vec3>) -> Self {
        let weight = 1.0 / (mass * velocities.len() as f64);
        Self { mass, weight, velocities }
    }

    pub fn count(&self) -> usize {
        self.velocities.len()
    }

    pub fn mean_velocity(&self) -> Vec3 {
        let mut s = Vec3::ZERO;
        for v in &self.velocities {
            s += *v;
        }
        s * (1.0 / self.count() as f64)
    }

    pub fn mean_square_speed(&self) -> f64 {
        self.velocities.iter().map(Vec3::norm_sq).sum::<f64>() / self.count() as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    pub species: Vec<SpeciesState>,
    pub time: f64,
    pub dimension: usize,
    /// Restitution coefficient shared by every channel.
    pub restitution: f64,
    /// Majorant of the relative speed per channel, row-major `M x M`, symmetric.
    pub u_max: Vec<f64>,
    /// Key of the counter-based generator; streams are indexed by step.
    pub seed: u64,
    pub steps_taken: u64,
    /// Accepted collisions per channel since initialization, row-major, upper triangle used.
    pub collisions: Vec<u64>,
    /// Largest candidate count a single channel may draw in one step.
    pub candidate_cap: u64,
}

impl Ensemble {
    /// Assembles an ensemble from explicit velocities and resets the majorants.
    pub fn from_species(species: Vec<SpeciesState>, dimension: usize, restitution: f64, seed: u64) -> Self {
        let m = species.len();
        let mut ens = Self {
            species,
            time: 0.0,
            dimension,
            restitution,
            u_max: vec![0.0; m * m],
            seed,
            steps_taken: 0,
            collisions: vec![0; m * m],
            candidate_cap: u64::MAX,
        };
        ens.reset_majorants();
        ens
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn total_count(&self) -> usize {
        self.species.iter().map(SpeciesState::count).sum()
    }

    pub fn pair(&self, s: usize, r: usize) -> SpeciesPair {
        SpeciesPair { m_i: self.species[s].mass, m_j: self.species[r].mass, e: self.restitution }
    }

    pub fn u_max(&self, s: usize, r: usize) -> f64 {
        self.u_max[s * self.num_species() + r]
    }

    pub(crate) fn set_u_max(&mut self, s: usize, r: usize, value: f64) {
        let m = self.num_species();
        self.u_max[s * m + r] = value;
        self.u_max[r * m + s] = value;
    }

    /// `E|v_i - v_j|^2` for `v_i` drawn from species `s` and `v_j` from `r`.
    pub fn mean_square_relative_speed(&self, s: usize, r: usize) -> f64 {
        let (a, b) = (&self.species[s], &self.species[r]);
        a.mean_square_speed() + b.mean_square_speed() - 2.0 * a.mean_velocity().dot(&b.mean_velocity())
    }

    /// Sets every majorant to `U_MAX_INIT_FACTOR` times the channel RMS relative speed.
    pub fn reset_majorants(&mut self) {
        let m = self.num_species();
        for s in 0..m {
            for r in s..m {
                let rms = self.mean_square_relative_speed(s, r).max(0.0).sqrt();
                self.set_u_max(s, r, U_MAX_INIT_FACTOR * rms);
            }
        }
    }

    /// Number of distinct candidate pairs in channel `(s, r)`.
    pub fn pair_count(&self, s: usize, r: usize) -> f64 {
        let ns = self.species[s].count() as f64;
        if s == r {
            ns * (ns - 1.0) / 2.0
        } else {
            ns * self.species[r].count() as f64
        }
    }

    pub fn total_momentum(&self) -> Vec3 {
        let mut p = Vec3::ZERO;
        for sp in &self.species {
            let mut s = Vec3::ZERO;
            for v in &sp.velocities {
                s += *v;
            }
            p += s * (sp.mass * sp.weight);
        }
        p
    }

    /// Total kinetic energy in the `m |v|^2` convention.
    pub fn energy(&self) -> f64 {
        self.species
            .iter()
            .map(|sp| sp.mass * sp.weight * sp.velocities.iter().map(Vec3::norm_sq).sum::<f64>())
            .sum()
    }

    /// Expected accepted collisions per unit time, estimated from RMS relative speeds.
    pub fn expected_collision_rate(&self, spec: &KernelSpec) -> Result<f64, KernelError> {
        let d = self.dimension;
        let mean_b = spec.mean_section(d)?;
        let energy = self.energy();
        let m = self.num_species();
        let mut rate = 0.0;
        for s in 0..m {
            for r in s..m {
                let w = self.species[s].weight.max(self.species[r].weight);
                let rms = self.mean_square_relative_speed(s, r).max(0.0).sqrt();
                rate += self.pair_count(s, r)
                    * w
                    * sphere_area(d)
                    * mean_b
                    * spec.speed_factor(rms)
                    * spec.energy_factor(energy);
            }
        }
        Ok(rate)
    }

    /// Step size giving about `DEFAULT_ACCEPT_FRACTION * N` accepted collisions per step.
    pub fn default_dt(&self, spec: &KernelSpec) -> Result<f64, EngineError> {
        let rate = self.expected_collision_rate(spec)?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(EngineError::Config(
                "cannot choose a default dt for an ensemble with no relative motion".into(),
            ));
        }
        Ok(DEFAULT_ACCEPT_FRACTION * self.total_count() as f64 / rate)
    }
}

/// Draws the initial ensemble. Momentum is recentred to exactly zero.
pub fn init_ensemble(config: &SimConfig, seed: u64) -> Result<Ensemble, EngineError> {
    let d = config.dimension;
    let mut species = Vec::with_capacity(config.species.len());
    for (idx, sc) in config.species.iter().enumerate() {
        if sc.count < 2 {
            return Err(EngineError::Config(format!("species {idx} needs at least 2 particles")));
        }
        if !(sc.mass > 0.0) {
            return Err(EngineError::Config(format!("species {idx} needs a positive mass")));
        }
        let velocities = match &sc.init {
            InitSpec::Gaussian { temperature, drift } => {
                if !(*temperature > 0.0) {
                    return Err(EngineError::Config(format!(
                        "species {idx} needs a positive temperature"
                    )));
                }
                let normal = Normal::new(0.0, (temperature / sc.mass).sqrt())
                    .map_err(|e| EngineError::Config(e.to_string()))?;
                let drift = Vec3::from_slice(drift);
                let mut rng = init_stream(seed, idx);
                (0..sc.count)
                    .map(|_| {
                        let mut c = [0.0; 3];
                        for x in c.iter_mut().take(d) {
                            *x = normal.sample(&mut rng);
                        }
                        Vec3(c) + drift
                    })
                    .collect::<Vec<_>>()
            }
            InitSpec::File { path, species: block } => {
                let snap = snapshot::read_snapshot(path)?;
                if snap.dimension != d {
                    return Err(EngineError::Config(format!(
                        "snapshot {} has dimension {}, config has {d}",
                        path.display(),
                        snap.dimension
                    )));
                }
                let vs = snap.velocities.get(*block).ok_or_else(|| {
                    EngineError::Config(format!("snapshot {} has no species {block}", path.display()))
                })?;
                if vs.len() != sc.count {
                    return Err(EngineError::Config(format!(
                        "species {idx}: snapshot block has {} particles, config asks for {}",
                        vs.len(),
                        sc.count
                    )));
                }
                vs.clone()
            }
        };
        species.push(SpeciesState::new(sc.mass, velocities));
    }
    let mut ens = Ensemble::from_species(species, d, config.kernel.e, seed);
    ens.candidate_cap = config.max_candidates();
    recentre_momentum(&mut ens);
    ens.reset_majorants();
    Ok(ens)
}

/// Subtracts the mass-weighted mean velocity from every particle.
pub fn recentre_momentum(ens: &mut Ensemble) {
    let total_mass: f64 = ens.species.iter().map(|s| s.mass * s.weight * s.count() as f64).sum();
    let shift = ens.total_momentum() * (1.0 / total_mass);
    for sp in &mut ens.species {
        for v in &mut sp.velocities {
            *v -= shift;
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::cli::config::parse_config;

    pub(crate) fn two_species_config(n1: usize, n2: usize, e: f64) -> SimConfig {
        parse_config(&format!(
            r#"{{
                "species": [
                    {{"mass": 1.0, "count": {n1}, "init": {{"type": "gaussian", "temperature": 1.0, "drift": [0.3, 0, 0]}}}},
                    {{"mass": 2.0, "count": {n2}, "init": {{"type": "gaussian", "temperature": 0.5}}}}
                ],
                "kernel": {{"e": {e}}},
                "time": {{"steps": 10}},
                "seed": 42
            }}"#
        ))
        .unwrap()
    }

    #[test]
    fn init_normalizes_and_recentres() {
        let cfg = two_species_config(400, 200, 0.7);
        let ens = init_ensemble(&cfg, 1).unwrap();
        for sp in &ens.species {
            assert!((sp.weight * sp.mass * sp.count() as f64 - 1.0).abs() < 1e-12);
        }
        assert_eq!(ens.species[1].weight, 1.0 / (2.0 * 200.0));
        assert!(ens.total_momentum().norm() < 1e-12);
        assert!(ens.u_max(0, 1) > 0.0 && ens.u_max(0, 1) == ens.u_max(1, 0));
    }

    #[test]
    fn init_is_deterministic() {
        let cfg = two_species_config(100, 50, 0.7);
        assert_eq!(init_ensemble(&cfg, 9).unwrap(), init_ensemble(&cfg, 9).unwrap());
        assert_ne!(init_ensemble(&cfg, 9).unwrap(), init_ensemble(&cfg, 10).unwrap());
    }

    #[test]
    fn lower_dimensions_keep_unused_components_zero() {
        let mut cfg = two_species_config(50, 50, 0.7);
        cfg.dimension = 2;
        for s in &mut cfg.species {
            if let InitSpec::Gaussian { drift, .. } = &mut s.init {
                drift.truncate(2);
            }
        }
        let ens = init_ensemble(&cfg, 3).unwrap();
        assert!(ens.species.iter().flat_map(|s| &s.velocities).all(|v| v[2] == 0.0));
    }

    #[test]
    fn init_rejects_degenerate_species() {
        let mut cfg = two_species_config(10, 10, 0.7);
        cfg.species[0].count = 1;
        assert!(matches!(init_ensemble(&cfg, 0), Err(EngineError::Config(_))));
        let mut cfg = two_species_config(10, 10, 0.7);
        cfg.species[1].init = InitSpec::Gaussian { temperature: 0.0, drift: vec![0.0; 3] };
        assert!(matches!(init_ensemble(&cfg, 0), Err(EngineError::Config(_))));
    }

    #[test]
    fn default_dt_targets_acceptance_fraction() {
        let cfg = two_species_config(1000, 500, 0.7);
        let ens = init_ensemble(&cfg, 0).unwrap();
        let spec = cfg.kernel.spec();
        let dt = ens.default_dt(&spec).unwrap();
        let expected = ens.expected_collision_rate(&spec).unwrap() * dt;
        assert!((expected - 0.05 * 1500.0).abs() < 1e-9);
    }
}
