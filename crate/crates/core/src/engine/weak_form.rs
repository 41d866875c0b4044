//! Deterministic evaluation of the collision operator in weak form.
//!
//! Channel `(s, r)` with `s != r` is the one-sided rate
//! `int int f_s f_r* int (psi_s(v') - psi_s(v)) B d sigma`. The intra-species
//! channel carries the symmetrization factor one half:
//! `1/2 int int f f* int (psi' + psi'* - psi - psi*) B d sigma`, which over
//! particles becomes a sum over unordered pairs.

use rand::Rng;
use rayon::prelude::*;

use super::{Ensemble, EngineError};
use crate::kernels::KernelSpec;
use crate::kinematics::{apply_sigma, SpeciesPair};
use crate::quadrature::SphereRule;
use crate::rng::aux_stream;
use crate::vector::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFunction {
    /// `psi = 1`
    Mass,
    /// `psi = m v_k`
    Momentum(usize),
    /// `psi = m |v|^2`
    Energy,
    /// `psi = (1 + m |v|^2)^{s/2}`
    WeightedMoment(f64),
    /// `psi = m^{k/2} |v|^k`
    MuK(f64),
}

impl TestFunction {
    /// Parses `mass`, `momentum_x|y|z`, `energy`, `Y<s>` or `mu<k>`.
    pub fn parse(id: &str) -> Result<Self, EngineError> {
        let bad = || EngineError::Config(format!("unknown test function {id:?}"));
        match id {
            "mass" => Ok(Self::Mass),
            "energy" => Ok(Self::Energy),
            "momentum_x" => Ok(Self::Momentum(0)),
            "momentum_y" => Ok(Self::Momentum(1)),
            "momentum_z" => Ok(Self::Momentum(2)),
            _ => {
                if let Some(s) = id.strip_prefix('Y') {
                    s.parse().ok().filter(|s: &f64| *s > 0.0).map(Self::WeightedMoment).ok_or_else(bad)
                } else if let Some(k) = id.strip_prefix("mu") {
                    k.parse().ok().filter(|k: &f64| *k > 0.0).map(Self::MuK).ok_or_else(bad)
                } else {
                    Err(bad())
                }
            }
        }
    }

    #[inline]
    pub fn eval(&self, mass: f64, v: &Vec3) -> f64 {
        match *self {
            Self::Mass => 1.0,
            Self::Momentum(k) => mass * v[k],
            Self::Energy => mass * v.norm_sq(),
            Self::WeightedMoment(s) => (1.0 + mass * v.norm_sq()).powf(0.5 * s),
            Self::MuK(k) => mass.powf(0.5 * k) * v.norm().powf(k),
        }
    }
}

struct Channel<'a> {
    spec: &'a KernelSpec,
    psi: TestFunction,
    pair: SpeciesPair,
    rule: &'a SphereRule,
    symmetric: bool,
}

impl Channel<'_> {
    /// Sphere integral of the psi increment times `b`, times `|u|^lambda`.
    fn pair_integral(&self, vi: &Vec3, vj: &Vec3) -> f64 {
        let u = *vi - *vj;
        let un = u.norm();
        if un == 0.0 {
            return 0.0;
        }
        let (mi, mj) = (self.pair.m_i, self.pair.m_j);
        let psi = self.psi;
        let before = if self.symmetric { psi.eval(mi, vi) + psi.eval(mj, vj) } else { psi.eval(mi, vi) };
        let nu = u * (1.0 / un);
        let q = self.rule.integrate(|sigma| {
            let (vp, vsp, _) = apply_sigma(&self.pair, vi, vj, &u, un, sigma);
            let after = if self.symmetric { psi.eval(mi, &vp) + psi.eval(mj, &vsp) } else { psi.eval(mi, &vp) };
            (after - before) * self.spec.b.eval(nu.dot(sigma).clamp(-1.0, 1.0))
        });
        q * self.spec.speed_factor(un)
    }
}

fn check_channel(ens: &Ensemble, s: usize, r: usize) -> Result<(), EngineError> {
    let m = ens.num_species();
    if s >= m || r >= m {
        return Err(EngineError::Config(format!("channel ({s}, {r}) out of range for {m} species")));
    }
    if ens.species[s].count() == 0 || ens.species[r].count() == 0 {
        return Err(EngineError::Config("empty species".into()));
    }
    Ok(())
}

/// Exact double sum over particle pairs with a fixed sphere rule.
pub fn weak_form_moment_rate(
    ens: &Ensemble,
    spec: &KernelSpec,
    psi: TestFunction,
    channel: (usize, usize),
) -> Result<f64, EngineError> {
    weak_form_moment_rate_with(ens, spec, psi, channel, &SphereRule::for_dimension(ens.dimension))
}

pub fn weak_form_moment_rate_with(
    ens: &Ensemble,
    spec: &KernelSpec,
    psi: TestFunction,
    (s, r): (usize, usize),
    rule: &SphereRule,
) -> Result<f64, EngineError> {
    check_channel(ens, s, r)?;
    let ch = Channel { spec, psi, pair: ens.pair(s, r), rule, symmetric: s == r };
    let a = &ens.species[s].velocities;
    let b = &ens.species[r].velocities;
    let rows: Vec<f64> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let start = if s == r { i + 1 } else { 0 };
            b[start..].iter().map(|vj| ch.pair_integral(&a[i], vj)).sum()
        })
        .collect();
    let total: f64 = rows.iter().sum();
    let ws = ens.species[s].weight;
    let wr = ens.species[r].weight;
    Ok(ws * wr * total * spec.energy_factor(ens.energy()))
}

/// Monte Carlo estimate of [`weak_form_moment_rate`] from `samples` uniformly
/// drawn pairs. Returns `(estimate, standard_error)`.
pub fn weak_form_moment_rate_sampled(
    ens: &Ensemble,
    spec: &KernelSpec,
    psi: TestFunction,
    (s, r): (usize, usize),
    samples: usize,
    seed: u64,
) -> Result<(f64, f64), EngineError> {
    check_channel(ens, s, r)?;
    if samples < 2 {
        return Err(EngineError::Config("need at least two samples".into()));
    }
    let rule = SphereRule::for_dimension(ens.dimension);
    let ch = Channel { spec, psi, pair: ens.pair(s, r), rule: &rule, symmetric: s == r };
    let a = &ens.species[s].velocities;
    let b = &ens.species[r].velocities;
    const CHUNK: usize = 16_384;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = aux_stream(seed, c as u64);
            let n = CHUNK.min(samples - c * CHUNK);
            let (mut sum, mut sq) = (0.0, 0.0);
            for _ in 0..n {
                let i = rng.random_range(0..a.len());
                let j = if s == r {
                    let j = rng.random_range(0..a.len() - 1);
                    j + usize::from(j >= i)
                } else {
                    rng.random_range(0..b.len())
                };
                let g = ch.pair_integral(&a[i], &b[j]);
                sum += g;
                sq += g * g;
            }
            (sum, sq)
        })
        .collect();
    let (sum, sq) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sq / n - mean * mean) * n / (n - 1.0)).max(0.0);
    let scale = ens.pair_count(s, r) * ens.species[s].weight * ens.species[r].weight * spec.energy_factor(ens.energy());
    Ok((scale * mean, scale * (var / n).sqrt()))
}
