//! Property suites that turn the analytic bounds into pass/fail reports.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::config::SimConfig;
use crate::bounds::{
    energy_envelope, energy_lower_from_entropy, entropy_growth_bound, entropy_growth_rate, fit_moment_constant,
    fit_power_law, haff_floor_constants, lambda_of_chi, log_integral_floor, moment_ceiling, povzner_check,
    povzner::random_collision, sqrt_energy_integral, BoundReport, EnvelopeSpec, MomentConstants, PowerLawFit,
    PsiKind, PsiSpec,
};
use crate::engine::Ensemble;
use crate::kernels::{tau_constant, KernelError};
use crate::kinematics::{
    post_collision_omega, post_collision_sigma, post_collision_z, pre_collision_omega, sigma_from_omega,
    z_from_sigma,
};
use crate::observables::ObservableSeries;
use crate::rng::aux_stream;
use crate::vector::Vec3;

/// Monte Carlo standard errors allowed on stochastic comparisons.
pub const MC_SIGMAS: f64 = 3.0;
/// Tolerance band of the nearest-neighbour entropy estimate, in nats.
pub const ENTROPY_BAND: f64 = 0.1;
pub const MOMENTUM_TOLERANCE: f64 = 1e-12;
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
pub const HAFF_EXPONENT: f64 = -2.0;
pub const HAFF_EXPONENT_TOLERANCE: f64 = 0.15;
/// Required reduction of every species' velocity variance over a cooling run.
pub const CONCENTRATION_FACTOR: f64 = 10.0;
/// Random velocity pairs per channel used to fit the moment constant.
pub const MOMENT_FIT_SAMPLES: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Kinematics,
    Povzner,
    Envelopes,
    Haff,
    Entropy,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Kinematics, Suite::Povzner, Suite::Envelopes, Suite::Haff, Suite::Entropy];

    pub fn parse(name: &str) -> Option<Suite> {
        Some(match name {
            "kinematics" => Suite::Kinematics,
            "povzner" => Suite::Povzner,
            "envelopes" => Suite::Envelopes,
            "haff" => Suite::Haff,
            "entropy" => Suite::Entropy,
            _ => return None,
        })
    }

    /// Whether the suite needs a simulated series.
    pub fn needs_run(self) -> bool {
        matches!(self, Suite::Envelopes | Suite::Haff | Suite::Entropy)
    }
}

fn report(name: &str, margin: f64, samples: u64, digest: &str) -> BoundReport {
    BoundReport { name: name.into(), passed: margin >= 0.0, margin, samples, config_digest: digest.into() }
}

/// Largest relative error seen, folded into `tol - max_err`.
struct Residual {
    worst: f64,
    samples: u64,
}

impl Residual {
    fn new() -> Self {
        Self { worst: 0.0, samples: 0 }
    }

    fn push(&mut self, err: f64, scale: f64) {
        let rel = if scale > 0.0 { err / scale } else { err };
        // NaN counts as a failure.
        self.worst = if rel.is_nan() { f64::INFINITY } else { self.worst.max(rel) };
        self.samples += 1;
    }

    fn report(&self, name: &str, tol: f64, digest: &str) -> BoundReport {
        report(name, tol - self.worst, self.samples, digest)
    }
}

fn unit<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let g = Vec3::new(StandardNormal.sample(rng), StandardNormal.sample(rng), StandardNormal.sample(rng));
        if let Some(n) = g.normalized() {
            return n;
        }
    }
}

fn pair_diff(a: (Vec3, Vec3), b: (Vec3, Vec3)) -> f64 {
    a.0.max_abs_diff(&b.0).max(a.1.max_abs_diff(&b.1))
}

/// Per-collision identities over `samples` random collisions in each
/// parametrization: momentum, closed-form energy change, the pre-collisional
/// inverse and its relative-speed identity, and sigma/omega/z agreement.
pub fn kinematics_reports(samples: u64, seed: u64, digest: &str) -> Vec<BoundReport> {
    let mut rng = aux_stream(seed, 1);
    let mut momentum = Residual::new();
    let mut energy = Residual::new();
    let mut roundtrip = Residual::new();
    let mut pre_speed = Residual::new();
    let mut equivalence = Residual::new();
    for _ in 0..samples {
        let (v, vs, sigma, pair) = random_collision(&mut rng);
        let omega = unit(&mut rng);
        let p0 = v * pair.m_i + vs * pair.m_j;
        let p_scale = v.norm() * pair.m_i + vs.norm() * pair.m_j;
        let e0 = pair.m_i * v.norm_sq() + pair.m_j * vs.norm_sq();
        let u = v - vs;

        let by_sigma = post_collision_sigma(&v, &vs, &sigma, &pair).expect("unit sigma");
        let by_omega = post_collision_omega(&v, &vs, &omega, &pair).expect("unit omega");
        let z = z_from_sigma(&u.normalized().expect("continuous samples"), &sigma, pair.e);
        let by_z = post_collision_z(&v, &vs, &z, &pair).expect("z in the unit ball");
        for out in [&by_sigma, &by_omega, &by_z] {
            let p1 = out.v_prime * pair.m_i + out.v_star_prime * pair.m_j;
            momentum.push((p1 - p0).norm(), p_scale);
            let direct = pair.m_i * out.v_prime.norm_sq() + pair.m_j * out.v_star_prime.norm_sq() - e0;
            energy.push((direct - out.delta_energy).abs(), e0);
        }

        if pair.e > 0.0 {
            let (a, b) = pre_collision_omega(&v, &vs, &omega, &pair).expect("positive restitution");
            let back = post_collision_omega(&a, &b, &omega, &pair).expect("unit omega");
            let scale = a.norm().max(b.norm()).max(v.norm()).max(vs.norm());
            roundtrip.push(pair_diff((back.v_prime, back.v_star_prime), (v, vs)), scale);
            let lhs = (a - b).norm_sq();
            let rhs = u.norm_sq() + (1.0 / (pair.e * pair.e) - 1.0) * u.dot(&omega).powi(2);
            pre_speed.push((lhs - rhs).abs(), lhs.max(rhs));
        }

        let s_of_w = sigma_from_omega(&u, &omega).expect("nonzero relative velocity");
        let via_sigma = post_collision_sigma(&v, &vs, &s_of_w, &pair).expect("unit sigma");
        let scale = v.norm().max(vs.norm());
        equivalence.push(
            pair_diff((via_sigma.v_prime, via_sigma.v_star_prime), (by_omega.v_prime, by_omega.v_star_prime)),
            scale,
        );
        equivalence.push(pair_diff((by_z.v_prime, by_z.v_star_prime), (by_sigma.v_prime, by_sigma.v_star_prime)), scale);
    }
    vec![
        momentum.report("kinematics.momentum", MOMENTUM_TOLERANCE, digest),
        energy.report("kinematics.energy_identity", IDENTITY_TOLERANCE, digest),
        roundtrip.report("kinematics.pre_post_roundtrip", IDENTITY_TOLERANCE, digest),
        pre_speed.report("kinematics.pre_relative_speed", IDENTITY_TOLERANCE, digest),
        equivalence.report("kinematics.representation_equivalence", IDENTITY_TOLERANCE, digest),
    ]
}

/// Povzner decomposition bounds for `p in {1.5, 2, 3}` and both test-function
/// kinds, plus the range of `lambda(cos chi)` over `10 * samples` draws.
pub fn povzner_reports(samples: u64, seed: u64, digest: &str) -> Vec<BoundReport> {
    let mut out = Vec::new();
    let mut stream = 10;
    for kind in [PsiKind::Power, PsiKind::ShiftedPower] {
        for p in [1.5, 2.0, 3.0] {
            let psi = PsiSpec::new(kind, p).expect("p > 1");
            let rep = povzner_check(samples, &psi, &mut aux_stream(seed, stream));
            stream += 1;
            let tag = match kind {
                PsiKind::Power => "power",
                PsiKind::ShiftedPower => "shifted",
            };
            out.push(BoundReport {
                name: format!("povzner.{tag}.p{p}"),
                passed: rep.passed(),
                margin: rep.margin(),
                samples: rep.samples,
                config_digest: digest.into(),
            });
        }
    }
    let mut rng = aux_stream(seed, stream);
    let mut margin = f64::INFINITY;
    let n = 10 * samples;
    for _ in 0..n {
        let e = 1.0 - rng.random::<f64>();
        let c = 2.0 * rng.random::<f64>() - 1.0;
        let l = lambda_of_chi(e, c);
        margin = margin.min(l - e).min(1.0 - l);
    }
    out.push(report("povzner.lambda_range", margin + 1e-12, n, digest));
    out
}

/// `C_e = tau rho (1 - e^2) / (4 (m_i + m_j))` for the configured kernel, with
/// `rho` the number of unit-mass species and `m_i + m_j` the heaviest pair
/// (twice the mass for a single species).
pub fn envelope_constant_for(config: &SimConfig) -> Result<f64, KernelError> {
    let tau = tau_constant(&config.kernel.spec().b, config.dimension)?.tau;
    let masses = config.masses();
    let pair_sum = if masses.len() == 1 {
        2.0 * masses[0]
    } else {
        let mut best: f64 = 0.0;
        for i in 0..masses.len() {
            for j in i + 1..masses.len() {
                best = best.max(masses[i] + masses[j]);
            }
        }
        best
    };
    let e = config.kernel.e;
    Ok(tau * masses.len() as f64 * (1.0 - e * e) / (4.0 * pair_sum))
}

pub fn envelope_spec_for(config: &SimConfig, e0: f64) -> Result<EnvelopeSpec, KernelError> {
    Ok(EnvelopeSpec { e0, c: envelope_constant_for(config)?, lambda: config.kernel.lambda, gamma: config.kernel.gamma })
}

/// `E(t) <= envelope(t) + MC_SIGMAS * se(t)` at every sample; margin in units of `E(0)`.
pub fn envelope_report(series: &ObservableSeries, config: &SimConfig) -> Result<BoundReport, KernelError> {
    let e0 = series.records[0].energy;
    let spec = envelope_spec_for(config, e0)?;
    let margin = series
        .records
        .iter()
        .map(|r| (energy_envelope(&spec, r.time) + MC_SIGMAS * r.energy_std_error - r.energy) / e0)
        .fold(f64::INFINITY, f64::min);
    Ok(report("envelopes.energy_envelope", margin, series.records.len() as u64, &series.config_digest))
}

/// Energy never increases between samples (up to rounding).
pub fn energy_monotone_report(series: &ObservableSeries) -> BoundReport {
    let e0 = series.records[0].energy;
    let margin = series
        .records
        .windows(2)
        .map(|w| (w[0].energy - w[1].energy) / e0 + 1e-12)
        .fold(f64::INFINITY, f64::min);
    report("envelopes.energy_nonincreasing", margin, series.records.len() as u64, &series.config_digest)
}

/// Total momentum stays at its initial value, relative to `sqrt(E(0) * total mass)`.
pub fn momentum_report(series: &ObservableSeries, tol: f64) -> BoundReport {
    let r0 = &series.records[0];
    let scale = (r0.energy * r0.species_masses.iter().sum::<f64>()).sqrt().max(f64::MIN_POSITIVE);
    let worst = series.records.iter().map(|r| (r.momentum - r0.momentum).norm() / scale).fold(0.0, f64::max);
    report("envelopes.momentum_conservation", tol - worst, series.records.len() as u64, &series.config_digest)
}

/// Fit over `[T/5, T]`, `T` the last sample time.
pub fn late_window_fit(series: &ObservableSeries) -> Option<PowerLawFit> {
    let t_end = series.records.last()?.time;
    fit_power_law(&series.times(), &series.energies(), (0.2 * t_end, t_end)).ok()
}

pub fn haff_exponent_report(series: &ObservableSeries) -> (BoundReport, Option<PowerLawFit>) {
    let fit = late_window_fit(series);
    let margin = fit.as_ref().map_or(f64::NEG_INFINITY, |f| HAFF_EXPONENT_TOLERANCE - (f.exponent - HAFF_EXPONENT).abs());
    let n = fit.as_ref().map_or(0, |f| f.samples as u64);
    (report("haff.exponent", margin, n, &series.config_digest), fit)
}

/// Every species' velocity variance shrinks by `CONCENTRATION_FACTOR`; margin is
/// the smallest `log10(var(0)/var(T)) - 1`.
pub fn concentration_report(series: &ObservableSeries) -> BoundReport {
    let first = &series.records[0];
    let last = series.records.last().expect("nonempty series");
    let margin = first
        .variance_per_species
        .iter()
        .zip(&last.variance_per_species)
        .map(|(a, b)| (a / b).log10() - CONCENTRATION_FACTOR.log10())
        .fold(f64::INFINITY, f64::min);
    report("haff.concentration", margin, 2, &series.config_digest)
}

/// Relative Monte Carlo standard error of `Y^3` in an ensemble.
pub fn moment_relative_error(ens: &Ensemble) -> f64 {
    let mut mean = 0.0;
    let mut var = 0.0;
    for sp in &ens.species {
        let vals: Vec<f64> = sp.velocities.iter().map(|v| (1.0 + sp.mass * v.norm_sq()).powf(1.5)).collect();
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let s2 = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        mean += sp.weight * n * m;
        var += (sp.weight * n).powi(2) * s2 / n;
    }
    var.sqrt() / mean
}

/// Fitted moment constant for `Y^3`, using `psi = (1 + x)^{3/2} - 1` on every channel.
pub fn fitted_moment_constants(config: &SimConfig, seed: u64) -> Result<MomentConstants, String> {
    let psi = PsiSpec::new(PsiKind::ShiftedPower, 1.5).expect("p > 1");
    let masses = config.masses();
    let mut pairs = Vec::new();
    for i in 0..masses.len() {
        for j in i..masses.len() {
            pairs.push(crate::kinematics::SpeciesPair::new(masses[i], masses[j], config.kernel.e).map_err(|e| e.to_string())?);
        }
    }
    let k_s = fit_moment_constant(&psi, &pairs, &config.kernel.spec().b, MOMENT_FIT_SAMPLES, &mut aux_stream(seed, 40))
        .map_err(|e| e.to_string())?;
    Ok(MomentConstants { k_s, a_s: psi.a_const() })
}

/// `Y^3(t) <= max{Y^3(0) (1 + 3 rel_err), ceiling}` at every sample, and
/// windowed means of `Y^3` non-increasing once `E` has fallen below `E(0)/e`.
pub fn moment_reports(
    series: &ObservableSeries,
    config: &SimConfig,
    rel_err: f64,
    constants: &MomentConstants,
) -> Vec<BoundReport> {
    let digest = &series.config_digest;
    let ys: Vec<f64> = series.records.iter().filter_map(|r| r.y(3.0)).collect();
    if ys.len() != series.records.len() || ys.is_empty() {
        return vec![report("envelopes.moment_ceiling", f64::NEG_INFINITY, 0, digest)];
    }
    let y0 = ys[0];
    let ceiling = moment_ceiling(y0, 3.0, constants, &config.masses()).unwrap_or(f64::NAN);
    let cap = (y0 * (1.0 + MC_SIGMAS * rel_err)).max(ceiling);
    let margin = ys.iter().map(|y| (cap - y) / y0).fold(f64::INFINITY, f64::min);
    let mut out = vec![report("envelopes.moment_ceiling", margin, ys.len() as u64, digest)];

    let e0 = series.records[0].energy;
    let start = series.records.iter().position(|r| r.energy <= e0 / std::f64::consts::E).unwrap_or(ys.len());
    let tail = &ys[start..];
    let w = 5;
    let means: Vec<f64> = tail.chunks(w).filter(|c| c.len() == w).map(|c| c.iter().sum::<f64>() / w as f64).collect();
    let mono = means
        .windows(2)
        .map(|p| (p[0] * (1.0 + MC_SIGMAS * rel_err) - p[1]) / y0)
        .fold(if means.len() >= 2 { f64::INFINITY } else { f64::NEG_INFINITY }, f64::min);
    out.push(report("envelopes.moment_eventually_nonincreasing", mono, means.len() as u64, digest));
    out
}

/// Entropy growth bound, energy floor from `boldH`, and the logarithmic floor
/// on `int sqrt(E)` with `(a, b)` derived from the measured series.
pub fn entropy_reports(series: &ObservableSeries, config: &SimConfig) -> Vec<BoundReport> {
    let digest = &series.config_digest;
    let recs: Vec<_> = series.records.iter().filter(|r| r.entropy.is_some() && r.bold_h.is_some()).collect();
    let names = ["entropy.growth_bound", "entropy.energy_floor", "entropy.log_integral_floor"];
    if recs.len() != series.records.len() || recs.is_empty() {
        return names.iter().map(|n| report(n, f64::NEG_INFINITY, recs.len() as u64, digest)).collect();
    }
    let t = series.times();
    let e = series.energies();
    let masses = config.masses();
    let ke = config.kernel.e;
    let h: Vec<f64> = recs.iter().map(|r| r.entropy.unwrap()).collect();
    let bold: Vec<f64> = recs.iter().map(|r| r.bold_h.unwrap()).collect();
    let n = recs.len() as u64;

    let bound = entropy_growth_bound(&t, &e, h[0], ke, &masses);
    let growth = h.iter().zip(&bound).map(|(h, b)| b + ENTROPY_BAND - h).fold(f64::INFINITY, f64::min);

    let floor = e
        .iter()
        .zip(&bold)
        .map(|(e, b)| (e - energy_lower_from_entropy(*b, &masses)) / e)
        .fold(f64::INFINITY, f64::min);

    let integral = sqrt_energy_integral(&t, &e);
    let rate = entropy_growth_rate(ke, &masses);
    let k1 = bold.iter().zip(&integral).map(|(b, i)| b - rate * i).fold(f64::NEG_INFINITY, f64::max);
    let (a, b) = haff_floor_constants(k1, ke, &masses);
    let log_floor = t
        .iter()
        .zip(&integral)
        .map(|(t, i)| match log_integral_floor(a, b, *t) {
            Ok(f) => (i - f) / integral.last().unwrap().max(f64::MIN_POSITIVE),
            Err(_) => f64::NEG_INFINITY,
        })
        .fold(f64::INFINITY, f64::min);

    vec![report(names[0], growth, n, digest), report(names[1], floor, n, digest), report(names[2], log_floor, n, digest)]
}
