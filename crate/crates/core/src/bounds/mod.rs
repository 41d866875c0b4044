//! Closed-form envelopes and inequalities checked against simulation output.

pub mod fit;
pub mod povzner;

use serde::Serialize;
use thiserror::Error;

pub use fit::{fit_power_law, PowerLawFit};
pub use povzner::{
    fit_moment_constant, lambda_of_chi, n_bound, p_bound, povzner_check, povzner_terms, qbar_sphere,
    qbar_sphere_with, PovznerReport, PovznerTerms, PsiKind, PsiSpec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("{0}")]
    Domain(String),
}

/// Pass/fail evaluation of one inequality. `margin` is the smallest slack
/// observed (negative when violated).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub samples: u64,
    pub config_digest: String,
}

/// Data for the energy ODE `dE/dt = -C E^{gamma + 1 + lambda/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeSpec {
    pub e0: f64,
    pub c: f64,
    pub lambda: f64,
    pub gamma: f64,
}

/// Exact solution of `dE/dt = -C E^{1 + alpha}` with `alpha = gamma + lambda/2`.
pub fn energy_envelope(spec: &EnvelopeSpec, t: f64) -> f64 {
    let alpha = spec.gamma + 0.5 * spec.lambda;
    if alpha == 0.0 {
        spec.e0 * (-spec.c * t).exp()
    } else {
        (spec.e0.powf(-alpha) + alpha * spec.c * t).powf(-1.0 / alpha)
    }
}

/// `C_e = tau rho (1 - e^2) / (4 (m_i + m_j))`, with `rho` the total species mass.
pub fn envelope_constant(tau: f64, rho: f64, e: f64, m_i: f64, m_j: f64) -> f64 {
    tau * rho * (1.0 - e * e) / (4.0 * (m_i + m_j))
}

/// Cumulative trapezoid integral of `sqrt(E)` on the sample times.
pub fn sqrt_energy_integral(times: &[f64], energies: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            acc += 0.5 * (times[k] - times[k - 1]) * (energies[k].sqrt() + energies[k - 1].sqrt());
        }
        out.push(acc);
    }
    out
}

/// `2 (1 - e^2)/e^2 / min(m)`, the growth rate of the entropy bound per unit `int sqrt(E)`.
pub fn entropy_growth_rate(e: f64, masses: &[f64]) -> f64 {
    let a = 1.0 / masses.iter().copied().fold(f64::INFINITY, f64::min);
    2.0 * a * (1.0 - e * e) / (e * e)
}

/// `H(0) + 2 A (1-e^2)/e^2 int_0^t sqrt(E)` at every sample time, `A = 1/min m`.
pub fn entropy_growth_bound(times: &[f64], energies: &[f64], h0: f64, e: f64, masses: &[f64]) -> Vec<f64> {
    let rate = entropy_growth_rate(e, masses);
    sqrt_energy_integral(times, energies).into_iter().map(|i| h0 + rate * i).collect()
}

/// `K = (1/2) (3/(8 pi))^{2/3}`, the energy floor constant at `boldH = 0`.
pub fn energy_floor_constant() -> f64 {
    0.5 * (3.0 / (8.0 * std::f64::consts::PI)).powf(2.0 / 3.0)
}

/// `K exp(-(4/3) boldH (m_1 + m_2))`; with more species the mass sum runs over all of them.
pub fn energy_lower_from_entropy(bold_h: f64, masses: &[f64]) -> f64 {
    let m: f64 = masses.iter().sum();
    energy_floor_constant() * (-(4.0 / 3.0) * bold_h * m).exp()
}

/// `(1/b) log(1 + a b t)`.
pub fn log_integral_floor(a: f64, b: f64, t: f64) -> Result<f64, BoundsError> {
    if !(a > 0.0 && b > 0.0) {
        return Err(BoundsError::Domain(format!("a and b must be positive (a = {a}, b = {b})")));
    }
    Ok((a * b * t).ln_1p() / b)
}

/// Constants `(a, b)` of the logarithmic floor, from the entropy offset `k1`.
pub fn haff_floor_constants(k1: f64, e: f64, masses: &[f64]) -> (f64, f64) {
    let m: f64 = masses.iter().sum();
    let a = energy_floor_constant().sqrt() * (-(2.0 / 3.0) * m * k1).exp();
    let b = 8.0 * (1.0 - e * e) * m / (3.0 * e * e);
    (a, b)
}

/// Constants entering the moment ceiling for exponent `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentConstants {
    pub k_s: f64,
    pub a_s: f64,
}

/// `max{Y0, (K_ii/(2 k_s m_i))^s, (K_ij/(k_s (m_i + m_j)))^s}` over all species
/// and ordered pairs `i != j`, with `K_ii = 2 A_s m_i` and
/// `K_ij = A_s m_i m_j (m_i^{s-1} + m_j^{s-1})`.
pub fn moment_ceiling(y0: f64, s: f64, c: &MomentConstants, masses: &[f64]) -> Result<f64, BoundsError> {
    if !(c.k_s > 0.0) {
        return Err(BoundsError::Domain(format!("k_s must be positive (got {})", c.k_s)));
    }
    let mut ceiling = y0;
    for (i, &mi) in masses.iter().enumerate() {
        let kii = 2.0 * c.a_s * mi;
        ceiling = ceiling.max((kii / (2.0 * c.k_s * mi)).powf(s));
        for (j, &mj) in masses.iter().enumerate() {
            if i != j {
                let kij = c.a_s * mi * mj * (mi.powf(s - 1.0) + mj.powf(s - 1.0));
                ceiling = ceiling.max((kij / (c.k_s * (mi + mj))).powf(s));
            }
        }
    }
    Ok(ceiling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn rk4(spec: &EnvelopeSpec, t_end: f64, h: f64) -> Vec<(f64, f64)> {
        let alpha = spec.gamma + 0.5 * spec.lambda;
        let f = |e: f64| -spec.c * e.powf(1.0 + alpha);
        let mut out = vec![(0.0, spec.e0)];
        let (mut t, mut e) = (0.0, spec.e0);
        let n = (t_end / h).round() as usize;
        for k in 1..=n {
            let k1 = f(e);
            let k2 = f(e + 0.5 * h * k1);
            let k3 = f(e + 0.5 * h * k2);
            let k4 = f(e + h * k3);
            e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t = k as f64 * h;
            if k % 1000 == 0 {
                out.push((t, e));
            }
        }
        let _ = t;
        out
    }

    #[test]
    fn envelope_examples() {
        let mm = EnvelopeSpec { e0: 2.0, c: 0.5, lambda: 0.0, gamma: 0.0 };
        assert_relative_eq!(energy_envelope(&mm, 2.0), 2.0 / E, max_relative = 1e-15);
        let hs = EnvelopeSpec { e0: 1.0, c: 2.0, lambda: 1.0, gamma: 0.0 };
        assert_relative_eq!(energy_envelope(&hs, 1.0), 0.25, max_relative = 1e-15);
        let g1 = EnvelopeSpec { e0: 3.0, c: 0.2, lambda: 0.0, gamma: 1.0 };
        assert_relative_eq!(energy_envelope(&g1, 4.0), 3.0 / (1.0 + 0.2 * 3.0 * 4.0), max_relative = 1e-14);
    }

    #[test]
    fn envelope_matches_rk4() {
        let spec = EnvelopeSpec { e0: 1.7, c: 0.8, lambda: 1.0, gamma: 0.0 };
        for (t, e) in rk4(&spec, 10.0, 1e-4) {
            let exact = energy_envelope(&spec, t);
            assert!(((e - exact) / exact).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn entropy_bound_examples() {
        let t: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let elastic = entropy_growth_bound(&t, &vec![2.0; t.len()], -1.5, 1.0, &[1.0, 2.0]);
        assert!(elastic.iter().all(|&h| h == -1.5));
        let flat = entropy_growth_bound(&t, &vec![4.0; t.len()], 0.0, 0.5, &[1.0, 2.0]);
        // slope 2 * 1 * 3 * 2 = 12
        assert_relative_eq!(flat[100], 12.0 * 10.0, max_relative = 1e-12);
        let fine: Vec<f64> = (0..=20_000).map(|k| k as f64 * 1e-3).collect();
        let haff: Vec<f64> = fine.iter().map(|t| (1.0 + t).powi(-2)).collect();
        let b = entropy_growth_bound(&fine, &haff, 0.3, 0.5, &[2.0, 4.0]);
        let rate = 2.0 * 0.5 * 3.0;
        assert!((b[20_000] - (0.3 + rate * 21f64.ln())).abs() < 1e-6);
    }

    #[test]
    fn energy_floor_examples() {
        // 0.5 * (3 / (8 pi))^(2/3) = 0.121215..., quoted elsewhere truncated to 0.1211.
        assert!((energy_lower_from_entropy(0.0, &[1.0, 1.0]) - 0.121_215_344_755).abs() < 1e-11);
        assert!((energy_lower_from_entropy(0.0, &[1.0, 1.0]) - 0.1211).abs() < 2e-4);
        let base = energy_lower_from_entropy(0.4, &[1.0, 2.0]);
        let shifted = energy_lower_from_entropy(0.9, &[1.0, 2.0]);
        assert_relative_eq!(shifted / base, (-(4.0 / 3.0) * 3.0 * 0.5f64).exp(), max_relative = 1e-13);
        assert!((energy_lower_from_entropy(1.0, &[1.0, 1.0]) - 0.00842).abs() < 1e-5);
    }

    #[test]
    fn log_floor_examples() {
        assert_eq!(log_integral_floor(0.3, 2.0, 0.0).unwrap(), 0.0);
        let (a, b) = (0.4, 1.5);
        assert_relative_eq!(log_integral_floor(a, b, (E - 1.0) / (a * b)).unwrap(), 1.0 / b, max_relative = 1e-14);
        let h = 1e-7;
        assert!(((log_integral_floor(a, b, h).unwrap() / h) - a).abs() < 1e-6);
        assert!(log_integral_floor(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn moment_ceiling_examples() {
        let c = MomentConstants { k_s: 1.0, a_s: 4.0 };
        assert_eq!(moment_ceiling(1e9, 3.0, &c, &[1.0, 1.0]).unwrap(), 1e9);
        // Equal unit masses: both terms are (2 A / 2)^3.
        assert_relative_eq!(moment_ceiling(1.0, 3.0, &c, &[1.0, 1.0]).unwrap(), 64.0);
        let c2 = MomentConstants { k_s: 2.0, a_s: 4.0 };
        assert_relative_eq!(moment_ceiling(1.0, 3.0, &c2, &[1.0, 1.0]).unwrap(), 8.0);
        assert!(moment_ceiling(1.0, 3.0, &MomentConstants { k_s: 0.0, a_s: 1.0 }, &[1.0]).is_err());
    }
}
