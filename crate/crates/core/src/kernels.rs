//! Variable-hard-sphere kernels `B = |u|^lambda b(cos theta) E^gamma`.
//!
//! Angular integrals always integrate `b` explicitly over the sphere; `b` is
//! never assumed normalized. `theta` is the angle between the new relative
//! velocity direction `sigma` and the old one.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::SpeciesPair;
use crate::quadrature::{integrate_adaptive, sphere_area};
use crate::vector::{orthonormal_complement, Vec3};

pub const TAU_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("lambda must lie in [0, 1] (got {0})")]
    Lambda(f64),
    #[error("gamma must be finite (got {0})")]
    Gamma(f64),
    #[error("angular cross-section must be positive on [-1, 1] (minimum {0})")]
    NonPositiveSection(f64),
    #[error("cos_theta = {0} outside [-1, 1]")]
    CosTheta(f64),
    #[error("energy must be positive when gamma != 0 (got {0})")]
    Energy(f64),
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("unknown angular preset {0:?}")]
    Preset(String),
    #[error("preset {preset} takes {expected} coefficients, got {got}")]
    Coefficients { preset: &'static str, expected: usize, got: usize },
}

/// Angular cross-section, a polynomial in `x = cos theta` of degree at most 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", content = "coefficients", rename_all = "lowercase")]
pub enum AngularSection {
    /// `b(x) = c0`
    Const([f64; 1]),
    /// `b(x) = c0 + c1 x`
    Linear([f64; 2]),
    /// `b(x) = c0 + c1 x + c2 x^2`
    Quadratic([f64; 3]),
}

impl AngularSection {
    pub fn from_preset(name: &str, coefficients: &[f64]) -> Result<Self, KernelError> {
        let take = |preset: &'static str, n: usize| -> Result<Vec<f64>, KernelError> {
            if coefficients.len() == n {
                Ok(coefficients.to_vec())
            } else {
                Err(KernelError::Coefficients { preset, expected: n, got: coefficients.len() })
            }
        };
        Ok(match name {
            "const" => {
                let c = take("const", 1)?;
                Self::Const([c[0]])
            }
            "linear" => {
                let c = take("linear", 2)?;
                Self::Linear([c[0], c[1]])
            }
            "quadratic" => {
                let c = take("quadratic", 3)?;
                Self::Quadratic([c[0], c[1], c[2]])
            }
            other => return Err(KernelError::Preset(other.to_string())),
        })
    }

    pub fn preset_name(&self) -> &'static str {
        match self {
            Self::Const(_) => "const",
            Self::Linear(_) => "linear",
            Self::Quadratic(_) => "quadratic",
        }
    }

    pub fn coefficients(&self) -> [f64; 3] {
        match *self {
            Self::Const([a]) => [a, 0.0, 0.0],
            Self::Linear([a, b]) => [a, b, 0.0],
            Self::Quadratic([a, b, c]) => [a, b, c],
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let [a, b, c] = self.coefficients();
        a + x * (b + x * c)
    }

    pub fn is_constant(&self) -> bool {
        let [_, b, c] = self.coefficients();
        b == 0.0 && c == 0.0
    }

    /// `(min, max)` of `b` on `[-1, 1]`.
    pub fn bounds(&self) -> (f64, f64) {
        let [_, b, c] = self.coefficients();
        let mut pts = vec![-1.0, 1.0];
        if c != 0.0 {
            let v = -b / (2.0 * c);
            if (-1.0..=1.0).contains(&v) {
                pts.push(v);
            }
        }
        let vals: Vec<f64> = pts.iter().map(|&x| self.eval(x)).collect();
        (vals.iter().copied().fold(f64::INFINITY, f64::min), vals.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Integral over `S^{d-1}` of `g(cos theta) b(cos theta)`, with `theta` measured
/// from a fixed pole.
pub fn angular_integral<G: Fn(f64) -> f64>(
    b: &AngularSection,
    d: usize,
    g: G,
) -> Result<f64, KernelError> {
    match d {
        1 => Ok(g(1.0) * b.eval(1.0) + g(-1.0) * b.eval(-1.0)),
        2 | 3 => {
            let ring = sphere_area(d - 1);
            let (v, _) = integrate_adaptive(
                |t: f64| {
                    let x = t.cos();
                    g(x) * b.eval(x) * t.sin().powi(d as i32 - 2)
                },
                0.0,
                std::f64::consts::PI,
                TAU_TOLERANCE * 1e-2,
            );
            Ok(ring * v)
        }
        _ => Err(KernelError::Dimension(d)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub lambda: f64,
    pub gamma: f64,
    pub b: AngularSection,
    pub beta1: f64,
    pub beta2: f64,
}

impl KernelSpec {
    pub fn new(lambda: f64, gamma: f64, b: AngularSection) -> Result<Self, KernelError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(KernelError::Lambda(lambda));
        }
        if !gamma.is_finite() {
            return Err(KernelError::Gamma(gamma));
        }
        let (beta1, beta2) = b.bounds();
        if !(beta1 > 0.0 && beta2.is_finite()) {
            return Err(KernelError::NonPositiveSection(beta1));
        }
        Ok(Self { lambda, gamma, b, beta1, beta2 })
    }

    pub fn hard_spheres(b0: f64) -> Self {
        Self::new(1.0, 0.0, AngularSection::Const([b0])).expect("positive constant section")
    }

    pub fn maxwellian(b0: f64) -> Self {
        Self::new(0.0, 0.0, AngularSection::Const([b0])).expect("positive constant section")
    }

    /// `E^gamma`, with the convention `E^0 = 1` even for `E = 0`.
    #[inline]
    pub fn energy_factor(&self, energy: f64) -> f64 {
        if self.gamma == 0.0 {
            1.0
        } else {
            energy.powf(self.gamma)
        }
    }

    #[inline]
    pub fn speed_factor(&self, u_norm: f64) -> f64 {
        if self.lambda == 0.0 {
            1.0
        } else if self.lambda == 1.0 {
            u_norm
        } else {
            u_norm.powf(self.lambda)
        }
    }

    /// Mean of `b` over `S^{d-1}`.
    pub fn mean_section(&self, d: usize) -> Result<f64, KernelError> {
        Ok(angular_integral(&self.b, d, |_| 1.0)? / sphere_area(d))
    }
}

pub fn eval_kernel(
    u_norm: f64,
    cos_theta: f64,
    energy: f64,
    spec: &KernelSpec,
) -> Result<f64, KernelError> {
    if !(-1.0..=1.0).contains(&cos_theta) {
        return Err(KernelError::CosTheta(cos_theta));
    }
    if spec.gamma != 0.0 && !(energy > 0.0) {
        return Err(KernelError::Energy(energy));
    }
    Ok(spec.speed_factor(u_norm) * spec.b.eval(cos_theta) * spec.energy_factor(energy))
}

/// Angular constant of the per-pair dissipation rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationConstant {
    pub tau: f64,
    pub d: usize,
}

/// `tau = int_{S^{d-1}} (1 - cos theta) b(cos theta) d sigma`.
///
/// This is the constant for which the sigma-averaged energy loss of a pair
/// equals `tau mu (1-e^2)/2 |u|^{lambda+2} E^gamma`.
pub fn tau_constant(b: &AngularSection, d: usize) -> Result<DissipationConstant, KernelError> {
    let tau = angular_integral(b, d, |x| 1.0 - x)?;
    Ok(DissipationConstant { tau, d })
}

pub fn dissipation_rate_delta(
    u_norm: f64,
    energy: f64,
    pair: &SpeciesPair,
    spec: &KernelSpec,
    tau: &DissipationConstant,
) -> f64 {
    if pair.e == 1.0 || u_norm == 0.0 {
        return 0.0;
    }
    tau.tau
        * pair.reduced_mass()
        * 0.5
        * (1.0 - pair.e * pair.e)
        * spec.speed_factor(u_norm)
        * u_norm
        * u_norm
        * spec.energy_factor(energy)
}

/// Kernel in the impulse-direction variable: `2^{d-1} |nu.omega|^{d-2} b(cos theta)`
/// with `cos theta = 1 - 2 (nu.omega)^2`. Integrating against `d omega` over the
/// whole sphere covers every `sigma` twice, which the Jacobian already halves.
pub fn omega_section(b: &AngularSection, d: usize, nu_dot_omega: f64) -> f64 {
    let c = nu_dot_omega.abs();
    let jac = match d {
        1 => 1.0,
        2 => 2.0,
        _ => 4.0 * c,
    };
    jac * b.eval(1.0 - 2.0 * c * c)
}

/// Draws `cos theta` with density proportional to `b(x) (1-x^2)^{(d-3)/2}`,
/// the law of `nu.sigma` when `sigma` has density `b` on `S^{d-1}`.
pub fn sample_cos_theta<R: Rng + ?Sized>(spec: &KernelSpec, d: usize, rng: &mut R) -> f64 {
    loop {
        let x = match d {
            1 => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            2 => (std::f64::consts::TAU * rng.random::<f64>()).cos(),
            _ => 2.0 * rng.random::<f64>() - 1.0,
        };
        if spec.b.is_constant() || rng.random::<f64>() * spec.beta2 < spec.b.eval(x) {
            return x;
        }
    }
}

/// Unit vector `sigma` with density proportional to `b(nu.sigma)` on `S^{d-1}`,
/// built around the unit vector `nu`. Components beyond `d` are zero.
pub fn sample_sigma_around<R: Rng + ?Sized>(
    spec: &KernelSpec,
    d: usize,
    nu: &Vec3,
    rng: &mut R,
) -> Vec3 {
    let x = sample_cos_theta(spec, d, rng);
    match d {
        1 => *nu * x,
        2 => {
            // nu lies in the xy-plane; pick either side of it with equal odds.
            let perp = Vec3::new(-nu[1], nu[0], 0.0);
            let s = (1.0 - x * x).max(0.0).sqrt();
            let s = if rng.random::<bool>() { s } else { -s };
            *nu * x + perp * s
        }
        _ => {
            let (a, b) = orthonormal_complement(nu);
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            let s = (1.0 - x * x).max(0.0).sqrt();
            *nu * x + a * (s * phi.cos()) + b * (s * phi.sin())
        }
    }
}

/// Unit `sigma` with density proportional to `b(cos theta)`, measured from the
/// first coordinate axis.
pub fn sample_angular_direction<R: Rng + ?Sized>(spec: &KernelSpec, d: usize, rng: &mut R) -> Vec3 {
    sample_sigma_around(spec, d, &Vec3::new(1.0, 0.0, 0.0), rng)
}

/// `beta2 |S^{d-1}| u_max^lambda E^gamma`, an upper bound for `int B d sigma`
/// over all relative speeds up to `u_max`.
pub fn kernel_majorant(spec: &KernelSpec, d: usize, u_max: f64, energy: f64) -> f64 {
    spec.beta2 * sphere_area(d) * spec.speed_factor(u_max) * spec.energy_factor(energy)
}
