//! Pointwise Povzner decomposition `q = p - n` for convex test functions of
//! the reduced energies `x = m_i |v|^2`, `y = m_j |v_*|^2`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::BoundsError;
use crate::kernels::AngularSection;
use crate::kinematics::{post_collision_sigma, KinematicsError, SpeciesPair};
use crate::quadrature::SphereRule;
use crate::vector::Vec3;

/// Absolute slack of the campaign inequalities, applied relative to
/// `max(1, psi(x + y))` so that large-exponent samples are not judged on
/// rounding noise.
pub const POVZNER_SLACK: f64 = 1e-10;

/// Safety factor applied to the fitted moment constant.
pub const K_FIT_SAFETY: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiKind {
    /// `psi(x) = x^p`
    Power,
    /// `psi(x) = (1 + x)^p - 1`
    ShiftedPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PsiSpec {
    pub kind: PsiKind,
    pub p: f64,
}

impl PsiSpec {
    pub fn new(kind: PsiKind, p: f64) -> Result<Self, BoundsError> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(BoundsError::Domain(format!("psi exponent must exceed 1 (got {p})")));
        }
        Ok(Self { kind, p })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.kind {
            PsiKind::Power => x.powf(self.p),
            PsiKind::ShiftedPower => (x.ln_1p() * self.p).exp_m1(),
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        match self.kind {
            PsiKind::Power => self.p * x.powf(self.p - 1.0),
            PsiKind::ShiftedPower => self.p * (1.0 + x).powf(self.p - 1.0),
        }
    }

    pub fn d2(&self, x: f64) -> f64 {
        let c = self.p * (self.p - 1.0);
        match self.kind {
            PsiKind::Power => c * x.powf(self.p - 2.0),
            PsiKind::ShiftedPower => c * (1.0 + x).powf(self.p - 2.0),
        }
    }

    /// `psi'(a x) <= eta1(a) psi'(x)` for `a > 1`. Both kinds share `a^{p-1}`.
    pub fn eta1(&self, alpha: f64) -> f64 {
        alpha.powf(self.p - 1.0)
    }

    /// `psi''(a x) <= eta2(a) psi''(x)` for `a > 1`. Both kinds share `a^{p-2}`;
    /// for the shifted kind with `p < 2` this is not a true upper bound.
    pub fn eta2(&self, alpha: f64) -> f64 {
        alpha.powf(self.p - 2.0)
    }

    /// `A = eta1(2)`.
    pub fn a_const(&self) -> f64 {
        self.eta1(2.0)
    }

    /// `b = (2 eta2(2))^{-1}`.
    pub fn b_const(&self) -> f64 {
        1.0 / (2.0 * self.eta2(2.0))
    }
}

/// `lambda = |z|` for `z = beta sigma + (1 - beta) nu`, `beta = (1 + e)/2`, as a
/// function of `cos chi = nu.z/|z|` (law of cosines). Lies in `[e, 1]`.
pub fn lambda_of_chi(e: f64, cos_chi: f64) -> f64 {
    let beta = 0.5 * (1.0 + e);
    let a = 1.0 - beta;
    a * cos_chi + (a * a * (cos_chi * cos_chi - 1.0) + beta * beta).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PovznerTerms {
    pub q: f64,
    pub p_term: f64,
    pub n_term: f64,
    pub kappa: f64,
    /// `m_i |v|^2`
    pub x: f64,
    /// `m_j |v_*|^2`
    pub y: f64,
    pub lambda: f64,
}

pub fn povzner_terms(
    v: &Vec3,
    v_star: &Vec3,
    sigma: &Vec3,
    pair: &SpeciesPair,
    psi: &PsiSpec,
) -> Result<PovznerTerms, KinematicsError> {
    let out = post_collision_sigma(v, v_star, sigma, pair)?;
    let x = pair.m_i * v.norm_sq();
    let y = pair.m_j * v_star.norm_sq();
    let xp = pair.m_i * out.v_prime.norm_sq();
    let yp = pair.m_j * out.v_star_prime.norm_sq();
    let q = psi.eval(xp) + psi.eval(yp) - psi.eval(x) - psi.eval(y);
    let p_term = psi.eval(x + y) - psi.eval(x) - psi.eval(y);
    let n_term = p_term - q;

    let u = *v - *v_star;
    let nu = u.normalized().unwrap_or(*sigma);
    let beta = 0.5 * (1.0 + pair.e);
    let z = *sigma * beta + nu * (1.0 - beta);
    let lambda = z.norm();
    let w = *v * pair.m_i + *v_star * pair.m_j;
    let sin_sq_mu = match (w.normalized(), z.normalized()) {
        (Some(wh), Some(om)) => (1.0 - wh.dot(&om).powi(2)).max(0.0),
        _ => 1.0,
    };
    let m = pair.total_mass();
    let kappa = psi.b_const() * pair.m_i * pair.m_j / (m * m) * lambda.powi(4)
        / psi.eta2(lambda.powi(-2))
        * sin_sq_mu;
    Ok(PovznerTerms { q, p_term, n_term, kappa, x, y, lambda })
}

/// `A (x psi'(y) + y psi'(x))`
pub fn p_bound(psi: &PsiSpec, x: f64, y: f64) -> f64 {
    psi.a_const() * (x * psi.d1(y) + y * psi.d1(x))
}

/// `kappa (x + y)^2 psi''(x + y)`
pub fn n_bound(psi: &PsiSpec, kappa: f64, x: f64, y: f64) -> f64 {
    let s = x + y;
    if s == 0.0 {
        return 0.0;
    }
    kappa * s * s * psi.d2(s)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PovznerReport {
    pub samples: u64,
    pub p_violations: u64,
    pub n_violations: u64,
    /// Smallest `(bound - p_term) / scale` seen.
    pub p_margin: f64,
    /// Smallest `(n_term - bound) / scale` seen.
    pub n_margin: f64,
    /// Largest `|q - (p_term - n_term)| / scale` seen.
    pub identity_residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl PovznerReport {
    pub fn passed(&self) -> bool {
        self.p_violations == 0 && self.n_violations == 0
    }

    pub fn margin(&self) -> f64 {
        self.p_margin.min(self.n_margin)
    }
}

/// Random collision with masses in `[0.1, 10]` (log-uniform), `e` in `(0, 1]`,
/// Gaussian velocities at independent log-uniform scales in `[0.01, 10]`, and
/// uniform `sigma`.
pub fn random_collision<R: Rng + ?Sized>(rng: &mut R) -> (Vec3, Vec3, Vec3, SpeciesPair) {
    let log_uniform = |rng: &mut R, lo: f64, hi: f64| (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp();
    let m_i = log_uniform(rng, 0.1, 10.0);
    let m_j = log_uniform(rng, 0.1, 10.0);
    let e = 1.0 - rng.random::<f64>();
    let gauss = |rng: &mut R, scale: f64| {
        Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        ) * scale
    };
    let sv = log_uniform(rng, 0.01, 10.0);
    let v = gauss(rng, sv);
    let ss = log_uniform(rng, 0.01, 10.0);
    let v_star = gauss(rng, ss);
    let sigma = loop {
        if let Some(s) = gauss(rng, 1.0).normalized() {
            break s;
        }
    };
    let pair = SpeciesPair::new(m_i, m_j, e).expect("sampled parameters are valid");
    (v, v_star, sigma, pair)
}

/// Checks `p <= A (x psi'(y) + y psi'(x))` and `n >= kappa (x+y)^2 psi''(x+y)`
/// on `sample_count` random collisions.
pub fn povzner_check<R: Rng + ?Sized>(sample_count: u64, psi: &PsiSpec, rng: &mut R) -> PovznerReport {
    let mut rep = PovznerReport {
        p_margin: f64::INFINITY,
        n_margin: f64::INFINITY,
        lambda_min: f64::INFINITY,
        lambda_max: f64::NEG_INFINITY,
        ..Default::default()
    };
    for _ in 0..sample_count {
        let (v, v_star, sigma, pair) = random_collision(rng);
        let t = povzner_terms(&v, &v_star, &sigma, &pair, psi).expect("sampled sigma is a unit vector");
        let scale = psi.eval(t.x + t.y).abs().max(1.0);
        let pm = (p_bound(psi, t.x, t.y) - t.p_term) / scale;
        let nm = (t.n_term - n_bound(psi, t.kappa, t.x, t.y)) / scale;
        rep.p_violations += u64::from(pm < -POVZNER_SLACK);
        rep.n_violations += u64::from(nm < -POVZNER_SLACK);
        rep.p_margin = rep.p_margin.min(pm);
        rep.n_margin = rep.n_margin.min(nm);
        rep.identity_residual = rep.identity_residual.max((t.q - (t.p_term - t.n_term)).abs() / scale);
        rep.lambda_min = rep.lambda_min.min(t.lambda);
        rep.lambda_max = rep.lambda_max.max(t.lambda);
        rep.samples += 1;
    }
    rep
}

/// `int q(sigma) b(nu.sigma) d sigma` on a fixed sphere rule.
pub fn qbar_sphere_with(
    v: &Vec3,
    v_star: &Vec3,
    pair: &SpeciesPair,
    psi: &PsiSpec,
    b: &AngularSection,
    rule: &SphereRule,
) -> f64 {
    let nu = (*v - *v_star).normalized();
    rule.integrate(|sigma| {
        let cos = nu.map_or(1.0, |n| n.dot(sigma).clamp(-1.0, 1.0));
        let t = povzner_terms(v, v_star, sigma, pair, psi).expect("rule nodes are unit vectors");
        t.q * b.eval(cos)
    })
}

/// [`qbar_sphere_with`] on the 26-point Lebedev rule.
pub fn qbar_sphere(v: &Vec3, v_star: &Vec3, pair: &SpeciesPair, psi: &PsiSpec, b: &AngularSection) -> f64 {
    qbar_sphere_with(v, v_star, pair, psi, b, &SphereRule::lebedev26())
}

/// Fitted constant `k` of the averaged inequality
/// `qbar <= -k X^2 psi''(X) + A (int b) (x psi'(y) + y psi'(x))`, `X = x + y`:
/// `K_FIT_SAFETY` times the infimum over `samples` random velocity pairs per
/// channel of the ratio that makes it an equality.
pub fn fit_moment_constant<R: Rng + ?Sized>(
    psi: &PsiSpec,
    pairs: &[SpeciesPair],
    b: &AngularSection,
    samples: usize,
    rng: &mut R,
) -> Result<f64, BoundsError> {
    let rule = SphereRule::lebedev26();
    let b_mass = rule.integrate(|s| b.eval(s[0]));
    let mut inf = f64::INFINITY;
    for pair in pairs {
        for _ in 0..samples {
            let (v, v_star, _, _) = random_collision(rng);
            let (x, y) = (pair.m_i * v.norm_sq(), pair.m_j * v_star.norm_sq());
            let big_x = x + y;
            let qbar = qbar_sphere_with(&v, &v_star, pair, psi, b, &rule);
            let ratio = (b_mass * p_bound(psi, x, y) - qbar) / (big_x * big_x * psi.d2(big_x));
            inf = inf.min(ratio);
        }
    }
    if !(inf > 0.0 && inf.is_finite()) {
        return Err(BoundsError::Domain(format!("no positive moment constant fits the samples (inf = {inf})")));
    }
    Ok(K_FIT_SAFETY * inf)
}
