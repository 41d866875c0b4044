//! Binary inelastic collisions between particles of unequal mass.
//!
//! Three equivalent parametrizations of the post-collisional pair are
//! provided: a unit vector `sigma` giving the direction of the new relative
//! velocity, a unit vector `omega` along which the impulse acts, and a vector
//! `z` in the closed unit ball that absorbs the restitution coefficient.
//!
//! Energies follow the `m |v|^2` convention throughout (no factor one half).

use thiserror::Error;

use crate::vector::Vec3;

/// Tolerance on `| |x| - 1 |` for unit-vector arguments.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("{name} must be a unit vector (|{name}| = {norm})")]
    NotUnit { name: &'static str, norm: f64 },
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    #[error("masses must be positive (got {m_i}, {m_j})")]
    Mass { m_i: f64, m_j: f64 },
    #[error("restitution coefficient must lie in [0, 1] (got {0})")]
    Restitution(f64),
    #[error("the pre-collisional map is undefined for e = 0")]
    ZeroRestitution,
    #[error("relative velocity must be nonzero")]
    ZeroRelativeVelocity,
    #[error("z must lie in the closed unit ball (|z| = {0})")]
    OutsideUnitBall(f64),
}

/// Masses and restitution coefficient of one interaction channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeciesPair {
    pub m_i: f64,
    pub m_j: f64,
    pub e: f64,
}

impl SpeciesPair {
    pub fn new(m_i: f64, m_j: f64, e: f64) -> Result<Self, KinematicsError> {
        if !(m_i > 0.0 && m_j > 0.0 && m_i.is_finite() && m_j.is_finite()) {
            return Err(KinematicsError::Mass { m_i, m_j });
        }
        if !(0.0..=1.0).contains(&e) {
            return Err(KinematicsError::Restitution(e));
        }
        Ok(Self { m_i, m_j, e })
    }

    #[inline]
    pub fn total_mass(&self) -> f64 {
        self.m_i + self.m_j
    }

    #[inline]
    pub fn reduced_mass(&self) -> f64 {
        self.m_i * self.m_j / (self.m_i + self.m_j)
    }

    #[inline]
    fn center_of_mass(&self, v: &Vec3, v_star: &Vec3) -> Vec3 {
        (*v * self.m_i + *v_star * self.m_j) * (1.0 / self.total_mass())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionOutcome {
    pub v_prime: Vec3,
    pub v_star_prime: Vec3,
    /// `m_i|v'|^2 + m_j|v'_*|^2 - m_i|v|^2 - m_j|v_*|^2`, evaluated in closed form.
    pub delta_energy: f64,
}

impl CollisionOutcome {
    fn unchanged(v: &Vec3, v_star: &Vec3) -> Self {
        Self { v_prime: *v, v_star_prime: *v_star, delta_energy: 0.0 }
    }
}

fn check_finite(name: &'static str, x: &Vec3) -> Result<(), KinematicsError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(KinematicsError::NonFinite(name))
    }
}

fn check_unit(name: &'static str, x: &Vec3) -> Result<(), KinematicsError> {
    check_finite(name, x)?;
    let norm = x.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(KinematicsError::NotUnit { name, norm });
    }
    Ok(())
}

/// Energy change of a sigma-collision: `-mu (1-e^2)/2 (1 - nu.sigma) |u|^2`.
#[inline]
pub fn sigma_energy_change(pair: &SpeciesPair, u_sq: f64, nu_dot_sigma: f64) -> f64 {
    -pair.reduced_mass() * 0.5 * (1.0 - pair.e * pair.e) * (1.0 - nu_dot_sigma) * u_sq
}

/// Unchecked sigma-representation update used by the particle engine.
///
/// Returns the two new velocities and the energy change. `u = v - v_star`
/// must be nonzero.
#[inline]
pub(crate) fn apply_sigma(
    pair: &SpeciesPair,
    v: &Vec3,
    v_star: &Vec3,
    u: &Vec3,
    u_norm: f64,
    sigma: &Vec3,
) -> (Vec3, Vec3, f64) {
    let m = pair.total_mass();
    let cm = pair.center_of_mass(v, v_star);
    // New relative velocity: (1-e)/2 u + (1+e)/2 |u| sigma.
    let rel = *u * (0.5 * (1.0 - pair.e)) + *sigma * (0.5 * (1.0 + pair.e) * u_norm);
    let vp = cm + rel * (pair.m_j / m);
    let vsp = cm - rel * (pair.m_i / m);
    let de = sigma_energy_change(pair, u_norm * u_norm, u.dot(sigma) / u_norm);
    (vp, vsp, de)
}

pub fn post_collision_sigma(
    v: &Vec3,
    v_star: &Vec3,
    sigma: &Vec3,
    pair: &SpeciesPair,
) -> Result<CollisionOutcome, KinematicsError> {
    check_finite("v", v)?;
    check_finite("v_star", v_star)?;
    check_unit("sigma", sigma)?;
    let u = *v - *v_star;
    let u_norm = u.norm();
    if u_norm == 0.0 {
        return Ok(CollisionOutcome::unchanged(v, v_star));
    }
    let (v_prime, v_star_prime, delta_energy) = apply_sigma(pair, v, v_star, &u, u_norm, sigma);
    Ok(CollisionOutcome { v_prime, v_star_prime, delta_energy })
}

pub fn post_collision_omega(
    v: &Vec3,
    v_star: &Vec3,
    omega: &Vec3,
    pair: &SpeciesPair,
) -> Result<CollisionOutcome, KinematicsError> {
    check_finite("v", v)?;
    check_finite("v_star", v_star)?;
    check_unit("omega", omega)?;
    let u = *v - *v_star;
    let m = pair.total_mass();
    let u_omega = u.dot(omega);
    let impulse = *omega * ((1.0 + pair.e) * u_omega);
    Ok(CollisionOutcome {
        v_prime: *v - impulse * (pair.m_j / m),
        v_star_prime: *v_star + impulse * (pair.m_i / m),
        delta_energy: -pair.reduced_mass() * (1.0 - pair.e * pair.e) * u_omega * u_omega,
    })
}

/// Inverse of [`post_collision_omega`] at fixed `omega`: the velocities that
/// collide into `(v, v_star)`.
pub fn pre_collision_omega(
    v: &Vec3,
    v_star: &Vec3,
    omega: &Vec3,
    pair: &SpeciesPair,
) -> Result<(Vec3, Vec3), KinematicsError> {
    check_finite("v", v)?;
    check_finite("v_star", v_star)?;
    check_unit("omega", omega)?;
    if pair.e <= 0.0 {
        return Err(KinematicsError::ZeroRestitution);
    }
    let u = *v - *v_star;
    let m = pair.total_mass();
    let impulse = *omega * ((1.0 + pair.e) / pair.e * u.dot(omega));
    Ok((*v - impulse * (pair.m_j / m), *v_star + impulse * (pair.m_i / m)))
}

/// Converts an impulse direction into the equivalent sigma for relative velocity `g`.
pub fn sigma_from_omega(g: &Vec3, omega: &Vec3) -> Result<Vec3, KinematicsError> {
    check_finite("g", g)?;
    check_unit("omega", omega)?;
    let g_norm = g.norm();
    if g_norm == 0.0 {
        return Err(KinematicsError::ZeroRelativeVelocity);
    }
    Ok((*g - *omega * (2.0 * g.dot(omega))) * (1.0 / g_norm))
}

/// `z = (1-e)/2 u_hat + (1+e)/2 sigma`, the unit-ball parameter matching a sigma-collision.
pub fn z_from_sigma(u_hat: &Vec3, sigma: &Vec3, e: f64) -> Vec3 {
    *u_hat * (0.5 * (1.0 - e)) + *sigma * (0.5 * (1.0 + e))
}

pub fn post_collision_z(
    v: &Vec3,
    v_star: &Vec3,
    z: &Vec3,
    pair: &SpeciesPair,
) -> Result<CollisionOutcome, KinematicsError> {
    check_finite("v", v)?;
    check_finite("v_star", v_star)?;
    check_finite("z", z)?;
    let z_sq = z.norm_sq();
    if z_sq.sqrt() > 1.0 + UNIT_TOLERANCE {
        return Err(KinematicsError::OutsideUnitBall(z_sq.sqrt()));
    }
    let u = *v - *v_star;
    let u_norm = u.norm();
    if u_norm == 0.0 {
        return Ok(CollisionOutcome::unchanged(v, v_star));
    }
    let m = pair.total_mass();
    let cm = pair.center_of_mass(v, v_star);
    let rel = *z * u_norm;
    Ok(CollisionOutcome {
        v_prime: cm + rel * (pair.m_j / m),
        v_star_prime: cm - rel * (pair.m_i / m),
        delta_energy: pair.reduced_mass() * (z_sq - 1.0) * u_norm * u_norm,
    })
}

/// Centers and radii of the spheres that carry the post-collisional velocities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CenterOfMassPoints {
    /// Center of the sphere carrying `v'_*`.
    pub omega_plus: Vec3,
    /// Center of the sphere carrying `v'`.
    pub omega_minus: Vec3,
    pub r_plus: f64,
    pub r_minus: f64,
}

pub fn center_of_mass_points(
    v: &Vec3,
    v_star: &Vec3,
    pair: &SpeciesPair,
) -> Result<CenterOfMassPoints, KinematicsError> {
    check_finite("v", v)?;
    check_finite("v_star", v_star)?;
    let m = pair.total_mass();
    let u = *v - *v_star;
    let cm = pair.center_of_mass(v, v_star);
    let shift = u * (0.5 * (1.0 - pair.e));
    let radius = 0.5 * (1.0 + pair.e) * u.norm();
    Ok(CenterOfMassPoints {
        omega_plus: cm - shift * (pair.m_i / m),
        omega_minus: cm + shift * (pair.m_j / m),
        r_plus: pair.m_i / m * radius,
        r_minus: pair.m_j / m * radius,
    })
}

/// Jacobian of `(v, v_*) -> (v', v'_*)` at fixed omega. Equal to `e` for any masses.
pub fn collision_jacobian(pair: &SpeciesPair) -> f64 {
    pair.e
}

/// Velocity pairs reachable by a collision on the line.
///
/// Index 0 is the grazing branch (`sigma` along `u`, nothing happens); index 1
/// is the head-on branch, `v' = c - e m_j/(m_i+m_j) u` and
/// `v'_* = c + e m_i/(m_i+m_j) u` with `c` the center of mass.
pub fn one_d_outcomes(v: f64, v_star: f64, pair: &SpeciesPair) -> [(f64, f64); 2] {
    let m = pair.total_mass();
    let cm = (pair.m_i * v + pair.m_j * v_star) / m;
    let u = v - v_star;
    [(v, v_star), (cm - pair.e * pair.m_j / m * u, cm + pair.e * pair.m_i / m * u)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v3(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    fn assert_vec(a: Vec3, b: Vec3, tol: f64) {
        assert!(a.max_abs_diff(&b) <= tol, "{a:?} != {b:?}");
    }

    #[test]
    fn sigma_elastic_equal_mass_exchange() {
        let pair = SpeciesPair::new(1.0, 1.0, 1.0).unwrap();
        let out = post_collision_sigma(&v3(1., 0., 0.), &v3(-1., 0., 0.), &v3(0., 1., 0.), &pair).unwrap();
        assert_vec(out.v_prime, v3(0., 1., 0.), 1e-15);
        assert_vec(out.v_star_prime, v3(0., -1., 0.), 1e-15);
        assert_eq!(out.delta_energy, 0.0);
    }

    #[test]
    fn sigma_perfectly_inelastic_head_on() {
        let pair = SpeciesPair::new(1.0, 1.0, 0.0).unwrap();
        let out = post_collision_sigma(&v3(1., 0., 0.), &v3(-1., 0., 0.), &v3(-1., 0., 0.), &pair).unwrap();
        assert_vec(out.v_prime, Vec3::ZERO, 1e-15);
        assert_vec(out.v_star_prime, Vec3::ZERO, 1e-15);
        assert_abs_diff_eq!(out.delta_energy, -2.0, epsilon = 1e-15);
    }

    #[test]
    fn sigma_unequal_mass_hand_values() {
        // Hand evaluation: c = (1/3,0,0), relative part (1/4,0,3/4).
        let pair = SpeciesPair::new(1.0, 2.0, 0.5).unwrap();
        let v = v3(1., 0., 0.);
        let vs = Vec3::ZERO;
        let out = post_collision_sigma(&v, &vs, &v3(0., 0., 1.), &pair).unwrap();
        assert_vec(out.v_prime, v3(0.5, 0., 0.5), 1e-15);
        assert_vec(out.v_star_prime, v3(0.25, 0., -0.25), 1e-15);
        assert_abs_diff_eq!(out.delta_energy, -0.25, epsilon = 1e-15);
        let direct = out.v_prime.norm_sq() + 2.0 * out.v_star_prime.norm_sq() - v.norm_sq();
        assert_abs_diff_eq!(direct, -0.25, epsilon = 1e-15);
        let p0 = v + vs * 2.0;
        let p1 = out.v_prime + out.v_star_prime * 2.0;
        assert_vec(p0, p1, 1e-15);
    }

    #[test]
    fn sigma_degenerate_relative_velocity_is_noop() {
        let pair = SpeciesPair::new(1.0, 3.0, 0.2).unwrap();
        let v = v3(0.3, -0.2, 0.1);
        let out = post_collision_sigma(&v, &v, &v3(0., 1., 0.), &pair).unwrap();
        assert_eq!(out.v_prime, v);
        assert_eq!(out.v_star_prime, v);
        assert_eq!(out.delta_energy, 0.0);
    }

    #[test]
    fn rejects_bad_directions_and_nan() {
        let pair = SpeciesPair::new(1.0, 1.0, 0.5).unwrap();
        let v = v3(1., 0., 0.);
        assert!(matches!(
            post_collision_sigma(&v, &Vec3::ZERO, &v3(0., 1.1, 0.), &pair),
            Err(KinematicsError::NotUnit { name: "sigma", .. })
        ));
        assert!(matches!(
            post_collision_omega(&v, &Vec3::ZERO, &v3(0.5, 0., 0.), &pair),
            Err(KinematicsError::NotUnit { name: "omega", .. })
        ));
        assert_eq!(
            post_collision_sigma(&v3(f64::NAN, 0., 0.), &Vec3::ZERO, &v3(1., 0., 0.), &pair),
            Err(KinematicsError::NonFinite("v"))
        );
        assert!(SpeciesPair::new(0.0, 1.0, 0.5).is_err());
        assert!(SpeciesPair::new(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn omega_examples() {
        let elastic = SpeciesPair::new(1.0, 1.0, 1.0).unwrap();
        let v = v3(1., 0., 0.);
        let vs = v3(-1., 0., 0.);
        let x = v3(1., 0., 0.);
        let out = post_collision_omega(&v, &vs, &x, &elastic).unwrap();
        assert_vec(out.v_prime, vs, 1e-15);
        assert_vec(out.v_star_prime, v, 1e-15);

        let grazing = post_collision_omega(&v, &vs, &v3(0., 0., 1.), &elastic).unwrap();
        assert_eq!((grazing.v_prime, grazing.v_star_prime), (v, vs));

        let half = SpeciesPair::new(1.0, 1.0, 0.5).unwrap();
        let out = post_collision_omega(&v, &vs, &x, &half).unwrap();
        assert_vec(out.v_prime, v3(-0.5, 0., 0.), 1e-15);
        assert_vec(out.v_star_prime, v3(0.5, 0., 0.), 1e-15);
        assert_abs_diff_eq!(out.delta_energy, -1.5, epsilon = 1e-15);
        // Independent expansion: 2 * 0.25 - 2 = -1.5.
        let direct = out.v_prime.norm_sq() + out.v_star_prime.norm_sq() - 2.0;
        assert_abs_diff_eq!(direct, -1.5, epsilon = 1e-15);
    }

    #[test]
    fn pre_collision_examples() {
        let v = v3(1., 0., 0.);
        let vs = v3(-1., 0., 0.);
        let x = v3(1., 0., 0.);
        let elastic = SpeciesPair::new(1.0, 1.0, 1.0).unwrap();
        let (a, b) = pre_collision_omega(&v, &vs, &x, &elastic).unwrap();
        assert_vec(a, vs, 1e-15);
        assert_vec(b, v, 1e-15);

        let half = SpeciesPair::new(1.0, 1.0, 0.5).unwrap();
        let (a, b) = pre_collision_omega(&v, &vs, &x, &half).unwrap();
        assert_vec(a, v3(-2., 0., 0.), 1e-15);
        assert_vec(b, v3(2., 0., 0.), 1e-15);
        let back = post_collision_omega(&a, &b, &x, &half).unwrap();
        assert_vec(back.v_prime, v, 1e-14);
        assert_vec(back.v_star_prime, vs, 1e-14);

        let zero = SpeciesPair::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(pre_collision_omega(&v, &vs, &x, &zero), Err(KinematicsError::ZeroRestitution));
    }

    #[test]
    fn sigma_from_omega_examples() {
        let g = v3(2., 0., 0.);
        assert_vec(sigma_from_omega(&g, &v3(1., 0., 0.)).unwrap(), v3(-1., 0., 0.), 1e-15);
        assert_vec(sigma_from_omega(&g, &v3(0., 1., 0.)).unwrap(), v3(1., 0., 0.), 1e-15);
        assert_eq!(
            sigma_from_omega(&Vec3::ZERO, &v3(0., 1., 0.)),
            Err(KinematicsError::ZeroRelativeVelocity)
        );
    }

    #[test]
    fn z_examples() {
        let pair = SpeciesPair::new(1.0, 1.0, 0.3).unwrap();
        let v = v3(0.4, 1.0, -0.2);
        let vs = v3(-1.0, 0.5, 0.7);
        let u_hat = (v - vs).normalized().unwrap();
        let same = post_collision_z(&v, &vs, &u_hat, &pair).unwrap();
        assert_vec(same.v_prime, v, 1e-15);
        assert_vec(same.v_star_prime, vs, 1e-15);
        assert!(same.delta_energy.abs() < 1e-15);

        let collapse = post_collision_z(&v, &vs, &Vec3::ZERO, &pair).unwrap();
        let mid = (v + vs) * 0.5;
        assert_vec(collapse.v_prime, mid, 1e-15);
        assert_vec(collapse.v_star_prime, mid, 1e-15);

        assert!(matches!(
            post_collision_z(&v, &vs, &v3(1.0, 0.1, 0.0), &pair),
            Err(KinematicsError::OutsideUnitBall(_))
        ));
    }

    #[test]
    fn center_of_mass_examples() {
        let pair = SpeciesPair::new(1.0, 4.0, 0.6).unwrap();
        let v = v3(0.2, -0.1, 0.5);
        let c = center_of_mass_points(&v, &v, &pair).unwrap();
        assert_vec(c.omega_plus, v, 1e-15);
        assert_vec(c.omega_minus, v, 1e-15);
        assert_eq!((c.r_plus, c.r_minus), (0.0, 0.0));

        let elastic = SpeciesPair::new(2.0, 2.0, 1.0).unwrap();
        let vs = v3(1.0, 1.0, 0.0);
        let c = center_of_mass_points(&v, &vs, &elastic).unwrap();
        let mid = (v + vs) * 0.5;
        assert_vec(c.omega_plus, mid, 1e-15);
        assert_vec(c.omega_minus, mid, 1e-15);
        assert_abs_diff_eq!(c.r_minus, (v - vs).norm() / 2.0, epsilon = 1e-15);

        // (2/3)(3/4)|u| with |u| = 1.
        let pair = SpeciesPair::new(1.0, 2.0, 0.5).unwrap();
        let v = v3(1., 0., 0.);
        let c = center_of_mass_points(&v, &Vec3::ZERO, &pair).unwrap();
        assert_abs_diff_eq!(c.r_minus, 0.5, epsilon = 1e-15);
        let out = post_collision_sigma(&v, &Vec3::ZERO, &v3(0., 0., 1.), &pair).unwrap();
        assert_abs_diff_eq!((out.v_prime - c.omega_minus).norm(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!((out.v_star_prime - c.omega_plus).norm(), c.r_plus, epsilon = 1e-15);
    }

    #[test]
    fn jacobian_is_restitution() {
        assert_eq!(collision_jacobian(&SpeciesPair::new(1.0, 1.0, 1.0).unwrap()), 1.0);
        assert_eq!(collision_jacobian(&SpeciesPair::new(1.0, 1.0, 0.3).unwrap()), 0.3);
        assert_eq!(collision_jacobian(&SpeciesPair::new(0.2, 7.0, 0.3).unwrap()), 0.3);
    }

    #[test]
    fn one_d_branches_match_sigma() {
        let pair = SpeciesPair::new(1.0, 2.0, 0.5).unwrap();
        let (v, vs) = (1.0, -1.0);
        let out = one_d_outcomes(v, vs, &pair);
        assert_eq!(out[0], (v, vs));
        let minus = post_collision_sigma(&v3(v, 0., 0.), &v3(vs, 0., 0.), &v3(-1., 0., 0.), &pair).unwrap();
        assert_abs_diff_eq!(out[1].0, minus.v_prime[0], epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].1, minus.v_star_prime[0], epsilon = 1e-15);
        let plus = post_collision_sigma(&v3(v, 0., 0.), &v3(vs, 0., 0.), &v3(1., 0., 0.), &pair).unwrap();
        assert_abs_diff_eq!(plus.v_prime[0], v, epsilon = 1e-15);

        // Equal masses, e = 1: the head-on branch swaps the two velocities.
        let elastic = SpeciesPair::new(1.0, 1.0, 1.0).unwrap();
        let out = one_d_outcomes(0.75, -0.25, &elastic);
        assert_abs_diff_eq!(out[1].0, -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1].1, 0.75, epsilon = 1e-15);
    }
}
