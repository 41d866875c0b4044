//! Macroscopic functionals of an ensemble.
//!
//! Energy and momenta are mass-weighted; the entropy functionals use the
//! number densities `f_s`, whose total is `1/m_s`.

pub mod entropy;
mod kdtree;

use serde::Serialize;

use crate::engine::Ensemble;
use crate::vector::Vec3;

pub use entropy::{differential_entropy, species_entropy};
pub use kdtree::KdTree;

/// `sum_s w_s m_s sum_i |v_i|^2`.
pub fn kinetic_energy(ens: &Ensemble) -> f64 {
    ens.energy()
}

pub fn momentum(ens: &Ensemble) -> Vec3 {
    ens.total_momentum()
}

pub fn species_masses(ens: &Ensemble) -> Vec<f64> {
    ens.species.iter().map(|s| s.mass * s.weight * s.count() as f64).collect()
}

/// `Y^s = sum_s w_s sum_i (1 + m_s |v_i|^2)^{s/2}`.
pub fn weighted_moment_ys(ens: &Ensemble, s: f64) -> f64 {
    ens.species
        .iter()
        .map(|sp| sp.weight * sp.velocities.iter().map(|v| (1.0 + sp.mass * v.norm_sq()).powf(0.5 * s)).sum::<f64>())
        .sum()
}

/// `mu_k = sum_s w_s m_s^{k/2} sum_i |v_i|^k`.
pub fn moment_mu_k(ens: &Ensemble, k: f64) -> f64 {
    ens.species
        .iter()
        .map(|sp| {
            let sum: f64 = if k == 2.0 {
                sp.velocities.iter().map(Vec3::norm_sq).sum()
            } else {
                sp.velocities.iter().map(|v| v.norm().powf(k)).sum()
            };
            sp.weight * sp.mass.powf(0.5 * k) * sum
        })
        .sum()
}

/// Per-species mean square deviation about the mass-weighted mean velocity.
pub fn concentration_metric(ens: &Ensemble) -> Vec<f64> {
    let total_mass: f64 = species_masses(ens).iter().sum();
    let mean = ens.total_momentum() * (1.0 / total_mass);
    ens.species
        .iter()
        .map(|sp| sp.velocities.iter().map(|v| (*v - mean).norm_sq()).sum::<f64>() / sp.count() as f64)
        .collect()
}

/// `(H, boldH) = (sum_s int f_s log f_s, sum_s int f_s |log f_s|)`, or `None`
/// when any species is too small or has coincident velocities.
pub fn entropy_estimate(ens: &Ensemble) -> Option<(f64, f64)> {
    let mut h = 0.0;
    let mut bold = 0.0;
    for sp in &ens.species {
        let (a, b) = species_entropy(&sp.velocities, ens.dimension, 1.0 / sp.mass)?;
        h += a;
        bold += b;
    }
    Some((h, bold))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableRecord {
    pub time: f64,
    pub energy: f64,
    pub momentum: Vec3,
    pub species_masses: Vec<f64>,
    /// `(s, Y^s)` pairs.
    pub y_s: Vec<(f64, f64)>,
    /// `(k, mu_k)` pairs.
    pub mu_k: Vec<(f64, f64)>,
    pub entropy: Option<f64>,
    pub bold_h: Option<f64>,
    pub variance_per_species: Vec<f64>,
    /// Accepted collisions since the start of the run.
    pub collisions: u64,
    /// Monte Carlo standard error of the energy lost so far.
    pub energy_std_error: f64,
}

impl ObservableRecord {
    pub fn y(&self, s: f64) -> Option<f64> {
        self.y_s.iter().find(|p| p.0 == s).map(|p| p.1)
    }

    pub fn mu(&self, k: f64) -> Option<f64> {
        self.mu_k.iter().find(|p| p.0 == k).map(|p| p.1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub records: Vec<ObservableRecord>,
    pub seed: u64,
    pub config_digest: String,
}

impl ObservableSeries {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SpeciesState;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(v: Vec<Vec3>, mass: f64) -> Ensemble {
        Ensemble::from_species(vec![SpeciesState::new(mass, v)], 3, 1.0, 0)
    }

    fn random_two_species(seed: u64) -> Ensemble {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mk = |n| (0..n).map(|_| Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() * 2.0, rng.random::<f64>() - 0.2)).collect();
        Ensemble::from_species(vec![SpeciesState::new(1.0, mk(50)), SpeciesState::new(3.0, mk(30))], 3, 1.0, 0)
    }

    #[test]
    fn energy_examples() {
        assert_eq!(kinetic_energy(&single(vec![Vec3::ZERO; 4], 2.0)), 0.0);
        assert_eq!(kinetic_energy(&single(vec![Vec3::new(1.0, 1.0, 1.0)], 1.0)), 3.0);
        let ens = random_two_species(1);
        let mut mirrored = ens.clone();
        for sp in &mut mirrored.species {
            sp.velocities.iter_mut().for_each(|v| *v = -*v);
        }
        let mut joined = ens.clone();
        for (a, b) in joined.species.iter_mut().zip(&mirrored.species) {
            a.velocities.extend_from_slice(&b.velocities);
            a.weight /= 2.0;
        }
        assert!((kinetic_energy(&joined) - kinetic_energy(&ens)).abs() < 1e-14);
        assert!(momentum(&joined).norm() < 1e-15);
    }

    #[test]
    fn ys_examples() {
        let rest = Ensemble::from_species(
            vec![SpeciesState::new(1.0, vec![Vec3::ZERO; 3]), SpeciesState::new(4.0, vec![Vec3::ZERO; 5])],
            3,
            1.0,
            0,
        );
        assert!((weighted_moment_ys(&rest, 3.0) - 1.25).abs() < 1e-15);
        let one = single(vec![Vec3::new(1.0, 1.0, 1.0)], 1.0);
        assert!((weighted_moment_ys(&one, 2.0) - 4.0).abs() < 1e-15);
        assert_eq!(moment_mu_k(&rest, 0.5), 0.0);
    }

    #[test]
    fn jensen_with_number_density_normalization() {
        // For f_i with total number n_i: Y^{s+1} >= (Y^s)^{(s+1)/s} n_i^{-1/s}.
        for seed in 0..20 {
            let ens = random_two_species(seed);
            for sp in &ens.species {
                let alone = Ensemble::from_species(vec![sp.clone()], 3, 1.0, 0);
                let n = 1.0 / sp.mass;
                for s in [1.0, 2.0, 3.0, 4.5] {
                    let lhs = weighted_moment_ys(&alone, s + 1.0);
                    let rhs = weighted_moment_ys(&alone, s).powf((s + 1.0) / s) * n.powf(-1.0 / s);
                    assert!(lhs >= rhs * (1.0 - 1e-12), "{lhs} {rhs}");
                }
            }
        }
    }

    #[test]
    fn ys_monotone_in_s_and_mu2_is_energy() {
        let ens = random_two_species(5);
        let mut prev = 0.0;
        for s in [0.5, 1.0, 2.0, 3.0, 5.0] {
            let y = weighted_moment_ys(&ens, s);
            assert!(y >= prev);
            prev = y;
        }
        assert_eq!(moment_mu_k(&ens, 2.0), kinetic_energy(&ens));
    }

    #[test]
    fn mu_half_two_point() {
        // Species 1: m=1, v in {(1,0,0), (0,0,0)}, w=1/2. Species 2: m=4, v in {(0,3,4), (0,0,0)}, w=1/8.
        let ens = Ensemble::from_species(
            vec![
                SpeciesState::new(1.0, vec![Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO]),
                SpeciesState::new(4.0, vec![Vec3::new(0.0, 3.0, 4.0), Vec3::ZERO]),
            ],
            3,
            1.0,
            0,
        );
        let expected = 0.5 * 1.0 + 0.125 * 4f64.powf(0.25) * 5f64.sqrt();
        assert!((moment_mu_k(&ens, 0.5) - expected).abs() < 1e-15);
    }

    #[test]
    fn concentration_examples() {
        let v = Vec3::new(0.2, -0.4, 1.0);
        let ens = Ensemble::from_species(
            vec![SpeciesState::new(1.0, vec![v; 4]), SpeciesState::new(2.0, vec![v; 3])],
            3,
            1.0,
            0,
        );
        assert!(concentration_metric(&ens).iter().all(|x| x.abs() < 1e-30));
        assert!(species_masses(&ens).iter().all(|m| (m - 1.0).abs() < 1e-15));
    }

    #[test]
    fn entropy_is_additive_over_identical_species() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mk = |rng: &mut ChaCha8Rng| -> Vec<Vec3> {
            (0..20_000).map(|_| Vec3::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal))).collect()
        };
        let a = single(mk(&mut rng), 1.0);
        let (h1, _) = entropy_estimate(&a).unwrap();
        let both = Ensemble::from_species(
            vec![SpeciesState::new(1.0, mk(&mut rng)), SpeciesState::new(1.0, mk(&mut rng))],
            3,
            1.0,
            0,
        );
        let (h2, _) = entropy_estimate(&both).unwrap();
        assert!((h2 - 2.0 * h1).abs() < 0.05, "{h2} {h1}");
    }
}
