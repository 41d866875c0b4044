//! Kozachenko-Leonenko nearest-neighbour entropy estimates.
//!
//! For a sample of `N` points with `r_i` the distance to the `k`-th neighbour,
//! `log p(x_i) ~ psi(k) - psi(N) - log V_d - d log r_i` estimates the log of
//! the probability density at the sample point.

use rayon::prelude::*;

use super::kdtree::KdTree;
use crate::vector::Vec3;

pub const KNN_K: usize = 4;
/// Smallest per-species sample for which an estimate is reported.
pub const MIN_SAMPLES: usize = 100;

/// Digamma function for positive arguments.
pub fn digamma(mut x: f64) -> f64 {
    assert!(x > 0.0);
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Asymptotic series with Bernoulli-number coefficients.
    acc + x.ln() - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => panic!("unsupported dimension {d}"),
    }
}

/// Pointwise `log p(x_i)` for every sample point, or `None` when `k + 1`
/// points coincide or the sample is below [`MIN_SAMPLES`].
pub fn log_density_at_samples(points: &[Vec3], d: usize) -> Option<Vec<f64>> {
    let n = points.len();
    if n < MIN_SAMPLES.max(KNN_K + 1) {
        return None;
    }
    let raw: Vec<[f64; 3]> = points.iter().map(|v| v.0).collect();
    let tree = KdTree::new(&raw, d);
    let offset = digamma(KNN_K as f64) - digamma(n as f64) - unit_ball_volume(d).ln();
    let logs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = tree.kth_neighbor_distance(i, KNN_K);
            offset - d as f64 * r.ln()
        })
        .collect();
    logs.iter().all(|x| x.is_finite()).then_some(logs)
}

/// Differential entropy `-int p log p` of the sample's law.
pub fn differential_entropy(points: &[Vec3], d: usize) -> Option<f64> {
    let logs = log_density_at_samples(points, d)?;
    Some(-logs.iter().sum::<f64>() / logs.len() as f64)
}

/// `(int f log f, int f |log f|)` for a number density `f = n p` with total
/// number `n` and sample law `p`.
pub fn species_entropy(points: &[Vec3], d: usize, number_density: f64) -> Option<(f64, f64)> {
    let logs = log_density_at_samples(points, d)?;
    let shift = number_density.ln();
    let n = logs.len() as f64;
    let h = logs.iter().map(|l| l + shift).sum::<f64>() / n;
    let bold = logs.iter().map(|l| (l + shift).abs()).sum::<f64>() / n;
    Some((number_density * h, number_density * bold))
}
