//! Log-log power-law fits with a pairs-bootstrap confidence interval.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::BoundsError;

pub const BOOTSTRAP_RESAMPLES: usize = 200;
const BOOTSTRAP_SEED: u64 = 0x05ee_df17;
/// Widest 95% interval still accepted as a clean power law.
pub const MAX_CI_WIDTH: f64 = 0.1;
/// Largest disagreement between the slopes of the two window halves.
pub const MAX_HALF_SLOPE_GAP: f64 = 0.2;
pub const MIN_FIT_SAMPLES: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub intercept: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Slopes fitted separately on the early and late halves of the window.
    pub half_slopes: (f64, f64),
    pub samples: usize,
    pub is_power_law: bool,
}

fn least_squares(x: &[f64], y: &[f64], idx: impl Iterator<Item = usize> + Clone) -> (f64, f64) {
    let n = idx.clone().count() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for i in idx.clone() {
        sx += x[i];
        sy += y[i];
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in idx {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log E` against `log(1 + t)` over `window = [t0, t1]`, with a
/// 95% percentile interval from [`BOOTSTRAP_RESAMPLES`] pairs resamples.
pub fn fit_power_law(times: &[f64], values: &[f64], window: (f64, f64)) -> Result<PowerLawFit, BoundsError> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= window.0 && t <= window.1 {
            if !(v > 0.0) {
                return Err(BoundsError::Domain(format!("nonpositive sample {v} at t = {t}")));
            }
            x.push(t.ln_1p());
            y.push(v.ln());
        }
    }
    let n = x.len();
    if n < MIN_FIT_SAMPLES {
        return Err(BoundsError::Domain(format!("{n} samples in window, need {MIN_FIT_SAMPLES}")));
    }
    let (exponent, intercept) = least_squares(&x, &y, 0..n);
    let half = n / 2;
    let half_slopes = (least_squares(&x, &y, 0..half).0, least_squares(&x, &y, half..n).0);

    let mut rng = ChaCha8Rng::seed_from_u64(BOOTSTRAP_SEED);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut idx = vec![0usize; n];
    while slopes.len() < BOOTSTRAP_RESAMPLES {
        idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
        let s = least_squares(&x, &y, idx.iter().copied()).0;
        // A resample with a single distinct abscissa has no slope.
        if s.is_finite() {
            slopes.push(s);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((p * (BOOTSTRAP_RESAMPLES - 1) as f64).round()) as usize];
    let (ci_low, ci_high) = (q(0.025), q(0.975));
    let is_power_law =
        ci_high - ci_low <= MAX_CI_WIDTH && (half_slopes.0 - half_slopes.1).abs() <= MAX_HALF_SLOPE_GAP;
    Ok(PowerLawFit { exponent, intercept, ci_low, ci_high, half_slopes, samples: n, is_power_law })
}
