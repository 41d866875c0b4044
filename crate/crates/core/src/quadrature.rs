//! Numerical integration: adaptive Gauss-Kronrod on intervals and fixed node
//! sets on the unit sphere.

use std::f64::consts::PI;

use crate::vector::Vec3;

/// Surface measure of the unit sphere in R^d (`|S^{d-1}|`), with `|S^0| = 2`.
pub fn sphere_area(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            // |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2), by the two-step recursion.
            let mut a = if d.is_multiple_of(2) { 2.0 * PI } else { 4.0 * PI };
            let mut k = if d.is_multiple_of(2) { 2 } else { 3 };
            while k < d {
                a *= 2.0 * PI / k as f64;
                k += 2;
            }
            a
        }
    }
}

const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = K15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for k in 0..7 {
        let x = h * GK15_NODES[k];
        let s = f(c - x) + f(c + x);
        kronrod += K15_WEIGHTS[k] * s;
        if k % 2 == 1 {
            gauss += G7_WEIGHTS[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// estimate falls below `tol`. Returns `(integral, error_estimate)`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const MAX_INTERVALS: usize = 2000;
    let (v, err) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, err)];
    loop {
        let total_err: f64 = pieces.iter().map(|p| p.3).sum();
        if total_err <= tol || pieces.len() >= MAX_INTERVALS {
            let total: f64 = pieces.iter().map(|p| p.2).sum();
            return (total, total_err);
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// A fixed quadrature rule on the unit sphere `S^{d-1}`, embedded in R^3.
///
/// Weights sum to the sphere's surface measure. Every rule is invariant under
/// `x -> -x`.
#[derive(Clone, Debug)]
pub struct SphereRule {
    pub dimension: usize,
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// 26-point Lebedev rule, exact for polynomials of degree 7 on `S^2`.
    pub fn lebedev26() -> Self {
        let mut nodes = Vec::with_capacity(26);
        let mut weights = Vec::with_capacity(26);
        let scale = 4.0 * PI;
        for k in 0..3 {
            for s in [1.0, -1.0] {
                let mut c = [0.0; 3];
                c[k] = s;
                nodes.push(Vec3(c));
                weights.push(scale / 21.0);
            }
        }
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            for sa in [1.0, -1.0] {
                for sb in [1.0, -1.0] {
                    let mut c = [0.0; 3];
                    c[a] = sa * h;
                    c[b] = sb * h;
                    nodes.push(Vec3(c));
                    weights.push(scale * 4.0 / 105.0);
                }
            }
        }
        let t = 1.0 / 3f64.sqrt();
        for sx in [1.0, -1.0] {
            for sy in [1.0, -1.0] {
                for sz in [1.0, -1.0] {
                    nodes.push(Vec3::new(sx * t, sy * t, sz * t));
                    weights.push(scale * 9.0 / 280.0);
                }
            }
        }
        Self { dimension: 3, nodes, weights }
    }

    /// Gauss-Legendre in `cos(theta)` times an equispaced rule in `phi`.
    /// `n_phi` must be even to keep the antipodal symmetry.
    pub fn product(n_theta: usize, n_phi: usize) -> Self {
        assert!(n_phi.is_multiple_of(2) && n_phi > 0 && n_theta > 0);
        let (xs, ws) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for (x, w) in xs.iter().zip(&ws) {
            let s = (1.0 - x * x).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                nodes.push(Vec3::new(s * phi.cos(), s * phi.sin(), *x));
                weights.push(w * dphi);
            }
        }
        Self { dimension: 3, nodes, weights }
    }

    /// Equispaced trapezoid rule on the unit circle. `n` must be even.
    pub fn circle(n: usize) -> Self {
        assert!(n.is_multiple_of(2) && n > 0);
        let dphi = 2.0 * PI / n as f64;
        let nodes = (0..n)
            .map(|k| {
                let phi = (k as f64 + 0.5) * dphi;
                Vec3::new(phi.cos(), phi.sin(), 0.0)
            })
            .collect();
        Self { dimension: 2, nodes, weights: vec![dphi; n] }
    }

    /// The two-point "sphere" `{-1, +1}` on the line with counting measure.
    pub fn line() -> Self {
        Self {
            dimension: 1,
            nodes: vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0)],
            weights: vec![1.0, 1.0],
        }
    }

    /// Default rule for dimension `d`.
    pub fn for_dimension(d: usize) -> Self {
        match d {
            1 => Self::line(),
            2 => Self::circle(64),
            _ => Self::lebedev26(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(&Vec3) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}
