use rand::Rng;
use serde::Serialize;

use super::{Ensemble, EngineError, U_MAX_GROWTH};
use crate::kernels::{kernel_majorant, sample_sigma_around, KernelSpec};
use crate::kinematics::apply_sigma;
use crate::rng::step_stream;
use crate::vector::Vec3;

/// Outcome of one time step. Channel arrays are row-major `M x M`; only the
/// upper triangle `s <= r` is populated.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepReport {
    pub candidates: Vec<u64>,
    pub accepted: Vec<u64>,
    /// Candidates whose relative speed exceeded the channel majorant.
    pub majorant_violations: u64,
    pub majorant_refreshed: bool,
    pub energy_before: f64,
    pub energy_after: f64,
    /// Sum and sum of squares of the ensemble energy change of each accepted collision.
    pub energy_change: f64,
    pub energy_change_sq: f64,
}

impl StepReport {
    pub fn total_candidates(&self) -> u64 {
        self.candidates.iter().sum()
    }

    pub fn total_accepted(&self) -> u64 {
        self.accepted.iter().sum()
    }
}

/// Advances the ensemble by `dt` with the no-time-counter scheme.
///
/// Channel `(s, r)` draws `n_pairs * w * majorant * dt` candidates (rounded
/// stochastically). A candidate with relative speed `|u|` is accepted with
/// probability `(|u|/u_max)^lambda * mean(b)/beta2`, and its `sigma` is then
/// drawn with density `b` around `u`. Majorant violations enlarge `u_max` for
/// the next step only.
pub fn step(ens: &mut Ensemble, spec: &KernelSpec, dt: f64) -> Result<StepReport, EngineError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(EngineError::TimeStep(dt));
    }
    let m = ens.num_species();
    let d = ens.dimension;
    let energy_before = ens.energy();
    let accept_scale = (spec.mean_section(d)? / spec.beta2).min(1.0);

    let mut expected = vec![0.0; m * m];
    for s in 0..m {
        for r in s..m {
            let w = ens.species[s].weight.max(ens.species[r].weight);
            let maj = kernel_majorant(spec, d, ens.u_max(s, r), energy_before);
            let n = ens.pair_count(s, r) * w * maj * dt;
            if n > ens.candidate_cap as f64 {
                return Err(EngineError::StepSize { s, r, candidates: n, cap: ens.candidate_cap });
            }
            expected[s * m + r] = n;
        }
    }

    let mut report = StepReport {
        candidates: vec![0; m * m],
        accepted: vec![0; m * m],
        energy_before,
        ..Default::default()
    };
    for s in 0..m {
        for r in s..m {
            let c = s * m + r;
            let mut rng = step_stream(ens.seed, ens.steps_taken, c);
            let n = expected[c].floor() as u64 + u64::from(rng.random::<f64>() < expected[c].fract());
            let stats = collide_channel(ens, spec, s, r, n, accept_scale, &mut rng);
            report.candidates[c] = n;
            report.accepted[c] = stats.accepted;
            report.majorant_violations += stats.violations;
            report.energy_change += stats.energy_change;
            report.energy_change_sq += stats.energy_change_sq;
            ens.collisions[c] += stats.accepted;
            if stats.new_u_max > ens.u_max(s, r) {
                ens.set_u_max(s, r, stats.new_u_max);
                report.majorant_refreshed = true;
            }
        }
    }
    ens.time += dt;
    ens.steps_taken += 1;
    report.energy_after = ens.energy();
    Ok(report)
}

#[derive(Default)]
struct ChannelStats {
    accepted: u64,
    violations: u64,
    new_u_max: f64,
    energy_change: f64,
    energy_change_sq: f64,
}

fn collide_channel<R: Rng>(
    ens: &mut Ensemble,
    spec: &KernelSpec,
    s: usize,
    r: usize,
    n: u64,
    accept_scale: f64,
    rng: &mut R,
) -> ChannelStats {
    let d = ens.dimension;
    let pair = ens.pair(s, r);
    let u_max = ens.u_max(s, r);
    let (ws, wr) = (ens.species[s].weight, ens.species[r].weight);
    let (ms, mr) = (ens.species[s].mass, ens.species[r].mass);
    let w_max = ws.max(wr);
    // A particle of species s changes at rate w_r per pair; the pair fires at w_max.
    let p_update_s = wr / w_max;
    let p_update_r = ws / w_max;
    let always_accept = spec.lambda == 0.0 && accept_scale >= 1.0;

    let mut st = ChannelStats { new_u_max: u_max, ..Default::default() };
    let (a, b): (&mut [Vec3], &mut [Vec3]) = if s == r {
        let v = ens.species[s].velocities.as_mut_slice();
        (v, &mut [])
    } else {
        let (lo, hi) = ens.species.split_at_mut(r);
        (lo[s].velocities.as_mut_slice(), hi[0].velocities.as_mut_slice())
    };
    let na = a.len();
    let nb = b.len();
    for _ in 0..n {
        let i = rng.random_range(0..na);
        let j = if s == r {
            let j = rng.random_range(0..na - 1);
            j + usize::from(j >= i)
        } else {
            rng.random_range(0..nb)
        };
        let vi = a[i];
        let vj = if s == r { a[j] } else { b[j] };
        let u = vi - vj;
        let un = u.norm();
        if un > u_max {
            st.violations += 1;
            st.new_u_max = st.new_u_max.max(U_MAX_GROWTH * un);
        }
        if !always_accept {
            let ratio = if u_max > 0.0 { (un / u_max).min(1.0) } else { 1.0 };
            let p = spec.speed_factor(ratio) * accept_scale;
            if rng.random::<f64>() >= p {
                continue;
            }
        }
        st.accepted += 1;
        if un == 0.0 {
            continue;
        }
        let nu = u * (1.0 / un);
        let sigma = sample_sigma_around(spec, d, &nu, rng);
        let (vp, vsp, _) = apply_sigma(&pair, &vi, &vj, &u, un, &sigma);
        let upd_i = p_update_s >= 1.0 || rng.random::<f64>() < p_update_s;
        let upd_j = p_update_r >= 1.0 || rng.random::<f64>() < p_update_r;
        let mut de = 0.0;
        if upd_i {
            de += ws * ms * (vp.norm_sq() - vi.norm_sq());
            a[i] = vp;
        }
        if upd_j {
            de += wr * mr * (vsp.norm_sq() - vj.norm_sq());
            if s == r {
                a[j] = vsp;
            } else {
                b[j] = vsp;
            }
        }
        st.energy_change += de;
        st.energy_change_sq += de * de;
    }
    st
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::tests::two_species_config;
    use crate::engine::{init_ensemble, SpeciesState};
    use crate::kernels::{AngularSection, KernelSpec};

    #[test]
    fn zero_candidates_leave_ensemble_unchanged() {
        let cfg = two_species_config(200, 100, 0.5);
        let mut ens = init_ensemble(&cfg, 1).unwrap();
        let before = ens.clone();
        let rep = step(&mut ens, &cfg.kernel.spec(), 1e-300).unwrap();
        assert_eq!(rep.total_candidates(), 0);
        assert_eq!(ens.species, before.species);
        assert_eq!(rep.energy_before, rep.energy_after);
    }

    #[test]
    fn rejects_bad_dt_and_oversized_steps() {
        let cfg = two_species_config(200, 100, 0.5);
        let mut ens = init_ensemble(&cfg, 1).unwrap();
        assert!(matches!(step(&mut ens, &cfg.kernel.spec(), 0.0), Err(EngineError::TimeStep(_))));
        assert!(matches!(step(&mut ens, &cfg.kernel.spec(), 1e6), Err(EngineError::StepSize { .. })));
        assert_eq!(ens.steps_taken, 0);
    }

    #[test]
    fn accounting_and_monotone_energy() {
        let cfg = two_species_config(500, 250, 0.6);
        let spec = cfg.kernel.spec();
        let mut ens = init_ensemble(&cfg, 2).unwrap();
        let dt = ens.default_dt(&spec).unwrap();
        let p0 = ens.total_momentum();
        for _ in 0..50 {
            let rep = step(&mut ens, &spec, dt).unwrap();
            for (a, c) in rep.accepted.iter().zip(&rep.candidates) {
                assert!(a <= c);
            }
            assert!(rep.energy_after <= rep.energy_before + 1e-12);
            let rel = (rep.energy_after - rep.energy_before - rep.energy_change).abs() / rep.energy_before;
            assert!(rel < 1e-12, "{rel}");
        }
        assert!((ens.total_momentum() - p0).norm() < 1e-12);
        assert!((ens.time - 50.0 * dt).abs() < 1e-12);
    }

    #[test]
    fn violations_grow_majorant() {
        let cfg = two_species_config(300, 300, 0.9);
        let spec = cfg.kernel.spec();
        let mut ens = init_ensemble(&cfg, 4).unwrap();
        let dt = ens.default_dt(&spec).unwrap();
        let small = 1e-2;
        for s in 0..2 {
            for r in s..2 {
                ens.set_u_max(s, r, small);
            }
        }
        let rep = step(&mut ens, &spec, dt * 100.0).unwrap();
        assert!(rep.majorant_violations > 0);
        assert!(rep.majorant_refreshed);
        assert!(ens.u_max(0, 0) > small);
    }

    #[test]
    fn unequal_weights_keep_channel_rate() {
        // Species 0 has four times the weight of species 1. The lighter-weight
        // partner always moves, the heavier one a quarter of the time.
        let mut rng = crate::rng::aux_stream(3, 0);
        let mk = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            (0..n).map(|_| Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect::<Vec<_>>()
        };
        let a = SpeciesState::new(1.0, mk(100, &mut rng));
        let b = SpeciesState::new(1.0, mk(400, &mut rng));
        let mut ens = Ensemble::from_species(vec![a, b], 3, 1.0, 0);
        let spec = KernelSpec::new(0.0, 0.0, AngularSection::Const([1.0])).unwrap();
        let before = ens.clone();
        step(&mut ens, &spec, 0.01).unwrap();
        let moved = |x: &SpeciesState, y: &SpeciesState| x.velocities.iter().zip(&y.velocities).filter(|(p, q)| p != q).count();
        assert!(moved(&ens.species[1], &before.species[1]) > 0);
        assert!(moved(&ens.species[0], &before.species[0]) > 0);
    }
}
