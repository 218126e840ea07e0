//! Fixed-step RK4 integration of the truncated flow, conservation audits and
//! an empirical probe of orbital stability around stationary states.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::StationaryState;
use crate::flow::{conserved, flow_rhs, AmplitudeState, ConservedSet};

pub const BLOW_UP_NORM: f64 = 1e6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<AmplitudeState>,
    pub conserved: Vec<ConservedSet>,
}

impl Trajectory {
    pub fn last(&self) -> &AmplitudeState {
        self.states.last().expect("trajectory holds the initial state")
    }
}

fn rk4_step(y: &mut [Complex64], h: f64, tmp: &mut AmplitudeState) {
    let n = y.len();
    let stage = |base: &[Complex64], k: &[Complex64], c: f64, tmp: &mut AmplitudeState| {
        for i in 0..n {
            tmp.amps[i] = base[i] + k[i] * c;
        }
        flow_rhs(tmp)
    };
    tmp.amps.copy_from_slice(y);
    let k1 = flow_rhs(tmp);
    let k2 = stage(y, &k1, 0.5 * h, tmp);
    let k3 = stage(y, &k2, 0.5 * h, tmp);
    let k4 = stage(y, &k3, h, tmp);
    for i in 0..n {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

/// Integrate to `t_end` with steps of at most `dt` (shortened so that they
/// divide `t_end` evenly), keeping every `stride`-th state and the final one.
pub fn integrate(initial: &AmplitudeState, t_end: f64, dt: f64, stride: usize) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::DomainError(format!("need dt > 0 and finite T >= 0, got dt={dt}, T={t_end}")));
    }
    let stride = stride.max(1);
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps > 0 { t_end / steps as f64 } else { 0.0 };
    let mut y = initial.amps.clone();
    let mut tmp = initial.clone();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![initial.clone()],
        conserved: vec![conserved(initial)],
    };
    for k in 1..=steps {
        rk4_step(&mut y, h, &mut tmp);
        if k % stride == 0 || k == steps {
            let t = k as f64 * h;
            let s = AmplitudeState::new(y.clone());
            let nrm = s.norm();
            if !nrm.is_finite() || nrm > BLOW_UP_NORM {
                return Err(Error::BlowUp { t });
            }
            traj.times.push(t);
            traj.conserved.push(conserved(&s));
            traj.states.push(s);
        }
    }
    Ok(traj)
}

/// Largest deviations of `(H, Q, E, |Z|)` from their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub h: f64,
    pub q: f64,
    pub e: f64,
    pub z_abs: f64,
}

impl Drift {
    pub fn max(&self) -> f64 {
        self.h.max(self.q).max(self.e).max(self.z_abs)
    }
}

pub fn conservation_drift(traj: &Trajectory) -> Drift {
    let c0 = traj.conserved[0];
    let mut d = Drift { h: 0.0, q: 0.0, e: 0.0, z_abs: 0.0 };
    for c in &traj.conserved {
        d.h = d.h.max((c.h - c0.h).abs());
        d.q = d.q.max((c.q - c0.q).abs());
        d.e = d.e.max((c.e - c0.e).abs());
        d.z_abs = d.z_abs.max((c.z.norm() - c0.z.norm()).abs());
    }
    d
}

/// `S(phi) = sum_n A_n alpha_n e^{-i n phi}`; `|S|` is maximal at the best local phase.
fn overlap(c: &[Complex64], phi: f64) -> (Complex64, Complex64) {
    let mut s = Complex64::new(0.0, 0.0);
    let mut ds = Complex64::new(0.0, 0.0);
    for (n, cn) in c.iter().enumerate() {
        let t = cn * Complex64::from_polar(1.0, -(n as f64) * phi);
        s += t;
        ds += t * Complex64::new(0.0, -(n as f64));
    }
    (s, ds)
}

/// `d|S|^2/dphi / 2`.
fn slope(c: &[Complex64], phi: f64) -> f64 {
    let (s, ds) = overlap(c, phi);
    (s.conj() * ds).re
}

/// Distance from `state` to the orbit `{e^{i(theta + n phi)} A}`.
///
/// For fixed `phi` the optimal `theta` is `arg S(phi)`, which leaves a
/// one-dimensional search: a 64-point grid in `phi`, then bisection on the
/// derivative around the best grid points.
pub fn gauge_distance(state: &AmplitudeState, reference: &StationaryState) -> f64 {
    let a = &reference.amps;
    assert_eq!(state.truncation(), a.len(), "gauge_distance needs equal truncations");
    let c: Vec<Complex64> = state.amps.iter().zip(a).map(|(x, r)| x * *r).collect();
    let grid = 64;
    let step = std::f64::consts::TAU / grid as f64;
    let mut vals: Vec<(f64, f64)> = (0..grid)
        .map(|k| {
            let phi = k as f64 * step;
            (overlap(&c, phi).0.norm(), phi)
        })
        .collect();
    vals.sort_by(|x, y| y.0.total_cmp(&x.0));

    let dist_at = |phi: f64| {
        let theta = overlap(&c, phi).0.arg();
        state
            .amps
            .iter()
            .zip(a)
            .enumerate()
            .map(|(n, (x, r))| (x - Complex64::from_polar(*r, theta + n as f64 * phi)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let mut best = f64::INFINITY;
    for &(_, phi0) in vals.iter().take(3) {
        let (mut lo, mut hi) = (phi0 - step, phi0 + step);
        let (mut slo, shi) = (slope(&c, lo), slope(&c, hi));
        let phi = if slo > 0.0 && shi < 0.0 {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let sm = slope(&c, mid);
                if sm > 0.0 {
                    lo = mid;
                    slo = sm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 {
                    break;
                }
            }
            let _ = slo;
            0.5 * (lo + hi)
        } else {
            phi0
        };
        best = best.min(dist_at(phi));
    }
    best
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityProbeReport {
    pub noise_amplitude: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    pub max_gauge_distance: f64,
    /// Least-squares slope of `ln d(t)`; `None` when the distance stays at rounding level.
    pub growth_rate: Option<f64>,
    pub drift: Drift,
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
}

/// Complex Gaussian perturbation of Euclidean norm `noise`.
pub fn gaussian_perturbation(n: usize, noise: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let nrm = xi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in xi.iter_mut() {
        *x *= noise / nrm;
    }
    xi
}

/// Random state with `Q = mass` and amplitudes inside the envelope `decay^n`.
/// A decaying envelope keeps the truncated dynamics away from the cutoff.
pub fn random_state(n: usize, mass: f64, decay: f64, seed: u64) -> AmplitudeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amps: Vec<Complex64> = (0..n)
        .map(|k| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * decay.powi(k as i32)
        })
        .collect();
    let q: f64 = amps.iter().enumerate().map(|(k, a)| (k + 1) as f64 * a.norm_sqr()).sum();
    let c = (mass / q).sqrt();
    for a in amps.iter_mut() {
        *a *= c;
    }
    AmplitudeState::new(amps)
}

pub fn stability_probe(
    reference: &StationaryState,
    noise: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<StabilityProbeReport> {
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(Error::DomainError(format!("noise must be finite and non-negative, got {noise}")));
    }
    let xi = gaussian_perturbation(reference.truncation(), noise, seed);
    let initial = AmplitudeState::new(reference.amps.iter().zip(&xi).map(|(a, x)| x + *a).collect());
    let stride = ((t_end / dt / 200.0).floor() as usize).max(1);
    let traj = integrate(&initial, t_end, dt, stride)?;
    let distances: Vec<f64> = traj.states.iter().map(|s| gauge_distance(s, reference)).collect();
    let max_gauge_distance = distances.iter().cloned().fold(0.0, f64::max);
    Ok(StabilityProbeReport {
        noise_amplitude: noise,
        horizon: t_end,
        dt,
        seed,
        max_gauge_distance,
        growth_rate: log_slope(&traj.times, &distances),
        drift: conservation_drift(&traj),
        times: traj.times,
        distances,
    })
}

fn log_slope(t: &[f64], d: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = t.iter().zip(d).filter(|(_, d)| **d > 1e-13).map(|(t, d)| (*t, d.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{ground_state, pair_state, PairSign};
    use crate::flow::{apply_global_phase, apply_local_phase};

    #[test]
    fn lowest_mode_rotates() {
        let e0 = AmplitudeState::mode(8, 0).unwrap();
        let traj = integrate(&e0, 10.0, 1e-3, 1000).unwrap();
        let end = traj.last();
        assert!((end.amps[0] - Complex64::from_polar(1.0, -10.0)).norm() < 1e-8);
        assert!(end.amps[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn pair_state_follows_its_frequencies() {
        let s = pair_state(0.2, 1.0, PairSign::Plus, 32).unwrap();
        let traj = integrate(&s.to_amplitude_state(), 10.0, 1e-3, 10_000).unwrap();
        let err = traj.last().sub(&s.at_time(10.0)).max_abs();
        assert!(err < 1e-7, "{err:e}");
    }

    #[test]
    fn gauge_distance_of_pure_gauge_motion() {
        let p: f64 = 0.3;
        let g = ground_state(p, 1.0 - p * p, 32).unwrap();
        let moved = apply_local_phase(&apply_global_phase(&g.to_amplitude_state(), 0.7), 0.3);
        assert!(gauge_distance(&moved, &g) <= 1e-10);
        assert!(gauge_distance(&g.to_amplitude_state(), &g) <= 1e-12);
        let mut kicked = g.to_amplitude_state();
        kicked.amps[5] += 1e-3;
        let d = gauge_distance(&kicked, &g);
        assert!((0.5e-3..=1.5e-3).contains(&d), "{d:e}");
    }

    #[test]
    fn perturbation_has_requested_norm() {
        let xi = gaussian_perturbation(16, 1e-3, 7);
        let nrm = xi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        assert!((nrm - 1e-3).abs() < 1e-15);
        assert_eq!(xi, gaussian_perturbation(16, 1e-3, 7));
    }

    #[test]
    fn bad_step_is_rejected() {
        let e0 = AmplitudeState::mode(4, 0).unwrap();
        assert!(matches!(integrate(&e0, 1.0, 0.0, 1), Err(Error::DomainError(_))));
    }
}
