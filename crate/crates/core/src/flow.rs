//! Resonant cubic flow on the mode amplitudes `alpha_n`, `0 <= n < N`.
//!
//! Every sum runs over the Galerkin truncation: index combinations that
//! leave `[0, N)` are dropped.

use std::ops::{Add, AddAssign, Mul};

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interaction coefficient `S_{njkl} = min(n, j, k, l) + 1`, defined on the
/// resonant set `n + j = k + l`.
pub fn interaction_coeff(n: usize, j: usize, k: usize, l: usize) -> f64 {
    debug_assert_eq!(n + j, k + l, "off the resonant set");
    (n.min(j).min(k).min(l) + 1) as f64
}

/// Scalars the cubic kernel can run on: real amplitudes for the stationary
/// problem, complex ones for the flow.
pub trait Amplitude:
    Copy + Zero + Add<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self> + AddAssign
{
    fn conj(self) -> Self;
}

impl Amplitude for f64 {
    #[inline]
    fn conj(self) -> Self {
        self
    }
}

impl Amplitude for Complex64 {
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
}

/// `G_n = sum_j sum_k S_{njkl} conj(a_j) a_k a_l` with `l = n + j - k`.
///
/// Uses `S = sum_{m >= 0} [n,j,k,l >= m]`, so that
/// `G_n = sum_{m <= n} sum_{j >= m} conj(a_j) C_m(n + j)` where
/// `C_m(s) = sum_{k,l >= m, k+l = s} a_k a_l` obeys a one-step recursion in `m`.
pub fn cubic_term<T: Amplitude>(a: &[T]) -> Vec<T> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let w = 2 * n - 1;
    let mut c = vec![T::zero(); n * w];
    for m in (0..n).rev() {
        if m + 1 < n {
            let (head, tail) = c.split_at_mut((m + 1) * w);
            head[m * w..].copy_from_slice(&tail[..w]);
        }
        let row = &mut c[m * w..(m + 1) * w];
        let am = a[m];
        row[2 * m] += am * am;
        for l in m + 1..n {
            row[m + l] += am * a[l] * 2.0;
        }
    }
    let abar: Vec<T> = a.iter().map(|x| x.conj()).collect();
    let mut g = vec![T::zero(); n];
    for (i, gi) in g.iter_mut().enumerate() {
        let mut acc = T::zero();
        for m in 0..=i {
            let row = &c[m * w + i..m * w + i + n];
            for j in m..n {
                acc += abar[j] * row[j];
            }
        }
        *gi = acc;
    }
    g
}

/// Complex amplitude vector `alpha_0 .. alpha_{N-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeState {
    pub amps: Vec<Complex64>,
}

impl AmplitudeState {
    pub fn new(amps: Vec<Complex64>) -> Self {
        Self { amps }
    }

    pub fn zeros(n: usize) -> Self {
        Self { amps: vec![Complex64::zero(); n] }
    }

    pub fn from_real(a: &[f64]) -> Self {
        Self { amps: a.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    /// Unit vector `e_m`.
    pub fn mode(n: usize, m: usize) -> Result<Self> {
        if m >= n {
            return Err(Error::IndexOutOfRange { index: m, truncation: n });
        }
        let mut s = Self::zeros(n);
        s.amps[m] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn truncation(&self) -> usize {
        self.amps.len()
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.amps.iter().zip(&other.amps).map(|(a, b)| a - b).collect())
    }
}

/// `c * alpha`; if `alpha(t)` solves the flow then so does `c alpha(c^2 t)`.
pub fn apply_scaling(state: &AmplitudeState, c: f64) -> AmplitudeState {
    AmplitudeState::new(state.amps.iter().map(|a| a * c).collect())
}

/// `e^{i theta} alpha`.
pub fn apply_global_phase(state: &AmplitudeState, theta: f64) -> AmplitudeState {
    let u = Complex64::from_polar(1.0, theta);
    AmplitudeState::new(state.amps.iter().map(|a| a * u).collect())
}

/// `e^{i n phi} alpha_n`.
pub fn apply_local_phase(state: &AmplitudeState, phi: f64) -> AmplitudeState {
    AmplitudeState::new(
        state
            .amps
            .iter()
            .enumerate()
            .map(|(n, a)| a * Complex64::from_polar(1.0, n as f64 * phi))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedSet {
    pub h: f64,
    pub q: f64,
    pub e: f64,
    pub z: Complex64,
}

/// `d alpha_n / dt = -i/(n+1) G_n(alpha)`.
pub fn flow_rhs(state: &AmplitudeState) -> Vec<Complex64> {
    let g = cubic_term(&state.amps);
    g.into_iter()
        .enumerate()
        .map(|(n, gn)| Complex64::new(gn.im, -gn.re) / (n + 1) as f64)
        .collect()
}

pub fn hamiltonian(state: &AmplitudeState) -> f64 {
    let g = cubic_term(&state.amps);
    state.amps.iter().zip(&g).map(|(a, gn)| (a.conj() * gn).re).sum()
}

pub fn mass(a: &[Complex64]) -> f64 {
    a.iter().enumerate().map(|(n, x)| (n + 1) as f64 * x.norm_sqr()).sum()
}

pub fn energy(a: &[Complex64]) -> f64 {
    a.iter().enumerate().map(|(n, x)| ((n + 1) * (n + 1)) as f64 * x.norm_sqr()).sum()
}

pub fn z_charge(a: &[Complex64]) -> Complex64 {
    a.windows(2)
        .enumerate()
        .map(|(n, w)| w[1].conj() * w[0] * ((n + 1) * (n + 2)) as f64)
        .sum()
}

pub fn conserved(state: &AmplitudeState) -> ConservedSet {
    ConservedSet {
        h: hamiltonian(state),
        q: mass(&state.amps),
        e: energy(&state.amps),
        z: z_charge(&state.amps),
    }
}

/// `[D alpha]_n = n alpha_{n-1} - (n+2) alpha_{n+1}`, with `alpha_N = 0`.
pub fn apply_d(state: &AmplitudeState) -> Vec<Complex64> {
    d_op(&state.amps)
}

fn d_op(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    (0..n)
        .map(|i| {
            let lo = if i > 0 { a[i - 1] * i as f64 } else { Complex64::zero() };
            let hi = if i + 1 < n { a[i + 1] * (i + 2) as f64 } else { Complex64::zero() };
            lo - hi
        })
        .collect()
}

pub const EXP_D_TAIL_TOL: f64 = 1e-10;

/// `exp(sD) alpha`, integrated with RK4 at step `|ds| <= 0.1 / N`.
///
/// Fails with `TailOverflow` when the result leaks into the last mode.
pub fn apply_exp_d(state: &AmplitudeState, s: f64) -> Result<AmplitudeState> {
    if !s.is_finite() {
        return Err(Error::DomainError(format!("exp(sD) needs finite s, got {s}")));
    }
    let n = state.truncation();
    if n == 0 {
        return Ok(state.clone());
    }
    let steps = ((s.abs() * n as f64) / 0.1).ceil().max(1.0) as usize;
    let h = s / steps as f64;
    let mut y = state.amps.clone();
    let axpy = |y: &[Complex64], k: &[Complex64], c: f64| -> Vec<Complex64> {
        y.iter().zip(k).map(|(a, b)| a + b * c).collect()
    };
    for _ in 0..steps {
        let k1 = d_op(&y);
        let k2 = d_op(&axpy(&y, &k1, 0.5 * h));
        let k3 = d_op(&axpy(&y, &k2, 0.5 * h));
        let k4 = d_op(&axpy(&y, &k3, h));
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
    let out = AmplitudeState::new(y);
    let peak = out.max_abs();
    let tail = out.amps[n - 1].norm();
    if peak > 0.0 && tail > EXP_D_TAIL_TOL * peak {
        return Err(Error::TailOverflow { tail: tail / peak, tol: EXP_D_TAIL_TOL });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_g(a: &[Complex64]) -> Vec<Complex64> {
        let n = a.len();
        let mut g = vec![Complex64::zero(); n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..=(i + j) {
                    let l = i + j - k;
                    if k < n && l < n {
                        g[i] += a[j].conj() * a[k] * a[l] * interaction_coeff(i, j, k, l);
                    }
                }
            }
        }
        g
    }

    #[test]
    fn coeff_values() {
        assert_eq!(interaction_coeff(0, 0, 0, 0), 1.0);
        assert_eq!(interaction_coeff(2, 3, 1, 4), 2.0);
        assert_eq!(interaction_coeff(6, 6, 6, 6), 7.0);
        assert_eq!(interaction_coeff(7, 2, 9, 0), 1.0);
    }

    #[test]
    fn cubic_term_matches_triple_loop() {
        let a: Vec<Complex64> = (0..9)
            .map(|n| Complex64::new((0.3 * n as f64).sin(), 0.7 - 0.11 * n as f64) * 0.8f64.powi(n))
            .collect();
        let fast = cubic_term(&a);
        let slow = naive_g(&a);
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).norm() < 1e-13, "{x} vs {y}");
        }
    }

    #[test]
    fn single_mode_hamiltonian() {
        let s = AmplitudeState::mode(8, 3).unwrap();
        let c = conserved(&s);
        assert_eq!(c.h, 4.0);
        assert_eq!(c.q, 4.0);
        assert_eq!(c.e, 16.0);
        assert_eq!(c.z, Complex64::zero());
    }

    #[test]
    fn exp_d_on_lowest_mode() {
        let n = 64;
        let s = 0.3;
        let out = apply_exp_d(&AmplitudeState::mode(n, 0).unwrap(), s).unwrap();
        let (t, c) = (s.tanh(), s.cosh());
        for (k, a) in out.amps.iter().enumerate() {
            let want = t.powi(k as i32) / (c * c);
            assert!((a - want).norm() < 1e-8, "mode {k}: {a} vs {want}");
        }
    }

    #[test]
    fn d_on_lowest_mode() {
        let d = apply_d(&AmplitudeState::mode(4, 0).unwrap());
        assert_eq!(d, vec![Complex64::zero(), Complex64::new(1.0, 0.0), Complex64::zero(), Complex64::zero()]);
    }

    #[test]
    fn local_phase_pi_alternates() {
        let s = apply_local_phase(&AmplitudeState::from_real(&[1.0, 1.0, 1.0]), std::f64::consts::PI);
        let re: Vec<f64> = s.amps.iter().map(|a| a.re).collect();
        assert!((re[0] - 1.0).abs() < 1e-15 && (re[1] + 1.0).abs() < 1e-15 && (re[2] - 1.0).abs() < 1e-15);
        assert!(s.amps.iter().all(|a| a.im.abs() < 1e-15));
    }

    #[test]
    fn exp_d_tail_overflow() {
        let r = apply_exp_d(&AmplitudeState::mode(16, 0).unwrap(), 2.0);
        assert!(matches!(r, Err(Error::TailOverflow { .. })));
    }

    #[test]
    fn exp_d_zero_is_identity() {
        let s = AmplitudeState::from_real(&[0.5, -0.25, 0.1, 0.0]);
        assert_eq!(apply_exp_d(&s, 0.0).unwrap(), s);
    }

    #[test]
    fn mode_out_of_range() {
        assert!(matches!(
            AmplitudeState::mode(4, 4),
            Err(Error::IndexOutOfRange { index: 4, truncation: 4 })
        ));
    }
}
