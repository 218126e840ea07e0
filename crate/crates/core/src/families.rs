//! Stationary states `alpha_n(t) = A_n exp(-i lambda t + i n omega t)` with
//! real profiles, and the closed-form families.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{cubic_term, AmplitudeState};

/// Relative size of `|A_{N-1}|` above which a truncated profile is flagged.
pub const TAIL_TOL: f64 = 1e-10;

/// Which combination of `(lambda, omega)` is fixed to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normalization {
    /// `lambda = 1`, used around the lowest mode.
    LambdaOne,
    /// `lambda - omega = 1`, used around the second mode.
    LambdaMinusOmegaOne,
}

impl Normalization {
    /// `lambda = 1 + shift * omega`.
    pub fn shift(self) -> f64 {
        match self {
            Normalization::LambdaOne => 0.0,
            Normalization::LambdaMinusOmegaOne => 1.0,
        }
    }

    pub fn lambda(self, omega: f64) -> f64 {
        1.0 + self.shift() * omega
    }

    fn scale_of(self, lambda: f64, omega: f64) -> f64 {
        lambda - self.shift() * omega
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryState {
    pub amps: Vec<f64>,
    pub lambda: f64,
    pub omega: f64,
    /// False when `|A_{N-1}|` exceeds `TAIL_TOL` relative to the peak.
    pub truncation_adequate: bool,
}

/// `R_n = G_n(A) - (n+1)(lambda - n omega) A_n`.
pub fn stationary_residual(a: &[f64], lambda: f64, omega: f64) -> Vec<f64> {
    let g = cubic_term(a);
    g.iter()
        .zip(a)
        .enumerate()
        .map(|(n, (gn, an))| gn - (n + 1) as f64 * (lambda - n as f64 * omega) * an)
        .collect()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl StationaryState {
    pub fn new(amps: Vec<f64>, lambda: f64, omega: f64) -> Self {
        let truncation_adequate = tail_ratio(&amps) <= TAIL_TOL;
        Self { amps, lambda, omega, truncation_adequate }
    }

    pub fn truncation(&self) -> usize {
        self.amps.len()
    }

    pub fn residual(&self) -> Vec<f64> {
        stationary_residual(&self.amps, self.lambda, self.omega)
    }

    pub fn residual_norm(&self) -> f64 {
        inf_norm(&self.residual())
    }

    pub fn mass(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, a)| (n + 1) as f64 * a * a).sum()
    }

    pub fn energy(&self) -> f64 {
        self.amps.iter().enumerate().map(|(n, a)| ((n + 1) * (n + 1)) as f64 * a * a).sum()
    }

    /// `sum_n (n+1)(n+2) A_n A_{n+1}`, which vanishes whenever `omega != 0`.
    pub fn z_constraint(&self) -> f64 {
        self.amps
            .windows(2)
            .enumerate()
            .map(|(n, w)| ((n + 1) * (n + 2)) as f64 * w[0] * w[1])
            .sum()
    }

    /// Rescale by `c = 1/sqrt(kappa)` so that the chosen combination is one.
    pub fn normalized(&self, norm: Normalization) -> Result<Self> {
        let kappa = norm.scale_of(self.lambda, self.omega);
        if !(kappa > 0.0) {
            return Err(Error::DomainError(format!(
                "cannot normalize {norm:?}: scale {kappa} is not positive"
            )));
        }
        let c = kappa.sqrt().recip();
        Ok(Self {
            amps: self.amps.iter().map(|a| a * c).collect(),
            lambda: self.lambda / kappa,
            omega: self.omega / kappa,
            truncation_adequate: self.truncation_adequate,
        })
    }

    /// `A_n -> (-1)^n A_n`, the local phase at `phi = pi`.
    pub fn reflected(&self) -> Self {
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(n, a)| if n % 2 == 1 { -a } else { *a })
            .collect();
        Self { amps, ..self.clone() }
    }

    pub fn to_amplitude_state(&self) -> AmplitudeState {
        AmplitudeState::from_real(&self.amps)
    }

    /// Exact solution of the flow at time `t`.
    pub fn at_time(&self, t: f64) -> AmplitudeState {
        AmplitudeState::new(
            self.amps
                .iter()
                .enumerate()
                .map(|(n, a)| a * Complex64::from_polar(1.0, (n as f64 * self.omega - self.lambda) * t))
                .collect(),
        )
    }
}

pub fn tail_ratio(a: &[f64]) -> f64 {
    let peak = inf_norm(a);
    match a.last() {
        Some(t) if peak > 0.0 => t.abs() / peak,
        _ => 0.0,
    }
}

fn check_truncation(n: usize, need: usize) -> Result<()> {
    if n < need {
        Err(Error::TruncationTooSmall { have: n, need })
    } else {
        Ok(())
    }
}

fn check_p(p: f64, lo_open: bool, hi: f64, what: &str) -> Result<()> {
    let lo_ok = if lo_open { p > 0.0 } else { p >= 0.0 };
    if p.is_finite() && lo_ok && p < hi {
        Ok(())
    } else {
        let lb = if lo_open { "(0" } else { "[0" };
        Err(Error::DomainError(format!("{what} needs p in {lb}, {hi}), got {p}")))
    }
}

fn check_c(c: f64) -> Result<()> {
    if c.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("amplitude c must be finite, got {c}")))
    }
}

/// `c e_M` with `lambda = M omega + c^2`; any `omega`.
pub fn single_mode(m: usize, c: f64, omega: f64, n: usize) -> Result<StationaryState> {
    check_c(c)?;
    if m >= n {
        return Err(Error::IndexOutOfRange { index: m, truncation: n });
    }
    let mut amps = vec![0.0; n];
    amps[m] = c;
    Ok(StationaryState::new(amps, m as f64 * omega + c * c, omega))
}

/// `A_n = c p^n`, `lambda = c^2/(1-p^2)^2`, `omega = 0`.
pub fn ground_state(p: f64, c: f64, n: usize) -> Result<StationaryState> {
    check_p(p, false, 1.0, "ground state")?;
    check_c(c)?;
    check_truncation(n, 1)?;
    let amps = (0..n).map(|k| c * p.powi(k as i32)).collect();
    let d = 1.0 - p * p;
    Ok(StationaryState::new(amps, c * c / (d * d), 0.0))
}

/// `A_n = c p^{n-1} ((1-p^2) n - 2p^2)`, `lambda = c^2/(1-p^2)^2`, `omega = 0`.
pub fn twisted_state(p: f64, c: f64, n: usize) -> Result<StationaryState> {
    check_p(p, true, 1.0, "twisted state")?;
    check_c(c)?;
    check_truncation(n, 2)?;
    let d = 1.0 - p * p;
    let amps = (0..n)
        .map(|k| c * p.powi(k as i32 - 1) * (d * k as f64 - 2.0 * p * p))
        .collect();
    Ok(StationaryState::new(amps, c * c / (d * d), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairSign {
    Plus,
    Minus,
}

impl PairSign {
    fn sign(self) -> f64 {
        match self {
            PairSign::Plus => 1.0,
            PairSign::Minus => -1.0,
        }
    }
}

/// Upper end of the pair-state parameter range, `2 - sqrt(3)`.
pub fn pair_p_max() -> f64 {
    2.0 - 3f64.sqrt()
}

/// `A_n = (beta + gamma n) p^n` with `gamma = c(1-p^2)` and
/// `beta = -c(1 + 5p^2 +- s)/2`, `s = sqrt(1 - 14p^2 + p^4)`.
pub fn pair_state(p: f64, c: f64, sign: PairSign, n: usize) -> Result<StationaryState> {
    check_p(p, true, pair_p_max(), "pair state")?;
    check_c(c)?;
    check_truncation(n, 2)?;
    let p2 = p * p;
    let d = 1.0 - p2;
    let pm = sign.sign();
    let s = (1.0 - 14.0 * p2 + p2 * p2).max(0.0).sqrt();
    let gamma = c * d;
    let beta = -0.5 * c * (1.0 + 5.0 * p2 + pm * s);
    let amps = (0..n).map(|k| (beta + gamma * k as f64) * p.powi(k as i32)).collect();
    let c2 = c * c;
    let omega = c2 / 12.0 * (1.0 + p2 + pm * s) / d;
    let lambda = c2 / 6.0 * ((3.0 - 4.0 * p2) / d + pm * (3.0 + 4.0 * p2) * s / (d * d));
    Ok(StationaryState::new(amps, lambda, omega))
}

/// `A_0 = -p`, `A_n = (1-p^2) p^{n-1}`; `lambda = 1`, `omega = 0`.
pub fn blaschke_state(p: f64, n: usize) -> Result<StationaryState> {
    check_p(p, true, 1.0, "blaschke state")?;
    check_truncation(n, 2)?;
    let d = 1.0 - p * p;
    let amps = (0..n)
        .map(|k| if k == 0 { -p } else { d * p.powi(k as i32 - 1) })
        .collect();
    Ok(StationaryState::new(amps, 1.0, 0.0))
}

/// `A_n = c p^{n-1}` for odd `n`, zero for even; `lambda = c^2/(1-p^4)^2`.
pub fn alternating_state(p: f64, c: f64, n: usize) -> Result<StationaryState> {
    check_p(p, false, 1.0, "alternating state")?;
    check_c(c)?;
    check_truncation(n, 2)?;
    let amps = (0..n)
        .map(|k| if k % 2 == 1 { c * p.powi(k as i32 - 1) } else { 0.0 })
        .collect();
    let d = 1.0 - p.powi(4);
    Ok(StationaryState::new(amps, c * c / (d * d), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_stationary(s: &StationaryState, tol: f64) {
        let r = s.residual_norm();
        let a = inf_norm(&s.amps);
        assert!(r <= tol * s.lambda.abs().max(1.0) * a * a, "residual {r:e}");
    }

    #[test]
    fn single_mode_residual_vanishes() {
        let s = single_mode(3, 0.7, 0.2, 16).unwrap();
        assert!(s.residual_norm() < 1e-15);
        assert!((s.lambda - (0.6 + 0.49)).abs() < 1e-15);
    }

    #[test]
    fn normalized_ground_state_has_unit_lambda() {
        let p: f64 = 0.4;
        let s = ground_state(p, 1.0 - p * p, 64).unwrap();
        assert!((s.lambda - 1.0).abs() < 1e-15);
        assert_stationary(&s, 1e-12);
        assert!((s.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pair_limits_at_small_p() {
        let p = 1e-4;
        let plus = pair_state(p, 1.0, PairSign::Plus, 32).unwrap();
        assert!((plus.amps[0] + 1.0).abs() < 1e-6);
        assert!((plus.lambda - 1.0).abs() < 1e-6);
        assert!((plus.omega - 1.0 / 6.0).abs() < 1e-6);
        // c~ = c p held fixed: minus branch tends to c~ e_1 with lambda -> 5/3 c~^2.
        let ct = 0.5;
        let minus = pair_state(p, ct / p, PairSign::Minus, 32).unwrap();
        assert!((minus.amps[1] - ct).abs() < 1e-6);
        assert!((minus.lambda - 5.0 / 3.0 * ct * ct).abs() < 1e-6);
    }

    #[test]
    fn pair_outside_range() {
        assert!(matches!(pair_state(0.3, 1.0, PairSign::Plus, 32), Err(Error::DomainError(_))));
        assert!(matches!(pair_state(0.0, 1.0, PairSign::Plus, 32), Err(Error::DomainError(_))));
    }

    #[test]
    fn twisted_limit_is_second_mode() {
        let p: f64 = 1e-6;
        let s = twisted_state(p, 1.0 - p * p, 16).unwrap();
        assert!((s.amps[1] - 1.0).abs() < 1e-10);
        assert!(s.amps[0].abs() < 1e-5);
    }

    #[test]
    fn families_are_stationary() {
        let n = 64;
        assert_stationary(&ground_state(0.6, 1.0, n).unwrap(), 1e-9);
        assert_stationary(&twisted_state(0.3, 1.0, n).unwrap(), 1e-9);
        assert_stationary(&pair_state(0.15, 1.0, PairSign::Plus, n).unwrap(), 1e-9);
        assert_stationary(&pair_state(0.15, 1.0, PairSign::Minus, n).unwrap(), 1e-9);
        assert_stationary(&blaschke_state(0.3, n).unwrap(), 1e-9);
        assert_stationary(&alternating_state(0.3, 1.0, n).unwrap(), 1e-9);
    }

    #[test]
    fn slow_tail_is_flagged() {
        assert!(!ground_state(0.9, 1.0, 32).unwrap().truncation_adequate);
        let big = ground_state(0.9, 1.0, 256).unwrap();
        assert!(big.truncation_adequate);
        assert_stationary(&big, 1e-9);
    }

    #[test]
    fn normalization_round_trip() {
        let s = pair_state(0.1, 2.0, PairSign::Minus, 32).unwrap();
        let t = s.normalized(Normalization::LambdaMinusOmegaOne).unwrap();
        assert!((t.lambda - t.omega - 1.0).abs() < 1e-14);
        assert_stationary(&t, 1e-12);
    }
}
