//! Second-variation operators `L+`, `L-`, their inertia, the 2x2 `D` matrix
//! and the constrained negative index `n_c = n(L+) - p(D) - z(D)`.

mod eigen;
mod hessian;

pub use eigen::{inertia, norm_inf, sym_eigs, Inertia, SymEigen};
pub use hessian::{apply_hessians, assemble_hessians, cubic_jacobian, HessianPair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{Normalization, StationaryState};

/// Eigenvalues with `|x| < ZERO_REL_TOL * max(1, ||L||_inf)` count as zero.
pub const ZERO_REL_TOL: f64 = 1e-11;

pub fn zero_threshold(norm: f64, rel_tol: f64) -> f64 {
    rel_tol * norm.max(1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessianSpectrum {
    pub eigs_plus: Vec<f64>,
    pub eigs_minus: Vec<f64>,
    pub inertia_plus: Inertia,
    pub inertia_minus: Inertia,
    pub zero_tol_plus: f64,
    pub zero_tol_minus: f64,
}

pub fn hessian_spectrum(state: &StationaryState, zero_rel_tol: f64) -> Result<HessianSpectrum> {
    let h = assemble_hessians(state);
    let eigs_plus = sym_eigs(&h.l_plus, false)?.values;
    let eigs_minus = sym_eigs(&h.l_minus, false)?.values;
    let zero_tol_plus = zero_threshold(norm_inf(&h.l_plus), zero_rel_tol);
    let zero_tol_minus = zero_threshold(norm_inf(&h.l_minus), zero_rel_tol);
    Ok(HessianSpectrum {
        inertia_plus: inertia(&eigs_plus, zero_tol_plus),
        inertia_minus: inertia(&eigs_minus, zero_tol_minus),
        eigs_plus,
        eigs_minus,
        zero_tol_plus,
        zero_tol_minus,
    })
}

/// `D` from `Q0(omega)`, `E0(omega)` and their omega-derivatives along a
/// normalized branch.
pub fn d_from_derivatives(norm: Normalization, omega: f64, q: f64, e: f64, dq: f64, de: f64) -> [[f64; 2]; 2] {
    match norm {
        Normalization::LambdaOne => [
            [q - omega * dq, dq],
            [q - e - omega * (dq - de), dq - de],
        ],
        Normalization::LambdaMinusOmegaOne => [
            [q - omega * dq, -q + (1.0 + omega) * dq],
            [q - e - omega * (dq - de), -q + e + (1.0 + omega) * (dq - de)],
        ],
    }
}

/// `D` by centered differences of `Q0`, `E0` over `omega +- h`.
pub fn d_matrix<F>(branch_fn: F, omega: f64, h: f64, norm: Normalization) -> Result<[[f64; 2]; 2]>
where
    F: Fn(f64) -> Result<StationaryState>,
{
    if !(h > 0.0) {
        return Err(Error::DomainError(format!("finite-difference step must be positive, got {h}")));
    }
    let mid = branch_fn(omega)?;
    let up = branch_fn(omega + h)?;
    let dn = branch_fn(omega - h)?;
    let dq = (up.mass() - dn.mass()) / (2.0 * h);
    let de = (up.energy() - dn.energy()) / (2.0 * h);
    Ok(d_from_derivatives(norm, omega, mid.mass(), mid.energy(), dq, de))
}

/// Eigenvalues of the symmetric part of a 2x2 matrix, ascending.
pub fn eig2(d: &[[f64; 2]; 2]) -> [f64; 2] {
    let a = d[0][0];
    let c = d[1][1];
    let b = 0.5 * (d[0][1] + d[1][0]);
    let mean = 0.5 * (a + c);
    let r = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    [mean - r, mean + r]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    ConstrainedMinimizer,
    ConstrainedMaximizer,
    Saddle,
    Indeterminate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigs_plus: Vec<f64>,
    pub eigs_minus: Vec<f64>,
    pub n_plus: usize,
    pub z_plus: usize,
    pub p_plus: usize,
    pub n_minus: usize,
    pub z_minus: usize,
    pub p_minus: usize,
    /// Thresholds below which eigenvalues were counted as zero.
    pub zero_tol_plus: f64,
    pub zero_tol_minus: f64,
    pub d: [[f64; 2]; 2],
    pub n_d: usize,
    pub z_d: usize,
    pub p_d: usize,
    /// `None` when `L+` has a zero eigenvalue.
    pub n_constrained: Option<usize>,
    pub classification: Classification,
}

impl SpectralReport {
    pub fn from_parts(spec: &HessianSpectrum, d: [[f64; 2]; 2]) -> Self {
        let ev = eig2(&d);
        let dnorm = d.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let di = inertia(&ev, zero_threshold(dnorm, 1e-8));
        let ip = spec.inertia_plus;
        let im = spec.inertia_minus;
        let (n_constrained, classification) = if ip.zero > 0 {
            (None, Classification::Indeterminate)
        } else {
            let nc = ip.negative.checked_sub(di.positive + di.zero);
            let pc = ip.positive.checked_sub(di.negative + di.zero);
            let class = match (nc, pc) {
                (Some(0), _) if im.negative == 0 => Classification::ConstrainedMinimizer,
                (_, Some(0)) if im.positive == 0 => Classification::ConstrainedMaximizer,
                (Some(_), _) => Classification::Saddle,
                _ => Classification::Indeterminate,
            };
            (nc, class)
        };
        Self {
            eigs_plus: spec.eigs_plus.clone(),
            eigs_minus: spec.eigs_minus.clone(),
            n_plus: ip.negative,
            z_plus: ip.zero,
            p_plus: ip.positive,
            n_minus: im.negative,
            z_minus: im.zero,
            p_minus: im.positive,
            zero_tol_plus: spec.zero_tol_plus,
            zero_tol_minus: spec.zero_tol_minus,
            d,
            n_d: di.negative,
            z_d: di.zero,
            p_d: di.positive,
            n_constrained,
            classification,
        }
    }

    pub fn constrained_index(&self) -> Result<usize> {
        self.n_constrained.ok_or(Error::IndeterminateIndex { z_plus: self.z_plus })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub normalization: Normalization,
    /// Step for the omega-derivatives in `D`.
    pub fd_step: f64,
    pub zero_rel_tol: f64,
}

impl SpectralOptions {
    pub fn new(normalization: Normalization) -> Self {
        Self { normalization, fd_step: 1e-3, zero_rel_tol: ZERO_REL_TOL }
    }
}

/// Finite-difference step for `D` at distance `omega_offset` from the
/// bifurcation point the branch emanates from; a fixed step would step
/// off the branch close to it.
pub fn fd_step_for_offset(omega_offset: f64) -> f64 {
    (0.05 * omega_offset.abs()).clamp(1e-8, 1e-3)
}

pub fn spectral_report<F>(state: &StationaryState, branch_fn: F, opts: &SpectralOptions) -> Result<SpectralReport>
where
    F: Fn(f64) -> Result<StationaryState>,
{
    let spec = hessian_spectrum(state, opts.zero_rel_tol)?;
    let d = d_matrix(branch_fn, state.omega, opts.fd_step, opts.normalization)?;
    Ok(SpectralReport::from_parts(&spec, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_d_from_exact_relations() {
        // Q0 = 6/7 (1 + omega), E0 = 6 omega along the lambda = 1 pair branch.
        let w = 0.2;
        let d = d_from_derivatives(Normalization::LambdaOne, w, 6.0 / 7.0 * (1.0 + w), 6.0 * w, 6.0 / 7.0, 6.0);
        let want = [[6.0 / 7.0, 6.0 / 7.0], [6.0 / 7.0, -36.0 / 7.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((d[i][j] - want[i][j]).abs() < 1e-14);
            }
        }
        let ev = eig2(&d);
        assert!(ev[0] < 0.0 && ev[1] > 0.0);
    }

    #[test]
    fn second_mode_d_from_expansions() {
        // Q0 = 2 - 4 eps^2, E0 = 4 - 14 eps^2, omega = 2/3 - 7/3 eps^2.
        let d = d_from_derivatives(
            Normalization::LambdaMinusOmegaOne,
            2.0 / 3.0,
            2.0,
            4.0,
            12.0 / 7.0,
            6.0,
        );
        let want = [[6.0 / 7.0, 6.0 / 7.0], [6.0 / 7.0, -36.0 / 7.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((d[i][j] - want[i][j]).abs() < 1e-14, "{i}{j}: {}", d[i][j]);
            }
        }
    }
}
