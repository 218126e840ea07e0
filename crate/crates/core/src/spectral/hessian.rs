use nalgebra::DMatrix;

use crate::families::StationaryState;
use crate::flow::interaction_coeff;

/// Second variations of `K = H/2 - lambda Q - omega (Q - E)` in the real and
/// imaginary directions around a real stationary profile.
#[derive(Debug, Clone)]
pub struct HessianPair {
    pub l_plus: DMatrix<f64>,
    pub l_minus: DMatrix<f64>,
}

/// The two halves of the derivative of the cubic term at a real profile:
/// `M1[n][m] = 2 sum_j S A_j A_{n+j-m}` (derivative through `alpha_k`, `alpha_l`)
/// and `M2[n][m] = sum_k S A_k A_{n+m-k}` (derivative through `conj(alpha_j)`).
pub(crate) fn cubic_blocks(a: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.len();
    let mut m1 = DMatrix::zeros(n, n);
    let mut m2 = DMatrix::zeros(n, n);
    for i in 0..n {
        for m in 0..=i {
            let mut s1 = 0.0;
            // l = i + j - m ranges over [0, N)
            let j_hi = (n + m).saturating_sub(i).min(n);
            for j in 0..j_hi {
                let l = i + j - m;
                s1 += interaction_coeff(i, j, m, l) * a[j] * a[l];
            }
            let mut s2 = 0.0;
            let tot = i + m;
            let k_lo = tot.saturating_sub(n - 1);
            for k in k_lo..=tot.min(n - 1) {
                s2 += interaction_coeff(i, m, k, tot - k) * a[k] * a[tot - k];
            }
            m1[(i, m)] = 2.0 * s1;
            m1[(m, i)] = 2.0 * s1;
            m2[(i, m)] = s2;
            m2[(m, i)] = s2;
        }
    }
    (m1, m2)
}

/// Jacobian of `A -> G(A)` for real profiles.
pub fn cubic_jacobian(a: &[f64]) -> DMatrix<f64> {
    let (m1, m2) = cubic_blocks(a);
    m1 + m2
}

fn frequency_diag(lambda: f64, omega: f64) -> impl Fn(usize) -> f64 {
    move |i| (i + 1) as f64 * (lambda - i as f64 * omega)
}

pub fn assemble_hessians(state: &StationaryState) -> HessianPair {
    let n = state.truncation();
    let (m1, m2) = cubic_blocks(&state.amps);
    let d = frequency_diag(state.lambda, state.omega);
    let mut l_plus = &m1 + &m2;
    let mut l_minus = m1 - m2;
    for i in 0..n {
        l_plus[(i, i)] -= d(i);
        l_minus[(i, i)] -= d(i);
    }
    HessianPair { l_plus, l_minus }
}

/// Matrix-free `(L+ v, L- v)` straight from the defining double sum.
pub fn apply_hessians(state: &StationaryState, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = &state.amps;
    let n = a.len();
    let d = frequency_diag(state.lambda, state.omega);
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    for i in 0..n {
        let (mut first, mut second) = (0.0, 0.0);
        for j in 0..n {
            for k in 0..=(i + j) {
                let l = i + j - k;
                if k >= n || l >= n {
                    continue;
                }
                let s = interaction_coeff(i, j, k, l);
                first += s * 2.0 * a[j] * a[l] * v[k];
                second += s * a[k] * a[l] * v[j];
            }
        }
        plus[i] = first + second - d(i) * v[i];
        minus[i] = first - second - d(i) * v[i];
    }
    (plus, minus)
}
