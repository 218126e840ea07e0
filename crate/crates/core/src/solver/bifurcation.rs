//! Bifurcation points of the single-mode families and the linearization scan.

use serde::{Deserialize, Serialize};

use crate::families::single_mode;
use crate::flow::cubic_term;
use crate::spectral::{assemble_hessians, cubic_jacobian, inertia, norm_inf, sym_eigs};

use super::BaseMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub m: usize,
    pub omega: f64,
    /// `omega = num / den` in lowest terms.
    pub num: i64,
    pub den: i64,
    /// The other index with the same `omega`, at a double point.
    pub partner: Option<usize>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn point(m: usize, num: i64, den: i64, partner: Option<usize>) -> BifurcationPoint {
    let g = gcd(num, den).max(1);
    let (num, den) = (num / g, den / g);
    BifurcationPoint { m, omega: num as f64 / den as f64, num, den, partner }
}

/// `omega_m = (m-1) / (m(m+1))`, the zeros of `L(omega)_mm` at the lowest mode.
pub fn omega_lowest(m: usize) -> (i64, i64) {
    let m = m as i64;
    (m - 1, m * (m + 1))
}

/// `omega_1 = 0`, `omega_2 = 2/3`, `omega_m = (m-3)/(m^2-1)` for `m >= 3`.
pub fn omega_second(m: usize) -> (i64, i64) {
    let m = m as i64;
    match m {
        1 => (0, 1),
        2 => (2, 3),
        _ => (m - 3, m * m - 1),
    }
}

/// `omega_n = omega_m` with `n != m` forces `n = (m+1)/(m-1)`.
fn partner_lowest(m: usize) -> Option<usize> {
    if m < 2 || (m + 1) % (m - 1) != 0 {
        return None;
    }
    let n = (m + 1) / (m - 1);
    (n != m).then_some(n)
}

/// For `m, n >= 4`, `omega_n = omega_m` forces `(m-3)(n-3) = 8`; the zero
/// value is shared by `m = 1` and `m = 3`.
fn partner_second(m: usize) -> Option<usize> {
    match m {
        1 => Some(3),
        3 => Some(1),
        m if m >= 4 && 8 % (m - 3) == 0 => {
            let n = 3 + 8 / (m - 3);
            (n != m).then_some(n)
        }
        _ => None,
    }
}

pub fn bifurcation_points_lowest(m_max: usize) -> Vec<BifurcationPoint> {
    (1..=m_max)
        .map(|m| {
            let (num, den) = omega_lowest(m);
            point(m, num, den, partner_lowest(m))
        })
        .collect()
}

pub fn bifurcation_points_second(m_max: usize) -> Vec<BifurcationPoint> {
    (1..=m_max)
        .map(|m| {
            let (num, den) = omega_second(m);
            point(m, num, den, partner_second(m))
        })
        .collect()
}

pub fn bifurcation_point(base: BaseMode, m: usize) -> BifurcationPoint {
    match base {
        BaseMode::Lowest => {
            let (num, den) = omega_lowest(m);
            point(m, num, den, partner_lowest(m))
        }
        BaseMode::Second => {
            let (num, den) = omega_second(m);
            point(m, num, den, partner_second(m))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub omega: f64,
    pub multiplicity: usize,
}

fn negative_count(base: BaseMode, omega: f64, n: usize) -> (usize, usize) {
    let state = single_mode(base.index(), 1.0, omega, n).expect("base mode fits the truncation");
    let l = assemble_hessians(&state).l_plus;
    let eigs = sym_eigs(&l, false).expect("eigensolver on a near-diagonal matrix").values;
    let i = inertia(&eigs, 1e-12 * norm_inf(&l).max(1.0));
    (i.negative, i.zero)
}

/// Zero crossings of the eigenvalues of `L(omega)`, the linearization at the
/// base mode, over `[lo, hi]`.
///
/// The grid brackets changes in the negative count; each bracket is bisected
/// down to `1e-12`, so crossings closer than the grid step are separated.
pub fn linearization_scan(range: (f64, f64), base: BaseMode, n: usize, step: f64) -> Vec<Crossing> {
    let (lo, hi) = range;
    let mut out = Vec::new();
    if !(hi > lo) || !(step > 0.0) || n <= base.index() {
        return out;
    }
    let (n_lo, z_lo) = negative_count(base, lo, n);
    if z_lo > 0 {
        out.push(Crossing { omega: lo, multiplicity: z_lo });
    }
    let cells = ((hi - lo) / step).ceil() as usize;
    let mut a = lo;
    let mut na = n_lo;
    for c in 1..=cells {
        let b = if c == cells { hi } else { lo + c as f64 * step };
        let (nb, zb) = negative_count(base, b, n);
        refine(base, n, a, b, na, nb, &mut out);
        if c == cells && zb > 0 {
            out.push(Crossing { omega: b, multiplicity: zb });
        }
        a = b;
        na = nb;
    }
    merge_close(out)
}

/// Bisection resolves the two eigenvalues through a double point separately;
/// fold crossings closer than the bisection noise back together.
fn merge_close(mut xs: Vec<Crossing>) -> Vec<Crossing> {
    xs.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let mut out: Vec<(Crossing, usize)> = Vec::new();
    for c in xs {
        match out.last_mut() {
            Some((last, k)) if (c.omega - last.omega / *k as f64).abs() < 1e-9 => {
                last.omega += c.omega;
                last.multiplicity += c.multiplicity;
                *k += 1;
            }
            _ => out.push((c, 1)),
        }
    }
    out.into_iter()
        .map(|(c, k)| Crossing { omega: c.omega / k as f64, multiplicity: c.multiplicity })
        .collect()
}

fn refine(base: BaseMode, n: usize, a: f64, b: f64, na: usize, nb: usize, out: &mut Vec<Crossing>) {
    if na == nb {
        return;
    }
    if b - a < 1e-12 {
        out.push(Crossing { omega: 0.5 * (a + b), multiplicity: na.abs_diff(nb) });
        return;
    }
    let mid = 0.5 * (a + b);
    let (nm, _) = negative_count(base, mid, n);
    refine(base, n, a, mid, na, nm, out);
    refine(base, n, mid, b, nm, nb, out);
}

/// Quadratic and cubic part of `G(e_b + a)`, i.e. the nonlinear terms of the
/// perturbed stationary system around the base mode `e_b`.
pub fn nonlinear_terms(base: BaseMode, a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let b = base.index();
    let mut full = a.to_vec();
    full[b] += 1.0;
    let g = cubic_term(&full);
    let mut e = vec![0.0; n];
    e[b] = 1.0;
    let g0 = cubic_term(&e);
    let j = cubic_jacobian(&e);
    (0..n)
        .map(|i| {
            let lin: f64 = (0..n).map(|k| j[(i, k)] * a[k]).sum();
            g[i] - g0[i] - lin
        })
        .collect()
}
