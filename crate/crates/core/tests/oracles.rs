//! Independent brute-force oracles for the fast kernels.

use conflow_core::flow::{cubic_term, flow_rhs, hamiltonian};
use conflow_core::solver::{nonlinear_terms, BaseMode};
use conflow_core::spectral::{inertia, sym_eigs};
use conflow_core::{AmplitudeState, Complex64};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn s(n: usize, j: usize, k: usize, l: usize) -> f64 {
    (n.min(j).min(k).min(l) + 1) as f64
}

fn random_complex(n: usize, seed: u64) -> AmplitudeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AmplitudeState::new((0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
}

fn random_real(n: usize, seed: u64, scale: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn rhs_matches_triple_loop() {
    for (n, seed) in [(8, 1), (10, 2), (5, 3)] {
        let st = random_complex(n, seed);
        let a = &st.amps;
        let fast = flow_rhs(&st);
        for m in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                for k in 0..n {
                    let l = (m + j) as isize - k as isize;
                    if l < 0 || l as usize >= n {
                        continue;
                    }
                    let l = l as usize;
                    acc += s(m, j, k, l) * a[j].conj() * a[k] * a[l];
                }
            }
            let want = acc * Complex64::new(0.0, -1.0) / (m + 1) as f64;
            assert!((fast[m] - want).norm() <= 1e-14 * want.norm().max(1.0), "N={n} mode {m}");
        }
    }
}

#[test]
fn hamiltonian_matches_quadruple_sum() {
    for (n, seed) in [(8, 4), (10, 5)] {
        let st = random_complex(n, seed);
        let a = &st.amps;
        let mut h = Complex64::new(0.0, 0.0);
        for m in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        if m + j == k + l {
                            h += s(m, j, k, l) * a[m].conj() * a[j].conj() * a[k] * a[l];
                        }
                    }
                }
            }
        }
        assert!(h.im.abs() < 1e-12);
        assert!((hamiltonian(&st) - h.re).abs() <= 1e-13 * h.re.abs().max(1.0), "N={n}");
    }
}

#[test]
fn real_cubic_term_matches_complex_path() {
    let a = random_real(12, 6, 1.0);
    let c: Vec<Complex64> = a.iter().map(|x| Complex64::new(*x, 0.0)).collect();
    let (gr, gc) = (cubic_term(&a), cubic_term(&c));
    for (x, y) in gr.iter().zip(&gc) {
        assert!((x - y.re).abs() < 1e-13 && y.im == 0.0);
    }
}

/// Number of eigenvalues below `sigma` from the signs of the pivots of an
/// unpivoted LDL^T factorization of `M - sigma I` (Sylvester's law of inertia).
fn count_below(m: &DMatrix<f64>, sigma: f64) -> usize {
    let n = m.nrows();
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] -= sigma;
    }
    let mut neg = 0;
    for k in 0..n {
        let mut p = a[(k, k)];
        if p == 0.0 {
            p = 1e-300;
        }
        if p < 0.0 {
            neg += 1;
        }
        for i in k + 1..n {
            let f = a[(i, k)] / p;
            for j in k + 1..n {
                a[(i, j)] -= f * a[(k, j)];
            }
        }
    }
    neg
}

fn bisection_eigs(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let r: f64 = (0..n).map(|i| (0..n).map(|j| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-r - 1.0, r + 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(m, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[test]
fn eigenvalues_match_bisection_oracle() {
    for seed in 0..5 {
        let n = 8;
        let v = random_real(n * n, 100 + seed, 1.0);
        let m = DMatrix::from_fn(n, n, |i, j| v[i * n + j] + v[j * n + i]);
        let got = sym_eigs(&m, true).unwrap();
        let want = bisection_eigs(&m);
        for (g, w) in got.values.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "seed {seed}: {g} vs {w}");
        }
        let vecs = got.vectors.unwrap();
        for k in 0..n {
            let x = vecs.column(k);
            let res = (&m * x - x * got.values[k]).norm();
            assert!(res < 1e-10 * m.norm());
        }
        let neg = inertia(&got.values, 1e-12).negative;
        assert_eq!(neg, count_below(&m, 0.0));
    }
}

/// Quadratic and cubic terms around the base mode written out term by term.
fn n_terms_oracle(base: usize, a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let at = |i: isize| if i >= 0 && (i as usize) < n { a[i as usize] } else { 0.0 };
    (0..n)
        .map(|m| {
            let mut q = 0.0;
            for j in 0..n {
                let l = (m + j) as isize - base as isize;
                if l >= 0 {
                    q += 2.0 * s(m, j, base, l as usize) * a[j] * at(l);
                }
            }
            for k in 0..=(m + base) {
                let l = (m + base) as isize - k as isize;
                if k < n {
                    q += s(m, base, k, l as usize) * a[k] * at(l);
                }
            }
            let mut c = 0.0;
            for j in 0..n {
                for k in 0..=(m + j) {
                    if k < n {
                        let l = (m + j - k) as isize;
                        c += s(m, j, k, l as usize) * a[j] * a[k] * at(l);
                    }
                }
            }
            q + c
        })
        .collect()
}

#[test]
fn nonlinear_terms_match_explicit_sums() {
    for (base, idx) in [(BaseMode::Lowest, 0), (BaseMode::Second, 1)] {
        let mut a = random_real(10, 7 + idx as u64, 0.3);
        if idx == 1 {
            a[1] = 0.0;
        } else {
            a[0] = 0.0;
        }
        let got = nonlinear_terms(base, &a);
        let want = n_terms_oracle(idx, &a);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-13, "{base:?}: {g} vs {w}");
        }
    }
}
