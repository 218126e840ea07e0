use conflow_core::evolution::integrate;
use conflow_core::families::{
    alternating_state, blaschke_state, ground_state, pair_state, stationary_residual, twisted_state,
};
use conflow_core::flow::{
    apply_global_phase, apply_local_phase, apply_scaling, conserved, cubic_term, hamiltonian, mass, energy,
};
use conflow_core::solver::{nonlinear_terms, BaseMode};
use conflow_core::spectral::{apply_hessians, assemble_hessians};
use conflow_core::{AmplitudeState, Complex64, PairSign, StationaryState};
use proptest::prelude::*;

fn supported(values: Vec<f64>, keep: impl Fn(usize) -> bool) -> Vec<f64> {
    values.into_iter().enumerate().map(|(i, v)| if keep(i) { v } else { 0.0 }).collect()
}

fn k_functional(a: &[Complex64], lambda: f64, omega: f64) -> f64 {
    let st = AmplitudeState::new(a.to_vec());
    let (q, e) = (mass(a), energy(a));
    0.5 * hamiltonian(&st) - lambda * q - omega * (q - e)
}

fn family(kind: u8, p: f64) -> StationaryState {
    match kind {
        0 => ground_state(p, 1.0 - p * p, 64).unwrap(),
        1 => twisted_state(p, 1.0, 64).unwrap(),
        2 => pair_state(p.min(0.26), 1.0, PairSign::Plus, 64).unwrap(),
        3 => pair_state(p.min(0.26), 1.0, PairSign::Minus, 64).unwrap(),
        4 => blaschke_state(p, 64).unwrap(),
        _ => alternating_state(p, 1.0, 64).unwrap(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lowest_mode_sparsity(m in prop::sample::select(vec![2usize, 3, 5]), v in prop::collection::vec(-0.3f64..0.3, 24)) {
        let a = supported(v, |i| i % m == 0);
        for (n, x) in nonlinear_terms(BaseMode::Lowest, &a).iter().enumerate() {
            if n % m != 0 {
                prop_assert!(x.abs() < 1e-15, "m={} n={} value {:e}", m, n, x);
            }
        }
        for (n, x) in cubic_term(&a).iter().enumerate() {
            if n % m != 0 {
                prop_assert!(x.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn second_mode_sparsity(m in 2usize..6, v in prop::collection::vec(-0.3f64..0.3, 24)) {
        let a = supported(v, |i| i >= 1 && (i - 1) % m == 0);
        let nl = nonlinear_terms(BaseMode::Second, &a);
        prop_assert!(nl[0].abs() < 1e-15);
        for (n, x) in nl.iter().enumerate().skip(1) {
            if (n - 1) % m != 0 {
                prop_assert!(x.abs() < 1e-15, "m={} n={} value {:e}", m, n, x);
            }
        }
    }

    #[test]
    fn gauge_directions_span_kernel_of_l_minus(kind in 0u8..6, p in 0.05f64..0.5) {
        let st = family(kind, p);
        let h = assemble_hessians(&st);
        let lm = &h.l_minus;
        let scale = lm.norm();
        let a = nalgebra::DVector::from_vec(st.amps.clone());
        let na = nalgebra::DVector::from_fn(a.len(), |i, _| i as f64 * a[i]);
        prop_assert!((lm * &a).norm() <= 1e-9 * scale * a.norm());
        prop_assert!((lm * &na).norm() <= 1e-9 * scale * na.norm());
    }

    #[test]
    fn hessians_symmetric_and_match_matrix_free(kind in 0u8..6, p in 0.05f64..0.5, v in prop::collection::vec(-1.0f64..1.0, 64)) {
        let st = family(kind, p);
        let h = assemble_hessians(&st);
        let sym = |m: &nalgebra::DMatrix<f64>| (m - m.transpose()).norm() <= 1e-13 * m.norm();
        prop_assert!(sym(&h.l_plus) && sym(&h.l_minus));
        let (lp, lm) = apply_hessians(&st, &v);
        let x = nalgebra::DVector::from_vec(v.clone());
        let (ep, em) = (&h.l_plus * &x, &h.l_minus * &x);
        for i in 0..64 {
            prop_assert!((lp[i] - ep[i]).abs() <= 1e-12 * h.l_plus.norm().max(1.0));
            prop_assert!((lm[i] - em[i]).abs() <= 1e-12 * h.l_minus.norm().max(1.0));
        }
    }

    #[test]
    fn phase_actions_preserve_invariants(re in prop::collection::vec(-1.0f64..1.0, 12), im in prop::collection::vec(-1.0f64..1.0, 12), theta in 0.0f64..6.3, phi in 0.0f64..6.3) {
        let st = AmplitudeState::new(re.iter().zip(&im).map(|(r, i)| Complex64::new(*r, *i)).collect());
        let c0 = conserved(&st);
        for moved in [apply_global_phase(&st, theta), apply_local_phase(&st, phi)] {
            let c = conserved(&moved);
            prop_assert!((c.h - c0.h).abs() <= 1e-12 * c0.h.abs().max(1.0));
            prop_assert!((c.q - c0.q).abs() <= 1e-12 * c0.q);
            prop_assert!((c.e - c0.e).abs() <= 1e-12 * c0.e);
            prop_assert!((c.z.norm() - c0.z.norm()).abs() <= 1e-12 * c0.e);
        }
    }

    #[test]
    fn scaled_stationary_state_is_stationary(kind in 0u8..6, p in 0.05f64..0.4, c in 0.2f64..3.0) {
        let st = family(kind, p);
        let a: Vec<f64> = st.amps.iter().map(|x| c * x).collect();
        let r = stationary_residual(&a, c * c * st.lambda, c * c * st.omega);
        let scale = (c * c * st.lambda).abs().max(1.0) * a.iter().fold(0.0f64, |m, x| m.max(x.abs())).powi(2);
        prop_assert!(r.iter().all(|x| x.abs() <= 1e-10 * scale));
    }

    #[test]
    fn family_residual_and_z_constraint(kind in 0u8..6, p in 0.01f64..0.26) {
        let st = family(kind, p);
        let amax = st.amps.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(st.residual_norm() <= 1e-9 * st.lambda.abs().max(1.0) * amax * amax);
        if st.omega != 0.0 {
            prop_assert!(st.z_constraint().abs() <= 1e-10 * st.energy());
        }
    }

    #[test]
    fn second_variation_matches_k(kind in 0u8..6, p in 0.05f64..0.4, seed in prop::collection::vec(-1.0f64..1.0, 32)) {
        let st = family(kind, p);
        let n = 64;
        let dir: Vec<f64> = (0..n).map(|i| if i < 32 { seed[i] * 0.7f64.powi(i as i32) } else { 0.0 }).collect();
        let base: Vec<Complex64> = st.amps.iter().map(|x| Complex64::new(*x, 0.0)).collect();
        let k0 = k_functional(&base, st.lambda, st.omega);
        let (lp, lm) = apply_hessians(&st, &dir);
        let (qp, qm) = (dot(&lp, &dir), dot(&lm, &dir));
        let mut rem = Vec::new();
        for h in [1e-3, 1e-4] {
            let shift = |u: Complex64| -> f64 {
                let moved: Vec<Complex64> = base.iter().zip(&dir).map(|(b, d)| b + u * (h * d)).collect();
                k_functional(&moved, st.lambda, st.omega) - k0
            };
            let sym_p = (shift(Complex64::new(1.0, 0.0)) + shift(Complex64::new(-1.0, 0.0))) / (2.0 * h * h);
            let sym_m = (shift(Complex64::new(0.0, 1.0)) + shift(Complex64::new(0.0, -1.0))) / (2.0 * h * h);
            let scale = qp.abs().max(qm.abs()).max(l2(&dir).powi(2));
            prop_assert!((sym_p - qp).abs() <= 1e-5 * scale, "L+ {} vs {}", sym_p, qp);
            prop_assert!((sym_m - qm).abs() <= 1e-5 * scale, "L- {} vs {}", sym_m, qm);
            // One-sided remainder in a mixed direction is cubic in h.
            let u = Complex64::new(0.6, 0.8);
            let full = shift(u) - h * h * (0.36 * qp + 0.64 * qm);
            rem.push(full.abs());
        }
        prop_assert!(rem[1] <= rem[0] / 300.0 + 1e-13, "remainders {:?}", rem);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn evolution_is_gauge_equivariant(theta in 0.0f64..6.3, seed in 0u64..1000) {
        let st = conflow_core::evolution::random_state(12, 1.0, 0.5, seed);
        let t1 = integrate(&st, 1.0, 1e-2, 100).unwrap();
        let t2 = integrate(&apply_global_phase(&st, theta), 1.0, 1e-2, 100).unwrap();
        let want = apply_global_phase(t1.last(), theta);
        prop_assert!(t2.last().sub(&want).max_abs() <= 1e-12);
    }

    #[test]
    fn evolution_respects_scaling(c in 0.5f64..1.5, seed in 0u64..1000) {
        let st = conflow_core::evolution::random_state(12, 1.0, 0.5, seed);
        let t = 0.8;
        let small = integrate(&apply_scaling(&st, c), t, 1e-3, 1000).unwrap();
        let ref_traj = integrate(&st, c * c * t, 1e-3 * c * c, 1000).unwrap();
        let want = apply_scaling(ref_traj.last(), c);
        prop_assert!(small.last().sub(&want).max_abs() <= 1e-8);
    }

    #[test]
    fn evolution_composes_in_time(seed in 0u64..1000) {
        let st = conflow_core::evolution::random_state(12, 1.0, 0.5, seed);
        let whole = integrate(&st, 2.0, 1e-3, 2000).unwrap();
        let first = integrate(&st, 1.2, 1e-3, 1200).unwrap();
        let second = integrate(first.last(), 0.8, 1e-3, 800).unwrap();
        prop_assert!(whole.last().sub(second.last()).max_abs() <= 1e-10);
    }
}
