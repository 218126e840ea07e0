//! Fixtures shared by the criterion benches.

use conflow_core::families::{pair_state, PairSign};
use conflow_core::{AmplitudeState, Complex64, StationaryState};

/// Deterministic complex state with geometric decay.
pub fn decaying_state(n: usize) -> AmplitudeState {
    AmplitudeState::new(
        (0..n)
            .map(|k| {
                let x = k as f64;
                Complex64::new((0.7 * x).cos(), (1.3 * x + 0.2).sin()) * 0.6f64.powi(k as i32)
            })
            .collect(),
    )
}

pub fn pair_fixture(n: usize) -> StationaryState {
    pair_state(0.15, 1.0, PairSign::Plus, n).expect("p inside the pair range")
}
