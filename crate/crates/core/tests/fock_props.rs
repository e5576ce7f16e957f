use std::f64::consts::FRAC_PI_2;

use battery_core::fock::{
    self, apply_two_level_rotation, work_fluctuation, Rotation, ThermalSpec, TransitionLedger,
};
use proptest::prelude::*;

fn rotation_seq(dim: usize, max_len: usize) -> impl Strategy<Value = Vec<(usize, usize, f64)>> {
    prop::collection::vec((0..dim, 0..dim, 0.0..FRAC_PI_2), 0..max_len)
        .prop_map(|v| v.into_iter().filter(|(m, n, _)| m != n).collect())
}

fn run(
    spec: ThermalSpec,
    dim: usize,
    seq: &[(usize, usize, f64)],
) -> (fock::DiagonalState, fock::DiagonalState, TransitionLedger) {
    let initial = fock::thermal_weights(spec, dim).unwrap();
    let mut state = initial.clone();
    let mut ledger = TransitionLedger::identity(&state);
    for &(m, n, theta) in seq {
        (state, ledger) = apply_two_level_rotation(&state, &ledger, m, n, theta).unwrap();
    }
    (initial, state, ledger)
}

proptest! {
    #[test]
    fn rotations_conserve_probability_and_ledger(
        beta_omega in 0.3f64..4.0,
        seq in rotation_seq(40, 30),
    ) {
        let spec = ThermalSpec::new(1.0, beta_omega).unwrap();
        let dim = spec.min_dim().max(40);
        let (initial, state, ledger) = run(spec, dim, &seq);
        let total: f64 = state.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for m in 0..dim {
            prop_assert!((ledger.row_sum(m) - initial.weights()[m]).abs() < 1e-12);
            prop_assert!((ledger.column_sum(m) - state.weights()[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn swaps_permute_the_spectrum(
        beta_omega in 0.3f64..4.0,
        seq in prop::collection::vec((0usize..30, 0usize..30, any::<bool>()), 0..40),
    ) {
        let spec = ThermalSpec::new(1.0, beta_omega).unwrap();
        let dim = spec.min_dim().max(30);
        let seq: Vec<_> = seq
            .into_iter()
            .filter(|(m, n, _)| m != n)
            .map(|(m, n, s)| (m, n, if s { FRAC_PI_2 } else { 0.0 }))
            .collect();
        let (initial, state, _) = run(spec, dim, &seq);
        let mut a = initial.weights().to_vec();
        let mut b = state.weights().to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ground_state_fluctuations_equal_variance(seq in rotation_seq(12, 20)) {
        let spec = ThermalSpec::zero_temperature(1.0).unwrap();
        let (_, state, ledger) = run(spec, 12, &seq);
        let stats = fock::diag_stats(&state);
        let dw2 = work_fluctuation(&ledger, stats.energy).unwrap();
        prop_assert!((dw2 - stats.variance).abs() < 1e-12);
    }

    #[test]
    fn replay_matches_direct_application(
        beta_omega in 0.3f64..4.0,
        seq in rotation_seq(30, 25),
    ) {
        let spec = ThermalSpec::new(1.0, beta_omega).unwrap();
        let dim = spec.min_dim().max(30);
        let (initial, state, _) = run(spec, dim, &seq);
        let rots = seq.iter().map(|&(m, n, theta)| Rotation { m, n, theta });
        let replayed = fock::replay(&initial, rots).unwrap();
        prop_assert_eq!(replayed.weights(), state.weights());
    }
}

#[test]
fn ledger_energy_change_matches_state_energy() {
    let spec = ThermalSpec::new(1.0, 0.8).unwrap();
    let seq = [(0, 3, 0.4), (1, 5, 1.1), (3, 7, FRAC_PI_2)];
    let (initial, state, ledger) = run(spec, spec.min_dim(), &seq);
    let de = state.stats().energy - initial.stats().energy;
    assert!((ledger.mean_energy_change() - de).abs() < 1e-12);
}
