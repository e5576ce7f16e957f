use battery_core::fock::ThermalSpec;
use battery_core::gaussian::SymplecticParams;
use battery_core::multimode::{
    self, mode_cost, optimize_local_split, ModeSet, Objective, Strategy,
};
use battery_core::oracle::two_mode_oracle_stats;
use battery_core::solvers::{self, Extremum};

fn min_fluct_params(energy: f64, spec: ThermalSpec) -> SymplecticParams {
    if energy == 0.0 {
        return SymplecticParams::identity();
    }
    let sol = solvers::extremal_fluctuations(energy, spec, Extremum::Min).unwrap();
    let xi1 = (2.0 * sol.e_disp / spec.omega()).sqrt();
    SymplecticParams::new(0.0, sol.r, 0.0, [xi1, 0.0]).unwrap()
}

#[test]
fn split_totals_are_additive_and_match_the_joint_oracle() {
    let modes = ModeSet::new(2.0, &[1.0, 1.4]).unwrap();
    for de in [0.4, 0.9] {
        let split = optimize_local_split(
            de,
            &modes,
            Objective::Fluctuation,
            Strategy::GaussianOptimal,
            0.05,
        )
        .unwrap();
        let mut sum_v = 0.0;
        let mut sum_w = 0.0;
        for (spec, e) in modes.specs().iter().zip(&split.allocation) {
            let c =
                mode_cost(*spec, *e, Strategy::GaussianOptimal, Objective::Fluctuation).unwrap();
            sum_v += c.v;
            sum_w += c.dw2;
        }
        assert!((split.total_dw2 - sum_w).abs() < 1e-12);
        assert!((split.total_v - sum_v).abs() < 1e-12);

        let [a, b] = [modes.specs()[0], modes.specs()[1]];
        let pa = min_fluct_params(split.allocation[0], a);
        let pb = min_fluct_params(split.allocation[1], b);
        let joint = two_mode_oracle_stats((&pa, a), (&pb, b), 24).unwrap();
        assert!((joint.delta_e - de).abs() < 1e-6 * de);
        assert!((joint.delta_w2 - split.total_dw2).abs() < 1e-6 * split.total_dw2.max(1.0));
        assert!((joint.final_v - split.total_v).abs() < 1e-6 * split.total_v.max(1.0));
    }
}

#[test]
fn cold_modes_gain_little_from_splitting() {
    let modes = ModeSet::new(10.0, &[1.0, 1.0]).unwrap();
    let spec = modes.specs()[0];
    for i in 0..=60 {
        let de = 0.05 * i as f64;
        let split =
            optimize_local_split(de, &modes, Objective::Variance, Strategy::Fundamental, 0.05)
                .unwrap();
        let single = mode_cost(spec, de, Strategy::Fundamental, Objective::Variance)
            .unwrap()
            .v
            + mode_cost(spec, 0.0, Strategy::Fundamental, Objective::Variance)
                .unwrap()
                .v;
        assert!(split.total_v <= single + 1e-12);
        assert!(
            single - split.total_v < 1e-3,
            "ΔE={de}: {} vs {single}",
            split.total_v
        );
    }
}

#[test]
fn displacement_prefers_the_lower_frequency() {
    let modes = ModeSet::new(1.0, &[1.0, 2.0]).unwrap();
    let split = optimize_local_split(
        1.0,
        &modes,
        Objective::Variance,
        Strategy::Displacement,
        0.05,
    )
    .unwrap();
    assert_eq!(split.units, vec![20, 0]);
    let v = multimode::displacement_split_variance(1.0, 1.0, &modes).unwrap();
    assert!((split.total_v - v).abs() < 1e-12);
}

#[test]
fn commensurate_frequencies_allow_zero_fluctuations() {
    let modes = ModeSet::new(1.0, &[1.0, 2.0]).unwrap();
    for m in 0..=2 {
        for n in 0..=2 {
            let de = m as f64 + 2.0 * n as f64;
            let split = optimize_local_split(
                de,
                &modes,
                Objective::Fluctuation,
                Strategy::Fundamental,
                0.05,
            )
            .unwrap();
            assert!(split.total_dw2 < 1e-6, "ΔE={de}: {}", split.total_dw2);
        }
    }
}
