use std::f64::consts::PI;

use battery_core::fock::ThermalSpec;
use battery_core::gaussian::{
    self, apply_symplectic, gaussian_charge_stats, photon_moments, thermal_gaussian, v_bounds_at_r,
    SymplecticParams,
};
use battery_core::solvers::{self, Extremum};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = SymplecticParams> {
    (
        0.0..2.0 * PI,
        0.0f64..2.0,
        0.0..2.0 * PI,
        -3.0f64..3.0,
        -3.0f64..3.0,
    )
        .prop_map(|(t, r, p, a, b)| SymplecticParams::new(t, r, p, [a, b]).unwrap())
}

proptest! {
    #[test]
    fn determinant_is_preserved(beta_omega in 0.1f64..10.0, p in params()) {
        let spec = ThermalSpec::new(1.3, beta_omega).unwrap();
        let s0 = thermal_gaussian(spec);
        let s1 = apply_symplectic(&s0, &p);
        let (d0, d1) = (s0.gamma.determinant(), s1.gamma.determinant());
        prop_assert!((d1 - d0).abs() < 1e-12 * d0.max(1.0) * (4.0 * p.r).cosh());
        prop_assert!(s1.is_physical(1e-9));
    }

    #[test]
    fn energy_ignores_the_rotations(beta_omega in 0.1f64..10.0, p in params(), t2 in 0.0..2.0 * PI, p2 in 0.0..2.0 * PI) {
        let spec = ThermalSpec::new(1.0, beta_omega).unwrap();
        let a = gaussian_charge_stats(&p, spec);
        let q = SymplecticParams::new(t2, p.r, p2, [p.xi[0], p.xi[1]]).unwrap();
        let b = gaussian_charge_stats(&q, spec);
        prop_assert!((a.delta_e - b.delta_e).abs() < 1e-12 * a.delta_e.max(1.0));
    }

    #[test]
    fn rotation_acts_through_the_displacement(beta_omega in 0.1f64..10.0, p in params()) {
        let spec = ThermalSpec::new(1.0, beta_omega).unwrap();
        let a = gaussian_charge_stats(&p, spec);
        let xi = gaussian::rotation(-p.theta) * p.xi;
        prop_assert!((xi - p.effective_xi()).norm() < 1e-12 * xi.norm().max(1.0));
        let q = SymplecticParams::new(0.0, p.r, p.phi, [xi[0], xi[1]]).unwrap();
        let b = gaussian_charge_stats(&q, spec);
        let scale = a.final_v.abs().max(1.0);
        prop_assert!((a.final_v - b.final_v).abs() < 1e-12 * scale);
        prop_assert!((a.delta_w2 - b.delta_w2).abs() < 1e-12 * scale);
    }

    #[test]
    fn closed_form_matches_moment_propagation(beta_omega in 0.1f64..10.0, p in params()) {
        let spec = ThermalSpec::new(0.9, beta_omega).unwrap();
        let charged = apply_symplectic(&thermal_gaussian(spec), &p);
        let m = photon_moments(&charged);
        let c = gaussian_charge_stats(&p, spec);
        let w = spec.omega();
        let e1 = spec.thermal_energy() + c.delta_e;
        prop_assert!((m.mean * w - e1).abs() < 1e-10 * e1.max(1.0));
        prop_assert!((m.variance * w * w - c.final_v).abs() < 1e-9 * c.final_v.max(1.0));
    }

    #[test]
    fn variance_lies_between_directional_bounds(
        beta_omega in 0.1f64..10.0,
        eps in 0.01f64..8.0,
        frac in 0.0f64..1.0,
        angle in 0.0..2.0 * PI,
    ) {
        let spec = ThermalSpec::new(1.0, beta_omega).unwrap();
        let r_max = gaussian::max_squeezing(eps, spec).unwrap();
        let r = frac * r_max;
        let resid = eps - gaussian::squeezing_energy(r, spec);
        let len = (2.0 * resid.max(0.0)).sqrt();
        let p = SymplecticParams::new(0.0, r, 0.0, [len * angle.cos(), len * angle.sin()]).unwrap();
        let v = gaussian_charge_stats(&p, spec).final_v;
        let (lo, hi) = v_bounds_at_r(r, eps, spec).unwrap();
        let slack = 1e-10 * hi.max(1.0);
        prop_assert!(lo - slack <= v && v <= hi + slack, "{lo} <= {v} <= {hi}");
    }

    #[test]
    fn solver_bounds_order_random_strategies(
        beta_omega in 0.2f64..20.0,
        eps in 0.0f64..10.0,
        frac in 0.0f64..1.0,
        angle in 0.0..2.0 * PI,
    ) {
        let spec = ThermalSpec::new(1.0, beta_omega).unwrap();
        let r = frac * gaussian::max_squeezing(eps, spec).unwrap();
        let resid = (eps - gaussian::squeezing_energy(r, spec)).max(0.0);
        let len = (2.0 * resid).sqrt();
        let p = SymplecticParams::new(0.0, r, 0.0, [len * angle.cos(), len * angle.sin()]).unwrap();
        let c = gaussian_charge_stats(&p, spec);
        let best = solvers::best_precision(eps, spec).unwrap().objective;
        let worst = solvers::worst_precision_variance(eps, spec).unwrap();
        let lo = solvers::extremal_fluctuations(eps, spec, Extremum::Min).unwrap().objective;
        let hi = solvers::extremal_fluctuations(eps, spec, Extremum::Max).unwrap().objective;
        let slack = 1e-9 * worst.max(1.0);
        prop_assert!(best - slack <= c.final_v && c.final_v <= worst + slack);
        prop_assert!(lo - slack <= c.delta_w2 && c.delta_w2 <= hi + slack);
    }

    #[test]
    fn solvers_are_deterministic(beta_omega in 0.2f64..20.0, eps in 0.0f64..50.0) {
        let spec = ThermalSpec::new(1.0, beta_omega).unwrap();
        prop_assert_eq!(solvers::best_precision(eps, spec), solvers::best_precision(eps, spec));
        prop_assert_eq!(
            solvers::extremal_fluctuations(eps, spec, Extremum::Max),
            solvers::extremal_fluctuations(eps, spec, Extremum::Max)
        );
    }
}

#[test]
fn energy_split_of_best_precision_adds_up() {
    let spec = ThermalSpec::new(1.0, 1.0).unwrap();
    for eps in [0.5, 3.0, 40.0, 1e4] {
        let sol = solvers::best_precision(eps, spec).unwrap();
        assert!((sol.e_disp + sol.e_sq - eps).abs() < 1e-9 * eps);
        let xi1 = (2.0 * sol.e_disp).sqrt();
        let p = SymplecticParams::new(0.0, sol.r, 0.0, [xi1, 0.0]).unwrap();
        let c = gaussian_charge_stats(&p, spec);
        assert!((c.final_v - sol.objective).abs() < 1e-9 * sol.objective);
    }
}
