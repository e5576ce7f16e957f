use std::f64::consts::PI;

use anyhow::Result;
use battery_core::fock::ThermalSpec;
use battery_core::gaussian::{self, gaussian_charge_stats, SymplecticParams};
use battery_core::oracle::oracle_stats;
use battery_core::protocols::{min_fluctuation_charge, min_fluctuation_value};
use battery_core::solvers::{self, Extremum};
use battery_core::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one suite.
pub struct Summary {
    pub line: String,
    pub passed: bool,
}

fn summary(name: &str, cases: usize, what: &str, worst: f64, tol: f64) -> Summary {
    let passed = worst < tol;
    let line = if passed {
        format!("{name}: {cases} cases, {what} < {tol:e}")
    } else {
        format!("{name}: {cases} cases, {what} = {worst:e} exceeds {tol:e}")
    };
    Summary { line, passed }
}

/// Parameter range on which 120 levels hold the charged thermal state.
const R_MAX: f64 = 0.5;
const XI_MAX: f64 = 3.0;
const BETA_OMEGA: (f64, f64) = (1.0, 5.0);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

/// Closed-form Gaussian statistics against the dense truncated oracle.
pub fn oracle(seed: u64, cases: usize, dim: usize, tol: f64) -> Result<Summary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(SymplecticParams, ThermalSpec)> = (0..cases)
        .map(|_| {
            let len = rng.gen_range(0.0..XI_MAX);
            let dir: f64 = rng.gen_range(0.0..2.0 * PI);
            let p = SymplecticParams::new(
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.0..R_MAX),
                rng.gen_range(0.0..2.0 * PI),
                [len * dir.cos(), len * dir.sin()],
            )?;
            let spec = ThermalSpec::new(1.0, rng.gen_range(BETA_OMEGA.0..BETA_OMEGA.1))?;
            Ok((p, spec))
        })
        .collect::<Result<_>>()?;
    let errs = Execution::default().map(&draws, |(p, spec)| -> Result<f64> {
        let o = oracle_stats(p, *spec, dim)?;
        let c = gaussian_charge_stats(p, *spec);
        Ok(rel(o.delta_e, c.delta_e)
            .max(rel(o.final_v, c.final_v))
            .max(rel(o.delta_w2, c.delta_w2)))
    });
    let mut worst: f64 = 0.0;
    for e in errs {
        worst = worst.max(e?);
    }
    Ok(summary("oracle", cases, "max rel err", worst, tol))
}

/// Ledger-computed work fluctuations of the minimal-fluctuation protocol
/// against the closed-form minimum.
pub fn protocols(dim: usize, tol: f64) -> Result<Summary> {
    let temps = [0.3, 0.7, std::f64::consts::LN_2, 1.0, 2.0];
    let cells: Vec<(f64, f64)> = temps
        .iter()
        .flat_map(|b| (1..=29).map(move |i| (*b, 0.1 * i as f64)))
        .collect();
    let errs = Execution::default().map(&cells, |(b, e)| -> Result<f64> {
        let spec = ThermalSpec::new(1.0, *b)?;
        let rep = min_fluctuation_charge(spec, *e, dim)?;
        Ok((rep.delta_w2 - min_fluctuation_value(*e)).abs())
    });
    let mut worst: f64 = 0.0;
    for e in errs {
        worst = worst.max(e?);
    }
    Ok(summary("protocols", cells.len(), "max abs err", worst, tol))
}

/// Random feasible Gaussian strategies against the solver bounds.
pub fn bounds(seed: u64, cases: usize, tol: f64) -> Result<Summary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let spec = ThermalSpec::new(1.0, rng.gen_range(0.2..20.0))?;
        let e: f64 = rng.gen_range(0.0..10.0);
        let r = rng.gen_range(0.0..=1.0) * gaussian::max_squeezing(e, spec)?;
        let len = (2.0 * (e - gaussian::squeezing_energy(r, spec)).max(0.0)).sqrt();
        let a: f64 = rng.gen_range(0.0..2.0 * PI);
        let c = gaussian_charge_stats(
            &SymplecticParams::new(0.0, r, 0.0, [len * a.cos(), len * a.sin()])?,
            spec,
        );
        let v_lo = solvers::best_precision(e, spec)?.objective;
        let v_hi = solvers::worst_precision_variance(e, spec)?;
        let w_lo = solvers::extremal_fluctuations(e, spec, Extremum::Min)?.objective;
        let w_hi = solvers::extremal_fluctuations(e, spec, Extremum::Max)?.objective;
        let scale = v_hi.max(1.0);
        for gap in [
            v_lo - c.final_v,
            c.final_v - v_hi,
            w_lo - c.delta_w2,
            c.delta_w2 - w_hi,
        ] {
            worst = worst.max(gap / scale);
        }
    }
    Ok(summary("bounds", cases, "max violation", worst, tol))
}
