use anyhow::{Context, Result};
use battery_core::fock::{self, ThermalSpec};
use battery_core::multimode::{self, ModeSet, Objective, Strategy};
use battery_core::protocols::{self, optimal_precision_charge, recommended_dim, zero_temp_bounds};
use battery_core::solvers::{self, Extremum};
use battery_core::Execution;

use crate::table::{Cell, Table};
use crate::ConfigError;

/// Sweep settings after per-figure defaults have been applied.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub temps: Vec<f64>,
    pub emax: f64,
    pub step: f64,
    pub dim: Option<usize>,
}

impl SweepConfig {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(ConfigError(format!("--step must be > 0, got {}", self.step)).into());
        }
        if !(self.emax.is_finite() && self.emax >= 0.0) {
            return Err(ConfigError(format!("--emax must be >= 0, got {}", self.emax)).into());
        }
        let n = (self.emax / self.step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| i as f64 * self.step).collect())
    }

    pub fn specs(&self) -> Result<Vec<ThermalSpec>> {
        if self.temps.is_empty() {
            return Err(ConfigError("--temps must not be empty".into()).into());
        }
        self.temps
            .iter()
            .map(|t| {
                ThermalSpec::from_temperature(1.0, *t)
                    .map_err(|_| ConfigError(format!("invalid temperature {t}")).into())
            })
            .collect()
    }

    /// Column names for `names`, suffixed by temperature when several are swept.
    fn columns(&self, names: &[&str]) -> Vec<String> {
        let mut cols = vec!["delta_E".to_string()];
        for t in &self.temps {
            for n in names {
                if self.temps.len() == 1 {
                    cols.push(n.to_string());
                } else {
                    cols.push(format!("{n}_T{t}"));
                }
            }
        }
        cols
    }
}

/// Evaluates `row(spec, delta_e)` on the grid for every temperature, in
/// parallel, and lays the results out one row per energy.
fn sweep<F>(cfg: &SweepConfig, names: &[&str], row: F) -> Result<Table>
where
    F: Fn(ThermalSpec, f64) -> Result<Vec<f64>> + Sync + Send,
{
    let grid = cfg.grid()?;
    let specs = cfg.specs()?;
    let cells: Vec<(usize, f64)> = grid
        .iter()
        .flat_map(|e| (0..specs.len()).map(move |i| (i, *e)))
        .collect();
    let values = Execution::default().map(&cells, |(i, e)| {
        row(specs[*i], *e).with_context(|| format!("T={} delta_E={e}", cfg.temps[*i]))
    });
    let mut table = Table::new(cfg.columns(names));
    let mut values = values.into_iter();
    for e in &grid {
        let mut line = vec![Cell::Num(*e)];
        for _ in 0..specs.len() {
            let v = values.next().expect("one result per cell")?;
            line.extend(v.into_iter().map(Cell::Num));
        }
        table.push(line);
    }
    Ok(table)
}

pub fn fig1(cfg: &SweepConfig, d: usize) -> Result<Table> {
    if d < 2 {
        return Err(ConfigError(format!("--d must be >= 2, got {d}")).into());
    }
    if cfg.emax > (d - 1) as f64 {
        return Err(ConfigError(format!("--emax {} exceeds d - 1 = {}", cfg.emax, d - 1)).into());
    }
    let grid = cfg.grid()?;
    let mut table = Table::new(vec!["delta_E".into(), "v_min".into(), "v_max".into()]);
    for e in grid {
        let (lo, hi) = zero_temp_bounds(e, Some(d))?;
        table.push(vec![e.into(), lo.into(), hi.into()]);
    }
    Ok(table)
}

fn fundamental_dim(cfg: &SweepConfig, spec: ThermalSpec, eps: f64) -> usize {
    cfg.dim.unwrap_or_else(|| recommended_dim(spec, eps))
}

fn delta_sigma(v: f64, spec: ThermalSpec) -> f64 {
    v.sqrt() - spec.thermal_variance().sqrt()
}

pub fn fig2(cfg: &SweepConfig) -> Result<Table> {
    sweep(cfg, &["v", "delta_sigma"], |spec, e| {
        let rep = optimal_precision_charge(spec, e, fundamental_dim(cfg, spec, e))?;
        Ok(vec![rep.final_v, rep.delta_sigma])
    })
}

pub fn fig3(temp: f64, delta_e: f64, dim: usize) -> Result<Table> {
    let spec = ThermalSpec::from_temperature(1.0, temp)
        .map_err(|_| ConfigError(format!("invalid temperature {temp}")))?;
    if !(delta_e.is_finite() && delta_e >= 0.0) {
        return Err(ConfigError(format!("--delta-e must be >= 0, got {delta_e}")).into());
    }
    let rep = optimal_precision_charge(spec, delta_e, dim)?;
    let mut state = fock::thermal_weights(spec, dim)?;
    let e0 = state.stats().energy;
    let mut table = Table::new(
        ["step", "kind", "m", "n", "theta", "delta_E", "v"]
            .map(String::from)
            .to_vec(),
    );
    let kinds = rep
        .reorder
        .iter()
        .map(|r| ("reorder", *r))
        .chain(rep.steps.iter().map(|r| ("adjust", *r)))
        .chain(rep.post_shift.iter().map(|r| ("shift", *r)));
    for (i, (kind, rot)) in kinds.enumerate() {
        state = fock::replay(&state, [rot])?;
        let stats = state.stats();
        table.push(vec![
            Cell::Int(i + 1),
            kind.into(),
            Cell::Int(rot.m),
            Cell::Int(rot.n),
            rot.theta.into(),
            (stats.energy - e0).into(),
            stats.variance.into(),
        ]);
    }
    Ok(table)
}

pub fn fig4(cfg: &SweepConfig, quantum: f64) -> Result<Table> {
    if !(quantum.is_finite() && quantum > 0.0) {
        return Err(ConfigError(format!("--quantum must be > 0, got {quantum}")).into());
    }
    let off_grid = (cfg.step / quantum - (cfg.step / quantum).round()).abs() > 1e-9;
    if off_grid {
        eprintln!("warning: --step is not a multiple of --quantum; energies are rounded down onto the grid");
    }
    sweep(cfg, &["v_single", "v_even", "v_opt"], |spec, e| {
        let modes = ModeSet::from_specs(vec![spec, spec], vec!["A".into(), "B".into()])?;
        let cost = |x: f64| -> Result<f64> {
            Ok(multimode::mode_cost(spec, x, Strategy::Fundamental, Objective::Variance)?.v)
        };
        let single = cost(e)? + cost(0.0)?;
        let even = 2.0 * cost(0.5 * e)?;
        let split = multimode::optimize_local_split(
            e,
            &modes,
            Objective::Variance,
            Strategy::Fundamental,
            quantum,
        )?;
        Ok(vec![single, even, split.total_v])
    })
}

pub fn fig5(cfg: &SweepConfig) -> Result<Table> {
    sweep(
        cfg,
        &[
            "v_max",
            "v_min",
            "v_fund",
            "sigma_max",
            "sigma_min",
            "sigma_fund",
        ],
        |spec, e| {
            let v_max = solvers::worst_precision_variance(e, spec)?;
            let v_min = solvers::best_precision(e, spec)?.objective;
            let v_fund = optimal_precision_charge(spec, e, fundamental_dim(cfg, spec, e))?.final_v;
            Ok(vec![
                v_max,
                v_min,
                v_fund,
                delta_sigma(v_max, spec),
                delta_sigma(v_min, spec),
                delta_sigma(v_fund, spec),
            ])
        },
    )
}

pub fn fig6(cfg: &SweepConfig) -> Result<Table> {
    sweep(cfg, &["dw_min", "dw_max", "dw_fund"], |spec, e| {
        let lo = solvers::extremal_fluctuations(e, spec, Extremum::Min)?.objective;
        let hi = solvers::extremal_fluctuations(e, spec, Extremum::Max)?.objective;
        let fund = protocols::min_fluctuation_value(e / spec.omega()) * spec.omega() * spec.omega();
        Ok(vec![lo.max(0.0).sqrt(), hi.sqrt(), fund.sqrt()])
    })
}

pub fn explain(figure: &str) -> &'static str {
    match figure {
        "fig1" => "\
delta_E  energy input in units of omega
v_min    zero_temp_bounds(delta_E, Some(d)).0, minimal variance of a d-level ladder from its ground state
v_max    zero_temp_bounds(delta_E, Some(d)).1, maximal variance
",
        "fig2" => "\
delta_E      energy input in units of omega
v            optimal_precision_charge(...).final_v, smallest final variance of any unitary
delta_sigma  optimal_precision_charge(...).delta_sigma, matching change of the standard deviation
Columns carry a _T<temperature> suffix when several temperatures are swept.
",
        "fig3" => "\
step     position in the rotation sequence
kind     reorder (ChargingReport.reorder), adjust (ChargingReport.steps) or shift (ChargingReport.post_shift)
m, n     levels rotated by the step
theta    rotation angle; pi/2 is a full swap
delta_E  fock::replay up to this step, energy change from the thermal state
v        fock::replay up to this step, energy variance
",
        "fig4" => "\
delta_E   total energy input to two equal-frequency modes
v_single  multimode::mode_cost(Fundamental, Variance) with all energy in one mode plus the idle mode
v_even    multimode::mode_cost(Fundamental, Variance) with delta_E/2 in each mode
v_opt     multimode::optimize_local_split(Variance, Fundamental, quantum).total_v
Columns carry a _T<temperature> suffix when several temperatures are swept.
",
        "fig5" => "\
delta_E     energy input in units of omega
v_max       solvers::worst_precision_variance, squeezing only
v_min       solvers::best_precision(...).objective, best Gaussian unitary
v_fund      protocols::optimal_precision_charge(...).final_v, best unitary
sigma_*     sqrt(v_*) - sqrt(V(thermal)), the standard deviation change of each column above
Columns carry a _T<temperature> suffix when several temperatures are swept.
",
        "fig6" => "\
delta_E  energy input in units of omega
dw_min   sqrt of solvers::extremal_fluctuations(Min).objective, smallest Gaussian work fluctuation
dw_max   sqrt of solvers::extremal_fluctuations(Max).objective, largest Gaussian work fluctuation
dw_fund  sqrt of protocols::min_fluctuation_value, smallest fluctuation of any unitary
Columns carry a _T<temperature> suffix when several temperatures are swept.
",
        _ => "",
    }
}
