//! Splitting an energy budget across independently charged modes.
//!
//! With local unitaries the modes stay uncorrelated, so energies, variances
//! and work fluctuations all add up mode by mode.

use thiserror::Error;

use crate::exec::Execution;
use crate::fock::{FockError, ThermalSpec};
use crate::gaussian::{self, GaussianError};
use crate::protocols::{self, ProtocolError};
use crate::solvers::{self, Extremum, SolverError};

/// Largest number of allocations [`optimize_local_split`] will enumerate.
pub const MAX_ALLOCATIONS: u128 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultimodeError {
    #[error("mode set is empty")]
    Empty,
    #[error("modes must share one temperature")]
    MixedTemperature,
    #[error("expected {expected} modes, got {got}")]
    WrongModeCount { expected: usize, got: usize },
    #[error("invalid split fraction {0}")]
    InvalidFraction(f64),
    #[error("grid quantum must be finite and > 0, got {0}")]
    InvalidQuantum(f64),
    #[error("energy input must be finite and >= 0, got {0}")]
    InvalidEnergy(f64),
    #[error("{count} allocations exceed the limit")]
    GridTooFine { count: u128 },
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    specs: Vec<ThermalSpec>,
    labels: Vec<String>,
}

impl ModeSet {
    /// Modes labelled `A`, `B`, ... at a shared inverse temperature.
    pub fn new(beta: f64, omegas: &[f64]) -> Result<Self, MultimodeError> {
        let specs = omegas
            .iter()
            .map(|w| ThermalSpec::new(*w, beta))
            .collect::<Result<Vec<_>, _>>()?;
        let labels = (0..specs.len()).map(default_label).collect();
        Self::from_specs(specs, labels)
    }

    pub fn from_specs(
        specs: Vec<ThermalSpec>,
        labels: Vec<String>,
    ) -> Result<Self, MultimodeError> {
        let Some(first) = specs.first() else {
            return Err(MultimodeError::Empty);
        };
        if specs.iter().any(|s| s.beta() != first.beta()) {
            return Err(MultimodeError::MixedTemperature);
        }
        if labels.len() != specs.len() {
            return Err(MultimodeError::WrongModeCount {
                expected: specs.len(),
                got: labels.len(),
            });
        }
        Ok(Self { specs, labels })
    }

    pub fn specs(&self) -> &[ThermalSpec] {
        &self.specs
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn min_omega(&self) -> f64 {
        self.specs
            .iter()
            .map(|s| s.omega())
            .fold(f64::INFINITY, f64::min)
    }
}

fn default_label(i: usize) -> String {
    if i < 26 {
        ((b'A' + i as u8) as char).to_string()
    } else {
        format!("M{i}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Objective {
    Variance,
    Fluctuation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Best single-mode Gaussian unitary for the objective.
    GaussianOptimal,
    Displacement,
    SqueezeOnly,
    /// Unrestricted unitaries via the Fock-space protocols.
    Fundamental,
}

/// Final variance and work fluctuations of one mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeCost {
    pub v: f64,
    pub dw2: f64,
}

impl ModeCost {
    pub fn get(&self, objective: Objective) -> f64 {
        match objective {
            Objective::Variance => self.v,
            Objective::Fluctuation => self.dw2,
        }
    }
}

/// Cost of charging one mode by `energy` with a strategy tuned for `objective`.
pub fn mode_cost(
    spec: ThermalSpec,
    energy: f64,
    strategy: Strategy,
    objective: Objective,
) -> Result<ModeCost, MultimodeError> {
    if !(energy.is_finite() && energy >= 0.0) {
        return Err(MultimodeError::InvalidEnergy(energy));
    }
    let v0 = spec.thermal_variance();
    if energy == 0.0 {
        return Ok(ModeCost { v: v0, dw2: 0.0 });
    }
    let omega = spec.omega();
    let cost = match (strategy, objective) {
        (Strategy::Displacement, _) => {
            let dw2 = spec.nu() * omega * energy;
            ModeCost { v: dw2 + v0, dw2 }
        }
        (Strategy::SqueezeOnly, _) => {
            let r = gaussian::max_squeezing(energy, spec)?;
            let v = solvers::worst_precision_variance(energy, spec)?;
            ModeCost {
                v,
                dw2: v + gaussian::fluctuation_offset(r, spec),
            }
        }
        (Strategy::GaussianOptimal, Objective::Variance) => {
            let sol = solvers::best_precision(energy, spec)?;
            ModeCost {
                v: sol.objective,
                dw2: sol.objective + gaussian::fluctuation_offset(sol.r, spec),
            }
        }
        (Strategy::GaussianOptimal, Objective::Fluctuation) => {
            let sol = solvers::extremal_fluctuations(energy, spec, Extremum::Min)?;
            ModeCost {
                v: sol.objective - gaussian::fluctuation_offset(sol.r, spec),
                dw2: sol.objective,
            }
        }
        (Strategy::Fundamental, Objective::Fluctuation) if !spec.is_zero_temperature() => {
            let eps = energy / omega;
            let dim = spec.min_dim() + eps.floor() as usize + 2 + protocols::DIM_MARGIN;
            let rep = protocols::min_fluctuation_charge(spec, eps, dim)?;
            ModeCost {
                v: rep.final_v,
                dw2: rep.delta_w2,
            }
        }
        // At zero temperature the precision-optimal protocol also minimises
        // the fluctuations, since both equal the final variance.
        (Strategy::Fundamental, _) => {
            let eps = energy / omega;
            let rep = protocols::optimal_precision_charge(
                spec,
                eps,
                protocols::recommended_dim(spec, eps),
            )?;
            ModeCost {
                v: rep.final_v,
                dw2: rep.delta_w2,
            }
        }
    };
    Ok(cost)
}

/// Closed-form final variance when a fraction `p` of `delta_e` displaces
/// the first of two modes and the rest displaces the second.
pub fn displacement_split_variance(
    p: f64,
    delta_e: f64,
    modes: &ModeSet,
) -> Result<f64, MultimodeError> {
    if modes.len() != 2 {
        return Err(MultimodeError::WrongModeCount {
            expected: 2,
            got: modes.len(),
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(MultimodeError::InvalidFraction(p));
    }
    let [a, b] = [modes.specs[0], modes.specs[1]];
    let slope = p * a.nu() * a.omega() + (1.0 - p) * b.nu() * b.omega();
    Ok(slope * delta_e + a.thermal_variance() + b.thermal_variance())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult {
    /// Energy given to each mode.
    pub allocation: Vec<f64>,
    /// Grid quanta given to each mode.
    pub units: Vec<usize>,
    pub total_v: f64,
    pub total_dw2: f64,
    pub objective: Objective,
    pub strategy: Strategy,
    /// Requested energy when it was rounded down onto the grid.
    pub rounded_from: Option<f64>,
}

impl SplitResult {
    pub fn value(&self) -> f64 {
        match self.objective {
            Objective::Variance => self.total_v,
            Objective::Fluctuation => self.total_dw2,
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Per-mode costs for `0..=units` quanta.
pub fn cost_tables(
    modes: &ModeSet,
    units: usize,
    quantum: f64,
    strategy: Strategy,
    objective: Objective,
    exec: Execution,
) -> Result<Vec<Vec<ModeCost>>, MultimodeError> {
    let cells: Vec<(usize, usize)> = (0..modes.len())
        .flat_map(|i| (0..=units).map(move |u| (i, u)))
        .collect();
    let costs = exec.map(&cells, |(i, u)| {
        mode_cost(modes.specs[*i], *u as f64 * quantum, strategy, objective)
    });
    let mut tables = vec![Vec::with_capacity(units + 1); modes.len()];
    for ((i, _), c) in cells.iter().zip(costs) {
        tables[*i].push(c?);
    }
    Ok(tables)
}

/// Exhaustive search over grid allocations of `delta_e` to the modes.
pub fn optimize_local_split(
    delta_e: f64,
    modes: &ModeSet,
    objective: Objective,
    strategy: Strategy,
    quantum: f64,
) -> Result<SplitResult, MultimodeError> {
    optimize_local_split_with(
        delta_e,
        modes,
        objective,
        strategy,
        quantum,
        Execution::default(),
    )
}

pub fn optimize_local_split_with(
    delta_e: f64,
    modes: &ModeSet,
    objective: Objective,
    strategy: Strategy,
    quantum: f64,
    exec: Execution,
) -> Result<SplitResult, MultimodeError> {
    if !(quantum.is_finite() && quantum > 0.0) {
        return Err(MultimodeError::InvalidQuantum(quantum));
    }
    if !(delta_e.is_finite() && delta_e >= 0.0) {
        return Err(MultimodeError::InvalidEnergy(delta_e));
    }
    let ratio = delta_e / quantum;
    let units = (ratio + 1e-9).floor() as usize;
    let rounded_from = if (ratio - units as f64).abs() > 1e-9 * ratio.max(1.0) {
        Some(delta_e)
    } else {
        None
    };
    let k = modes.len() as u128;
    let count = binomial(units as u128 + k - 1, k - 1);
    if count > MAX_ALLOCATIONS {
        return Err(MultimodeError::GridTooFine { count });
    }
    let tables = cost_tables(modes, units, quantum, strategy, objective, exec)?;
    let values: Vec<Vec<f64>> = tables
        .iter()
        .map(|t| t.iter().map(|c| c.get(objective)).collect())
        .collect();
    // suffix_min[i] bounds the cost of modes i.. from below.
    let mut suffix_min = vec![0.0; values.len() + 1];
    for i in (0..values.len()).rev() {
        let lo = values[i].iter().copied().fold(f64::INFINITY, f64::min);
        suffix_min[i] = suffix_min[i + 1] + lo;
    }

    let mut best_units = vec![0; values.len()];
    let mut best = f64::INFINITY;
    let mut current = vec![0; values.len()];
    search(
        &values,
        &suffix_min,
        0,
        units,
        0.0,
        &mut current,
        &mut best,
        &mut best_units,
    );

    let allocation = best_units.iter().map(|u| *u as f64 * quantum).collect();
    let (total_v, total_dw2) = best_units
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(v, w), (i, u)| {
            (v + tables[i][*u].v, w + tables[i][*u].dw2)
        });
    Ok(SplitResult {
        allocation,
        units: best_units,
        total_v,
        total_dw2,
        objective,
        strategy,
        rounded_from,
    })
}

/// Depth-first enumeration in lexicographic order; keeps the first
/// allocation reaching the minimum.
#[allow(clippy::too_many_arguments)]
fn search(
    values: &[Vec<f64>],
    suffix_min: &[f64],
    mode: usize,
    left: usize,
    partial: f64,
    current: &mut Vec<usize>,
    best: &mut f64,
    best_units: &mut Vec<usize>,
) {
    if partial + suffix_min[mode] >= *best {
        return;
    }
    if mode + 1 == values.len() {
        let total = partial + values[mode][left];
        if total < *best {
            *best = total;
            current[mode] = left;
            best_units.clone_from(current);
        }
        return;
    }
    for u in 0..=left {
        current[mode] = u;
        search(
            values,
            suffix_min,
            mode + 1,
            left - u,
            partial + values[mode][u],
            current,
            best,
            best_units,
        );
    }
}
