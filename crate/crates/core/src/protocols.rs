//! Unrestricted charging protocols built from two-level rotations in the
//! Fock basis: optimal precision, minimal work fluctuations, and a greedy
//! variant for several modes.

use thiserror::Error;

use crate::fock::{
    self, DiagonalState, FockError, Rotation, ThermalSpec, TransitionLedger, TAIL_TOL,
};

/// Relative tolerance on hitting the target energy.
pub const TARGET_TOL: f64 = 1e-9;
/// Phase guard for the optimal-precision protocol.
pub const MAX_PHASES: usize = 64;
/// Default cap on the joint truncated dimension.
pub const JOINT_DIM_CAP: usize = 4096;
/// Extra levels above the occupied range requested by [`recommended_dim`].
pub const DIM_MARGIN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("truncation too small: level {needed} required, dim={dim}")]
    TruncationTooSmall { needed: usize, dim: usize },
    #[error("energy input must be finite and >= 0, got {0}")]
    InvalidEnergy(f64),
    #[error("energy {delta_eps} exceeds the maximum {max} of a {d}-level system")]
    EnergyExceedsDimension { delta_eps: f64, max: f64, d: usize },
    #[error("target not reached after {0} phases")]
    PhaseLimitExceeded(usize),
    #[error("protocol needs a finite temperature")]
    ZeroTemperatureUnsupported,
    #[error("joint dimension {dim} exceeds cap {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },
    #[error("modes and dims differ in length or are empty")]
    ModeMismatch,
    #[error("final energy change {got} misses target {want}")]
    TargetMissed { got: f64, want: f64 },
}

/// Which integer level the target energy is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rounding {
    Floor,
    Ceil,
}

/// Target of a single-mode charge in units of omega.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetSpec {
    pub delta_eps: f64,
    pub eps0: f64,
    pub eps: f64,
    pub k: usize,
    pub rounding: Rounding,
}

impl TargetSpec {
    /// Picks `k = floor(eps)` when it is strictly closer, `ceil(eps)` otherwise.
    pub fn new(eps0: f64, delta_eps: f64) -> Result<Self, ProtocolError> {
        check_energy(delta_eps)?;
        let eps = eps0 + delta_eps;
        let (fl, ce) = (eps.floor(), eps.ceil());
        let (k, rounding) = if eps - fl < ce - eps {
            (fl, Rounding::Floor)
        } else {
            (ce, Rounding::Ceil)
        };
        Ok(Self {
            delta_eps,
            eps0,
            eps,
            k: k as usize,
            rounding,
        })
    }

    /// Cost `dV/|dE|` of moving weight between levels `m` and `n`.
    pub fn pair_ratio(&self, m: usize, n: usize) -> f64 {
        (m + n) as f64 - 2.0 * self.eps
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChargingReport {
    pub delta_e: f64,
    pub initial_e: f64,
    pub initial_v: f64,
    pub final_e: f64,
    pub final_v: f64,
    pub delta_sigma: f64,
    pub delta_w2: f64,
    /// Full swaps that reorder the initial weights.
    pub reorder: Vec<Rotation>,
    /// Energy-adjusting rotations, in application order.
    pub steps: Vec<Rotation>,
    /// Full swaps applied after `steps`.
    pub post_shift: Vec<Rotation>,
    pub target: Option<TargetSpec>,
    pub final_state: DiagonalState,
    pub ledger: TransitionLedger,
}

impl ChargingReport {
    /// Every rotation in application order.
    pub fn rotations(&self) -> impl Iterator<Item = Rotation> + '_ {
        self.reorder
            .iter()
            .chain(&self.steps)
            .chain(&self.post_shift)
            .copied()
    }
}

fn check_energy(delta_eps: f64) -> Result<(), ProtocolError> {
    if delta_eps.is_finite() && delta_eps >= 0.0 {
        Ok(())
    } else {
        Err(ProtocolError::InvalidEnergy(delta_eps))
    }
}

fn frac_product(x: f64) -> f64 {
    (x - x.floor()) * (x.ceil() - x)
}

/// Zero-temperature variance bounds `(V_min, V_max)` in units of omega^2 for
/// a `d`-level ladder (`None` for the oscillator).
pub fn zero_temp_bounds(delta_eps: f64, d: Option<usize>) -> Result<(f64, f64), ProtocolError> {
    check_energy(delta_eps)?;
    let v_min = frac_product(delta_eps);
    let v_max = match d {
        None => f64::INFINITY,
        Some(d) => {
            let top = d.saturating_sub(1) as f64;
            if d == 0 || delta_eps > top {
                return Err(ProtocolError::EnergyExceedsDimension {
                    delta_eps,
                    max: top,
                    d,
                });
            }
            delta_eps * (top - delta_eps)
        }
    };
    Ok((v_min, v_max))
}

/// Smallest work fluctuations in units of omega^2 at any temperature.
pub fn min_fluctuation_value(delta_eps: f64) -> f64 {
    frac_product(delta_eps)
}

/// Truncation covering the thermal tail and the levels the
/// optimal-precision protocol occupies.
pub fn recommended_dim(spec: ThermalSpec, delta_eps: f64) -> usize {
    let eps = spec.mean_occupation() + delta_eps.max(0.0);
    spec.min_dim().max(2 * eps.ceil() as usize + 2) + DIM_MARGIN
}

/// Mutable protocol state: weights plus ledger, with a record of rotations.
struct Run {
    state: DiagonalState,
    ledger: TransitionLedger,
}

impl Run {
    fn new(state: DiagonalState) -> Self {
        let ledger = TransitionLedger::identity(&state);
        Self { state, ledger }
    }

    fn rotate(&mut self, rot: Rotation) {
        self.state.rotate_in_place(rot.m, rot.n, rot.theta);
        self.ledger.rotate_in_place(rot.m, rot.n, rot.theta);
    }

    fn w(&self, n: usize) -> f64 {
        self.state.weights()[n]
    }

    /// Rearranges weights so that level `i` holds the weight currently at
    /// `source[i]`, recording the swaps.
    fn permute(&mut self, source: &[usize], log: &mut Vec<Rotation>) {
        for rot in permutation_swaps(source) {
            self.rotate(rot);
            log.push(rot);
        }
    }
}

/// Decomposes the arrangement "level `i` receives the content of level
/// `source[i]`" into full swaps.
pub fn permutation_swaps(source: &[usize]) -> Vec<Rotation> {
    let dim = source.len();
    // at[level] = original level whose content currently sits there
    let mut at: Vec<usize> = (0..dim).collect();
    let mut pos: Vec<usize> = (0..dim).collect();
    let mut swaps = Vec::new();
    for i in 0..dim {
        let want = source[i];
        if at[i] != want {
            let j = pos[want];
            swaps.push(Rotation::swap(i.min(j), i.max(j)));
            let displaced = at[i];
            at.swap(i, j);
            pos[want] = i;
            pos[displaced] = j;
        }
    }
    swaps
}

/// Source map of the reordering that places the `i`-th largest thermal
/// weight on the `i`-th closest level to the target.
fn part_one_source(target: &TargetSpec, dim: usize) -> Vec<usize> {
    let k = target.k;
    let mut source: Vec<usize> = (0..dim).collect();
    match target.rounding {
        Rounding::Floor => {
            for (n, s) in source.iter_mut().enumerate().take(k + 1) {
                *s = 2 * (k - n);
            }
            for (n, s) in source
                .iter_mut()
                .enumerate()
                .take((2 * k).max(1) + 1)
                .skip(k + 1)
            {
                *s = 2 * (n - k) - 1;
            }
        }
        Rounding::Ceil => {
            for (n, s) in source.iter_mut().enumerate().take(k) {
                *s = 2 * (k - n) - 1;
            }
            for (n, s) in source.iter_mut().enumerate().take(2 * k).skip(k) {
                *s = 2 * (n - k);
            }
        }
    }
    source
}

/// `(j, l_min)` for phase `phi`.
fn phase_offsets(rounding: Rounding, raise: bool, phi: usize) -> (i64, i64) {
    let p = phi as i64;
    let half_up = (p + 1) / 2;
    let half_down = p / 2;
    match (rounding, raise) {
        (Rounding::Floor, true) => (p, -half_up + 1),
        (Rounding::Floor, false) => (-p + 1, half_up),
        (Rounding::Ceil, true) => (p - 1, -half_down + 1),
        (Rounding::Ceil, false) => (-p, half_down + 1),
    }
}

fn reached(current: f64, target: f64) -> bool {
    (current - target).abs() <= 1e-14 * target.abs().max(1.0)
}

fn finish(
    run: Run,
    initial: &DiagonalState,
    delta_e: f64,
    reorder: Vec<Rotation>,
    steps: Vec<Rotation>,
    post_shift: Vec<Rotation>,
    target: Option<TargetSpec>,
) -> Result<ChargingReport, ProtocolError> {
    let before = initial.stats();
    let after = run.state.stats();
    let moved = after.energy - before.energy;
    let scale = delta_e.abs().max(initial.spec().omega());
    if (moved - delta_e).abs() > TARGET_TOL * scale {
        return Err(ProtocolError::TargetMissed {
            got: moved,
            want: delta_e,
        });
    }
    let delta_w2 = fock::work_fluctuation(&run.ledger, moved)?;
    Ok(ChargingReport {
        delta_e: moved,
        initial_e: before.energy,
        initial_v: before.variance,
        final_e: after.energy,
        final_v: after.variance,
        delta_sigma: after.variance.sqrt() - before.variance.sqrt(),
        delta_w2,
        reorder,
        steps,
        post_shift,
        target,
        final_state: run.state,
        ledger: run.ledger,
    })
}

/// Charges a thermal mode by `delta_eps` omega with the smallest final
/// energy variance reachable by any unitary.
///
/// The largest weights are first rearranged around the level `k` nearest
/// to the target; the energy is then corrected by rotating level pairs in
/// order of increasing variance cost per unit energy.
pub fn optimal_precision_charge(
    spec: ThermalSpec,
    delta_eps: f64,
    dim: usize,
) -> Result<ChargingReport, ProtocolError> {
    check_energy(delta_eps)?;
    let initial = fock::thermal_weights(spec, dim)?;
    let omega = spec.omega();
    let mut run = Run::new(initial.clone());
    if delta_eps == 0.0 {
        return finish(run, &initial, 0.0, vec![], vec![], vec![], None);
    }
    let target = TargetSpec::new(initial.mean_level(), delta_eps)?;
    let k = target.k;
    let eps = target.eps;
    let needed = (2 * k).max(1);
    if needed >= dim {
        return Err(ProtocolError::TruncationTooSmall { needed, dim });
    }

    let mut reorder = Vec::new();
    run.permute(&part_one_source(&target, dim), &mut reorder);

    let mut steps = Vec::new();
    let mut level = run.state.mean_level();
    let raise = level < eps;
    let mut done = reached(level, eps);
    let mut phi = 1;
    while !done {
        if phi > MAX_PHASES {
            return Err(ProtocolError::PhaseLimitExceeded(MAX_PHASES));
        }
        let (j, l_min) = phase_offsets(target.rounding, raise, phi);
        let mut l = l_min;
        while l <= k as i64 && !done {
            let m = (k as i64 - l) as usize;
            let n = k as i64 + l + j;
            l += 1;
            if n < 0 {
                continue;
            }
            let n = n as usize;
            let weight = |i: usize| if i < dim { run.w(i) } else { 0.0 };
            let gap = (n as f64) - (m as f64);
            let d_max = (weight(m) - weight(n)) * gap;
            if d_max == 0.0 || (d_max > 0.0) != raise {
                continue;
            }
            if n >= dim {
                return Err(ProtocolError::TruncationTooSmall { needed: n, dim });
            }
            let overshoots = if raise {
                level + d_max >= eps
            } else {
                level + d_max <= eps
            };
            let theta = if overshoots {
                done = true;
                let s2 = ((eps - level) / d_max).clamp(0.0, 1.0);
                s2.sqrt().asin()
            } else {
                std::f64::consts::FRAC_PI_2
            };
            let rot = Rotation { m, n, theta };
            run.rotate(rot);
            steps.push(rot);
            level = if done { eps } else { level + d_max };
        }
        phi += 1;
    }
    finish(
        run,
        &initial,
        delta_eps * omega,
        reorder,
        steps,
        vec![],
        Some(target),
    )
}

/// Threshold level `ceil(ln(1/f) / (beta omega))`, snapping values within
/// `1e-9` of an integer.
pub fn fluctuation_threshold(spec: ThermalSpec, frac: f64) -> usize {
    let x = (1.0 / frac).ln() / spec.beta_omega();
    let nearest = x.round();
    let k = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.ceil()
    };
    (k as usize).max(1)
}

/// Rotation angle on `(k - 1, k)` that completes the fractional charge `frac`
/// after shifting every level `>= k` up by one, for an untruncated mode.
pub fn fluctuation_angle(spec: ThermalSpec, frac: f64, k: usize) -> f64 {
    let x = spec.beta_omega();
    let s2 = (((k as f64) * x).exp() * frac - 1.0) / x.exp_m1();
    s2.clamp(0.0, 1.0).sqrt().asin()
}

/// Charges a thermal mode by `delta_eps` omega with the smallest work
/// fluctuations.
///
/// The fractional part is delivered by shifting the thermal tail above a
/// threshold level up by one and topping up with a single partial
/// rotation; the integer part is a rigid shift of every level.
pub fn min_fluctuation_charge(
    spec: ThermalSpec,
    delta_eps: f64,
    dim: usize,
) -> Result<ChargingReport, ProtocolError> {
    check_energy(delta_eps)?;
    if spec.is_zero_temperature() {
        return Err(ProtocolError::ZeroTemperatureUnsupported);
    }
    let shift = delta_eps.floor() as usize;
    let frac = delta_eps - delta_eps.floor();
    let usable = dim.saturating_sub(shift + 1);
    let tail = spec.tail_mass(usable);
    if usable == 0 || tail >= TAIL_TOL {
        return Err(FockError::TruncationTooSmall { dim, tail }.into());
    }
    let initial = fock::thermal_weights(spec, dim)?;
    let mut run = Run::new(initial.clone());

    let mut reorder = Vec::new();
    let mut steps = Vec::new();
    if frac > 0.0 {
        let k = fluctuation_threshold(spec, frac);
        if k >= usable {
            return Err(ProtocolError::TruncationTooSmall { needed: k, dim });
        }
        let mut source: Vec<usize> = (0..dim).collect();
        source[k] = dim - 1;
        for (n, s) in source.iter_mut().enumerate().skip(k + 1) {
            *s = n - 1;
        }
        let level0 = run.state.mean_level();
        run.permute(&source, &mut reorder);
        let lifted = run.state.mean_level() - level0;
        let missing = frac - lifted;
        let d_max = run.w(k - 1) - run.w(k);
        if missing > 0.0 && d_max > 0.0 {
            let s2 = (missing / d_max).clamp(0.0, 1.0);
            let rot = Rotation {
                m: k - 1,
                n: k,
                theta: s2.sqrt().asin(),
            };
            run.rotate(rot);
            steps.push(rot);
        }
    }
    let mut post_shift = Vec::new();
    if shift > 0 {
        let source: Vec<usize> = (0..dim).map(|i| (i + dim - shift % dim) % dim).collect();
        run.permute(&source, &mut post_shift);
    }
    finish(
        run,
        &initial,
        delta_eps * spec.omega(),
        reorder,
        steps,
        post_shift,
        None,
    )
}

/// Result of the greedy joint protocol on the product of truncated modes.
///
/// Levels are flat row-major indices over `dims`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointChargingReport {
    pub delta_e: f64,
    pub initial_e: f64,
    pub initial_v: f64,
    pub final_e: f64,
    pub final_v: f64,
    pub delta_sigma: f64,
    pub delta_w2: f64,
    pub reorder: Vec<Rotation>,
    pub steps: Vec<Rotation>,
    pub dims: Vec<usize>,
    pub energies: Vec<f64>,
    pub initial_weights: Vec<f64>,
    pub weights: Vec<f64>,
}

impl JointChargingReport {
    /// Per-mode occupation numbers of a flat level.
    pub fn occupations(&self, mut level: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for (i, d) in self.dims.iter().enumerate().rev() {
            occ[i] = level % d;
            level /= d;
        }
        occ
    }
}

/// Initial levels feeding each current level, with their probabilities.
/// Only the last rotation is partial, so each list holds at most two entries.
struct SparseLedger {
    origin: Vec<Vec<(usize, f64)>>,
}

impl SparseLedger {
    fn new(weights: &[f64]) -> Self {
        Self {
            origin: weights
                .iter()
                .enumerate()
                .map(|(m, w)| vec![(m, *w)])
                .collect(),
        }
    }

    fn rotate(&mut self, rot: Rotation) {
        if rot.is_swap() {
            self.origin.swap(rot.m, rot.n);
            return;
        }
        let (s, c) = rot.theta.sin_cos();
        let (c2, s2) = (c * c, s * s);
        let a = std::mem::take(&mut self.origin[rot.m]);
        let b = std::mem::take(&mut self.origin[rot.n]);
        let mix = |x: &[(usize, f64)], y: &[(usize, f64)]| {
            x.iter()
                .map(|(m, p)| (*m, c2 * p))
                .chain(y.iter().map(|(m, p)| (*m, s2 * p)))
                .filter(|(_, p)| *p != 0.0)
                .collect::<Vec<_>>()
        };
        self.origin[rot.m] = mix(&a, &b);
        self.origin[rot.n] = mix(&b, &a);
    }

    fn work_fluctuation(&self, energies: &[f64], delta_e: f64) -> f64 {
        let mut acc = 0.0;
        for (n, list) in self.origin.iter().enumerate() {
            for (m, p) in list {
                let w = energies[n] - energies[*m] - delta_e;
                acc += p * w * w;
            }
        }
        acc
    }
}

fn moments(weights: &[f64], energies: &[f64]) -> (f64, f64) {
    let mean: f64 = weights.iter().zip(energies).map(|(w, e)| w * e).sum();
    let var = weights
        .iter()
        .zip(energies)
        .map(|(w, e)| w * (e - mean) * (e - mean))
        .sum();
    (mean, var)
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    a: usize,
    b: usize,
    ratio: f64,
    gap: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate, tol: f64) -> bool {
        if (self.ratio - other.ratio).abs() > tol {
            return self.ratio < other.ratio;
        }
        if (self.gap - other.gap).abs() > tol {
            return self.gap < other.gap;
        }
        (self.a, self.b) < (other.a, other.b)
    }
}

/// Cheapest rotation moving energy toward the target.
///
/// For a raise the cost is `E_a + E_b - 2t`; for each lower level `a` only
/// the lowest level above it with smaller weight can win, and levels are
/// visited by energy so the scan stops once no pair can beat the best.
fn best_pair(
    order: &[usize],
    energies: &[f64],
    weights: &[f64],
    target: f64,
    raise: bool,
    tol: f64,
) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    let len = order.len();
    for i in 0..len {
        // Lower level when raising, upper level when lowering.
        let x = if raise { order[i] } else { order[len - 1 - i] };
        let ex = energies[x];
        if let Some(b) = &best {
            let floor = if raise {
                2.0 * ex - 2.0 * target
            } else {
                2.0 * target - 2.0 * ex
            };
            if floor > b.ratio + tol {
                break;
            }
        }
        let mut matched_energy: Option<f64> = None;
        for jdx in (i + 1)..len {
            let y = if raise {
                order[jdx]
            } else {
                order[len - 1 - jdx]
            };
            let ey = energies[y];
            if (ey - ex).abs() <= tol {
                continue;
            }
            if let Some(e) = matched_energy {
                if (ey - e).abs() > tol {
                    break;
                }
            }
            let (a, b) = if raise { (x, y) } else { (y, x) };
            let movable = if raise {
                weights[a] > weights[b]
            } else {
                weights[b] > weights[a]
            };
            if !movable {
                continue;
            }
            let sum = energies[a] + energies[b] - 2.0 * target;
            let cand = Candidate {
                a,
                b,
                ratio: if raise { sum } else { -sum },
                gap: energies[b] - energies[a],
            };
            if let Some(b) = &best {
                if cand.ratio > b.ratio + tol {
                    break;
                }
            }
            matched_energy = Some(ey);
            if best.is_none_or(|b| cand.beats(&b, tol)) {
                best = Some(cand);
            }
        }
    }
    best
}

/// Greedy optimal-precision charge of several modes with a shared
/// temperature, using rotations between joint product levels.
pub fn joint_optimal_precision_charge(
    specs: &[ThermalSpec],
    delta_e: f64,
    dims: &[usize],
) -> Result<JointChargingReport, ProtocolError> {
    joint_optimal_precision_charge_capped(specs, delta_e, dims, JOINT_DIM_CAP)
}

pub fn joint_optimal_precision_charge_capped(
    specs: &[ThermalSpec],
    delta_e: f64,
    dims: &[usize],
    cap: usize,
) -> Result<JointChargingReport, ProtocolError> {
    check_energy(delta_e)?;
    if specs.is_empty() || specs.len() != dims.len() {
        return Err(ProtocolError::ModeMismatch);
    }
    let total = dims
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(*d))
        .unwrap_or(usize::MAX);
    if total > cap {
        return Err(ProtocolError::DimensionCapExceeded { dim: total, cap });
    }
    let mut weights = vec![1.0];
    let mut energies = vec![0.0];
    for (spec, dim) in specs.iter().zip(dims) {
        let mode = fock::thermal_weights(*spec, *dim)?;
        let mut w = Vec::with_capacity(weights.len() * dim);
        let mut e = Vec::with_capacity(weights.len() * dim);
        for (wa, ea) in weights.iter().zip(&energies) {
            for (n, wb) in mode.weights().iter().enumerate() {
                w.push(wa * wb);
                e.push(ea + spec.omega() * n as f64);
            }
        }
        weights = w;
        energies = e;
    }
    let initial_weights = weights.clone();
    let (e0, v0) = moments(&weights, &energies);
    let target = e0 + delta_e;
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let tol = 1e-12 * scale;
    let mut ledger = SparseLedger::new(&weights);

    let mut reorder = Vec::new();
    let mut steps = Vec::new();
    if delta_e > 0.0 {
        let mut by_distance: Vec<usize> = (0..total).collect();
        by_distance.sort_by(|a, b| {
            let da = (energies[*a] - target).abs();
            let db = (energies[*b] - target).abs();
            da.total_cmp(&db).then(a.cmp(b))
        });
        let mut by_weight: Vec<usize> = (0..total).collect();
        by_weight.sort_by(|a, b| weights[*b].total_cmp(&weights[*a]).then(a.cmp(b)));
        let mut source = vec![0; total];
        for (lvl, src) in by_distance.iter().zip(&by_weight) {
            source[*lvl] = *src;
        }
        for rot in permutation_swaps(&source) {
            weights.swap(rot.m, rot.n);
            ledger.rotate(rot);
            reorder.push(rot);
        }

        let mut order: Vec<usize> = (0..total).collect();
        order.sort_by(|a, b| energies[*a].total_cmp(&energies[*b]).then(a.cmp(b)));
        let (mut current, _) = moments(&weights, &energies);
        let raise = current < target;
        let max_steps = 4 * total + 64;
        while (current - target).abs() > 1e-14 * target.abs().max(1.0) {
            if steps.len() >= max_steps {
                return Err(ProtocolError::PhaseLimitExceeded(max_steps));
            }
            let Some(c) = best_pair(&order, &energies, &weights, target, raise, tol) else {
                return Err(ProtocolError::TargetMissed {
                    got: current - e0,
                    want: delta_e,
                });
            };
            let d_max = (weights[c.a] - weights[c.b]) * c.gap;
            let overshoots = if raise {
                current + d_max >= target
            } else {
                current + d_max <= target
            };
            let theta = if overshoots {
                ((target - current) / d_max).clamp(0.0, 1.0).sqrt().asin()
            } else {
                std::f64::consts::FRAC_PI_2
            };
            let rot = Rotation {
                m: c.a,
                n: c.b,
                theta,
            };
            if rot.is_swap() {
                weights.swap(c.a, c.b);
            } else {
                let (s, co) = theta.sin_cos();
                let (wa, wb) = (weights[c.a], weights[c.b]);
                weights[c.a] = co * co * wa + s * s * wb;
                weights[c.b] = co * co * wb + s * s * wa;
            }
            ledger.rotate(rot);
            steps.push(rot);
            if overshoots {
                break;
            }
            current += d_max;
        }
    }

    let (e1, v1) = moments(&weights, &energies);
    let moved = e1 - e0;
    let omega_min = specs
        .iter()
        .map(|s| s.omega())
        .fold(f64::INFINITY, f64::min);
    if (moved - delta_e).abs() > TARGET_TOL * delta_e.max(omega_min) {
        return Err(ProtocolError::TargetMissed {
            got: moved,
            want: delta_e,
        });
    }
    Ok(JointChargingReport {
        delta_e: moved,
        initial_e: e0,
        initial_v: v0,
        final_e: e1,
        final_v: v1,
        delta_sigma: v1.sqrt() - v0.sqrt(),
        delta_w2: ledger.work_fluctuation(&energies, moved),
        reorder,
        steps,
        dims: dims.to_vec(),
        energies,
        initial_weights,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn unit(beta_omega: f64) -> ThermalSpec {
        ThermalSpec::new(1.0, beta_omega).unwrap()
    }

    #[test]
    fn zero_temperature_bounds() {
        assert_eq!(zero_temp_bounds(3.0, None).unwrap().0, 0.0);
        assert_eq!(zero_temp_bounds(0.5, None).unwrap().0, 0.25);
        assert_eq!(zero_temp_bounds(1.0, Some(6)).unwrap().1, 4.0);
        assert!(matches!(
            zero_temp_bounds(5.5, Some(6)),
            Err(ProtocolError::EnergyExceedsDimension { .. })
        ));
    }

    #[test]
    fn fluctuation_values() {
        assert_eq!(min_fluctuation_value(2.0), 0.0);
        assert_eq!(min_fluctuation_value(1.5), 0.25);
        assert_eq!(min_fluctuation_value(0.25), 0.1875);
    }

    #[test]
    fn target_rounding() {
        let t = TargetSpec::new(0.0, 2.5).unwrap();
        assert_eq!((t.k, t.rounding), (3, Rounding::Ceil));
        let t = TargetSpec::new(0.2, 2.1).unwrap();
        assert_eq!((t.k, t.rounding), (2, Rounding::Floor));
    }

    #[test]
    fn swaps_realise_permutation() {
        let source = vec![3, 0, 4, 1, 2];
        let mut v: Vec<usize> = (0..5).collect();
        for r in permutation_swaps(&source) {
            v.swap(r.m, r.n);
        }
        assert_eq!(v, source);
    }

    #[test]
    fn zero_input_is_identity() {
        let spec = unit(1.0);
        let r = optimal_precision_charge(spec, 0.0, 64).unwrap();
        assert!(r.steps.is_empty() && r.reorder.is_empty());
        assert!((r.final_v - spec.thermal_variance()).abs() < 1e-12);
    }

    #[test]
    fn near_zero_temperature_reaches_bound() {
        let r = optimal_precision_charge(unit(20.0), 2.0, 32).unwrap();
        assert!(r.final_v <= 1e-6);
    }

    #[test]
    fn hot_mode_step_sequence() {
        let r = optimal_precision_charge(unit(1.0 / 3.0), 1.8, 120).unwrap();
        let pairs: Vec<_> = r.steps.iter().map(|s| (s.m, s.n)).collect();
        assert_eq!(&pairs[..3], &[(3, 5), (2, 6), (1, 7)]);
        assert_eq!(r.steps[0].theta, FRAC_PI_2);
        assert_eq!(r.steps[1].theta, FRAC_PI_2);
        assert!(r.steps[2].theta < FRAC_PI_2 && r.steps[2].theta > 0.0);
    }

    #[test]
    fn zero_temperature_half_integer() {
        let spec = ThermalSpec::zero_temperature(1.0).unwrap();
        let r = optimal_precision_charge(spec, 2.5, 12).unwrap();
        assert!((r.final_v - 0.25).abs() < 1e-12);
        assert!((r.delta_w2 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn min_fluctuation_examples() {
        let spec = unit(2f64.ln());
        assert_eq!(fluctuation_threshold(spec, 0.25), 2);
        let r = min_fluctuation_charge(spec, 0.25, 128).unwrap();
        assert!((r.delta_w2 - 0.1875).abs() < 1e-9);
        assert!(r.steps.iter().all(|s| s.theta < 1e-6));

        let r = min_fluctuation_charge(spec, 1.0, 256).unwrap();
        assert!(r.delta_w2 < 1e-10);

        let r = min_fluctuation_charge(unit(1.0), 0.4, 128).unwrap();
        assert!((r.delta_w2 - 0.24).abs() < 1e-6);
        assert!(matches!(
            min_fluctuation_charge(ThermalSpec::zero_temperature(1.0).unwrap(), 0.4, 16),
            Err(ProtocolError::ZeroTemperatureUnsupported)
        ));
    }

    #[test]
    fn fluctuation_angle_matches_run() {
        let spec = unit(0.9);
        let frac = 0.37;
        let k = fluctuation_threshold(spec, frac);
        let r = min_fluctuation_charge(spec, frac, 128).unwrap();
        let theta = fluctuation_angle(spec, frac, k);
        assert_eq!(r.steps.len(), 1);
        assert!((r.steps[0].theta - theta).abs() < 1e-9);
    }

    #[test]
    fn joint_single_mode_reduces() {
        for (bw, de) in [(1.0, 1.3), (1.0 / 3.0, 1.8), (2.0, 0.7), (0.5, 2.2)] {
            let spec = unit(bw);
            let dim = recommended_dim(spec, de);
            let single = optimal_precision_charge(spec, de, dim).unwrap();
            let joint = joint_optimal_precision_charge(&[spec], de, &[dim]).unwrap();
            assert!((single.final_v - joint.final_v).abs() < 1e-10, "{bw} {de}");
            assert!(
                (single.delta_w2 - joint.delta_w2).abs() < 1e-10,
                "{bw} {de}"
            );
            let a: Vec<_> = single.steps.iter().map(|s| (s.m, s.n)).collect();
            let b: Vec<_> = joint.steps.iter().map(|s| (s.m, s.n)).collect();
            assert_eq!(a, b, "{bw} {de}");
        }
    }

    #[test]
    fn joint_exact_level_match() {
        let a = ThermalSpec::zero_temperature(1.0).unwrap();
        let b = ThermalSpec::zero_temperature(2.0).unwrap();
        let r = joint_optimal_precision_charge(&[a, b], 3.0, &[8, 8]).unwrap();
        assert!(r.final_v <= 1e-6);
    }

    #[test]
    fn joint_cap() {
        let s = unit(1.0);
        assert!(matches!(
            joint_optimal_precision_charge_capped(&[s, s], 1.0, &[64, 64], 1000),
            Err(ProtocolError::DimensionCapExceeded { .. })
        ));
    }
}
