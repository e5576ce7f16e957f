//! Diagonal states in a truncated Fock basis, two-level rotations and the
//! transition ledger used to evaluate work fluctuations.

use std::f64::consts::FRAC_PI_2;

use thiserror::Error;

/// Normalisation and ledger tolerance.
pub const PROB_TOL: f64 = 1e-12;
/// Largest thermal tail mass allowed beyond the truncation.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("invalid thermal spec: omega={omega}, beta={beta}")]
    InvalidSpec { omega: f64, beta: f64 },
    #[error("truncation dim={dim} too small: tail mass {tail:e}")]
    TruncationTooSmall { dim: usize, tail: f64 },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("level index {index} out of range for dim={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("rotation angle {0} outside [0, pi/2]")]
    InvalidAngle(f64),
    #[error("ledger dimension {ledger} does not match state dimension {state}")]
    DimensionMismatch { ledger: usize, state: usize },
    #[error("energy change {given} inconsistent with ledger value {implied}")]
    InconsistentDeltaE { given: f64, implied: f64 },
}

/// Mode frequency and inverse temperature. `beta = INFINITY` means `T = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalSpec {
    omega: f64,
    beta: f64,
}

impl ThermalSpec {
    pub fn new(omega: f64, beta: f64) -> Result<Self, FockError> {
        let valid_beta = beta == f64::INFINITY || (beta.is_finite() && beta > 0.0);
        if !(omega.is_finite() && omega > 0.0) || !valid_beta {
            return Err(FockError::InvalidSpec { omega, beta });
        }
        Ok(Self { omega, beta })
    }

    pub fn zero_temperature(omega: f64) -> Result<Self, FockError> {
        Self::new(omega, f64::INFINITY)
    }

    /// Builds a spec from a temperature; `temperature = 0` maps to `beta = INFINITY`.
    pub fn from_temperature(omega: f64, temperature: f64) -> Result<Self, FockError> {
        if temperature == 0.0 {
            Self::zero_temperature(omega)
        } else if temperature > 0.0 && temperature.is_finite() {
            Self::new(omega, 1.0 / temperature)
        } else {
            Err(FockError::InvalidSpec {
                omega,
                beta: 1.0 / temperature,
            })
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn beta_omega(&self) -> f64 {
        self.beta * self.omega
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta == f64::INFINITY
    }

    /// Bose-Einstein occupation `1/(e^{beta omega} - 1)`.
    pub fn mean_occupation(&self) -> f64 {
        if self.is_zero_temperature() {
            0.0
        } else {
            1.0 / self.beta_omega().exp_m1()
        }
    }

    /// `coth(beta omega / 2) = 2 nbar + 1`.
    pub fn nu(&self) -> f64 {
        2.0 * self.mean_occupation() + 1.0
    }

    pub fn thermal_energy(&self) -> f64 {
        self.omega * self.mean_occupation()
    }

    pub fn thermal_variance(&self) -> f64 {
        let n = self.mean_occupation();
        self.omega * self.omega * n * (n + 1.0)
    }

    /// Thermal mass on levels `>= dim`, i.e. `e^{-dim beta omega}`.
    pub fn tail_mass(&self, dim: usize) -> f64 {
        if self.is_zero_temperature() {
            0.0
        } else {
            (-(dim as f64) * self.beta_omega()).exp()
        }
    }

    /// Smallest dimension whose thermal tail is below [`TAIL_TOL`].
    pub fn min_dim(&self) -> usize {
        if self.is_zero_temperature() {
            1
        } else {
            (-TAIL_TOL.ln() / self.beta_omega()).floor() as usize + 1
        }
    }
}

/// Probability weights on Fock levels `0..dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalState {
    weights: Vec<f64>,
    spec: ThermalSpec,
}

impl DiagonalState {
    pub fn from_weights(weights: Vec<f64>, spec: ThermalSpec) -> Result<Self, FockError> {
        if weights.is_empty() {
            return Err(FockError::InvalidWeights("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(FockError::InvalidWeights(format!(
                "weight {w} is not a probability"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(FockError::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { weights, spec })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spec(&self) -> ThermalSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Mean occupation `sum n w_n`.
    pub fn mean_level(&self) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(n, w)| n as f64 * w)
            .sum()
    }

    pub fn stats(&self) -> EnergyStats {
        diag_stats(self)
    }

    pub(crate) fn rotate_in_place(&mut self, m: usize, n: usize, theta: f64) {
        let (wm, wn) = (self.weights[m], self.weights[n]);
        if theta == FRAC_PI_2 {
            self.weights.swap(m, n);
        } else if theta != 0.0 {
            let (s, c) = theta.sin_cos();
            let (c2, s2) = (c * c, s * s);
            self.weights[m] = c2 * wm + s2 * wn;
            self.weights[n] = c2 * wn + s2 * wm;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyStats {
    pub energy: f64,
    pub variance: f64,
}

/// A two-level rotation between Fock levels `m` and `n` by angle `theta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub m: usize,
    pub n: usize,
    pub theta: f64,
}

impl Rotation {
    pub fn swap(m: usize, n: usize) -> Self {
        Self {
            m,
            n,
            theta: FRAC_PI_2,
        }
    }

    pub fn is_swap(&self) -> bool {
        self.theta == FRAC_PI_2
    }
}

/// Dense matrix of transition probabilities `p_{m -> n}`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionLedger {
    probs: Vec<f64>,
    dim: usize,
    spec: ThermalSpec,
}

impl TransitionLedger {
    /// Ledger of the identity map on `state`.
    pub fn identity(state: &DiagonalState) -> Self {
        let dim = state.dim();
        let mut probs = vec![0.0; dim * dim];
        for (m, w) in state.weights.iter().enumerate() {
            probs[m * dim + m] = *w;
        }
        Self {
            probs,
            dim,
            spec: state.spec,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> ThermalSpec {
        self.spec
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.probs[m * self.dim + n]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.probs[m * self.dim..(m + 1) * self.dim]
    }

    pub fn row_sum(&self, m: usize) -> f64 {
        self.row(m).iter().sum()
    }

    pub fn column_sum(&self, n: usize) -> f64 {
        (0..self.dim).map(|m| self.get(m, n)).sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mean energy change implied by the transitions.
    pub fn mean_energy_change(&self) -> f64 {
        let mut acc = 0.0;
        for m in 0..self.dim {
            for (n, p) in self.row(m).iter().enumerate() {
                if *p != 0.0 {
                    acc += p * (n as f64 - m as f64);
                }
            }
        }
        self.spec.omega() * acc
    }

    pub(crate) fn rotate_in_place(&mut self, m: usize, n: usize, theta: f64) {
        if theta == 0.0 {
            return;
        }
        let dim = self.dim;
        if theta == FRAC_PI_2 {
            for row in self.probs.chunks_exact_mut(dim) {
                row.swap(m, n);
            }
            return;
        }
        let (s, c) = theta.sin_cos();
        let (c2, s2) = (c * c, s * s);
        for row in self.probs.chunks_exact_mut(dim) {
            let (pm, pn) = (row[m], row[n]);
            row[m] = c2 * pm + s2 * pn;
            row[n] = c2 * pn + s2 * pm;
        }
    }
}

/// Thermal weights `(1 - e^{-beta omega}) e^{-n beta omega}` on `dim` levels.
pub fn thermal_weights(spec: ThermalSpec, dim: usize) -> Result<DiagonalState, FockError> {
    if dim == 0 {
        return Err(FockError::TruncationTooSmall { dim, tail: 1.0 });
    }
    if spec.is_zero_temperature() {
        let mut weights = vec![0.0; dim];
        weights[0] = 1.0;
        return Ok(DiagonalState { weights, spec });
    }
    let tail = spec.tail_mass(dim);
    if tail >= TAIL_TOL {
        return Err(FockError::TruncationTooSmall { dim, tail });
    }
    let x = spec.beta_omega();
    let norm = -(-x).exp_m1();
    let weights = (0..dim).map(|n| norm * (-(n as f64) * x).exp()).collect();
    Ok(DiagonalState { weights, spec })
}

/// Mean energy and energy variance of a diagonal state.
pub fn diag_stats(state: &DiagonalState) -> EnergyStats {
    let omega = state.spec.omega();
    let mean = state.mean_level();
    // Centred second moment avoids cancellation for narrow distributions.
    let var: f64 = state
        .weights
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let d = n as f64 - mean;
            w * d * d
        })
        .sum();
    EnergyStats {
        energy: omega * mean,
        variance: omega * omega * var,
    }
}

fn check_rotation(dim: usize, m: usize, n: usize, theta: f64) -> Result<f64, FockError> {
    for index in [m, n] {
        if index >= dim {
            return Err(FockError::IndexOutOfRange { index, dim });
        }
    }
    if m == n {
        return Err(FockError::InvalidWeights(format!(
            "rotation needs two distinct levels, got {m} twice"
        )));
    }
    const SLACK: f64 = 1e-12;
    if !theta.is_finite() || !(-SLACK..=FRAC_PI_2 + SLACK).contains(&theta) {
        return Err(FockError::InvalidAngle(theta));
    }
    Ok(theta.clamp(0.0, FRAC_PI_2))
}

/// Applies the rotation `(w_m, w_n) -> (c^2 w_m + s^2 w_n, c^2 w_n + s^2 w_m)`
/// to the state and the same column mixing to the ledger.
pub fn apply_two_level_rotation(
    state: &DiagonalState,
    ledger: &TransitionLedger,
    m: usize,
    n: usize,
    theta: f64,
) -> Result<(DiagonalState, TransitionLedger), FockError> {
    if ledger.dim != state.dim() {
        return Err(FockError::DimensionMismatch {
            ledger: ledger.dim,
            state: state.dim(),
        });
    }
    let theta = check_rotation(state.dim(), m, n, theta)?;
    let mut state = state.clone();
    let mut ledger = ledger.clone();
    state.rotate_in_place(m, n, theta);
    ledger.rotate_in_place(m, n, theta);
    Ok((state, ledger))
}

/// Applies a sequence of rotations, validating each one.
pub fn replay(
    state: &DiagonalState,
    rotations: impl IntoIterator<Item = Rotation>,
) -> Result<DiagonalState, FockError> {
    let mut state = state.clone();
    for rot in rotations {
        let theta = check_rotation(state.dim(), rot.m, rot.n, rot.theta)?;
        state.rotate_in_place(rot.m, rot.n, theta);
    }
    Ok(state)
}

/// `sum_{m,n} p_{m->n} (omega (n - m) - delta_e)^2`.
pub fn work_fluctuation(ledger: &TransitionLedger, delta_e: f64) -> Result<f64, FockError> {
    let implied = ledger.mean_energy_change();
    let scale = ledger.spec.omega().max(delta_e.abs()).max(implied.abs());
    if (implied - delta_e).abs() > 1e-9 * scale {
        return Err(FockError::InconsistentDeltaE {
            given: delta_e,
            implied,
        });
    }
    let omega = ledger.spec.omega();
    let mut acc = 0.0;
    for m in 0..ledger.dim {
        for (n, p) in ledger.row(m).iter().enumerate() {
            if *p != 0.0 {
                let w = omega * (n as f64 - m as f64) - delta_e;
                acc += p * w * w;
            }
        }
    }
    Ok(acc)
}
