//! Single-mode Gaussian states in phase space and the closed-form charging
//! statistics of Gaussian unitaries acting on thermal states.
//!
//! Conventions: quadratures `(x, p)`, covariance with a factor of two so that
//! the vacuum has `gamma = I`, rotation `R(t) = [[cos t, sin t], [-sin t, cos t]]`
//! and squeezing `S(r) = diag(e^{-r}, e^{r})`. A displacement `xi` carries
//! energy `omega |xi|^2 / 2`; `xi[0]` is the squeezed direction.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::fock::ThermalSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("squeezing r={r} needs more energy than delta_E (max r={max_r})")]
    InfeasibleSqueezing { r: f64, max_r: f64 },
    #[error("energy input must be finite and >= 0, got {0}")]
    NegativeEnergy(f64),
    #[error("non-finite symplectic parameters")]
    NonFiniteParams,
}

/// `arcosh(1 + y)` for `y >= 0`, accurate for small and large `y`.
pub fn arcosh1p(y: f64) -> f64 {
    if y > 1e8 {
        // arcosh x = ln 2x - 1/(4x^2) - ...
        return std::f64::consts::LN_2 + y.ln_1p();
    }
    (y + (y * (y + 2.0)).sqrt()).ln_1p()
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, s, -s, c)
}

pub fn squeezer(r: f64) -> Matrix2<f64> {
    Matrix2::new((-r).exp(), 0.0, 0.0, r.exp())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianState {
    pub xbar: Vector2<f64>,
    pub gamma: Matrix2<f64>,
    pub spec: ThermalSpec,
}

impl GaussianState {
    pub fn new(xbar: Vector2<f64>, gamma: Matrix2<f64>, spec: ThermalSpec) -> Self {
        Self { xbar, gamma, spec }
    }

    /// Symmetric and satisfies the uncertainty relation `det(gamma) >= 1`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let g = &self.gamma;
        (g[(0, 1)] - g[(1, 0)]).abs() <= tol && g[(0, 0)] > 0.0 && g.determinant() >= 1.0 - tol
    }

    /// Mean energy `omega <N>` and variance `omega^2 var(N)`.
    pub fn energy_stats(&self) -> (f64, f64) {
        let m = photon_moments(self);
        let w = self.spec.omega();
        (w * m.mean, w * w * m.variance)
    }
}

/// Canonical local Gaussian unitary `R(theta) S(r) R(phi)` followed by a
/// displacement `xi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymplecticParams {
    pub theta: f64,
    pub r: f64,
    pub phi: f64,
    pub xi: Vector2<f64>,
}

impl SymplecticParams {
    /// Negative `r` is rewritten as `R(theta + pi/2) S(-r) R(phi - pi/2)`.
    pub fn new(theta: f64, r: f64, phi: f64, xi: [f64; 2]) -> Result<Self, GaussianError> {
        if ![theta, r, phi, xi[0], xi[1]].iter().all(|v| v.is_finite()) {
            return Err(GaussianError::NonFiniteParams);
        }
        let (theta, r, phi) = if r < 0.0 {
            let h = std::f64::consts::FRAC_PI_2;
            (theta + h, -r, phi - h)
        } else {
            (theta, r, phi)
        };
        Ok(Self {
            theta,
            r,
            phi,
            xi: Vector2::new(xi[0], xi[1]),
        })
    }

    pub fn identity() -> Self {
        Self {
            theta: 0.0,
            r: 0.0,
            phi: 0.0,
            xi: Vector2::zeros(),
        }
    }

    /// Displacement expressed in the squeezer's frame, `R(theta)^T xi`.
    pub fn effective_xi(&self) -> Vector2<f64> {
        rotation(self.theta).transpose() * self.xi
    }
}

pub fn symplectic_matrix(params: &SymplecticParams) -> Matrix2<f64> {
    rotation(params.theta) * squeezer(params.r) * rotation(params.phi)
}

pub fn thermal_gaussian(spec: ThermalSpec) -> GaussianState {
    GaussianState {
        xbar: Vector2::zeros(),
        gamma: Matrix2::identity() * spec.nu(),
        spec,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhotonMoments {
    pub mean: f64,
    pub mean_sq: f64,
    pub variance: f64,
}

pub fn photon_moments(state: &GaussianState) -> PhotonMoments {
    let g = &state.gamma;
    let x = &state.xbar;
    let mean = 0.25 * (g.trace() - 2.0) + 0.5 * x.norm_squared();
    let variance = 0.5 * (x.transpose() * g * x)[(0, 0)] + 0.125 * ((g * g).trace() - 2.0);
    PhotonMoments {
        mean,
        mean_sq: variance + mean * mean,
        variance,
    }
}

pub fn apply_symplectic(state: &GaussianState, params: &SymplecticParams) -> GaussianState {
    let s = symplectic_matrix(params);
    GaussianState {
        xbar: s * state.xbar + params.xi,
        gamma: s * state.gamma * s.transpose(),
        spec: state.spec,
    }
}

fn check_energy(delta_e: f64) -> Result<(), GaussianError> {
    if delta_e.is_finite() && delta_e >= 0.0 {
        Ok(())
    } else {
        Err(GaussianError::NegativeEnergy(delta_e))
    }
}

/// Increase in energy standard deviation from a pure displacement.
pub fn displacement_only_sigma(delta_e: f64, spec: ThermalSpec) -> Result<f64, GaussianError> {
    check_energy(delta_e)?;
    let v0 = spec.thermal_variance();
    let w = spec.omega();
    Ok((spec.nu() * w * delta_e + v0).sqrt() - v0.sqrt())
}

/// Energy spent on squeezing a thermal state by `r`.
pub fn squeezing_energy(r: f64, spec: ThermalSpec) -> f64 {
    spec.omega() * spec.nu() * r.sinh().powi(2)
}

/// Largest squeezing reachable with energy `delta_e`.
pub fn max_squeezing(delta_e: f64, spec: ThermalSpec) -> Result<f64, GaussianError> {
    check_energy(delta_e)?;
    let eps = delta_e / spec.omega();
    Ok(0.5 * arcosh1p(2.0 * eps / spec.nu()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianCharge {
    pub delta_e: f64,
    pub final_v: f64,
    pub delta_w2: f64,
}

/// `V(tau) (1 - 2 cosh 2r)`, the gap between work fluctuations and final variance.
pub fn fluctuation_offset(r: f64, spec: ThermalSpec) -> f64 {
    spec.thermal_variance() * (1.0 - 2.0 * (2.0 * r).cosh())
}

/// Energy input, final variance and work fluctuations of a Gaussian unitary
/// applied to the thermal state of `spec`.
pub fn gaussian_charge_stats(params: &SymplecticParams, spec: ThermalSpec) -> GaussianCharge {
    let w = spec.omega();
    let nu = spec.nu();
    let r = params.r;
    let xi = params.effective_xi();
    let delta_e = 0.5 * w * (nu * 2.0 * r.sinh().powi(2) + xi.norm_squared());
    let shaped = xi[0] * xi[0] * (-2.0 * r).exp() + xi[1] * xi[1] * (2.0 * r).exp();
    let final_v = 0.25 * w * w * (nu * nu * (4.0 * r).cosh() - 1.0 + 2.0 * nu * shaped);
    GaussianCharge {
        delta_e,
        final_v,
        delta_w2: final_v + fluctuation_offset(r, spec),
    }
}

/// Displacement energy left once squeezing `r` has been paid for, in units
/// of omega. Errors if negative beyond rounding.
fn residual_displacement(r: f64, delta_e: f64, spec: ThermalSpec) -> Result<f64, GaussianError> {
    check_energy(delta_e)?;
    let eps = delta_e / spec.omega();
    let sq = 0.5 * spec.nu() * 2.0 * r.sinh().powi(2);
    let resid = eps - sq;
    if r < 0.0 || resid < -1e-12 * eps.max(1.0) {
        return Err(GaussianError::InfeasibleSqueezing {
            r,
            max_r: max_squeezing(delta_e, spec)?,
        });
    }
    Ok(resid.max(0.0))
}

/// Final variances `(V_-, V_+)` with squeezing `r` and the remaining energy
/// displaced along the squeezed or anti-squeezed quadrature.
pub fn v_bounds_at_r(r: f64, delta_e: f64, spec: ThermalSpec) -> Result<(f64, f64), GaussianError> {
    let resid = residual_displacement(r, delta_e, spec)?;
    let w2 = spec.omega() * spec.omega();
    let nu = spec.nu();
    let base = 0.25 * (nu * nu * (4.0 * r).cosh() - 1.0);
    let minus = base + nu * (-2.0 * r).exp() * resid;
    let plus = base + nu * (2.0 * r).exp() * resid;
    Ok((w2 * minus, w2 * plus))
}

/// Work fluctuations `(dW2_-, dW2_+)` for the same two displacement directions.
pub fn dw_bounds_at_r(
    r: f64,
    delta_e: f64,
    spec: ThermalSpec,
) -> Result<(f64, f64), GaussianError> {
    let (vm, vp) = v_bounds_at_r(r, delta_e, spec)?;
    let off = fluctuation_offset(r, spec);
    Ok((vm + off, vp + off))
}
