//! Extremal squeezing parameters for Gaussian charging and the scalar
//! root finder they rely on.
//!
//! Auxiliary symbols: `nu = coth(beta omega / 2)`, `chi = 2 eps / nu + 1` with
//! `eps = delta_E / omega`, `lambda = 1 - 1/nu^2`, and `u = v = e^{-2r}`.

use thiserror::Error;

use crate::fock::ThermalSpec;
use crate::gaussian::{self, GaussianError};

const MAX_ITER: usize = 400;
const MAX_DOUBLINGS: usize = 64;
const X_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("root not bracketed: f({lo})={f_lo}, f({hi})={f_hi}")]
    NotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("no bracket found for {0}")]
    ConvergenceFailure(&'static str),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

/// Finds a root of a continuous `f` with a sign change on `[lo, hi]`.
///
/// Alternates secant and bisection steps, so the bracket at least halves
/// every two iterations. Stops when `|f| <= tol` or the bracket is narrower
/// than `1e-14` (relative for roots above one).
pub fn bracketed_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Root, SolverError>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            iterations: 0,
        });
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(SolverError::NotBracketed {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut best = if fa.abs() < fb.abs() { a } else { b };
    for it in 1..=MAX_ITER {
        let mid = 0.5 * (a + b);
        let width_ok = b - a <= X_TOL * mid.abs().max(1.0);
        if width_ok || mid <= a || mid >= b {
            return Ok(Root {
                x: best,
                iterations: it - 1,
            });
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let x = if it % 2 == 1 && secant > a && secant < b {
            secant
        } else {
            mid
        };
        let fx = f(x);
        if fx.abs() <= tol || fx == 0.0 {
            return Ok(Root { x, iterations: it });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        best = if fa.abs() < fb.abs() { a } else { b };
    }
    Ok(Root {
        x: best,
        iterations: MAX_ITER,
    })
}

/// Doubles `hi` from `start` until `f(hi) > 0`, for `f` increasing.
fn expand_upper<F: Fn(f64) -> f64>(
    f: &F,
    start: f64,
    what: &'static str,
) -> Result<f64, SolverError> {
    let mut hi = start;
    for _ in 0..MAX_DOUBLINGS {
        if f(hi) > 0.0 {
            return Ok(hi);
        }
        hi *= 2.0;
    }
    Err(SolverError::ConvergenceFailure(what))
}

/// Solution of an extremal charging problem.
///
/// `objective` is `delta_sigma` for [`worst_precision`], the final variance
/// for [`best_precision`] and the work fluctuation `dW^2` for
/// [`extremal_fluctuations`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtremalSolution {
    pub r: f64,
    pub objective: f64,
    pub e_disp: f64,
    pub e_sq: f64,
    pub iterations: usize,
    /// True when the solution sits on the full-squeezing boundary rather
    /// than at an interior stationary point.
    pub on_boundary: bool,
}

fn chi(delta_e: f64, spec: ThermalSpec) -> f64 {
    2.0 * delta_e / spec.omega() / spec.nu() + 1.0
}

fn lambda(spec: ThermalSpec) -> f64 {
    let nu = spec.nu();
    1.0 - 1.0 / (nu * nu)
}

fn check_energy(delta_e: f64) -> Result<(), SolverError> {
    if delta_e.is_finite() && delta_e >= 0.0 {
        Ok(())
    } else {
        Err(GaussianError::NegativeEnergy(delta_e).into())
    }
}

fn split(r: f64, delta_e: f64, spec: ThermalSpec) -> (f64, f64) {
    let e_sq = gaussian::squeezing_energy(r, spec).min(delta_e);
    (delta_e - e_sq, e_sq)
}

/// Worst Gaussian precision: all energy into squeezing.
pub fn worst_precision(delta_e: f64, spec: ThermalSpec) -> Result<ExtremalSolution, SolverError> {
    check_energy(delta_e)?;
    let r = gaussian::max_squeezing(delta_e, spec)?;
    let v0 = spec.thermal_variance();
    let w = spec.omega();
    let eps = delta_e / w;
    let v = 2.0 * w * w * eps * (eps + spec.nu()) + v0;
    Ok(ExtremalSolution {
        r,
        objective: v.sqrt() - v0.sqrt(),
        e_disp: 0.0,
        e_sq: delta_e,
        iterations: 0,
        on_boundary: true,
    })
}

/// Final variance of the worst Gaussian strategy.
pub fn worst_precision_variance(delta_e: f64, spec: ThermalSpec) -> Result<f64, SolverError> {
    let sol = worst_precision(delta_e, spec)?;
    let v0 = spec.thermal_variance();
    Ok((sol.objective + v0.sqrt()).powi(2))
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2
}

/// Best Gaussian precision: squeezing `r_-` with the remaining energy
/// displaced along the squeezed quadrature, where `e^{2r} cosh 4r = chi`.
pub fn best_precision(delta_e: f64, spec: ThermalSpec) -> Result<ExtremalSolution, SolverError> {
    check_energy(delta_e)?;
    let target = chi(delta_e, spec).ln();
    let (r, iterations) = if delta_e == 0.0 {
        (0.0, 0)
    } else {
        let f = |r: f64| 2.0 * r + ln_cosh(4.0 * r) - target;
        let hi = expand_upper(&f, 1.0, "best_precision")?;
        let root = bracketed_root(f, 0.0, hi, 0.0)?;
        (root.x, root.iterations)
    };
    let (objective, _) = gaussian::v_bounds_at_r(r, delta_e, spec)?;
    let (e_disp, e_sq) = split(r, delta_e, spec);
    Ok(ExtremalSolution {
        r,
        objective,
        e_disp,
        e_sq,
        iterations,
        on_boundary: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

/// `f_lambda(u) = lambda (1 - u^2)/2 + (1/u + u^3)/2`.
fn f_lambda(lam: f64, u: f64) -> f64 {
    0.5 * lam * (1.0 - u * u) + 0.5 * (1.0 / u + u * u * u)
}

/// `h_lambda(v) = lambda (1 - v^-2)/2 + (v + v^-3)/2`.
fn h_lambda(lam: f64, v: f64) -> f64 {
    0.5 * lam * (1.0 - 1.0 / (v * v)) + 0.5 * (v + 1.0 / (v * v * v))
}

/// Local minimum `u_lambda` of `f_lambda`, the root of `(3u - u^-3)/2 = lambda`
/// on `[3^{-1/4}, 1]`.
pub fn u_lambda(spec: ThermalSpec) -> Result<f64, SolverError> {
    let lam = lambda(spec);
    let g = |u: f64| 0.5 * (3.0 * u - u.powi(-3)) - lam;
    let lo = 3f64.powf(-0.25);
    if lam == 0.0 {
        return Ok(lo);
    }
    Ok(bracketed_root(g, lo, 1.0, 0.0)?.x)
}

/// Stationary point of `dW_+^2(r)` left of `u_lambda`, ignoring whether the
/// squeezing fits into the energy budget.
pub fn max_fluctuation_stationary_point(
    delta_e: f64,
    spec: ThermalSpec,
) -> Result<Root, SolverError> {
    check_energy(delta_e)?;
    let lam = lambda(spec);
    let c = chi(delta_e, spec);
    let r_lam = -0.5 * u_lambda(spec)?.ln();
    let f = |r: f64| f_lambda(lam, (-2.0 * r).exp()) - c;
    if f(r_lam) >= 0.0 {
        return Ok(Root {
            x: r_lam,
            iterations: 0,
        });
    }
    let hi = expand_upper(&f, r_lam.max(1.0), "max fluctuation")?;
    bracketed_root(f, r_lam, hi, 0.0)
}

/// Stationary point of `dW_-^2(r)`, the root of `h_lambda(e^{-2r}) = chi`.
pub fn min_fluctuation_stationary_point(
    delta_e: f64,
    spec: ThermalSpec,
) -> Result<Root, SolverError> {
    check_energy(delta_e)?;
    if delta_e == 0.0 {
        return Ok(Root {
            x: 0.0,
            iterations: 0,
        });
    }
    let lam = lambda(spec);
    let c = chi(delta_e, spec);
    let f = |r: f64| h_lambda(lam, (-2.0 * r).exp()) - c;
    let hi = expand_upper(&f, 1.0, "min fluctuation")?;
    bracketed_root(f, 0.0, hi, 0.0)
}

/// Smallest or largest work fluctuations over Gaussian unitaries with
/// energy input `delta_e`.
///
/// For `Max` the interior stationary point is used when its squeezing fits
/// into the energy budget; otherwise `dW_+^2` is still increasing at full
/// squeezing and the maximum sits on that boundary.
pub fn extremal_fluctuations(
    delta_e: f64,
    spec: ThermalSpec,
    which: Extremum,
) -> Result<ExtremalSolution, SolverError> {
    check_energy(delta_e)?;
    let (r, iterations, on_boundary) = match which {
        Extremum::Min => {
            let root = min_fluctuation_stationary_point(delta_e, spec)?;
            (root.x, root.iterations, false)
        }
        Extremum::Max => {
            let r_max = gaussian::max_squeezing(delta_e, spec)?;
            let root = max_fluctuation_stationary_point(delta_e, spec)?;
            if root.x < r_max {
                (root.x, root.iterations, false)
            } else {
                (r_max, root.iterations, true)
            }
        }
    };
    let (dm, dp) = gaussian::dw_bounds_at_r(r, delta_e, spec)?;
    let (e_disp, e_sq) = split(r, delta_e, spec);
    Ok(ExtremalSolution {
        r,
        objective: match which {
            Extremum::Min => dm,
            Extremum::Max => dp,
        },
        e_disp,
        e_sq,
        iterations,
        on_boundary,
    })
}
