//! Brute-force reference values from dense matrices on a truncated Fock
//! space.
//!
//! Gaussian unitaries are built as `D(alpha) R(theta) U_S(r) R(phi)` from
//! matrix exponentials of their generators, and energy statistics are read
//! off the transition probabilities `p_m |<n|U|m>|^2`.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{self, FockError, ThermalSpec};
use crate::gaussian::{GaussianState, SymplecticParams};

/// Largest probability allowed in the top tenth of the truncated levels.
pub const LEAKAGE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("dimension {0} too small for a mode")]
    DimensionTooSmall(usize),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("truncation warning: vacuum leaks {leakage:e} into the top levels at dim={dim}")]
    TruncationWarning { leakage: f64, dim: usize },
    #[error("truncation too small: thermal-weighted leakage {leakage:e} at dim={dim}")]
    TruncationTooSmall { leakage: f64, dim: usize },
    #[error("grid insufficient: {0}")]
    GridInsufficient(String),
}

pub type CMatrix = DMatrix<Complex64>;

/// Dense single-mode operators.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSet {
    pub dim: usize,
    pub omega: f64,
    pub a: CMatrix,
    pub a_dag: CMatrix,
    pub number: CMatrix,
    pub hamiltonian: CMatrix,
}

pub fn build_mode_operators(dim: usize, omega: f64) -> Result<OperatorSet, OracleError> {
    if dim < 2 {
        return Err(OracleError::DimensionTooSmall(dim));
    }
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let a_dag = a.adjoint();
    let number = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        (0..dim).map(|n| Complex64::new(n as f64, 0.0)),
    ));
    let hamiltonian = &number * Complex64::new(omega, 0.0);
    Ok(OperatorSet {
        dim,
        omega,
        a,
        a_dag,
        number,
        hamiltonian,
    })
}

fn one_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * T::from_real(0.5f64.powi(s));
    let b = |i: usize| T::from_real(PADE13[i]);
    let id = DMatrix::<T>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = &a * (&a6 * inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = &a6 * inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .expect("Padé denominator is invertible for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Single-mode Gaussian unitary with its vacuum leakage diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianUnitary {
    pub matrix: CMatrix,
    /// Probability the vacuum column places on the top tenth of levels.
    pub leakage: f64,
}

fn top_start(dim: usize) -> usize {
    dim - (dim / 10).max(1)
}

fn column_leakage(u: &CMatrix, col: usize) -> f64 {
    (top_start(u.nrows())..u.nrows())
        .map(|n| u[(n, col)].norm_sqr())
        .sum()
}

fn ladder(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(
        dim,
        dim,
        |i, j| if i + 1 == j { (j as f64).sqrt() } else { 0.0 },
    )
}

/// Builds `D(alpha) R(theta) U_S(r) R(phi)` with `R(t) = exp(-i t N)`,
/// `U_S(r) = exp(r (a^2 - a^dag^2) / 2)` and `alpha = (xi_1 + i xi_2)/sqrt 2`,
/// without the truncation check.
///
/// With `alpha = |alpha| e^{i chi}`, `D(alpha) = R(-chi) D(|alpha|) R(chi)`,
/// so both exponentials are taken of real generators.
pub fn gaussian_unitary_unchecked(
    params: &SymplecticParams,
    dim: usize,
) -> Result<GaussianUnitary, OracleError> {
    if dim < 2 {
        return Err(OracleError::DimensionTooSmall(dim));
    }
    let a = ladder(dim);
    let a_dag = a.transpose();
    let squeeze = if params.r == 0.0 {
        DMatrix::identity(dim, dim)
    } else {
        expm(&((&a * &a - &a_dag * &a_dag) * (0.5 * params.r)))
    };
    let alpha = Complex64::new(params.xi[0], params.xi[1]) / 2f64.sqrt();
    let (mag, chi) = alpha.to_polar();
    let displace = if mag == 0.0 {
        DMatrix::identity(dim, dim)
    } else {
        expm(&((&a_dag - &a) * mag))
    };
    // Middle factor D(|alpha|) R(chi + theta) U_S(r), split into real and
    // imaginary parts.
    let t = chi + params.theta;
    let cos = DMatrix::from_fn(dim, dim, |k, m| (t * k as f64).cos() * squeeze[(k, m)]);
    let sin = DMatrix::from_fn(dim, dim, |k, m| -(t * k as f64).sin() * squeeze[(k, m)]);
    let re = &displace * cos;
    let im = &displace * sin;
    let matrix = CMatrix::from_fn(dim, dim, |n, m| {
        let outer = Complex64::from_polar(1.0, chi * n as f64 - params.phi * m as f64);
        outer * Complex64::new(re[(n, m)], im[(n, m)])
    });
    let leakage = column_leakage(&matrix, 0);
    Ok(GaussianUnitary { matrix, leakage })
}

/// As [`gaussian_unitary_unchecked`], failing when the vacuum image leaks
/// more than [`LEAKAGE_TOL`] into the top tenth of levels.
pub fn gaussian_unitary_matrix(
    params: &SymplecticParams,
    dim: usize,
) -> Result<GaussianUnitary, OracleError> {
    let u = gaussian_unitary_unchecked(params, dim)?;
    if u.leakage > LEAKAGE_TOL {
        return Err(OracleError::TruncationWarning {
            leakage: u.leakage,
            dim,
        });
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleStats {
    pub delta_e: f64,
    pub final_v: f64,
    pub delta_w2: f64,
}

/// Energy statistics from transition probabilities over flat levels.
fn stats_from_transitions(probs: &DMatrix<f64>, energies: &[f64]) -> OracleStats {
    let dim = energies.len();
    let mut occ = vec![0.0; dim];
    let mut de = 0.0;
    for m in 0..dim {
        for n in 0..dim {
            let p = probs[(n, m)];
            occ[n] += p;
            de += p * (energies[n] - energies[m]);
        }
    }
    let e1: f64 = occ.iter().zip(energies).map(|(p, e)| p * e).sum();
    let final_v = occ
        .iter()
        .zip(energies)
        .map(|(p, e)| p * (e - e1) * (e - e1))
        .sum();
    let mut w2 = 0.0;
    for m in 0..dim {
        for n in 0..dim {
            let w = energies[n] - energies[m] - de;
            w2 += probs[(n, m)] * w * w;
        }
    }
    OracleStats {
        delta_e: de,
        final_v,
        delta_w2: w2,
    }
}

fn weighted_leakage(u: &CMatrix, weights: &[f64]) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(m, p)| p * column_leakage(u, m))
        .sum()
}

/// Energy input, final variance and work fluctuations of a Gaussian
/// unitary on the thermal state of `spec`, by direct summation.
pub fn oracle_stats(
    params: &SymplecticParams,
    spec: ThermalSpec,
    dim: usize,
) -> Result<OracleStats, OracleError> {
    let thermal = fock::thermal_weights(spec, dim)?;
    let u = gaussian_unitary_unchecked(params, dim)?.matrix;
    let leakage = weighted_leakage(&u, thermal.weights());
    if leakage > LEAKAGE_TOL {
        return Err(OracleError::TruncationTooSmall { leakage, dim });
    }
    let p = thermal.weights();
    let probs = DMatrix::from_fn(dim, dim, |n, m| p[m] * u[(n, m)].norm_sqr());
    let energies: Vec<f64> = (0..dim).map(|n| spec.omega() * n as f64).collect();
    Ok(stats_from_transitions(&probs, &energies))
}

/// Joint statistics of two independently transformed modes, evaluated on
/// the product space of two `dim`-level truncations.
pub fn two_mode_oracle_stats(
    first: (&SymplecticParams, ThermalSpec),
    second: (&SymplecticParams, ThermalSpec),
    dim: usize,
) -> Result<OracleStats, OracleError> {
    let mut modes = Vec::new();
    for (params, spec) in [first, second] {
        let thermal = fock::thermal_weights(spec, dim)?;
        let u = gaussian_unitary_unchecked(params, dim)?.matrix;
        let leakage = weighted_leakage(&u, thermal.weights());
        if leakage > LEAKAGE_TOL {
            return Err(OracleError::TruncationTooSmall { leakage, dim });
        }
        let abs2 = DMatrix::from_fn(dim, dim, |n, m| u[(n, m)].norm_sqr());
        modes.push((thermal, abs2, spec.omega()));
    }
    let (ta, ua, wa) = &modes[0];
    let (tb, ub, wb) = &modes[1];
    let total = dim * dim;
    let flat = |i: usize, j: usize| i * dim + j;
    let mut energies = vec![0.0; total];
    let mut initial = vec![0.0; total];
    for i in 0..dim {
        for j in 0..dim {
            energies[flat(i, j)] = wa * i as f64 + wb * j as f64;
            initial[flat(i, j)] = ta.weights()[i] * tb.weights()[j];
        }
    }
    // Matrix elements of the Kronecker product U_A (x) U_B.
    let probs = DMatrix::from_fn(total, total, |n, m| {
        let (na, nb) = (n / dim, n % dim);
        let (ma, mb) = (m / dim, m % dim);
        initial[m] * ua[(na, ma)] * ub[(nb, mb)]
    });
    Ok(stats_from_transitions(&probs, &energies))
}

/// Grid that passes the checks in [`wigner_moment_check`] with margin.
pub fn wigner_grid_for(state: &GaussianState) -> (f64, usize) {
    let (lo, hi) = sigma_range(state);
    let half_width = 10.0 * hi;
    let points = (2.0 * half_width / (0.3 * lo)).ceil() as usize + 1;
    (half_width, points)
}

fn sigma_range(state: &GaussianState) -> (f64, f64) {
    let eig = state.gamma.symmetric_eigenvalues();
    let lo = eig.min().max(0.0);
    let hi = eig.max();
    ((0.5 * lo).sqrt(), (0.5 * hi).sqrt())
}

/// `<N^2>` by trapezoidal quadrature of the Wigner function against the
/// phase-space kernel `((x^2 + p^2 - 1)^2 - 1) / 4`, on a square grid
/// centred at the first moments.
pub fn wigner_moment_check(
    state: &GaussianState,
    grid_half_width: f64,
    grid_points: usize,
) -> Result<f64, OracleError> {
    let (s_lo, s_hi) = sigma_range(state);
    if grid_half_width.is_nan() || grid_half_width < 8.0 * s_hi {
        return Err(OracleError::GridInsufficient(format!(
            "half width {grid_half_width} below 8 sigma = {}",
            8.0 * s_hi
        )));
    }
    if grid_points < 3 {
        return Err(OracleError::GridInsufficient(
            "need at least 3 points".into(),
        ));
    }
    let h = 2.0 * grid_half_width / (grid_points - 1) as f64;
    if h > 0.5 * s_lo {
        return Err(OracleError::GridInsufficient(format!(
            "spacing {h} exceeds half the narrowest width {s_lo}"
        )));
    }
    let inv = state
        .gamma
        .try_inverse()
        .ok_or_else(|| OracleError::GridInsufficient("singular covariance".into()))?;
    let norm = 1.0 / (std::f64::consts::PI * state.gamma.determinant().sqrt());
    let (cx, cp) = (state.xbar[0], state.xbar[1]);
    let weight = |i: usize| {
        if i == 0 || i == grid_points - 1 {
            0.5
        } else {
            1.0
        }
    };
    let mut acc = 0.0;
    for i in 0..grid_points {
        let dx = -grid_half_width + h * i as f64;
        let x = cx + dx;
        let mut row = 0.0;
        for j in 0..grid_points {
            let dp = -grid_half_width + h * j as f64;
            let p = cp + dp;
            let q = inv[(0, 0)] * dx * dx + 2.0 * inv[(0, 1)] * dx * dp + inv[(1, 1)] * dp * dp;
            let r2 = x * x + p * p - 1.0;
            row += weight(j) * (-q).exp() * 0.25 * (r2 * r2 - 1.0);
        }
        acc += weight(i) * row;
    }
    Ok(norm * acc * h * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{self, thermal_gaussian};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn operators() {
        let ops = build_mode_operators(8, 1.0).unwrap();
        let mut one = nalgebra::DVector::<Complex64>::zeros(8);
        one[1] = Complex64::new(1.0, 0.0);
        let out = &ops.a * one;
        assert_eq!(out[0], Complex64::new(1.0, 0.0));
        for n in 0..8 {
            assert_eq!(ops.number[(n, n)].re, n as f64);
        }
        let comm = &ops.a * &ops.a_dag - &ops.a_dag * &ops.a;
        let block = comm.view((0, 0), (7, 7)).into_owned();
        // sqrt(n)^2 rounds, so equality holds to a few ulps.
        assert!((block - CMatrix::identity(7, 7)).norm() < 1e-14);
        assert!(build_mode_operators(1, 1.0).is_err());
    }

    #[test]
    fn expm_of_diagonal_and_rotation_generator() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-20.0, 0.0),
            Complex64::new(0.0, 3.0),
        ]));
        let e = expm(&d);
        assert!(close(e[(0, 0)].re, 1f64.exp(), 1e-14));
        assert!(close(e[(1, 1)].re, (-20f64).exp(), 1e-12));
        assert!((e[(2, 2)] - Complex64::from_polar(1.0, 3.0)).norm() < 1e-13);

        let t = 7.5;
        let g = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(t, 0.0),
                Complex64::new(-t, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let e = expm(&g);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-13);
        assert!((e[(0, 1)].re - t.sin()).abs() < 1e-13);
    }

    #[test]
    fn identity_params() {
        let u = gaussian_unitary_matrix(&SymplecticParams::identity(), 20).unwrap();
        assert_eq!(u.matrix, CMatrix::identity(20, 20));
        let spec = ThermalSpec::new(1.0, 1.0).unwrap();
        let s = oracle_stats(&SymplecticParams::identity(), spec, 64).unwrap();
        assert!(s.delta_e.abs() < 1e-15 && s.delta_w2.abs() < 1e-15);
        assert!(close(s.final_v, spec.thermal_variance(), 1e-12));
    }

    #[test]
    fn coherent_and_squeezed_vacuum_means() {
        let ops = build_mode_operators(60, 1.0).unwrap();
        let mean_n = |u: &CMatrix| {
            (0..60)
                .map(|n| n as f64 * u[(n, 0)].norm_sqr())
                .sum::<f64>()
                + 0.0 * ops.omega
        };
        let p = SymplecticParams::new(0.0, 0.0, 0.0, [2f64.sqrt(), 0.0]).unwrap();
        let u = gaussian_unitary_matrix(&p, 60).unwrap();
        assert!((mean_n(&u.matrix) - 1.0).abs() < 1e-10);
        let p = SymplecticParams::new(0.0, 0.5, 0.0, [0.0, 0.0]).unwrap();
        let u = gaussian_unitary_matrix(&p, 60).unwrap();
        assert!((mean_n(&u.matrix) - 0.5f64.sinh().powi(2)).abs() < 1e-8);
    }

    #[test]
    fn leakage_is_reported() {
        let p = SymplecticParams::new(0.0, 0.0, 0.0, [6.0, 0.0]).unwrap();
        assert!(matches!(
            gaussian_unitary_matrix(&p, 20),
            Err(OracleError::TruncationWarning { .. })
        ));
    }

    #[test]
    fn squeezed_vacuum_variance() {
        let spec = ThermalSpec::zero_temperature(1.0).unwrap();
        let r = gaussian::max_squeezing(1.0, spec).unwrap();
        let p = SymplecticParams::new(0.0, r, 0.0, [0.0, 0.0]).unwrap();
        let s = oracle_stats(&p, spec, 120).unwrap();
        assert!((s.final_v - 4.0).abs() < 1e-6);
        assert!((s.delta_e - 1.0).abs() < 1e-9);
    }

    #[test]
    fn first_moments_follow_symplectic_map() {
        // Checks the operator ordering and phase conventions against the
        // phase-space map on a coherent input.
        let dim = 80;
        let ops = build_mode_operators(dim, 1.0).unwrap();
        let seed = SymplecticParams::new(0.0, 0.0, 0.0, [0.6, -0.4]).unwrap();
        let psi0 = gaussian_unitary_matrix(&seed, dim)
            .unwrap()
            .matrix
            .column(0)
            .into_owned();
        let p = SymplecticParams::new(0.7, 0.3, -0.4, [0.2, 0.5]).unwrap();
        let u = gaussian_unitary_matrix(&p, dim).unwrap().matrix;
        let psi = &u * psi0;
        let a_mean = (psi.adjoint() * &ops.a * &psi)[(0, 0)];
        let x = a_mean.re * 2f64.sqrt();
        let q = a_mean.im * 2f64.sqrt();
        let vac = thermal_gaussian(ThermalSpec::zero_temperature(1.0).unwrap());
        let start = GaussianState::new(seed.xi, vac.gamma, vac.spec);
        let expected = gaussian::apply_symplectic(&start, &p).xbar;
        assert!((x - expected[0]).abs() < 1e-10, "{x} {}", expected[0]);
        assert!((q - expected[1]).abs() < 1e-10, "{q} {}", expected[1]);
    }

    #[test]
    fn wigner_examples() {
        let vac = thermal_gaussian(ThermalSpec::zero_temperature(1.0).unwrap());
        let (hw, pts) = wigner_grid_for(&vac);
        assert!(wigner_moment_check(&vac, hw, pts).unwrap().abs() < 1e-8);

        let spec = ThermalSpec::new(1.0, 1.0).unwrap();
        let th = thermal_gaussian(spec);
        let (hw, pts) = wigner_grid_for(&th);
        let n = spec.mean_occupation();
        let got = wigner_moment_check(&th, hw, pts).unwrap();
        assert!(close(got, 2.0 * n * n + n, 1e-6));

        assert!(matches!(
            wigner_moment_check(&th, 1.0, 400),
            Err(OracleError::GridInsufficient(_))
        ));
        assert!(matches!(
            wigner_moment_check(&th, hw, 5),
            Err(OracleError::GridInsufficient(_))
        ));
    }
}
