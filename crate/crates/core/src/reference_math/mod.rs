//! Classical oracles: lattice Gaussian normalisation, rotation angles, the
//! reference states every circuit is checked against, and the angle
//! approximation plans the circuit builders consume.

mod angle;
mod linalg;
mod program;
mod states;
mod theta;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub use angle::{fit_angle_plan, AngleApproxPlan, Regime, Thresholds, GRID_POINTS};
pub use linalg::{ldlt, scalar_field_covariance};
pub use program::{AngleProgram, Branch, ProgramLayout, Trace, ENUMERATION_LIMIT};
pub use states::{
    exact_xi_state, fidelity, optimal_state_1d, optimal_state_nd, optimal_state_nd_with_cap, recursive_xi_state,
    recursive_xi_state_with, DEFAULT_QUBIT_CAP,
};
pub use theta::{alpha, alpha_bar, log_theta_norm, rotation, theta_norm, theta_series, xi_sq, Rotation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec1D {
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianSpec1D {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return domain("mu must be finite");
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return domain(format!("sigma must be positive, got {sigma}"));
        }
        Ok(GaussianSpec1D { mu, sigma })
    }

    /// The centred encoding used by the circuits.
    pub fn symmetric(sigma: f64) -> Result<Self> {
        Self::new(-0.5, sigma)
    }

    /// Parameters seen at recursion depth `j` for the prefix `q` already
    /// written into the low `j` state qubits.
    pub fn at_level(&self, j: u32, q: u64) -> GaussianSpec1D {
        let scale = (j as f64).exp2();
        GaussianSpec1D { mu: (self.mu - q as f64) / scale, sigma: self.sigma / scale }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceSpec {
    pub mu_vec: Vec<f64>,
    pub sigma_mat: DMatrix<f64>,
}

impl CovarianceSpec {
    pub fn new(mu_vec: Vec<f64>, sigma_mat: DMatrix<f64>) -> Result<Self> {
        let n = mu_vec.len();
        if sigma_mat.nrows() != n || sigma_mat.ncols() != n {
            return domain(format!(
                "covariance is {}x{} but mean has {n} entries",
                sigma_mat.nrows(),
                sigma_mat.ncols()
            ));
        }
        let scale = sigma_mat.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (sigma_mat[(i, j)] - sigma_mat[(j, i)]).abs() > 1e-12 * scale {
                    return domain(format!("covariance not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(CovarianceSpec { mu_vec, sigma_mat })
    }

    /// Zero-mean-cell (`mu = -1/2` in every coordinate) covariance.
    pub fn centred(sigma_mat: DMatrix<f64>) -> Result<Self> {
        let n = sigma_mat.nrows();
        Self::new(vec![-0.5; n], sigma_mat)
    }

    pub fn dims(&self) -> usize {
        self.mu_vec.len()
    }
}

/// `Sigma = M diag(sigma_sq) M^T` with `M` upper unitriangular.
#[derive(Clone, Debug, PartialEq)]
pub struct LdltFactors {
    pub m_mat: DMatrix<f64>,
    pub sigma_sq: Vec<f64>,
}

impl LdltFactors {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.sigma_sq.clone()));
        &self.m_mat * d * self.m_mat.transpose()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVectorDense {
    pub amplitudes: Vec<Complex64>,
    pub qubit_count: usize,
}

impl StateVectorDense {
    pub fn from_real(values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        if !len.is_power_of_two() {
            return domain(format!("state length {len} is not a power of two"));
        }
        Ok(StateVectorDense {
            amplitudes: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            qubit_count: len.trailing_zeros() as usize,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amplitudes.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.re).collect()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

/// Two's-complement reading of a `k`-bit basis index.
pub fn signed_coord(index: u64, k: u32) -> i64 {
    let half = 1u64 << (k - 1);
    if index < half {
        index as i64
    } else {
        index as i64 - (1i64 << k)
    }
}

/// Inverse of [`signed_coord`].
pub fn coord_index(n: i64, k: u32) -> u64 {
    (n.rem_euclid(1i64 << k)) as u64
}
