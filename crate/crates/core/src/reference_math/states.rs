use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::angle::{fit_angle_plan, Regime, Thresholds};
use super::program::AngleProgram;
use super::theta::{log_theta_norm, rotation};
use super::{signed_coord, CovarianceSpec, GaussianSpec1D, StateVectorDense};
use crate::error::{domain, Error, Result};

pub const DEFAULT_QUBIT_CAP: usize = 24;

fn check_k(k: u32, cap: usize) -> Result<()> {
    if k as usize > cap {
        return Err(Error::ResourceCap { needed: k as usize, cap });
    }
    Ok(())
}

/// `|xi_{mu,sigma;k}>` from the closed form, index `n` in `[0, 2^k)`.
pub fn exact_xi_state(spec: GaussianSpec1D, k: u32) -> Result<StateVectorDense> {
    check_k(k, DEFAULT_QUBIT_CAP)?;
    let lf = log_theta_norm(spec.mu, spec.sigma)?;
    let scale = (k as f64).exp2();
    let amps = (0..1u64 << k)
        .map(|n| {
            let l = log_theta_norm((spec.mu - n as f64) / scale, spec.sigma / scale)?;
            Ok((0.5 * (l - lf)).exp())
        })
        .collect::<Result<Vec<_>>>()?;
    StateVectorDense::from_real(amps)
}

/// Build `|xi>` one qubit at a time, exactly as the circuit does: level `j`
/// rotates `q_j` by the angle belonging to the prefix `q_0 .. q_{j-1}`.
///
/// With `b` set, levels `j >= 1` use the angle the `b`-bit circuit would
/// compute. For the symmetric encoding this is the bit-exact fixed-point
/// program; other means fall back to truncating the plan value to `b` bits.
pub fn recursive_xi_state(spec: GaussianSpec1D, k: u32, b: Option<u32>) -> Result<StateVectorDense> {
    recursive_xi_state_with(spec, k, b, Thresholds::default())
}

pub fn recursive_xi_state_with(
    spec: GaussianSpec1D,
    k: u32,
    b: Option<u32>,
    thresholds: Thresholds,
) -> Result<StateVectorDense> {
    if k == 0 {
        return domain("recursion needs at least one qubit");
    }
    check_k(k, DEFAULT_QUBIT_CAP)?;
    let mut amps = vec![1.0f64];
    for j in 0..k {
        let width = 1usize << j;
        let angles: Vec<f64> = match (j, b) {
            (0, _) | (_, None) => (0..width as u64)
                .map(|q| {
                    let s = spec.at_level(j, q);
                    rotation(s.mu, s.sigma).map(|r| r.alpha)
                })
                .collect::<Result<_>>()?,
            (_, Some(b)) => quantised_level_angles(spec, j, b, thresholds)?,
        };
        let mut next = vec![0.0; width * 2];
        for (q, (&a, &th)) in amps.iter().zip(&angles).enumerate() {
            next[q] = a * th.cos();
            next[q + width] = a * th.sin();
        }
        amps = next;
    }
    StateVectorDense::from_real(amps)
}

fn quantised_level_angles(spec: GaussianSpec1D, j: u32, b: u32, thresholds: Thresholds) -> Result<Vec<f64>> {
    let sigma_j = spec.sigma / (j as f64).exp2();
    let plan = fit_angle_plan(sigma_j, b, thresholds)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let n = 1u64 << j;
    let out = match plan.regime {
        Regime::Constant => vec![half_pi / 2.0; n as usize],
        Regime::SquareWave => (0..n).map(|q| if (q >> (j - 1)) & 1 == 1 { half_pi } else { 0.0 }).collect(),
        _ if spec.mu == -0.5 => {
            let prog = AngleProgram::compile(&plan, j)?;
            (0..n).map(|q| half_pi * prog.angle_bar(q)).collect()
        }
        _ => {
            let scale = (b as f64).exp2();
            (0..n)
                .map(|q| {
                    let v = plan.eval(spec.at_level(j, q).mu);
                    half_pi * ((v * scale).floor().rem_euclid(scale)) / scale
                })
                .collect()
        }
    };
    Ok(out)
}

/// Truncated continuum Gaussian `exp(-(n - mu)^2 / 4 sigma^2)` on the
/// two's-complement lattice, renormalised.
pub fn optimal_state_1d(spec: GaussianSpec1D, k: u32) -> Result<StateVectorDense> {
    if k == 0 {
        return domain("state needs at least one qubit");
    }
    check_k(k, DEFAULT_QUBIT_CAP)?;
    let inv = 1.0 / (4.0 * spec.sigma * spec.sigma);
    let exps: Vec<f64> = (0..1u64 << k)
        .map(|i| {
            let d = signed_coord(i, k) as f64 - spec.mu;
            -d * d * inv
        })
        .collect();
    normalised_from_log(exps)
}

fn normalised_from_log(exps: Vec<f64>) -> Result<StateVectorDense> {
    let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = StateVectorDense::from_real(exps.into_iter().map(|e| (e - top).exp()).collect())?;
    s.normalize();
    Ok(s)
}

pub fn optimal_state_nd(spec: &CovarianceSpec, k: u32) -> Result<StateVectorDense> {
    optimal_state_nd_with_cap(spec, k, DEFAULT_QUBIT_CAP)
}

/// `exp(-1/4 (n - mu)^T Sigma^-1 (n - mu))` over `B'_k^N`; coordinate `i`
/// lives on qubits `[i k, (i+1) k)`.
pub fn optimal_state_nd_with_cap(spec: &CovarianceSpec, k: u32, cap: usize) -> Result<StateVectorDense> {
    let n = spec.dims();
    if n == 0 || k == 0 {
        return domain("need at least one coordinate and one qubit");
    }
    let qubits = n * k as usize;
    if qubits > cap {
        return Err(Error::ResourceCap { needed: qubits, cap });
    }
    let chol =
        spec.sigma_mat.clone().cholesky().ok_or_else(|| Error::Domain("covariance is not positive definite".into()))?;
    let prec: DMatrix<f64> = chol.inverse();
    let mask = (1u64 << k) - 1;
    let mut d = DVector::<f64>::zeros(n);
    let exps: Vec<f64> = (0..1u64 << qubits)
        .map(|idx| {
            for i in 0..n {
                let c = (idx >> (i as u32 * k)) & mask;
                d[i] = signed_coord(c, k) as f64 - spec.mu_vec[i];
            }
            -0.25 * (d.transpose() * &prec * &d)[(0, 0)]
        })
        .collect();
    normalised_from_log(exps)
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &StateVectorDense, b: &StateVectorDense) -> Result<f64> {
    if a.qubit_count != b.qubit_count || a.len() != b.len() {
        return domain(format!("fidelity of {}- and {}-qubit states", a.qubit_count, b.qubit_count));
    }
    let ov: Complex64 = a.amplitudes.iter().zip(&b.amplitudes).map(|(x, y)| x.conj() * y).sum();
    Ok(ov.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_symmetric() {
        let s = optimal_state_1d(GaussianSpec1D::symmetric(3.0).unwrap(), 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes[0].re - h).abs() < 1e-15 && (s.amplitudes[1].re - h).abs() < 1e-15);
    }

    #[test]
    fn mismatched_fidelity_is_error() {
        let a = StateVectorDense::from_real(vec![1.0, 0.0]).unwrap();
        let b = StateVectorDense::from_real(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(fidelity(&a, &b).is_err());
    }
}
