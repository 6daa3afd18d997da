use std::f64::consts::PI;

use crate::error::{domain, Result};

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        domain(format!("sigma must be positive and finite, got {sigma}"))
    }
}

/// `f(mu, sigma) = sum_n exp(-(n - mu)^2 / (2 sigma^2))`.
pub fn theta_norm(mu: f64, sigma: f64) -> Result<f64> {
    log_theta_norm(mu, sigma).map(f64::exp)
}

/// Natural log of [`theta_norm`]. Narrow Gaussians are summed directly in the
/// log domain (a handful of terms, no cancellation); wide ones use the dual
/// theta series, whose corrections are `exp(-2 pi^2 p^2 sigma^2)`.
pub fn log_theta_norm(mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !mu.is_finite() {
        return domain("mu must be finite");
    }
    if sigma < 0.5 {
        Ok(log_direct_sum(mu, sigma))
    } else {
        Ok(theta_series(mu, sigma)?.ln())
    }
}

fn log_direct_sum(mu: f64, sigma: f64) -> f64 {
    let lo = (mu - 40.0 * sigma - 2.0).floor() as i64;
    let hi = (mu + 40.0 * sigma + 2.0).ceil() as i64;
    let inv = 1.0 / (2.0 * sigma * sigma);
    // Largest term is at the lattice point nearest mu.
    let d0 = mu - mu.round();
    let min_e = d0 * d0 * inv;
    let sum: f64 = (lo..=hi)
        .map(|n| {
            let d = n as f64 - mu;
            (min_e - d * d * inv).exp()
        })
        .sum();
    sum.ln() - min_e
}

/// The dual representation `sqrt(2 pi sigma^2) [1 + 2 sum_p cos(2 pi p mu) q^(p^2)]`,
/// `q = exp(-2 pi^2 sigma^2)`, truncated once a term drops below 1e-16.
pub fn theta_series(mu: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let s2 = sigma * sigma;
    let mut acc = 1.0;
    for p in 1..10_000 {
        let pf = p as f64;
        let weight = (-2.0 * PI * PI * pf * pf * s2).exp();
        if weight < 1e-16 {
            break;
        }
        acc += 2.0 * (2.0 * PI * pf * mu).cos() * weight;
    }
    Ok((2.0 * PI * s2).sqrt() * acc)
}

/// `xi^2(n) = f((mu - n)/2^k, sigma/2^k) / f(mu, sigma)`.
pub fn xi_sq(mu: f64, sigma: f64, k: u32, n: u64) -> Result<f64> {
    if k >= 64 || n >= (1u64 << k) {
        return domain(format!("basis index {n} out of range for {k} qubits"));
    }
    let scale = (k as f64).exp2();
    let num = log_theta_norm((mu - n as f64) / scale, sigma / scale)?;
    Ok((num - log_theta_norm(mu, sigma)?).exp())
}

/// The single-qubit split at one recursion step: `|0>` gets `c`, `|1>` gets `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    pub c: f64,
    pub s: f64,
    pub alpha: f64,
}

impl Rotation {
    /// `alpha` as a fraction of `pi/2`, in `[0, 1]`.
    pub fn alpha_bar(&self) -> f64 {
        2.0 * self.alpha / PI
    }
}

pub fn rotation(mu: f64, sigma: f64) -> Result<Rotation> {
    let lf = log_theta_norm(mu, sigma)?;
    let lc = log_theta_norm(mu / 2.0, sigma / 2.0)? - lf;
    let ls = log_theta_norm((mu - 1.0) / 2.0, sigma / 2.0)? - lf;
    // c^2 + s^2 = 1 analytically; renormalise away rounding.
    let (c, s) = ((0.5 * lc).exp(), (0.5 * ls).exp());
    let r = c.hypot(s);
    let (c, s) = (c / r, s / r);
    Ok(Rotation { c, s, alpha: s.atan2(c) })
}

pub fn alpha(mu: f64, sigma: f64) -> Result<f64> {
    rotation(mu, sigma).map(|r| r.alpha)
}

pub fn alpha_bar(mu: f64, sigma: f64) -> Result<f64> {
    rotation(mu, sigma).map(|r| r.alpha_bar())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_gaussian_is_continuum_integral() {
        let f = theta_norm(0.0, 10.0).unwrap();
        assert!((f - (200.0 * PI).sqrt()).abs() / f < 1e-14);
    }

    #[test]
    fn regimes_agree_at_crossover() {
        for &mu in &[-0.5, -0.2, 0.0, 0.37] {
            let direct = log_direct_sum(mu, 0.5).exp();
            let series = theta_series(mu, 0.5).unwrap();
            assert!((direct - series).abs() / direct < 1e-13, "{mu}");
        }
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(theta_norm(0.0, 0.0).is_err());
        assert!(theta_norm(0.0, -1.0).is_err());
        assert!(xi_sq(0.0, 1.0, 2, 4).is_err());
    }
}
