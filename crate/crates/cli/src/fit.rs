//! Least-squares fits of the shear fidelity laws
//! `F ~ exp(2Nb/s^2) (1 - erf(a/s))^(2N)` and `F ~ exp(-a~ N/s)`, in `ln F`.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FidelityFit {
    pub a: f64,
    pub b: f64,
    pub a_tilde: f64,
    pub points: usize,
}

/// One sample: dimension, characteristic width, fidelity.
#[derive(Clone, Copy, Debug)]
pub struct Sample {
    pub n: f64,
    pub sigma: f64,
    pub fidelity: f64,
}

const A_MAX: f64 = 4.0;
const A_STEPS: usize = 4000;

/// `None` with fewer than two usable samples.
pub fn fit(samples: &[Sample]) -> Option<FidelityFit> {
    let pts: Vec<&Sample> = samples.iter().filter(|s| s.fidelity > 0.0 && s.fidelity <= 1.0).collect();
    if pts.len() < 2 {
        return None;
    }
    let ln_f: Vec<f64> = pts.iter().map(|s| s.fidelity.ln()).collect();

    let x: Vec<f64> = pts.iter().map(|s| s.n / s.sigma).collect();
    let a_tilde = -x.iter().zip(&ln_f).map(|(x, y)| x * y).sum::<f64>() / x.iter().map(|x| x * x).sum::<f64>();

    // For fixed a the model is linear in b.
    let xb: Vec<f64> = pts.iter().map(|s| 2.0 * s.n / (s.sigma * s.sigma)).collect();
    let sxx: f64 = xb.iter().map(|x| x * x).sum();
    let solve = |a: f64| {
        let z: Vec<f64> =
            pts.iter().zip(&ln_f).map(|(s, y)| y - 2.0 * s.n * (1.0 - libm::erf(a / s.sigma)).ln()).collect();
        let b = xb.iter().zip(&z).map(|(x, z)| x * z).sum::<f64>() / sxx;
        let sse: f64 = xb.iter().zip(&z).map(|(x, z)| (z - b * x).powi(2)).sum();
        (sse, b)
    };
    let (mut best_a, mut best) = (0.0, solve(0.0));
    for i in 1..=A_STEPS {
        let a = A_MAX * i as f64 / A_STEPS as f64;
        let cand = solve(a);
        if cand.0 < best.0 {
            best_a = a;
            best = cand;
        }
    }
    Some(FidelityFit { a: best_a, b: best.1, a_tilde, points: pts.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_synthetic_parameters() {
        let (a, b) = (0.3, 0.2);
        let samples: Vec<Sample> = [(2.0, 2.0), (3.0, 3.0), (4.0, 5.0), (2.0, 8.0)]
            .iter()
            .map(|&(n, s): &(f64, f64)| Sample {
                n,
                sigma: s,
                fidelity: (2.0 * n * b / (s * s)).exp() * (1.0 - libm::erf(a / s)).powf(2.0 * n),
            })
            .collect();
        let f = fit(&samples).unwrap();
        assert!((f.a - a).abs() < 2e-3, "{f:?}");
        assert!((f.b - b).abs() < 1e-2, "{f:?}");
    }

    #[test]
    fn needs_two_points() {
        assert!(fit(&[Sample { n: 2.0, sigma: 1.0, fidelity: 0.9 }]).is_none());
    }
}
