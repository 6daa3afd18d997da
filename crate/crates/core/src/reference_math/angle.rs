use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::theta::alpha_bar;
use crate::error::{domain, Result};

/// Resolution of the dense `mu` grid on `(-1, 0)` used to certify plans.
pub const GRID_POINTS: usize = 10_000;

const MAX_HI_DEGREE: usize = 16;
const MAX_PIECEWISE_DEGREE: usize = 12;
const MID_STEPS: usize = 64;
const FIT_NODES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Hi,
    Intermediate,
    SquareWave,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub lo: f64,
    pub hi: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { lo: 0.0375, hi: 0.6 }
    }
}

impl Thresholds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return domain(format!("thresholds need 0 < lo < hi, got ({lo}, {hi})"));
        }
        Ok(Thresholds { lo, hi })
    }
}

/// How `alpha_bar(mu_j, sigma_j)` is approximated at one recursion level.
///
/// With `mu' = mu + 1/2`:
/// * `Hi`: `1/2 + sum_n a_n mu'^(2n+1)` everywhere.
/// * `Intermediate`: the same odd polynomial for `|mu'| <= mu_mid`, the even
///   polynomial `sum_n a'_n mu^(2n)` above, and `1 - sum_n a'_n (mu+1)^(2n)` below.
/// * `SquareWave`: the Heaviside limit `[mu < -1/2]`.
/// * `Constant`: `1/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleApproxPlan {
    pub regime: Regime,
    pub degree_d: usize,
    pub degree_dp: usize,
    pub coeffs_a: Vec<f64>,
    pub coeffs_ap: Vec<f64>,
    pub mu_mid: f64,
    pub sigma_j: f64,
    pub b: u32,
    /// Worst error on the certification grid. For `SquareWave` the grid points
    /// inside the step's own transition layer, `|mu'| < sigma_j^2 (b+1) ln 2`,
    /// are excluded: no polynomial-free rule can resolve them.
    pub max_error: f64,
}

impl AngleApproxPlan {
    pub fn budget(b: u32) -> f64 {
        (-(b as f64 + 1.0)).exp2()
    }

    pub fn within_budget(&self) -> bool {
        self.max_error <= Self::budget(self.b)
    }

    /// Number of Horner iterates the circuit needs.
    pub fn iterations(&self) -> usize {
        match self.regime {
            Regime::Hi => self.degree_d,
            Regime::Intermediate => self.degree_d.max(self.degree_dp),
            _ => 0,
        }
    }

    pub fn eval(&self, mu: f64) -> f64 {
        let mp = mu + 0.5;
        match self.regime {
            Regime::Constant => 0.5,
            Regime::SquareWave => {
                if mu < -0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Regime::Hi => 0.5 + odd_poly(&self.coeffs_a, mp),
            Regime::Intermediate => {
                if mp.abs() <= self.mu_mid {
                    0.5 + odd_poly(&self.coeffs_a, mp)
                } else if mp > 0.0 {
                    even_poly(&self.coeffs_ap, mu)
                } else {
                    1.0 - even_poly(&self.coeffs_ap, mu + 1.0)
                }
            }
        }
    }

    /// Transition half-width of the Heaviside step at this precision.
    pub fn step_window(sigma_j: f64, b: u32) -> f64 {
        sigma_j * sigma_j * (b as f64 + 1.0) * std::f64::consts::LN_2
    }
}

fn even_poly(c: &[f64], x: f64) -> f64 {
    let x2 = x * x;
    c.iter().rev().fold(0.0, |acc, &a| acc * x2 + a)
}

fn odd_poly(c: &[f64], x: f64) -> f64 {
    x * even_poly(c, x)
}

pub fn grid_mu(i: usize) -> f64 {
    -1.0 + (i as f64 + 0.5) / GRID_POINTS as f64
}

/// Grid samples with `mu' > 0`; the other half follows by the
/// `abar(-1 - mu) = 1 - abar(mu)` symmetry, which the grid respects.
struct HalfGrid {
    mu_prime: Vec<f64>,
    abar: Vec<f64>,
}

impl HalfGrid {
    fn new(sigma_j: f64) -> Result<Self> {
        let idx = GRID_POINTS / 2..GRID_POINTS;
        let mu_prime: Vec<f64> = idx.map(|i| grid_mu(i) + 0.5).collect();
        let abar = mu_prime.iter().map(|&mp| alpha_bar(mp - 0.5, sigma_j)).collect::<Result<Vec<_>>>()?;
        Ok(HalfGrid { mu_prime, abar })
    }

    fn max_dev_from_half(&self) -> f64 {
        self.abar.iter().map(|a| (a - 0.5).abs()).fold(0.0, f64::max)
    }

    fn mid_error(&self, coeffs: &[f64], mu_mid: f64) -> f64 {
        self.mu_prime
            .iter()
            .zip(&self.abar)
            .filter(|(mp, _)| **mp <= mu_mid)
            .map(|(&mp, &a)| (0.5 + odd_poly(coeffs, mp) - a).abs())
            .fold(0.0, f64::max)
    }

    fn outer_error(&self, coeffs: &[f64], mu_mid: f64) -> f64 {
        self.mu_prime
            .iter()
            .zip(&self.abar)
            .filter(|(mp, _)| **mp > mu_mid)
            .map(|(&mp, &a)| (even_poly(coeffs, mp - 0.5) - a).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy)]
enum Parity {
    Odd,
    Even,
}

/// Least-squares fit of `sum_n c_n x^(2n [+1])` to `target` on Chebyshev
/// nodes of `[0, range]`, solved in the scaled variable `x / range` and
/// converted back to natural coefficients. Also returns the l1 norm of the
/// scaled coefficients, which bounds every Horner partial sum.
fn fit_parity(
    target: impl Fn(f64) -> Result<f64>,
    range: f64,
    degree: usize,
    parity: Parity,
) -> Result<(Vec<f64>, f64)> {
    let nodes: Vec<f64> = (0..FIT_NODES)
        .map(|i| {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / FIT_NODES as f64;
            0.5 * (1.0 - th.cos())
        })
        .collect();
    let power = |n: usize| match parity {
        Parity::Odd => 2 * n as i32 + 1,
        Parity::Even => 2 * n as i32,
    };
    let a = DMatrix::from_fn(FIT_NODES, degree + 1, |r, c| nodes[r].powi(power(c)));
    let rhs = nodes.iter().map(|&t| target(t * range)).collect::<Result<Vec<_>>>()?;
    let rhs = DVector::from_vec(rhs);
    let svd = a.svd(true, true);
    let sol = svd.solve(&rhs, 1e-14).map_err(|e| crate::Error::Domain(format!("polynomial fit failed: {e}")))?;
    let natural = (0..=degree).map(|n| sol[n] / range.powi(power(n))).collect();
    Ok((natural, sol.iter().map(|c| c.abs()).sum()))
}

fn fit_mid(sigma_j: f64, mu_mid: f64, degree: usize) -> Result<(Vec<f64>, f64)> {
    fit_parity(|mp| Ok(alpha_bar(mp - 0.5, sigma_j)? - 0.5), mu_mid, degree, Parity::Odd)
}

fn fit_outer(sigma_j: f64, mu_mid: f64, degree: usize) -> Result<(Vec<f64>, f64)> {
    fit_parity(|x| alpha_bar(-x, sigma_j), 0.5 - mu_mid, degree, Parity::Even)
}

/// Choose the cheapest approximation of `alpha_bar(., sigma_j)` that stays
/// within `2^-(b+1)` on the certification grid.
pub fn fit_angle_plan(sigma_j: f64, b: u32, thresholds: Thresholds) -> Result<AngleApproxPlan> {
    if b == 0 {
        return domain("angle register needs at least one qubit");
    }
    if !sigma_j.is_finite() || sigma_j <= 0.0 {
        return domain(format!("sigma_j must be positive, got {sigma_j}"));
    }
    Thresholds::new(thresholds.lo, thresholds.hi)?;
    let budget = AngleApproxPlan::budget(b);
    let base = AngleApproxPlan {
        regime: Regime::Constant,
        degree_d: 0,
        degree_dp: 0,
        coeffs_a: Vec::new(),
        coeffs_ap: Vec::new(),
        mu_mid: 0.5,
        sigma_j,
        b,
        max_error: 0.0,
    };

    if sigma_j <= thresholds.lo {
        let window = AngleApproxPlan::step_window(sigma_j, b);
        let mut worst = 0.0f64;
        for i in GRID_POINTS / 2..GRID_POINTS {
            let mp = grid_mu(i) + 0.5;
            if mp >= window {
                worst = worst.max(alpha_bar(mp - 0.5, sigma_j)?.abs());
            }
        }
        return Ok(AngleApproxPlan { regime: Regime::SquareWave, max_error: worst, ..base });
    }

    let grid = HalfGrid::new(sigma_j)?;
    let dev = grid.max_dev_from_half();
    if dev < budget {
        return Ok(AngleApproxPlan { max_error: dev, ..base });
    }

    if sigma_j >= thresholds.hi {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for d in 1..=MAX_HI_DEGREE {
            let (coeffs, _) = fit_mid(sigma_j, 0.5, d)?;
            let err = grid.mid_error(&coeffs, 0.5);
            let better = best.as_ref().is_none_or(|(_, e)| err < *e);
            if better {
                best = Some((coeffs, err));
            }
            if err <= budget {
                break;
            }
        }
        let (coeffs, err) = best.expect("at least one degree tried");
        return Ok(AngleApproxPlan {
            regime: Regime::Hi,
            degree_d: coeffs.len() - 1,
            coeffs_a: coeffs,
            max_error: err,
            ..base
        });
    }

    fit_piecewise(&grid, sigma_j, budget, base)
}

fn fit_piecewise(grid: &HalfGrid, sigma_j: f64, budget: f64, base: AngleApproxPlan) -> Result<AngleApproxPlan> {
    // (max error, D, mu_mid) of the best split seen so far. Among splits
    // that meet the budget the best conditioned one wins, since the iterate
    // registers have only b + 1 bits.
    let mut best: Option<(f64, usize, f64)> = None;
    for big_d in 1..=MAX_PIECEWISE_DEGREE {
        let mut best_here: Option<(f64, f64)> = None;
        let mut tamest: Option<(f64, f64, f64)> = None;
        for step in 1..=MID_STEPS {
            let mu_mid = step as f64 / 128.0;
            let (mid, l1_mid) = fit_mid(sigma_j, mu_mid, big_d)?;
            let (outer, l1_out) = fit_outer(sigma_j, mu_mid, big_d)?;
            let e = grid.mid_error(&mid, mu_mid).max(grid.outer_error(&outer, mu_mid));
            if best_here.is_none_or(|(be, _)| e < be) {
                best_here = Some((e, mu_mid));
            }
            let l1 = l1_mid.max(l1_out);
            if e <= budget && tamest.is_none_or(|(_, t, _)| l1 < t) {
                tamest = Some((e, l1, mu_mid));
            }
        }
        if let Some((e, _, mu_mid)) = tamest {
            best_here = Some((e, mu_mid));
        }
        let (e, mu_mid) = best_here.expect("grid search is non-empty");
        if best.is_none_or(|(be, _, _)| e < be) {
            best = Some((e, big_d, mu_mid));
        }
        if e <= budget {
            break;
        }
    }
    let (_, big_d, mu_mid) = best.expect("at least one degree tried");

    // Trim each branch to its own minimal degree at the chosen split.
    let pick = |fit: &dyn Fn(usize) -> Result<(Vec<f64>, f64)>,
                err: &dyn Fn(&[f64]) -> f64,
                min_deg: usize|
     -> Result<(Vec<f64>, f64)> {
        let (full, _) = fit(big_d)?;
        let full_err = err(&full);
        for d in min_deg..big_d {
            let (c, _) = fit(d)?;
            let e = err(&c);
            if e <= budget || e <= full_err {
                return Ok((c, e));
            }
        }
        Ok((full, full_err))
    };
    let (mid, e_mid) = pick(&|d| fit_mid(sigma_j, mu_mid, d), &|c| grid.mid_error(c, mu_mid), 0)?;
    let (outer, e_out) = pick(&|d| fit_outer(sigma_j, mu_mid, d), &|c| grid.outer_error(c, mu_mid), 0)?;
    Ok(AngleApproxPlan {
        regime: Regime::Intermediate,
        degree_d: mid.len() - 1,
        degree_dp: outer.len() - 1,
        coeffs_a: mid,
        coeffs_ap: outer,
        mu_mid,
        max_error: e_mid.max(e_out),
        ..base
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_sigma_is_square_wave() {
        let p = fit_angle_plan(0.01, 6, Thresholds::default()).unwrap();
        assert_eq!(p.regime, Regime::SquareWave);
        assert!(p.coeffs_a.is_empty() && p.coeffs_ap.is_empty());
    }

    #[test]
    fn wide_sigma_is_constant() {
        let p = fit_angle_plan(5.0, 4, Thresholds::default()).unwrap();
        assert_eq!(p.regime, Regime::Constant);
        assert_eq!(p.eval(-0.3), 0.5);
    }

    #[test]
    fn bad_thresholds_rejected() {
        assert!(fit_angle_plan(0.3, 4, Thresholds { lo: 0.6, hi: 0.1 }).is_err());
        assert!(fit_angle_plan(0.3, 0, Thresholds::default()).is_err());
    }
}
