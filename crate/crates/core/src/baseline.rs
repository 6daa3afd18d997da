//! Generic real-amplitude state preparation by a tree of uniformly
//! controlled Ry rotations, and the closed-form counts it is compared with.

use std::str::FromStr;

use serde::Serialize;

use crate::circuit::{Circuit, Gate, RegisterMap, Role};
use crate::error::{domain, Error, Result};

/// Normalisation tolerance on input amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Rotations below this are dropped; their CNOTs are still needed.
const ZERO_ANGLE: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineVariant {
    GenericComplex,
    GenericReal,
    SymmetricReal,
}

impl FromStr for BaselineVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic_complex" => Ok(BaselineVariant::GenericComplex),
            "generic_real" => Ok(BaselineVariant::GenericReal),
            "symmetric_real" => Ok(BaselineVariant::SymmetricReal),
            other => domain(format!("unknown baseline variant {other:?}")),
        }
    }
}

pub fn baseline_cnot_formulas(k: u32, variant: BaselineVariant) -> Result<u128> {
    if k == 0 || k > 126 {
        return domain(format!("k must be in 1..=126, got {k}"));
    }
    let k128 = k as u128;
    Ok(match variant {
        BaselineVariant::GenericComplex => (1u128 << (k + 1)) - 2 * k128,
        BaselineVariant::GenericReal => (1u128 << k) - 2,
        BaselineVariant::SymmetricReal => (1u128 << (k - 1)) + k128 + (k == 1) as u128 - 3,
    })
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Gray-code ordered angles for a rotation on `thetas.len() = 2^l` control
/// patterns: `theta(x) = sum_i (-1)^{|x & g(i)|} alpha_i`.
fn gray_angles(thetas: &[f64]) -> Vec<f64> {
    let n = thetas.len();
    (0..n)
        .map(|i| {
            let g = gray(i);
            let s: f64 = thetas
                .iter()
                .enumerate()
                .map(|(x, t)| if (x & g).count_ones().is_multiple_of(2) { *t } else { -*t })
                .sum();
            s / n as f64
        })
        .collect()
}

/// Uniformly controlled Ry on `target` with controls `0..l`, where
/// `thetas[x]` is the angle for control value `x`. `2^l` CNOTs for `l >= 1`.
fn uniformly_controlled_ry(thetas: &[f64], target: usize) -> Vec<Gate> {
    let l = thetas.len().trailing_zeros() as usize;
    if l == 0 {
        return vec![Gate::Ry { angle: thetas[0], target }];
    }
    let alphas = gray_angles(thetas);
    let n = alphas.len();
    let mut gates = Vec::with_capacity(2 * n);
    for (i, &a) in alphas.iter().enumerate() {
        if a.abs() > ZERO_ANGLE {
            gates.push(Gate::Ry { angle: a, target });
        }
        let control = (gray(i) ^ gray((i + 1) % n)).trailing_zeros() as usize;
        gates.push(Gate::cnot(control, target));
    }
    gates
}

/// Circuit taking `|0>^k` to the given real state; qubit `q` is bit `q` of
/// the amplitude index, and qubit 0 is prepared first.
pub fn build_real_state_prep(amplitudes: &[f64], k: u32) -> Result<Circuit> {
    if k == 0 || k > 26 {
        return domain(format!("k must be in 1..=26, got {k}"));
    }
    let size = 1usize << k;
    if amplitudes.len() != size {
        return domain(format!("{} amplitudes for k={k}", amplitudes.len()));
    }
    if amplitudes.iter().any(|a| !a.is_finite()) {
        return domain("amplitudes must be finite");
    }
    let norm: f64 = amplitudes.iter().map(|a| a * a).sum();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return domain(format!("state is not normalised: squared norm {norm}"));
    }
    let mut map = RegisterMap::new();
    map.add("q", k as usize, Role::State)?;
    let mut circuit = Circuit::new(map);
    // weights[l][c]: squared norm of the entries whose low l bits equal c.
    let mut weights = vec![amplitudes.iter().map(|a| a * a).collect::<Vec<f64>>()];
    for l in (0..k as usize).rev() {
        let finer = weights.last().expect("seeded");
        weights.push((0..1usize << l).map(|c| finer[c] + finer[c + (1 << l)]).collect());
    }
    weights.reverse();
    for l in 0..k as usize {
        let half = 1usize << l;
        let thetas: Vec<f64> = (0..half)
            .map(|c| {
                if l + 1 == k as usize {
                    2.0 * amplitudes[c + half].atan2(amplitudes[c])
                } else {
                    2.0 * weights[l + 1][c + half].sqrt().atan2(weights[l + 1][c].sqrt())
                }
            })
            .collect();
        circuit.append_gates(uniformly_controlled_ry(&thetas, l));
    }
    Ok(circuit)
}
