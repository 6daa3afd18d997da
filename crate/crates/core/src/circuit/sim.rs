use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use num_complex::Complex64;

use super::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::reference_math::StateVectorDense;

pub const DEFAULT_PRUNE: f64 = 1e-14;

// A fixed hasher keeps iteration order, and so floating-point summation
// order, identical between runs.
type AmpMap = HashMap<u128, Complex64, BuildHasherDefault<DefaultHasher>>;

/// Basis key -> amplitude; bit `q` of the key is qubit `q`.
#[derive(Clone, Debug)]
pub struct SparseState {
    amps: AmpMap,
    qubits: usize,
    prune: f64,
}

impl SparseState {
    pub fn basis(qubits: usize, key: u128) -> Result<Self> {
        if qubits > 128 || (qubits < 128 && key >> qubits != 0) {
            return Err(Error::Domain(format!("basis key {key} does not fit {qubits} qubits")));
        }
        let mut amps = AmpMap::default();
        amps.insert(key, Complex64::new(1.0, 0.0));
        Ok(SparseState { amps, qubits, prune: DEFAULT_PRUNE })
    }

    pub fn zero(qubits: usize) -> Result<Self> {
        Self::basis(qubits, 0)
    }

    /// Embed a dense state on the low qubits of a wider register.
    pub fn from_dense(state: &StateVectorDense, qubits: usize) -> Result<Self> {
        if state.qubit_count > qubits {
            return Err(Error::QubitMismatch { expected: qubits, got: state.qubit_count });
        }
        let amps = state
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() >= DEFAULT_PRUNE)
            .map(|(i, a)| (i as u128, *a))
            .collect();
        Ok(SparseState { amps, qubits, prune: DEFAULT_PRUNE })
    }

    pub fn with_prune(mut self, prune: f64) -> Self {
        self.prune = prune;
        self
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitude(&self, key: u128) -> Complex64 {
        self.amps.get(&key).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u128, Complex64)> + '_ {
        self.amps.iter().map(|(k, a)| (*k, *a))
    }

    /// Entries sorted by key.
    pub fn sorted(&self) -> Vec<(u128, Complex64)> {
        let mut v: Vec<_> = self.iter().collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sorted().iter().map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Dense view of the lowest `low` qubits, plus the weight carried by keys
    /// with any higher qubit set.
    pub fn project_low(&self, low: usize) -> Result<(StateVectorDense, f64)> {
        if low > 24 {
            return Err(Error::ResourceCap { needed: low, cap: 24 });
        }
        let mut dense = vec![Complex64::default(); 1usize << low];
        let mut outside = 0.0;
        for (k, a) in self.sorted() {
            if low >= 128 || k >> low == 0 {
                dense[k as usize] = a;
            } else {
                outside += a.norm_sqr();
            }
        }
        Ok((StateVectorDense { amplitudes: dense, qubit_count: low }, outside))
    }

    pub fn apply(&mut self, gate: &Gate) {
        if matches!(gate, Gate::Barrier { .. }) {
            return;
        }
        if gate.is_permutation() {
            let old = std::mem::take(&mut self.amps);
            self.amps = old.into_iter().map(|(k, a)| (gate.apply_basis(k).expect("permutation"), a)).collect();
            return;
        }
        let (target, control, m) = match gate {
            Gate::H { target } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                (*target, None, [h, h, h, -h])
            }
            Gate::Ry { angle, target } => (*target, None, ry_matrix(*angle)),
            Gate::Cry { angle, control, target } => (*target, Some(*control), ry_matrix(*angle)),
            _ => unreachable!("all permutation gates handled above"),
        };
        let bit = 1u128 << target;
        let mut keys: Vec<u128> =
            self.amps.keys().filter(|&&k| control.is_none_or(|c| (k >> c) & 1 == 1)).map(|&k| k & !bit).collect();
        keys.sort_unstable();
        keys.dedup();
        for k0 in keys {
            let k1 = k0 | bit;
            let a0 = self.amps.remove(&k0).unwrap_or_default();
            let a1 = self.amps.remove(&k1).unwrap_or_default();
            let n0 = a0 * m[0] + a1 * m[1];
            let n1 = a0 * m[2] + a1 * m[3];
            if n0.norm() >= self.prune {
                self.amps.insert(k0, n0);
            }
            if n1.norm() >= self.prune {
                self.amps.insert(k1, n1);
            }
        }
    }
}

fn ry_matrix(theta: f64) -> [f64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    [c, -s, s, c]
}

pub fn simulate(circuit: &Circuit, initial: &SparseState) -> Result<SparseState> {
    simulate_observed(circuit, initial, |_, _| {})
}

/// Simulate and call `observe(gate_index, state)` after every gate.
pub fn simulate_observed(
    circuit: &Circuit,
    initial: &SparseState,
    mut observe: impl FnMut(usize, &SparseState),
) -> Result<SparseState> {
    if initial.qubits != circuit.qubit_count() {
        return Err(Error::QubitMismatch { expected: circuit.qubit_count(), got: initial.qubits });
    }
    let mut s = initial.clone();
    for (i, g) in circuit.gates().iter().enumerate() {
        s.apply(g);
        observe(i, &s);
    }
    Ok(s)
}

/// Propagate a single basis key through a permutation-only circuit.
pub fn simulate_basis(circuit: &Circuit, key: u128) -> Result<u128> {
    circuit.gates().iter().try_fold(key, |k, g| {
        g.apply_basis(k).ok_or_else(|| Error::Unsupported(format!("{g:?} is not a basis permutation")))
    })
}
