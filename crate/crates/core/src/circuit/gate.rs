use serde::Serialize;

use crate::error::{Error, Result};

pub type Qubit = usize;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    X { target: Qubit },
    Cnot { control: Qubit, target: Qubit },
    Toffoli { controls: [Qubit; 2], target: Qubit },
    Mcx { controls: Vec<Qubit>, target: Qubit },
    H { target: Qubit },
    Ry { angle: f64, target: Qubit },
    Cry { angle: f64, control: Qubit, target: Qubit },
    Barrier { label: String },
}

impl Gate {
    pub fn x(target: Qubit) -> Gate {
        Gate::X { target }
    }

    pub fn cnot(control: Qubit, target: Qubit) -> Gate {
        Gate::Cnot { control, target }
    }

    pub fn toffoli(c0: Qubit, c1: Qubit, target: Qubit) -> Gate {
        Gate::Toffoli { controls: [c0, c1], target }
    }

    /// Multi-controlled X, collapsed to the cheapest equivalent gate.
    pub fn mcx(controls: &[Qubit], target: Qubit) -> Gate {
        match controls {
            [] => Gate::X { target },
            [c] => Gate::Cnot { control: *c, target },
            [a, b] => Gate::Toffoli { controls: [*a, *b], target },
            _ => Gate::Mcx { controls: controls.to_vec(), target },
        }
    }

    pub fn qubits(&self) -> Vec<Qubit> {
        match self {
            Gate::X { target } | Gate::H { target } | Gate::Ry { target, .. } => vec![*target],
            Gate::Cnot { control, target } | Gate::Cry { control, target, .. } => vec![*control, *target],
            Gate::Toffoli { controls, target } => vec![controls[0], controls[1], *target],
            Gate::Mcx { controls, target } => controls.iter().copied().chain([*target]).collect(),
            Gate::Barrier { .. } => Vec::new(),
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::Ry { angle, target } => Gate::Ry { angle: -angle, target: *target },
            Gate::Cry { angle, control, target } => Gate::Cry { angle: -angle, control: *control, target: *target },
            g => g.clone(),
        }
    }

    /// CNOT cost under the fixed decomposition table: Toffoli 6, controlled
    /// rotation 2, `m >= 3` controls `6(2m - 3)` with one borrowed qubit.
    pub fn cnot_cost(&self) -> u64 {
        match self {
            Gate::Cnot { .. } => 1,
            Gate::Toffoli { .. } => 6,
            Gate::Cry { .. } => 2,
            Gate::Mcx { controls, .. } => match controls.len() {
                0 => 0,
                1 => 1,
                2 => 6,
                m => 6 * (2 * m as u64 - 3),
            },
            _ => 0,
        }
    }

    /// Basis-state permutation (classical reversible) gates.
    pub fn is_permutation(&self) -> bool {
        matches!(
            self,
            Gate::X { .. } | Gate::Cnot { .. } | Gate::Toffoli { .. } | Gate::Mcx { .. } | Gate::Barrier { .. }
        )
    }

    pub fn relabel(&self, f: impl Fn(Qubit) -> Qubit) -> Gate {
        match self {
            Gate::X { target } => Gate::X { target: f(*target) },
            Gate::H { target } => Gate::H { target: f(*target) },
            Gate::Ry { angle, target } => Gate::Ry { angle: *angle, target: f(*target) },
            Gate::Cnot { control, target } => Gate::Cnot { control: f(*control), target: f(*target) },
            Gate::Cry { angle, control, target } => {
                Gate::Cry { angle: *angle, control: f(*control), target: f(*target) }
            }
            Gate::Toffoli { controls, target } => {
                Gate::Toffoli { controls: [f(controls[0]), f(controls[1])], target: f(*target) }
            }
            Gate::Mcx { controls, target } => {
                Gate::Mcx { controls: controls.iter().map(|&c| f(c)).collect(), target: f(*target) }
            }
            Gate::Barrier { label } => Gate::Barrier { label: label.clone() },
        }
    }

    pub fn validate(&self, qubit_count: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= qubit_count) {
            return Err(Error::Domain(format!("qubit {q} out of range in {self:?} ({qubit_count} qubits)")));
        }
        for (i, a) in qs.iter().enumerate() {
            if qs[i + 1..].contains(a) {
                return Err(Error::Overlap(format!("qubit {a} used twice in {self:?}")));
            }
        }
        match self {
            Gate::Ry { angle, .. } | Gate::Cry { angle, .. } if !angle.is_finite() => {
                Err(Error::Domain(format!("non-finite angle in {self:?}")))
            }
            _ => Ok(()),
        }
    }

    /// Classical action on a basis key; `None` for superposing gates.
    pub fn apply_basis(&self, key: u128) -> Option<u128> {
        let bit = |q: Qubit| (key >> q) & 1 == 1;
        match self {
            Gate::X { target } => Some(key ^ (1u128 << target)),
            Gate::Cnot { control, target } => Some(if bit(*control) { key ^ (1u128 << target) } else { key }),
            Gate::Toffoli { controls, target } => {
                Some(if bit(controls[0]) && bit(controls[1]) { key ^ (1u128 << target) } else { key })
            }
            Gate::Mcx { controls, target } => {
                Some(if controls.iter().all(|&c| bit(c)) { key ^ (1u128 << target) } else { key })
            }
            Gate::Barrier { .. } => Some(key),
            _ => None,
        }
    }
}
