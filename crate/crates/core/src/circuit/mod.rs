//! Gate-list circuits over named registers, CNOT accounting, a sparse
//! statevector simulator and a plain-text interchange format.

mod export;
mod gate;
mod sim;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub use export::{parse_text, to_text};
pub use gate::{Gate, Qubit};
pub use sim::{simulate, simulate_basis, simulate_observed, SparseState, DEFAULT_PRUNE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    State,
    Angle,
    Iterate,
    Extension,
    Fraction,
    Carry,
    Label,
    /// Borrowed zero qubits for constants, operand copies and sign copies;
    /// always returned to `|0>` by the same sub-circuit that used them.
    Scratch,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Role::State => "state",
            Role::Angle => "angle",
            Role::Iterate => "iterate",
            Role::Extension => "extension",
            Role::Fraction => "fraction",
            Role::Carry => "carry",
            Role::Label => "label",
            Role::Scratch => "scratch",
        };
        f.write_str(s)
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "state" => Role::State,
            "angle" => Role::Angle,
            "iterate" => Role::Iterate,
            "extension" => Role::Extension,
            "fraction" => Role::Fraction,
            "carry" => Role::Carry,
            "label" => Role::Label,
            "scratch" => Role::Scratch,
            other => return Err(Error::Domain(format!("unknown register role {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Register {
    pub name: String,
    pub offset: usize,
    pub width: usize,
    pub role: Role,
}

impl Register {
    pub fn qubits(&self) -> Vec<Qubit> {
        (self.offset..self.offset + self.width).collect()
    }

    pub fn qubit(&self, i: usize) -> Qubit {
        assert!(i < self.width, "bit {i} outside register {}", self.name);
        self.offset + i
    }
}

/// Registers laid out back to back; the total width is the qubit count.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RegisterMap {
    registers: Vec<Register>,
}

impl RegisterMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, width: usize, role: Role) -> Result<Register> {
        if self.get(name).is_some() {
            return Err(Error::Overlap(format!("register {name} declared twice")));
        }
        let reg = Register { name: name.to_string(), offset: self.total(), width, role };
        self.registers.push(reg.clone());
        Ok(reg)
    }

    /// Register at an explicit offset, for parsed circuits.
    fn insert(&mut self, reg: Register) -> Result<()> {
        let clash = self
            .registers
            .iter()
            .any(|r| r.name == reg.name || (reg.offset < r.offset + r.width && r.offset < reg.offset + reg.width));
        if clash {
            return Err(Error::Overlap(format!("register {} overlaps an existing one", reg.name)));
        }
        self.registers.push(reg);
        self.registers.sort_by_key(|r| r.offset);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total(&self) -> usize {
        self.registers.iter().map(|r| r.offset + r.width).max().unwrap_or(0)
    }

    pub fn width_with_role(&self, role: Role) -> usize {
        self.registers.iter().filter(|r| r.role == role).map(|r| r.width).sum()
    }

    pub fn role_of(&self, q: Qubit) -> Option<Role> {
        self.registers.iter().find(|r| q >= r.offset && q < r.offset + r.width).map(|r| r.role)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub cnot_count: u64,
    /// Qubits outside `State` and `Scratch` registers.
    pub ancilla_count: usize,
    pub scratch_count: usize,
    pub total_qubits: usize,
    /// Longest serial CNOT chain after expanding every gate by the table.
    pub depth: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Circuit {
    pub registers: RegisterMap,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(registers: RegisterMap) -> Self {
        Circuit { registers, gates: Vec::new() }
    }

    /// Same registers, no gates.
    pub fn empty_like(&self) -> Self {
        Circuit::new(self.registers.clone())
    }

    pub fn qubit_count(&self) -> usize {
        self.registers.total()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Builders compute their own indices; a bad one is a bug, not input.
    pub fn push(&mut self, gate: Gate) {
        if let Err(e) = gate.validate(self.qubit_count()) {
            panic!("invalid gate emitted: {e}");
        }
        self.gates.push(gate);
    }

    pub fn try_push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.qubit_count())?;
        self.gates.push(gate);
        Ok(())
    }

    /// Append gates acting on the same qubit space.
    pub fn append(&mut self, other: &Circuit) {
        assert!(other.qubit_count() <= self.qubit_count(), "appended circuit is wider");
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn append_gates(&mut self, gates: impl IntoIterator<Item = Gate>) {
        for g in gates {
            self.push(g);
        }
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { registers: self.registers.clone(), gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    pub fn is_permutation(&self) -> bool {
        self.gates.iter().all(Gate::is_permutation)
    }

    pub fn cnot_count(&self) -> ResourceReport {
        let mut depth = vec![0u64; self.qubit_count()];
        let mut cnots = 0;
        for g in &self.gates {
            let c = g.cnot_cost();
            cnots += c;
            if c > 0 {
                let qs = g.qubits();
                let d = qs.iter().map(|&q| depth[q]).max().unwrap_or(0) + c;
                qs.iter().for_each(|&q| depth[q] = d);
            }
        }
        let scratch = self.registers.width_with_role(Role::Scratch);
        let state = self.registers.width_with_role(Role::State);
        ResourceReport {
            cnot_count: cnots,
            ancilla_count: self.qubit_count() - state - scratch,
            scratch_count: scratch,
            total_qubits: self.qubit_count(),
            depth: depth.into_iter().max().unwrap_or(0),
        }
    }

    pub fn cnots(&self) -> u64 {
        self.gates.iter().map(Gate::cnot_cost).sum()
    }

    /// Drop adjacent identical X-type gates, repeatedly, so that nested
    /// compute/uncompute seams collapse too.
    pub fn cancel_inverse_pairs(&mut self) {
        let mut out: Vec<Gate> = Vec::with_capacity(self.gates.len());
        for g in self.gates.drain(..) {
            if g.is_permutation() && out.last() == Some(&g) {
                out.pop();
            } else {
                out.push(g);
            }
        }
        self.gates = out;
    }
}

/// Run `b` after `a`. Each `(b_register, a_register)` pair identifies a
/// register of `b` with an equally wide register of `a`; unbound registers of
/// `b` become fresh registers of the result.
pub fn compose(a: &Circuit, b: &Circuit, binding: &[(&str, &str)]) -> Result<Circuit> {
    let mut registers = a.registers.clone();
    let mut map: HashMap<Qubit, Qubit> = HashMap::new();
    let mut used_targets: Vec<&str> = Vec::new();
    for reg in b.registers.registers() {
        match binding.iter().find(|(bn, _)| *bn == reg.name) {
            Some((_, an)) => {
                let target = a
                    .registers
                    .get(an)
                    .ok_or_else(|| Error::WidthMismatch(format!("no register {an} to bind {} to", reg.name)))?;
                if target.width != reg.width {
                    return Err(Error::WidthMismatch(format!(
                        "{} has width {} but {} has width {}",
                        reg.name, reg.width, an, target.width
                    )));
                }
                if used_targets.contains(an) {
                    return Err(Error::Overlap(format!("register {an} bound twice")));
                }
                used_targets.push(an);
                for i in 0..reg.width {
                    map.insert(reg.offset + i, target.offset + i);
                }
            }
            None => {
                let mut name = reg.name.clone();
                while registers.get(&name).is_some() {
                    name.push('\'');
                }
                let fresh = registers.add(&name, reg.width, reg.role)?;
                for i in 0..reg.width {
                    map.insert(reg.offset + i, fresh.offset + i);
                }
            }
        }
    }
    if let Some((bn, _)) = binding.iter().find(|(bn, _)| b.registers.get(bn).is_none()) {
        return Err(Error::WidthMismatch(format!("circuit has no register {bn}")));
    }
    let mut out = Circuit::new(registers);
    out.gates = a.gates.clone();
    for g in &b.gates {
        out.try_push(g.relabel(|q| map[&q]))?;
    }
    Ok(out)
}
