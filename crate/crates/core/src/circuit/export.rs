//! One gate per line, zero-based qubit indices:
//!
//! ```text
//! # qubits 5
//! # register q 0 3 state
//! x 0
//! cx 0 1
//! ccx 0 1 4
//! mcx 0 1 2 3
//! h 2
//! ry 1.5707963267948966 2
//! cry 0.39269908169872414 0 2
//! barrier level 1
//! ```
//!
//! `mcx` lists controls then target. Angles use the shortest representation
//! that parses back to the same `f64`.

use std::fmt::Write;

use super::{Circuit, Gate, Register, RegisterMap};
use crate::error::{Error, Result};

pub fn to_text(circuit: &Circuit) -> String {
    let mut out = String::new();
    writeln!(out, "# qubits {}", circuit.qubit_count()).unwrap();
    for r in circuit.registers.registers() {
        writeln!(out, "# register {} {} {} {}", r.name, r.offset, r.width, r.role).unwrap();
    }
    for g in circuit.gates() {
        match g {
            Gate::X { target } => writeln!(out, "x {target}"),
            Gate::Cnot { control, target } => writeln!(out, "cx {control} {target}"),
            Gate::Toffoli { controls, target } => writeln!(out, "ccx {} {} {target}", controls[0], controls[1]),
            Gate::Mcx { controls, target } => {
                let cs: Vec<String> = controls.iter().map(|c| c.to_string()).collect();
                writeln!(out, "mcx {} {target}", cs.join(" "))
            }
            Gate::H { target } => writeln!(out, "h {target}"),
            Gate::Ry { angle, target } => writeln!(out, "ry {angle} {target}"),
            Gate::Cry { angle, control, target } => writeln!(out, "cry {angle} {control} {target}"),
            Gate::Barrier { label } => writeln!(out, "barrier {label}"),
        }
        .unwrap();
    }
    out
}

pub fn parse_text(text: &str) -> Result<Circuit> {
    let mut qubits: Option<usize> = None;
    let mut map = RegisterMap::new();
    let mut gates = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |msg: String| Error::Parse { line, msg };
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        let mut words = t.split_whitespace();
        let head = words.next().expect("non-empty line");
        let rest: Vec<&str> = words.collect();
        let num = |s: &str| s.parse::<usize>().map_err(|e| err(format!("bad qubit index {s:?}: {e}")));
        let angle = |s: &str| s.parse::<f64>().map_err(|e| err(format!("bad angle {s:?}: {e}")));
        let arity = |n: usize| {
            if rest.len() == n {
                Ok(())
            } else {
                Err(err(format!("{head} takes {n} operands, got {}", rest.len())))
            }
        };
        if head == "#" {
            match rest.as_slice() {
                ["qubits", n] => qubits = Some(num(n)?),
                ["register", name, off, width, role] => map
                    .insert(Register {
                        name: name.to_string(),
                        offset: num(off)?,
                        width: num(width)?,
                        role: role.parse().map_err(|e: Error| err(e.to_string()))?,
                    })
                    .map_err(|e| err(e.to_string()))?,
                _ => {}
            }
            continue;
        }
        let gate = match head {
            "x" => {
                arity(1)?;
                Gate::x(num(rest[0])?)
            }
            "h" => {
                arity(1)?;
                Gate::H { target: num(rest[0])? }
            }
            "cx" => {
                arity(2)?;
                Gate::cnot(num(rest[0])?, num(rest[1])?)
            }
            "ccx" => {
                arity(3)?;
                Gate::toffoli(num(rest[0])?, num(rest[1])?, num(rest[2])?)
            }
            "mcx" => {
                if rest.len() < 2 {
                    return Err(err("mcx needs controls and a target".into()));
                }
                let qs = rest.iter().map(|s| num(s)).collect::<Result<Vec<_>>>()?;
                let (target, controls) = qs.split_last().expect("checked length");
                Gate::Mcx { controls: controls.to_vec(), target: *target }
            }
            "ry" => {
                arity(2)?;
                Gate::Ry { angle: angle(rest[0])?, target: num(rest[1])? }
            }
            "cry" => {
                arity(3)?;
                Gate::Cry { angle: angle(rest[0])?, control: num(rest[1])?, target: num(rest[2])? }
            }
            "barrier" => Gate::Barrier { label: rest.join(" ") },
            other => return Err(err(format!("unknown mnemonic {other:?}"))),
        };
        gates.push((line, gate));
    }
    let n = qubits.ok_or(Error::Parse { line: 0, msg: "missing '# qubits' header".into() })?;
    if map.total() > n {
        return Err(Error::Parse { line: 0, msg: format!("registers span {} qubits, header says {n}", map.total()) });
    }
    if map.total() < n {
        let covered = map.total();
        map.insert(Register {
            name: "unnamed".into(),
            offset: covered,
            width: n - covered,
            role: super::Role::Scratch,
        })?;
    }
    let mut c = Circuit::new(map);
    for (line, g) in gates {
        c.try_push(g).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
    }
    Ok(c)
}
