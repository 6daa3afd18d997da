//! The recursive 1D preparation circuit. Level `j` rotates `q_j` by
//! `alpha(mu_j, sigma_j)` where `mu_j` is read off the prefix `q_0 .. q_{j-1}`:
//!
//! * `j = 0`: one classical `Ry`.
//! * Constant: `Ry(pi/2)`, no controls.
//! * SquareWave: `CNOT q_{j-1} -> q_j`.
//! * Hi / Intermediate: compute the angle program of
//!   [`AngleProgram`] into the angle register, rotate, uncompute.
//!
//! Only the symmetric encoding `mu = -1/2` is built; other means are
//! rejected (the shear stage carries the mean instead).
//!
//! The argument register is `[one, q_0, .., q_{j-2}]`: after the branch
//! reflections `q_{j-1}` is always zero, so the qubits already hold the
//! program's argument without a copy.

use std::f64::consts::PI;

use serde::Serialize;

use crate::circuit::{Circuit, Gate, Qubit, RegisterMap, ResourceReport, Role};
use crate::error::{Error, Result};
use crate::fixed::{self, ClassicalConstant};
use crate::qarith::{self, Bit, MulSample, Multiply};
use crate::reference_math::{
    fit_angle_plan, rotation, AngleApproxPlan, AngleProgram, Branch, GaussianSpec1D, Regime, Thresholds, Trace,
    ENUMERATION_LIMIT,
};

/// Sampled traces drive the compact multiplier widths up to this depth.
const SAMPLE_LIMIT: u32 = ENUMERATION_LIMIT;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Kw1dConfig {
    pub spec: GaussianSpec1D,
    pub k: u32,
    pub b: u32,
    pub thresholds: Thresholds,
}

impl Kw1dConfig {
    pub fn new(spec: GaussianSpec1D, k: u32, b: u32, thresholds: Thresholds) -> Result<Self> {
        if k == 0 || k > 64 {
            return Err(Error::Domain(format!("k must be in 1..=64, got {k}")));
        }
        if b == 0 || b > 60 {
            return Err(Error::Domain(format!("b must be in 1..=60, got {b}")));
        }
        let thresholds = Thresholds::new(thresholds.lo, thresholds.hi)?;
        Ok(Kw1dConfig { spec, k, b, thresholds })
    }

    pub fn symmetric(sigma: f64, k: u32, b: u32) -> Result<Self> {
        Self::new(GaussianSpec1D::symmetric(sigma)?, k, b, Thresholds::default())
    }

    pub fn sigma_j(&self, j: u32) -> f64 {
        self.spec.sigma / (j as f64).exp2()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionLevelTrace {
    pub j: u32,
    pub sigma_j: f64,
    pub plan: AngleApproxPlan,
    /// CNOTs of the angle computation alone, the quantity the closed-form bounds cover.
    pub angle_cnots: u64,
    /// Whole level: compute, rotation, uncompute.
    pub resources: ResourceReport,
    pub cnot_bound: Option<i64>,
    pub mid_shift: Option<u32>,
    pub emulated_error: Option<f64>,
}

impl RecursionLevelTrace {
    pub fn regime(&self) -> Regime {
        self.plan.regime
    }
}

#[derive(Clone, Debug)]
pub struct Kw1dCircuit {
    pub circuit: Circuit,
    pub levels: Vec<RecursionLevelTrace>,
    pub k: u32,
}

impl Kw1dCircuit {
    pub fn total_cnots(&self) -> u64 {
        self.circuit.cnots()
    }
}

/// Qubits used by the angle circuits. The state register comes first, so the
/// low `k` bits of a basis key are the lattice index.
#[derive(Clone, Debug, PartialEq)]
pub struct Kw1dLayout {
    pub state: Vec<Qubit>,
    pub angle: Vec<Qubit>,
    pub sq: Vec<Qubit>,
    pub iterates: Vec<Vec<Qubit>>,
    pub one: Qubit,
    pub neg: Qubit,
    /// `[mid, low]`.
    pub label: [Qubit; 2],
    pub carry: Qubit,
    pub scratch: Vec<Qubit>,
}

impl Kw1dLayout {
    /// Register map and layout for `k` state qubits, `b` angle bits, `d`
    /// iterate registers and `scratch` borrowed qubits.
    pub fn allocate(k: u32, b: u32, d: usize, labels: bool, scratch: usize) -> Result<(RegisterMap, Kw1dLayout)> {
        let mut m = RegisterMap::new();
        let state = m.add("q", k as usize, Role::State)?.qubits();
        let angle = m.add("angle", b as usize, Role::Angle)?.qubits();
        let sq = m.add("sq", b as usize, Role::Iterate)?.qubits();
        let xs = m.add("x", d * (b as usize + 1), Role::Iterate)?.qubits();
        let aug = m.add("aug", 2, Role::Extension)?.qubits();
        let label = if labels { m.add("label", 2, Role::Label)?.qubits() } else { Vec::new() };
        let carry = m.add("carry", 1, Role::Carry)?.qubit(0);
        let scratch = m.add("scratch", scratch, Role::Scratch)?.qubits();
        let iterates = xs.chunks(b as usize + 1).map(<[Qubit]>::to_vec).collect();
        // Without labels the circuit never touches them; aliasing `aug` keeps
        // the type simple.
        let label = if labels { [label[0], label[1]] } else { [aug[0], aug[1]] };
        Ok((m, Kw1dLayout { state, angle, sq, iterates, one: aug[0], neg: aug[1], label, carry, scratch }))
    }

    fn state_only(k: u32) -> Result<RegisterMap> {
        let mut m = RegisterMap::new();
        m.add("q", k as usize, Role::State)?;
        Ok(m)
    }
}

/// Closed-form CNOT bound for the Hi-level angle computation.
pub fn hi_cnot_bound(b: u32, j: u32, d: usize) -> i64 {
    let (b, j, d) = (b as i64, j as i64, d as i64);
    11 * (4 * b * j - 2 * j * j + d * b * b) - 3 * b * b - 13 * j + (32 * d + 39) * b + 10 * d - 56
}

/// Upper bound of the Intermediate-level angle circuit. The label circuit's
/// unspecified linear term is charged as `slack_per_j * j`.
pub fn int_cnot_bound(b: u32, j: u32, d: usize, slack_per_j: i64) -> i64 {
    let (b, j, d) = (b as i64, j as i64, d as i64);
    let mut v = 11 * (4 * b * j - 2 * j * j + d * b * b) + (34 * d + 90) * b - 7 * j + slack_per_j * j + 10 * d - 76;
    if d == 1 {
        v -= 11 * b * b + 34 * b + 10;
    }
    v
}

pub const LABEL_SLACK_PER_J: i64 = 20;

/// The angle-controlled rotation: bit `r` of the angle register contributes
/// `R_y(pi / 2^(b-r))`.
pub fn apply_rotation(angle: &[Qubit], target: Qubit) -> Vec<Gate> {
    let b = angle.len() as i32;
    angle
        .iter()
        .enumerate()
        .map(|(r, &c)| Gate::Cry { angle: PI * ((r as i32 - b) as f64).exp2(), control: c, target })
        .collect()
}

pub fn build_square_wave(j: u32, state: &[Qubit]) -> Result<Vec<Gate>> {
    if j == 0 {
        return Err(Error::Domain("the square-wave shortcut needs a previous qubit".into()));
    }
    Ok(vec![Gate::cnot(state[j as usize - 1], state[j as usize])])
}

fn const_raw(c: &ClassicalConstant) -> u128 {
    fixed::add_const(0, c.format, c)
}

/// Per-bit choice between the mid and the outer constant under the label.
fn select_bits(mid: u128, outer: u128, width: u32, lm: Option<Qubit>) -> Vec<Bit> {
    (0..width)
        .map(|i| {
            let (m, o) = ((mid >> i) & 1 == 1, (outer >> i) & 1 == 1);
            match (lm, m, o) {
                (None, true, _) | (Some(_), true, true) => Bit::One,
                (None, false, _) | (Some(_), false, false) => Bit::Zero,
                (Some(l), true, false) => Bit::Q(l),
                (Some(l), false, true) => Bit::Not(l),
            }
        })
        .collect()
}

/// Compute-only angle circuit for a Hi or Intermediate program at its depth.
/// Afterwards the angle register holds `trace(Q).angle` for prefix `Q`; the
/// state qubits and every other register are left dirty for the rotation and
/// must be restored by running the gates backwards.
pub fn angle_circuit(prog: &AngleProgram, lay: &Kw1dLayout) -> Result<Vec<Gate>> {
    Ok(angle_stages(prog, lay)?.into_iter().flat_map(|s| s.gates).collect())
}

/// One named step of an angle circuit, for per-stage CNOT reports.
#[derive(Clone, Debug)]
pub struct AngleStage {
    pub name: &'static str,
    pub gates: Vec<Gate>,
}

impl AngleStage {
    pub fn cnots(&self) -> u64 {
        self.gates.iter().map(Gate::cnot_cost).sum()
    }
}

/// [`angle_circuit`] split into its stages.
pub fn angle_stages(prog: &AngleProgram, lay: &Kw1dLayout) -> Result<Vec<AngleStage>> {
    let l = prog.layout;
    let (j, b) = (l.j as usize, l.b as usize);
    let d = prog.iterations;
    let int = prog.plan.regime == Regime::Intermediate;
    if lay.state.len() <= j || lay.angle.len() != b || lay.sq.len() != b || lay.iterates.len() < d {
        return Err(Error::WidthMismatch(format!("layout too small for depth {j}, b = {b}, {d} iterates")));
    }
    let q = &lay.state[..j];
    let [lm, ll] = lay.label;
    let (one, neg, carry) = (lay.one, lay.neg, lay.carry);
    let scratch = &lay.scratch;
    let traces: Option<Vec<Trace>> = (l.j <= SAMPLE_LIMIT).then(|| (0..1u64 << j).map(|p| prog.trace(p)).collect());
    let samples = |f: &dyn Fn(u64, &Trace) -> MulSample| {
        traces.as_ref().map(|ts| ts.iter().enumerate().map(|(p, t)| f(p as u64, t)).collect::<Vec<_>>())
    };
    let mut g = vec![Gate::x(one)];
    let mut marks: Vec<(&'static str, usize)> = vec![("labels", 0)];

    // Labels and reflections onto a non-negative argument.
    if int {
        let (t_up, t_lo) = prog.label_thresholds();
        g.extend(qarith::geq_const(q, t_up as u128, lm, scratch)?);
        g.extend(qarith::geq_const(q, t_lo as u128, ll, scratch)?);
        g.push(Gate::cnot(ll, lm));
        g.extend(q.iter().map(|&t| Gate::cnot(ll, t)));
        g.push(Gate::toffoli(lm, q[j - 1], neg));
        g.push(Gate::cnot(neg, q[j - 1]));
        for &t in &q[..j - 1] {
            g.push(Gate::cnot(lm, t));
            g.push(Gate::cnot(neg, t));
        }
    } else {
        g.push(Gate::cnot(q[j - 1], neg));
        g.push(Gate::cnot(neg, q[j - 1]));
        for &t in &q[..j - 1] {
            g.push(Gate::x(t));
            g.push(Gate::cnot(neg, t));
        }
    }
    marks.push(("mid_shift", g.len()));
    let arg: Vec<Qubit> = std::iter::once(one).chain(q[..j - 1].iter().copied()).collect();
    let shift = prog.mid_shift as usize;
    for i in (0..j.saturating_sub(shift)).rev().filter(|_| shift > 0) {
        g.push(Gate::cnot(arg[i + shift], arg[i]));
        g.push(Gate::toffoli(lm, arg[i], arg[i + shift]));
        g.push(Gate::cnot(arg[i + shift], arg[i]));
    }

    // sq = arg^2 through a copy of the argument.
    marks.push(("square", g.len()));
    let one_fixed = !int || shift == 0;
    let arg_bits: Vec<Bit> =
        arg.iter().enumerate().map(|(i, &a)| if i == 0 && one_fixed { Bit::One } else { Bit::Q(a) }).collect();
    let (copy, rest) = scratch.split_at(j);
    let fan: Vec<Gate> = arg_bits
        .iter()
        .zip(copy)
        .map(|(bit, &c)| match *bit {
            Bit::One => Gate::x(c),
            Bit::Q(a) => Gate::cnot(a, c),
            _ => unreachable!(),
        })
        .collect();
    g.extend(fan.iter().cloned());
    let smp = samples(&|_, t| MulSample { multiplicand: t.arg, multiplier: t.arg, prod: 0 });
    let mul = Multiply {
        multiplicand: copy,
        multiplicand_fmt: l.arg,
        multiplier: &arg_bits,
        multiplier_fmt: l.arg,
        prod: &lay.sq,
        prod_fmt: l.sq,
        subtract: false,
    };
    g.extend(mul.build(carry, rest, smp.as_deref())?.gates);
    g.extend(fan.into_iter().rev());

    // Horner iterates: multiply into a clear register so the running sum stays
    // narrow, then add the constant.
    marks.push(("horner", g.len()));
    let sel = int.then_some(lm);
    let coeff = |branch_mid: bool, n: usize| if branch_mid { &prog.mid[n] } else { &prog.outer[n] };
    let pick = |t: &Trace, n: usize| const_raw(coeff(t.branch == Branch::Mid || !int, n));
    for n in 1..=d {
        let xr = &lay.iterates[n - 1];
        let (multiplier, smp) = if n == 1 {
            let bits = select_bits(const_raw(coeff(true, d)), const_raw(coeff(false, d)), l.x.width, sel);
            let smp = samples(&|_, t| MulSample { multiplicand: t.sq, multiplier: pick(t, d), prod: 0 });
            (bits, smp)
        } else {
            let bits = lay.iterates[n - 2].iter().map(|&x| Bit::Q(x)).collect();
            let smp = samples(&|_, t| MulSample { multiplicand: t.sq, multiplier: t.iterates[n - 2], prod: 0 });
            (bits, smp)
        };
        let mul = Multiply {
            multiplicand: &lay.sq,
            multiplicand_fmt: l.sq,
            multiplier: &multiplier,
            multiplier_fmt: l.x,
            prod: xr,
            prod_fmt: l.x,
            subtract: false,
        };
        g.extend(mul.build(carry, scratch, smp.as_deref())?.gates);
        let c = coeff(!int, d - n);
        let chosen = int.then(|| (lm, coeff(true, d - n)));
        g.extend(qarith::add_const_select(xr, l.x, c, chosen, carry, scratch)?);
    }
    let xd = &lay.iterates[d - 1];

    // Mid branch: angle = 1/2 +- (e + x_d * t), the sign applied by
    // complementing, which also absorbs the -1. The half goes on last.
    marks.push(("final_product", g.len()));
    let start = l.angle.encode(prog.product_offset);
    for i in 0..b {
        if (start >> i) & 1 == 1 {
            g.push(if int { Gate::cnot(lm, lay.angle[i]) } else { Gate::x(lay.angle[i]) });
        }
    }
    g.push(Gate::cnot(neg, lay.angle[0]));
    let (copies, rest) = scratch.split_at(j);
    let mut gated = Vec::new();
    let final_bits: Vec<Bit> = (0..j)
        .map(|t| {
            if !int {
                arg_bits[t]
            } else if t < shift {
                Bit::Zero
            } else if t == shift {
                Bit::Q(lm)
            } else {
                gated.push(Gate::toffoli(lm, arg[t], copies[t]));
                Bit::Q(copies[t])
            }
        })
        .collect();
    g.extend(gated.iter().cloned());
    let smp = samples(&|p, t| {
        let mid = t.branch == Branch::Mid || !int;
        let is_neg = mid && 2 * p + 1 > 1u64 << j;
        MulSample {
            multiplicand: *t.iterates.last().expect("d >= 1"),
            multiplier: if mid { t.arg } else { 0 },
            prod: if mid { start ^ is_neg as u128 } else { 0 },
        }
    });
    let mul = Multiply {
        multiplicand: xd,
        multiplicand_fmt: l.x,
        multiplier: &final_bits,
        multiplier_fmt: l.arg,
        prod: &lay.angle,
        prod_fmt: l.angle,
        subtract: false,
    };
    g.extend(mul.build(carry, rest, smp.as_deref())?.gates);
    g.extend(gated.into_iter().rev());
    g.extend(lay.angle.iter().map(|&a| Gate::cnot(neg, a)));
    g.push(if int { Gate::cnot(lm, lay.angle[b - 1]) } else { Gate::x(lay.angle[b - 1]) });

    // Outer branches: copy the iterate, complement it in the lower one.
    marks.push(("outer_map", g.len()));
    if int {
        let s = b as i32 - l.x.frac;
        if s < 0 {
            return Err(Error::Unsupported(format!("iterate format {:?} finer than the angle", l.x)));
        }
        let s = s as usize;
        g.push(Gate::x(lm));
        for i in s..b {
            g.push(Gate::toffoli(lm, xd[i - s], lay.angle[i]));
        }
        g.push(Gate::x(lm));
        g.extend(lay.angle.iter().map(|&a| Gate::cnot(ll, a)));
    }
    let ends = marks.iter().skip(1).map(|m| m.1).chain([g.len()]);
    Ok(marks.iter().zip(ends).map(|(&(name, from), to)| AngleStage { name, gates: g[from..to].to_vec() }).collect())
}

struct LevelPlan {
    j: u32,
    sigma_j: f64,
    plan: AngleApproxPlan,
    program: Option<AngleProgram>,
}

fn plan_levels(config: &Kw1dConfig) -> Result<Vec<LevelPlan>> {
    (0..config.k)
        .map(|j| {
            let sigma_j = config.sigma_j(j);
            let plan = fit_angle_plan(sigma_j, config.b, config.thresholds)?;
            let program = match plan.regime {
                Regime::Hi | Regime::Intermediate if j > 0 => Some(AngleProgram::compile(&plan, j)?),
                _ => None,
            };
            Ok(LevelPlan { j, sigma_j, plan, program })
        })
        .collect()
}

pub fn build_kw1d(config: &Kw1dConfig) -> Result<Kw1dCircuit> {
    if config.spec.mu != -0.5 {
        return Err(Error::Unsupported(format!(
            "circuits are built for the symmetric encoding mu = -1/2, got {}",
            config.spec.mu
        )));
    }
    let levels = plan_levels(config)?;
    let d_max = levels.iter().filter_map(|l| l.program.as_ref().map(|p| p.iterations)).max();
    let labels = levels.iter().any(|l| l.program.is_some() && l.plan.regime == Regime::Intermediate);
    let provisional = 4 * (config.k + config.b) as usize + 8;
    let (map, lay) = match d_max {
        Some(d) => {
            let (m, lay) = Kw1dLayout::allocate(config.k, config.b, d, labels, provisional)?;
            (m, Some(lay))
        }
        None => (Kw1dLayout::state_only(config.k)?, None),
    };
    let mut circuit = Circuit::new(map);
    let mut traces = Vec::with_capacity(levels.len());
    for lvl in levels {
        let j = lvl.j as usize;
        let target = j;
        let (gates, angle_cnots) = match (&lvl.program, lvl.plan.regime) {
            (_, _) if j == 0 => {
                let r = rotation(config.spec.mu, config.spec.sigma)?;
                (vec![Gate::Ry { angle: 2.0 * r.alpha, target }], 0)
            }
            (Some(prog), _) => {
                let lay = lay.as_ref().expect("allocated with programs");
                let compute = angle_circuit(prog, lay)?;
                let cost = compute.iter().map(Gate::cnot_cost).sum();
                let mut gates = compute.clone();
                gates.extend(apply_rotation(&lay.angle, lay.state[target]));
                gates.extend(qarith::invert(compute));
                (gates, cost)
            }
            (None, Regime::Constant) => (vec![Gate::Ry { angle: PI / 2.0, target }], 0),
            (None, Regime::SquareWave) => (build_square_wave(lvl.j, &(0..config.k as usize).collect::<Vec<_>>())?, 1),
            (None, r) => unreachable!("{r:?} level without a program"),
        };
        let mut level = circuit.empty_like();
        level.append_gates(gates.iter().cloned());
        let cnot_bound = lvl.program.as_ref().map(|p| match lvl.plan.regime {
            Regime::Hi => hi_cnot_bound(config.b, lvl.j, p.iterations),
            _ => int_cnot_bound(config.b, lvl.j, p.iterations, LABEL_SLACK_PER_J),
        });
        circuit.append_gates(gates);
        traces.push(RecursionLevelTrace {
            j: lvl.j,
            sigma_j: lvl.sigma_j,
            resources: level.cnot_count(),
            angle_cnots,
            cnot_bound,
            mid_shift: lvl.program.as_ref().map(|p| p.mid_shift),
            emulated_error: lvl.program.as_ref().and_then(|p| p.emulated_error),
            plan: lvl.plan,
        });
    }
    let circuit = shrink_scratch(circuit)?;
    Ok(Kw1dCircuit { circuit, levels: traces, k: config.k })
}

/// Drop the unused tail of the provisional scratch register.
fn shrink_scratch(circuit: Circuit) -> Result<Circuit> {
    let Some(reg) = circuit.registers.get("scratch").cloned() else {
        return Ok(circuit);
    };
    let top = circuit.gates().iter().flat_map(Gate::qubits).max().map_or(0, |q| q + 1);
    let used = top.saturating_sub(reg.offset);
    let mut map = RegisterMap::new();
    for r in circuit.registers.registers() {
        let width = if r.name == "scratch" { used } else { r.width };
        if width > 0 {
            map.add(&r.name, width, r.role)?;
        }
    }
    let mut out = Circuit::new(map);
    out.append_gates(circuit.gates().iter().cloned());
    Ok(out)
}
