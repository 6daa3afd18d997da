#![allow(dead_code)]

use kwgauss::circuit::{Gate, Qubit};
use kwgauss::fixed::{self, ClassicalConstant, FixedFormat};
use kwgauss::qarith::{self, Bit, MulSample, Multiply};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sequential qubit allocation for oracle checks.
#[derive(Default)]
pub struct Layout {
    next: usize,
}

impl Layout {
    pub fn take(&mut self, n: usize) -> Vec<Qubit> {
        let r = (self.next..self.next + n).collect();
        self.next += n;
        r
    }

    pub fn one(&mut self) -> Qubit {
        self.take(1)[0]
    }

    pub fn total(&self) -> usize {
        self.next
    }
}

pub fn read(key: u128, qs: &[Qubit]) -> u128 {
    qs.iter().enumerate().fold(0, |v, (i, &q)| v | (((key >> q) & 1) << i))
}

pub fn write(key: u128, qs: &[Qubit], v: u128) -> u128 {
    qs.iter().enumerate().fold(key, |k, (i, &q)| (k & !(1u128 << q)) | (((v >> i) & 1) << q))
}

pub fn cost(gates: &[Gate]) -> u64 {
    gates.iter().map(Gate::cnot_cost).sum()
}

/// Either every value of each operand, or `samples` random tuples.
pub enum Inputs {
    Exhaustive,
    Random { samples: usize, seed: u64 },
}

impl Inputs {
    /// Tuples of raw operand values for the given bit widths.
    pub fn tuples(&self, widths: &[u32]) -> Vec<Vec<u128>> {
        match self {
            Inputs::Exhaustive => {
                let mut out = vec![Vec::new()];
                for &w in widths {
                    out = out
                        .into_iter()
                        .flat_map(|t| (0..1u128 << w).map(move |v| [t.clone(), vec![v]].concat()))
                        .collect();
                }
                out
            }
            Inputs::Random { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..*samples).map(|_| widths.iter().map(|&w| rng.gen::<u128>() & fixed::mask(w)).collect()).collect()
            }
        }
    }
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

pub fn check_ripple_add(n: u32, controlled: bool, inputs: &Inputs) -> Result<(), String> {
    let mut l = Layout::default();
    let (src, dst, carry, ctrl) = (l.take(n as usize), l.take(n as usize), l.one(), l.one());
    let gates = if controlled {
        qarith::controlled_add(ctrl, &src, &dst, carry)
    } else {
        qarith::ripple_add(&src, &dst, carry)
    }
    .map_err(|e| e.to_string())?;
    let per_bit = if controlled { 22 } else { 16 };
    ensure(cost(&gates) == per_bit * n as u64, || format!("adder({n}) costs {}", cost(&gates)))?;
    for t in inputs.tuples(&[n, n, 1]) {
        let (a, b, c) = (t[0], t[1], t[2]);
        let key = write(write(write(0, &src, a), &dst, b), &[ctrl], c);
        let out = qarith::run_basis(&gates, key);
        let want = if controlled && c == 0 { b } else { (a + b) & fixed::mask(n) };
        ensure(read(out, &dst) == want, || format!("adder({n}) {a}+{b} gave {}", read(out, &dst)))?;
        ensure(out == write(key, &dst, want), || format!("adder({n}) disturbed other qubits"))?;
    }
    Ok(())
}

pub fn check_add_const(fmt: FixedFormat, c0: f64, c1: Option<f64>, inputs: &Inputs) -> Result<(), String> {
    let c0 = ClassicalConstant::new(c0, fmt).map_err(|e| e.to_string())?;
    let c1 = c1.map(|v| ClassicalConstant::new(v, fmt)).transpose().map_err(|e| e.to_string())?;
    let mut l = Layout::default();
    let reg = l.take(fmt.width as usize);
    let (carry, sel) = (l.one(), l.one());
    let scratch = l.take(qarith::add_const_scratch(fmt, &c0, c1.as_ref()));
    let gates = qarith::add_const_select(&reg, fmt, &c0, c1.as_ref().map(|c| (sel, c)), carry, &scratch)
        .map_err(|e| e.to_string())?;
    for t in inputs.tuples(&[fmt.width, 1]) {
        let key = write(write(0, &reg, t[0]), &[sel], t[1]);
        let out = qarith::run_basis(&gates, key);
        let c = if t[1] == 1 { c1.as_ref().unwrap_or(&c0) } else { &c0 };
        let want = fixed::add_const(t[0], fmt, c);
        ensure(out == write(key, &reg, want), || {
            format!("add_const {:?} on {} gave {}", c.value, t[0], read(out, &reg))
        })?;
    }
    Ok(())
}

pub struct CcmCase {
    pub k: u32,
    pub r: u32,
    pub acc_fmt: FixedFormat,
    pub half: bool,
}

pub fn check_ccm(case: &CcmCase, m: &ClassicalConstant, inputs: &Inputs) -> Result<u64, String> {
    let v_fmt = FixedFormat::signed(case.k, 0);
    let mut l = Layout::default();
    let v = l.take(case.k as usize);
    let acc = l.take(case.acc_fmt.width as usize);
    let e = l.take(case.r.max(1) as usize);
    let carry = l.one();
    let gates = qarith::ccm(m, &v, v_fmt, &acc, case.acc_fmt, &e, carry, case.half).map_err(|e| e.to_string())?;
    for t in inputs.tuples(&[case.k, case.acc_fmt.width]) {
        let key = write(write(0, &v, t[0]), &acc, t[1]);
        let out = qarith::run_basis(&gates, key);
        let want = fixed::ccm_acc(t[1], case.acc_fmt, m, t[0], v_fmt, case.half);
        ensure(out == write(key, &acc, want), || {
            format!(
                "ccm M={} v={} acc={}: got {} want {want} (full key {out:#x})",
                m.value,
                t[0],
                t[1],
                read(out, &acc)
            )
        })?;
    }
    Ok(cost(&gates))
}

pub struct MulCase {
    pub a: FixedFormat,
    pub b: FixedFormat,
    pub p: FixedFormat,
    pub subtract: bool,
    pub compact: bool,
}

pub fn check_multiply(case: &MulCase, inputs: &Inputs) -> Result<u64, String> {
    let mut l = Layout::default();
    let a = l.take(case.a.width as usize);
    let b = l.take(case.b.width as usize);
    let p = l.take(case.p.width as usize);
    let carry = l.one();
    let bits: Vec<Bit> = b.iter().map(|&q| Bit::Q(q)).collect();
    let mul = Multiply {
        multiplicand: &a,
        multiplicand_fmt: case.a,
        multiplier: &bits,
        multiplier_fmt: case.b,
        prod: &p,
        prod_fmt: case.p,
        subtract: case.subtract,
    };
    let scratch = l.take(mul.scratch_bound());
    let tuples = inputs.tuples(&[case.a.width, case.b.width, if case.compact { 0 } else { case.p.width }]);
    let samples: Vec<MulSample> =
        tuples.iter().map(|t| MulSample { multiplicand: t[0], multiplier: t[1], prod: t[2] }).collect();
    let built = mul.build(carry, &scratch, case.compact.then_some(samples.as_slice())).map_err(|e| e.to_string())?;
    for t in &tuples {
        let key = write(write(write(0, &a, t[0]), &b, t[1]), &p, t[2]);
        let out = qarith::run_basis(&built.gates, key);
        let want = fixed::mul_acc(t[2], case.p, t[0], case.a, t[1], case.b, case.subtract);
        ensure(out == write(key, &p, want), || {
            format!("mul a={} b={} p={}: got {} want {want}, key {out:#x}", t[0], t[1], t[2], read(out, &p))
        })?;
    }
    Ok(cost(&built.gates))
}

pub fn check_square(a_fmt: FixedFormat, out_fmt: FixedFormat, inputs: &Inputs) -> Result<(), String> {
    let mut l = Layout::default();
    let a = l.take(a_fmt.width as usize);
    let out = l.take(out_fmt.width as usize);
    let carry = l.one();
    let scratch = l.take(2 * (a_fmt.width + out_fmt.width) as usize);
    let built = qarith::square(&a, a_fmt, &out, out_fmt, carry, &scratch, None).map_err(|e| e.to_string())?;
    for t in inputs.tuples(&[a_fmt.width]) {
        let key = write(0, &a, t[0]);
        let res = qarith::run_basis(&built.gates, key);
        let want = fixed::mul_acc(0, out_fmt, t[0], a_fmt, t[0], a_fmt, false);
        ensure(res == write(key, &out, want), || format!("square {} gave {}", t[0], read(res, &out)))?;
        ensure(out_fmt.decode(want) >= 0 || !out_fmt.signed, || format!("negative square of {}", t[0]))?;
    }
    Ok(())
}

pub fn check_increment(n: u32, inputs: &Inputs) -> Result<(), String> {
    let mut l = Layout::default();
    let reg = l.take(n as usize);
    let ctrl = l.one();
    let scratch = l.take(n as usize);
    let gates = qarith::controlled_increment(ctrl, &reg, &scratch).map_err(|e| e.to_string())?;
    for t in inputs.tuples(&[n, 1]) {
        let key = write(write(0, &reg, t[0]), &[ctrl], t[1]);
        let out = qarith::run_basis(&gates, key);
        let want = (t[0] + t[1]) & fixed::mask(n);
        ensure(out == write(key, &reg, want), || format!("increment {} by {} gave {}", t[0], t[1], read(out, &reg)))?;
    }
    Ok(())
}

pub fn check_sign_extend(k: u32, r: u32) -> Result<(), String> {
    let mut l = Layout::default();
    let m = l.take(k as usize);
    let e = l.take(r as usize);
    let gates = qarith::sign_extend(&e, &m);
    for v in 0..1u128 << k {
        let key = write(0, &m, v);
        let once = qarith::run_basis(&gates, key);
        let both: Vec<Qubit> = m.iter().chain(&e).copied().collect();
        let wide = fixed::sign_extend(read(once, &both), k + r);
        ensure(wide == fixed::sign_extend(v, k), || format!("extension changed the value of {v}"))?;
        ensure(qarith::run_basis(&gates, once) == key, || format!("extending {v} twice is not the identity"))?;
    }
    Ok(())
}

/// Deterministic random constant in a format.
pub fn random_constant(rng: &mut impl Rng, fmt: FixedFormat) -> ClassicalConstant {
    let units = rng.gen_range(fmt.min_units()..=fmt.max_units());
    ClassicalConstant::from_units(units, fmt).expect("in range")
}

pub fn check_geq_const(n: u32) -> Result<(), String> {
    let mut l = Layout::default();
    let reg = l.take(n as usize);
    let flag = l.one();
    let scratch = l.take(n as usize);
    for t in 0..=(1u128 << n) {
        let gates = qarith::geq_const(&reg, t, flag, &scratch).map_err(|e| e.to_string())?;
        for v in 0..1u128 << n {
            let key = write(0, &reg, v);
            let out = qarith::run_basis(&gates, key);
            ensure(out == write(key, &[flag], (v >= t) as u128), || format!("[{v} >= {t}] wrong at width {n}"))?;
        }
    }
    Ok(())
}

use kwgauss::circuit::{simulate, SparseState};
use kwgauss::kw1d::{self, Kw1dConfig, Kw1dLayout};
use kwgauss::reference_math::{fit_angle_plan, recursive_xi_state_with, AngleProgram, Regime, Thresholds};

/// Run the compute-only angle circuit on every prefix and compare with the
/// program trace; also checks that the inverse restores the input.
pub fn check_angle_circuit(sigma_j: f64, b: u32, j: u32) -> Result<Option<(Regime, u64)>, String> {
    let plan = fit_angle_plan(sigma_j, b, Thresholds::default()).map_err(|e| e.to_string())?;
    if !matches!(plan.regime, Regime::Hi | Regime::Intermediate) {
        return Ok(None);
    }
    let prog = AngleProgram::compile(&plan, j).map_err(|e| e.to_string())?;
    let (_, lay) =
        Kw1dLayout::allocate(j + 1, b, prog.iterations, true, 4 * (j + b) as usize + 8).map_err(|e| e.to_string())?;
    let gates = kw1d::angle_circuit(&prog, &lay).map_err(|e| e.to_string())?;
    let undo = qarith::invert(gates.clone());
    for p in 0..1u64 << j {
        let key = write(0, &lay.state, p as u128);
        let out = qarith::run_basis(&gates, key);
        let want = prog.trace(p).angle;
        ensure(read(out, &lay.angle) == want, || {
            format!("sigma_j={sigma_j} b={b} j={j} prefix {p}: angle {} want {want}", read(out, &lay.angle))
        })?;
        ensure(qarith::run_basis(&undo, out) == key, || format!("prefix {p} not restored"))?;
    }
    Ok(Some((plan.regime, cost(&gates))))
}

pub struct Kw1dOutcome {
    pub max_diff: f64,
    pub work_weight: f64,
    pub qubits: usize,
}

/// Simulate the full circuit from |0> and compare the state register with
/// the quantised recursion.
pub fn check_kw1d(sigma: f64, k: u32, b: u32) -> Result<Kw1dOutcome, String> {
    let cfg = Kw1dConfig::symmetric(sigma, k, b).map_err(|e| e.to_string())?;
    let built = kw1d::build_kw1d(&cfg).map_err(|e| e.to_string())?;
    let n = built.circuit.qubit_count();
    let out = simulate(&built.circuit, &SparseState::zero(n).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (state, work_weight) = out.project_low(k as usize).map_err(|e| e.to_string())?;
    let oracle = recursive_xi_state_with(cfg.spec, k, Some(b), cfg.thresholds).map_err(|e| e.to_string())?;
    let max_diff = state.amplitudes.iter().zip(&oracle.amplitudes).map(|(a, o)| (a - o).norm()).fold(0.0, f64::max);
    Ok(Kw1dOutcome { max_diff, work_weight, qubits: n })
}
