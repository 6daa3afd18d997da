//! Reversible two's-complement fixed-point arithmetic.
//!
//! Builders return gate lists over caller-supplied qubits; their classical
//! semantics live in [`crate::fixed`] and every builder agrees with those
//! bit for bit. Adders are Cuccaro ripple adders with one carry ancilla:
//! 16 CNOTs per bit, 22 per bit when controlled.

use std::collections::HashSet;

use crate::circuit::{Gate, Qubit};
use crate::error::{Error, Result};
use crate::fixed::{self, ClassicalConstant, FixedFormat};

/// One operand bit: a qubit, its negation, or a known constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bit {
    Zero,
    One,
    Q(Qubit),
    /// Set when the qubit is `|0>`; realised with X conjugation.
    Not(Qubit),
}

fn check_disjoint(groups: &[&[Qubit]]) -> Result<()> {
    let mut seen = HashSet::new();
    for q in groups.iter().flat_map(|g| g.iter()) {
        if !seen.insert(*q) {
            return Err(Error::Overlap(format!("qubit {q} appears in two operands")));
        }
    }
    Ok(())
}

fn maj(x: Qubit, y: Qubit, z: Qubit) -> [Gate; 3] {
    [Gate::cnot(z, y), Gate::cnot(z, x), Gate::toffoli(x, y, z)]
}

fn uma(x: Qubit, y: Qubit, z: Qubit) -> [Gate; 3] {
    [Gate::toffoli(x, y, z), Gate::cnot(z, x), Gate::cnot(x, y)]
}

fn uma_controlled(ctrl: Qubit, x: Qubit, y: Qubit, z: Qubit) -> [Gate; 4] {
    [Gate::toffoli(x, y, z), Gate::cnot(z, y), Gate::toffoli(ctrl, x, y), Gate::cnot(z, x)]
}

/// `dst <- dst + src mod 2^n`, optionally only when `ctrl` is set.
fn cuccaro(ctrl: Option<Qubit>, src: &[Qubit], dst: &[Qubit], carry: Qubit) -> Result<Vec<Gate>> {
    if src.len() != dst.len() {
        return Err(Error::WidthMismatch(format!("adder operands of {} and {} bits", src.len(), dst.len())));
    }
    let c = ctrl.map(|c| vec![c]).unwrap_or_default();
    check_disjoint(&[src, dst, &[carry], &c])?;
    let n = src.len();
    let wire = |i: usize| if i == 0 { carry } else { src[i - 1] };
    let mut gates = Vec::with_capacity(if ctrl.is_some() { 7 * n } else { 6 * n });
    for i in 0..n {
        gates.extend(maj(wire(i), dst[i], src[i]));
    }
    for i in (0..n).rev() {
        match ctrl {
            Some(c) => gates.extend(uma_controlled(c, wire(i), dst[i], src[i])),
            None => gates.extend(uma(wire(i), dst[i], src[i])),
        }
    }
    Ok(gates)
}

pub fn ripple_add(src: &[Qubit], dst: &[Qubit], carry: Qubit) -> Result<Vec<Gate>> {
    cuccaro(None, src, dst, carry)
}

pub fn ripple_sub(src: &[Qubit], dst: &[Qubit], carry: Qubit) -> Result<Vec<Gate>> {
    Ok(invert(ripple_add(src, dst, carry)?))
}

pub fn controlled_add(ctrl: Qubit, src: &[Qubit], dst: &[Qubit], carry: Qubit) -> Result<Vec<Gate>> {
    cuccaro(Some(ctrl), src, dst, carry)
}

pub fn invert(gates: Vec<Gate>) -> Vec<Gate> {
    gates.iter().rev().map(Gate::inverse).collect()
}

/// Turn a list of source bits into distinct qubits: repeated qubits are
/// copied into scratch, constants are written into scratch. Returns the
/// preparation gates (undo by running them backwards) and the qubit list.
fn materialize(src: &[Bit], scratch: &[Qubit], avoid: &[Qubit]) -> Result<(Vec<Gate>, Vec<Qubit>)> {
    let mut used: HashSet<Qubit> = avoid.iter().copied().collect();
    let mut free = scratch.iter().copied();
    let mut take = || free.next().ok_or_else(|| Error::ResourceCap { needed: scratch.len() + 1, cap: scratch.len() });
    let mut prep = Vec::new();
    let mut qs = Vec::with_capacity(src.len());
    for &b in src {
        let q = match b {
            Bit::Q(q) if used.insert(q) => q,
            Bit::Q(q) => {
                let s = take()?;
                prep.push(Gate::cnot(q, s));
                s
            }
            Bit::Not(q) => {
                let s = take()?;
                prep.push(Gate::cnot(q, s));
                prep.push(Gate::x(s));
                s
            }
            Bit::Zero => take()?,
            Bit::One => {
                let s = take()?;
                prep.push(Gate::x(s));
                s
            }
        };
        qs.push(q);
    }
    Ok((prep, qs))
}

/// Scratch qubits [`add_bits`] consumes for this source.
pub fn add_bits_scratch(src: &[Bit]) -> usize {
    let mut seen = HashSet::new();
    src.iter().filter(|b| !matches!(b, Bit::Q(q) if seen.insert(*q))).count()
}

/// `dst += src` (or `-=`) under an optional control bit. Constant and
/// repeated source bits are staged in `scratch` and cleaned up again.
pub fn add_bits(
    ctrl: Bit,
    src: &[Bit],
    dst: &[Qubit],
    subtract: bool,
    carry: Qubit,
    scratch: &[Qubit],
) -> Result<Vec<Gate>> {
    if ctrl == Bit::Zero || dst.is_empty() {
        return Ok(Vec::new());
    }
    let (prep, qs) = materialize(src, scratch, dst)?;
    let mut body = match ctrl {
        Bit::One => ripple_add(&qs, dst, carry)?,
        Bit::Q(c) | Bit::Not(c) => controlled_add(c, &qs, dst, carry)?,
        Bit::Zero => unreachable!(),
    };
    if subtract {
        body = invert(body);
    }
    if let Bit::Not(c) = ctrl {
        body.insert(0, Gate::x(c));
        body.push(Gate::x(c));
    }
    let mut gates = prep.clone();
    gates.extend(body);
    gates.extend(invert(prep));
    Ok(gates)
}

/// Units of `c` in the register's precision, the amount `fixed::add_const`
/// adds.
fn const_units(reg_fmt: FixedFormat, c: &ClassicalConstant) -> u128 {
    let shift = fixed::partial_shift(0, c.format.frac, 0, reg_fmt.frac);
    (fixed::floor_shift(c.units, shift) as u128) & fixed::mask(reg_fmt.width)
}

/// `reg += (sel ? c1 : c0)`; with `sel = None`, `reg += c0`. The constant is
/// encoded into scratch (X, or CNOT from the selector where the two differ),
/// added from its lowest set bit upward, and erased.
pub fn add_const_select(
    reg: &[Qubit],
    reg_fmt: FixedFormat,
    c0: &ClassicalConstant,
    sel: Option<(Qubit, &ClassicalConstant)>,
    carry: Qubit,
    scratch: &[Qubit],
) -> Result<Vec<Gate>> {
    if reg.len() != reg_fmt.width as usize {
        return Err(Error::WidthMismatch(format!("register of {} bits, format of {}", reg.len(), reg_fmt.width)));
    }
    let u0 = const_units(reg_fmt, c0);
    let u1 = sel.map_or(u0, |(_, c1)| const_units(reg_fmt, c1));
    if u0 == 0 && u1 == 0 {
        return Ok(Vec::new());
    }
    let lo = (u0 | u1).trailing_zeros() as usize;
    let width = reg.len() - lo;
    if scratch.len() < width {
        return Err(Error::ResourceCap { needed: width, cap: scratch.len() });
    }
    if let Some((s, _)) = sel {
        check_disjoint(&[reg, &[s], &scratch[..width], &[carry]])?;
    }
    let mut prep = Vec::new();
    for (i, &q) in scratch[..width].iter().enumerate() {
        let p = lo + i;
        let (b0, b1) = ((u0 >> p) & 1, (u1 >> p) & 1);
        if b0 != b1 {
            let (s, _) = sel.expect("constants differ only with a selector");
            prep.push(Gate::cnot(s, q));
        }
        if b0 == 1 {
            prep.push(Gate::x(q));
        }
    }
    let mut gates = prep.clone();
    gates.extend(ripple_add(&scratch[..width], &reg[lo..], carry)?);
    gates.extend(invert(prep));
    Ok(gates)
}

pub fn add_const(
    reg: &[Qubit],
    reg_fmt: FixedFormat,
    c: &ClassicalConstant,
    carry: Qubit,
    scratch: &[Qubit],
) -> Result<Vec<Gate>> {
    add_const_select(reg, reg_fmt, c, None, carry, scratch)
}

/// Scratch qubits needed by [`add_const_select`].
pub fn add_const_scratch(reg_fmt: FixedFormat, c0: &ClassicalConstant, c1: Option<&ClassicalConstant>) -> usize {
    let u = const_units(reg_fmt, c0) | c1.map_or(0, |c| const_units(reg_fmt, c));
    if u == 0 {
        0
    } else {
        reg_fmt.width as usize - u.trailing_zeros() as usize
    }
}

/// Copy the sign qubit `m[k-1]` into every qubit of `e`; an involution.
pub fn sign_extend(e: &[Qubit], m: &[Qubit]) -> Vec<Gate> {
    let sign = *m.last().expect("non-empty register");
    e.iter().map(|&q| Gate::cnot(sign, q)).collect()
}

/// `reg += ctrl mod 2^width`. A multi-controlled-X cascade for short
/// registers, a ripple adder of the control bit when that is cheaper and
/// enough scratch (one carry plus `width - 1` zeros) is supplied.
pub fn controlled_increment(ctrl: Qubit, reg: &[Qubit], scratch: &[Qubit]) -> Result<Vec<Gate>> {
    check_disjoint(&[reg, &[ctrl]])?;
    let n = reg.len();
    let cascade: Vec<Gate> = (0..n)
        .rev()
        .map(|i| {
            let controls: Vec<Qubit> = std::iter::once(ctrl).chain(reg[..i].iter().copied()).collect();
            Gate::mcx(&controls, reg[i])
        })
        .collect();
    let cascade_cost: u64 = cascade.iter().map(Gate::cnot_cost).sum();
    if n >= 1 && scratch.len() >= n && 16 * (n as u64) < cascade_cost {
        let (carry, zeros) = scratch.split_first().expect("non-empty scratch");
        let src: Vec<Qubit> = std::iter::once(ctrl).chain(zeros[..n - 1].iter().copied()).collect();
        return ripple_add(&src, reg, *carry);
    }
    Ok(cascade)
}

/// `flag ^= [reg >= t]` for a classical `t`, from the carry out of
/// `reg + (2^n - t)`. The chain starts above the lowest set bit of the
/// complement, whose carry is just that register bit; constant bits live in
/// `scratch` (`n - lo - 1` qubits).
pub fn geq_const(reg: &[Qubit], t: u128, flag: Qubit, scratch: &[Qubit]) -> Result<Vec<Gate>> {
    check_disjoint(&[reg, &[flag]])?;
    let n = reg.len() as u32;
    if t == 0 {
        return Ok(vec![Gate::x(flag)]);
    }
    if n == 0 || t >= 1u128 << n {
        return Ok(Vec::new());
    }
    let c = (1u128 << n) - t;
    let lo = c.trailing_zeros() as usize;
    let chain = reg.len() - lo - 1;
    if scratch.len() < chain {
        return Err(Error::ResourceCap { needed: chain, cap: scratch.len() });
    }
    check_disjoint(&[reg, &[flag], &scratch[..chain]])?;
    let mut compute = Vec::new();
    for (i, &s) in scratch[..chain].iter().enumerate() {
        if (c >> (lo + 1 + i)) & 1 == 1 {
            compute.push(Gate::x(s));
        }
    }
    let mut x = reg[lo];
    for (i, &s) in scratch[..chain].iter().enumerate() {
        let z = reg[lo + 1 + i];
        compute.extend(maj(x, s, z));
        x = z;
    }
    let mut gates = compute.clone();
    gates.push(Gate::cnot(x, flag));
    gates.extend(invert(compute));
    Ok(gates)
}

/// Classically controlled multiplication, `acc += M * v` (or `M * (v + 1/2)`
/// in half-integer mode) modulo the accumulator width. One fixed adder per
/// set bit of `M`; the sign bit of a signed `M` subtracts. `e` supplies
/// sign-extension qubits and, in half-integer mode, its last qubit is the
/// `1/2` place of the multiplicand.
#[allow(clippy::too_many_arguments)]
pub fn ccm(
    m: &ClassicalConstant,
    v: &[Qubit],
    v_fmt: FixedFormat,
    acc: &[Qubit],
    acc_fmt: FixedFormat,
    e: &[Qubit],
    carry: Qubit,
    half_integer: bool,
) -> Result<Vec<Gate>> {
    if v.len() != v_fmt.width as usize || acc.len() != acc_fmt.width as usize {
        return Err(Error::WidthMismatch("ccm register widths disagree with their formats".into()));
    }
    check_disjoint(&[v, acc, e, &[carry]])?;
    let bits = m.bits();
    let top = bits.len() - 1;
    let vfrac = v_fmt.frac + half_integer as i32;
    let w = acc.len() as i32;
    // Multiplicand bit list, low to high, before the sign extension.
    let vv_len = v.len() as i32 + half_integer as i32;
    struct Partial {
        lo: i32,
        s: i32,
        ext: usize,
        needs_half: bool,
        negative: bool,
    }
    let partials: Vec<Partial> = bits
        .iter()
        .enumerate()
        .filter(|(_, b)| **b)
        .filter_map(|(t, _)| {
            let s = fixed::partial_shift(t as u32, m.format.frac, vfrac, acc_fmt.frac);
            if s >= w {
                return None;
            }
            let lo = s.max(0);
            let upper = w - s; // multiplicand indices [lo - s, w - s)
                               // Sign copies for a signed multiplicand, idle zeros otherwise.
            let ext = (upper - vv_len).max(0) as usize;
            Some(Partial { lo, s, ext, needs_half: half_integer && s >= 0, negative: m.format.signed && t == top })
        })
        .collect();
    let phase1: Vec<&Partial> = partials.iter().filter(|p| !p.needs_half).collect();
    let phase2: Vec<&Partial> = partials.iter().filter(|p| p.needs_half).collect();
    let e1 = phase1.iter().map(|p| p.ext).max().unwrap_or(0);
    let e2 = phase2.iter().map(|p| p.ext).max().unwrap_or(0);
    let half_slot = match (phase2.is_empty(), e.len()) {
        (true, _) => None,
        (false, 0) => return Err(Error::WidthMismatch("half-integer ccm needs an e register".into())),
        (false, n) => Some(n - 1),
    };
    let ext_cap = e.len() - (half_slot.is_some() as usize);
    if e1 > e.len() || e2 > ext_cap {
        return Err(Error::WidthMismatch(format!("ccm needs {} extension qubits, e has {}", e1.max(e2 + 1), e.len())));
    }
    let sign = *v.last().expect("non-empty multiplicand");
    let mut gates = Vec::new();
    let mut live = vec![false; e.len()];
    let mut set_live = |gates: &mut Vec<Gate>, want: &[bool]| {
        for (i, (&have, &w)) in live.clone().iter().zip(want).enumerate() {
            if have != w && v_fmt.signed {
                gates.push(Gate::cnot(sign, e[i]));
                live[i] = w;
            }
        }
    };
    // The multiplicand with `ext` sign copies (or zeros) above it.
    // Index 0 is the half place in half-integer mode; partials without the
    // half start above it.
    let source = |p: &Partial| -> Vec<Qubit> {
        let mut vv: Vec<Qubit> = Vec::new();
        if half_integer {
            vv.push(e[e.len() - 1]);
        }
        vv.extend_from_slice(v);
        vv.extend_from_slice(&e[..p.ext]);
        let from = (p.lo - p.s) as usize;
        let to = (w - p.s) as usize;
        vv[from..to].to_vec()
    };
    let run = |gates: &mut Vec<Gate>, p: &Partial| -> Result<()> {
        let src = source(p);
        let mut add = ripple_add(&src, &acc[p.lo as usize..], carry)?;
        if p.negative {
            add = invert(add);
        }
        gates.extend(add);
        Ok(())
    };
    if !phase1.is_empty() {
        let want: Vec<bool> = (0..e.len()).map(|i| i < e1).collect();
        set_live(&mut gates, &want);
        for p in &phase1 {
            run(&mut gates, p)?;
        }
    }
    if let Some(h) = half_slot {
        let want: Vec<bool> = (0..e.len()).map(|i| i < e2 && i != h).collect();
        set_live(&mut gates, &want);
        gates.push(Gate::x(e[h]));
        for p in &phase2 {
            run(&mut gates, p)?;
        }
        gates.push(Gate::x(e[h]));
    }
    set_live(&mut gates, &vec![false; e.len()]);
    Ok(gates)
}

/// CCM CNOT count for an all-ones multiplier, the worst case.
pub fn ccm_cnot_bound(k: u64, r: u64) -> u64 {
    8 * (k * k + r * r + 2 * k * r + 3 * k + 3 * r - 2) + 2 * r
}

/// Raw register contents a multiplier sees for one valid input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MulSample {
    pub multiplicand: u128,
    pub multiplier: u128,
    pub prod: u128,
}

/// Operands of a shift-and-add multiply-accumulate.
#[derive(Clone, Debug)]
pub struct Multiply<'a> {
    pub multiplicand: &'a [Qubit],
    pub multiplicand_fmt: FixedFormat,
    /// Multiplier bits, low first. Constant bits turn into uncontrolled or
    /// omitted partials.
    pub multiplier: &'a [Bit],
    pub multiplier_fmt: FixedFormat,
    pub prod: &'a [Qubit],
    pub prod_fmt: FixedFormat,
    pub subtract: bool,
}

/// Gate list plus the widths it was specialised to.
#[derive(Clone, Debug)]
pub struct MulCircuit {
    pub gates: Vec<Gate>,
    /// Live accumulator width after each emitted partial.
    pub widths: Vec<u32>,
    pub scratch_used: usize,
}

struct MulPartial {
    t: u32,
    s: i32,
    negative: bool,
}

impl Multiply<'_> {
    fn partials(&self) -> Vec<MulPartial> {
        let wb = self.multiplier_fmt.width;
        let wp = self.prod_fmt.width as i32;
        (0..wb)
            .filter(|&t| self.multiplier[t as usize] != Bit::Zero)
            .map(|t| MulPartial {
                t,
                s: fixed::partial_shift(t, self.multiplier_fmt.frac, self.multiplicand_fmt.frac, self.prod_fmt.frac),
                negative: (self.multiplier_fmt.signed && t == wb - 1) ^ self.subtract,
            })
            .filter(|p| p.s < wp)
            .collect()
    }

    fn signed_width(v: i128, signed: bool) -> u32 {
        if signed {
            let m = if v < 0 { !v } else { v };
            128 - m.leading_zeros() + 1
        } else {
            128 - (v as u128).leading_zeros()
        }
    }

    /// Live widths from the running sums of every sample, or `None` when no
    /// samples are given (full width throughout).
    fn live_widths(&self, partials: &[MulPartial], samples: Option<&[MulSample]>) -> (u32, Vec<u32>) {
        let wp = self.prod_fmt.width;
        let signed = self.prod_fmt.signed;
        let Some(samples) = samples else {
            return (wp, vec![wp; partials.len()]);
        };
        let mut start = 0u32;
        let mut widths = vec![0u32; partials.len()];
        for smp in samples {
            // Physical start width: bits above it must be zero.
            let raw = smp.prod & fixed::mask(wp);
            let phys = 128 - raw.leading_zeros() + (signed && raw != 0) as u32;
            start = start.max(phys.min(wp));
        }
        for smp in samples {
            let a = self.multiplicand_fmt.decode(smp.multiplicand);
            let mut acc = self.prod_fmt.decode(smp.prod);
            for (i, p) in partials.iter().enumerate() {
                if !self.multiplier[p.t as usize].value_raw(smp.multiplier, p.t) {
                    continue;
                }
                let mut term = fixed::floor_shift(a, p.s);
                if p.negative {
                    term = -term;
                }
                acc = acc.wrapping_add(term);
                widths[i] = widths[i].max(Self::signed_width(acc, signed).min(wp));
            }
        }
        // Monotone, never below the start width.
        let mut cur = start;
        for w in widths.iter_mut() {
            cur = cur.max(*w);
            *w = cur;
        }
        (start, widths)
    }

    pub fn build(&self, carry: Qubit, scratch: &[Qubit], samples: Option<&[MulSample]>) -> Result<MulCircuit> {
        let wa = self.multiplicand_fmt.width as usize;
        let wb = self.multiplier_fmt.width as usize;
        let wp = self.prod_fmt.width as usize;
        if self.multiplicand.len() != wa || self.multiplier.len() != wb || self.prod.len() != wp {
            return Err(Error::WidthMismatch("multiply operands disagree with their formats".into()));
        }
        let ctrl_qubits: Vec<Qubit> = self
            .multiplier
            .iter()
            .filter_map(|b| match b {
                Bit::Q(q) | Bit::Not(q) => Some(*q),
                _ => None,
            })
            .collect();
        check_disjoint(&[self.multiplicand, self.prod, &[carry], scratch])?;
        if ctrl_qubits
            .iter()
            .any(|q| self.multiplicand.contains(q) || self.prod.contains(q) || scratch.contains(q) || *q == carry)
        {
            return Err(Error::Overlap("multiplier shares qubits with another operand".into()));
        }
        let partials = self.partials();
        let (start, widths) = self.live_widths(&partials, samples);
        let signed_a = self.multiplicand_fmt.signed;
        let signed_p = self.prod_fmt.signed;
        // Source bits of a partial over accumulator positions [lo, hi).
        let source = |p: &MulPartial, lo: usize, hi: usize| -> Vec<Bit> {
            (lo..hi)
                .map(|pos| {
                    let idx = pos as i64 - p.s as i64;
                    if idx < wa as i64 {
                        Bit::Q(self.multiplicand[idx as usize])
                    } else if signed_a {
                        Bit::Q(self.multiplicand[wa - 1])
                    } else {
                        Bit::Zero
                    }
                })
                .collect()
        };
        // Extra sign copies are shared by all partials; constant zeros too.
        let mut ext_max = 0usize;
        let mut zero_max = 0usize;
        let mut plan = Vec::new();
        let mut live = start as usize;
        for (p, &w) in partials.iter().zip(&widths) {
            let hi = w as usize;
            let lo = p.s.max(0) as usize;
            if lo >= hi {
                continue;
            }
            let src = source(p, lo, hi);
            let beyond = src.iter().filter(|b| **b == Bit::Zero).count();
            let sign_reps = if signed_a {
                src.iter().filter(|b| **b == Bit::Q(self.multiplicand[wa - 1])).count().saturating_sub(1)
            } else {
                0
            };
            ext_max = ext_max.max(sign_reps);
            zero_max = zero_max.max(beyond);
            plan.push((p, lo, hi, live));
            live = hi;
        }
        let need = ext_max + zero_max;
        if scratch.len() < need {
            return Err(Error::ResourceCap { needed: need, cap: scratch.len() });
        }
        let (ext, zeros) = scratch[..need].split_at(ext_max);
        let sign = self.multiplicand[wa.saturating_sub(1)];
        let mut gates: Vec<Gate> = ext.iter().map(|&q| Gate::cnot(sign, q)).collect();
        let mut emitted_widths = Vec::new();
        for (p, lo, hi, before) in plan {
            if signed_p && before > 0 {
                for i in before..hi {
                    gates.push(Gate::cnot(self.prod[before - 1], self.prod[i]));
                }
            }
            let mut src: Vec<Qubit> = Vec::with_capacity(hi - lo);
            let mut ext_iter = ext.iter();
            let mut zero_iter = zeros.iter();
            let mut sign_used = false;
            for b in source(p, lo, hi) {
                let q = match b {
                    Bit::Q(q) if q == sign && signed_a && sign_used => *ext_iter.next().expect("counted"),
                    Bit::Q(q) => {
                        sign_used |= q == sign;
                        q
                    }
                    Bit::Zero => *zero_iter.next().expect("counted"),
                    _ => unreachable!(),
                };
                src.push(q);
            }
            let ctrl = self.multiplier[p.t as usize];
            let mut add = match ctrl {
                Bit::One => ripple_add(&src, &self.prod[lo..hi], carry)?,
                Bit::Q(c) | Bit::Not(c) => controlled_add(c, &src, &self.prod[lo..hi], carry)?,
                Bit::Zero => unreachable!("filtered"),
            };
            if p.negative {
                add = invert(add);
            }
            if let Bit::Not(c) = ctrl {
                gates.push(Gate::x(c));
                gates.extend(add);
                gates.push(Gate::x(c));
            } else {
                gates.extend(add);
            }
            emitted_widths.push(hi as u32);
        }
        if signed_p && live > 0 {
            for i in live..wp {
                gates.push(Gate::cnot(self.prod[live - 1], self.prod[i]));
            }
        }
        gates.extend(ext.iter().rev().map(|&q| Gate::cnot(sign, q)));
        Ok(MulCircuit { gates, widths: emitted_widths, scratch_used: need })
    }

    /// Scratch the full-width build needs; compact builds need at most this.
    pub fn scratch_bound(&self) -> usize {
        let wa = self.multiplicand_fmt.width as i64;
        let wp = self.prod_fmt.width as i64;
        let worst = self
            .partials()
            .iter()
            .map(|p| {
                let lo = p.s.max(0) as i64;
                (wp - lo - (wa - (lo - p.s as i64)).max(0)).max(0) as usize
            })
            .max()
            .unwrap_or(0);
        worst
    }
}

impl Bit {
    fn value_raw(self, multiplier_raw: u128, t: u32) -> bool {
        match self {
            Bit::Zero => false,
            Bit::One => true,
            Bit::Q(_) | Bit::Not(_) => (multiplier_raw >> t) & 1 == 1,
        }
    }
}

/// `out += a^2` via a scratch copy of `a` used as the multiplicand.
pub fn square(
    a: &[Qubit],
    a_fmt: FixedFormat,
    out: &[Qubit],
    out_fmt: FixedFormat,
    carry: Qubit,
    scratch: &[Qubit],
    samples: Option<&[MulSample]>,
) -> Result<MulCircuit> {
    let n = a.len();
    if scratch.len() < n {
        return Err(Error::ResourceCap { needed: n, cap: scratch.len() });
    }
    let (copy, rest) = scratch.split_at(n);
    let bits: Vec<Bit> = a.iter().map(|&q| Bit::Q(q)).collect();
    let mul = Multiply {
        multiplicand: copy,
        multiplicand_fmt: a_fmt,
        multiplier: &bits,
        multiplier_fmt: a_fmt,
        prod: out,
        prod_fmt: out_fmt,
        subtract: false,
    };
    let mut inner = mul.build(carry, rest, samples)?;
    let fan: Vec<Gate> = a.iter().zip(copy).map(|(&q, &c)| Gate::cnot(q, c)).collect();
    let mut gates = fan.clone();
    gates.append(&mut inner.gates);
    gates.extend(fan);
    Ok(MulCircuit { gates, widths: inner.widths, scratch_used: n + inner.scratch_used })
}

/// Evaluate a permutation gate list on a basis key; panics on superposing
/// gates, which qarith never emits.
pub fn run_basis(gates: &[Gate], key: u128) -> u128 {
    gates.iter().fold(key, |k, g| g.apply_basis(k).expect("qarith emits permutation gates only"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(key: u128, qs: &[Qubit]) -> u128 {
        qs.iter().enumerate().fold(0, |v, (i, &q)| v | (((key >> q) & 1) << i))
    }

    fn write(key: u128, qs: &[Qubit], v: u128) -> u128 {
        qs.iter().enumerate().fold(key, |k, (i, &q)| (k & !(1 << q)) | (((v >> i) & 1) << q))
    }

    #[test]
    fn adder_costs() {
        let g = ripple_add(&[0, 1, 2], &[3, 4, 5], 6).unwrap();
        assert_eq!(g.iter().map(Gate::cnot_cost).sum::<u64>(), 48);
        let g = controlled_add(7, &[0, 1, 2], &[3, 4, 5], 6).unwrap();
        assert_eq!(g.iter().map(Gate::cnot_cost).sum::<u64>(), 66);
    }

    #[test]
    fn three_plus_five_wraps() {
        let src = [0, 1, 2];
        let dst = [3, 4, 5];
        let g = ripple_add(&src, &dst, 6).unwrap();
        let k = write(write(0, &src, 3), &dst, 5);
        let out = run_basis(&g, k);
        assert_eq!(read(out, &dst), 0);
        assert_eq!(read(out, &src), 3);
    }

    #[test]
    fn sign_extend_matches_example() {
        let m = [0, 1, 2];
        let e = [3, 4];
        let k = write(0, &m, 0b110);
        let out = run_basis(&sign_extend(&e, &m), k);
        assert_eq!(read(out, &e), 0b11);
    }
}
