//! Coordinate shearing of a product of 1D states.
//!
//! For `i = 0 .. N-2` the accumulator `[f, n_i]` (an `r`-bit fraction below
//! the `k`-bit coordinate) collects `sum_{j>i} M_ij (m_j + 1/2)`, rounded half
//! up, and a second pass over `j` in reverse clears `f`. Everything is modulo
//! `2^k`.
//!
//! Rounding on the top fraction bit after the sum is the same as starting the
//! fraction at `1/2` and truncating, so the circuit seeds `f` with an X
//! instead of running a controlled increment into `n_i`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, Qubit, RegisterMap, ResourceReport, Role};
use crate::error::{domain, Error, Result};
use crate::fixed::{self, ClassicalConstant, FixedFormat};
use crate::qarith;
use crate::reference_math::{
    exact_xi_state, ldlt, signed_coord, CovarianceSpec, GaussianSpec1D, LdltFactors, StateVectorDense,
};

/// Fraction and extension width that keeps every rounded coordinate within
/// one lattice step of the exact one.
pub fn frac_bits(n: usize, k: u32) -> Result<u32> {
    if n < 2 {
        return domain(format!("shearing needs N >= 2, got {n}"));
    }
    Ok(k.saturating_sub(1) + (n - 1).next_power_of_two().trailing_zeros())
}

pub fn shear_cnot_bound(n: u64, k: u64, r: u64) -> u64 {
    (n * n - n) * (4 * k * k + 8 * r * r + 8 * k * r + 26 * r + 11 * k - 8)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShearPlan {
    pub n: usize,
    pub k: u32,
    pub r: u32,
    /// Row-major, upper unitriangular.
    pub m_mat: Vec<f64>,
    /// Added to coordinate `i` before rounding; shifts the centre of the
    /// output away from the `mu = -1/2` cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_offsets: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub half_integer: bool,
}

fn yes() -> bool {
    true
}

impl ShearPlan {
    pub fn new(m_mat: &DMatrix<f64>, k: u32, r: u32) -> Result<Self> {
        let n = m_mat.nrows();
        if m_mat.ncols() != n {
            return domain(format!("shear matrix is {}x{}", n, m_mat.ncols()));
        }
        let plan = ShearPlan {
            n,
            k,
            r,
            m_mat: (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|ij| m_mat[ij]).collect(),
            mean_offsets: None,
            half_integer: true,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn with_offsets(mut self, offsets: Vec<f64>) -> Result<Self> {
        self.mean_offsets = Some(offsets);
        self.validate()?;
        Ok(self)
    }

    /// Plan for `Sigma = M D M^T`, plus the 1D variances `D`. Non-centred
    /// means become rounding offsets `mu_i + 1/2`.
    pub fn from_covariance(spec: &CovarianceSpec, k: u32) -> Result<(Self, LdltFactors)> {
        let f = ldlt(spec)?;
        let r = frac_bits(spec.dims(), k)?.max(1);
        let mut plan = ShearPlan::new(&f.m_mat, k, r)?;
        if spec.mu_vec.iter().any(|&mu| mu != -0.5) {
            plan = plan.with_offsets(spec.mu_vec.iter().map(|mu| mu + 0.5).collect())?;
        }
        Ok((plan, f))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return domain(format!("shearing needs N >= 2, got {}", self.n));
        }
        if self.k == 0 || self.r == 0 {
            return domain(format!("k and r must be positive, got k={} r={}", self.k, self.r));
        }
        if self.k + self.r > 60 {
            return domain(format!("accumulator of {} bits is too wide", self.k + self.r));
        }
        let need = frac_bits(self.n, self.k)?;
        if self.r < need {
            return domain(format!("r={} is below the required {need} fractional bits", self.r));
        }
        if self.m_mat.len() != self.n * self.n {
            return domain(format!("{} matrix entries for N={}", self.m_mat.len(), self.n));
        }
        for i in 0..self.n {
            for j in 0..=i {
                let want = if i == j { 1.0 } else { 0.0 };
                if (self.entry(i, j) - want).abs() > 1e-12 {
                    return domain(format!("shear matrix not upper unitriangular at ({i}, {j})"));
                }
            }
            for j in i + 1..self.n {
                self.multiplier(i, j)?;
            }
        }
        if let Some(o) = &self.mean_offsets {
            if o.len() != self.n {
                return domain(format!("{} offsets for N={}", o.len(), self.n));
            }
            for i in 0..self.n {
                self.offset(i)?;
            }
        }
        Ok(())
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m_mat[i * self.n + j]
    }

    /// Accumulator `[f, n_i]`.
    pub fn acc_format(&self) -> FixedFormat {
        FixedFormat::signed(self.k + self.r, self.r as i32)
    }

    fn frac_format(&self) -> FixedFormat {
        FixedFormat::unsigned(self.r, self.r as i32)
    }

    fn coord_format(&self) -> FixedFormat {
        FixedFormat::signed(self.k, 0)
    }

    /// `M_ij` rounded to `r` fractional bits.
    pub fn multiplier(&self, i: usize, j: usize) -> Result<ClassicalConstant> {
        ClassicalConstant::new(self.entry(i, j), self.acc_format())
    }

    fn offset(&self, i: usize) -> Result<Option<ClassicalConstant>> {
        let Some(o) = self.mean_offsets.as_ref().map(|o| o[i]) else {
            return Ok(None);
        };
        let c = ClassicalConstant::new(o, self.acc_format())?;
        Ok((!c.is_zero()).then_some(c))
    }

    /// Whole lattice steps added to the last coordinate, which is never
    /// sheared.
    fn last_shift(&self) -> Result<i128> {
        Ok(self.offset(self.n - 1)?.map_or(0, |c| fixed::floor_shift(c.units, -(self.r as i32)) + half_up(&c, self.r)))
    }

    pub fn qubit_count(&self) -> usize {
        self.n * self.k as usize + 2 * self.r as usize + 1 + self.offset_scratch()
    }

    fn offset_scratch(&self) -> usize {
        if self.mean_offsets.is_some() {
            (self.k + self.r) as usize
        } else {
            0
        }
    }
}

fn half_up(c: &ClassicalConstant, r: u32) -> i128 {
    (c.units >> (r - 1)) & 1
}

fn wrap(v: i128, k: u32) -> i64 {
    fixed::sign_extend((v as u128) & fixed::mask(k), k) as i64
}

/// Bit-exact classical model of [`build_shear`].
pub fn classical_shear_oracle(plan: &ShearPlan, m_vec: &[i64]) -> Result<Vec<i64>> {
    plan.validate()?;
    if m_vec.len() != plan.n {
        return domain(format!("{} coordinates for N={}", m_vec.len(), plan.n));
    }
    let half = 1i64 << (plan.k - 1);
    if let Some(&bad) = m_vec.iter().find(|&&m| m < -half || m >= half) {
        return domain(format!("coordinate {bad} outside a {}-bit register", plan.k));
    }
    let (acc_fmt, v_fmt) = (plan.acc_format(), plan.coord_format());
    let mut out = m_vec.to_vec();
    for i in 0..plan.n - 1 {
        let mut acc = acc_fmt.encode((m_vec[i] as i128) << plan.r);
        for (j, &mj) in m_vec.iter().enumerate().skip(i + 1) {
            let mij = plan.multiplier(i, j)?;
            acc = fixed::ccm_acc(acc, acc_fmt, &mij, v_fmt.encode(mj as i128), v_fmt, plan.half_integer);
        }
        if let Some(o) = plan.offset(i)? {
            acc = fixed::add_const(acc, acc_fmt, &o);
        }
        let round = (acc >> (plan.r - 1)) & 1;
        out[i] = wrap((acc >> plan.r) as i128 + round as i128, plan.k);
    }
    out[plan.n - 1] = wrap(m_vec[plan.n - 1] as i128 + plan.last_shift()?, plan.k);
    Ok(out)
}

/// Unrounded image `m_i + o_i + sum_{j>i} M_ij (m_j + 1/2)` with the exact
/// matrix, before any wrap.
pub fn exact_shear(plan: &ShearPlan, m_vec: &[i64]) -> Vec<f64> {
    let h = if plan.half_integer { 0.5 } else { 0.0 };
    (0..plan.n)
        .map(|i| {
            let o = plan.mean_offsets.as_ref().map_or(0.0, |o| o[i]);
            m_vec[i] as f64 + o + (i + 1..plan.n).map(|j| plan.entry(i, j) * (m_vec[j] as f64 + h)).sum::<f64>()
        })
        .collect()
}

fn split_index(idx: u64, n: usize, k: u32) -> Vec<i64> {
    let mask = (1u64 << k) - 1;
    (0..n).map(|i| signed_coord((idx >> (i as u32 * k)) & mask, k)).collect()
}

fn join_index(coords: &[i64], k: u32) -> u64 {
    let mask = (1u64 << k) - 1;
    coords.iter().enumerate().fold(0, |acc, (i, &c)| acc | ((c as u64 & mask) << (i as u32 * k)))
}

/// Oracle on a packed basis index; coordinate `i` is bits `[i k, (i+1) k)`.
pub fn oracle_index(plan: &ShearPlan, idx: u64) -> Result<u64> {
    Ok(join_index(&classical_shear_oracle(plan, &split_index(idx, plan.n, plan.k))?, plan.k))
}

pub struct ShearLayout {
    pub coords: Vec<Vec<Qubit>>,
    pub frac: Vec<Qubit>,
    pub ext: Vec<Qubit>,
    pub carry: Qubit,
    pub scratch: Vec<Qubit>,
}

fn allocate(plan: &ShearPlan) -> Result<(RegisterMap, ShearLayout)> {
    let mut m = RegisterMap::new();
    let coords = (0..plan.n)
        .map(|i| m.add(&format!("m{i}"), plan.k as usize, Role::State).map(|r| r.qubits()))
        .collect::<Result<Vec<_>>>()?;
    let frac = m.add("f", plan.r as usize, Role::Fraction)?.qubits();
    let ext = m.add("e", plan.r as usize, Role::Extension)?.qubits();
    let carry = m.add("carry", 1, Role::Carry)?.qubit(0);
    let scratch = match plan.offset_scratch() {
        0 => Vec::new(),
        w => m.add("scratch", w, Role::Scratch)?.qubits(),
    };
    Ok((m, ShearLayout { coords, frac, ext, carry, scratch }))
}

/// The shear circuit. Every ancilla starts and ends in `|0>`.
pub fn build_shear(plan: &ShearPlan) -> Result<(Circuit, ResourceReport)> {
    plan.validate()?;
    let (map, lay) = allocate(plan)?;
    let (acc_fmt, frac_fmt, v_fmt) = (plan.acc_format(), plan.frac_format(), plan.coord_format());
    let mut circuit = Circuit::new(map);
    let top = lay.frac[plan.r as usize - 1];
    for i in 0..plan.n - 1 {
        let acc: Vec<Qubit> = lay.frac.iter().chain(&lay.coords[i]).copied().collect();
        circuit.push(Gate::x(top));
        for j in i + 1..plan.n {
            let mij = plan.multiplier(i, j)?;
            circuit.append_gates(qarith::ccm(
                &mij,
                &lay.coords[j],
                v_fmt,
                &acc,
                acc_fmt,
                &lay.ext,
                lay.carry,
                plan.half_integer,
            )?);
        }
        let offset = plan.offset(i)?;
        if let Some(o) = &offset {
            circuit.append_gates(qarith::add_const(&acc, acc_fmt, o, lay.carry, &lay.scratch)?);
        }
        // The fraction is a function of m_{j>i} alone, so it can be cleared
        // with the fraction-only inverse.
        if let Some(o) = &offset {
            let units = (-o.units).rem_euclid(1 << plan.r);
            let back = ClassicalConstant::from_units(units, frac_fmt)?;
            circuit.append_gates(qarith::add_const(&lay.frac, frac_fmt, &back, lay.carry, &lay.scratch)?);
        }
        for j in (i + 1..plan.n).rev() {
            let mij = plan.multiplier(i, j)?;
            let fwd =
                qarith::ccm(&mij, &lay.coords[j], v_fmt, &lay.frac, frac_fmt, &lay.ext, lay.carry, plan.half_integer)?;
            circuit.append_gates(qarith::invert(fwd));
        }
        circuit.push(Gate::x(top));
    }
    let shift = plan.last_shift()?;
    if shift != 0 {
        let c = ClassicalConstant::from_units(wrap(shift, plan.k) as i128, v_fmt)?;
        circuit.append_gates(qarith::add_const(&lay.coords[plan.n - 1], v_fmt, &c, lay.carry, &lay.scratch)?);
    }
    circuit.cancel_inverse_pairs();
    let report = circuit.cnot_count();
    Ok((circuit, report))
}

/// Apply the oracle permutation to a dense `N k`-qubit state.
pub fn shear_state(state: &StateVectorDense, plan: &ShearPlan) -> Result<StateVectorDense> {
    plan.validate()?;
    let qubits = plan.n * plan.k as usize;
    if state.qubit_count != qubits {
        return Err(Error::QubitMismatch { expected: qubits, got: state.qubit_count });
    }
    let mut out = vec![None; state.len()];
    for (idx, a) in state.amplitudes.iter().enumerate() {
        let to = oracle_index(plan, idx as u64)? as usize;
        if out[to].replace(*a).is_some() {
            return Err(Error::Collision(to as u128));
        }
    }
    Ok(StateVectorDense { amplitudes: out.into_iter().map(|a| a.unwrap_or_default()).collect(), qubit_count: qubits })
}

/// Tensor product with `states[0]` on the lowest qubits.
pub fn product_state(states: &[StateVectorDense]) -> Result<StateVectorDense> {
    let qubits: usize = states.iter().map(|s| s.qubit_count).sum();
    if states.is_empty() || qubits > 30 {
        return domain(format!("product of {} states on {qubits} qubits", states.len()));
    }
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    let mut shift = 0;
    for s in states {
        let mut next = vec![Complex64::default(); amps.len() << s.qubit_count];
        for (hi, b) in s.amplitudes.iter().enumerate() {
            for (lo, a) in amps.iter().enumerate() {
                next[lo | (hi << shift)] = a * b;
            }
        }
        shift += s.qubit_count;
        amps = next;
    }
    Ok(StateVectorDense { amplitudes: amps, qubit_count: qubits })
}

/// Symmetric 1D states of widths `sqrt(D_j)`, sheared by the covariance's
/// plan; the state the full pipeline prepares up to 1D input quality.
pub fn sheared_gaussian(spec: &CovarianceSpec, k: u32, cap: usize) -> Result<(ShearPlan, StateVectorDense)> {
    let qubits = spec.dims() * k as usize;
    if qubits > cap {
        return Err(Error::ResourceCap { needed: qubits, cap });
    }
    let (plan, f) = ShearPlan::from_covariance(spec, k)?;
    let inputs = f
        .sigma_sq
        .iter()
        .map(|s2| exact_xi_state(GaussianSpec1D::symmetric(s2.sqrt())?, k))
        .collect::<Result<Vec<_>>>()?;
    let state = shear_state(&product_state(&inputs)?, &plan)?;
    Ok((plan, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_widths() {
        assert_eq!(frac_bits(5, 4).unwrap(), 5);
        assert_eq!(frac_bits(2, 2).unwrap(), 1);
        assert_eq!(frac_bits(9, 3).unwrap(), 5);
        assert_eq!(frac_bits(3, 1).unwrap(), 1);
        assert!(frac_bits(1, 3).is_err());
    }

    #[test]
    fn bounds() {
        assert_eq!(shear_cnot_bound(2, 2, 1), 160);
        assert_eq!(shear_cnot_bound(3, 2, 2), 876);
    }

    #[test]
    fn product_ordering() {
        let a = StateVectorDense::from_real(vec![1.0, 0.0]).unwrap();
        let b = StateVectorDense::from_real(vec![0.0, 1.0]).unwrap();
        let p = product_state(&[a, b]).unwrap();
        assert_eq!(p.amplitudes[2].re, 1.0);
    }

    #[test]
    fn half_rounds_up() {
        let plan = ShearPlan::new(&DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]), 2, 1).unwrap();
        assert_eq!(classical_shear_oracle(&plan, &[1, -2]).unwrap(), vec![0, -2]);
    }
}
