//! The fixed-point program that evaluates one angle plan on the `2^j`
//! possible prefixes of a symmetric (`mu = -1/2`) state. The circuit builder
//! in `kw1d` emits exactly these steps and the quantised recursion oracle
//! evaluates them with the integer semantics of [`crate::fixed`], so the two
//! agree bit for bit.
//!
//! At depth `j` with prefix `Q`, `mu_j = -(2Q+1)/2^(j+1)` and
//! `mu' = mu_j + 1/2 = V/2^(j+1)` with `V = 2^j - 2Q - 1` odd. Every branch
//! feeds a non-negative argument below `1/2` to the Horner iterates:
//!
//! | branch | argument `A` (units of `2^-(j+1)`) | angle |
//! |--------|------------------------------------|-------|
//! | mid    | `abs(V) * 2^s`                     | `1/2 + sign(mu') x A` |
//! | upper  | `2Q + 1` (= `-mu_j`)               | `x` |
//! | lower  | `2^(j+1) - 2Q - 1` (= `mu_j + 1`)  | `1 - x` |
//!
//! The mid shift `s` lifts the small mid arguments to the top of the register
//! so that the square keeps `b` significant bits.

use serde::Serialize;

use super::angle::{grid_mu, AngleApproxPlan, Regime, GRID_POINTS};
use crate::error::{domain, Result};
use crate::fixed::{self, ClassicalConstant, FixedFormat};

/// Above this depth the program is certified on the dense grid instead of
/// by enumerating every prefix.
pub const ENUMERATION_LIMIT: u32 = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Upper,
    Mid,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProgramLayout {
    pub j: u32,
    pub b: u32,
    /// Unsigned, `j` bits, all fractional: `t = 2A` (mid: `2^(s+1) A`). The
    /// low bit is the constant augmentation qubit, the rest are (possibly
    /// reflected) state qubits.
    pub arg: FixedFormat,
    /// Unsigned `b` bits holding `t^2 < 1`.
    pub sq: FixedFormat,
    /// Signed `b + 1` bit Horner iterates.
    pub x: FixedFormat,
    /// `b` bit angle register; arithmetic on it is signed, its reading mod 1.
    pub angle: FixedFormat,
}

impl ProgramLayout {
    fn new(j: u32, b: u32, x_int_bits: i32) -> ProgramLayout {
        ProgramLayout {
            j,
            b,
            arg: FixedFormat::unsigned(j, j as i32),
            sq: FixedFormat::unsigned(b, b as i32),
            x: FixedFormat::signed(b + 1, b as i32 + 1 - x_int_bits),
            angle: FixedFormat::signed(b, b as i32),
        }
    }
}

fn fixed_to_f64(units: i128, frac: i32) -> f64 {
    units as f64 * (-(frac as f64)).exp2()
}

/// Register contents after each step for a single prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub branch: Branch,
    pub arg: u128,
    pub sq: u128,
    /// `x_1 .. x_D` raw.
    pub iterates: Vec<u128>,
    /// Mid branch only: angle register after the signed final product,
    /// before the half-turn offset.
    pub product: u128,
    pub angle: u128,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AngleProgram {
    pub plan: AngleApproxPlan,
    pub layout: ProgramLayout,
    /// Quantised and calibrated iterate constants, `D + 1` each. The mid set
    /// is expressed in the shifted argument `t = A * 2^mid_shift`.
    pub mid: Vec<ClassicalConstant>,
    pub outer: Vec<ClassicalConstant>,
    /// Mid arguments never use their top `mid_shift` bits; the circuit
    /// rotates them up by that much under the mid label.
    pub mid_shift: u32,
    /// Odd start value (angle units) of the mid product; absorbs the floor
    /// bias of its partials and lets `-neg` ride on bit 0.
    pub product_offset: i128,
    /// Units added to `a'_0` so that no outer iterate dips below zero.
    pub outer_bump: i128,
    pub iterations: usize,
    /// Worst distance between emulated angles and the plan, over every prefix
    /// (`None` above the enumeration limit).
    pub emulated_error: Option<f64>,
}

impl AngleProgram {
    pub fn compile(plan: &AngleApproxPlan, j: u32) -> Result<AngleProgram> {
        if !matches!(plan.regime, Regime::Hi | Regime::Intermediate) {
            return domain(format!("{:?} levels need no angle arithmetic", plan.regime));
        }
        if j == 0 || j > 60 {
            return domain(format!("angle programs cover depths 1..=60, got {j}"));
        }
        // A degree-0 plan still runs one iterate, with a zero top coefficient.
        let d = plan.iterations().max(1);
        let shift = Self::mid_shift_for(plan, j);
        let first = Self::x_int_bits(plan, j, d, shift);
        let mut best: Option<AngleProgram> = None;
        for int_bits in first..=first + 2 {
            let prog = Self::quantise(plan, j, d, shift, int_bits)?;
            let better = match (&best, prog.emulated_error) {
                (None, _) => true,
                (Some(b), Some(e)) => e < b.emulated_error.unwrap_or(f64::INFINITY),
                (Some(_), None) => false,
            };
            if better {
                best = Some(prog);
            }
            if j > ENUMERATION_LIMIT {
                break;
            }
        }
        Ok(best.expect("at least one candidate"))
    }

    fn thresholds_for(plan: &AngleApproxPlan, j: u32) -> (u64, u64) {
        if plan.regime == Regime::Hi {
            return (0, 1u64 << j);
        }
        let scale = ((j + 1) as f64).exp2();
        let c1 = (0.5 - plan.mu_mid) * scale;
        let c2 = (0.5 + plan.mu_mid) * scale;
        let t_up = ((c1 - 1.0) / 2.0).ceil().max(0.0) as u64;
        let t_lo = (((c2 - 1.0) / 2.0).floor() + 1.0).min((1u64 << j) as f64) as u64;
        (t_up, t_lo)
    }

    /// Leading zero bits shared by every mid-branch `|V|`.
    fn mid_shift_for(plan: &AngleApproxPlan, j: u32) -> u32 {
        let (t_up, t_lo) = Self::thresholds_for(plan, j);
        if t_up >= t_lo {
            return 0;
        }
        let v = |q: u64| ((1i128 << j) - 2 * q as i128 - 1).unsigned_abs();
        let widest = v(t_up).max(v(t_lo - 1));
        j - (128 - widest.leading_zeros())
    }

    /// Mid coefficients in `t = 2^(s+1) A`, folding in the final `A` factor.
    fn scaled_mid(plan: &AngleApproxPlan, d: usize, shift: u32) -> Vec<f64> {
        let s = shift as i32 + 1;
        (0..=d)
            .map(|n| plan.coeffs_a.get(n).copied().unwrap_or(0.0) * (-(s * (2 * n as i32 + 1)) as f64).exp2())
            .collect()
    }

    /// Outer coefficients in `t = 2A`.
    fn scaled_outer(plan: &AngleApproxPlan, d: usize) -> Vec<f64> {
        (0..=d).map(|n| plan.coeffs_ap.get(n).copied().unwrap_or(0.0) * (-(2 * n as i32) as f64).exp2()).collect()
    }

    /// Integer bits (sign included) the iterates need, from exact arithmetic.
    fn x_int_bits(plan: &AngleApproxPlan, j: u32, d: usize, shift: u32) -> i32 {
        let mid = Self::scaled_mid(plan, d, shift);
        let outer = Self::scaled_outer(plan, d);
        let mut peak = mid.iter().chain(&outer).fold(0.0f64, |p, c| p.max(c.abs()));
        let mut visit = |arg: f64, coeffs: &[f64]| {
            let a2 = arg * arg;
            let mut x = coeffs[d];
            for n in (0..d).rev() {
                peak = peak.max((x * a2).abs());
                x = coeffs[n] + x * a2;
                peak = peak.max(x.abs());
            }
        };
        let gain = ((shift + 1) as f64).exp2();
        let is_mid = |mp: f64| plan.regime == Regime::Hi || mp.abs() <= plan.mu_mid;
        let mut sample = |mp: f64| {
            if is_mid(mp) {
                visit(mp.abs() * gain, &mid);
            } else {
                visit(1.0 - 2.0 * mp.abs(), &outer);
            }
        };
        if j <= ENUMERATION_LIMIT {
            let scale = ((j + 1) as f64).exp2();
            for q in 0..(1u64 << j) {
                sample(((1u64 << j) as f64 - 2.0 * q as f64 - 1.0) / scale);
            }
        } else {
            (0..GRID_POINTS).for_each(|i| sample(grid_mu(i) + 0.5));
        }
        let bound = peak * 1.125 + (-(plan.b as f64)).exp2();
        (bound.log2().ceil() as i32 + 1).max(1)
    }

    fn quantise(plan: &AngleApproxPlan, j: u32, d: usize, shift: u32, x_int_bits: i32) -> Result<AngleProgram> {
        let layout = ProgramLayout::new(j, plan.b, x_int_bits);
        let mid_f = Self::scaled_mid(plan, d, shift);
        let outer_f = Self::scaled_outer(plan, d);
        let q = |c: &[f64]| -> Result<Vec<ClassicalConstant>> {
            let (lo, hi) = (layout.x.min_units() as f64 * layout.x.ulp(), layout.x.max_units() as f64 * layout.x.ulp());
            c.iter().map(|&v| ClassicalConstant::new(v.clamp(lo, hi), layout.x)).collect()
        };
        let mut prog = AngleProgram {
            plan: plan.clone(),
            layout,
            mid: q(&mid_f)?,
            outer: q(&outer_f)?,
            mid_shift: shift,
            product_offset: 1,
            outer_bump: 0,
            iterations: d,
            emulated_error: None,
        };
        if j > ENUMERATION_LIMIT {
            return Ok(prog);
        }
        prog.calibrate(&mid_f, &outer_f)?;
        if plan.regime == Regime::Intermediate {
            let lowest = (0..(1u64 << j))
                .filter(|&q| prog.branch(q) != Branch::Mid)
                .map(|q| layout.x.decode(*prog.trace(q).iterates.last().expect("d >= 1")))
                .min();
            if let Some(low) = lowest.filter(|&l| l < 0) {
                let units = prog.outer[0].units - low;
                prog.outer[0] = ClassicalConstant::from_units(units, layout.x)?;
                prog.outer_bump = -low;
            }
        }
        prog.emulated_error = Some(prog.worst_error());
        Ok(prog)
    }

    /// Shift each constant by the mean floor bias of the iterate it closes,
    /// measured over every prefix of its branch, then pick the product offset.
    fn calibrate(&mut self, mid_f: &[f64], outer_f: &[f64]) -> Result<()> {
        let l = self.layout;
        let d = self.iterations;
        let units = l.j as i32;
        let prefixes: Vec<(u64, Branch, f64)> = (0..(1u64 << l.j))
            .map(|q| {
                let branch = self.branch(q);
                (q, branch, fixed_to_f64(self.arg_units(q) as i128, units))
            })
            .collect();
        let ideal = |coeffs: &[f64], t: f64, n: usize| {
            let t2 = t * t;
            (1..=n).fold(coeffs[d], |x, m| x * t2 + coeffs[d - m])
        };
        for n in 1..=d {
            for mid in [true, false] {
                let coeffs = if mid { mid_f } else { outer_f };
                let (sum, count) = prefixes.iter().filter(|(_, br, _)| (*br == Branch::Mid) == mid).fold(
                    (0.0, 0usize),
                    |(s, c), &(q, _, t)| {
                        let got = l.x.to_f64(self.trace(q).iterates[n - 1]);
                        (s + (ideal(coeffs, t, n) - got) / l.x.ulp(), c + 1)
                    },
                );
                if count == 0 {
                    continue;
                }
                let fix = (sum / count as f64).round() as i128;
                let set = if mid { &mut self.mid } else { &mut self.outer };
                let c = &set[d - n];
                let units = (c.units + fix).clamp(l.x.min_units(), l.x.max_units());
                set[d - n] = ClassicalConstant::from_units(units, l.x)?;
            }
        }
        let (sum, count) =
            prefixes.iter().filter(|(_, br, _)| *br == Branch::Mid).fold((0.0, 0usize), |(s, c), &(q, _, t)| {
                let x = *self.trace(q).iterates.last().expect("d >= 1");
                let p = l.angle.decode(fixed::mul_acc(0, l.angle, x, l.x, self.arg_units(q), l.arg, false));
                let want = t * ideal(mid_f, t, d) * (l.b as f64).exp2();
                (s + want - p as f64, c + 1)
            });
        if count > 0 {
            let r = sum / count as f64;
            self.product_offset = (2.0 * ((r - 1.0) / 2.0).round() + 1.0).max(1.0) as i128;
        }
        Ok(())
    }

    fn worst_error(&self) -> f64 {
        let ulp = (-(self.layout.b as f64)).exp2();
        (0..(1u64 << self.layout.j))
            .map(|q| {
                let mu = -((2 * q + 1) as f64) / ((self.layout.j + 1) as f64).exp2();
                let diff = (self.angle_raw(q) as f64 * ulp - self.plan.eval(mu)).abs();
                diff.min(1.0 - diff)
            })
            .fold(0.0, f64::max)
    }

    /// `(T_up, T_lo)`: the prefix is in the upper branch iff `Q < T_up` and in
    /// the lower branch iff `Q >= T_lo`. Boundary ties land in the middle.
    pub fn label_thresholds(&self) -> (u64, u64) {
        Self::thresholds_for(&self.plan, self.layout.j)
    }

    pub fn branch(&self, q: u64) -> Branch {
        let (t_up, t_lo) = self.label_thresholds();
        if q < t_up {
            Branch::Upper
        } else if q >= t_lo {
            Branch::Lower
        } else {
            Branch::Mid
        }
    }

    pub fn arg_units(&self, q: u64) -> u128 {
        let j = self.layout.j;
        let two_q1 = 2 * q as i128 + 1;
        let units = match self.branch(q) {
            Branch::Mid => ((1i128 << j) - two_q1).abs() << self.mid_shift,
            Branch::Upper => two_q1,
            Branch::Lower => (1i128 << (j + 1)) - two_q1,
        };
        units as u128
    }

    pub fn coefficients(&self, branch: Branch) -> &[ClassicalConstant] {
        match branch {
            Branch::Mid => &self.mid,
            _ => &self.outer,
        }
    }

    pub fn trace(&self, q: u64) -> Trace {
        let l = &self.layout;
        let branch = self.branch(q);
        let arg = self.arg_units(q);
        let sq = fixed::mul_acc(0, l.sq, arg, l.arg, arg, l.arg, false);
        let c = self.coefficients(branch);
        let d = self.iterations;
        let mut iterates = Vec::with_capacity(d);
        let mut x = fixed::mul_acc(0, l.x, sq, l.sq, c[d].raw(), l.x, false);
        x = fixed::add_const(x, l.x, &c[d - 1]);
        iterates.push(x);
        for n in 2..=d {
            x = fixed::mul_acc(0, l.x, sq, l.sq, x, l.x, false);
            x = fixed::add_const(x, l.x, &c[d - n]);
            iterates.push(x);
        }
        let half = 1u128 << (l.b - 1);
        let mask = fixed::mask(l.b);
        let (product, angle) = match branch {
            Branch::Mid => {
                // mu' < 0 exactly when 2Q + 1 > 2^j; then the product is
                // negated via the complement trick: !(e - 1 + p) = -(e + p).
                let neg = (2 * q as u128 + 1) > (1u128 << l.j);
                let start = l.angle.encode(self.product_offset - neg as i128);
                let mut p = fixed::mul_acc(start, l.angle, x, l.x, arg, l.arg, false);
                if neg {
                    p = !p & mask;
                }
                (p, (p + half) & mask)
            }
            Branch::Upper | Branch::Lower => {
                let t = fixed::floor_shift(l.x.decode(x), l.b as i32 - l.x.frac);
                let t = (t as u128) & mask;
                let angle = if branch == Branch::Upper { t } else { mask - t };
                (0, angle)
            }
        };
        Trace { branch, arg, sq, iterates, product, angle }
    }

    pub fn angle_raw(&self, q: u64) -> u128 {
        self.trace(q).angle
    }

    /// Angle as a fraction of `pi/2`.
    pub fn angle_bar(&self, q: u64) -> f64 {
        self.angle_raw(q) as f64 * (-(self.layout.b as f64)).exp2()
    }
}
