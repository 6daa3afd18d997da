//! Two's-complement fixed-point formats and the bit-exact classical
//! semantics of every arithmetic primitive the circuit builders emit.
//!
//! Values live in raw registers of `width` bits; `frac` places the binary
//! point. All arithmetic wraps modulo `2^width` of the destination register.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Register format: `width` qubits, binary point `frac` places from the right.
/// `frac` may exceed `width` (or be negative) for registers whose values are
/// known to be small (or coarse), so `int_bits` can be negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedFormat {
    pub width: u32,
    pub frac: i32,
    pub signed: bool,
}

impl FixedFormat {
    pub fn new(int_bits: i32, frac: i32, signed: bool) -> Result<Self> {
        let width = int_bits + frac;
        if width < 1 {
            return domain("fixed-point format needs at least one bit");
        }
        if width > 120 {
            return domain("fixed-point format wider than 120 bits");
        }
        Ok(FixedFormat { width: width as u32, frac, signed })
    }

    pub fn signed(width: u32, frac: i32) -> FixedFormat {
        FixedFormat { width, frac, signed: true }
    }

    pub fn unsigned(width: u32, frac: i32) -> FixedFormat {
        FixedFormat { width, frac, signed: false }
    }

    pub fn int_bits(&self) -> i32 {
        self.width as i32 - self.frac
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn ulp(&self) -> f64 {
        (-(self.frac as f64)).exp2()
    }

    /// Raw register contents interpreted as integer units of `ulp`.
    pub fn decode(&self, raw: u128) -> i128 {
        let w = self.width();
        let raw = raw & mask(w);
        if self.signed {
            sign_extend(raw, w)
        } else {
            raw as i128
        }
    }

    pub fn encode(&self, units: i128) -> u128 {
        (units as u128) & mask(self.width())
    }

    pub fn to_f64(&self, raw: u128) -> f64 {
        self.decode(raw) as f64 * self.ulp()
    }

    pub fn min_units(&self) -> i128 {
        if self.signed {
            -(1i128 << (self.width() - 1))
        } else {
            0
        }
    }

    pub fn max_units(&self) -> i128 {
        if self.signed {
            (1i128 << (self.width() - 1)) - 1
        } else {
            (1i128 << self.width()) - 1
        }
    }
}

/// A classical number rounded to nearest in a fixed-point format. The
/// rounding is kept so callers can audit representation error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalConstant {
    pub value: f64,
    pub format: FixedFormat,
    pub units: i128,
    pub rounding_error: f64,
}

impl ClassicalConstant {
    pub fn new(value: f64, format: FixedFormat) -> Result<Self> {
        if !value.is_finite() {
            return domain("constant must be finite");
        }
        let scaled = value * (format.frac as f64).exp2();
        let units = scaled.round();
        if units < format.min_units() as f64 || units > format.max_units() as f64 {
            return domain(format!(
                "constant {value} does not fit a {}-bit format with {} fractional bits",
                format.width, format.frac
            ));
        }
        let units = units as i128;
        Ok(ClassicalConstant { value, format, units, rounding_error: units as f64 * format.ulp() - value })
    }

    pub fn from_units(units: i128, format: FixedFormat) -> Result<Self> {
        if units < format.min_units() || units > format.max_units() {
            return domain(format!("{units} units out of range for format"));
        }
        Ok(ClassicalConstant { value: units as f64 * format.ulp(), format, units, rounding_error: 0.0 })
    }

    pub fn raw(&self) -> u128 {
        self.format.encode(self.units)
    }

    pub fn represented(&self) -> f64 {
        self.units as f64 * self.format.ulp()
    }

    /// Two's-complement bits, least significant first.
    pub fn bits(&self) -> Vec<bool> {
        let raw = self.raw();
        (0..self.format.width()).map(|t| (raw >> t) & 1 == 1).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.units == 0
    }
}

pub fn mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

pub fn sign_extend(raw: u128, width: u32) -> i128 {
    if width == 0 {
        return 0;
    }
    let raw = raw & mask(width);
    if width < 128 && (raw >> (width - 1)) & 1 == 1 {
        raw as i128 - (1i128 << width)
    } else {
        raw as i128
    }
}

/// `floor(v * 2^s)`, i.e. a left shift or an arithmetic right shift.
pub fn floor_shift(v: i128, s: i32) -> i128 {
    if s >= 0 {
        if s >= 127 {
            0
        } else {
            v.wrapping_shl(s as u32)
        }
    } else if -s >= 127 {
        if v < 0 {
            -1
        } else {
            0
        }
    } else {
        v >> (-s) as u32
    }
}

/// Shift applied to the partial product of bit `t` of a multiplier with
/// `mult_frac` fractional bits, times a multiplicand with `src_frac`
/// fractional bits, accumulated into a register with `dst_frac` fractional
/// bits.
pub fn partial_shift(t: u32, mult_frac: i32, src_frac: i32, dst_frac: i32) -> i32 {
    t as i32 - mult_frac - src_frac + dst_frac
}

/// Classical semantics of `qarith::add_const`.
pub fn add_const(reg: u128, reg_fmt: FixedFormat, c: &ClassicalConstant) -> u128 {
    let shift = partial_shift(0, c.format.frac, 0, reg_fmt.frac);
    let add = floor_shift(c.units, shift);
    reg_fmt.encode(reg_fmt.decode(reg) + add)
}

/// Classical semantics of the truncating shift-and-add multiplier: every
/// partial product `b_i * a * 2^(i - fb)` is floored to the product
/// precision before it is accumulated, and the sign bit of a signed `b`
/// contributes with negative weight.
pub fn mul_acc(
    prod: u128,
    prod_fmt: FixedFormat,
    a: u128,
    a_fmt: FixedFormat,
    b: u128,
    b_fmt: FixedFormat,
    subtract: bool,
) -> u128 {
    let av = a_fmt.decode(a);
    let wb = b_fmt.width();
    let mut acc = prod_fmt.decode(prod);
    for i in 0..wb {
        if (b >> i) & 1 == 0 {
            continue;
        }
        let s = partial_shift(i, b_fmt.frac, a_fmt.frac, prod_fmt.frac);
        let mut term = floor_shift(av, s);
        if b_fmt.signed && i == wb - 1 {
            term = -term;
        }
        if subtract {
            term = -term;
        }
        acc = acc.wrapping_add(term);
    }
    prod_fmt.encode(acc)
}

/// Classical semantics of classically-controlled multiplication. In
/// half-integer mode the multiplicand is `m + 1/2` with one extra
/// fractional bit; bit 0 of the multiplier therefore drops that half.
pub fn ccm_acc(
    acc: u128,
    acc_fmt: FixedFormat,
    m: &ClassicalConstant,
    v: u128,
    v_fmt: FixedFormat,
    half_integer: bool,
) -> u128 {
    let (vv, vfrac) =
        if half_integer { (2 * v_fmt.decode(v) + 1, v_fmt.frac + 1) } else { (v_fmt.decode(v), v_fmt.frac) };
    let bits = m.bits();
    let top = bits.len() as u32 - 1;
    let mut total = acc_fmt.decode(acc);
    for (t, bit) in bits.iter().enumerate() {
        if !bit {
            continue;
        }
        let s = partial_shift(t as u32, m.format.frac, vfrac, acc_fmt.frac);
        let mut term = floor_shift(vv, s);
        if m.format.signed && t as u32 == top {
            term = -term;
        }
        total = total.wrapping_add(term);
    }
    acc_fmt.encode(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rounds_to_nearest() {
        let f = FixedFormat::new(2, 1, true).unwrap();
        let c = ClassicalConstant::new(-0.5, f).unwrap();
        assert_eq!(c.units, -1);
        assert_eq!(c.raw(), 0b111);
        let c = ClassicalConstant::new(0.3, f).unwrap();
        assert_eq!(c.units, 1);
        assert!((c.rounding_error - 0.2).abs() < 1e-15);
        assert!(ClassicalConstant::new(2.0, f).is_err());
    }

    #[test]
    fn sign_extension_and_shift() {
        assert_eq!(sign_extend(0b110, 3), -2);
        assert_eq!(sign_extend(0b010, 3), 2);
        assert_eq!(floor_shift(-3, -1), -2);
        assert_eq!(floor_shift(3, -1), 1);
        assert_eq!(floor_shift(3, 2), 12);
    }

    #[test]
    fn ccm_half_integer_example() {
        // k = 3, r = 2: acc += 1.5 * (2 + 1/2) = 3.75 = 011.11b
        let acc_fmt = FixedFormat::new(3, 2, true).unwrap();
        let m_fmt = FixedFormat::new(3, 2, true).unwrap();
        let v_fmt = FixedFormat::new(3, 0, true).unwrap();
        let m = ClassicalConstant::new(1.5, m_fmt).unwrap();
        let out = ccm_acc(0, acc_fmt, &m, 2, v_fmt, true);
        assert_eq!(out, 0b01111);
    }

    #[test]
    fn signed_product() {
        let f = FixedFormat::new(4, 0, true).unwrap();
        let p = FixedFormat::new(6, 0, true).unwrap();
        let out = mul_acc(0, p, f.encode(-2), f, f.encode(3), f, false);
        assert_eq!(p.decode(out), -6);
        let out = mul_acc(0, p, f.encode(-2), f, f.encode(-3), f, false);
        assert_eq!(p.decode(out), 6);
    }
}
