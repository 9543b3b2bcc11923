//! Exact binary fixed-point coordinate for threshold games.
//!
//! A halving adversary bisects its version space once per round, so after
//! `T` rounds it needs `T` bits below the binary point. `f64` runs out after
//! 52 halvings; [`Coord`] carries [`Coord::FRAC_BITS`] fractional bits in a
//! 320-bit two's-complement integer, which keeps midpoints and noise sums
//! exact for every horizon the suites use.

use std::cmp::Ordering;
use std::fmt;

const LIMBS: usize = 5;

/// Fixed-point number in `[-8, 8)` with 316 fractional bits.
///
/// Limb 0 is the most significant; the representation is two's complement.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord([u64; LIMBS]);

impl Coord {
    /// Number of bits below the binary point.
    pub const FRAC_BITS: u32 = 316;
    pub const ZERO: Coord = Coord([0; LIMBS]);
    pub const ONE: Coord = Coord([1 << 60, 0, 0, 0, 0]);
    pub const HALF: Coord = Coord([1 << 59, 0, 0, 0, 0]);

    /// Converts an `f64` in `(-8, 8)`. Bits below `2^-316` are truncated
    /// toward negative infinity; every `f64` of magnitude at least `2^-263`
    /// converts exactly.
    ///
    /// Panics on non-finite input or magnitude `>= 8`.
    pub fn from_f64(x: f64) -> Coord {
        assert!(x.is_finite(), "Coord::from_f64: non-finite input {x}");
        assert!(x.abs() < 8.0, "Coord::from_f64: {x} outside [-8, 8)");
        if x == 0.0 {
            return Coord::ZERO;
        }
        let bits = x.abs().to_bits();
        let exp_field = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (mantissa, exp) = if exp_field == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        // value = mantissa * 2^exp, stored integer = mantissa * 2^(exp + FRAC_BITS)
        let shift = exp + Self::FRAC_BITS as i64;
        let mut mag = Coord::ZERO;
        if shift >= 0 {
            mag.or_shifted(mantissa, shift as u32);
        } else if shift > -64 {
            mag.or_shifted(mantissa >> (-shift) as u32, 0);
            if x < 0.0 && mantissa & ((1u64 << (-shift) as u32) - 1) != 0 {
                // floor for negative values that lost bits
                mag = mag.wrapping_add(Coord([0, 0, 0, 0, 1]));
            }
        } else if x < 0.0 {
            mag = Coord([0, 0, 0, 0, 1]);
        }
        if x < 0.0 {
            mag.wrapping_neg()
        } else {
            mag
        }
    }

    fn or_shifted(&mut self, value: u64, shift: u32) {
        // place `value` so that its bit 0 lands at absolute bit `shift`
        let limb_from_bottom = (shift / 64) as usize;
        let offset = shift % 64;
        let lo_idx = LIMBS - 1 - limb_from_bottom;
        self.0[lo_idx] |= value << offset;
        if offset != 0 && lo_idx > 0 {
            self.0[lo_idx - 1] |= value >> (64 - offset);
        }
    }

    /// Nearest-ish `f64` (accurate to a few ulps; used for reporting and
    /// binning only).
    pub fn to_f64(self) -> f64 {
        let negative = self.is_negative();
        let mag = if negative { self.wrapping_neg() } else { self };
        let mut acc = 0.0f64;
        for (i, limb) in mag.0.iter().enumerate() {
            if *limb != 0 {
                let weight = 64.0 * (LIMBS - 1 - i) as f64 - Self::FRAC_BITS as f64;
                acc += (*limb as f64) * weight.exp2();
            }
        }
        if negative {
            -acc
        } else {
            acc
        }
    }

    pub fn is_negative(self) -> bool {
        (self.0[0] as i64) < 0
    }

    /// Wrapping two's-complement addition.
    pub fn wrapping_add(self, other: Coord) -> Coord {
        let mut out = [0u64; LIMBS];
        let mut carry = false;
        for i in (0..LIMBS).rev() {
            let (s1, c1) = self.0[i].overflowing_add(other.0[i]);
            let (s2, c2) = s1.overflowing_add(carry as u64);
            out[i] = s2;
            carry = c1 || c2;
        }
        Coord(out)
    }

    pub fn wrapping_neg(self) -> Coord {
        Coord(self.0.map(|l| !l)).wrapping_add(Coord([0, 0, 0, 0, 1]))
    }

    pub fn wrapping_sub(self, other: Coord) -> Coord {
        self.wrapping_add(other.wrapping_neg())
    }

    /// Logical shift right by one bit (the operand is read as unsigned).
    fn half_unsigned(self) -> Coord {
        let mut out = [0u64; LIMBS];
        let mut carry_in = 0;
        for (o, &l) in out.iter_mut().zip(&self.0) {
            *o = (l >> 1) | carry_in;
            carry_in = (l & 1) << 63;
        }
        Coord(out)
    }

    /// `floor((a + b) / 2)` at full precision; exact whenever the two
    /// endpoints differ in a bit above the last fractional bit.
    pub fn midpoint(self, other: Coord) -> Coord {
        let (lo, hi) = if self <= other {
            (self, other)
        } else {
            (other, self)
        };
        // hi - lo < 16 may wrap past the signed range but is exact unsigned
        lo.wrapping_add(hi.wrapping_sub(lo).half_unsigned())
    }
}

impl Ord for Coord {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.0[0] as i64;
        let b = other.0[0] as i64;
        a.cmp(&b).then_with(|| self.0[1..].cmp(&other.0[1..]))
    }
}

impl PartialOrd for Coord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<f64> for Coord {
    fn from(x: f64) -> Self {
        Coord::from_f64(x)
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Coord({})", self.to_f64())
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}
