//! Binary fixed-point arithmetic wide enough to hold every finite f64 in
//! [0, 1] exactly, used where a closed form cancels catastrophically.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::sum::ldexp;

/// Fractional bits. The smallest subnormal is 2⁻¹⁰⁷⁴.
pub const FRAC_BITS: u64 = 1152;

/// x = raw · 2^{−FRAC_BITS}.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fixed {
    raw: BigInt,
}

impl Fixed {
    pub fn zero() -> Self {
        Self { raw: BigInt::zero() }
    }

    pub fn one() -> Self {
        Self { raw: BigInt::one() << FRAC_BITS }
    }

    pub fn from_int(i: i64) -> Self {
        Self { raw: BigInt::from(i) << FRAC_BITS }
    }

    /// Exact conversion; `None` for non-finite input or magnitudes too small
    /// to be represented.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::zero());
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let exponent = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mantissa, exp2) = if exponent == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), exponent - 1075)
        };
        let shift = exp2 + FRAC_BITS as i64;
        if shift < 0 {
            let mask = (1u64 << (-shift).min(63)) - 1;
            if -shift >= 64 || mantissa & mask != 0 {
                return None;
            }
        }
        let m = BigInt::from(mantissa);
        let raw = if shift >= 0 { m << shift as u64 } else { m >> (-shift) as u64 };
        Some(Self { raw: if negative { -raw } else { raw } })
    }

    pub fn to_f64(&self) -> f64 {
        if self.raw.is_zero() {
            return 0.0;
        }
        let mag = self.raw.abs();
        let bits = mag.bits();
        let (top, shift) = if bits > 64 {
            (&mag >> (bits - 64), (bits - 64) as i64)
        } else {
            (mag.clone(), 0)
        };
        let x = ldexp(top.to_u64().unwrap_or(u64::MAX) as f64, shift - FRAC_BITS as i64);
        if self.raw.sign() == Sign::Minus {
            -x
        } else {
            x
        }
    }

    pub fn is_negative(&self) -> bool {
        self.raw.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self { raw: self.raw.abs() }
    }

    fn halve_n(&self, n: u64) -> Self {
        Self { raw: &self.raw >> n }
    }

    fn div_int(&self, d: u64) -> Self {
        Self { raw: &self.raw / BigInt::from(d) }
    }

    /// eˣ by halving the argument until it is tiny, summing the Taylor
    /// series, and squaring back.
    pub fn exp(&self) -> Self {
        if self.raw.is_negative() {
            let pos = self.abs().exp();
            let num = BigInt::one() << (2 * FRAC_BITS);
            return Self { raw: num / pos.raw };
        }
        let int_bits = (self.raw.bits() as i64 - FRAC_BITS as i64).max(0) as u64;
        let halvings = int_bits + 16;
        let y = self.halve_n(halvings);
        let mut sum = Self::one();
        let mut term = Self::one();
        let mut k = 1u64;
        loop {
            term = (&term * &y).div_int(k);
            if term.raw.is_zero() {
                break;
            }
            sum = sum + term.clone();
            k += 1;
        }
        for _ in 0..halvings {
            sum = &sum * &sum;
        }
        sum
    }
}

impl Add for Fixed {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self { raw: self.raw + rhs.raw }
    }
}

impl Sub for Fixed {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self { raw: self.raw - rhs.raw }
    }
}

impl Neg for Fixed {
    type Output = Self;
    fn neg(self) -> Self {
        Self { raw: -self.raw }
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        Fixed { raw: (&self.raw * &rhs.raw) >> FRAC_BITS }
    }
}

/// ∏(1 + 2pᵢ) − e^{2λ}(1 − Σⱼ γⱼ (2λ)ʲ), with every input taken as the
/// exact binary value of its f64.
pub fn exact_product_difference(p: &[f64], lambda: f64, gamma: &[(usize, f64)]) -> Option<f64> {
    let two = Fixed::from_int(2);
    let mut product = Fixed::one();
    for &pi in p {
        let factor = Fixed::one() + &two * &Fixed::from_f64(pi)?;
        product = &product * &factor;
    }
    let x = &two * &Fixed::from_f64(lambda)?;
    let mut poly = Fixed::one();
    for &(j, g) in gamma {
        let mut power = Fixed::one();
        for _ in 0..j {
            power = &power * &x;
        }
        poly = poly - &Fixed::from_f64(g)? * &power;
    }
    let diff = product - &x.exp() * &poly;
    Some(diff.to_f64())
}
