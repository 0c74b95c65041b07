use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Polynomial in one variable with exact rational coefficients; `coeffs[i]`
/// multiplies xⁱ. Trailing zeros are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RationalPolynomial {
    coeffs: Vec<BigRational>,
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// The monomial c·xᵈ.
    pub fn monomial(c: BigRational, d: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); d + 1];
        coeffs[d] = c;
        Self::new(coeffs)
    }

    /// x.
    pub fn x() -> Self {
        Self::monomial(BigRational::one(), 1)
    }

    /// Falling factorial (x)ⱼ = x(x−1)…(x−j+1).
    pub fn falling(j: usize) -> Self {
        (0..j).fold(Self::constant(BigRational::one()), |acc, i| {
            acc * Self::new(vec![-BigRational::from_integer(BigInt::from(i)), BigRational::one()])
        })
    }

    pub fn from_integers(values: &[i64]) -> Self {
        Self::new(values.iter().map(|&v| BigRational::from_integer(v.into())).collect())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of xⁱ (zero past the degree).
    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    /// p(c·x).
    pub fn compose_scale(&self, c: &BigRational) -> Self {
        let mut factor = BigRational::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for a in &self.coeffs {
            out.push(a * &factor);
            factor *= c;
        }
        Self::new(out)
    }

    /// Lagrange interpolation through (xᵢ, yᵢ).
    pub fn interpolate(points: &[(BigRational, BigRational)]) -> Self {
        let mut result = Self::zero();
        for (i, (xi, yi)) in points.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            let mut basis = Self::constant(BigRational::one());
            let mut denom = BigRational::one();
            for (j, (xj, _)) in points.iter().enumerate() {
                if i != j {
                    basis = basis * Self::new(vec![-xj.clone(), BigRational::one()]);
                    denom *= xi - xj;
                }
            }
            result = result + basis.scale(&(yi / denom));
        }
        result
    }

    /// Coefficients in the falling-factorial basis: p(x) = Σⱼ bⱼ (x)ⱼ.
    ///
    /// Solved top-down: the leading coefficient of (x)ⱼ is 1, so each step
    /// peels the current highest power.
    pub fn to_falling_basis(&self) -> Vec<BigRational> {
        let Some(deg) = self.degree() else {
            return Vec::new();
        };
        let mut rest = self.clone();
        let mut out = vec![BigRational::zero(); deg + 1];
        for j in (0..=deg).rev() {
            let c = rest.coeff(j);
            if !c.is_zero() {
                rest = rest - Self::falling(j).scale(&c);
                out[j] = c;
            }
        }
        debug_assert!(rest.is_zero());
        out
    }
}

impl Add for RationalPolynomial {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        Self::new((0..len).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for RationalPolynomial {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for RationalPolynomial {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

impl Mul for RationalPolynomial {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.is_zero() || rhs.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }
}

impl fmt::Display for RationalPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}*x")?,
                _ => write!(f, "{a}*x^{i}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = RationalPolynomial::from_integers(&[1, 2, 0, 0]);
        assert_eq!(p.degree(), Some(1));
        assert!(RationalPolynomial::from_integers(&[0, 0]).is_zero());
    }

    #[test]
    fn arithmetic() {
        let p = RationalPolynomial::from_integers(&[1, 1]);
        let q = RationalPolynomial::from_integers(&[-1, 1]);
        assert_eq!(p.clone() * q.clone(), RationalPolynomial::from_integers(&[-1, 0, 1]));
        assert_eq!(p.clone() - p.clone(), RationalPolynomial::zero());
        assert_eq!(p.eval(&rat(1, 2)), rat(3, 2));
        assert_eq!(
            RationalPolynomial::from_integers(&[5, 3, 2]).derivative(),
            RationalPolynomial::from_integers(&[3, 4])
        );
    }

    #[test]
    fn falling_basis_round_trip() {
        let p = RationalPolynomial::from_integers(&[3, -1, 4, 1, 5]);
        let b = p.to_falling_basis();
        let back = b
            .iter()
            .enumerate()
            .fold(RationalPolynomial::zero(), |acc, (j, c)| {
                acc + RationalPolynomial::falling(j).scale(c)
            });
        assert_eq!(back, p);
        // x² = (x)₂ + (x)₁
        let sq = RationalPolynomial::monomial(rat(1, 1), 2).to_falling_basis();
        assert_eq!(sq, vec![rat(0, 1), rat(1, 1), rat(1, 1)]);
    }

    #[test]
    fn interpolation_recovers_cubic() {
        let p = RationalPolynomial::new(vec![rat(1, 3), rat(-2, 1), rat(0, 1), rat(5, 7)]);
        let pts: Vec<_> = (0..4)
            .map(|i| {
                let x = rat(i, 1);
                (x.clone(), p.eval(&x))
            })
            .collect();
        assert_eq!(RationalPolynomial::interpolate(&pts), p);
    }

    #[test]
    fn display() {
        let p = RationalPolynomial::new(vec![rat(4, 3), rat(1, 1)]);
        assert_eq!(p.to_string(), "4/3 + 1*x");
    }
}
