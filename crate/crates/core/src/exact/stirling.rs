//! Unsigned Stirling numbers of the first kind and the expansion
//! (n)ₘ = Σₖ (−1)ᵏ Aₖ(m−1) n^{m−k}.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::poly::RationalPolynomial;
use crate::error::{domain, Error, Result};

/// Coefficients of x(x+1)…(x+m−1): entry j is the unsigned Stirling number [m, j].
pub fn rising_product_coefficients(m: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for i in 0..m {
        // multiply by (x + i)
        let mut next = vec![BigInt::zero(); row.len() + 1];
        for (j, c) in row.iter().enumerate() {
            next[j + 1] += c;
            next[j] += c * BigInt::from(i);
        }
        row = next;
    }
    row
}

/// Aₖ(m−1) = Σ_{i₁<…<iₖ≤m−1} i₁⋯iₖ, i.e. [m, m−k]; zero for k ≥ m ≥ 1.
pub fn stirling_a(m: usize, k: usize) -> BigInt {
    if k > m || (k == m && m > 0) {
        return BigInt::zero();
    }
    // e_k(1, …, m−1) by the elementary-symmetric recurrence
    let mut e = vec![BigInt::zero(); k + 1];
    e[0] = BigInt::one();
    for i in 1..m {
        for j in (1..=k.min(i)).rev() {
            let prev = e[j - 1].clone();
            e[j] += prev * BigInt::from(i);
        }
    }
    e[k].clone()
}

/// Aₖ(m−1) as a polynomial in m of degree 2k.
///
/// Built by interpolation through m = 0..=2k and checked against exact
/// values at five further points; a mismatch means the degree bound failed.
pub fn a_polynomial(k: usize) -> Result<RationalPolynomial> {
    let value = |m: usize| -> BigInt {
        if m == 0 {
            if k == 0 {
                BigInt::one()
            } else {
                BigInt::zero()
            }
        } else {
            stirling_a(m, k)
        }
    };
    let points: Vec<_> = (0..=2 * k)
        .map(|m| {
            (
                BigRational::from_integer(BigInt::from(m)),
                BigRational::from_integer(value(m)),
            )
        })
        .collect();
    let poly = RationalPolynomial::interpolate(&points);
    for m in 2 * k + 1..=2 * k + 5 {
        let got = poly.eval(&BigRational::from_integer(BigInt::from(m)));
        if got != BigRational::from_integer(value(m)) {
            return Err(Error::Internal(format!(
                "A_{k} is not a polynomial of degree {} in m (mismatch at m = {m})",
                2 * k
            )));
        }
    }
    if poly.degree() != Some(2 * k) {
        return Err(Error::Internal(format!("A_{k} has degree {:?}, expected {}", poly.degree(), 2 * k)));
    }
    Ok(poly)
}

/// (n)ₘ as an exact integer (zero when m > n).
pub fn falling_exact(n: u64, m: u64) -> BigInt {
    if m > n {
        return BigInt::zero();
    }
    (0..m).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i))
}

#[derive(Debug, Clone, Serialize)]
pub struct RemainderReport {
    pub n: u64,
    pub m: u64,
    pub nu: u64,
    pub falling: String,
    pub truncation: String,
    /// R_ν as an exact rational string.
    pub remainder: String,
    pub a_nu: String,
    /// 0 ≤ R_ν ≤ A_ν
    pub within_bounds: bool,
}

/// The ν-term truncation of (n)ₘ and the scaled remainder
/// R_ν = (−1)^ν ((n)ₘ − truncation) n^{ν−m}.
pub fn falling_factorial_remainder(n: u64, m: u64, nu: u64) -> Result<(BigInt, BigRational, RemainderReport)> {
    if nu < 1 || n < 1 {
        return domain("remainder needs nu >= 1 and n >= 1");
    }
    let nb = BigInt::from(n);
    let mut truncation = BigInt::zero();
    for k in 0..nu.min(m) {
        let term = stirling_a(m as usize, k as usize) * num_traits::pow(nb.clone(), (m - k) as usize);
        if k % 2 == 0 {
            truncation += term;
        } else {
            truncation -= term;
        }
    }
    let exact = falling_exact(n, m);
    let diff = &exact - &truncation;
    let signed = if nu % 2 == 0 { diff } else { -diff };
    let remainder = if nu >= m {
        BigRational::from_integer(signed * num_traits::pow(nb, (nu - m) as usize))
    } else {
        BigRational::new(signed, num_traits::pow(nb, (m - nu) as usize))
    };
    let a_nu = stirling_a(m as usize, nu as usize);
    let within_bounds =
        !remainder.is_negative() && remainder <= BigRational::from_integer(a_nu.clone());
    let report = RemainderReport {
        n,
        m,
        nu,
        falling: exact.to_string(),
        truncation: truncation.to_string(),
        remainder: remainder.to_string(),
        a_nu: a_nu.to_string(),
        within_bounds,
    };
    Ok((truncation, remainder, report))
}
