//! Q_ν polynomials and the constants C_ν(λ) = λ^{ν+1} e^{2λ} Q_{ν−1}(λ).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::poly::RationalPolynomial;
use super::stirling::stirling_a;
use crate::error::{domain, Result};
use crate::sum::CompensatedSum;

pub const MAX_Q_ORDER: usize = 10;

fn int(i: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(i))
}

/// Q_ν by the integral recurrence
/// Q_{ν+1}(λ) = 2Q_ν(λ) + 2∫₀¹ y^{ν+2}(2λy − 1) Q_ν(λy) dy, Q₀ = 1.
///
/// With Q_ν = Σ cᵢλⁱ the integral contributes cᵢλⁱ (2λ/(ν+i+4) − 1/(ν+i+3)).
pub fn q_polynomial(nu: usize) -> Result<RationalPolynomial> {
    if nu > MAX_Q_ORDER {
        return domain(format!("Q polynomials supported up to order {MAX_Q_ORDER}"));
    }
    let mut q = RationalPolynomial::constant(BigRational::one());
    for step in 0..nu {
        let mut next = vec![BigRational::default(); q.coeffs().len() + 1];
        for (i, c) in q.coeffs().iter().enumerate() {
            let two = int(2);
            next[i] += &two * c;
            next[i] -= &two * c / int(step + i + 3);
            next[i + 1] += &two * &two * c / int(step + i + 4);
        }
        q = RationalPolynomial::new(next);
    }
    Ok(q)
}

/// λQ′_ν + (ν+2)Q_ν − 2λQ′_{ν−1} − 2(ν+1+2λ)Q_{ν−1}; zero when the
/// differential recurrence holds.
pub fn q_differential_residual(nu: usize) -> Result<RationalPolynomial> {
    if nu == 0 {
        return domain("differential recurrence starts at nu = 1");
    }
    let q = q_polynomial(nu)?;
    let prev = q_polynomial(nu - 1)?;
    let x = RationalPolynomial::x();
    let lhs = x.clone() * q.derivative() + q.scale(&int(nu + 2));
    let rhs = (x.clone() * prev.derivative()).scale(&int(2))
        + prev.clone().scale(&int(2 * (nu + 1)))
        + (x * prev).scale(&int(4));
    Ok(lhs - rhs)
}

#[derive(Debug, Clone, Serialize)]
pub struct CConstant {
    pub nu: usize,
    pub lambda: f64,
    /// λ^{ν+1} e^{2λ} Q_{ν−1}(λ)
    pub closed_form: f64,
    /// ½ Σ_{m≥ν} (2λ)ᵐ/m! A_ν(m−1), truncated
    pub series: f64,
    pub series_tail_bound: f64,
    pub terms: usize,
}

impl CConstant {
    pub fn relative_gap(&self) -> f64 {
        (self.closed_form - self.series).abs() / self.closed_form.abs()
    }
}

/// C_ν(λ), by the closed form and by the Stirling series.
pub fn c_constant(nu: usize, lambda: f64) -> Result<CConstant> {
    if nu < 1 {
        return domain("C constants start at nu = 1");
    }
    if !(lambda > 0.0) {
        return domain(format!("lambda must be positive, got {lambda}"));
    }
    let q = q_polynomial(nu - 1)?;
    let closed_form = lambda.powi(nu as i32 + 1) * (2.0 * lambda).exp() * q.eval_f64(lambda);

    // A_ν(m−1) ≤ (m(m−1)/2)^ν/ν! ≤ m^{2ν}, so the tail beyond M is
    // dominated by a geometric series once (2λ/(M+1))((M+1)/M)^{2ν} < 1.
    let x = 2.0 * lambda;
    let mut acc = CompensatedSum::new();
    let mut weight = 1.0; // xᵐ/m!
    let mut m = 0usize;
    let mut tail_bound;
    loop {
        if m > 0 {
            weight *= x / m as f64;
        }
        if m >= nu {
            let a = stirling_a(m, nu).to_f64().unwrap_or(f64::INFINITY);
            acc.add(0.5 * weight * a);
        }
        let next = (m + 1) as f64;
        let ratio = x / (next + 1.0) * ((next + 1.0) / next).powi(2 * nu as i32);
        let next_envelope = 0.5 * weight * x / next * next.powi(2 * nu as i32);
        tail_bound = if ratio < 1.0 {
            next_envelope / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        if m >= nu && tail_bound <= 1e-18 * acc.value().abs() {
            break;
        }
        m += 1;
        if m > 2000 {
            break;
        }
    }
    Ok(CConstant {
        nu,
        lambda,
        closed_form,
        series: acc.value(),
        series_tail_bound: tail_bound,
        terms: m + 1,
    })
}
