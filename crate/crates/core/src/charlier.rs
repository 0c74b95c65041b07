//! Poisson–Charlier polynomials
//! Pₘ(k) = Σⱼ (−1)^{m−j} C(m, j) λ^{m−j} (k)ⱼ
//! and numerical checks of their orthogonality and covariance identities.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::sum::{binomial, factorial, poisson_mass_at, poisson_poly_tail, CompensatedSum};

/// (k)ₘ = k(k−1)…(k−m+1); zero once m > k.
pub fn falling_factorial(k: u64, m: u64) -> f64 {
    if m > k {
        return 0.0;
    }
    (0..m).fold(1.0, |acc, i| acc * (k - i) as f64)
}

/// Pₘ(k) at fixed λ, held as its coefficients in the falling-factorial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CharlierEval {
    lambda: f64,
    coeffs: Vec<f64>,
}

impl CharlierEval {
    pub fn new(degree: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return domain(format!("Charlier polynomials need lambda > 0, got {lambda}"));
        }
        let coeffs = (0..=degree)
            .map(|j| {
                let sign = if (degree - j) % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(degree, j) * lambda.powi((degree - j) as i32)
            })
            .collect();
        Ok(Self { lambda, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eval(&self, k: usize) -> f64 {
        let mut acc = CompensatedSum::new();
        let mut ff = 1.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                ff *= (k as f64) - (j - 1) as f64;
            }
            if ff == 0.0 {
                break;
            }
            acc.add(c * ff);
        }
        acc.value()
    }
}

/// Pₘ(k) for Poisson mean λ.
pub fn charlier(m: usize, lambda: f64, k: usize) -> Result<f64> {
    Ok(CharlierEval::new(m, lambda)?.eval(k))
}

/// Truncation point for expectations against Poisson(λ) weights.
pub fn expectation_kmax(lambda: f64, degree: usize) -> usize {
    let k = (lambda + 20.0 * lambda.sqrt() + 4.0 * degree as f64).ceil() as usize;
    k.max(50)
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthogonalityReport {
    pub m: usize,
    pub nu: usize,
    pub lambda: f64,
    pub computed: f64,
    pub expected: f64,
    pub deviation: f64,
    pub kmax: usize,
    pub tail_bound: f64,
    pub holds: bool,
}

/// Σₖ π_λ(k) Pₘ(k) P_ν(k), compared with m! λᵐ δ_{mν}.
pub fn orthogonality_check(m: usize, nu: usize, lambda: f64, tol: f64) -> Result<OrthogonalityReport> {
    if m > 12 || nu > 12 {
        return domain("orthogonality check supports degrees up to 12");
    }
    if !(lambda > 0.0 && lambda <= 10.0) {
        return domain(format!("orthogonality check needs 0 < lambda <= 10, got {lambda}"));
    }
    let pm = CharlierEval::new(m, lambda)?;
    let pn = CharlierEval::new(nu, lambda)?;
    let kmax = expectation_kmax(lambda, m + nu);
    let mut acc = CompensatedSum::new();
    let mut weight = (-lambda).exp();
    for k in 0..=kmax {
        if k > 0 {
            weight *= lambda / k as f64;
        }
        acc.add(weight * pm.eval(k) * pn.eval(k));
    }
    let computed = acc.value();
    let expected = if m == nu {
        factorial(m) * lambda.powi(m as i32)
    } else {
        0.0
    };
    let tail_bound = poisson_poly_tail(lambda, kmax, &[(m + nu, 1.0)]);
    let deviation = (computed - expected).abs();
    Ok(OrthogonalityReport {
        m,
        nu,
        lambda,
        computed,
        expected,
        deviation,
        kmax,
        tail_bound,
        holds: deviation <= tol + tail_bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub m: usize,
    pub lambda: f64,
    /// E Pₘ(Z) g(Z)
    pub lhs: f64,
    /// λᵐ E Δᵐg(Z)
    pub rhs: f64,
    pub difference: f64,
    pub kmax: usize,
    /// Poisson mass beyond kmax left out of both sums.
    pub neglected_mass: f64,
}

/// m-th forward difference Δᵐg(k).
pub fn forward_difference<G: Fn(usize) -> f64>(g: &G, m: usize, k: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..=m {
        let sign = if (m - i) % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign * binomial(m, i) * g(k + i));
    }
    acc.value()
}

/// Both sides of E Pₘ(Z_λ) g(Z_λ) = λᵐ E Δᵐ g(Z_λ), truncated at kmax.
pub fn covariance_identity_check<G: Fn(usize) -> f64>(
    m: usize,
    lambda: f64,
    g: G,
    kmax: usize,
) -> Result<CovarianceReport> {
    let pm = CharlierEval::new(m, lambda)?;
    let mut lhs = CompensatedSum::new();
    let mut rhs = CompensatedSum::new();
    let mut weight = (-lambda).exp();
    for k in 0..=kmax {
        if k > 0 {
            weight *= lambda / k as f64;
        }
        lhs.add(weight * pm.eval(k) * g(k));
        rhs.add(weight * forward_difference(&g, m, k));
    }
    let lhs = lhs.value();
    let rhs = lambda.powi(m as i32) * rhs.value();
    let neglected_mass = poisson_mass_at(lambda, kmax + 1) * 2.0;
    Ok(CovarianceReport {
        m,
        lambda,
        lhs,
        rhs,
        difference: (lhs - rhs).abs(),
        kmax,
        neglected_mass,
    })
}
