//! Corrected Poisson signed measures
//! φ_ν(k) = e^{−λ}λᵏ/k! · (1 − Σⱼ γⱼ Pⱼ(k)).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::charlier::{falling_factorial, CharlierEval};
use crate::error::{domain, Result};
use crate::exact::solve_gamma_table;
use crate::pmf::{poisson_pmf, power_sums, FactorialMoments, ProbVector, SignedPmf};
use crate::sum::{binomial, poisson_poly_tail, CompensatedSum};

/// Tail mass allowed when kmax is chosen automatically.
pub const AUTO_TAIL_TARGET: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    MomentMatched,
    BinomialClosedForm,
    UserSupplied,
}

/// Order, mean and coefficients γⱼ of a corrected measure.
///
/// The density factor is 1 − Σⱼ γⱼ Pⱼ(k); with this sign convention moment
/// matching gives γ₃ = −λ₃/(3λ³) and γ₄ = −λ₂²/(8λ⁴).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionSpec {
    nu: usize,
    lambda: f64,
    gamma: BTreeMap<usize, f64>,
    provenance: Provenance,
}

impl CorrectionSpec {
    /// A user-supplied specification; γⱼ keys must lie in 2..=2ν−2.
    pub fn new(nu: usize, lambda: f64, gamma: BTreeMap<usize, f64>) -> Result<Self> {
        Self::with_provenance(nu, lambda, gamma, Provenance::UserSupplied)
    }

    fn with_provenance(
        nu: usize,
        lambda: f64,
        gamma: BTreeMap<usize, f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if nu < 1 {
            return domain("correction order must be at least 1");
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return domain(format!("corrected measures need lambda > 0, got {lambda}"));
        }
        let top = 2 * nu - 2;
        if let Some((&j, _)) = gamma.iter().find(|(&j, _)| j < 2 || j > top) {
            return domain(format!("gamma_{j} is outside 2..={top} for order {nu}"));
        }
        if let Some((&j, _)) = gamma.iter().find(|(_, g)| !g.is_finite()) {
            return domain(format!("gamma_{j} is not finite"));
        }
        Ok(Self { nu, lambda, gamma, provenance })
    }

    /// Order one: plain Poisson(λ).
    pub fn poisson(lambda: f64) -> Result<Self> {
        Self::with_provenance(1, lambda, BTreeMap::new(), Provenance::MomentMatched)
    }

    /// Matches the first factorial moments of Sₙ; ν ∈ {1, 2, 3}.
    pub fn moment_matched(p: &ProbVector, nu: usize) -> Result<Self> {
        let lambda = p.lambda();
        if !(lambda > 0.0) {
            return domain("sum of probabilities is zero; gamma is undefined");
        }
        let ps = power_sums(p, 3);
        let (l2, l3) = (ps.get(2), ps.get(3));
        let mut gamma = BTreeMap::new();
        match nu {
            1 => {}
            2 => {
                gamma.insert(2, l2 / (2.0 * lambda * lambda));
            }
            3 => {
                gamma.insert(2, l2 / (2.0 * lambda * lambda));
                gamma.insert(3, -l3 / (3.0 * lambda.powi(3)));
                gamma.insert(4, -l2 * l2 / (8.0 * lambda.powi(4)));
            }
            _ => {
                return domain(format!(
                    "moment-matched coefficients are only known for nu <= 3 (got {nu}); supply gamma explicitly"
                ))
            }
        }
        Self::with_provenance(nu, lambda, gamma, Provenance::MomentMatched)
    }

    /// The two-coefficient variant of order three (γ₄ dropped).
    pub fn phi3_tilde(p: &ProbVector) -> Result<Self> {
        let mut spec = Self::moment_matched(p, 3)?;
        spec.gamma.remove(&4);
        Ok(spec)
    }

    /// γⱼ(ν) for Bin(n, λ/n) from the exact table.
    pub fn binomial(n: u64, lambda: f64, nu: usize) -> Result<Self> {
        if n == 0 {
            return domain("binomial correction needs n >= 1");
        }
        if lambda / n as f64 > 1.0 {
            return domain(format!("lambda/n = {} exceeds 1", lambda / n as f64));
        }
        let gamma = if nu == 1 {
            BTreeMap::new()
        } else {
            solve_gamma_table(nu)?.evaluate(n).into_iter().collect()
        };
        Self::with_provenance(nu, lambda, gamma, Provenance::BinomialClosedForm)
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> &BTreeMap<usize, f64> {
        &self.gamma
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Nonzero (j, γⱼ) pairs.
    pub fn gamma_pairs(&self) -> Vec<(usize, f64)> {
        self.gamma.iter().filter(|(_, g)| **g != 0.0).map(|(&j, &g)| (j, g)).collect()
    }

    /// Highest j with γⱼ ≠ 0.
    pub fn degree(&self) -> usize {
        self.gamma_pairs().last().map_or(0, |&(j, _)| j)
    }

    /// Closed-form moments μₘ = λᵐ(1 − Σⱼ γⱼ (m)ⱼ).
    pub fn moments(&self) -> FactorialMoments {
        FactorialMoments::corrected(self.lambda, self.gamma_pairs())
    }

    /// Bound on the absolute mass beyond `kmax`, from |Pⱼ(k)| ≤ (k + λ)ʲ.
    pub fn tail_bound(&self, kmax: usize) -> f64 {
        let mut weights = vec![(0, 1.0)];
        weights.extend(self.gamma_pairs().into_iter().map(|(j, g)| (j, g.abs())));
        poisson_poly_tail(self.lambda, kmax, &weights)
    }

    /// Smallest K with `tail_bound(K)` below `target`: doubling, then bisection.
    pub fn auto_kmax(&self, target: f64) -> Result<usize> {
        let lambda = self.lambda;
        let start = (lambda + 6.0 * lambda.sqrt()).ceil() as usize + 2 * self.degree();
        let mut hi = start.max(16);
        while !(self.tail_bound(hi) < target) {
            hi *= 2;
            if hi > 1 << 22 {
                return domain(format!("no support cutoff reaches tail {target:e} for lambda = {lambda}"));
            }
        }
        let mut lo = hi / 2;
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.tail_bound(mid) < target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectedMeasure {
    pub spec: CorrectionSpec,
    pub pmf: SignedPmf,
    #[serde(skip)]
    pub moments: FactorialMoments,
}

fn label_for(spec: &CorrectionSpec) -> String {
    match spec.nu {
        1 if spec.gamma_pairs().is_empty() => "poisson".to_owned(),
        3 if spec.provenance == Provenance::MomentMatched && !spec.gamma.contains_key(&4) => {
            "phi3-tilde".to_owned()
        }
        nu => format!("phi{nu}"),
    }
}

/// Builds the measure on 0..=kmax (automatic when `None`).
pub fn build_phi_nu(spec: &CorrectionSpec, kmax: Option<usize>) -> Result<CorrectedMeasure> {
    let kmax = match kmax {
        Some(k) => k,
        None => spec.auto_kmax(AUTO_TAIL_TARGET)?,
    };
    let base = poisson_pmf(spec.lambda, kmax)?;
    let gamma = spec.gamma_pairs();
    let polys = gamma
        .iter()
        .map(|&(j, g)| Ok((g, CharlierEval::new(j, spec.lambda)?)))
        .collect::<Result<Vec<_>>>()?;
    let mass = base
        .mass()
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let mut factor = CompensatedSum::new();
            factor.add(1.0);
            for (g, poly) in &polys {
                factor.add(-g * poly.eval(k));
            }
            w * factor.value()
        })
        .collect();
    let pmf = SignedPmf::new(mass, spec.tail_bound(kmax), label_for(spec));
    Ok(CorrectedMeasure {
        spec: spec.clone(),
        pmf,
        moments: spec.moments(),
    })
}

pub fn build_phi2(p: &ProbVector, kmax: Option<usize>) -> Result<CorrectedMeasure> {
    build_phi_nu(&CorrectionSpec::moment_matched(p, 2)?, kmax)
}

pub fn build_phi3(p: &ProbVector, kmax: Option<usize>) -> Result<CorrectedMeasure> {
    build_phi_nu(&CorrectionSpec::moment_matched(p, 3)?, kmax)
}

pub fn build_phi3_tilde(p: &ProbVector, kmax: Option<usize>) -> Result<CorrectedMeasure> {
    build_phi_nu(&CorrectionSpec::phi3_tilde(p)?, kmax)
}

/// a₀..a₄ with φ₃(k) = e^{−λ}λᵏ/k! · Σᵢ aᵢ (k)ᵢ.
pub fn phi3_falling_coefficients(p: &ProbVector) -> Result<[f64; 5]> {
    let ps = power_sums(p, 3);
    let (l, l2, l3) = (ps.get(1), ps.get(2), ps.get(3));
    if !(l > 0.0) {
        return domain("sum of probabilities is zero");
    }
    Ok([
        1.0 - l2 / 2.0 - l3 / 3.0 + l2 * l2 / 8.0,
        (2.0 * l2 - l2 * l2 + 2.0 * l3) / (2.0 * l),
        (3.0 * l2 * l2 - 2.0 * l2 - 4.0 * l3) / (4.0 * l * l),
        (2.0 * l3 - 3.0 * l2 * l2) / (6.0 * l.powi(3)),
        l2 * l2 / (8.0 * l.powi(4)),
    ])
}

/// φ₃(k) from the falling-factorial expansion.
pub fn phi3_falling_form(lambda: f64, a: &[f64; 5], k: usize) -> f64 {
    let factor: CompensatedSum = a
        .iter()
        .enumerate()
        .map(|(i, &ai)| ai * falling_factorial(k as u64, i as u64))
        .collect();
    crate::sum::poisson_mass_at(lambda, k) * factor.value()
}

/// Default truncation of the inversion series.
pub fn default_inversion_mmax(moments: &FactorialMoments) -> usize {
    let n = moments.indicator_count().unwrap_or(0);
    let lam = moments.lambda().unwrap_or(0.0);
    let grow = (6.0 * lam).ceil() as usize + moments.degree();
    n.max(60).max(grow)
}

/// g(k) = Σ_{m≥k} (−1)^{m−k} C(m, k) μₘ/m!, for k = 0..=kmax, m ≤ mmax.
///
/// The recorded tail bound adds |1 − Σ g| to a geometric bound on the
/// omitted series terms (tabulated sequences are taken as zero past their end).
pub fn invert_moments(moments: &FactorialMoments, kmax: usize, mmax: usize) -> Result<SignedPmf> {
    let mmax = match moments.exact_upto() {
        Some(top) => mmax.min(top),
        None => mmax,
    };
    let scaled = moments
        .scaled_upto(mmax)
        .ok_or_else(|| crate::Error::Domain("moment sequence not available".into()))?;
    let mut mass = Vec::with_capacity(kmax + 1);
    let mut series_tail = 0.0;
    for k in 0..=kmax {
        let mut acc = CompensatedSum::new();
        for (m, &s) in scaled.iter().enumerate().skip(k) {
            if s == 0.0 {
                continue;
            }
            let sign = if (m - k) % 2 == 0 { 1.0 } else { -1.0 };
            acc.add(sign * binomial(m, k) * s);
        }
        mass.push(acc.value());
        series_tail += omitted_terms_bound(moments, k, mmax);
    }
    let total: CompensatedSum = mass.iter().copied().collect();
    let tail = (1.0 - total.value()).abs() + series_tail;
    Ok(SignedPmf::new(mass, tail, "inverted"))
}

fn omitted_terms_bound(moments: &FactorialMoments, k: usize, mmax: usize) -> f64 {
    if moments.exact_upto().is_some() {
        return 0.0;
    }
    if moments.indicator_count().is_some_and(|n| mmax >= n) {
        return 0.0;
    }
    let first = mmax + 1;
    if first < k {
        return 0.0;
    }
    let (Some(env), Some(r)) = (moments.envelope(first), moments.envelope_ratio(first)) else {
        return f64::INFINITY;
    };
    let ratio = r * (first + 1) as f64 / (first + 1 - k) as f64;
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    binomial(first, k) * env / (1.0 - ratio)
}
