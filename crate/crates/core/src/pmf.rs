//! Exact Poisson-binomial distribution, factorial moments, power sums and the
//! plain Poisson mass function.

use serde::{Serialize, Serializer};

use crate::error::{domain, Error, Result};
use crate::sum::{csum, falling, poisson_upper_tail_chernoff, CompensatedSum};

/// Success probabilities p₁..pₙ of independent indicators.
///
/// Entries equal to zero are dropped on construction; the count is kept in
/// [`ProbVector::dropped_zeros`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    probs: Vec<f64>,
    dropped_zeros: usize,
}

impl ProbVector {
    pub fn new(probs: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut kept = Vec::new();
        let mut dropped_zeros = 0;
        for (index, value) in probs.into_iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { index, value });
            }
            if value == 0.0 {
                dropped_zeros += 1;
            } else {
                kept.push(value);
            }
        }
        Ok(Self {
            probs: kept,
            dropped_zeros,
        })
    }

    /// `n` copies of `lambda / n`, the Bin(n, λ/n) case.
    pub fn equal(n: usize, lambda: f64) -> Result<Self> {
        if n == 0 {
            return domain("binomial case needs n >= 1");
        }
        if !(lambda >= 0.0) {
            return domain(format!("lambda must be nonnegative, got {lambda}"));
        }
        let p = lambda / n as f64;
        if p > 1.0 {
            return domain(format!("lambda / n = {p} exceeds 1"));
        }
        Self::new(std::iter::repeat(p).take(n))
    }

    /// Parses either a JSON array of numbers or plain text with one decimal per
    /// line (blank lines and `#` comments ignored).
    pub fn parse(input: &str) -> Result<Self> {
        let trimmed = input.trim_start();
        let values: Vec<f64> = if trimmed.starts_with('[') {
            serde_json::from_str(trimmed).map_err(|e| Error::Parse(e.to_string()))?
        } else {
            input
                .lines()
                .enumerate()
                .map(|(i, line)| (i, line.split('#').next().unwrap_or("").trim()))
                .filter(|(_, line)| !line.is_empty())
                .map(|(i, line)| {
                    line.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("line {}: {e}: {line:?}", i + 1)))
                })
                .collect::<Result<_>>()?
        };
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("entry {bad} is not finite")));
        }
        Self::new(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn dropped_zeros(&self) -> usize {
        self.dropped_zeros
    }

    /// λ = Σ pᵢ.
    pub fn lambda(&self) -> f64 {
        csum(self.probs.iter().copied())
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }
}

/// Power sums λⱼ = Σᵢ pᵢʲ for j = 1..=J.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSums {
    sums: Vec<f64>,
}

impl PowerSums {
    /// λⱼ; `j = 0` gives n.
    ///
    /// # Panics
    /// If `j` exceeds the computed order.
    pub fn get(&self, j: usize) -> f64 {
        self.sums[j]
    }

    pub fn try_get(&self, j: usize) -> Option<f64> {
        self.sums.get(j).copied()
    }

    pub fn order(&self) -> usize {
        self.sums.len() - 1
    }

    pub fn lambda(&self) -> f64 {
        self.sums.get(1).copied().unwrap_or(0.0)
    }
}

pub const DEFAULT_POWER_ORDER: usize = 6;

pub fn power_sums(p: &ProbVector, jmax: usize) -> PowerSums {
    let mut sums = vec![p.len() as f64];
    for j in 1..=jmax {
        sums.push(csum(p.as_slice().iter().map(|&x| x.powi(j as i32))));
    }
    PowerSums { sums }
}

/// A finitely supported real-valued mass function on {0, …, K}.
///
/// `tail_bound` bounds the total absolute mass discarded beyond K, so that
/// Σ mass ∈ [1 − tail_bound, 1 + tail_bound].
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPmf {
    mass: Vec<f64>,
    tail_bound: f64,
    label: String,
}

impl SignedPmf {
    pub fn new(mass: Vec<f64>, tail_bound: f64, label: impl Into<String>) -> Self {
        assert!(!mass.is_empty(), "a mass function needs at least one point");
        Self {
            mass,
            tail_bound,
            label: label.into(),
        }
    }

    /// Unit mass at `k`.
    pub fn point_mass(k: usize) -> Self {
        let mut mass = vec![0.0; k + 1];
        mass[k] = 1.0;
        Self::new(mass, 0.0, format!("point-mass-{k}"))
    }

    pub fn support_max(&self) -> usize {
        self.mass.len() - 1
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Mass at k; zero past the support.
    pub fn at(&self, k: usize) -> f64 {
        self.mass.get(k).copied().unwrap_or(0.0)
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn total(&self) -> f64 {
        csum(self.mass.iter().copied())
    }

    pub fn is_proper(&self) -> bool {
        self.mass.iter().all(|&m| m >= 0.0)
    }

    /// Σₖ (k)ₘ mass(k) over the stored support.
    pub fn factorial_moment(&self, m: usize) -> f64 {
        csum(
            self.mass
                .iter()
                .enumerate()
                .skip(m)
                .map(|(k, &g)| falling(k as f64, m) * g),
        )
    }
}

impl Serialize for SignedPmf {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("SignedPmf", 4)?;
        s.serialize_field("support_max", &self.support_max())?;
        s.serialize_field("mass", &self.mass)?;
        s.serialize_field("tail_bound", &self.tail_bound)?;
        s.serialize_field("label", &self.label)?;
        s.end()
    }
}

/// Factorial moment sequence μₘ.
///
/// Internally moments are held as μₘ/m!, which stays finite for the large m
/// that series truncation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorialMoments {
    kind: MomentKind,
}

#[derive(Debug, Clone, PartialEq)]
enum MomentKind {
    /// Elementary symmetric functions S_{n,m} = μₘ/m!, zero past the end.
    /// `lambda` is Σ pᵢ, used for the envelope μₘ ≤ λᵐ.
    SumOfIndicators { scaled: Vec<f64>, lambda: f64 },
    /// μₘ = λᵐ (1 − Σⱼ γⱼ (m)ⱼ).
    Corrected { lambda: f64, gamma: Vec<(usize, f64)> },
    /// Arbitrary values valid only for m < len.
    Tabulated { mu: Vec<f64> },
}

impl FactorialMoments {
    /// Closed-form moments of a corrected Poisson measure.
    pub fn corrected(lambda: f64, gamma: Vec<(usize, f64)>) -> Self {
        Self {
            kind: MomentKind::Corrected { lambda, gamma },
        }
    }

    pub fn poisson(lambda: f64) -> Self {
        Self::corrected(lambda, Vec::new())
    }

    /// Moments known only for m = 0..mu.len()-1.
    pub fn tabulated(mu: Vec<f64>) -> Self {
        Self {
            kind: MomentKind::Tabulated { mu },
        }
    }

    /// Last m for which `mu(m)` is defined; `None` when every m is.
    pub fn exact_upto(&self) -> Option<usize> {
        match &self.kind {
            MomentKind::Tabulated { mu } => Some(mu.len().saturating_sub(1)),
            _ => None,
        }
    }

    /// μₘ/m!.
    pub fn scaled(&self, m: usize) -> Option<f64> {
        match &self.kind {
            MomentKind::SumOfIndicators { scaled, .. } => Some(scaled.get(m).copied().unwrap_or(0.0)),
            MomentKind::Corrected { lambda, gamma } => {
                let base = (1..=m).fold(1.0, |acc, i| acc * lambda / i as f64);
                Some(base * correction_factor(gamma, m))
            }
            MomentKind::Tabulated { mu } => mu
                .get(m)
                .map(|&v| (1..=m).fold(v, |acc, i| acc / i as f64)),
        }
    }

    /// μₘ/m! for m = 0..=mmax, in one pass.
    pub fn scaled_upto(&self, mmax: usize) -> Option<Vec<f64>> {
        match &self.kind {
            MomentKind::Corrected { lambda, gamma } => {
                let mut out = Vec::with_capacity(mmax + 1);
                let mut base = 1.0;
                for m in 0..=mmax {
                    if m > 0 {
                        base *= lambda / m as f64;
                    }
                    out.push(base * correction_factor(gamma, m));
                }
                Some(out)
            }
            _ => (0..=mmax).map(|m| self.scaled(m)).collect(),
        }
    }

    /// μₘ itself.
    pub fn mu(&self, m: usize) -> Option<f64> {
        match &self.kind {
            MomentKind::Corrected { lambda, gamma } => {
                Some(lambda.powi(m as i32) * correction_factor(gamma, m))
            }
            MomentKind::Tabulated { mu } => mu.get(m).copied(),
            MomentKind::SumOfIndicators { scaled, .. } => {
                let s = scaled.get(m).copied().unwrap_or(0.0);
                if s == 0.0 {
                    Some(0.0)
                } else {
                    Some((1..=m).fold(s, |acc, i| acc * i as f64))
                }
            }
        }
    }

    /// Mean of the envelope used for series truncation.
    pub fn lambda(&self) -> Option<f64> {
        match &self.kind {
            MomentKind::SumOfIndicators { lambda, .. } | MomentKind::Corrected { lambda, .. } => {
                Some(*lambda)
            }
            MomentKind::Tabulated { .. } => None,
        }
    }

    /// Highest falling-factorial order in the closed form (0 for Poisson and Sₙ).
    pub fn degree(&self) -> usize {
        match &self.kind {
            MomentKind::Corrected { gamma, .. } => gamma
                .iter()
                .filter(|(_, g)| *g != 0.0)
                .map(|(j, _)| *j)
                .max()
                .unwrap_or(0),
            _ => 0,
        }
    }

    /// Number of indicators when the moments come from Sₙ.
    pub fn indicator_count(&self) -> Option<usize> {
        match &self.kind {
            MomentKind::SumOfIndicators { scaled, .. } => Some(scaled.len().saturating_sub(1)),
            _ => None,
        }
    }

    /// Upper bound on |μₘ|/m!, available for Sₙ and closed forms.
    pub fn envelope(&self, m: usize) -> Option<f64> {
        match &self.kind {
            MomentKind::SumOfIndicators { lambda, .. } => {
                Some((1..=m).fold(1.0, |acc, i| acc * lambda / i as f64))
            }
            MomentKind::Corrected { lambda, gamma } => {
                let base = (1..=m).fold(1.0, |acc, i| acc * lambda / i as f64);
                let poly = 1.0
                    + gamma
                        .iter()
                        .map(|&(j, g)| g.abs() * falling(m as f64, j).max(0.0))
                        .sum::<f64>();
                Some(base * poly)
            }
            MomentKind::Tabulated { .. } => None,
        }
    }

    /// A bound r with envelope(k+1) ≤ r·envelope(k) for every k ≥ m.
    pub fn envelope_ratio(&self, m: usize) -> Option<f64> {
        let lambda = self.lambda()?;
        let deg = self.degree();
        if m + 1 <= deg {
            return Some(f64::INFINITY);
        }
        Some(lambda / (m + 1 - deg) as f64)
    }
}

fn correction_factor(gamma: &[(usize, f64)], m: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.add(1.0);
    for &(j, g) in gamma {
        if j <= m {
            acc.add(-g * falling(m as f64, j));
        }
    }
    acc.value()
}

/// Poisson(λ) mass on 0..=kmax by the multiplicative recurrence.
pub fn poisson_pmf(lambda: f64, kmax: usize) -> Result<SignedPmf> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("Poisson mean must be positive, got {lambda}"));
    }
    let mut mass = Vec::with_capacity(kmax + 1);
    let mut current = (-lambda).exp();
    mass.push(current);
    for k in 1..=kmax {
        current *= lambda / k as f64;
        mass.push(current);
    }
    let complement = (1.0 - csum(mass.iter().copied())).max(0.0) + f64::EPSILON * (kmax + 1) as f64;
    let tail = poisson_upper_tail_chernoff(lambda, kmax + 1).min(complement);
    Ok(SignedPmf::new(mass, tail, "poisson"))
}

/// Exact distribution of Sₙ by the convolution recurrence
/// f⁽ⁱ⁾(k) = (1 − pᵢ) f⁽ⁱ⁻¹⁾(k) + pᵢ f⁽ⁱ⁻¹⁾(k − 1).
pub fn poisson_binomial_pmf(p: &ProbVector) -> SignedPmf {
    let n = p.len();
    let mut f = vec![0.0; n + 1];
    f[0] = 1.0;
    for (i, &pi) in p.as_slice().iter().enumerate() {
        let q = 1.0 - pi;
        for k in (1..=i + 1).rev() {
            f[k] = q * f[k] + pi * f[k - 1];
        }
        f[0] *= q;
    }
    SignedPmf::new(f, 0.0, "poisson-binomial")
}

/// S_{n,m} for m = 0..=mmax.
pub fn elementary_symmetric(p: &ProbVector, mmax: usize) -> Vec<f64> {
    let n = p.len();
    let top = mmax.min(n);
    let mut e = vec![0.0; top + 1];
    e[0] = 1.0;
    for (i, &pi) in p.as_slice().iter().enumerate() {
        for m in (1..=top.min(i + 1)).rev() {
            e[m] += pi * e[m - 1];
        }
    }
    e.resize(mmax + 1, 0.0);
    e
}

/// Factorial moments μₘ = m!·S_{n,m} of Sₙ; valid for every m.
pub fn factorial_moments_sn(p: &ProbVector) -> FactorialMoments {
    FactorialMoments {
        kind: MomentKind::SumOfIndicators {
            scaled: elementary_symmetric(p, p.len()),
            lambda: p.lambda(),
        },
    }
}
