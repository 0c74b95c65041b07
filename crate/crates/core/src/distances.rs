//! Distances between finitely supported (possibly signed) mass functions and
//! between factorial moment sequences.

use serde::Serialize;

use crate::corrected::CorrectionSpec;
use crate::error::{domain, Error, Result};
use crate::hiprec::exact_product_difference;
use crate::pmf::{factorial_moments_sn, FactorialMoments, ProbVector, SignedPmf};
use crate::sum::{falling, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pointwise,
    MomentSeries,
    ExactProduct,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceResult {
    pub value: f64,
    /// Bound on the contribution of discarded terms; infinite when no bound
    /// could be certified.
    pub truncation_error: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl DistanceResult {
    fn new(value: f64, truncation_error: f64, method: Method) -> Self {
        Self { value, truncation_error, method, diagnostic: None }
    }
}

fn joint_len(g1: &SignedPmf, g2: &SignedPmf) -> usize {
    g1.support_max().max(g2.support_max()) + 1
}

/// ½ Σₖ |g₁(k) − g₂(k)|.
pub fn tv(g1: &SignedPmf, g2: &SignedPmf) -> DistanceResult {
    let sum: CompensatedSum = (0..joint_len(g1, g2)).map(|k| (g1.at(k) - g2.at(k)).abs()).collect();
    DistanceResult::new(
        0.5 * sum.value(),
        0.5 * (g1.tail_bound() + g2.tail_bound()),
        Method::Pointwise,
    )
}

/// Σₖ h(k) |g₁(k) − g₂(k)| for h ≥ 0.
///
/// The truncation error is an estimate: h at the first omitted point times
/// twice the combined tail mass.
pub fn weighted_l1<H: Fn(usize) -> f64>(h: H, g1: &SignedPmf, g2: &SignedPmf) -> Result<DistanceResult> {
    let len = joint_len(g1, g2);
    let mut acc = CompensatedSum::new();
    for k in 0..len {
        let w = h(k);
        if !(w >= 0.0) {
            return domain(format!("weight h({k}) = {w} is negative"));
        }
        acc.add(w * (g1.at(k) - g2.at(k)).abs());
    }
    let tails = g1.tail_bound() + g2.tail_bound();
    let err = if tails == 0.0 { 0.0 } else { 2.0 * h(len).abs() * tails };
    Ok(DistanceResult::new(acc.value(), err, Method::Pointwise))
}

/// Σ_{m≥1} |P(X ≥ m) − P(Y ≥ m)|, tails by reverse cumulative sums.
///
/// The truncation error is an estimate, 2(K+1) times the combined tail mass.
pub fn wasserstein(g1: &SignedPmf, g2: &SignedPmf) -> DistanceResult {
    let len = joint_len(g1, g2);
    let mut tail = CompensatedSum::new();
    let mut acc = CompensatedSum::new();
    for k in (1..len).rev() {
        tail.add(g1.at(k) - g2.at(k));
        acc.add(tail.value().abs());
    }
    let tails = g1.tail_bound() + g2.tail_bound();
    DistanceResult::new(acc.value(), 2.0 * len as f64 * tails, Method::Pointwise)
}

/// d_H with d_H² = ½ Σ (√g₁ − √g₂)²; both inputs must be nonnegative.
pub fn hellinger(g1: &SignedPmf, g2: &SignedPmf) -> Result<DistanceResult> {
    for g in [g1, g2] {
        if !g.is_proper() {
            return Err(Error::SignedMeasure(format!(
                "Hellinger distance is undefined for the signed measure '{}'",
                g.label()
            )));
        }
    }
    let sum: CompensatedSum = (0..joint_len(g1, g2))
        .map(|k| {
            let d = g1.at(k).sqrt() - g2.at(k).sqrt();
            d * d
        })
        .collect();
    let tails = g1.tail_bound() + g2.tail_bound();
    Ok(DistanceResult::new(
        (0.5 * sum.value()).sqrt(),
        (0.5 * tails).sqrt(),
        Method::Pointwise,
    ))
}

#[derive(Clone, Copy)]
enum Weighting {
    /// ½ 2ᵐ/m!
    D2,
    /// 2^{m−1}/(m−1)!
    D2Tilde,
}

impl Weighting {
    /// Weight applied to |Δ(μₘ/m!)|.
    fn on_scaled(self, m: usize) -> f64 {
        let p = 2f64.powi(m as i32 - 1);
        match self {
            Weighting::D2 => p,
            Weighting::D2Tilde => p * m as f64,
        }
    }

    fn growth(self, m: usize) -> f64 {
        match self {
            Weighting::D2 => 2.0,
            Weighting::D2Tilde => 2.0 * (m + 1) as f64 / m as f64,
        }
    }
}

const MAX_SERIES_TERMS: usize = 20_000;
/// Automatic cutoff stops once the certified tail is this small relative to the sum.
const SERIES_RELATIVE_TOL: f64 = 1e-17;

fn moment_series(
    m1: &FactorialMoments,
    m2: &FactorialMoments,
    mmax: Option<usize>,
    w: Weighting,
) -> Result<DistanceResult> {
    let limit = match (m1.exact_upto(), m2.exact_upto()) {
        (None, None) => None,
        (a, b) => Some(a.unwrap_or(usize::MAX).min(b.unwrap_or(usize::MAX))),
    };
    let lam = m1.lambda().unwrap_or(0.0).max(m2.lambda().unwrap_or(0.0));
    let deg = m1.degree().max(m2.degree());
    let n = m1.indicator_count().unwrap_or(0).max(m2.indicator_count().unwrap_or(0));
    let both_finite = m1.indicator_count().is_some() && m2.indicator_count().is_some();
    let start = mmax.unwrap_or_else(|| n.max((8.0 * lam).ceil() as usize + 2 * deg)).max(1);
    if let Some(top) = limit {
        if mmax.is_some_and(|m| m > top) {
            return domain(format!("moments are only tabulated up to m = {top}"));
        }
    }
    let start = limit.map_or(start, |top| start.min(top));

    let term = |m: usize| -> Result<f64> {
        let (a, b) = (m1.scaled(m), m2.scaled(m));
        match (a, b) {
            (Some(a), Some(b)) => Ok(w.on_scaled(m) * (a - b).abs()),
            _ => domain(format!("moment m = {m} unavailable")),
        }
    };
    // Tail beyond `last`, or None when the envelope ratio is not yet below `cap`.
    let tail_after = |last: usize, cap: f64| -> Option<f64> {
        if both_finite && last >= n {
            return Some(0.0);
        }
        let first = last + 1;
        let env = m1.envelope(first)? + m2.envelope(first)?;
        let r = m1.envelope_ratio(first)?.max(m2.envelope_ratio(first)?) * w.growth(first);
        (r < cap).then(|| w.on_scaled(first) * env / (1.0 - r))
    };

    let mut acc = CompensatedSum::new();
    for m in 1..=start {
        acc.add(term(m)?);
    }
    let mut last = start;
    let tail = if limit.is_some() {
        f64::INFINITY
    } else if mmax.is_some() {
        tail_after(last, 1.0).unwrap_or(f64::INFINITY)
    } else {
        loop {
            if let Some(t) = tail_after(last, 0.5) {
                if t <= (SERIES_RELATIVE_TOL * acc.value()).max(f64::MIN_POSITIVE) {
                    break t;
                }
            }
            if last >= MAX_SERIES_TERMS {
                break f64::INFINITY;
            }
            last += 1;
            acc.add(term(last)?);
        }
    };
    Ok(DistanceResult::new(acc.value(), tail, Method::MomentSeries))
}

/// d₂ = ½ Σ_{m≥1} 2ᵐ/m! |μₘ(g₁) − μₘ(g₂)|, cut off automatically when
/// `mmax` is `None`.
pub fn d2(m1: &FactorialMoments, m2: &FactorialMoments, mmax: Option<usize>) -> Result<DistanceResult> {
    moment_series(m1, m2, mmax, Weighting::D2)
}

/// d̃₂ = Σ_{m≥1} 2^{m−1}/(m−1)! |μₘ(g₁) − μₘ(g₂)|.
pub fn d2_tilde(m1: &FactorialMoments, m2: &FactorialMoments, mmax: Option<usize>) -> Result<DistanceResult> {
    moment_series(m1, m2, mmax, Weighting::D2Tilde)
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationCheck {
    /// +1 when μₘ(Sₙ) ≥ μₘ(φ) for every m, −1 when ≤, 0 when all equal.
    pub sign: i8,
    pub checked_upto: usize,
    /// First m whose difference has the opposite sign, if any.
    pub violation: Option<usize>,
}

/// Largest real root of 1 − Σ γⱼ (m)ⱼ is below this (Fujiwara bound).
fn correction_root_bound(gamma: &[(usize, f64)]) -> usize {
    let deg = gamma.iter().map(|&(j, _)| j).max().unwrap_or(0);
    if deg == 0 {
        return 0;
    }
    let mut coeffs = vec![0.0; deg + 1];
    coeffs[0] = 1.0;
    for &(j, g) in gamma {
        // (m)ⱼ in monomials
        let mut f = vec![1.0];
        for i in 0..j {
            let mut next = vec![0.0; f.len() + 1];
            for (d, c) in f.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= c * i as f64;
            }
            f = next;
        }
        for (d, c) in f.iter().enumerate() {
            coeffs[d] -= g * c;
        }
    }
    // Fujiwara: every root has modulus ≤ 2 max |cᵢ/c_deg|^{1/(deg−i)}.
    let lead = coeffs[deg];
    let radius = coeffs[..deg]
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let r = (c / lead).abs();
            if i == 0 {
                (r / 2.0).powf(1.0 / deg as f64)
            } else {
                r.powf(1.0 / (deg - i) as f64)
            }
        })
        .fold(0.0, f64::max);
    (2.0 * radius).ceil() as usize
}

/// Checks that μₘ(Sₙ) − μₘ(φ) keeps one sign for all m ≥ 1.
///
/// Past n the first term vanishes and the sign is that of the correction
/// polynomial, which is constant beyond its root bound; checking up to both
/// covers every m. Both sides are compared as multiples of λ_φᵐ so nothing
/// underflows; differences within 1e−12 of the summand envelope count as zero.
pub fn check_domination(p: &ProbVector, spec: &CorrectionSpec) -> DominationCheck {
    let gamma = spec.gamma_pairs();
    let top = p.len().max(correction_root_bound(&gamma)) + 1;
    let lambda_s = p.lambda();
    let log_rho = (lambda_s / spec.lambda()).ln();

    // t[k] = μₖ(Sₙ)/λₛᵏ = k! eₖ(p/λₛ), which stays in [0, 1].
    let mut t = vec![0.0; p.len() + 1];
    t[0] = 1.0;
    if lambda_s > 0.0 {
        for (i, &pi) in p.as_slice().iter().enumerate() {
            let q = pi / lambda_s;
            for k in (1..=i + 1).rev() {
                t[k] += k as f64 * q * t[k - 1];
            }
        }
    }

    let mut sign = 0i8;
    let mut violation = None;
    for m in 1..=top {
        let tm = t.get(m).copied().unwrap_or(0.0);
        let a = if tm > 0.0 { (tm.ln() + m as f64 * log_rho).exp() } else { 0.0 };
        let mut b = CompensatedSum::new();
        b.add(1.0);
        let mut envelope = 1.0;
        for &(j, g) in &gamma {
            let f = falling(m as f64, j);
            b.add(-g * f);
            envelope += g.abs() * f.abs();
        }
        let d = a - b.value();
        if a.is_finite() && d.abs() <= 1e-12 * a.max(envelope) {
            continue;
        }
        let s = if d > 0.0 { 1 } else { -1 };
        if sign == 0 {
            sign = s;
        } else if s != sign {
            violation = Some(m);
            break;
        }
    }
    DominationCheck { sign, checked_upto: top, violation }
}

/// d₂(Sₙ, φ) = ½ |∏(1 + 2pᵢ) − e^{2λ}(1 − Σ γⱼ (2λ)ʲ)| when the moment
/// differences are one-signed; otherwise the moment series with a diagnostic.
pub fn d2_exact_product(p: &ProbVector, spec: &CorrectionSpec) -> Result<DistanceResult> {
    let dom = check_domination(p, spec);
    if let Some(m) = dom.violation {
        let mut r = d2(&factorial_moments_sn(p), &spec.moments(), None)?;
        r.diagnostic = Some(format!(
            "moment differences change sign at m = {m}; exact product formula not applicable"
        ));
        return Ok(r);
    }
    let diff = exact_product_difference(p.as_slice(), spec.lambda(), &spec.gamma_pairs())
        .ok_or_else(|| Error::Domain("inputs not representable in fixed point".into()))?;
    Ok(DistanceResult::new(0.5 * diff.abs(), 0.0, Method::ExactProduct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corrected::build_phi2;
    use crate::pmf::{poisson_binomial_pmf, poisson_pmf};

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn tv_bernoulli_vs_poisson() {
        let p = 0.3;
        let f = poisson_binomial_pmf(&pv(&[p]));
        let z = poisson_pmf(p, 40).unwrap();
        let r = tv(&f, &z);
        assert!((r.value - p * (1.0 - (-p).exp())).abs() < 1e-15);
        assert_eq!(tv(&z, &z).value, 0.0);
    }

    #[test]
    fn point_masses() {
        let r = wasserstein(&SignedPmf::point_mass(0), &SignedPmf::point_mass(3));
        assert_eq!(r.value, 3.0);
        assert_eq!(r.truncation_error, 0.0);
    }

    #[test]
    fn single_indicator_series() {
        let p = pv(&[0.5]);
        let sn = factorial_moments_sn(&p);
        let z = FactorialMoments::poisson(0.5);
        let r = d2(&sn, &z, None).unwrap();
        assert!((r.value - 0.5 * (1f64.exp() - 2.0)).abs() < 1e-14);
        assert!(r.truncation_error < 1e-14);
        let r = d2_tilde(&sn, &z, None).unwrap();
        assert!((r.value - 0.5 * (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn exact_product_matches_series() {
        let p = pv(&[0.1, 0.2, 0.3]);
        let spec = CorrectionSpec::moment_matched(&p, 2).unwrap();
        let exact = d2_exact_product(&p, &spec).unwrap();
        assert_eq!(exact.method, Method::ExactProduct);
        let series = d2(&factorial_moments_sn(&p), &spec.moments(), None).unwrap();
        assert!((exact.value - series.value).abs() <= 1e-12 * series.value);
    }

    #[test]
    fn poisson_domination_always_certifies() {
        let p = pv(&[0.9, 0.05, 0.5]);
        let spec = CorrectionSpec::poisson(p.lambda()).unwrap();
        let dom = check_domination(&p, &spec);
        assert_eq!(dom.sign, -1);
        assert!(dom.violation.is_none());
    }

    #[test]
    fn sign_change_falls_back() {
        let p = pv(&[0.3, 0.3]);
        // μ₂ difference is negative, large-m differences positive
        let gamma = std::collections::BTreeMap::from([(2, -0.4), (3, 0.2)]);
        let spec = CorrectionSpec::new(3, p.lambda(), gamma).unwrap();
        let r = d2_exact_product(&p, &spec).unwrap();
        assert_eq!(r.method, Method::MomentSeries);
        assert!(r.diagnostic.is_some());
    }

    #[test]
    fn hellinger_rejects_signed() {
        let p = pv(&[0.5, 0.5]);
        let phi = build_phi2(&p, None).unwrap();
        let f = poisson_binomial_pmf(&p);
        assert!(phi.pmf.is_proper() || hellinger(&f, &phi.pmf).is_err());
        let neg = SignedPmf::new(vec![1.2, -0.2], 0.0, "neg");
        assert!(matches!(hellinger(&f, &neg), Err(Error::SignedMeasure(_))));
    }

    #[test]
    fn weighted_l1_unit_weight_is_twice_tv() {
        let f = poisson_binomial_pmf(&pv(&[0.2, 0.4]));
        let z = poisson_pmf(0.6, 30).unwrap();
        let w = weighted_l1(|_| 1.0, &f, &z).unwrap();
        assert!((w.value - 2.0 * tv(&f, &z).value).abs() < 1e-15);
        assert!(weighted_l1(|k| 1.0 - k as f64, &f, &z).is_err());
    }

    #[test]
    fn domination_sees_sign_change_past_underflow() {
        // For Bin(128, 1/128) against phi3-tilde the differences change sign
        // near m = 1.3 n, where λᵐ/m! is below the f64 range.
        let p = ProbVector::equal(128, 1.0).unwrap();
        let spec = CorrectionSpec::phi3_tilde(&p).unwrap();
        assert!(check_domination(&p, &spec).violation.is_some());
        let r = d2_exact_product(&p, &spec).unwrap();
        assert_eq!(r.method, Method::MomentSeries);
        assert!((r.value - 4.3252494706062539e-4).abs() < 1e-15);
    }

    #[test]
    fn root_bound_covers_roots() {
        // 1 − (m)₂/2: roots of m² − m − 2 are 2 and −1
        assert!(correction_root_bound(&[(2, 0.5)]) >= 2);
    }
}
