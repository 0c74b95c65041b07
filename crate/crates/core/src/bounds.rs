//! Numerical checks of the moment inequalities, the distance bounds and the
//! convergence rates of the corrected measures.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corrected::{build_phi_nu, CorrectionSpec};
use crate::distances::{d2_exact_product, d2_tilde, hellinger, tv, wasserstein, weighted_l1};
use crate::error::{domain, Error, Result};
use crate::exact::c_constant;
use crate::pmf::{factorial_moments_sn, poisson_binomial_pmf, power_sums, PowerSums, ProbVector, SignedPmf};
use crate::sum::{binomial, falling, CompensatedSum};

pub const ABS_TOL: f64 = 1e-12;
pub const REL_TOL: f64 = 1e-9;
/// Equality cases: |lhs − rhs| ≤ EQ_TOL · max(1, |lhs|, |rhs|).
pub const EQ_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    LessEq,
    Equal,
}

/// One checked relation `lhs ≤ rhs` or `lhs = rhs`, optionally with a lower
/// side `lower ≤ lhs` (or `=`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub relation: Relation,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_relation: Option<Relation>,
    pub holds: bool,
    /// rhs − lhs, or the smaller gap of a two-sided report.
    pub slack: f64,
    pub tolerance: f64,
    pub inputs_digest: String,
}

fn side_ok(relation: Relation, a: f64, b: f64) -> (bool, f64) {
    match relation {
        Relation::LessEq => {
            let tol = ABS_TOL + REL_TOL * a.abs().max(b.abs());
            (a <= b + tol, tol)
        }
        Relation::Equal => {
            let tol = EQ_TOL * 1f64.max(a.abs()).max(b.abs());
            ((a - b).abs() <= tol, tol)
        }
    }
}

impl BoundReport {
    pub fn new(name: impl Into<String>, relation: Relation, lhs: f64, rhs: f64, digest: &str) -> Self {
        let (holds, tolerance) = side_ok(relation, lhs, rhs);
        Self {
            name: name.into(),
            relation,
            lhs,
            rhs,
            lower: None,
            lower_relation: None,
            holds,
            slack: rhs - lhs,
            tolerance,
            inputs_digest: digest.to_owned(),
        }
    }

    pub fn less_eq(name: impl Into<String>, lhs: f64, rhs: f64, digest: &str) -> Self {
        Self::new(name, Relation::LessEq, lhs, rhs, digest)
    }

    pub fn equal(name: impl Into<String>, lhs: f64, rhs: f64, digest: &str) -> Self {
        Self::new(name, Relation::Equal, lhs, rhs, digest)
    }

    /// `lhs = rhs` within `rel · max(|lhs|, |rhs|)`.
    pub fn equal_relative(name: impl Into<String>, lhs: f64, rhs: f64, rel: f64, digest: &str) -> Self {
        let mut r = Self::equal(name, lhs, rhs, digest);
        r.tolerance = rel * lhs.abs().max(rhs.abs());
        r.holds = (lhs - rhs).abs() <= r.tolerance;
        r
    }

    /// `lhs ≤ rhs` within a fixed absolute tolerance.
    pub fn less_eq_absolute(name: impl Into<String>, lhs: f64, rhs: f64, tol: f64, digest: &str) -> Self {
        let mut r = Self::less_eq(name, lhs, rhs, digest);
        r.tolerance = tol;
        r.holds = lhs <= rhs + tol;
        r
    }

    /// `lower (rel) lhs (rel) rhs`.
    pub fn two_sided(
        name: impl Into<String>,
        lower: (f64, Relation),
        value: f64,
        upper: (f64, Relation),
        digest: &str,
    ) -> Self {
        let (lo_ok, lo_tol) = side_ok(lower.1, lower.0, value);
        let (hi_ok, hi_tol) = side_ok(upper.1, value, upper.0);
        Self {
            name: name.into(),
            relation: upper.1,
            lhs: value,
            rhs: upper.0,
            lower: Some(lower.0),
            lower_relation: Some(lower.1),
            holds: lo_ok && hi_ok,
            slack: (upper.0 - value).min(value - lower.0),
            tolerance: lo_tol.max(hi_tol),
            inputs_digest: digest.to_owned(),
        }
    }
}

/// SHA-256 over the bit patterns of p followed by any extra integers.
pub fn inputs_digest(p: &ProbVector, extra: &[u64]) -> String {
    let mut h = Sha256::new();
    h.update((p.len() as u64).to_le_bytes());
    for x in p.as_slice() {
        h.update(x.to_bits().to_le_bytes());
    }
    for e in extra {
        h.update(e.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// θⱼ(m, s) = Σ_{k=j}^{m} (−1)^{k−j} C(m, k) λ_{k+s} λ^{m−k}.
pub fn theta(j: usize, m: usize, s: usize, ps: &PowerSums) -> Result<f64> {
    if j > m || s < 1 {
        return domain(format!("theta needs 0 <= j <= m and s >= 1 (j={j}, m={m}, s={s})"));
    }
    if ps.order() < m + s {
        return domain(format!("power sums known to order {}, need {}", ps.order(), m + s));
    }
    let lambda = ps.get(1);
    let mut acc = CompensatedSum::new();
    for k in j..=m {
        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
        acc.add(sign * binomial(m, k) * ps.get(k + s) * lambda.powi((m - k) as i32));
    }
    Ok(acc.value())
}

/// θⱼ(m, s) ≥ 0 for every j ≤ m ≤ mmax, 1 ≤ s ≤ smax.
pub fn check_theta(p: &ProbVector, mmax: usize, smax: usize) -> Result<Vec<BoundReport>> {
    let ps = power_sums(p, mmax + smax);
    let digest = inputs_digest(p, &[mmax as u64, smax as u64]);
    let mut out = Vec::new();
    for m in 0..=mmax {
        for s in 1..=smax {
            for j in 0..=m {
                let t = theta(j, m, s, &ps)?;
                out.push(BoundReport::less_eq_absolute(
                    format!("theta_{j}({m},{s}) >= 0"),
                    -t,
                    0.0,
                    ABS_TOL,
                    &digest,
                ));
            }
        }
    }
    Ok(out)
}

fn require_positive(p: &ProbVector) -> Result<f64> {
    let lambda = p.lambda();
    if !(lambda > 0.0) {
        return domain("all probabilities are zero");
    }
    Ok(lambda)
}

/// λᵐ − (m)₂/2 · λ₂ λ^{m−2}.
fn sandwich_lower(m: usize, ps: &PowerSums) -> f64 {
    let l = ps.get(1);
    l.powi(m as i32) - falling(m as f64, 2) / 2.0 * ps.get(2) * l.powi(m as i32 - 2)
}

/// Lₘ: the order-three lower bound.
pub fn lower3(m: usize, ps: &PowerSums) -> f64 {
    let l = ps.get(1);
    let (l2, l3, l4) = (ps.get(2), ps.get(3), ps.get(4));
    let mf = m as f64;
    let pw = |e: i32| l.powi(m as i32 - e);
    let terms = [
        l.powi(m as i32),
        -falling(mf, 2) / 2.0 * l2 * pw(2),
        falling(mf, 3) / 3.0 * l3 * pw(3),
        falling(mf, 4) / 8.0 * l2 * l2 * pw(4),
        -falling(mf, 4) * falling(mf, 2) / 48.0 * l4 * pw(4),
    ];
    terms.into_iter().collect::<CompensatedSum>().value()
}

/// Exact rational values of the two moment identities:
/// (μ₄(φ₃) − μ₄, 6λ₄) and (μ₅ − L₅, 4(6λ₅ + 5λλ₄ − 5λ₂λ₃)).
pub fn moment_identities_exact(p: &ProbVector) -> Result<[(f64, f64); 2]> {
    let ps: Vec<BigRational> = p
        .as_slice()
        .iter()
        .map(|&x| BigRational::from_float(x).ok_or_else(|| Error::Internal("non-finite p".into())))
        .collect::<Result<_>>()?;
    let pow_sum = |j: u32| -> BigRational {
        ps.iter().fold(BigRational::zero(), |acc, x| acc + num_traits::pow(x.clone(), j as usize))
    };
    let (l, l2, l3, l4, l5) = (pow_sum(1), pow_sum(2), pow_sum(3), pow_sum(4), pow_sum(5));
    if l.is_zero() {
        return domain("all probabilities are zero");
    }
    let mut e = vec![BigRational::zero(); 6];
    e[0] = BigRational::one();
    for x in &ps {
        for m in (1..6).rev() {
            let prev = e[m - 1].clone();
            e[m] += prev * x;
        }
    }
    let int = |i: i64| BigRational::from_integer(BigInt::from(i));
    let mu4 = &e[4] * int(24);
    let mu5 = &e[5] * int(120);
    let lp = |k: usize| num_traits::pow(l.clone(), k);
    // μ₄(φ₃) = λ⁴ − 6λ₂λ² + 8λ₃λ + 3λ₂²
    let mu4_phi3 = lp(4) - int(6) * &l2 * lp(2) + int(8) * &l3 * &l + int(3) * &l2 * &l2;
    // L₅ = λ⁵ − 10λ₂λ³ + 20λ₃λ² + 15λ₂²λ − 50λ₄λ
    let l5_bound = lp(5) - int(10) * &l2 * lp(3) + int(20) * &l3 * lp(2) + int(15) * &l2 * &l2 * &l
        - int(50) * &l4 * &l;
    let f = |r: BigRational| r.to_f64().unwrap_or(f64::NAN);
    Ok([
        (f(mu4_phi3 - mu4), f(int(6) * &l4)),
        (
            f(mu5 - l5_bound),
            f(int(4) * (int(6) * l5 + int(5) * &l * &l4 - int(5) * &l2 * &l3)),
        ),
    ])
}

/// Two-sided moment bounds λᵐ − (m)₂/2·λ₂λ^{m−2} ≤ μₘ ≤ μₘ(φ₃), m = 1..=mmax,
/// plus μ₄(φ₃) − μ₄ = 6λ₄ when mmax ≥ 4.
pub fn check_sandwich(p: &ProbVector, mmax: usize) -> Result<Vec<BoundReport>> {
    require_positive(p)?;
    if mmax < 1 {
        return domain("mmax must be at least 1");
    }
    let digest = inputs_digest(p, &[mmax as u64]);
    let ps = power_sums(p, 4);
    let sn = factorial_moments_sn(p);
    let phi3 = CorrectionSpec::moment_matched(p, 3)?.moments();
    let mut out = Vec::with_capacity(mmax + 1);
    for m in 1..=mmax {
        let mu = sn.mu(m).unwrap_or(0.0);
        let lo_rel = if m <= 2 { Relation::Equal } else { Relation::LessEq };
        let hi_rel = if m <= 3 { Relation::Equal } else { Relation::LessEq };
        out.push(BoundReport::two_sided(
            format!("sandwich m={m}"),
            (sandwich_lower(m, &ps), lo_rel),
            mu,
            (phi3.mu(m).unwrap_or(f64::NAN), hi_rel),
            &digest,
        ));
    }
    if mmax >= 4 {
        let [(gap, expected), _] = moment_identities_exact(p)?;
        out.push(BoundReport::equal_relative(
            "mu4(phi3) - mu4 = 6 lambda4",
            gap,
            expected,
            1e-10,
            &digest,
        ));
    }
    Ok(out)
}

/// Lₘ ≤ μₘ for m = 1..=mmax (equality for m ≤ 4), plus the m = 5 gap identity.
pub fn check_lower3(p: &ProbVector, mmax: usize) -> Result<Vec<BoundReport>> {
    require_positive(p)?;
    if mmax < 1 {
        return domain("mmax must be at least 1");
    }
    let digest = inputs_digest(p, &[mmax as u64]);
    let ps = power_sums(p, 4);
    let sn = factorial_moments_sn(p);
    let mut out = Vec::with_capacity(mmax + 1);
    for m in 1..=mmax {
        let rel = if m <= 4 { Relation::Equal } else { Relation::LessEq };
        out.push(BoundReport::new(
            format!("lower3 m={m}"),
            rel,
            lower3(m, &ps),
            sn.mu(m).unwrap_or(0.0),
            &digest,
        ));
    }
    if mmax >= 5 {
        let [_, (gap, expected)] = moment_identities_exact(p)?;
        out.push(BoundReport::equal_relative(
            "mu5 - L5 = 4(6 lambda5 + 5 lambda lambda4 - 5 lambda2 lambda3)",
            gap,
            expected,
            1e-10,
            &digest,
        ));
    }
    Ok(out)
}

fn poisson_measure(lambda: f64) -> Result<SignedPmf> {
    Ok(build_phi_nu(&CorrectionSpec::poisson(lambda)?, None)?.pmf)
}

/// d₂(fₙ, φ₂) against both forms of its bound, with the supporting chain.
pub fn check_theorem2(p: &ProbVector) -> Result<Vec<BoundReport>> {
    let lambda = require_positive(p)?;
    let digest = inputs_digest(p, &[2]);
    let ps = power_sums(p, 3);
    let (l2, l3) = (ps.get(2), ps.get(3));
    let e2l = (2.0 * lambda).exp();
    let spec = CorrectionSpec::moment_matched(p, 2)?;
    let d = d2_exact_product(p, &spec)?;
    let bound = (4.0 / 3.0 * l3 + l2 * l2) * e2l;
    let coarse = (4.0 / 3.0 + lambda) * e2l * l3;
    let f = poisson_binomial_pmf(p);
    let phi = build_phi_nu(&spec, None)?;
    let z = poisson_measure(lambda)?;
    Ok(vec![
        BoundReport::less_eq("d2(f_n, phi2) <= (4/3 lambda3 + lambda2^2) e^{2 lambda}", d.value, bound, &digest),
        BoundReport::less_eq("(4/3 lambda3 + lambda2^2) e^{2 lambda} <= (4/3 + lambda) e^{2 lambda} lambda3", bound, coarse, &digest),
        BoundReport::less_eq("lambda2^2 <= lambda lambda3", l2 * l2, lambda * l3, &digest),
        BoundReport::less_eq("tv(f_n, phi2) <= d2(f_n, phi2)", tv(&f, &phi.pmf).value, d.value, &digest),
        BoundReport::less_eq(
            "tv(f_n, poisson) <= (1 - e^{-lambda})/lambda lambda2",
            tv(&f, &z).value,
            (-(-lambda).exp_m1()) / lambda * l2,
            &digest,
        ),
    ])
}

/// d₂(fₙ, φ₃) ≤ (2/3)(λ² + 4λ + 3) e^{2λ} λ₄, with tv ≤ d₂.
pub fn check_theorem3(p: &ProbVector) -> Result<Vec<BoundReport>> {
    let lambda = require_positive(p)?;
    let digest = inputs_digest(p, &[3]);
    let l4 = power_sums(p, 4).get(4);
    let spec = CorrectionSpec::moment_matched(p, 3)?;
    let d = d2_exact_product(p, &spec)?;
    let bound = 2.0 / 3.0 * (lambda * lambda + 4.0 * lambda + 3.0) * (2.0 * lambda).exp() * l4;
    let f = poisson_binomial_pmf(p);
    let phi = build_phi_nu(&spec, None)?;
    Ok(vec![
        BoundReport::less_eq(
            "d2(f_n, phi3) <= 2/3 (lambda^2 + 4 lambda + 3) e^{2 lambda} lambda4",
            d.value,
            bound,
            &digest,
        ),
        BoundReport::less_eq("tv(f_n, phi3) <= d2(f_n, phi3)", tv(&f, &phi.pmf).value, d.value, &digest),
    ])
}

/// E{h(Z)(Z² + (2λ − 1)Z + λ²)} over the stored support of Z.
fn remark4_expectation<H: Fn(usize) -> f64>(h: &H, z: &SignedPmf, lambda: f64) -> f64 {
    z.mass()
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let kf = k as f64;
            w * h(k) * (kf * kf + (2.0 * lambda - 1.0) * kf + lambda * lambda)
        })
        .collect::<CompensatedSum>()
        .value()
}

/// The Poisson approximation bounds for Sₙ: classical total variation,
/// Hellinger, Wasserstein and weighted-L1 chains.
pub fn check_classic(p: &ProbVector) -> Result<Vec<BoundReport>> {
    let lambda = require_positive(p)?;
    let digest = inputs_digest(p, &[1]);
    let l2 = power_sums(p, 2).get(2);
    let e2l = (2.0 * lambda).exp();
    let f = poisson_binomial_pmf(p);
    let z = poisson_measure(lambda)?;
    let sn = factorial_moments_sn(p);
    let spec = CorrectionSpec::poisson(lambda)?;
    let d_tv = tv(&f, &z).value;
    let d_2 = d2_exact_product(p, &spec)?.value;
    let d_2t = d2_tilde(&sn, &spec.moments(), None)?.value;
    let d_h = hellinger(&f, &z)?.value;
    let hell_rhs: f64 = p.as_slice().iter().map(|&x| x.powi(3) / (1.0 - x)).sum::<f64>() / lambda;
    let mut out = vec![
        BoundReport::less_eq("tv(S_n, Z) <= lambda2", d_tv, l2, &digest),
        BoundReport::less_eq("tv(S_n, Z) <= (1 - e^{-lambda})/lambda lambda2", d_tv, -(-lambda).exp_m1() / lambda * l2, &digest),
        BoundReport::less_eq("min(1, 1/lambda)/32 lambda2 <= tv(S_n, Z)", 1f64.min(1.0 / lambda) / 32.0 * l2, d_tv, &digest),
        BoundReport::less_eq("d_H^2 <= (1/lambda) sum p^3/(1-p)", d_h * d_h, hell_rhs, &digest),
        BoundReport::less_eq("tv <= d_H sqrt(2 - d_H^2)", d_tv, d_h * (2.0 - d_h * d_h).sqrt(), &digest),
        BoundReport::less_eq("tv(S_n, Z) <= d2(S_n, Z)", d_tv, d_2, &digest),
        BoundReport::less_eq("d2(S_n, Z) <= e^{2 lambda} lambda2", d_2, e2l * l2, &digest),
        BoundReport::less_eq("d_W(S_n, Z) <= d2tilde(S_n, Z)", wasserstein(&f, &z).value, d_2t, &digest),
        BoundReport::less_eq("d2tilde(S_n, Z) <= 2(1 + lambda) e^{2 lambda} lambda2", d_2t, 2.0 * (1.0 + lambda) * e2l * l2, &digest),
    ];
    let weights: [(&str, fn(usize) -> f64); 2] = [("k", |k| k as f64), ("k^2", |k| (k * k) as f64)];
    for (label, h) in weights {
        let lhs = weighted_l1(h, &f, &z)?.value;
        let rhs = e2l / (2.0 * lambda * lambda) * remark4_expectation(&h, &z, lambda) * l2;
        out.push(BoundReport::less_eq(format!("weighted L1, h(k) = {label}"), lhs, rhs, &digest));
    }
    Ok(out)
}

/// Seeded stream of random probability vectors: n uniform on 1..=n_max,
/// each pᵢ uniform on [0, p_max].
#[derive(Debug, Clone)]
pub struct RandomCorpus {
    rng: ChaCha8Rng,
    seed: u64,
    n_max: usize,
    p_max: f64,
}

impl RandomCorpus {
    pub fn new(seed: u64, n_max: usize, p_max: f64) -> Result<Self> {
        if n_max < 1 || !(p_max > 0.0 && p_max <= 1.0) {
            return domain("corpus needs n_max >= 1 and 0 < p_max <= 1");
        }
        Ok(Self { rng: ChaCha8Rng::seed_from_u64(seed), seed, n_max, p_max })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_probs(&mut self) -> ProbVector {
        loop {
            let n = self.rng.gen_range(1..=self.n_max);
            let probs: Vec<f64> = (0..n).map(|_| self.rng.gen_range(0.0..=self.p_max)).collect();
            let p = ProbVector::new(probs).expect("generated probabilities lie in [0, 1]");
            if !p.is_empty() {
                return p;
            }
        }
    }

    pub fn gen_range(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.gen_range(lo..=hi)
    }
}

impl Iterator for RandomCorpus {
    type Item = ProbVector;
    fn next(&mut self) -> Option<ProbVector> {
        Some(self.next_probs())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSummary {
    pub seed: u64,
    pub vectors: usize,
    pub reports: usize,
    pub min_slack: f64,
    pub failures: Vec<BoundReport>,
}

/// Runs `check` on `count` corpus vectors; digests are re-stamped with the
/// seed and the vector index.
pub fn run_corpus<F>(corpus: &mut RandomCorpus, count: usize, check: F) -> Result<CorpusSummary>
where
    F: Fn(&ProbVector) -> Result<Vec<BoundReport>>,
{
    let mut summary = CorpusSummary {
        seed: corpus.seed(),
        vectors: count,
        reports: 0,
        min_slack: f64::INFINITY,
        failures: Vec::new(),
    };
    for i in 0..count {
        let p = corpus.next_probs();
        let digest = inputs_digest(&p, &[corpus.seed(), i as u64]);
        for mut r in check(&p)? {
            r.inputs_digest.clone_from(&digest);
            summary.reports += 1;
            if r.relation == Relation::LessEq {
                summary.min_slack = summary.min_slack.min(r.slack);
            }
            if !r.holds {
                summary.failures.push(r);
            }
        }
    }
    Ok(summary)
}

/// Approximant whose convergence rate is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approximant {
    /// φ_ν: Poisson for ν = 1, moment-matched for ν = 2, 3, exact table γ beyond.
    Order(usize),
    Phi3Tilde,
}

impl Approximant {
    pub fn label(&self) -> String {
        match self {
            Approximant::Order(nu) => nu.to_string(),
            Approximant::Phi3Tilde => "phi3-tilde".to_owned(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "phi3-tilde" | "3t" | "tilde" => Ok(Approximant::Phi3Tilde),
            t => t
                .parse::<usize>()
                .ok()
                .filter(|&nu| nu >= 1)
                .map(Approximant::Order)
                .ok_or_else(|| Error::Parse(format!("unknown order '{t}'"))),
        }
    }

    pub fn spec(&self, p: &ProbVector, n: u64, lambda: f64) -> Result<CorrectionSpec> {
        match *self {
            Approximant::Order(1) => CorrectionSpec::poisson(p.lambda()),
            Approximant::Order(nu @ (2 | 3)) => CorrectionSpec::moment_matched(p, nu),
            Approximant::Order(nu) => CorrectionSpec::binomial(n, lambda, nu),
            Approximant::Phi3Tilde => CorrectionSpec::phi3_tilde(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMetric {
    Tv,
    D2,
}

#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub n: u64,
    pub distance: f64,
    /// C_ν(λ) n^{−ν} where an explicit constant exists.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub order: String,
    pub lambda: f64,
    pub metric: RateMetric,
    pub grid: Vec<u64>,
    pub distances: Vec<f64>,
    pub bounds: Vec<Option<f64>>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// r² ≥ 0.98
    pub reliable: bool,
    /// Grid points whose distance was not strictly positive.
    pub dropped: Vec<u64>,
}

/// Distance between Bin(n, λ/n) and the approximant, with its explicit bound.
pub fn rate_point(lambda: f64, n: u64, approx: Approximant, metric: RateMetric) -> Result<RatePoint> {
    let p = ProbVector::equal(n as usize, lambda)?;
    let spec = approx.spec(&p, n, lambda)?;
    let distance = match metric {
        RateMetric::D2 => d2_exact_product(&p, &spec)?.value,
        RateMetric::Tv => tv(&poisson_binomial_pmf(&p), &build_phi_nu(&spec, None)?.pmf).value,
    };
    let bound = match approx {
        Approximant::Order(nu) if nu <= 11 => {
            Some(c_constant(nu, lambda)?.closed_form * (n as f64).powi(-(nu as i32)))
        }
        _ => None,
    };
    Ok(RatePoint { n, distance, bound })
}

/// Ordinary least squares of y on x: (slope, intercept, r²).
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

fn validate_grid(lambda: f64, grid: &[u64]) -> Result<()> {
    if !(lambda > 0.0) {
        return domain("lambda must be positive");
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return domain("n grid must be strictly increasing");
    }
    if let Some(&n) = grid.iter().find(|&&n| (n as f64) < 2.0 * lambda) {
        return domain(format!("grid entry {n} is below 2 lambda"));
    }
    Ok(())
}

/// Fits log distance against log n along the grid, one fit per approximant.
pub fn fit_rate(lambda: f64, orders: &[Approximant], grid: &[u64], metric: RateMetric) -> Result<Vec<RateFit>> {
    validate_grid(lambda, grid)?;
    let mut fits = Vec::with_capacity(orders.len());
    for &approx in orders {
        let points = grid
            .iter()
            .map(|&n| rate_point(lambda, n, approx, metric))
            .collect::<Result<Vec<_>>>()?;
        fits.push(fit_points(lambda, approx, metric, points)?);
    }
    Ok(fits)
}

pub fn fit_points(lambda: f64, approx: Approximant, metric: RateMetric, points: Vec<RatePoint>) -> Result<RateFit> {
    let (kept, dropped): (Vec<_>, Vec<_>) = points
        .into_iter()
        .partition(|pt| pt.distance > 0.0 && pt.distance.is_finite());
    if kept.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "order {}: {} usable grid points, need at least 3",
            approx.label(),
            kept.len()
        )));
    }
    let x: Vec<f64> = kept.iter().map(|pt| (pt.n as f64).ln()).collect();
    let y: Vec<f64> = kept.iter().map(|pt| pt.distance.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&x, &y);
    Ok(RateFit {
        order: approx.label(),
        lambda,
        metric,
        grid: kept.iter().map(|pt| pt.n).collect(),
        distances: kept.iter().map(|pt| pt.distance).collect(),
        bounds: kept.iter().map(|pt| pt.bound).collect(),
        slope,
        intercept,
        r_squared,
        reliable: r_squared >= 0.98,
        dropped: dropped.iter().map(|pt| pt.n).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Remark2Report {
    pub lambda: f64,
    /// e^{−λ}λ⁴/8
    pub limit: f64,
    pub grid: Vec<u64>,
    /// n²(fₙ(0) − φ̃₃(0)) per grid point.
    pub values: Vec<f64>,
    /// |value − limit| / limit at the largest n.
    pub relative_error: f64,
    /// The last point is closer to the limit than the first.
    pub approaching: bool,
}

/// n²(fₙ(0) − φ̃₃(0)) for Bin(n, λ/n), free of cancellation.
///
/// With x = λ/n, fₙ(0) = e^{−λ}e^{B} where B = −λ²/(2n) − λ³/(3n²) + T and
/// T = −Σ_{r≥4} λʳ/(r n^{r−1}); the difference is e^{−λ}(T + Σ_{k≥2} Bᵏ/k!).
pub fn remark2_value(lambda: f64, n: u64) -> f64 {
    let nf = n as f64;
    let x = lambda / nf;
    let mut tail = CompensatedSum::new();
    let mut power = lambda.powi(4) / nf.powi(3);
    for r in 4..10_000 {
        let t = power / r as f64;
        tail.add(-t);
        if t < 1e-30 * tail.value().abs() {
            break;
        }
        power *= x;
    }
    let t = tail.value();
    let b = -lambda * lambda / (2.0 * nf) - lambda.powi(3) / (3.0 * nf * nf) + t;
    let mut exp_rest = CompensatedSum::new();
    let mut term = b;
    for k in 2..200 {
        term *= b / k as f64;
        exp_rest.add(term);
        if term.abs() < 1e-30 * exp_rest.value().abs() {
            break;
        }
    }
    nf * nf * (-lambda).exp() * (t + exp_rest.value())
}

pub fn check_remark2(lambda: f64, grid: &[u64]) -> Result<Remark2Report> {
    validate_grid(lambda, grid)?;
    if grid.last().is_none_or(|&n| n < 1000) {
        return domain("the phi3-tilde limit check needs a grid reaching n >= 1000");
    }
    let limit = (-lambda).exp() * lambda.powi(4) / 8.0;
    let values: Vec<f64> = grid.iter().map(|&n| remark2_value(lambda, n)).collect();
    let first = (values[0] - limit).abs();
    let last = (values[values.len() - 1] - limit).abs();
    Ok(Remark2Report {
        lambda,
        limit,
        grid: grid.to_vec(),
        values,
        relative_error: last / limit,
        approaching: last < first,
    })
}

impl Remark2Report {
    /// Within 5% of the limit at the largest n.
    pub fn as_bound_report(&self) -> BoundReport {
        let mut r = BoundReport::less_eq(
            "|n^2 (f_n(0) - phi3tilde(0)) - e^{-lambda} lambda^4/8| / limit <= 0.05",
            self.relative_error,
            0.05,
            &format!("lambda={:e}", self.lambda),
        );
        r.holds &= self.approaching;
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn theta_first_case_is_cauchy_gap() {
        let p = pv(&[0.2, 0.5, 0.1]);
        let ps = power_sums(&p, 4);
        let t = theta(0, 1, 1, &ps).unwrap();
        assert!((t - (ps.get(1).powi(2) - ps.get(2))).abs() < 1e-15);
        assert!(theta(0, 4, 1, &power_sums(&p, 3)).is_err());
        assert!(theta(2, 1, 1, &ps).is_err());
    }

    #[test]
    fn theta_equal_p() {
        let p = ProbVector::equal(5, 1.0).unwrap();
        assert!(theta(1, 3, 2, &power_sums(&p, 5)).unwrap() >= 0.0);
    }

    #[test]
    fn sandwich_small_vector() {
        let reports = check_sandwich(&pv(&[0.3, 0.4, 0.5]), 15).unwrap();
        assert_eq!(reports.len(), 16);
        assert!(reports.iter().all(|r| r.holds), "{reports:#?}");
        assert!((reports[0].lhs - 1.2).abs() < 1e-15);
    }

    #[test]
    fn lower3_identities() {
        let reports = check_lower3(&pv(&[0.3, 0.4, 0.5, 0.05]), 12).unwrap();
        assert!(reports.iter().all(|r| r.holds), "{reports:#?}");
    }

    #[test]
    fn theorems_on_equal_p() {
        let p = ProbVector::equal(10, 1.0).unwrap();
        let t2 = check_theorem2(&p).unwrap();
        let t3 = check_theorem3(&p).unwrap();
        assert!(t2[0].slack > 0.0 && t3[0].slack > 0.0);
        // equal p makes the Cauchy step an equality
        assert!(t2[2].slack.abs() < 1e-15);
        assert!(t2.iter().chain(&t3).all(|r| r.holds), "{t2:?} {t3:?}");
        assert!(check_theorem3(&pv(&[0.5])).unwrap().iter().all(|r| r.holds));
    }

    #[test]
    fn classic_bounds_hold() {
        let reports = check_classic(&pv(&[0.1, 0.7, 0.3, 0.9, 0.02])).unwrap();
        assert!(reports.iter().all(|r| r.holds), "{reports:#?}");
    }

    #[test]
    fn least_squares_exact_line() {
        let (s, i, r2) = least_squares(&[0.0, 1.0, 2.0], &[1.0, -1.0, -3.0]);
        assert!((s + 2.0).abs() < 1e-15 && (i - 1.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fit_refuses_short_grids() {
        let err = fit_rate(1.0, &[Approximant::Order(2)], &[4], RateMetric::D2).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        assert!(fit_rate(1.0, &[Approximant::Order(2)], &[8, 4, 16], RateMetric::D2).is_err());
        assert!(fit_rate(3.0, &[Approximant::Order(2)], &[4, 8, 16], RateMetric::D2).is_err());
    }

    #[test]
    fn remark2_matches_direct_evaluation_at_small_n() {
        let (lambda, n) = (1.0f64, 10u64);
        let direct = (1.0 - lambda / n as f64).powi(n as i32)
            - (-lambda).exp() * (1.0 - lambda * lambda / 20.0 - lambda.powi(3) / 300.0);
        assert!((remark2_value(lambda, n) - 100.0 * direct).abs() < 1e-12);
    }

    #[test]
    fn corpus_is_reproducible() {
        let a: Vec<_> = RandomCorpus::new(7, 10, 0.5).unwrap().take(5).collect();
        let b: Vec<_> = RandomCorpus::new(7, 10, 0.5).unwrap().take(5).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.max_prob() <= 0.5 && p.len() <= 10));
    }
}
