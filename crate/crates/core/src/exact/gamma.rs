//! Exact γⱼ(ν) coefficients for the binomial case, as polynomials in 1/n.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use super::poly::{rat, RationalPolynomial};
use super::stirling::a_polynomial;
use crate::error::{domain, Error, Result};

pub const MAX_TABLE_ORDER: usize = 8;

/// γⱼ(ν) for j = 2..=2ν−2; each entry is a polynomial in t = 1/n.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    nu: usize,
    entries: BTreeMap<usize, RationalPolynomial>,
}

impl GammaTable {
    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn entries(&self) -> &BTreeMap<usize, RationalPolynomial> {
        &self.entries
    }

    /// γⱼ as a polynomial in 1/n; zero polynomial when j is out of range.
    pub fn entry(&self, j: usize) -> RationalPolynomial {
        self.entries.get(&j).cloned().unwrap_or_default()
    }

    /// Numerical γⱼ at a given n.
    pub fn evaluate(&self, n: u64) -> Vec<(usize, f64)> {
        let t = BigRational::new(BigInt::from(1), BigInt::from(n));
        self.entries
            .iter()
            .map(|(&j, poly)| (j, poly.eval(&t).to_f64().unwrap_or(f64::NAN)))
            .collect()
    }

    /// JSON view: `{"nu": ν, "gamma": {"j": [[power, "num/den"], …]}}`.
    pub fn export(&self) -> GammaTableExport {
        GammaTableExport {
            nu: self.nu,
            gamma: self
                .entries
                .iter()
                .map(|(&j, poly)| {
                    let terms = poly
                        .coeffs()
                        .iter()
                        .enumerate()
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(k, c)| (k, rational_string(c)))
                        .collect();
                    (j, terms)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaTableExport {
    pub nu: usize,
    pub gamma: BTreeMap<usize, Vec<(usize, String)>>,
}

/// Always "num/den", including integers.
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Solves 1 − Σⱼ γⱼ (m)ⱼ = Σ_{k<ν} (−1)ᵏ Aₖ(m−1) n⁻ᵏ as an identity in m.
pub fn solve_gamma_table(nu: usize) -> Result<GammaTable> {
    if !(2..=MAX_TABLE_ORDER).contains(&nu) {
        return domain(format!("gamma table supports 2 <= nu <= {MAX_TABLE_ORDER}, got {nu}"));
    }
    let mut entries: BTreeMap<usize, RationalPolynomial> = BTreeMap::new();
    for k in 1..nu {
        let falling = a_polynomial(k)?.to_falling_basis();
        if falling.iter().take(2).any(|c| !c.is_zero()) {
            return Err(Error::Internal(format!(
                "A_{k} has a component on (m)_0 or (m)_1; system is inconsistent"
            )));
        }
        let sign = if k % 2 == 1 { rat(1, 1) } else { rat(-1, 1) };
        for (j, b) in falling.iter().enumerate().skip(2) {
            if b.is_zero() {
                continue;
            }
            let term = RationalPolynomial::monomial(b * &sign, k);
            let slot = entries.entry(j).or_default();
            *slot = std::mem::take(slot) + term;
        }
    }
    for j in 2..=2 * nu - 2 {
        entries.entry(j).or_default();
    }
    Ok(GammaTable { nu, entries })
}

/// One printed term of the published γ table: coefficient of n^{-power} in γⱼ.
#[derive(Debug, Clone, Copy)]
pub struct PublishedTerm {
    pub j: usize,
    pub power: usize,
    pub num: i64,
    pub den: i64,
    /// Marked as a likely misprint; see [`compare_with_published`].
    pub typo_candidate: bool,
}

const fn term(j: usize, power: usize, num: i64, den: i64) -> PublishedTerm {
    PublishedTerm { j, power, num, den, typo_candidate: false }
}

/// The published table for ν = 2..7. A term with power k appears in every
/// column ν ≥ k + 1 with 2ν − 2 ≥ j.
pub const PUBLISHED_TABLE: &[PublishedTerm] = &[
    term(2, 1, 1, 2),
    term(3, 2, -1, 3),
    term(4, 2, -1, 8),
    term(4, 3, 1, 4),
    term(5, 3, 1, 6),
    term(5, 4, -1, 5),
    term(6, 3, 1, 48),
    term(6, 4, -13, 72),
    term(6, 5, 1, 6),
    term(7, 4, -1, 24),
    term(7, 5, 11, 60),
    term(7, 6, -1, 7),
    term(8, 4, -1, 384),
    PublishedTerm { j: 8, power: 5, num: 17, den: 388, typo_candidate: true },
    term(8, 6, -29, 160),
    term(9, 5, 1, 144),
    term(9, 6, -59, 810),
    term(10, 5, 1, 3840),
    term(10, 6, -7, 576),
    term(11, 6, -1, 1152),
    term(12, 6, -1, 46080),
];

pub const PUBLISHED_MAX_NU: usize = 7;

/// Column ν of the published table.
pub fn published_column(nu: usize) -> Option<BTreeMap<usize, RationalPolynomial>> {
    if !(2..=PUBLISHED_MAX_NU).contains(&nu) {
        return None;
    }
    let mut col: BTreeMap<usize, RationalPolynomial> = BTreeMap::new();
    for t in PUBLISHED_TABLE.iter().filter(|t| t.power < nu && t.j <= 2 * nu - 2) {
        let slot = col.entry(t.j).or_default();
        *slot = std::mem::take(slot) + RationalPolynomial::monomial(rat(t.num, t.den), t.power);
    }
    Some(col)
}

#[derive(Debug, Clone, Serialize)]
pub struct TableMismatch {
    pub nu: usize,
    pub j: usize,
    pub power: usize,
    pub published: String,
    pub computed: String,
    /// The published entry was already flagged as a likely misprint.
    pub typo_candidate: bool,
}

/// Term-by-term differences between the solver and the published column.
pub fn compare_with_published(table: &GammaTable) -> Option<Vec<TableMismatch>> {
    let nu = table.nu();
    let published = published_column(nu)?;
    let mut out = Vec::new();
    let js: std::collections::BTreeSet<usize> =
        published.keys().chain(table.entries().keys()).copied().collect();
    for j in js {
        let mine = table.entry(j);
        let theirs = published.get(&j).cloned().unwrap_or_default();
        let len = mine.coeffs().len().max(theirs.coeffs().len());
        for power in 0..len {
            let (a, b) = (mine.coeff(power), theirs.coeff(power));
            if a != b {
                let typo_candidate = PUBLISHED_TABLE
                    .iter()
                    .any(|t| t.j == j && t.power == power && t.typo_candidate);
                out.push(TableMismatch {
                    nu,
                    j,
                    power,
                    published: rational_string(&b),
                    computed: rational_string(&a),
                    typo_candidate,
                });
            }
        }
    }
    Some(out)
}
