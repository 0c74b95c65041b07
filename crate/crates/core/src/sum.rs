//! Compensated accumulation and small numeric helpers shared by every module.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of terms.
pub fn csum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    terms.into_iter().collect::<CompensatedSum>().value()
}

/// ln(k!) by direct summation; exact enough for the k used here.
pub fn ln_factorial(k: usize) -> f64 {
    csum((2..=k).map(|i| (i as f64).ln()))
}

/// m! as f64 (infinite past 170).
pub fn factorial(m: usize) -> f64 {
    (1..=m).fold(1.0, |acc, i| acc * i as f64)
}

/// Binomial coefficient C(n, k) as f64.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Falling factorial (x)_j = x(x-1)...(x-j+1) for a real argument.
pub fn falling(x: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (x - i as f64))
}

/// Poisson(lambda) mass at k computed in log space.
pub fn poisson_mass_at(lambda: f64, k: usize) -> f64 {
    (-lambda + k as f64 * lambda.ln() - ln_factorial(k)).exp()
}

/// Chernoff bound on P(Z >= k) for Z ~ Poisson(lambda); trivial bound 1 when k <= lambda.
pub fn poisson_upper_tail_chernoff(lambda: f64, k: usize) -> f64 {
    let kf = k as f64;
    if kf <= lambda {
        return 1.0;
    }
    (-lambda + kf * (1.0 + lambda.ln() - kf.ln())).exp().min(1.0)
}

/// Upper bound on `sum_{k > kmax} Poisson(lambda; k) * sum_d c_d (k + lambda)^d`
/// for nonnegative weights `c_d`, via a certified geometric ratio.
///
/// Returns infinity when the ratio cannot be certified below one at `kmax`.
pub fn poisson_poly_tail(lambda: f64, kmax: usize, weights: &[(usize, f64)]) -> f64 {
    let first = kmax + 1;
    let base = poisson_mass_at(lambda, first);
    let mut total = 0.0;
    for &(degree, c) in weights {
        if c == 0.0 {
            continue;
        }
        let growth = (1.0 + 1.0 / (first as f64 + lambda)).powi(degree as i32);
        let ratio = lambda / (first as f64 + 1.0) * growth;
        if ratio >= 1.0 {
            return f64::INFINITY;
        }
        let lead = base * (first as f64 + lambda).powi(degree as i32);
        total += c.abs() * lead / (1.0 - ratio);
    }
    total
}

/// x * 2^e without intermediate overflow or underflow.
pub fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let terms = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((csum(terms) - 4e-16).abs() < 1e-30);
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(10, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(binomial(30, 15), 155117520.0);
    }

    #[test]
    fn chernoff_dominates_exact_tail() {
        let lambda = 2.0;
        for k in 3..30 {
            let exact: f64 = 1.0 - (0..k).map(|i| poisson_mass_at(lambda, i)).sum::<f64>();
            assert!(poisson_upper_tail_chernoff(lambda, k) >= exact - 1e-15, "k={k}");
        }
    }

    #[test]
    fn poly_tail_dominates_direct_sum() {
        let lambda = 1.5;
        let weights = [(0, 1.0), (3, 0.25)];
        for kmax in [10, 20, 40] {
            let direct = csum((kmax + 1..400).map(|k| {
                poisson_mass_at(lambda, k) * (1.0 + 0.25 * (k as f64 + lambda).powi(3))
            }));
            let bound = poisson_poly_tail(lambda, kmax, &weights);
            assert!(bound >= direct && bound < 10.0 * direct + 1e-300, "{kmax}: {bound} vs {direct}");
        }
    }

    #[test]
    fn ldexp_handles_extreme_exponents() {
        assert_eq!(ldexp(1.0, -1074), f64::from_bits(1));
        assert_eq!(ldexp(3.0, 4), 48.0);
        assert_eq!(ldexp(2f64.powi(900), -1800), 2f64.powi(-900));
    }
}
