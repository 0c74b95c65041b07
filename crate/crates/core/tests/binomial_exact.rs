use num_bigint::BigInt;
use num_rational::BigRational;

use corrected_poisson::exact::poly::rat;
use corrected_poisson::exact::{
    a_polynomial, c_constant, falling_factorial_remainder, q_differential_residual, q_polynomial, solve_gamma_table,
    stirling_a, RationalPolynomial,
};

fn ints(v: &[i64]) -> RationalPolynomial {
    RationalPolynomial::from_integers(v)
}

/// C(m, k) as a polynomial in m.
fn choose(k: usize) -> RationalPolynomial {
    let fact: i64 = (1..=k as i64).product();
    RationalPolynomial::falling(k).scale(&rat(1, fact))
}

fn closed_form(k: usize, factor: RationalPolynomial, den: i64) -> RationalPolynomial {
    (choose(k + 1) * factor).scale(&rat(1, den))
}

#[test]
fn a_closed_forms_that_hold() {
    assert_eq!(a_polynomial(1).unwrap(), choose(2));
    assert_eq!(a_polynomial(3).unwrap(), closed_form(3, RationalPolynomial::falling(2), 2));
    assert_eq!(a_polynomial(4).unwrap(), closed_form(4, ints(&[2, 5, -30, 15]), 48));
}

#[test]
fn a2_printed_form_is_wrong_and_3m_minus_1_is_right() {
    let printed = closed_form(2, ints(&[-1, 1]), 4);
    let corrected = closed_form(2, ints(&[-1, 3]), 4);
    assert_ne!(a_polynomial(2).unwrap(), printed);
    assert_eq!(a_polynomial(2).unwrap(), corrected);
    // e₂(1, 2, 3, 4)
    assert_eq!(stirling_a(5, 2), BigInt::from(35));
    assert_eq!(printed.eval(&rat(5, 1)), rat(10, 1));
}

#[test]
fn a5_sign_of_constant_term() {
    let factor = |c: i64| RationalPolynomial::falling(2) * ints(&[c, -7, 3]);
    assert_ne!(a_polynomial(5).unwrap(), closed_form(5, factor(2), 16));
    assert_eq!(a_polynomial(5).unwrap(), closed_form(5, factor(-2), 16));
}

#[test]
fn a_polynomials_match_stirling_values() {
    for k in 0..=6 {
        let poly = a_polynomial(k).unwrap();
        assert_eq!(poly.degree().unwrap_or(0), 2 * k);
        for m in 1..=30usize {
            let v = poly.eval(&BigRational::from_integer(BigInt::from(m)));
            assert_eq!(v, BigRational::from_integer(stirling_a(m, k)), "k={k} m={m}");
        }
    }
}

#[test]
fn remainder_within_bounds() {
    for n in 1..=12u64 {
        for m in 1..=10u64 {
            for nu in 1..=5u64 {
                let (_, r, rep) = falling_factorial_remainder(n, m, nu).unwrap();
                if nu >= m {
                    assert_eq!(r, rat(0, 1));
                }
                if n >= m {
                    assert!(rep.within_bounds, "n={n} m={m} nu={nu}: {rep:?}");
                }
            }
        }
    }
}

#[test]
fn gamma_column_nu4() {
    let t = solve_gamma_table(4).unwrap();
    assert_eq!(t.entry(2), RationalPolynomial::new(vec![rat(0, 1), rat(1, 2)]));
    assert_eq!(t.entry(4), RationalPolynomial::new(vec![rat(0, 1), rat(0, 1), rat(-1, 8), rat(1, 4)]));
    assert_eq!(t.entry(5), RationalPolynomial::monomial(rat(1, 6), 3));
    assert_eq!(t.entry(6), RationalPolynomial::monomial(rat(1, 48), 3));
}

#[test]
fn gamma_columns_are_stable() {
    let tables: Vec<_> = (2..=8).map(|nu| solve_gamma_table(nu).unwrap()).collect();
    for pair in tables.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        for (&j, poly) in a.entries() {
            let next = b.entry(j);
            for power in 0..a.nu() {
                assert_eq!(poly.coeff(power), next.coeff(power), "nu={} j={j} power={power}", a.nu());
            }
            // one more power of 1/n at most
            assert!(next.degree().unwrap_or(0) <= a.nu());
        }
    }
}

#[test]
fn gamma2_is_half_over_n_for_every_order() {
    for nu in 2..=8 {
        assert_eq!(solve_gamma_table(nu).unwrap().entry(2), RationalPolynomial::monomial(rat(1, 2), 1));
    }
}

#[test]
fn q3_and_q4_as_printed() {
    assert_eq!(
        q_polynomial(3).unwrap(),
        RationalPolynomial::new(vec![rat(16, 5), rat(52, 9), rat(8, 3), rat(1, 3)])
    );
    assert_eq!(
        q_polynomial(4).unwrap(),
        RationalPolynomial::new(vec![rat(16, 3), rat(176, 15), rat(68, 9), rat(16, 9), rat(2, 15)])
    );
    for nu in 1..=10 {
        assert!(q_differential_residual(nu).unwrap().is_zero(), "nu={nu}");
        assert_eq!(q_polynomial(nu).unwrap().degree(), Some(nu));
    }
}

#[test]
fn c_constants_cross_check() {
    let e2 = 1f64.exp().powi(2);
    assert!((c_constant(1, 1.0).unwrap().closed_form - e2).abs() < 1e-14);
    for nu in 1..=5 {
        for lambda in [0.5, 1.0, 2.0] {
            let c = c_constant(nu, lambda).unwrap();
            assert!(c.relative_gap() <= 1e-10, "nu={nu} lambda={lambda}: {c:?}");
        }
    }
    assert!(c_constant(0, 1.0).is_err());
    assert!(c_constant(2, 0.0).is_err());
}
