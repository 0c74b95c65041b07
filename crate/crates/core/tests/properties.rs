use proptest::prelude::*;

use corrected_poisson::bounds::{check_sandwich, check_theta};
use corrected_poisson::corrected::{build_phi2, invert_moments, CorrectionSpec};
use corrected_poisson::distances::{d2, tv, wasserstein};
use corrected_poisson::json;
use corrected_poisson::pmf::{factorial_moments_sn, poisson_binomial_pmf, poisson_pmf, ProbVector};

fn probs(max_len: usize, max_p: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.001..=max_p, 1..=max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pmf_is_a_probability(p in probs(40, 1.0)) {
        let f = poisson_binomial_pmf(&ProbVector::new(p).unwrap());
        prop_assert!(f.is_proper());
        prop_assert!((f.total() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn permutation_invariance(p in probs(25, 1.0), seed in any::<u64>()) {
        let mut q = p.clone();
        // deterministic shuffle
        let mut s = seed | 1;
        for i in (1..q.len()).rev() {
            s ^= s << 13; s ^= s >> 7; s ^= s << 17;
            q.swap(i, (s % (i as u64 + 1)) as usize);
        }
        let (a, b) = (ProbVector::new(p).unwrap(), ProbVector::new(q).unwrap());
        let (fa, fb) = (poisson_binomial_pmf(&a), poisson_binomial_pmf(&b));
        for k in 0..=a.len() {
            prop_assert!((fa.at(k) - fb.at(k)).abs() < 1e-14);
        }
        let (ma, mb) = (factorial_moments_sn(&a), factorial_moments_sn(&b));
        for m in 0..=a.len() {
            let (x, y) = (ma.mu(m).unwrap(), mb.mu(m).unwrap());
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn factorial_moments_below_lambda_powers(p in probs(30, 1.0)) {
        let v = ProbVector::new(p).unwrap();
        let mom = factorial_moments_sn(&v);
        for m in 0..=v.len() + 2 {
            let bound = v.lambda().powi(m as i32);
            prop_assert!(mom.mu(m).unwrap() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn tv_below_d2_and_metric_axioms(p in probs(20, 0.5)) {
        let v = ProbVector::new(p).unwrap();
        let f = poisson_binomial_pmf(&v);
        let z = poisson_pmf(v.lambda(), 80).unwrap();
        let phi = build_phi2(&v, Some(80)).unwrap();

        let fz = tv(&f, &z).value;
        prop_assert_eq!(fz, tv(&z, &f).value);
        prop_assert_eq!(wasserstein(&f, &phi.pmf).value, wasserstein(&phi.pmf, &f).value);
        let triangle = tv(&f, &phi.pmf).value + tv(&phi.pmf, &z).value;
        prop_assert!(fz <= triangle + 1e-15);

        let sn = factorial_moments_sn(&v);
        let spec = CorrectionSpec::poisson(v.lambda()).unwrap();
        let dz = d2(&sn, &spec.moments(), None).unwrap();
        prop_assert!(fz <= dz.value * (1.0 + 1e-12) + 1e-15);
        let back = d2(&spec.moments(), &sn, None).unwrap();
        prop_assert!((dz.value - back.value).abs() <= 1e-15 * dz.value);
        let dphi = d2(&sn, &phi.moments, None).unwrap();
        prop_assert!(tv(&f, &phi.pmf).value <= dphi.value * (1.0 + 1e-12) + 1e-13);
    }

    #[test]
    fn sandwich_and_theta(p in probs(15, 0.5)) {
        let v = ProbVector::new(p).unwrap();
        for r in check_sandwich(&v, 12).unwrap().into_iter().chain(check_theta(&v, 6, 3).unwrap()) {
            prop_assert!(r.holds, "{:?}", r);
        }
    }

    #[test]
    fn inversion_round_trip(p in probs(10, 0.5)) {
        let v = ProbVector::new(p).unwrap();
        let f = poisson_binomial_pmf(&v);
        let back = invert_moments(&factorial_moments_sn(&v), v.len(), 60).unwrap();
        for k in 0..=v.len() {
            prop_assert!((back.at(k) - f.at(k)).abs() < 1e-10);
        }
    }

    #[test]
    fn json_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = json::to_string(&x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn parse_rejects_out_of_range(x in 1.0001f64..100.0) {
        let text = format!("0.5\n{x}\n");
        let json = format!("[0.1, {}]", -x);
        prop_assert!(ProbVector::parse(&text).is_err());
        prop_assert!(ProbVector::parse(&json).is_err());
    }
}
