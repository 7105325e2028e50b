use num_complex::Complex64;
use proptest::prelude::*;

use thinsets::polynorm::{luxemburg_psi2, sup_norm, OrliczConfig, TrigPolynomial};
use thinsets::quasiindep::{extract_greedy, find_relation, max_qi_subset_exact};
use thinsets::spectra::{sample_set, thin, SelectorSchedule};
use thinsets::ucconst::{uc_constant, LpConfig};

fn poly() -> impl Strategy<Value = TrigPolynomial> {
    prop::collection::vec((-60i64..60, -1.0f64..1.0, -1.0f64..1.0), 1..10)
        .prop_map(|t| {
            TrigPolynomial::from_terms(t.into_iter().map(|(k, a, b)| (k, Complex64::new(a, b))))
        })
        .prop_filter("nonzero", |p| !p.is_zero())
}

fn small_set(max: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::btree_set(1i64..200, 1..max).prop_map(|s| s.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn psi2_is_shift_invariant(p in poly(), a in -500i64..500) {
        let cfg = OrliczConfig::default();
        let x = luxemburg_psi2(&p, &cfg).unwrap().value;
        let y = luxemburg_psi2(&p.shifted(a), &cfg).unwrap().value;
        prop_assert!((x - y).abs() <= 1e-8 * x.max(1.0));
    }

    #[test]
    fn psi2_sits_between_l2_and_sup(p in poly()) {
        let psi = luxemburg_psi2(&p, &OrliczConfig::default()).unwrap().value;
        let sup = sup_norm(&p, 8.0).unwrap();
        // ‖f‖₂ ≤ Ψ₂ since e^{x²} − 1 ≥ x², and Ψ₂ ≤ ‖f‖_∞/√ln2.
        prop_assert!(p.coeff_l2() <= psi * (1.0 + 1e-9));
        prop_assert!(psi <= sup.upper / std::f64::consts::LN_2.sqrt() * (1.0 + 1e-6));
    }

    #[test]
    fn found_relations_are_genuine(a in small_set(16)) {
        if let Some(r) = find_relation(&a).unwrap() {
            let sum: i64 = r.terms().iter().map(|(&k, &s)| k * i64::from(s)).sum();
            prop_assert_eq!(sum, 0);
            prop_assert!(r.terms().keys().all(|k| a.contains(k)));
        }
    }

    #[test]
    fn extraction_is_certified_and_within_exact(a in small_set(14)) {
        let (e, report) = extract_greedy(&a).unwrap();
        prop_assert!(report.verified_qi);
        prop_assert!(find_relation(&e).unwrap().is_none());
        prop_assert!(e.iter().all(|k| a.contains(k)));
        prop_assert!(e.len() <= max_qi_subset_exact(&a).unwrap().len());
    }

    #[test]
    fn same_seed_samples_are_nested(seed in any::<u64>(), c in 0.2f64..3.0) {
        let lo = SelectorSchedule::dyadic(c).unwrap();
        let hi = SelectorSchedule::dyadic(2.0 * c).unwrap();
        let a = sample_set(&lo, (16, 1 << 12), seed).unwrap();
        let b = sample_set(&hi, (16, 1 << 12), seed).unwrap();
        prop_assert!(a.elements.iter().all(|k| b.elements.binary_search(k).is_ok()));
        let t = thin(&b, &lo, seed ^ 1).unwrap();
        prop_assert!(t.elements.iter().all(|k| b.elements.binary_search(k).is_ok()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn uc_constant_is_translation_invariant(a in small_set(8), shift in 1i64..300) {
        let cfg = LpConfig::default();
        let u = uc_constant(&a, &cfg).unwrap().value_lower;
        let shifted: Vec<i64> = a.iter().map(|k| k + shift).collect();
        prop_assert!((uc_constant(&shifted, &cfg).unwrap().value_lower - u).abs() <= 1e-6);
        prop_assert!(u >= 1.0 - 1e-9 && u <= (a.len() as f64).sqrt() + 1e-9);
    }
}
