mod common;

use branchcov::covermap::{classify_surjection, SimplicialSurjection, Verdict};
use branchcov::expectation::{check_axioms, fiber_bound_from_k, minimal_k, violating_point, Expectation};
use branchcov::hilbert::{check_norm_equivalence, inner_product};
use branchcov::index::{borel_partition, check_reconstruction, index_element};
use branchcov::scalar::{int, Rational};
use branchcov::weights::{build_weight, validate_weight};
use num_traits::One;
use proptest::prelude::*;

fn setup(seed: u64) -> (SimplicialSurjection, branchcov::weights::WeightFunction, rand_chacha::ChaCha8Rng) {
    let mut rng = common::rng(seed);
    let raw = common::random_branched(&mut rng);
    let map = SimplicialSurjection::from_raw(&raw).unwrap();
    let mu = build_weight(&map).unwrap();
    (map, mu, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_maps_are_branched_coverings(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let raw = common::random_branched(&mut rng);
        let map = SimplicialSurjection::from_raw(&raw).unwrap();
        prop_assert!(classify_surjection(&map).verdict.is_branched());
        prop_assert!(common::oracle_is_open(&raw));
    }

    #[test]
    fn fiber_sums_are_one(seed in any::<u64>()) {
        let (map, mu, _) = setup(seed);
        let report = validate_weight(&map, &mu, 6);
        prop_assert!(report.valid, "{:?}", report.violations.first());
        let (y, x) = (map.source(), map.target());
        for p in x.sample_points(5) {
            let s: Rational = map.fiber(&p).iter().map(|q| mu.eval(y, q)).sum();
            prop_assert!(s.is_one());
        }
    }

    #[test]
    fn inner_products_are_continuous(seed in any::<u64>()) {
        let (map, mu, mut rng) = setup(seed);
        let f = common::random_pl(&mut rng, map.source(), 1);
        let g = common::random_pl(&mut rng, map.source(), 2);
        prop_assert!(inner_product(&map, &mu, &f, &g).check_continuity(map.target()).continuous);
    }

    #[test]
    fn norms_are_equivalent(seed in any::<u64>()) {
        let (map, mu, mut rng) = setup(seed);
        let level0: Vec<_> = (0..3).map(|_| common::random_pl(&mut rng, map.source(), 0)).collect();
        let r = check_norm_equivalence(&map, &mu, &level0).unwrap();
        prop_assert!(r.upper_holds && r.lower_holds);
        let fine: Vec<_> = (0..2).map(|_| common::random_pl(&mut rng, map.source(), 2)).collect();
        let r = check_norm_equivalence(&map, &mu, &fine).unwrap();
        prop_assert!(r.upper_holds && r.lower_holds_k);
    }

    #[test]
    fn expectation_axioms_hold(seed in any::<u64>()) {
        let (map, mu, mut rng) = setup(seed);
        let e = Expectation::new(&map, &mu);
        let a = common::random_pl(&mut rng, map.target(), 0);
        let b = common::random_pl(&mut rng, map.source(), 1);
        let r = check_axioms(&e, &[(a, b)], 3).unwrap();
        prop_assert!(r.all_pass(), "{:?}", r.failures);
    }

    #[test]
    fn fibers_are_bounded_by_k_min(seed in any::<u64>()) {
        let (map, mu, _) = setup(seed);
        let k = minimal_k(&map, &mu).k_min;
        prop_assert!(int(map.stratify().max_fibers as i64) <= k.clone());
        prop_assert!(fiber_bound_from_k(&map, &mu).unwrap().holds);
        prop_assert!(violating_point(&map, &mu, &k).is_none());
        let below = k * Rational::new(99.into(), 100.into());
        prop_assert!(violating_point(&map, &mu, &below).is_some());
    }

    #[test]
    fn index_element_inverts_mu_and_reconstructs(seed in any::<u64>()) {
        let (map, mu, mut rng) = setup(seed);
        let y = map.source();
        let part = borel_partition(&map);
        prop_assert!(part.validate(&map).is_empty());
        let m = index_element(&mu, &part);
        let samples = y.sample_points(4);
        for p in &samples {
            prop_assert!(m.times_mu(y, p).is_one());
        }
        let f = common::random_pl(&mut rng, y, 1);
        let r = check_reconstruction(&map, &mu, &part, &f, &samples);
        prop_assert!(r.exact, "{:?}", r.failures.first().map(|f| &f.location));
    }

    #[test]
    fn openness_matches_oracle(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let raw = common::random_map(&mut rng);
        let map = SimplicialSurjection::from_raw(&raw).unwrap();
        let open = map.is_open().open;
        prop_assert_eq!(open, common::oracle_is_open(&raw));
        let verdict = classify_surjection(&map).verdict;
        prop_assert_eq!(verdict == Verdict::NotOpen, !open);
    }
}
