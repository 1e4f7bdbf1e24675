//! Runs the full pipeline on every fixture and compares with its expected facts.

use branchcov::covermap::{classify_raw, SimplicialSurjection};
use branchcov::expectation::minimal_k;
use branchcov::gallery::{self, Fixture};
use branchcov::index::{borel_partition, index_element, projectivity_verdict, quasi_basis, IndexValue, Projectivity};
use branchcov::scalar::{format_rational, parse_rational};
use branchcov::weights::{build_weight, validate_weight};

fn weight(f: &Fixture, map: &SimplicialSurjection) -> branchcov::weights::WeightFunction {
    f.reference_weight(map).unwrap().unwrap_or_else(|| build_weight(map).unwrap())
}

#[test]
fn round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for f in gallery::all() {
        let file = dir.path().join(format!("{}.json", f.name));
        std::fs::write(&file, f.to_json()).unwrap();
        let text = std::fs::read_to_string(&file).unwrap();
        let back: Fixture = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn classifications_match() {
    for f in gallery::all() {
        let c = classify_raw(&f.map).unwrap();
        assert_eq!(c.verdict, f.expected.verdict, "{}", f.name);
        assert_eq!(c.n_fold, f.expected.n_fold, "{}", f.name);
        if let Some(n) = f.expected.max_fibers {
            assert_eq!(c.strata.unwrap().max_fibers, n, "{}", f.name);
        }
    }
}

#[test]
fn scalar_facts_match() {
    for f in gallery::all().into_iter().filter(|f| f.expected.verdict.is_branched()) {
        let map = SimplicialSurjection::from_raw(&f.map).unwrap();
        let mu = weight(&f, &map);
        assert!(validate_weight(&map, &mu, 16).valid, "{}", f.name);
        assert!(validate_weight(&map, &build_weight(&map).unwrap(), 16).valid, "{}", f.name);
        let k = minimal_k(&map, &mu).k_min;
        assert_eq!(Some(format_rational(&k)), f.expected.k_min, "{}", f.name);
        let part = borel_partition(&map);
        assert_eq!(Some(part.len()), f.expected.pieces, "{}", f.name);
        for (label, value) in index_element(&mu, &part).describe(map.source(), &part) {
            let want = &f.expected.m_values[&label];
            match value {
                IndexValue::Constant(v) => assert_eq!(Some(v), parse_rational(want), "{} {label}", f.name),
                IndexValue::Reciprocal(_) => assert_eq!(want, "1/mu", "{} {label}", f.name),
            }
        }
        if let Some(size) = f.expected.quasi_basis_size {
            assert_eq!(quasi_basis(&map).unwrap().len(), size, "{}", f.name);
        }
    }
}

#[test]
fn projectivity_verdicts() {
    for f in gallery::all() {
        let v = projectivity_verdict(&f.map).unwrap();
        match f.expected.verdict {
            branchcov::covermap::Verdict::Covering => {
                assert_eq!(v, Projectivity::Projective { n: f.expected.n_fold.unwrap(), quasi_basis_size: f.expected.quasi_basis_size.unwrap() })
            }
            branchcov::covermap::Verdict::BranchedCovering => {
                // the verdict certifies with the constructed weight
                assert!(matches!(v, Projectivity::TopologicallyIndexFinite { .. }), "{}", f.name)
            }
            branchcov::covermap::Verdict::NotOpen => assert_eq!(v, Projectivity::NotOpen),
            other => panic!("unexpected fixture verdict {other:?}"),
        }
    }
}
