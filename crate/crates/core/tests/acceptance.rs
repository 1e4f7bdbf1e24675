//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use branchcov::complex::Complex;
use branchcov::covermap::{classify_raw, SimplicialSurjection, Verdict};
use branchcov::expectation::{check_axioms, minimal_k, Expectation};
use branchcov::gallery::{self, Fixture};
use branchcov::hilbert::{check_norm_equivalence, inner_product, PlFunction};
use branchcov::index::{borel_partition, check_reconstruction, index_element, quasi_basis, IndexValue};
use branchcov::scalar::{format_rational, int, parse_rational, scalar_one, Rational};
use branchcov::weights::{build_weight, uniform_weight, validate_weight, WeightFunction};
use num_traits::One;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn surj(f: &Fixture) -> SimplicialSurjection {
    SimplicialSurjection::from_raw(&f.map).expect("gallery maps are valid")
}

/// Per-edge sample count giving at least `total` points overall.
fn per_edge(y: &Complex, total: usize) -> usize {
    let edges = y.edges().count().max(1);
    total.saturating_sub(y.vertex_count()).div_ceil(edges)
}

fn expected_m(expected: &str) -> Option<Rational> {
    (expected != "1/mu").then(|| parse_rational(expected).expect("fixture rational"))
}

fn check_m_values(f: &Fixture, map: &SimplicialSurjection, mu: &WeightFunction) -> Check {
    let part = borel_partition(map);
    let values = index_element(mu, &part).describe(map.source(), &part);
    ensure(values.len() == f.expected.m_values.len(), || format!("{} pieces, expected {}", values.len(), f.expected.m_values.len()))?;
    for (label, value) in values {
        let want = f.expected.m_values.get(&label).ok_or_else(|| format!("unexpected piece {label}"))?;
        match (expected_m(want), value) {
            (Some(w), IndexValue::Constant(v)) if w == v => {}
            (None, IndexValue::Reciprocal(_)) => {}
            (_, v) => return Err(format!("M on {label} is {v:?}, expected {want}")),
        }
    }
    Ok(())
}

fn criterion_1() -> Check {
    let f = gallery::figure2();
    let map = surj(&f);
    let y = map.source();
    let c = classify_raw(&f.map).map_err(|e| e.to_string())?;
    ensure(c.verdict == Verdict::BranchedCovering, || format!("verdict {:?}", c.verdict))?;
    let mu = build_weight(&map).map_err(|e| e.to_string())?;
    let reference = f.reference_weight(&map).map_err(|e| e.to_string())?.expect("figure2 carries its weight");
    ensure(mu == reference, || "constructed weight differs from 1 on the base and 1/2 on the branches".into())?;
    let k = minimal_k(&map, &mu).k_min;
    ensure(k == int(2), || format!("K_min = {k}"))?;
    check_m_values(&f, &map, &mu)?;
    let part = borel_partition(&map);
    let samples = y.sample_points(per_edge(y, 1000));
    ensure(samples.len() >= 1000, || format!("only {} samples", samples.len()))?;
    let mut rng = common::rng(1);
    for func in [PlFunction::constant(y, scalar_one()).unwrap(), common::random_pl(&mut rng, y, 0), common::random_pl(&mut rng, y, 3)] {
        let r = check_reconstruction(&map, &mu, &part, &func, &samples);
        ensure(r.exact, || format!("reconstruction fails at {:?}", r.failures.first().map(|f| &f.location)))?;
    }
    Ok(())
}

fn criterion_2() -> Check {
    let f = gallery::two_circles_with_interval();
    let map = surj(&f);
    let (y, x) = (map.source(), map.target());
    let c = classify_raw(&f.map).map_err(|e| e.to_string())?;
    ensure(c.verdict == Verdict::BranchedCovering, || format!("verdict {:?}", c.verdict))?;
    let table = map.stratify().table(x);
    let strata: Vec<usize> = table.keys().copied().collect();
    ensure(strata == vec![2, 3], || format!("strata {strata:?}"))?;
    ensure(table[&3] == vec!["x0-x1".to_string()], || format!("stratum 3 is {:?}, expected the arc under the interval", table[&3]))?;
    let reference = f.reference_weight(&map).map_err(|e| e.to_string())?.expect("reference weight");
    let report = validate_weight(&map, &reference, 64);
    ensure(report.valid, || format!("reference weight invalid: {:?}", report.violations.first()))?;
    // exact fiber sums, independently at rational points of the interval arc
    let arc = x.id_by_names(&["x0", "x1"]).unwrap();
    for k in 0..=16 {
        let p = x.edge_point(arc, Rational::new(k.into(), 16.into()));
        let p = match p {
            Ok(p) => p,
            Err(_) => continue,
        };
        let sum: Rational = map.fiber(&p).iter().map(|q| reference.eval(y, q)).sum();
        ensure(sum.is_one(), || format!("fiber sum {sum} at t={k}/16"))?;
    }
    let own = build_weight(&map).map_err(|e| e.to_string())?;
    let own_report = validate_weight(&map, &own, 64);
    ensure(own_report.valid, || format!("constructed weight invalid: {:?}", own_report.violations.first()))?;
    let k = minimal_k(&map, &reference).k_min;
    ensure(k == int(4), || format!("K_min = {}", format_rational(&k)))?;
    Ok(())
}

fn criterion_3() -> Check {
    let f = gallery::interval_onto_circle();
    let c = classify_raw(&f.map).map_err(|e| e.to_string())?;
    ensure(c.verdict == Verdict::NotOpen, || format!("verdict {:?}", c.verdict))?;
    let w = c.witness.ok_or("no witness")?;
    let src = w.source.clone().unwrap_or_default();
    ensure(src == vec!["y0".to_string()] || src == vec!["y3".to_string()], || format!("witness {src:?} is not an identified endpoint"))?;
    ensure(w.target.as_ref().is_some_and(|t| t.contains(&"x0".to_string())), || format!("witness target {:?}", w.target))?;
    let r = gallery::remark210();
    let c = classify_raw(&r.map).map_err(|e| e.to_string())?;
    ensure(c.verdict == Verdict::NotOpen, || format!("remark210 verdict {:?}", c.verdict))?;
    let src = c.witness.and_then(|w| w.source).unwrap_or_default();
    ensure(src == vec!["e".to_string()], || format!("remark210 witness {src:?}"))?;
    Ok(())
}

fn criterion_4() -> Check {
    for f in [gallery::identity(), gallery::double_cover_circle()] {
        let map = surj(&f);
        let y = map.source();
        let c = classify_raw(&f.map).map_err(|e| e.to_string())?;
        ensure(c.verdict == Verdict::Covering && c.n_fold == f.expected.n_fold, || format!("{}: {:?} n={:?}", f.name, c.verdict, c.n_fold))?;
        let n = c.n_fold.unwrap();
        let qb = quasi_basis(&map).map_err(|e| e.to_string())?;
        let mu = uniform_weight(y, n);
        let samples = y.sample_points(per_edge(y, 1000));
        let mut rng = common::rng(4);
        let functions: Vec<PlFunction> = (0..3).map(|l| common::random_pl(&mut rng, y, l)).collect();
        let report = qb.check(&map, &mu, &functions, &samples, 1e-9);
        ensure(report.passes, || format!("{}: reconstruction error {:e}, index error {:e}", f.name, report.max_error, report.max_index_error))?;
        ensure(report.index_exact, || format!("{}: index not exactly {n}", f.name))?;
        ensure(Some(qb.len()) == f.expected.quasi_basis_size, || format!("{}: quasi-basis of size {}", f.name, qb.len()))?;
    }
    Ok(())
}

fn property_case(seed: u64) -> Check {
    let mut rng = common::rng(seed);
    let raw = common::random_branched(&mut rng);
    let map = SimplicialSurjection::from_raw(&raw).map_err(|e| format!("seed {seed}: {e}"))?;
    let (y, x) = (map.source(), map.target());
    let mu = build_weight(&map).map_err(|e| format!("seed {seed}: {e}"))?;
    let fail = |what: &str| format!("seed {seed}: {what}");
    // (a)
    let report = validate_weight(&map, &mu, 8);
    ensure(report.valid, || fail(&format!("weight invalid {:?}", report.violations.first())))?;
    for (&e, knots) in mu.edges() {
        let xe = map.image(e);
        for (t, _) in knots {
            let t = if map.preserves_orientation(e) { t.clone() } else { Rational::one() - t };
            if let Ok(p) = x.edge_point(xe, t) {
                let s: Rational = map.fiber(&p).iter().map(|q| mu.eval(y, q)).sum();
                ensure(s.is_one(), || fail("fiber sum at a breakpoint"))?;
            }
        }
    }
    // (b)
    let f = common::random_pl(&mut rng, y, 1);
    let g = common::random_pl(&mut rng, y, 0);
    ensure(inner_product(&map, &mu, &f, &g).check_continuity(x).continuous, || fail("<f,g> discontinuous"))?;
    // (c) level-0 functions attain their sup at vertices, where mu = 1/#fiber
    let tests: Vec<PlFunction> = (0..2).map(|_| common::random_pl(&mut rng, y, 0)).collect();
    let ne = check_norm_equivalence(&map, &mu, &tests).map_err(|e| fail(&e.to_string()))?;
    ensure(ne.lower_holds && ne.upper_holds, || fail(&format!("norm ratio outside [1/N, 1]: {} .. {}", ne.worst_lower, ne.worst_upper)))?;
    // (d)
    let e = Expectation::new(&map, &mu);
    let a = common::random_pl(&mut rng, x, 0);
    let axioms = check_axioms(&e, &[(a, f.clone())], 3).map_err(|e| fail(&e.to_string()))?;
    ensure(axioms.all_pass(), || fail(&format!("axioms {:?}", axioms.failures)))?;
    // (e)
    let k = minimal_k(&map, &mu).k_min;
    let n = map.stratify().max_fibers;
    ensure(int(n as i64) <= k, || fail(&format!("N = {n} > K_min = {k}")))?;
    // (f)
    let part = borel_partition(&map);
    ensure(part.validate(&map).is_empty(), || fail("invalid Borel partition"))?;
    let m = index_element(&mu, &part);
    let samples = y.sample_points(5);
    ensure(samples.iter().all(|p| m.times_mu(y, p).is_one()), || fail("M mu != 1"))?;
    let r = check_reconstruction(&map, &mu, &part, &f, &samples);
    ensure(r.exact, || fail(&format!("reconstruction fails at {:?}", r.failures.first().map(|f| &f.location))))?;
    Ok(())
}

fn criterion_5() -> Check {
    for seed in 0..200 {
        property_case(seed)?;
    }
    Ok(())
}

fn criterion_6() -> Check {
    let mut maps: Vec<(String, branchcov::covermap::RawMap)> = gallery::all().into_iter().map(|f| (f.name.clone(), f.map)).collect();
    let mut rng = common::rng(6);
    for i in 0..50 {
        maps.push((format!("random {i}"), common::random_map(&mut rng)));
    }
    let mut open = 0;
    for (name, raw) in &maps {
        let map = SimplicialSurjection::from_raw(raw).map_err(|e| format!("{name}: {e}"))?;
        let ours = map.is_open().open;
        let oracle = common::oracle_is_open(raw);
        ensure(ours == oracle, || format!("{name}: is_open {ours}, oracle {oracle}"))?;
        open += ours as usize;
    }
    ensure(open > 0 && open < maps.len(), || format!("degenerate sample: {open} of {} open", maps.len()))?;
    Ok(())
}

fn main() {
    let criteria: [Criterion; 6] = [
        ("1 tripod: verdict, weight 1 | 1/2, K_min 2, M 1 | 2, exact reconstruction at 1000 samples", criterion_1, Some(Duration::from_secs(1))),
        ("2 two circles with interval: strata {2,3}, reference and constructed weights valid, K_min 4", criterion_2, Some(Duration::from_secs(2))),
        ("3 interval onto circle and folded tripod: NotOpen with endpoint witnesses", criterion_3, Some(Duration::from_secs(1))),
        ("4 coverings: verdict and n, quasi-basis error <= 1e-9 at 1000 samples, Index = n", criterion_4, None),
        ("5 property suite over 200 random branched coverings, parts (a)-(f)", criterion_5, Some(Duration::from_secs(60))),
        ("6 is_open agrees with the 1/64 epsilon-ball oracle on the gallery and 50 random maps", criterion_6, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let mut result = check();
        let elapsed = start.elapsed();
        if let (Ok(()), Some(limit)) = (&result, limit) {
            if elapsed > limit {
                result = Err(format!("took {elapsed:.2?}, limit {limit:?}"));
            }
        }
        match result {
            Ok(()) => println!("PASS criterion {name} ({elapsed:.2?})"),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {name} ({elapsed:.2?}): {e}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
