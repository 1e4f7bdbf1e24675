//! Weight functions `μ` on the source: construction by induction over strata
//! and validation of arbitrary candidates.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{Complex, Point, SimplexId};
use crate::covermap::{MapError, SimplicialSurjection};
use crate::hilbert::{inner_product, require_one_dimensional, Cell, HilbertError, Piece, PiecewiseFunction, PlFunction};
use crate::index::borel_partition;
use crate::poly::Poly;
use crate::scalar::{format_rational, parse_rational, real, scalar_one, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeightError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error("the map is not open, so no weight with continuous inner product exists")]
    NotOpen,
    #[error("vertex {0} is not in (the closure of) any cover set")]
    NotACover(String),
    #[error("cover set {0} is not open: it misses a coface of one of its cells")]
    NotOpenSet(usize),
    #[error("'{0}' is not a vertex of the source")]
    UnknownVertex(String),
    #[error("'{0}' is not an edge of the source")]
    UnknownEdge(String),
    #[error("missing weight for {0}")]
    Missing(String),
    #[error("invalid number '{0}'")]
    InvalidNumber(String),
    #[error("knots of edge {edge}: {reason}")]
    InvalidKnots { edge: String, reason: String },
}

/// A weight on a 1-dimensional source: a value at every vertex and, on every
/// edge, a PL profile given by knots `(t, value)` from `t = 0` to `t = 1`.
/// The end knots are the one-sided limits at the endpoints, which may differ
/// from the vertex values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightFunction {
    vertex: Vec<Rational>,
    edges: BTreeMap<SimplexId, Vec<(Rational, Rational)>>,
}

impl WeightFunction {
    pub fn constant(y: &Complex, c: Rational) -> Self {
        WeightFunction {
            vertex: vec![c.clone(); y.vertex_count()],
            edges: y.edges().map(|e| (e, vec![(Rational::zero(), c.clone()), (Rational::one(), c.clone())])).collect(),
        }
    }

    pub fn new(
        y: &Complex,
        vertex: Vec<Rational>,
        edges: BTreeMap<SimplexId, Vec<(Rational, Rational)>>,
    ) -> Result<Self, WeightError> {
        require_one_dimensional(y)?;
        if vertex.len() != y.vertex_count() {
            return Err(WeightError::Missing(format!("{} vertex values", y.vertex_count())));
        }
        for e in y.edges() {
            let knots = edges.get(&e).ok_or_else(|| WeightError::Missing(y.edge_key(e)))?;
            check_knots(&y.edge_key(e), knots)?;
        }
        if let Some(e) = edges.keys().find(|e| y.dim_of(**e) != 1) {
            return Err(WeightError::UnknownEdge(y.cell_label(*e)));
        }
        Ok(WeightFunction { vertex, edges })
    }

    pub fn vertex_value(&self, v: usize) -> &Rational {
        &self.vertex[v]
    }

    pub fn knots(&self, edge: SimplexId) -> &[(Rational, Rational)] {
        &self.edges[&edge]
    }

    /// One-sided limit along `edge` at its lower (`false`) or upper (`true`) endpoint.
    pub fn limit(&self, edge: SimplexId, at_end: bool) -> &Rational {
        let k = &self.edges[&edge];
        if at_end {
            &k.last().unwrap().1
        } else {
            &k[0].1
        }
    }

    pub fn eval(&self, y: &Complex, p: &Point) -> Rational {
        match p.edge_param() {
            None => self.vertex[y.simplex(p.carrier).vertices()[0]].clone(),
            Some(t) => {
                let knots = &self.edges[&p.carrier];
                let i = knots.iter().position(|(s, _)| t <= s).expect("knots end at 1");
                let (s1, v1) = &knots[i];
                if s1 == t {
                    return v1.clone();
                }
                let (s0, v0) = &knots[i - 1];
                v0 + (v1 - v0) * (t - s0) / (s1 - s0)
            }
        }
    }

    /// Infimum over all vertex values and knot values (edge limits included).
    pub fn min_value(&self) -> Rational {
        self.vertex.iter().chain(self.edges.values().flatten().map(|(_, v)| v)).min().cloned().unwrap_or_else(Rational::one)
    }

    pub fn max_value(&self) -> Rational {
        self.vertex.iter().chain(self.edges.values().flatten().map(|(_, v)| v)).max().cloned().unwrap_or_else(Rational::zero)
    }

    pub fn vertices(&self) -> &[Rational] {
        &self.vertex
    }

    pub fn edges(&self) -> &BTreeMap<SimplexId, Vec<(Rational, Rational)>> {
        &self.edges
    }

    pub fn to_piecewise(&self, y: &Complex) -> PiecewiseFunction {
        let cells = y
            .ids()
            .map(|id| match y.dim_of(id) {
                0 => Cell::Vertex(real(self.vertex[y.simplex(id).vertices()[0]].clone())),
                1 => Cell::Edge(
                    self.edges[&id]
                        .windows(2)
                        .map(|w| {
                            let ((s0, v0), (s1, v1)) = (&w[0], &w[1]);
                            let slope = (v1 - v0) / (s1 - s0);
                            Piece { start: s0.clone(), end: s1.clone(), poly: Poly::linear(real(v0 - &slope * s0), real(slope)) }
                        })
                        .collect(),
                ),
                _ => Cell::Higher,
            })
            .collect();
        PiecewiseFunction::from_cells(cells)
    }

    pub fn to_json(&self, y: &Complex) -> WeightJson {
        WeightJson {
            vertices: (0..y.vertex_count()).map(|v| (y.name(v).to_string(), format_rational(&self.vertex[v]))).collect(),
            edges: self
                .edges
                .iter()
                .map(|(e, k)| (y.edge_key(*e), k.iter().map(|(t, v)| [format_rational(t), format_rational(v)]).collect()))
                .collect(),
        }
    }

    /// Parses the JSON form. Edge keys may name their endpoints in either
    /// order; knot parameters run from the first-named endpoint.
    pub fn from_json(y: &Complex, json: &WeightJson) -> Result<Self, WeightError> {
        let num = |s: &String| parse_rational(s).ok_or_else(|| WeightError::InvalidNumber(s.clone()));
        if let Some(name) = json.vertices.keys().find(|k| y.vertex_index(k).is_none()) {
            return Err(WeightError::UnknownVertex(name.clone()));
        }
        let vertex = (0..y.vertex_count())
            .map(|v| json.vertices.get(y.name(v)).ok_or_else(|| WeightError::Missing(y.name(v).to_string())).and_then(num))
            .collect::<Result<Vec<_>, _>>()?;
        let mut edges = BTreeMap::new();
        for (key, knots) in &json.edges {
            let (e, reversed) = y.edge_by_key(key).ok_or_else(|| WeightError::UnknownEdge(key.clone()))?;
            let mut parsed = knots.iter().map(|[t, v]| Ok((num(t)?, num(v)?))).collect::<Result<Vec<_>, WeightError>>()?;
            if reversed {
                parsed = parsed.into_iter().rev().map(|(t, v)| (Rational::one() - t, v)).collect();
            }
            if edges.insert(e, parsed).is_some() {
                return Err(WeightError::InvalidKnots { edge: key.clone(), reason: "edge listed twice".into() });
            }
        }
        WeightFunction::new(y, vertex, edges)
    }
}

fn check_knots(edge: &str, knots: &[(Rational, Rational)]) -> Result<(), WeightError> {
    let bad = |reason: &str| Err(WeightError::InvalidKnots { edge: edge.to_string(), reason: reason.to_string() });
    if knots.len() < 2 {
        return bad("need at least the two end knots");
    }
    if !knots[0].0.is_zero() || !knots.last().unwrap().0.is_one() {
        return bad("parameters must start at 0 and end at 1");
    }
    if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
        return bad("parameters must increase strictly");
    }
    Ok(())
}

/// JSON form: vertex name -> value, edge key -> list of `[t, value]` knots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightJson {
    pub vertices: BTreeMap<String, String>,
    pub edges: BTreeMap<String, Vec<[String; 2]>>,
}

/// Functions `φ_i = Σ_v c_{iv} λ_v`, with `λ_v` the barycentric hat of vertex `v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionOfUnity {
    pub cover: Vec<BTreeSet<SimplexId>>,
    pub coefficients: Vec<BTreeMap<usize, Rational>>,
}

impl PartitionOfUnity {
    pub fn eval(&self, complex: &Complex, i: usize, p: &Point) -> Rational {
        let s = complex.simplex(p.carrier);
        self.coefficients[i]
            .iter()
            .filter_map(|(v, c)| s.position(*v).map(|pos| c * &p.coords[pos]))
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn len(&self) -> usize {
        self.cover.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cover.is_empty()
    }
}

/// Hats of the vertices whose open star lies in a cover set, each shared
/// equally among the sets containing that star.
pub fn partition_of_unity(complex: &Complex, cover: &[BTreeSet<SimplexId>]) -> Result<PartitionOfUnity, WeightError> {
    for (i, w) in cover.iter().enumerate() {
        if w.iter().any(|c| complex.cofaces(*c).iter().any(|cf| !w.contains(cf))) {
            return Err(WeightError::NotOpenSet(i));
        }
    }
    let mut coefficients = vec![BTreeMap::new(); cover.len()];
    for v in 0..complex.vertex_count() {
        let star = complex.cofaces(complex.vertex_id(v));
        let holders: Vec<usize> = (0..cover.len()).filter(|&i| star.iter().all(|c| cover[i].contains(c))).collect();
        if holders.is_empty() {
            return Err(WeightError::NotACover(complex.name(v).to_string()));
        }
        let share = Rational::new(1.into(), (holders.len() as i64).into());
        for i in holders {
            coefficients[i].insert(v, share.clone());
        }
    }
    Ok(PartitionOfUnity { cover: cover.to_vec(), coefficients })
}

/// Open stars of the target vertices.
pub fn vertex_star_cover(x: &Complex) -> Vec<BTreeSet<SimplexId>> {
    (0..x.vertex_count()).map(|v| x.cofaces(x.vertex_id(v)).iter().copied().collect()).collect()
}

/// Builds `μ` stratum by stratum. Cells are handled in ascending order of
/// fiber count. A vertex `a` with `c(a)` preimages gets weight `1/c(a)` on
/// its fiber. On an edge `e = [a, b]` each branch at a fiber point over `a`
/// splits its share evenly over the `i` sheets over `e` that it contains, so
/// the local weight near `a` is `1/(c(a) i)`; near `b` likewise. The two local
/// weights are blended by the partition of unity of the vertex-star cover,
/// which on `e` is the pair of barycentric hats.
pub fn build_weight(map: &SimplicialSurjection) -> Result<WeightFunction, WeightError> {
    let (y, x) = (map.source(), map.target());
    require_one_dimensional(y)?;
    require_one_dimensional(x)?;
    if !map.is_open().open {
        return Err(WeightError::NotOpen);
    }
    let strat = map.stratify();
    let cover = vertex_star_cover(x);
    let pou = partition_of_unity(x, &cover)?;

    // local weight of each sheet over an edge near each endpoint: (edge of Y, x vertex) -> value
    let mut local: BTreeMap<(SimplexId, usize), Rational> = BTreeMap::new();
    let mut vertex = vec![Rational::zero(); y.vertex_count()];
    for j in strat.nonempty() {
        for &cell in &strat.strata[&j] {
            if x.dim_of(cell) != 0 {
                continue;
            }
            let a = x.simplex(cell).vertices()[0];
            let m = map.fiber_count(cell) as i64;
            let nbhd = map.regular_neighborhood(&x.vertex_point(a))?;
            let fine = nbhd.subdivided.as_deref();
            for branch in &nbhd.branches {
                let ya = map.source().simplex(branch.fiber_point.carrier).vertices()[0];
                vertex[ya] = Rational::new(1.into(), m.into());
                for &e in x.cofaces(cell).iter().filter(|&&e| x.dim_of(e) == 1) {
                    let sheets: Vec<SimplexId> = match fine {
                        // only reachable for maps needing subdivision; sheets are then the coarse edges at ya
                        Some(_) => y.cofaces(y.vertex_id(ya)).iter().copied().filter(|&s| map.image(s) == e).collect(),
                        None => branch.cells.iter().copied().filter(|&s| map.image(s) == e).collect(),
                    };
                    let i = sheets.len() as i64;
                    for s in sheets {
                        local.insert((s, a), Rational::new(1.into(), (m * i).into()));
                    }
                }
            }
        }
    }

    // on e = [a, b] the partition of unity is the pair of hats (λ_a, λ_b), so
    // Σ φ_i W_i interpolates linearly between the two local weights
    let mut edges = BTreeMap::new();
    for eps in y.edges() {
        let (ya, yb) = y.endpoints(eps);
        let blended = |xv: usize| &local[&(eps, xv)] * pou.eval(x, xv, &x.vertex_point(xv));
        let (v0, v1) = (blended(map.map_vertex(ya)), blended(map.map_vertex(yb)));
        edges.insert(eps, vec![(Rational::zero(), v0), (Rational::one(), v1)]);
    }
    WeightFunction::new(y, vertex, edges)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Positivity,
    FiberSum,
    PieceContinuity,
    InnerProductContinuity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub points_checked: usize,
    pub min: Rational,
    pub max: Rational,
}

/// Checks positivity, exact fiber sums (at every knot, every endpoint limit
/// and `samples` points per target edge), continuity on each Borel piece,
/// and continuity of `E_μ(1)` and `⟨h, h⟩` for every vertex hat `h`.
pub fn validate_weight(map: &SimplicialSurjection, mu: &WeightFunction, samples: usize) -> WeightReport {
    let (y, x) = (map.source(), map.target());
    let mut violations = Vec::new();
    let mut points_checked = 0;

    let unit = Rational::one();
    for v in 0..y.vertex_count() {
        let w = mu.vertex_value(v);
        if *w <= Rational::zero() || *w > unit {
            violations.push(Violation { kind: ViolationKind::Positivity, location: y.name(v).to_string(), detail: format!("value {w}") });
        }
    }
    for (e, knots) in mu.edges() {
        for (t, w) in knots {
            if *w <= Rational::zero() || *w > unit {
                violations.push(Violation {
                    kind: ViolationKind::Positivity,
                    location: format!("{} at t={}", y.edge_key(*e), t),
                    detail: format!("value {w}"),
                });
            }
        }
    }

    // fiber sums at vertices
    for v in 0..x.vertex_count() {
        let p = x.vertex_point(v);
        let sum = map.fiber(&p).iter().fold(Rational::zero(), |acc, q| acc + mu.eval(y, q));
        points_checked += 1;
        if !sum.is_one() {
            violations.push(Violation { kind: ViolationKind::FiberSum, location: x.name(v).to_string(), detail: format!("fiber sum {sum}") });
        }
    }
    // on edges: limits, every transported knot, and evenly spaced samples
    for e in x.edges() {
        let mut params: BTreeSet<Rational> = (1..=samples as i64).map(|i| Rational::new(i.into(), (samples as i64 + 1).into())).collect();
        let mut limit0 = Rational::zero();
        let mut limit1 = Rational::zero();
        for &eps in map.over(e) {
            let flip = !map.preserves_orientation(eps);
            for (t, _) in mu.knots(eps) {
                params.insert(if flip { &unit - t } else { t.clone() });
            }
            let (l0, l1) = (mu.limit(eps, flip), mu.limit(eps, !flip));
            limit0 += l0;
            limit1 += l1;
        }
        for (lim, at) in [(limit0, "0"), (limit1, "1")] {
            points_checked += 1;
            if !lim.is_one() {
                violations.push(Violation {
                    kind: ViolationKind::FiberSum,
                    location: format!("{} limit at t={at}", x.edge_key(e)),
                    detail: format!("fiber sum {lim}"),
                });
            }
        }
        for t in params.into_iter().filter(|t| !t.is_zero() && !t.is_one()) {
            let p = x.edge_point(e, t.clone()).unwrap();
            let sum = map.fiber(&p).iter().fold(Rational::zero(), |acc, q| acc + mu.eval(y, q));
            points_checked += 1;
            if !sum.is_one() {
                violations.push(Violation {
                    kind: ViolationKind::FiberSum,
                    location: format!("{} at t={}", x.edge_key(e), t),
                    detail: format!("fiber sum {sum}"),
                });
            }
        }
    }

    // continuity inside each Borel piece
    let partition = borel_partition(map);
    for eps in y.edges() {
        let (a, b) = y.endpoints(eps);
        for (v, at_end) in [(a, false), (b, true)] {
            let vid = y.vertex_id(v);
            if partition.piece_of(vid) == partition.piece_of(eps) && mu.limit(eps, at_end) != mu.vertex_value(v) {
                violations.push(Violation {
                    kind: ViolationKind::PieceContinuity,
                    location: format!("{} at {}", y.edge_key(eps), y.name(v)),
                    detail: format!("limit {} but value {}", mu.limit(eps, at_end), mu.vertex_value(v)),
                });
            }
        }
    }

    // the induced inner product must be continuous on the target
    let mut probes = Vec::new();
    if let Ok(one) = PlFunction::constant(y, scalar_one()) {
        probes.push(("1".to_string(), one));
    }
    for v in 0..y.vertex_count() {
        if let Ok(h) = PlFunction::hat(y, v) {
            probes.push((format!("hat({})", y.name(v)), h));
        }
    }
    for (label, f) in probes {
        let report = inner_product(map, mu, &f, &f).check_continuity(x);
        if let Some(w) = report.witness {
            violations.push(Violation {
                kind: ViolationKind::InnerProductContinuity,
                location: format!("<{label},{label}> on {} at t={}", w.edge, w.param),
                detail: format!("limit {} but value {}", w.limit.re, w.value.re),
            });
        }
    }

    WeightReport { valid: violations.is_empty(), violations, points_checked, min: mu.min_value(), max: mu.max_value() }
}

/// The constant weight `1/n`, used for `n`-fold coverings.
pub fn uniform_weight(y: &Complex, n: usize) -> WeightFunction {
    WeightFunction::constant(y, Rational::new(1.into(), (n as i64).into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::RawComplex;
    use crate::gallery;
    use crate::scalar::{int, rat};

    fn surj(f: &gallery::Fixture) -> SimplicialSurjection {
        SimplicialSurjection::from_raw(&f.map).unwrap()
    }

    fn path(n: usize) -> Complex {
        let names: Vec<String> = (0..=n).map(|i| format!("v{i}")).collect();
        let simplices = (0..n).map(|i| vec![names[i].clone(), names[i + 1].clone()]).collect();
        Complex::from_raw(&RawComplex { vertices: names, simplices, lengths: BTreeMap::new() }).unwrap()
    }

    #[test]
    fn single_set_cover_gives_one() {
        let x = path(2);
        let all: BTreeSet<SimplexId> = x.ids().collect();
        let pou = partition_of_unity(&x, &[all]).unwrap();
        for p in x.sample_points(3) {
            assert!(pou.eval(&x, 0, &p).is_one());
        }
    }

    #[test]
    fn two_overlapping_sets_on_an_interval() {
        let x = path(2);
        let star = |v: usize| x.cofaces(x.vertex_id(v)).iter().copied().collect::<BTreeSet<_>>();
        let w1: BTreeSet<_> = star(0).union(&star(1)).copied().collect();
        let w2: BTreeSet<_> = star(1).union(&star(2)).copied().collect();
        let pou = partition_of_unity(&x, &[w1, w2]).unwrap();
        let at = |v: usize| x.vertex_point(v);
        let vals: Vec<(Rational, Rational)> = (0..3).map(|v| (pou.eval(&x, 0, &at(v)), pou.eval(&x, 1, &at(v)))).collect();
        assert_eq!(vals, vec![(rat(1, 1), rat(0, 1)), (rat(1, 2), rat(1, 2)), (rat(0, 1), rat(1, 1))]);
    }

    #[test]
    fn circle_vertex_stars_give_hats() {
        let map = surj(&gallery::identity());
        let x = map.target();
        let pou = partition_of_unity(x, &vertex_star_cover(x)).unwrap();
        assert_eq!(pou.len(), 3);
        for p in x.sample_points(4) {
            let sum = (0..3).fold(Rational::zero(), |a, i| a + pou.eval(x, i, &p));
            assert!(sum.is_one());
        }
        for v in 0..3 {
            assert!(pou.eval(x, v, &x.vertex_point(v)).is_one());
            let e = x.cofaces(x.vertex_id(v)).iter().copied().find(|&c| x.dim_of(c) == 1).unwrap();
            assert_eq!(pou.eval(x, v, &x.edge_point(e, rat(1, 2)).unwrap()), rat(1, 2));
        }
    }

    #[test]
    fn cover_errors() {
        let x = path(2);
        let star0: BTreeSet<_> = x.cofaces(x.vertex_id(0)).iter().copied().collect();
        assert_eq!(partition_of_unity(&x, &[star0]), Err(WeightError::NotACover("v1".into())));
        let closed: BTreeSet<_> = [x.vertex_id(1)].into_iter().collect();
        assert_eq!(partition_of_unity(&x, &[closed]), Err(WeightError::NotOpenSet(0)));
    }

    #[test]
    fn figure2_weight_is_one_then_half() {
        let map = surj(&gallery::figure2());
        let mu = build_weight(&map).unwrap();
        let y = map.source();
        let v = |n: &str| mu.vertex_value(y.vertex_index(n).unwrap()).clone();
        assert_eq!((v("a0"), v("a1"), v("b"), v("c")), (rat(1, 1), rat(1, 1), rat(1, 2), rat(1, 2)));
        let e = |a: &str, b: &str| mu.knots(y.id_by_names(&[a, b]).unwrap()).to_vec();
        assert_eq!(e("a0", "a1"), vec![(rat(0, 1), rat(1, 1)), (rat(1, 1), rat(1, 1))]);
        assert_eq!(e("a1", "b"), vec![(rat(0, 1), rat(1, 2)), (rat(1, 1), rat(1, 2))]);
        assert!(validate_weight(&map, &mu, 16).valid);
    }

    #[test]
    fn covering_weight_is_uniform() {
        let map = surj(&gallery::double_cover_circle());
        let mu = build_weight(&map).unwrap();
        assert_eq!(mu, uniform_weight(map.source(), 2));
    }

    #[test]
    fn two_circles_construction_matches_the_blend() {
        let fixture = gallery::two_circles_with_interval();
        let map = surj(&fixture);
        let mu = build_weight(&map).unwrap();
        let y = map.source();
        assert!(validate_weight(&map, &mu, 32).valid);
        let e = |a: &str, b: &str| mu.knots(y.id_by_names(&[a, b]).unwrap()).to_vec();
        assert_eq!(e("l0", "u1"), vec![(rat(0, 1), rat(1, 4)), (rat(1, 1), rat(1, 4))]);
        assert_eq!(e("l0", "l1"), vec![(rat(0, 1), rat(1, 4)), (rat(1, 1), rat(1, 2))]);
        assert_eq!(e("u0", "u1"), vec![(rat(0, 1), rat(1, 2)), (rat(1, 1), rat(1, 4))]);
        assert_eq!(e("l1", "l2"), vec![(rat(0, 1), rat(1, 2)), (rat(1, 1), rat(1, 2))]);
        assert_eq!(mu.min_value(), rat(1, 4));
        assert_eq!(Some(mu), fixture.reference_weight(&map).unwrap());
    }

    #[test]
    fn reference_weight_of_two_circles_is_valid() {
        let fixture = gallery::two_circles_with_interval();
        let map = surj(&fixture);
        let mu = fixture.reference_weight(&map).unwrap().unwrap();
        let report = validate_weight(&map, &mu, 64);
        assert!(report.valid, "{:?}", report.violations);
    }

    #[test]
    fn constant_one_on_double_cover_fails() {
        let map = surj(&gallery::double_cover_circle());
        let mu = WeightFunction::constant(map.source(), int(1));
        let report = validate_weight(&map, &mu, 4);
        assert!(!report.valid);
        assert!(report.violations.iter().all(|v| v.kind == ViolationKind::FiberSum));
        assert!(report.violations[0].detail.contains("fiber sum 2"));
    }

    #[test]
    fn discontinuous_inner_product_is_reported() {
        // move mass from the lower branch at x0 to the upper one; fiber sums stay 1
        let fixture = gallery::two_circles_with_interval();
        let map = surj(&fixture);
        let y = map.source();
        let mut mu = fixture.reference_weight(&map).unwrap().unwrap();
        let lower = y.id_by_names(&["l0", "l1"]).unwrap();
        let upper = y.id_by_names(&["u0", "u1"]).unwrap();
        mu.edges.insert(lower, vec![(rat(0, 1), rat(1, 8)), (rat(1, 1), rat(1, 2))]);
        mu.edges.insert(upper, vec![(rat(0, 1), rat(5, 8)), (rat(1, 1), rat(1, 4))]);
        let report = validate_weight(&map, &mu, 8);
        assert!(!report.valid);
        assert!(report.violations.iter().all(|v| v.kind == ViolationKind::InnerProductContinuity), "{:?}", report.violations);
        assert!(report.violations.iter().any(|v| v.location.contains("hat(l0)")));
    }

    #[test]
    fn jump_inside_a_piece_is_reported() {
        let map = surj(&gallery::figure2());
        let y = map.source();
        let mut mu = build_weight(&map).unwrap();
        mu.vertex[y.vertex_index("a0").unwrap()] = rat(1, 2);
        let report = validate_weight(&map, &mu, 4);
        let kinds: BTreeSet<String> = report.violations.iter().map(|v| format!("{:?}", v.kind)).collect();
        assert!(kinds.contains("PieceContinuity") && kinds.contains("FiberSum"));
    }

    #[test]
    fn json_round_trip_and_reversed_keys() {
        let map = surj(&gallery::two_circles_with_interval());
        let y = map.source();
        let mu = build_weight(&map).unwrap();
        let json = mu.to_json(y);
        assert_eq!(WeightFunction::from_json(y, &json).unwrap(), mu);
        let mut rev = json.clone();
        let knots = rev.edges.remove("l0-l1").unwrap();
        rev.edges.insert("l1-l0".into(), knots.iter().rev().map(|[t, v]| [format_rational(&(Rational::one() - parse_rational(t).unwrap())), v.clone()]).collect());
        assert_eq!(WeightFunction::from_json(y, &rev).unwrap(), mu);
    }

    #[test]
    fn non_open_map_has_no_weight() {
        let map = surj(&gallery::interval_onto_circle());
        assert_eq!(build_weight(&map), Err(WeightError::NotOpen));
    }
}
