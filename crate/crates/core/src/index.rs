//! Borel pieces `Y_j^{k,t}`, the index element `M`, the reconstruction
//! identity, quasi-bases for genuine coverings and the projectivity verdict.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_complex::Complex as C64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{Complex, Point, SimplexId};
use crate::covermap::{classify_surjection, components_of, MapError, RawMap, SimplicialSurjection, Verdict};
use crate::expectation::minimal_k;
use crate::hilbert::{Cell, ContinuityReport, Discontinuity, Piece, PiecewiseFunction, PlFunction};
use crate::poly::Poly;
use crate::scalar::{real, scalar_to_f64, scalar_zero, to_f64, Rational, Scalar};
use crate::weights::{build_weight, partition_of_unity, PartitionOfUnity, WeightError, WeightFunction};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IndexError {
    #[error("the map is {0:?}, not a covering")]
    NotACovering(Verdict),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error("could not find a trivializing cover around vertex {0}")]
    NoTrivialization(String),
}

/// One piece `Y_j^{k,t}`: the `t`-th sheet over the `k`-th part of stratum `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BorelPiece {
    pub stratum: usize,
    pub part: usize,
    pub sheet: usize,
    pub x_cells: BTreeSet<SimplexId>,
    pub y_cells: BTreeSet<SimplexId>,
}

impl BorelPiece {
    pub fn label(&self) -> String {
        format!("Y[{},{},{}]", self.stratum, self.part, self.sheet)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BorelPartition {
    pieces: Vec<BorelPiece>,
    /// Y cell id -> indices of the pieces containing it.
    owners: Vec<Vec<usize>>,
}

impl BorelPartition {
    /// Assembles pieces without checking them; see [`BorelPartition::validate`].
    pub fn from_pieces(y_cells: usize, pieces: Vec<BorelPiece>) -> Self {
        let mut owners = vec![Vec::new(); y_cells];
        for (i, p) in pieces.iter().enumerate() {
            for c in &p.y_cells {
                owners[c.0].push(i);
            }
        }
        BorelPartition { pieces, owners }
    }

    pub fn pieces(&self) -> &[BorelPiece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn piece_of(&self, cell: SimplexId) -> Option<usize> {
        self.owners[cell.0].first().copied()
    }

    pub fn pieces_containing(&self, cell: SimplexId) -> &[usize] {
        &self.owners[cell.0]
    }

    /// Disjointness, covering, and injectivity of `p` on each piece into a single stratum.
    pub fn validate(&self, map: &SimplicialSurjection) -> Vec<String> {
        let (y, x) = (map.source(), map.target());
        let strat = map.stratify();
        let mut problems = Vec::new();
        for c in y.ids() {
            match self.owners[c.0].len() {
                1 => {}
                0 => problems.push(format!("{} lies in no piece", y.cell_label(c))),
                n => problems.push(format!("{} lies in {n} pieces", y.cell_label(c))),
            }
        }
        for p in &self.pieces {
            let images: Vec<SimplexId> = p.y_cells.iter().map(|&c| map.image(c)).collect();
            let distinct: BTreeSet<_> = images.iter().copied().collect();
            if distinct.len() != images.len() {
                problems.push(format!("p is not injective on {}", p.label()));
            }
            if distinct.iter().any(|c| strat.count(*c) != p.stratum) {
                problems.push(format!("{} leaves stratum {}", p.label(), p.stratum));
            }
            if distinct != p.x_cells {
                problems.push(format!("{} does not cover its base {:?}", p.label(), p.x_cells.iter().map(|&c| x.cell_label(c)).collect::<Vec<_>>()));
            }
        }
        problems
    }

    pub fn table(&self, map: &SimplicialSurjection) -> Vec<PieceRow> {
        let (y, x) = (map.source(), map.target());
        self.pieces
            .iter()
            .map(|p| PieceRow {
                label: p.label(),
                stratum: p.stratum,
                base: p.x_cells.iter().map(|&c| x.cell_label(c)).collect(),
                cells: p.y_cells.iter().map(|&c| y.cell_label(c)).collect(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceRow {
    pub label: String,
    pub stratum: usize,
    pub base: Vec<String>,
    pub cells: Vec<String>,
}

fn neighbours(c: &Complex, id: SimplexId) -> impl Iterator<Item = SimplexId> + '_ {
    c.faces(id).iter().chain(c.cofaces(id)).copied().filter(move |&n| n != id)
}

fn adjacent(c: &Complex, a: SimplexId, b: SimplexId) -> bool {
    c.faces(a).contains(&b) || c.faces(b).contains(&a)
}

/// Splits each stratum component into parts over which the preimage falls
/// apart into `j` sheets, growing each part from its lowest cell as long as
/// every sheet keeps a unique continuation.
pub fn borel_partition(map: &SimplicialSurjection) -> BorelPartition {
    let (y, x) = (map.source(), map.target());
    let strat = map.stratify();
    let mut pieces = Vec::new();
    for (&j, cells) in &strat.strata {
        let mut part = 0;
        for comp in components_of(x, cells) {
            let mut remaining = comp.clone();
            while let Some(&start) = remaining.iter().next() {
                part += 1;
                remaining.remove(&start);
                let mut base = BTreeSet::from([start]);
                let mut lifts: Vec<BTreeMap<SimplexId, SimplexId>> =
                    map.over(start).iter().map(|&tau| BTreeMap::from([(start, tau)])).collect();
                let mut rejected = BTreeSet::new();
                let mut queue: VecDeque<SimplexId> = neighbours(x, start).filter(|n| remaining.contains(n)).collect();
                while let Some(s) = queue.pop_front() {
                    if !remaining.contains(&s) || rejected.contains(&s) {
                        continue;
                    }
                    let placed: Vec<SimplexId> = neighbours(x, s).filter(|n| base.contains(n)).collect();
                    let choice: Option<Vec<SimplexId>> = lifts
                        .iter()
                        .map(|sheet| {
                            let fits: Vec<SimplexId> = map
                                .over(s)
                                .iter()
                                .copied()
                                .filter(|&tau| placed.iter().all(|n| adjacent(y, tau, sheet[n])))
                                .collect();
                            (fits.len() == 1).then(|| fits[0])
                        })
                        .collect();
                    match choice {
                        Some(ch) if ch.iter().collect::<BTreeSet<_>>().len() == ch.len() => {
                            for (sheet, tau) in lifts.iter_mut().zip(ch) {
                                sheet.insert(s, tau);
                            }
                            base.insert(s);
                            remaining.remove(&s);
                            queue.extend(neighbours(x, s).filter(|n| remaining.contains(n)));
                        }
                        _ => {
                            rejected.insert(s);
                        }
                    }
                }
                for (t, sheet) in lifts.into_iter().enumerate() {
                    pieces.push(BorelPiece {
                        stratum: j,
                        part,
                        sheet: t + 1,
                        x_cells: base.clone(),
                        y_cells: sheet.into_values().collect(),
                    });
                }
            }
        }
    }
    BorelPartition::from_pieces(y.simplex_count(), pieces)
}

/// `M = Σ m*_{jkt} m_{jkt}` with `m_{jkt} = μ^{-1/2}` on its piece: the
/// number of pieces through a point divided by `μ` there, kept as a
/// reciprocal of the PL weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexElement {
    mu: WeightFunction,
    multiplicity: Vec<usize>,
}

pub fn index_element(mu: &WeightFunction, partition: &BorelPartition) -> IndexElement {
    IndexElement { mu: mu.clone(), multiplicity: partition.owners.iter().map(Vec::len).collect() }
}

impl IndexElement {
    pub fn eval(&self, y: &Complex, p: &Point) -> Rational {
        Rational::from_integer((self.multiplicity[p.carrier.0] as i64).into()) / self.mu.eval(y, p)
    }

    /// `M μ`, which equals 1 everywhere for a genuine partition.
    pub fn times_mu(&self, y: &Complex, p: &Point) -> Rational {
        self.eval(y, p) * self.mu.eval(y, p)
    }

    pub fn limit(&self, edge: SimplexId, at_end: bool) -> Rational {
        Rational::from_integer((self.multiplicity[edge.0] as i64).into()) / self.mu.limit(edge, at_end)
    }

    /// Compares each vertex value with the limits along incident edges.
    /// `M` is generally discontinuous across pieces.
    pub fn check_continuity(&self, y: &Complex) -> ContinuityReport {
        for e in y.edges() {
            let (a, b) = y.endpoints(e);
            for (v, at_end) in [(a, false), (b, true)] {
                let value = self.eval(y, &y.vertex_point(v));
                let lim = self.limit(e, at_end);
                if lim != value {
                    return ContinuityReport {
                        continuous: false,
                        witness: Some(Discontinuity {
                            vertex: Some(y.name(v).to_string()),
                            edge: y.edge_key(e),
                            param: if at_end { Rational::one() } else { Rational::zero() },
                            gap: to_f64(&(&lim - &value)).abs(),
                            limit: real(lim),
                            value: real(value),
                        }),
                    };
                }
            }
        }
        ContinuityReport { continuous: true, witness: None }
    }

    /// Exact polynomial form, available when `μ` is constant on every edge.
    pub fn to_piecewise(&self, y: &Complex) -> Option<PiecewiseFunction> {
        let mut cells = Vec::with_capacity(y.simplex_count());
        for id in y.ids() {
            cells.push(match y.dim_of(id) {
                0 => Cell::Vertex(real(self.eval(y, &y.vertex_point(y.simplex(id).vertices()[0])))),
                1 => {
                    let knots = self.mu.knots(id);
                    if knots.iter().any(|(_, v)| v != &knots[0].1) {
                        return None;
                    }
                    let m = Rational::from_integer((self.multiplicity[id.0] as i64).into()) / &knots[0].1;
                    Cell::Edge(vec![Piece { start: Rational::zero(), end: Rational::one(), poly: Poly::constant(real(m)) }])
                }
                _ => Cell::Higher,
            });
        }
        Some(PiecewiseFunction::from_cells(cells))
    }

    /// Per piece: the constant value of `M`, or the knots of `1/M = μ` when it varies.
    pub fn describe(&self, y: &Complex, partition: &BorelPartition) -> Vec<(String, IndexValue)> {
        partition
            .pieces
            .iter()
            .map(|p| {
                let mut values = BTreeSet::new();
                let mut profiles = BTreeMap::new();
                for &c in &p.y_cells {
                    match y.dim_of(c) {
                        0 => {
                            values.insert(self.eval(y, &y.vertex_point(y.simplex(c).vertices()[0])));
                        }
                        _ => {
                            let knots = self.mu.knots(c);
                            let mult = Rational::from_integer((self.multiplicity[c.0] as i64).into());
                            for (_, v) in knots {
                                values.insert(&mult / v);
                            }
                            if knots.iter().any(|(_, v)| v != &knots[0].1) {
                                profiles.insert(y.edge_key(c), knots.to_vec());
                            }
                        }
                    }
                }
                let value = if profiles.is_empty() && values.len() == 1 {
                    IndexValue::Constant(values.into_iter().next().unwrap())
                } else {
                    IndexValue::Reciprocal(profiles)
                };
                (p.label(), value)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IndexValue {
    Constant(Rational),
    /// `M = 1/μ` with these PL profiles of `μ` per edge.
    Reciprocal(BTreeMap<String, Vec<(Rational, Rational)>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionFailure {
    pub location: String,
    pub expected: Scalar,
    /// The exactly computed part of the sum.
    pub exact_part: Scalar,
    /// Cross terms `μ^{-1/2}(y) μ^{-1/2}(y')` that are irrational, summed in floating point.
    pub irrational_part: C64<f64>,
    /// `|sum| / |f(y)|` when `f(y) != 0`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionReport {
    pub exact: bool,
    pub samples: usize,
    pub failures: Vec<ReconstructionFailure>,
}

fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.is_negative() {
        return None;
    }
    let (n, d) = (r.numer().sqrt(), r.denom().sqrt());
    (&n * &n == *r.numer() && &d * &d == *r.denom()).then(|| Rational::new(n, d))
}

/// Evaluates `Σ_{jkt} m_{jkt}(y) E_μ(m*_{jkt} f)(p(y))` literally at each
/// sample and compares with `f(y)`.
pub fn check_reconstruction(
    map: &SimplicialSurjection,
    mu: &WeightFunction,
    partition: &BorelPartition,
    f: &PlFunction,
    samples: &[Point],
) -> ReconstructionReport {
    let y = map.source();
    let mut failures = Vec::new();
    for q in samples {
        let fiber = map.fiber(&map.image_point(q));
        let mu_q = mu.eval(y, q);
        let mut exact = scalar_zero();
        let mut irrational = C64::new(0.0, 0.0);
        for &pi in partition.pieces_containing(q.carrier) {
            let piece = &partition.pieces[pi];
            for other in fiber.iter().filter(|o| piece.y_cells.contains(&o.carrier)) {
                let mu_o = mu.eval(y, other);
                let term = f.eval(y, other) * real(mu_o.clone());
                // m(q) m(other) = (μ(q) μ(other))^{-1/2}
                match rational_sqrt(&(&mu_q * &mu_o)) {
                    Some(s) => exact += term * real(s.recip()),
                    None => irrational += scalar_to_f64(&term) / (to_f64(&mu_q) * to_f64(&mu_o)).sqrt(),
                }
            }
        }
        let expected = f.eval(y, q);
        if exact != expected || irrational != C64::new(0.0, 0.0) {
            let total = scalar_to_f64(&exact) + irrational;
            let e = scalar_to_f64(&expected).norm();
            failures.push(ReconstructionFailure {
                location: match q.edge_param() {
                    None => y.cell_label(q.carrier),
                    Some(t) => format!("{} t={}", y.cell_label(q.carrier), t),
                },
                expected,
                exact_part: exact,
                irrational_part: irrational,
                ratio: (e > 0.0).then(|| total.norm() / e),
            });
        }
    }
    ReconstructionReport { exact: failures.is_empty(), samples: samples.len(), failures }
}

/// `u_{α,k} = sqrt(n φ_α ∘ p) · 1_{V_{α,k}}` over a trivializing cover.
#[derive(Clone, Debug)]
pub struct QuasiBasis {
    pub n: usize,
    pub cover: Vec<BTreeSet<SimplexId>>,
    pub pou: PartitionOfUnity,
    /// Per cover set, the Y cells of each sheet over it.
    pub sheets: Vec<Vec<BTreeSet<SimplexId>>>,
    /// `(cover set, sheet)` of each element.
    pub elements: Vec<(usize, usize)>,
}

impl QuasiBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `u_i(y)^2 = n φ_α(p(y))` on the sheet, exactly.
    pub fn eval_sq(&self, map: &SimplicialSurjection, i: usize, q: &Point) -> Rational {
        let (alpha, k) = self.elements[i];
        if !self.sheets[alpha][k].contains(&q.carrier) {
            return Rational::zero();
        }
        self.pou.eval(map.target(), alpha, &map.image_point(q)) * Rational::from_integer((self.n as i64).into())
    }

    pub fn eval(&self, map: &SimplicialSurjection, i: usize, q: &Point) -> f64 {
        to_f64(&self.eval_sq(map, i, q)).sqrt()
    }

    /// `Index(E) = Σ_i u_i u_i^*` at `q`, exactly.
    pub fn index_at(&self, map: &SimplicialSurjection, q: &Point) -> Rational {
        (0..self.len()).fold(Rational::zero(), |acc, i| acc + self.eval_sq(map, i, q))
    }

    /// `Σ_i u_i(q) E(u_i^* b)(p(q))` in floating point.
    pub fn reconstruct(&self, map: &SimplicialSurjection, mu: &WeightFunction, b: &PlFunction, q: &Point) -> C64<f64> {
        let y = map.source();
        let fiber = map.fiber(&map.image_point(q));
        let mut total = C64::new(0.0, 0.0);
        for i in 0..self.len() {
            let ui = self.eval(map, i, q);
            if ui == 0.0 {
                continue;
            }
            let e: C64<f64> = fiber
                .iter()
                .map(|o| scalar_to_f64(&b.eval(y, o)) * (self.eval(map, i, o) * to_f64(&mu.eval(y, o))))
                .sum();
            total += e * ui;
        }
        total
    }

    pub fn check(&self, map: &SimplicialSurjection, mu: &WeightFunction, functions: &[PlFunction], samples: &[Point], tolerance: f64) -> QuasiBasisReport {
        let y = map.source();
        let n = Rational::from_integer((self.n as i64).into());
        let mut max_error: f64 = 0.0;
        let mut max_index_error: f64 = 0.0;
        let mut index_exact = true;
        for q in samples {
            let idx = self.index_at(map, q);
            if idx != n {
                index_exact = false;
            }
            max_index_error = max_index_error.max((to_f64(&idx) - self.n as f64).abs());
            for b in functions {
                let err = (self.reconstruct(map, mu, b, q) - scalar_to_f64(&b.eval(y, q))).norm();
                max_error = max_error.max(err);
            }
        }
        QuasiBasisReport {
            size: self.len(),
            samples: samples.len(),
            max_error,
            max_index_error,
            index_exact,
            passes: max_error <= tolerance && max_index_error <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuasiBasisReport {
    pub size: usize,
    pub samples: usize,
    pub max_error: f64,
    pub max_index_error: f64,
    pub index_exact: bool,
    pub passes: bool,
}

/// Preimage of an open set split into components, if each maps bijectively onto it.
fn trivialize(map: &SimplicialSurjection, w: &BTreeSet<SimplexId>, n: usize) -> Option<Vec<BTreeSet<SimplexId>>> {
    let pre: Vec<SimplexId> = map.source().ids().filter(|c| w.contains(&map.image(*c))).collect();
    let comps = components_of(map.source(), &pre);
    if comps.len() != n {
        return None;
    }
    for comp in &comps {
        let images: Vec<SimplexId> = comp.iter().map(|&c| map.image(c)).collect();
        let distinct: BTreeSet<SimplexId> = images.iter().copied().collect();
        if images.len() != distinct.len() || &distinct != w {
            return None;
        }
    }
    Some(comps)
}

/// Builds a quasi-basis for an `n`-fold covering. Vertex stars are merged
/// greedily into the first cover set that stays trivializing.
pub fn quasi_basis(map: &SimplicialSurjection) -> Result<QuasiBasis, IndexError> {
    let c = classify_surjection(map);
    let n = match (c.verdict, c.n_fold) {
        (Verdict::Covering, Some(n)) => n,
        (v, _) => return Err(IndexError::NotACovering(v)),
    };
    let x = map.target();
    let mut cover: Vec<BTreeSet<SimplexId>> = Vec::new();
    let mut sheets: Vec<Vec<BTreeSet<SimplexId>>> = Vec::new();
    for v in 0..x.vertex_count() {
        let star: BTreeSet<SimplexId> = x.cofaces(x.vertex_id(v)).iter().copied().collect();
        let mut placed = false;
        for (i, w) in cover.iter_mut().enumerate() {
            let merged: BTreeSet<SimplexId> = w.union(&star).copied().collect();
            if let Some(s) = trivialize(map, &merged, n) {
                *w = merged;
                sheets[i] = s;
                placed = true;
                break;
            }
        }
        if !placed {
            let s = trivialize(map, &star, n).ok_or_else(|| IndexError::NoTrivialization(x.name(v).to_string()))?;
            cover.push(star);
            sheets.push(s);
        }
    }
    let pou = partition_of_unity(x, &cover)?;
    let elements = (0..cover.len()).flat_map(|a| (0..n).map(move |k| (a, k))).collect();
    Ok(QuasiBasis { n, cover, pou, sheets, elements })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Projectivity {
    /// Finite-fold covering: `C(Y)` is finitely generated projective, with a quasi-basis.
    Projective { n: usize, quasi_basis_size: usize },
    /// Proper branched covering: a complete Hilbert module, topologically of
    /// index-finite type, not finitely generated projective.
    TopologicallyIndexFinite { k_min: Rational },
    /// No equivalent Hilbert-module norm arises from this construction.
    NotOpen,
    /// Input that is not a nondegenerate surjection.
    Invalid(Verdict),
}

pub fn projectivity_verdict(raw: &RawMap) -> Result<Projectivity, IndexError> {
    let map = match SimplicialSurjection::from_raw(raw) {
        Ok(m) => m,
        Err(MapError::DegenerateFibers { .. }) => return Ok(Projectivity::Invalid(Verdict::DegenerateFibers)),
        Err(MapError::NotSurjective { .. }) => return Ok(Projectivity::Invalid(Verdict::NotSurjective)),
        Err(e) => return Err(e.into()),
    };
    let c = classify_surjection(&map);
    Ok(match c.verdict {
        Verdict::Covering => Projectivity::Projective { n: c.n_fold.unwrap_or(0), quasi_basis_size: quasi_basis(&map)?.len() },
        Verdict::BranchedCovering => Projectivity::TopologicallyIndexFinite { k_min: minimal_k(&map, &build_weight(&map)?).k_min },
        Verdict::NotOpen => Projectivity::NotOpen,
        v => Projectivity::Invalid(v),
    })
}

/// Squares root of a positive rational, if it is a perfect square (used for exact reporting).
pub fn exact_sqrt(r: &Rational) -> Option<Rational> {
    rational_sqrt(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::scalar::{cplx, int, rat, scalar_one};
    use crate::weights::uniform_weight;

    fn surj(f: &gallery::Fixture) -> SimplicialSurjection {
        SimplicialSurjection::from_raw(&f.map).unwrap()
    }

    #[test]
    fn partitions_of_gallery_maps() {
        let count = |f: gallery::Fixture| borel_partition(&surj(&f)).len();
        assert_eq!(count(gallery::figure2()), 3);
        assert_eq!(count(gallery::identity()), 1);
        assert_eq!(count(gallery::two_circles_with_interval()), 5);
        assert_eq!(count(gallery::double_cover_circle()), 4);
        for f in [gallery::figure2(), gallery::identity(), gallery::two_circles_with_interval(), gallery::double_cover_circle()] {
            let map = surj(&f);
            assert!(borel_partition(&map).validate(&map).is_empty(), "{}", f.name);
        }
    }

    #[test]
    fn figure2_pieces() {
        let map = surj(&gallery::figure2());
        let rows = borel_partition(&map).table(&map);
        assert_eq!(rows[0].cells, vec!["a0", "a0-a1", "a1"]);
        assert_eq!(rows[1].cells, vec!["a1-b", "b"]);
        assert_eq!(rows[2].cells, vec!["a1-c", "c"]);
    }

    #[test]
    fn two_circles_pieces() {
        let map = surj(&gallery::two_circles_with_interval());
        let rows = borel_partition(&map).table(&map);
        let two: Vec<_> = rows.iter().filter(|r| r.stratum == 2).collect();
        assert_eq!(two.len(), 2);
        assert!(two[0].cells.iter().all(|c| c.starts_with('l')));
        assert!(two[1].cells.iter().all(|c| c.starts_with('u')));
        let three: Vec<Vec<String>> = rows.iter().filter(|r| r.stratum == 3).map(|r| r.cells.clone()).collect();
        assert_eq!(three, vec![vec!["l0-l1".to_string()], vec!["l0-u1".to_string()], vec!["u0-u1".to_string()]]);
    }

    #[test]
    fn figure2_index_element() {
        let map = surj(&gallery::figure2());
        let y = map.source();
        let mu = build_weight(&map).unwrap();
        let part = borel_partition(&map);
        let m = index_element(&mu, &part);
        let values: Vec<IndexValue> = m.describe(y, &part).into_iter().map(|(_, v)| v).collect();
        assert_eq!(values, vec![IndexValue::Constant(int(1)), IndexValue::Constant(int(2)), IndexValue::Constant(int(2))]);
        let report = m.check_continuity(y);
        assert!(!report.continuous);
        let w = report.witness.unwrap();
        assert_eq!(w.vertex.as_deref(), Some("a1"));
        assert_eq!((w.value, w.limit), (real(int(1)), real(int(2))));
        assert!(m.to_piecewise(y).is_some());
    }

    #[test]
    fn covering_index_element_is_constant() {
        let map = surj(&gallery::double_cover_circle());
        let mu = uniform_weight(map.source(), 2);
        let m = index_element(&mu, &borel_partition(&map));
        for p in map.source().sample_points(3) {
            assert_eq!(m.eval(map.source(), &p), int(2));
        }
    }

    #[test]
    fn two_circles_index_element_is_reciprocal() {
        let fixture = gallery::two_circles_with_interval();
        let map = surj(&fixture);
        let y = map.source();
        let mu = fixture.reference_weight(&map).unwrap().unwrap();
        let part = borel_partition(&map);
        let m = index_element(&mu, &part);
        let bridge = y.id_by_names(&["l0", "u1"]).unwrap();
        assert_eq!(m.eval(y, &y.edge_point(bridge, rat(1, 3)).unwrap()), int(4));
        let lower = y.id_by_names(&["l0", "l1"]).unwrap();
        // f1(t) = t + 1/4 with t = 1/8 of the arc, i.e. edge parameter 1/2
        assert_eq!(m.eval(y, &y.edge_point(lower, rat(1, 2)).unwrap()), rat(8, 3));
        for p in y.sample_points(9) {
            assert!(m.times_mu(y, &p).is_one());
        }
        assert!(m.to_piecewise(y).is_none());
    }

    #[test]
    fn reconstruction_is_exact() {
        for fixture in [gallery::figure2(), gallery::two_circles_with_interval()] {
            let map = surj(&fixture);
            let y = map.source();
            let mu = fixture.reference_weight(&map).unwrap().unwrap_or_else(|| build_weight(&map).unwrap());
            let part = borel_partition(&map);
            let f = PlFunction::from_fn(y, 2, |p| cplx(p.coords[0].clone() * int(3) - int(1), int(p.carrier.0 as i64))).unwrap();
            let report = check_reconstruction(&map, &mu, &part, &f, &y.sample_points(20));
            assert!(report.exact, "{}: {:?}", fixture.name, report.failures.first());
        }
    }

    #[test]
    fn overlapping_pieces_double_the_sum() {
        let map = surj(&gallery::figure2());
        let y = map.source();
        let mu = build_weight(&map).unwrap();
        let mut pieces = borel_partition(&map).pieces().to_vec();
        pieces.push(pieces[1].clone());
        let corrupt = BorelPartition::from_pieces(y.simplex_count(), pieces);
        assert!(!corrupt.validate(&map).is_empty());
        let one = PlFunction::constant(y, scalar_one()).unwrap();
        let report = check_reconstruction(&map, &mu, &corrupt, &one, &y.sample_points(4));
        assert!(!report.exact);
        assert!(report.failures.iter().all(|f| f.ratio == Some(2.0)));
        assert!(report.failures.iter().all(|f| f.location.contains('b')));
    }

    #[test]
    fn merged_pieces_produce_cross_terms() {
        let map = surj(&gallery::figure2());
        let y = map.source();
        let mu = build_weight(&map).unwrap();
        let mut pieces = borel_partition(&map).pieces().to_vec();
        let c = pieces.pop().unwrap();
        pieces[1].y_cells.extend(c.y_cells);
        let merged = BorelPartition::from_pieces(y.simplex_count(), pieces);
        let one = PlFunction::constant(y, scalar_one()).unwrap();
        let report = check_reconstruction(&map, &mu, &merged, &one, &y.sample_points(2));
        // both branches now share one m, so each sample sees the other sheet too
        assert!(report.failures.iter().all(|f| f.ratio == Some(2.0)));
    }

    #[test]
    fn identity_quasi_basis_is_one() {
        let map = surj(&gallery::identity());
        let qb = quasi_basis(&map).unwrap();
        assert_eq!(qb.len(), 1);
        for p in map.source().sample_points(5) {
            assert_eq!(qb.eval(&map, 0, &p), 1.0);
            assert!(qb.index_at(&map, &p).is_one());
        }
    }

    #[test]
    fn double_cover_quasi_basis() {
        let map = surj(&gallery::double_cover_circle());
        let qb = quasi_basis(&map).unwrap();
        assert_eq!((qb.len(), qb.cover.len()), (4, 2));
        let mu = uniform_weight(map.source(), 2);
        let y = map.source();
        let b = PlFunction::from_fn(y, 2, |p| cplx(p.coords[0].clone(), int(p.carrier.0 as i64))).unwrap();
        let report = qb.check(&map, &mu, &[b], &y.sample_points(10), 1e-9);
        assert!(report.passes && report.index_exact, "{report:?}");
    }

    #[test]
    fn branched_map_has_no_quasi_basis() {
        let map = surj(&gallery::figure2());
        assert_eq!(quasi_basis(&map).unwrap_err(), IndexError::NotACovering(Verdict::BranchedCovering));
    }

    #[test]
    fn verdicts() {
        assert_eq!(projectivity_verdict(&gallery::interval_onto_circle().map).unwrap(), Projectivity::NotOpen);
        assert_eq!(projectivity_verdict(&gallery::figure2().map).unwrap(), Projectivity::TopologicallyIndexFinite { k_min: int(2) });
        assert_eq!(projectivity_verdict(&gallery::double_cover_circle().map).unwrap(), Projectivity::Projective { n: 2, quasi_basis_size: 4 });
    }

    #[test]
    fn perfect_squares() {
        assert_eq!(exact_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(exact_sqrt(&rat(1, 2)), None);
        let _ = scalar_zero();
    }
}
