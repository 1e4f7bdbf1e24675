//! Simplicial surjections `p: Y -> X`: fibers, openness, strata, regular
//! neighborhoods and the covering / branched covering classification.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{barycentric_subdivide, Complex, ComplexError, Point, RawComplex, Simplex, SimplexId, SubdivisionMap};

/// Subdivision rounds tried before a regular neighborhood is given up on.
pub const MAX_SUBDIVISION_ROUNDS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("source vertex '{0}' has no image")]
    UnmappedVertex(String),
    #[error("source vertex '{source_vertex}' maps to unknown target vertex '{target_vertex}'")]
    UnknownTargetVertex { source_vertex: String, target_vertex: String },
    #[error("vertex_map names '{0}', which is not a source vertex")]
    UnknownSourceVertex(String),
    #[error("image of {simplex:?} is not a simplex of the target")]
    NotSimplicial { simplex: Vec<String> },
    #[error("{simplex:?} collapses under the map, so its fibers are infinite")]
    DegenerateFibers { simplex: Vec<String> },
    #[error("target simplex {simplex:?} is not the image of any source simplex")]
    NotSurjective { simplex: Vec<String> },
    #[error("could not separate the fiber after {rounds} subdivision rounds")]
    SubdivisionLimitExceeded { rounds: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawMap {
    pub source: RawComplex,
    pub target: RawComplex,
    pub vertex_map: BTreeMap<String, String>,
}

/// A nondegenerate simplicial surjection, validated.
#[derive(Clone, Debug)]
pub struct SimplicialSurjection {
    source: Complex,
    target: Complex,
    vertex_map: Vec<usize>,
    image: Vec<SimplexId>,
    over: Vec<Vec<SimplexId>>,
}

impl SimplicialSurjection {
    pub fn from_raw(raw: &RawMap) -> Result<Self, MapError> {
        let source = Complex::from_raw(&raw.source)?;
        let target = Complex::from_raw(&raw.target)?;
        Self::new(source, target, &raw.vertex_map)
    }

    pub fn new(source: Complex, target: Complex, vertex_map: &BTreeMap<String, String>) -> Result<Self, MapError> {
        let vmap = resolve_vertex_map(&source, &target, vertex_map)?;
        let mut image = Vec::with_capacity(source.simplex_count());
        let mut degenerate = None;
        for id in source.ids() {
            let s = source.simplex(id);
            let mut img: Vec<usize> = s.vertices().iter().map(|&v| vmap[v]).collect();
            img.sort_unstable();
            img.dedup();
            let Some(target_id) = target.id_of(&Simplex::new(img.clone())) else {
                return Err(MapError::NotSimplicial { simplex: source.simplex_names(s) });
            };
            if img.len() < s.len() && degenerate.is_none() {
                degenerate = Some(source.simplex_names(s));
            }
            image.push(target_id);
        }
        if let Some(simplex) = degenerate {
            return Err(MapError::DegenerateFibers { simplex });
        }
        let mut over = vec![Vec::new(); target.simplex_count()];
        for (i, x) in image.iter().enumerate() {
            over[x.0].push(SimplexId(i));
        }
        if let Some(x) = target.ids().find(|x| over[x.0].is_empty()) {
            return Err(MapError::NotSurjective { simplex: target.simplex_names(target.simplex(x)) });
        }
        Ok(SimplicialSurjection { source, target, vertex_map: vmap, image, over })
    }

    pub fn to_raw(&self) -> RawMap {
        let vertex_map = (0..self.source.vertex_count())
            .map(|v| (self.source.name(v).to_string(), self.target.name(self.vertex_map[v]).to_string()))
            .collect();
        RawMap { source: self.source.to_raw(), target: self.target.to_raw(), vertex_map }
    }

    pub fn source(&self) -> &Complex {
        &self.source
    }

    pub fn target(&self) -> &Complex {
        &self.target
    }

    pub fn map_vertex(&self, v: usize) -> usize {
        self.vertex_map[v]
    }

    pub fn image(&self, y: SimplexId) -> SimplexId {
        self.image[y.0]
    }

    /// Source simplices mapping onto `x`, in id order.
    pub fn over(&self, x: SimplexId) -> &[SimplexId] {
        &self.over[x.0]
    }

    /// Number of preimages of any point of the open simplex `x`.
    pub fn fiber_count(&self, x: SimplexId) -> usize {
        self.over[x.0].len()
    }

    /// True when the source edge runs in the same direction as its image
    /// (lower-indexed endpoint over lower-indexed endpoint).
    pub fn preserves_orientation(&self, y_edge: SimplexId) -> bool {
        let (a, _) = self.source.endpoints(y_edge);
        let (xa, _) = self.target.endpoints(self.image(y_edge));
        self.vertex_map[a] == xa
    }

    /// Transports barycentric coordinates from `x`'s carrier to each simplex over it.
    pub fn fiber(&self, x: &Point) -> Vec<Point> {
        let sigma = self.target.simplex(x.carrier);
        self.over[x.carrier.0]
            .iter()
            .map(|&tau| {
                let coords = self
                    .source
                    .simplex(tau)
                    .vertices()
                    .iter()
                    .map(|&v| x.coords[sigma.position(self.vertex_map[v]).expect("maps onto carrier")].clone())
                    .collect();
                Point { carrier: tau, coords }
            })
            .collect()
    }

    pub fn image_point(&self, y: &Point) -> Point {
        let carrier = self.image(y.carrier);
        let sigma = self.target.simplex(carrier);
        let mut coords = vec![num_traits::Zero::zero(); sigma.len()];
        for (&v, c) in self.source.simplex(y.carrier).vertices().iter().zip(&y.coords) {
            coords[sigma.position(self.vertex_map[v]).unwrap()] = c.clone();
        }
        Point { carrier, coords }
    }

    /// Star-coface criterion: for each source simplex `tau` and each target
    /// coface `s` of `p(tau)`, some coface of `tau` maps onto `s`.
    pub fn is_open(&self) -> OpennessReport {
        for tau in self.source.ids() {
            let covered: BTreeSet<SimplexId> =
                self.source.cofaces(tau).iter().map(|&c| self.image(c)).collect();
            for &s in self.target.cofaces(self.image(tau)) {
                if !covered.contains(&s) {
                    return OpennessReport { open: false, witness: Some((tau, s)) };
                }
            }
        }
        OpennessReport { open: true, witness: None }
    }

    pub fn stratify(&self) -> Stratification {
        let counts: Vec<usize> = self.target.ids().map(|x| self.fiber_count(x)).collect();
        let mut strata: BTreeMap<usize, Vec<SimplexId>> = BTreeMap::new();
        for x in self.target.ids() {
            strata.entry(counts[x.0]).or_default().push(x);
        }
        let max_fibers = counts.iter().copied().max().unwrap_or(0);
        Stratification { counts, strata, max_fibers }
    }

    /// Subdivides source and target once; the induced map sends the
    /// barycenter of `tau` to the barycenter of `p(tau)`.
    pub fn subdivide(&self) -> (SimplicialSurjection, SubdivisionMap, SubdivisionMap) {
        let (fine_y, sub_y) = barycentric_subdivide(&self.source);
        let (fine_x, sub_x) = barycentric_subdivide(&self.target);
        let names = self
            .source
            .ids()
            .map(|tau| (fine_y.name(tau.0).to_string(), fine_x.name(self.image(tau).0).to_string()))
            .collect();
        let map = SimplicialSurjection::new(fine_y, fine_x, &names).expect("subdivision of a valid map is valid");
        (map, sub_y, sub_x)
    }

    /// Regular neighborhood of `x`: `U` is the open star of its carrier and
    /// the branches are the components of `p^{-1}(U)`.
    pub fn regular_neighborhood(&self, x: &Point) -> Result<RegularNeighborhood, MapError> {
        let mut current: Option<(SimplicialSurjection, Point)> = None;
        for round in 0..=MAX_SUBDIVISION_ROUNDS {
            let (map, center) = match &current {
                Some((m, c)) => (m, c),
                None => (self, x),
            };
            if let Some(mut nbhd) = map.star_neighborhood(center) {
                nbhd.rounds = round;
                if round > 0 {
                    nbhd.subdivided = current.map(|(m, _)| Box::new(m));
                }
                return Ok(nbhd);
            }
            let (finer, _, sub_x) = map.subdivide();
            let center = sub_x.to_fine(center);
            current = Some((finer, center));
        }
        Err(MapError::SubdivisionLimitExceeded { rounds: MAX_SUBDIVISION_ROUNDS })
    }

    fn star_neighborhood(&self, x: &Point) -> Option<RegularNeighborhood> {
        let u: BTreeSet<SimplexId> = self.target.cofaces(x.carrier).iter().copied().collect();
        let preimage: Vec<SimplexId> = self.source.ids().filter(|y| u.contains(&self.image(*y))).collect();
        let components = components_of(&self.source, &preimage);
        let fiber = self.fiber(x);
        let mut branches = Vec::with_capacity(fiber.len());
        for point in &fiber {
            let comp = components.iter().find(|c| c.contains(&point.carrier))?;
            branches.push((point.clone(), comp.clone()));
        }
        let distinct: BTreeSet<&BTreeSet<SimplexId>> = branches.iter().map(|(_, c)| c).collect();
        if distinct.len() != fiber.len() || components.len() != fiber.len() {
            return None;
        }
        let branches = branches
            .into_iter()
            .map(|(fiber_point, cells)| {
                let imaged: BTreeSet<SimplexId> = cells.iter().map(|&c| self.image(c)).collect();
                Branch { onto: imaged == u, fiber_point, cells }
            })
            .collect();
        Some(RegularNeighborhood { rounds: 0, center: x.clone(), u, branches, subdivided: None })
    }
}

fn resolve_vertex_map(
    source: &Complex,
    target: &Complex,
    vertex_map: &BTreeMap<String, String>,
) -> Result<Vec<usize>, MapError> {
    if let Some(extra) = vertex_map.keys().find(|k| source.vertex_index(k).is_none()) {
        return Err(MapError::UnknownSourceVertex(extra.clone()));
    }
    (0..source.vertex_count())
        .map(|v| {
            let name = source.name(v);
            let img = vertex_map.get(name).ok_or_else(|| MapError::UnmappedVertex(name.to_string()))?;
            target.vertex_index(img).ok_or_else(|| MapError::UnknownTargetVertex {
                source_vertex: name.to_string(),
                target_vertex: img.clone(),
            })
        })
        .collect()
}

/// Connected pieces of a union of open simplices: two open simplices touch
/// exactly when one is a face of the other.
pub(crate) fn components_of(complex: &Complex, cells: &[SimplexId]) -> Vec<BTreeSet<SimplexId>> {
    let members: BTreeMap<SimplexId, usize> = cells.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut parent: Vec<usize> = (0..cells.len()).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for (i, &c) in cells.iter().enumerate() {
        for f in complex.faces(c) {
            if let Some(&j) = members.get(f) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<SimplexId>> = BTreeMap::new();
    for (i, &c) in cells.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().insert(c);
    }
    let mut out: Vec<_> = groups.into_values().collect();
    out.sort();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpennessReport {
    pub open: bool,
    /// `(tau, s)`: no coface of source simplex `tau` maps onto target simplex `s`.
    pub witness: Option<(SimplexId, SimplexId)>,
}

/// Fiber cardinality of every open simplex of the target, grouped into strata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratification {
    pub counts: Vec<usize>,
    pub strata: BTreeMap<usize, Vec<SimplexId>>,
    pub max_fibers: usize,
}

impl Stratification {
    pub fn count(&self, x: SimplexId) -> usize {
        self.counts[x.0]
    }

    pub fn nonempty(&self) -> impl Iterator<Item = usize> + '_ {
        self.strata.keys().copied()
    }

    pub fn table(&self, target: &Complex) -> BTreeMap<usize, Vec<String>> {
        self.strata
            .iter()
            .map(|(j, cells)| (*j, cells.iter().map(|&c| target.cell_label(c)).collect()))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosednessReport {
    pub closed: bool,
    /// `(j, face, coface)`: `coface` lies in the cumulative stratum `j`, its
    /// face only in stratum `j + 1`.
    pub witness: Option<(usize, SimplexId, SimplexId)>,
}

/// Checks that each cumulative stratum is closed in the next one.
pub fn check_strata_closedness(target: &Complex, strat: &Stratification) -> ClosednessReport {
    for j in 0..=strat.max_fibers {
        for x in target.ids() {
            if strat.count(x) > j {
                continue;
            }
            for &face in target.faces(x) {
                if strat.count(face) == j + 1 {
                    return ClosednessReport { closed: false, witness: Some((j, face, x)) };
                }
            }
        }
    }
    ClosednessReport { closed: true, witness: None }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub fiber_point: Point,
    pub cells: BTreeSet<SimplexId>,
    /// Whether the branch maps onto all of `U`.
    pub onto: bool,
}

#[derive(Clone, Debug)]
pub struct RegularNeighborhood {
    /// Subdivision rounds applied before the fiber separated.
    pub rounds: usize,
    pub center: Point,
    pub u: BTreeSet<SimplexId>,
    pub branches: Vec<Branch>,
    /// The subdivided map the cell ids refer to, when `rounds > 0`.
    pub subdivided: Option<Box<SimplicialSurjection>>,
}

impl RegularNeighborhood {
    pub fn branch_of(&self, cell: SimplexId) -> Option<usize> {
        self.branches.iter().position(|b| b.cells.contains(&cell))
    }

    pub fn all_onto(&self) -> bool {
        self.branches.iter().all(|b| b.onto)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    NotSurjective,
    DegenerateFibers,
    NotOpen,
    BranchedCovering,
    Covering,
}

impl Verdict {
    /// Open maps with bounded fibers, i.e. the verdicts with a Hilbert module structure.
    pub fn is_branched(self) -> bool {
        matches!(self, Verdict::BranchedCovering | Verdict::Covering)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentVerdict {
    pub cells: Vec<String>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_fold: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    pub n_fold: Option<usize>,
    pub strata: Option<Stratification>,
    pub components: Vec<ComponentVerdict>,
}

/// Runs validation, openness and stratification on a raw vertex map.
/// Only malformed input (unknown vertices, non-simplicial images) is an error;
/// every other failure is a verdict.
pub fn classify(source: Complex, target: Complex, vertex_map: &BTreeMap<String, String>) -> Result<Classification, MapError> {
    let negative = |verdict, witness| Classification { verdict, witness: Some(witness), n_fold: None, strata: None, components: Vec::new() };
    match SimplicialSurjection::new(source, target, vertex_map) {
        Ok(map) => Ok(classify_surjection(&map)),
        Err(MapError::DegenerateFibers { simplex }) => Ok(negative(
            Verdict::DegenerateFibers,
            Witness { kind: "collapsed simplex".into(), source: Some(simplex), target: None },
        )),
        Err(MapError::NotSurjective { simplex }) => Ok(negative(
            Verdict::NotSurjective,
            Witness { kind: "target simplex without preimage".into(), source: None, target: Some(simplex) },
        )),
        Err(e) => Err(e),
    }
}

pub fn classify_raw(raw: &RawMap) -> Result<Classification, MapError> {
    classify(Complex::from_raw(&raw.source)?, Complex::from_raw(&raw.target)?, &raw.vertex_map)
}

pub fn classify_surjection(map: &SimplicialSurjection) -> Classification {
    let (y, x) = (map.source(), map.target());
    let open = map.is_open();
    if let Some((tau, s)) = open.witness {
        return Classification {
            verdict: Verdict::NotOpen,
            witness: Some(Witness {
                kind: "no coface of the source simplex maps onto the target coface".into(),
                source: Some(y.simplex_names(y.simplex(tau))),
                target: Some(x.simplex_names(x.simplex(s))),
            }),
            n_fold: None,
            strata: Some(map.stratify()),
            components: Vec::new(),
        };
    }
    let strat = map.stratify();
    let components: Vec<ComponentVerdict> = x
        .components()
        .into_iter()
        .map(|cells| {
            let counts: BTreeSet<usize> = cells.iter().map(|&c| strat.count(c)).collect();
            let single = counts.len() == 1;
            ComponentVerdict {
                cells: cells.iter().map(|&c| x.cell_label(c)).collect(),
                verdict: if single { Verdict::Covering } else { Verdict::BranchedCovering },
                n_fold: single.then(|| *counts.iter().next().unwrap()),
            }
        })
        .collect();

    let mut classification = Classification {
        verdict: Verdict::BranchedCovering,
        witness: None,
        n_fold: None,
        strata: Some(strat.clone()),
        components,
    };
    if strat.strata.len() == 1 && x.is_connected() {
        match local_homeomorphism_failure(map) {
            None => {
                classification.verdict = Verdict::Covering;
                classification.n_fold = Some(strat.max_fibers);
            }
            Some(v) => {
                classification.witness = Some(Witness {
                    kind: "branch is not mapped bijectively onto its regular neighborhood".into(),
                    source: None,
                    target: Some(x.simplex_names(&Simplex::vertex(v))),
                });
            }
        }
    }
    classification
}

/// Returns a target vertex whose regular neighborhood has a branch that is not
/// a bijection onto `U`.
fn local_homeomorphism_failure(map: &SimplicialSurjection) -> Option<usize> {
    let x = map.target();
    for v in 0..x.vertex_count() {
        let nbhd = match map.regular_neighborhood(&x.vertex_point(v)) {
            Ok(n) => n,
            Err(_) => return Some(v),
        };
        let m = nbhd.subdivided.as_deref().unwrap_or(map);
        for b in &nbhd.branches {
            let mut hits: BTreeMap<SimplexId, usize> = BTreeMap::new();
            for &c in &b.cells {
                *hits.entry(m.image(c)).or_default() += 1;
            }
            if hits.len() != nbhd.u.len() || hits.values().any(|&n| n != 1) {
                return Some(v);
            }
        }
    }
    None
}
