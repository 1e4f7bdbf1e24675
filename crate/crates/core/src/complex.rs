//! Finite abstract simplicial complexes with a rational metric on the 1-skeleton.
//!
//! Vertices carry string names; internally a vertex is its position in the
//! declared vertex list and a simplex is a sorted list of vertex positions.
//! Simplices are stored in lexicographic order, and a [`SimplexId`] is the
//! position in that order, so sorting by id is sorting lexicographically.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{format_rational, int, parse_rational, Rational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("simplex {simplex:?} has face '{vertex}', which is not a declared vertex")]
    MissingFace { simplex: Vec<String>, vertex: String },
    #[error("simplex {0:?} is listed more than once")]
    DuplicateSimplex(Vec<String>),
    #[error("edge {edge} has non-positive length {length}")]
    NonpositiveLength { edge: String, length: String },
    #[error("edge length '{0}' is not a rational number")]
    InvalidLength(String),
    #[error("length key '{0}' does not name an edge of the complex")]
    UnknownEdge(String),
    #[error("empty simplex")]
    EmptySimplex,
    #[error("simplex {0:?} repeats a vertex")]
    RepeatedVertex(Vec<String>),
    #[error("unknown simplex {0:?}")]
    UnknownSimplex(Vec<String>),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
}

/// A simplex as a sorted, duplicate-free list of vertex indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex(Vec<usize>);

impl Simplex {
    /// Sorts the vertices; callers must not pass repeated vertices.
    pub fn new(mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        Simplex(vertices)
    }

    pub fn vertex(v: usize) -> Self {
        Simplex(vec![v])
    }

    pub fn vertices(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len() - 1
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_face_of(&self, other: &Simplex) -> bool {
        self.0.iter().all(|v| other.0.binary_search(v).is_ok())
    }

    /// All non-empty faces, including the simplex itself.
    pub fn all_faces(&self) -> Vec<Simplex> {
        let n = self.0.len();
        (1u64..(1u64 << n))
            .map(|mask| {
                Simplex((0..n).filter(|i| mask & (1 << i) != 0).map(|i| self.0[i]).collect())
            })
            .collect()
    }

    /// Position of vertex `v` inside this simplex.
    pub fn position(&self, v: usize) -> Option<usize> {
        self.0.binary_search(&v).ok()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimplexId(pub usize);

/// The on-disk form of a complex: vertex names, (maximal) simplices and
/// optional edge lengths keyed `"a-b"` with `"p/q"` values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawComplex {
    pub vertices: Vec<String>,
    pub simplices: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lengths: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct Complex {
    names: Vec<String>,
    index: HashMap<String, usize>,
    simplices: Vec<Simplex>,
    ids: HashMap<Simplex, SimplexId>,
    faces: Vec<Vec<SimplexId>>,
    cofaces: Vec<Vec<SimplexId>>,
    lengths: Vec<Option<Rational>>,
}

impl PartialEq for Complex {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names && self.simplices == other.simplices && self.lengths == other.lengths
    }
}

impl Complex {
    /// Validates a raw description and closes it under faces.
    pub fn from_raw(raw: &RawComplex) -> Result<Complex, ComplexError> {
        let mut index = HashMap::new();
        for (i, name) in raw.vertices.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(ComplexError::DuplicateSimplex(vec![name.clone()]));
            }
        }
        let mut listed = BTreeSet::new();
        for (i, _) in raw.vertices.iter().enumerate() {
            listed.insert(Simplex::vertex(i));
        }
        for names in &raw.simplices {
            if names.is_empty() {
                return Err(ComplexError::EmptySimplex);
            }
            let mut verts = Vec::with_capacity(names.len());
            for n in names {
                match index.get(n) {
                    Some(&v) => verts.push(v),
                    None => {
                        return Err(ComplexError::MissingFace { simplex: names.clone(), vertex: n.clone() })
                    }
                }
            }
            let mut sorted = verts.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(ComplexError::RepeatedVertex(names.clone()));
            }
            let s = Simplex(sorted);
            // a listed 0-simplex just restates a declared vertex
            if s.len() > 1 && !listed.insert(s) {
                return Err(ComplexError::DuplicateSimplex(names.clone()));
            }
        }
        let mut complex = Complex::build(raw.vertices.clone(), listed, BTreeMap::new());
        for (key, value) in &raw.lengths {
            let edge = complex.parse_edge_key(key).ok_or_else(|| ComplexError::UnknownEdge(key.clone()))?;
            let length = parse_rational(value).ok_or_else(|| ComplexError::InvalidLength(value.clone()))?;
            if length <= Rational::zero() {
                return Err(ComplexError::NonpositiveLength { edge: key.clone(), length: value.clone() });
            }
            complex.lengths[edge.0] = Some(length);
        }
        Ok(complex)
    }

    /// Builds a face-closed complex from any generating set of simplices.
    /// Edges missing from `lengths` get length 1.
    pub(crate) fn build(
        names: Vec<String>,
        generators: impl IntoIterator<Item = Simplex>,
        lengths: BTreeMap<Simplex, Rational>,
    ) -> Complex {
        let mut all = BTreeSet::new();
        for v in 0..names.len() {
            all.insert(Simplex::vertex(v));
        }
        for s in generators {
            for f in s.all_faces() {
                all.insert(f);
            }
        }
        let simplices: Vec<Simplex> = all.into_iter().collect();
        let ids: HashMap<Simplex, SimplexId> =
            simplices.iter().enumerate().map(|(i, s)| (s.clone(), SimplexId(i))).collect();
        let mut faces = vec![Vec::new(); simplices.len()];
        let mut cofaces = vec![Vec::new(); simplices.len()];
        for (i, s) in simplices.iter().enumerate() {
            for f in s.all_faces() {
                let fid = ids[&f];
                faces[i].push(fid);
                cofaces[fid.0].push(SimplexId(i));
            }
        }
        for list in faces.iter_mut().chain(cofaces.iter_mut()) {
            list.sort_unstable();
        }
        let lengths = simplices
            .iter()
            .map(|s| (s.len() == 2).then(|| lengths.get(s).cloned().unwrap_or_else(Rational::one)))
            .collect();
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Complex { names, index, simplices, ids, faces, cofaces, lengths }
    }

    /// Serializes back to the raw form, listing maximal simplices only.
    pub fn to_raw(&self) -> RawComplex {
        let simplices = self
            .simplices
            .iter()
            .enumerate()
            .filter(|(i, s)| s.len() > 1 && self.cofaces[*i].len() == 1)
            .map(|(_, s)| self.simplex_names(s))
            .collect();
        let lengths = self
            .edges()
            .filter_map(|e| {
                let len = self.lengths[e.0].as_ref()?;
                (!len.is_one()).then(|| (self.edge_key(e), format_rational(len)))
            })
            .collect();
        RawComplex { vertices: self.names.clone(), simplices, lengths }
    }

    fn parse_edge_key(&self, key: &str) -> Option<SimplexId> {
        self.edge_by_key(key).map(|(id, _)| id)
    }

    /// Resolves an `"a-b"` key to an edge. The flag is true when the key
    /// names the endpoints in the opposite order to [`Complex::edge_key`].
    pub fn edge_by_key(&self, key: &str) -> Option<(SimplexId, bool)> {
        for (pos, _) in key.match_indices('-') {
            let (a, b) = (&key[..pos], &key[pos + 1..]);
            if let (Some(&va), Some(&vb)) = (self.index.get(a), self.index.get(b)) {
                if va != vb {
                    if let Some(&id) = self.ids.get(&Simplex::new(vec![va, vb])) {
                        return Some((id, va > vb));
                    }
                }
            }
        }
        None
    }

    pub fn edge_key(&self, edge: SimplexId) -> String {
        let s = &self.simplices[edge.0];
        s.0.iter().map(|&v| self.names[v].as_str()).collect::<Vec<_>>().join("-")
    }

    pub fn cell_label(&self, id: SimplexId) -> String {
        self.edge_key(id)
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn simplex(&self, id: SimplexId) -> &Simplex {
        &self.simplices[id.0]
    }

    pub fn simplex_names(&self, s: &Simplex) -> Vec<String> {
        s.0.iter().map(|&v| self.names[v].clone()).collect()
    }

    pub fn id_of(&self, s: &Simplex) -> Option<SimplexId> {
        self.ids.get(s).copied()
    }

    /// Looks up a simplex by vertex names, in any order.
    pub fn id_by_names<S: AsRef<str>>(&self, names: &[S]) -> Result<SimplexId, ComplexError> {
        let unknown = || ComplexError::UnknownSimplex(names.iter().map(|n| n.as_ref().to_string()).collect());
        let mut verts = Vec::with_capacity(names.len());
        for n in names {
            verts.push(self.vertex_index(n.as_ref()).ok_or_else(unknown)?);
        }
        verts.sort_unstable();
        verts.dedup();
        if verts.len() != names.len() {
            return Err(unknown());
        }
        self.ids.get(&Simplex(verts)).copied().ok_or_else(unknown)
    }

    pub fn vertex_id(&self, v: usize) -> SimplexId {
        self.ids[&Simplex::vertex(v)]
    }

    pub fn ids(&self) -> impl Iterator<Item = SimplexId> + '_ {
        (0..self.simplices.len()).map(SimplexId)
    }

    pub fn edges(&self) -> impl Iterator<Item = SimplexId> + '_ {
        self.ids().filter(|id| self.simplices[id.0].len() == 2)
    }

    pub fn vertex_cells(&self) -> impl Iterator<Item = SimplexId> + '_ {
        self.ids().filter(|id| self.simplices[id.0].len() == 1)
    }

    pub fn dim(&self) -> usize {
        self.simplices.iter().map(Simplex::dim).max().unwrap_or(0)
    }

    pub fn dim_of(&self, id: SimplexId) -> usize {
        self.simplices[id.0].dim()
    }

    /// Every face of `id`, including `id` itself.
    pub fn faces(&self, id: SimplexId) -> &[SimplexId] {
        &self.faces[id.0]
    }

    /// Every simplex having `id` as a face, including `id` itself.
    pub fn cofaces(&self, id: SimplexId) -> &[SimplexId] {
        &self.cofaces[id.0]
    }

    pub fn length(&self, edge: SimplexId) -> Option<&Rational> {
        self.lengths[edge.0].as_ref()
    }

    pub fn total_length(&self) -> Rational {
        self.lengths.iter().flatten().fold(Rational::zero(), |acc, l| acc + l)
    }

    /// Combinatorial open star: all simplices having `s` as a face.
    pub fn open_star(&self, s: &Simplex) -> Result<BTreeSet<SimplexId>, ComplexError> {
        let id = self
            .id_of(s)
            .ok_or_else(|| ComplexError::UnknownSimplex(s.0.iter().map(|&v| self.names.get(v).cloned().unwrap_or_default()).collect()))?;
        Ok(self.cofaces(id).iter().copied().collect())
    }

    /// The two endpoint vertices of an edge, in sorted order.
    pub fn endpoints(&self, edge: SimplexId) -> (usize, usize) {
        let s = &self.simplices[edge.0];
        assert_eq!(s.len(), 2, "not an edge");
        (s.0[0], s.0[1])
    }

    /// Connected components, as sorted lists of simplex ids, ordered by their first id.
    pub fn components(&self) -> Vec<Vec<SimplexId>> {
        let mut parent: Vec<usize> = (0..self.names.len()).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for e in self.edges().collect::<Vec<_>>() {
            let (a, b) = self.endpoints(e);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: BTreeMap<usize, Vec<SimplexId>> = BTreeMap::new();
        for id in self.ids() {
            let root = find(&mut parent, self.simplices[id.0].0[0]);
            groups.entry(root).or_default().push(id);
        }
        let mut comps: Vec<_> = groups.into_values().collect();
        comps.sort();
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    pub fn point(&self, carrier: SimplexId, coords: Vec<Rational>) -> Result<Point, ComplexError> {
        Point::new(self, carrier, coords)
    }

    pub fn vertex_point(&self, v: usize) -> Point {
        Point { carrier: self.vertex_id(v), coords: vec![Rational::one()] }
    }

    /// Point on an open edge at parameter `t` in (0, 1), measured from the
    /// lower-indexed endpoint.
    pub fn edge_point(&self, edge: SimplexId, t: Rational) -> Result<Point, ComplexError> {
        self.point(edge, vec![Rational::one() - &t, t])
    }

    /// Every vertex, then `per_edge` evenly spaced interior points of each
    /// edge (parameters `i / (per_edge + 1)`).
    pub fn sample_points(&self, per_edge: usize) -> Vec<Point> {
        let mut out: Vec<Point> = (0..self.vertex_count()).map(|v| self.vertex_point(v)).collect();
        let denom = per_edge as i64 + 1;
        for e in self.edges() {
            for i in 1..denom {
                out.push(Point { carrier: e, coords: vec![crate::scalar::rat(denom - i, denom), crate::scalar::rat(i, denom)] });
            }
        }
        out
    }
}

/// A point given by its carrier (the unique open simplex containing it) and
/// strictly positive barycentric coordinates summing to one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub carrier: SimplexId,
    pub coords: Vec<Rational>,
}

impl Point {
    pub fn new(complex: &Complex, carrier: SimplexId, coords: Vec<Rational>) -> Result<Point, ComplexError> {
        if carrier.0 >= complex.simplex_count() {
            return Err(ComplexError::InvalidPoint(format!("no simplex with id {}", carrier.0)));
        }
        let arity = complex.simplex(carrier).len();
        if coords.len() != arity {
            return Err(ComplexError::InvalidPoint(format!(
                "{} coordinates for a simplex with {} vertices",
                coords.len(),
                arity
            )));
        }
        if coords.iter().any(|c| *c <= Rational::zero()) {
            return Err(ComplexError::InvalidPoint("barycentric coordinates must be positive".into()));
        }
        let sum = coords.iter().fold(Rational::zero(), |a, c| a + c);
        if !sum.is_one() {
            return Err(ComplexError::InvalidPoint(format!("coordinates sum to {sum}, not 1")));
        }
        Ok(Point { carrier, coords })
    }

    /// For a point on an edge, the coordinate of the higher-indexed endpoint.
    pub fn edge_param(&self) -> Option<&Rational> {
        (self.coords.len() == 2).then(|| &self.coords[1])
    }

    pub fn is_vertex(&self) -> bool {
        self.coords.len() == 1
    }
}

/// An exact barycentric subdivision: fine vertex `i` is the barycenter of
/// coarse simplex `i`.
#[derive(Clone, Debug)]
pub struct SubdivisionMap {
    pub fine: Complex,
    pub coarse: Complex,
    /// Fine simplex id -> coarse carrier (the largest simplex of its chain).
    pub carrier_of: Vec<SimplexId>,
    /// Fine vertex index -> its location as a coarse point.
    pub vertex_location: Vec<Point>,
}

fn barycenter_name(coarse: &Complex, s: &Simplex) -> String {
    if s.len() == 1 {
        coarse.name(s.0[0]).to_string()
    } else {
        format!("[{}]", coarse.simplex_names(s).join(","))
    }
}

/// Standard barycentric subdivision. Edge lengths of the coarse 1-skeleton
/// are split at midpoints; fine edges interior to higher simplices get length 1.
pub fn barycentric_subdivide(coarse: &Complex) -> (Complex, SubdivisionMap) {
    let names: Vec<String> = coarse.simplices.iter().map(|s| barycenter_name(coarse, s)).collect();

    // chains sigma_0 < sigma_1 < ... as sets of coarse ids
    let mut chains: Vec<Vec<usize>> = Vec::new();
    fn extend(coarse: &Complex, chain: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(chain.clone());
        let last = *chain.last().unwrap();
        for &c in coarse.cofaces(SimplexId(last)) {
            if c.0 != last {
                chain.push(c.0);
                extend(coarse, chain, out);
                chain.pop();
            }
        }
    }
    for id in coarse.ids() {
        extend(coarse, &mut vec![id.0], &mut chains);
    }

    let mut lengths = BTreeMap::new();
    for id in coarse.ids() {
        let s = coarse.simplex(id);
        if s.len() == 2 {
            let half = coarse.length(id).cloned().unwrap_or_else(Rational::one) / int(2);
            for &v in s.vertices() {
                let vid = coarse.vertex_id(v);
                lengths.insert(Simplex::new(vec![vid.0, id.0]), half.clone());
            }
        }
    }

    let fine = Complex::build(names, chains.iter().map(|c| Simplex::new(c.clone())), lengths);
    let carrier_of = fine
        .simplices
        .iter()
        .map(|s| {
            // the largest coarse simplex of a chain has the most vertices
            *s.0.iter()
                .map(|&v| SimplexId(v))
                .collect::<Vec<_>>()
                .iter()
                .max_by_key(|id| coarse.simplex(**id).len())
                .unwrap()
        })
        .collect();
    let vertex_location = coarse
        .ids()
        .map(|id| {
            let k = coarse.simplex(id).len();
            Point { carrier: id, coords: vec![Rational::new(1.into(), (k as i64).into()); k] }
        })
        .collect();
    let map = SubdivisionMap { fine: fine.clone(), coarse: coarse.clone(), carrier_of, vertex_location };
    (fine, map)
}

impl SubdivisionMap {
    /// Transfers a point of the fine complex to the coarse complex.
    pub fn to_coarse(&self, p: &Point) -> Point {
        let carrier = self.carrier_of[p.carrier.0];
        let target = self.coarse.simplex(carrier);
        let mut coords = vec![Rational::zero(); target.len()];
        for (&fv, c) in self.fine.simplex(p.carrier).vertices().iter().zip(&p.coords) {
            let loc = &self.vertex_location[fv];
            for (&cv, lc) in self.coarse.simplex(loc.carrier).vertices().iter().zip(&loc.coords) {
                let pos = target.position(cv).expect("chain lies in its carrier");
                coords[pos] += c * lc;
            }
        }
        Point { carrier, coords }
    }

    /// Locates a coarse point in the fine complex.
    pub fn to_fine(&self, p: &Point) -> Point {
        let simplex = self.coarse.simplex(p.carrier);
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        // descending coordinate; ties by vertex index keep the result canonical
        order.sort_by(|&i, &j| p.coords[j].cmp(&p.coords[i]).then(i.cmp(&j)));
        let mut fine_vertices = Vec::new();
        let mut weights = Vec::new();
        for k in 0..order.len() {
            let next = order.get(k + 1).map(|&i| p.coords[i].clone()).unwrap_or_else(Rational::zero);
            let c = (&p.coords[order[k]] - next) * int(k as i64 + 1);
            if c > Rational::zero() {
                let prefix = Simplex::new(order[..=k].iter().map(|&i| simplex.0[i]).collect());
                fine_vertices.push(self.coarse.id_of(&prefix).expect("face exists").0);
                weights.push(c);
            }
        }
        let mut pairs: Vec<(usize, Rational)> = fine_vertices.into_iter().zip(weights).collect();
        pairs.sort_by_key(|(v, _)| *v);
        let carrier = self
            .fine
            .id_of(&Simplex::new(pairs.iter().map(|(v, _)| *v).collect()))
            .expect("chain is a fine simplex");
        Point { carrier, coords: pairs.into_iter().map(|(_, c)| c).collect() }
    }
}
