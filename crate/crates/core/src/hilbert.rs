//! Functions on 1-dimensional complexes: PL functions, exact piecewise
//! polynomials, the module action, the `C(X)`-valued inner product,
//! continuity checks and exact sup-norms.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{barycentric_subdivide, Complex, Point, SimplexId};
use crate::covermap::SimplicialSurjection;
use crate::poly::{critical_points, eval_real, eval_real_at_surd, strictly_inside, Poly, Surd};
use crate::scalar::{abs_sq, format_rational, int, parse_rational, real, scalar_one, scalar_to_f64, scalar_zero, to_f64, Rational, Scalar};
use crate::weights::WeightFunction;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HilbertError {
    #[error("function evaluation needs a complex of dimension at most 1 (got {0})")]
    NotOneDimensional(usize),
    #[error("value list has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("subdivision vertex '{0}' is missing a value")]
    MissingValue(String),
    #[error("'{0}' is not a vertex of the subdivided complex")]
    UnknownVertex(String),
    #[error("invalid number '{0}'")]
    InvalidNumber(String),
    #[error("function is not real-valued")]
    NotReal,
    #[error("polynomial piece has degree {0}, above 3")]
    DegreeTooHigh(usize),
    #[error("subdivision level {0} is too deep")]
    LevelTooDeep(u32),
}

pub const MAX_LEVEL: u32 = 12;

pub(crate) fn require_one_dimensional(c: &Complex) -> Result<(), HilbertError> {
    match c.dim() {
        0 | 1 => Ok(()),
        d => Err(HilbertError::NotOneDimensional(d)),
    }
}

/// Value of a coarse point's own edge parameter, or `None` at a vertex.
fn edge_param(p: &Point) -> Option<&Rational> {
    p.edge_param()
}

/// A continuous function, linear on every edge of the `level`-fold subdivision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlFunction {
    level: u32,
    vertex: Vec<Scalar>,
    /// Values at the interior grid points `j / 2^level`, per edge.
    interior: BTreeMap<SimplexId, Vec<Scalar>>,
}

impl PlFunction {
    /// Level-0 function given by its vertex values.
    pub fn from_vertices(complex: &Complex, values: Vec<Scalar>) -> Result<Self, HilbertError> {
        require_one_dimensional(complex)?;
        if values.len() != complex.vertex_count() {
            return Err(HilbertError::WrongLength { expected: complex.vertex_count(), got: values.len() });
        }
        let interior = complex.edges().map(|e| (e, Vec::new())).collect();
        Ok(PlFunction { level: 0, vertex: values, interior })
    }

    /// Samples `f` at every grid point of the `level`-fold subdivision.
    pub fn from_fn(complex: &Complex, level: u32, mut f: impl FnMut(&Point) -> Scalar) -> Result<Self, HilbertError> {
        require_one_dimensional(complex)?;
        if level > MAX_LEVEL {
            return Err(HilbertError::LevelTooDeep(level));
        }
        let vertex = (0..complex.vertex_count()).map(|v| f(&complex.vertex_point(v))).collect();
        let n = 1i64 << level;
        let interior = complex
            .edges()
            .map(|e| {
                let vals = (1..n)
                    .map(|j| f(&complex.edge_point(e, Rational::new(j.into(), n.into())).expect("interior grid point")))
                    .collect();
                (e, vals)
            })
            .collect();
        Ok(PlFunction { level, vertex, interior })
    }

    pub fn constant(complex: &Complex, c: Scalar) -> Result<Self, HilbertError> {
        Self::from_vertices(complex, vec![c; complex.vertex_count()])
    }

    /// Level-0 hat: 1 at vertex `v`, 0 at every other vertex.
    pub fn hat(complex: &Complex, v: usize) -> Result<Self, HilbertError> {
        let mut vals = vec![scalar_zero(); complex.vertex_count()];
        vals[v] = scalar_one();
        Self::from_vertices(complex, vals)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertex_value(&self, v: usize) -> &Scalar {
        &self.vertex[v]
    }

    /// Grid values along an edge, from its lower endpoint to its upper one.
    pub fn edge_grid(&self, complex: &Complex, e: SimplexId) -> Vec<Scalar> {
        let (a, b) = complex.endpoints(e);
        let mut g = Vec::with_capacity(self.interior[&e].len() + 2);
        g.push(self.vertex[a].clone());
        g.extend(self.interior[&e].iter().cloned());
        g.push(self.vertex[b].clone());
        g
    }

    pub fn eval(&self, complex: &Complex, p: &Point) -> Scalar {
        match edge_param(p) {
            None => self.vertex[complex.simplex(p.carrier).vertices()[0]].clone(),
            Some(t) => {
                let grid = self.edge_grid(complex, p.carrier);
                let n = Rational::from_integer((1i64 << self.level).into());
                let scaled = t * &n;
                let j = scaled.floor();
                let frac = &scaled - &j;
                let j: usize = j.to_integer().try_into().expect("grid index");
                if frac.is_zero() {
                    return grid[j].clone();
                }
                &grid[j] + (&grid[j + 1] - &grid[j]) * real(frac)
            }
        }
    }

    /// `sup |f|^2`, attained at a grid point since `|f|^2` is convex on each segment.
    pub fn sup_norm_sq(&self) -> Rational {
        self.vertex
            .iter()
            .chain(self.interior.values().flatten())
            .map(abs_sq)
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn map_values(&self, f: impl Fn(&Scalar) -> Scalar) -> PlFunction {
        PlFunction {
            level: self.level,
            vertex: self.vertex.iter().map(&f).collect(),
            interior: self.interior.iter().map(|(e, v)| (*e, v.iter().map(&f).collect())).collect(),
        }
    }

    pub fn conj(&self) -> PlFunction {
        self.map_values(|z| z.conj())
    }

    pub fn to_piecewise(&self, complex: &Complex) -> PiecewiseFunction {
        let n = 1i64 << self.level;
        let nr = int(n);
        let mut cells = cells_template(complex);
        for (v, val) in self.vertex.iter().enumerate() {
            cells[complex.vertex_id(v).0] = Cell::Vertex(val.clone());
        }
        for e in complex.edges() {
            let grid = self.edge_grid(complex, e);
            let pieces = (0..n as usize)
                .map(|j| {
                    let slope = (&grid[j + 1] - &grid[j]) * real(nr.clone());
                    let c0 = &grid[j] - &slope * real(Rational::new((j as i64).into(), n.into()));
                    Piece { start: Rational::new((j as i64).into(), n.into()), end: Rational::new((j as i64 + 1).into(), n.into()), poly: Poly::linear(c0, slope) }
                })
                .collect();
            cells[e.0] = Cell::Edge(merge_equal(pieces));
        }
        PiecewiseFunction { cells }
    }

    pub fn to_json(&self, complex: &Complex) -> PlJson {
        let (fine, locations) = grid_locations(complex, self.level);
        let values = (0..fine.vertex_count())
            .map(|v| (fine.name(v).to_string(), ScalarJson::from(&self.eval(complex, &locations[v]))))
            .collect();
        PlJson { subdivision_level: self.level, values }
    }

    pub fn from_json(complex: &Complex, json: &PlJson) -> Result<Self, HilbertError> {
        require_one_dimensional(complex)?;
        if json.subdivision_level > MAX_LEVEL {
            return Err(HilbertError::LevelTooDeep(json.subdivision_level));
        }
        let (fine, locations) = grid_locations(complex, json.subdivision_level);
        if let Some(name) = json.values.keys().find(|k| fine.vertex_index(k).is_none()) {
            return Err(HilbertError::UnknownVertex(name.clone()));
        }
        let mut by_location = BTreeMap::new();
        for (v, loc) in locations.iter().enumerate() {
            let raw = json.values.get(fine.name(v)).ok_or_else(|| HilbertError::MissingValue(fine.name(v).to_string()))?;
            by_location.insert(loc.clone(), raw.to_scalar()?);
        }
        Self::from_fn(complex, json.subdivision_level, |p| by_location[p].clone())
    }
}

/// The `level`-fold subdivision and each fine vertex's location in `complex`.
pub fn grid_locations(complex: &Complex, level: u32) -> (Complex, Vec<Point>) {
    let mut fine = complex.clone();
    let mut locations: Vec<Point> = (0..complex.vertex_count()).map(|v| complex.vertex_point(v)).collect();
    for _ in 0..level {
        let (next, sub) = barycentric_subdivide(&fine);
        locations = sub
            .vertex_location
            .iter()
            .map(|loc| {
                // a fine vertex sits at the barycenter of a simplex of the previous level
                let verts = fine.simplex(loc.carrier).vertices();
                let pts: Vec<&Point> = verts.iter().map(|&v| &locations[v]).collect();
                barycenter_of(complex, &pts)
            })
            .collect();
        fine = next;
    }
    (fine, locations)
}

fn barycenter_of(complex: &Complex, pts: &[&Point]) -> Point {
    if pts.len() == 1 {
        return pts[0].clone();
    }
    // two adjacent grid points of one coarse edge
    let (p, q) = (pts[0], pts[1]);
    let edge = if p.is_vertex() { q.carrier } else { p.carrier };
    if p.is_vertex() && q.is_vertex() {
        let a = complex.simplex(p.carrier).vertices()[0];
        let b = complex.simplex(q.carrier).vertices()[0];
        let e = complex.id_of(&crate::complex::Simplex::new(vec![a, b])).expect("edge of the complex");
        return complex.edge_point(e, Rational::new(1.into(), 2.into())).unwrap();
    }
    let param = |x: &Point| -> Rational {
        match x.edge_param() {
            Some(t) => t.clone(),
            None => {
                let v = complex.simplex(x.carrier).vertices()[0];
                let (a, _) = complex.endpoints(edge);
                if v == a {
                    Rational::zero()
                } else {
                    Rational::one()
                }
            }
        }
    };
    let t = (param(p) + param(q)) / int(2);
    complex.edge_point(edge, t).unwrap()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalarJson(pub [String; 2]);

impl From<&Scalar> for ScalarJson {
    fn from(z: &Scalar) -> Self {
        ScalarJson([format_rational(&z.re), format_rational(&z.im)])
    }
}

impl ScalarJson {
    pub fn to_scalar(&self) -> Result<Scalar, HilbertError> {
        let p = |s: &String| parse_rational(s).ok_or_else(|| HilbertError::InvalidNumber(s.clone()));
        Ok(Scalar::new(p(&self.0[0])?, p(&self.0[1])?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlJson {
    pub subdivision_level: u32,
    pub values: BTreeMap<String, ScalarJson>,
}

/// A polynomial on the closed parameter interval `[start, end]` of an edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub start: Rational,
    pub end: Rational,
    pub poly: Poly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cell {
    Vertex(Scalar),
    /// Pieces covering `[0, 1]` in order, in the edge's own parameter.
    Edge(Vec<Piece>),
    Higher,
}

fn cells_template(complex: &Complex) -> Vec<Cell> {
    complex
        .ids()
        .map(|id| match complex.dim_of(id) {
            0 => Cell::Vertex(scalar_zero()),
            1 => Cell::Edge(vec![Piece { start: Rational::zero(), end: Rational::one(), poly: Poly::zero() }]),
            _ => Cell::Higher,
        })
        .collect()
}

fn merge_equal(pieces: Vec<Piece>) -> Vec<Piece> {
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match out.last_mut() {
            Some(last) if last.poly == p.poly => last.end = p.end,
            _ => out.push(p),
        }
    }
    out
}

fn reflect_pieces(pieces: &[Piece]) -> Vec<Piece> {
    pieces
        .iter()
        .rev()
        .map(|p| Piece { start: Rational::one() - &p.end, end: Rational::one() - &p.start, poly: p.poly.reflect() })
        .collect()
}

fn piece_at<'a>(pieces: &'a [Piece], start: &Rational, end: &Rational) -> &'a Poly {
    &pieces.iter().find(|p| &p.start <= start && end <= &p.end).expect("pieces cover [0, 1]").poly
}

fn combine(a: &[Piece], b: &[Piece], op: impl Fn(&Poly, &Poly) -> Poly) -> Vec<Piece> {
    let mut cuts: Vec<Rational> = a.iter().chain(b).flat_map(|p| [p.start.clone(), p.end.clone()]).collect();
    cuts.sort();
    cuts.dedup();
    let pieces = cuts
        .windows(2)
        .map(|w| Piece { start: w[0].clone(), end: w[1].clone(), poly: op(piece_at(a, &w[0], &w[1]), piece_at(b, &w[0], &w[1])) })
        .collect();
    merge_equal(pieces)
}

/// Exact piecewise-polynomial function on a 1-complex: one scalar per vertex
/// and polynomial pieces per edge. Vertex values need not match the one-sided
/// limits, which is how jumps are represented.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseFunction {
    cells: Vec<Cell>,
}

impl PiecewiseFunction {
    pub fn constant(complex: &Complex, c: Scalar) -> Self {
        let cells = complex
            .ids()
            .map(|id| match complex.dim_of(id) {
                0 => Cell::Vertex(c.clone()),
                1 => Cell::Edge(vec![Piece { start: Rational::zero(), end: Rational::one(), poly: Poly::constant(c.clone()) }]),
                _ => Cell::Higher,
            })
            .collect();
        PiecewiseFunction { cells }
    }

    pub fn from_cells(cells: Vec<Cell>) -> Self {
        PiecewiseFunction { cells }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: SimplexId) -> &Cell {
        &self.cells[id.0]
    }

    pub fn pieces(&self, edge: SimplexId) -> &[Piece] {
        match &self.cells[edge.0] {
            Cell::Edge(p) => p,
            _ => panic!("cell {} is not an edge", edge.0),
        }
    }

    pub fn vertex_value(&self, id: SimplexId) -> &Scalar {
        match &self.cells[id.0] {
            Cell::Vertex(v) => v,
            _ => panic!("cell {} is not a vertex", id.0),
        }
    }

    /// Value at a point. At an interior breakpoint the left piece is used.
    pub fn eval(&self, p: &Point) -> Scalar {
        match &self.cells[p.carrier.0] {
            Cell::Vertex(v) => v.clone(),
            Cell::Edge(pieces) => {
                let t = edge_param(p).expect("edge point");
                pieces.iter().find(|pc| t <= &pc.end).expect("pieces cover [0, 1]").poly.eval(t)
            }
            Cell::Higher => panic!("evaluation on a cell of dimension above 1"),
        }
    }

    /// One-sided limit along `edge` at its lower (`at_end = false`) or upper endpoint.
    pub fn limit(&self, edge: SimplexId, at_end: bool) -> Scalar {
        let pieces = self.pieces(edge);
        if at_end {
            pieces.last().unwrap().poly.eval(&Rational::one())
        } else {
            pieces[0].poly.eval(&Rational::zero())
        }
    }

    fn zip_with(&self, other: &Self, vop: impl Fn(&Scalar, &Scalar) -> Scalar, pop: impl Fn(&Poly, &Poly) -> Poly) -> Self {
        let cells = self
            .cells
            .iter()
            .zip(&other.cells)
            .map(|(a, b)| match (a, b) {
                (Cell::Vertex(x), Cell::Vertex(y)) => Cell::Vertex(vop(x, y)),
                (Cell::Edge(x), Cell::Edge(y)) => Cell::Edge(combine(x, y, &pop)),
                _ => Cell::Higher,
            })
            .collect();
        PiecewiseFunction { cells }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b, |a, b| a.mul(b))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b, |a, b| a.sub(b))
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.map(|z| z * c, |p| p.scale(c))
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj(), Poly::conj)
    }

    fn map(&self, vf: impl Fn(&Scalar) -> Scalar, pf: impl Fn(&Poly) -> Poly) -> Self {
        let cells = self
            .cells
            .iter()
            .map(|c| match c {
                Cell::Vertex(v) => Cell::Vertex(vf(v)),
                Cell::Edge(ps) => Cell::Edge(merge_equal(
                    ps.iter().map(|p| Piece { start: p.start.clone(), end: p.end.clone(), poly: pf(&p.poly) }).collect(),
                )),
                Cell::Higher => Cell::Higher,
            })
            .collect();
        PiecewiseFunction { cells }
    }

    pub fn max_degree(&self) -> usize {
        self.cells
            .iter()
            .filter_map(|c| match c {
                Cell::Edge(ps) => ps.iter().map(|p| p.poly.degree()).max(),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn is_real(&self) -> bool {
        self.cells.iter().all(|c| match c {
            Cell::Vertex(v) => v.im.is_zero(),
            Cell::Edge(ps) => ps.iter().all(|p| p.poly.is_real()),
            Cell::Higher => true,
        })
    }

    /// Checks every vertex value against the one-sided limits of its incident
    /// edges and every interior junction between consecutive pieces.
    pub fn check_continuity(&self, complex: &Complex) -> ContinuityReport {
        for e in complex.edges() {
            let (a, b) = complex.endpoints(e);
            for (v, at_end) in [(a, false), (b, true)] {
                let value = self.vertex_value(complex.vertex_id(v));
                let lim = self.limit(e, at_end);
                if &lim != value {
                    return ContinuityReport::broken(Discontinuity {
                        vertex: Some(complex.name(v).to_string()),
                        edge: complex.edge_key(e),
                        param: if at_end { Rational::one() } else { Rational::zero() },
                        limit: lim.clone(),
                        value: value.clone(),
                        gap: scalar_to_f64(&(lim - value)).norm(),
                    });
                }
            }
            let pieces = self.pieces(e);
            for w in pieces.windows(2) {
                let left = w[0].poly.eval(&w[0].end);
                let right = w[1].poly.eval(&w[1].start);
                if left != right {
                    return ContinuityReport::broken(Discontinuity {
                        vertex: None,
                        edge: complex.edge_key(e),
                        param: w[0].end.clone(),
                        gap: scalar_to_f64(&(&left - &right)).norm(),
                        limit: left,
                        value: right,
                    });
                }
            }
        }
        ContinuityReport { continuous: true, witness: None }
    }

    /// Every candidate location of an extremum of a real function: vertex
    /// values, piece endpoints (as limits) and interior critical points.
    pub fn extremum_candidates(&self, complex: &Complex) -> Result<Vec<Candidate>, HilbertError> {
        if !self.is_real() {
            return Err(HilbertError::NotReal);
        }
        let mut out = Vec::new();
        for id in complex.ids() {
            match &self.cells[id.0] {
                Cell::Vertex(v) => out.push(Candidate { cell: id, param: None, value: Surd::rational(v.re.clone()) }),
                Cell::Edge(pieces) => {
                    for p in pieces {
                        if p.poly.degree() > 3 {
                            return Err(HilbertError::DegreeTooHigh(p.poly.degree()));
                        }
                        let coeffs = p.poly.real_coeffs();
                        for t in [&p.start, &p.end] {
                            out.push(Candidate { cell: id, param: Some(Surd::rational(t.clone())), value: Surd::rational(eval_real(&coeffs, t)) });
                        }
                        for t in critical_points(&coeffs) {
                            if strictly_inside(&t, &p.start, &p.end) {
                                let value = eval_real_at_surd(&coeffs, &t);
                                out.push(Candidate { cell: id, param: Some(t), value });
                            }
                        }
                    }
                }
                Cell::Higher => {}
            }
        }
        Ok(out)
    }

    /// `sup |h|` over the closed pieces of a real function of degree at most 3.
    pub fn sup_norm(&self, complex: &Complex) -> Result<SupNorm, HilbertError> {
        let candidates = self.extremum_candidates(complex)?;
        let best = candidates
            .into_iter()
            .map(|c| Candidate { value: c.value.abs(), ..c })
            .max_by(|a, b| a.value.to_f64().partial_cmp(&b.value.to_f64()).unwrap_or(Ordering::Equal))
            .expect("a complex has at least one cell");
        Ok(SupNorm {
            value: best.value.to_f64(),
            label: complex.cell_label(best.cell),
            param: best.param.as_ref().map(Surd::to_f64),
            exact: best.value,
            cell: best.cell,
        })
    }

    /// `h <= r` everywhere (including one-sided limits).
    pub fn bounded_above_by(&self, complex: &Complex, r: &Rational) -> Result<bool, HilbertError> {
        Ok(self.extremum_candidates(complex)?.iter().all(|c| c.value.cmp_rational(r) != Ordering::Greater))
    }

    /// `h >= r` everywhere (including one-sided limits).
    pub fn bounded_below_by(&self, complex: &Complex, r: &Rational) -> Result<bool, HilbertError> {
        Ok(self.extremum_candidates(complex)?.iter().all(|c| c.value.cmp_rational(r) != Ordering::Less))
    }

    /// `sup |h| >= r`, exactly.
    pub fn sup_at_least(&self, complex: &Complex, r: &Rational) -> Result<bool, HilbertError> {
        Ok(self.extremum_candidates(complex)?.iter().any(|c| c.value.abs().cmp_rational(r) != Ordering::Less))
    }

    pub fn to_json(&self, complex: &Complex) -> PiecewiseJson {
        let mut vertices = BTreeMap::new();
        let mut edges = BTreeMap::new();
        for id in complex.ids() {
            match &self.cells[id.0] {
                Cell::Vertex(v) => {
                    vertices.insert(complex.cell_label(id), ScalarJson::from(v));
                }
                Cell::Edge(ps) => {
                    let pieces = ps
                        .iter()
                        .map(|p| PieceJson {
                            start: format_rational(&p.start),
                            end: format_rational(&p.end),
                            coefficients: p.poly.coeffs().iter().map(ScalarJson::from).collect(),
                        })
                        .collect();
                    edges.insert(complex.edge_key(id), pieces);
                }
                Cell::Higher => {}
            }
        }
        PiecewiseJson { vertices, edges }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceJson {
    pub start: String,
    pub end: String,
    pub coefficients: Vec<ScalarJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PiecewiseJson {
    pub vertices: BTreeMap<String, ScalarJson>,
    pub edges: BTreeMap<String, Vec<PieceJson>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub cell: SimplexId,
    pub param: Option<Surd>,
    pub value: Surd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupNorm {
    pub value: f64,
    pub exact: Surd,
    pub cell: SimplexId,
    pub label: String,
    /// Edge parameter of the maximizer, if it lies on an edge.
    pub param: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Discontinuity {
    pub vertex: Option<String>,
    pub edge: String,
    pub param: Rational,
    pub limit: Scalar,
    pub value: Scalar,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuityReport {
    pub continuous: bool,
    pub witness: Option<Discontinuity>,
}

impl ContinuityReport {
    fn broken(d: Discontinuity) -> Self {
        ContinuityReport { continuous: false, witness: Some(d) }
    }
}

/// `h ∘ p` for a function `h` on the target.
pub fn pullback(map: &SimplicialSurjection, h: &PiecewiseFunction) -> PiecewiseFunction {
    let y = map.source();
    let cells = y
        .ids()
        .map(|id| match y.dim_of(id) {
            0 => Cell::Vertex(h.vertex_value(map.image(id)).clone()),
            1 => {
                let pieces = h.pieces(map.image(id));
                Cell::Edge(if map.preserves_orientation(id) { pieces.to_vec() } else { reflect_pieces(pieces) })
            }
            _ => Cell::Higher,
        })
        .collect();
    PiecewiseFunction { cells }
}

/// `x ↦ Σ_{p(y) = x} h(y)` for a function `h` on the source.
pub fn fiber_sum(map: &SimplicialSurjection, h: &PiecewiseFunction) -> PiecewiseFunction {
    let x = map.target();
    let cells = x
        .ids()
        .map(|id| match x.dim_of(id) {
            0 => Cell::Vertex(map.over(id).iter().fold(scalar_zero(), |acc, &v| acc + h.vertex_value(v))),
            1 => {
                let mut total = vec![Piece { start: Rational::zero(), end: Rational::one(), poly: Poly::zero() }];
                for &eps in map.over(id) {
                    let pieces = h.pieces(eps);
                    let oriented = if map.preserves_orientation(eps) { pieces.to_vec() } else { reflect_pieces(pieces) };
                    total = combine(&total, &oriented, |a, b| a.add(b));
                }
                Cell::Edge(total)
            }
            _ => Cell::Higher,
        })
        .collect();
    PiecewiseFunction { cells }
}

/// The right action `(f ξ)(y) = f(y) ξ(p(y))`, kept exact as a piecewise product.
pub fn module_action(map: &SimplicialSurjection, f: &PlFunction, xi: &PlFunction) -> PiecewiseFunction {
    f.to_piecewise(map.source()).mul(&pullback(map, &xi.to_piecewise(map.target())))
}

/// `⟨f, g⟩(x) = Σ_{p(y)=x} μ(y) conj(f(y)) g(y)`.
pub fn inner_product(map: &SimplicialSurjection, mu: &WeightFunction, f: &PlFunction, g: &PlFunction) -> PiecewiseFunction {
    let y = map.source();
    inner_product_pw(map, mu, &f.to_piecewise(y), &g.to_piecewise(y))
}

pub fn inner_product_pw(map: &SimplicialSurjection, mu: &WeightFunction, f: &PiecewiseFunction, g: &PiecewiseFunction) -> PiecewiseFunction {
    let weighted = mu.to_piecewise(map.source()).mul(&f.conj()).mul(g);
    fiber_sum(map, &weighted)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormRatio {
    /// `sup ⟨f,f⟩`
    pub inner_sup: f64,
    /// `sup |f|^2`
    pub norm_sq: f64,
    pub ratio: f64,
    pub upper_holds: bool,
    /// `sup ⟨f,f⟩ >= ‖f‖^2 / N`
    pub lower_holds: bool,
    /// `sup ⟨f,f⟩ >= ‖f‖^2 / K_min`
    pub lower_holds_k: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormEquivalenceReport {
    pub max_fibers: usize,
    pub k_min: Rational,
    pub ratios: Vec<NormRatio>,
    pub worst_lower: f64,
    pub worst_upper: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
    pub lower_holds_k: bool,
}

/// Checks `‖f‖²/N <= ‖⟨f,f⟩‖ <= ‖f‖²` (and the weaker `1/K_min` lower bound)
/// for each test function. Functions vanishing identically are skipped.
pub fn check_norm_equivalence(
    map: &SimplicialSurjection,
    mu: &WeightFunction,
    test_functions: &[PlFunction],
) -> Result<NormEquivalenceReport, HilbertError> {
    let x = map.target();
    let n = map.stratify().max_fibers;
    let k_min = mu.min_value().recip();
    let mut ratios = Vec::new();
    for f in test_functions {
        let norm_sq = f.sup_norm_sq();
        if norm_sq.is_zero() {
            continue;
        }
        let h = inner_product(map, mu, f, f);
        let sup = h.sup_norm(x)?;
        let upper_holds = h.bounded_above_by(x, &norm_sq)?;
        let lower_holds = h.sup_at_least(x, &(&norm_sq / int(n as i64)))?;
        let lower_holds_k = h.sup_at_least(x, &(&norm_sq / &k_min))?;
        let norm_sq_f = to_f64(&norm_sq);
        ratios.push(NormRatio { inner_sup: sup.value, norm_sq: norm_sq_f, ratio: sup.value / norm_sq_f, upper_holds, lower_holds, lower_holds_k });
    }
    let worst_lower = ratios.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let worst_upper = ratios.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    Ok(NormEquivalenceReport {
        max_fibers: n,
        k_min,
        upper_holds: ratios.iter().all(|r| r.upper_holds),
        lower_holds: ratios.iter().all(|r| r.lower_holds),
        lower_holds_k: ratios.iter().all(|r| r.lower_holds_k),
        ratios,
        worst_lower,
        worst_upper,
    })
}

/// Level-0 functions spanning the PL functions on the source: the vertex hats
/// and the constant 1.
pub fn spanning_family(y: &Complex) -> Result<Vec<PlFunction>, HilbertError> {
    let mut out = vec![PlFunction::constant(y, scalar_one())?];
    for v in 0..y.vertex_count() {
        out.push(PlFunction::hat(y, v)?);
    }
    Ok(out)
}
