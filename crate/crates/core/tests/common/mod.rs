#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use branchcov::complex::{Complex, RawComplex};
use branchcov::covermap::RawMap;
use branchcov::hilbert::PlFunction;
use branchcov::scalar::{cplx, rat, Rational};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const LENGTHS: [&str; 4] = ["1", "1/2", "1/3", "1/4"];

/// A connected graph on `n` vertices: a random spanning tree plus a few extra edges.
fn random_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> Vec<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.insert((u, v));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.insert((a.min(b), a.max(b)));
        }
    }
    edges.into_iter().collect()
}

fn raw_complex(names: &[String], edges: &[(usize, usize)], lengths: &[String]) -> RawComplex {
    RawComplex {
        vertices: names.to_vec(),
        simplices: edges.iter().map(|&(a, b)| vec![names[a].clone(), names[b].clone()]).collect(),
        lengths: edges.iter().zip(lengths).map(|(&(a, b), l)| (format!("{}-{}", names[a], names[b]), l.clone())).collect(),
    }
}

/// A random open simplicial surjection of graphs: every vertex of `Y` sees a
/// lift of every edge at its image, so the map is a branched covering.
/// Built by gluing, over each target edge, a bipartite relation between the
/// two fibers that touches every fiber point.
pub fn random_branched(rng: &mut ChaCha8Rng) -> RawMap {
    let n = rng.gen_range(2..=5);
    let extra = rng.gen_range(0..=2);
    let x_edges = random_graph(rng, n, extra);
    let x_names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let x_lengths: Vec<String> = x_edges.iter().map(|_| LENGTHS.choose(rng).unwrap().to_string()).collect();
    let fiber: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=3)).collect();
    let mut y_names = Vec::new();
    let mut y_index = BTreeMap::new();
    let mut vertex_map = BTreeMap::new();
    for v in 0..n {
        for i in 0..fiber[v] {
            let name = format!("y{v}_{i}");
            y_index.insert((v, i), y_names.len());
            vertex_map.insert(name.clone(), x_names[v].clone());
            y_names.push(name);
        }
    }
    let mut y_edges = BTreeSet::new();
    let mut y_lengths = BTreeMap::new();
    for (e, &(a, b)) in x_edges.iter().enumerate() {
        let (ka, kb) = (fiber[a], fiber[b]);
        let mut pairs = BTreeSet::new();
        let mut left: Vec<usize> = (0..ka).collect();
        let mut right: Vec<usize> = (0..kb).collect();
        left.shuffle(rng);
        right.shuffle(rng);
        for i in 0..ka.max(kb) {
            pairs.insert((left[i % ka], right[i % kb]));
        }
        for i in 0..ka {
            for j in 0..kb {
                if rng.gen_bool(0.15) {
                    pairs.insert((i, j));
                }
            }
        }
        for (i, j) in pairs {
            let (p, q) = (y_index[&(a, i)], y_index[&(b, j)]);
            let edge = (p.min(q), p.max(q));
            y_edges.insert(edge);
            y_lengths.insert(edge, x_lengths[e].clone());
        }
    }
    let y_edges: Vec<(usize, usize)> = y_edges.into_iter().collect();
    let y_len: Vec<String> = y_edges.iter().map(|e| y_lengths[e].clone()).collect();
    RawMap {
        source: raw_complex(&y_names, &y_edges, &y_len),
        target: raw_complex(&x_names, &x_edges, &x_lengths),
        vertex_map,
    }
}

/// A random nondegenerate simplicial surjection of graphs, open or not.
pub fn random_map(rng: &mut ChaCha8Rng) -> RawMap {
    let n = rng.gen_range(2..=5);
    let extra = rng.gen_range(0..=2);
    let x_edges = random_graph(rng, n, extra);
    let x_names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let x_lengths: Vec<String> = x_edges.iter().map(|_| LENGTHS.choose(rng).unwrap().to_string()).collect();
    let mut y_names = Vec::new();
    let mut image = Vec::new();
    let mut vertex_map = BTreeMap::new();
    let mut add_vertex = |v: usize, y_names: &mut Vec<String>, image: &mut Vec<usize>| {
        let name = format!("y{}", y_names.len());
        vertex_map.insert(name.clone(), x_names[v].clone());
        y_names.push(name);
        image.push(v);
        y_names.len() - 1
    };
    let mut y_edges = BTreeSet::new();
    let mut y_len = BTreeMap::new();
    for (e, &(a, b)) in x_edges.iter().enumerate() {
        // reuse an existing preimage or create one
        let pick = |v: usize, rng: &mut ChaCha8Rng, image: &Vec<usize>| -> Option<usize> {
            let existing: Vec<usize> = (0..image.len()).filter(|&i| image[i] == v).collect();
            if existing.is_empty() || rng.gen_bool(0.3) {
                None
            } else {
                Some(*existing.choose(rng).unwrap())
            }
        };
        for _ in 0..rng.gen_range(1..=2) {
            let p = match pick(a, rng, &image) {
                Some(p) => p,
                None => add_vertex(a, &mut y_names, &mut image),
            };
            let q = match pick(b, rng, &image) {
                Some(q) => q,
                None => add_vertex(b, &mut y_names, &mut image),
            };
            let edge = (p.min(q), p.max(q));
            y_edges.insert(edge);
            y_len.insert(edge, x_lengths[e].clone());
        }
    }
    for v in 0..n {
        if !image.contains(&v) {
            add_vertex(v, &mut y_names, &mut image);
        }
    }
    let y_edges: Vec<(usize, usize)> = y_edges.into_iter().collect();
    let y_lengths: Vec<String> = y_edges.iter().map(|e| y_len[e].clone()).collect();
    RawMap {
        source: raw_complex(&y_names, &y_edges, &y_lengths),
        target: raw_complex(&x_names, &x_edges, &x_lengths),
        vertex_map,
    }
}

/// A PL function at the given level with small random complex rational values.
pub fn random_pl(rng: &mut ChaCha8Rng, y: &Complex, level: u32) -> PlFunction {
    PlFunction::from_fn(y, level, |_| cplx(rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)), rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)))).unwrap()
}

pub fn random_real_pl(rng: &mut ChaCha8Rng, y: &Complex, level: u32) -> PlFunction {
    PlFunction::from_fn(y, level, |_| cplx(rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)), Rational::from_integer(0.into()))).unwrap()
}

pub const ORACLE_RESOLUTION: i64 = 64;
const BALL: i64 = 4;

/// A grid point of a graph: a vertex, or `(edge, k)` meaning parameter
/// `k / 64` from the first-named endpoint of the sorted edge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum GridPoint {
    Vertex(String),
    Edge(String, String, i64),
}

fn canonical(a: &str, b: &str, k: i64) -> GridPoint {
    let r = ORACLE_RESOLUTION;
    if k == 0 {
        GridPoint::Vertex(a.to_string())
    } else if k == r {
        GridPoint::Vertex(b.to_string())
    } else if a < b {
        GridPoint::Edge(a.to_string(), b.to_string(), k)
    } else {
        GridPoint::Edge(b.to_string(), a.to_string(), r - k)
    }
}

fn edges_of(c: &RawComplex) -> Vec<(String, String)> {
    c.simplices.iter().filter(|s| s.len() == 2).map(|s| (s[0].clone(), s[1].clone())).collect()
}

/// Grid points within `BALL` grid steps of a vertex, walking out along every incident edge.
fn vertex_ball(edges: &[(String, String)], v: &str) -> Vec<(String, String, i64)> {
    let mut out = Vec::new();
    for (a, b) in edges {
        for k in 0..=BALL {
            if a == v {
                out.push((a.clone(), b.clone(), k));
            }
            if b == v {
                out.push((b.clone(), a.clone(), k));
            }
        }
    }
    out
}

/// Metric openness at resolution 1/64 of an edge length: for every grid
/// point `y` of `Y` the image of the ball of radius 4/64 around `y` must
/// contain the same-radius ball around `p(y)` in `X`. Works on the raw
/// description only.
pub fn oracle_is_open(raw: &RawMap) -> bool {
    let y_edges = edges_of(&raw.source);
    let x_edges = edges_of(&raw.target);
    let p = |v: &String| raw.vertex_map[v].clone();
    for y in &raw.source.vertices {
        let image: BTreeSet<GridPoint> = vertex_ball(&y_edges, y).iter().map(|(a, b, k)| canonical(&p(a), &p(b), *k)).collect();
        let target: BTreeSet<GridPoint> = vertex_ball(&x_edges, &p(y)).iter().map(|(a, b, k)| canonical(a, b, *k)).collect();
        if !target.is_subset(&image) {
            return false;
        }
    }
    for (a, b) in &y_edges {
        for k in (1..ORACLE_RESOLUTION).step_by(7) {
            let lo = (k - BALL).max(0);
            let hi = (k + BALL).min(ORACLE_RESOLUTION);
            let image: BTreeSet<GridPoint> = (lo..=hi).map(|j| canonical(&p(a), &p(b), j)).collect();
            let (pa, pb) = (p(a), p(b));
            let target: BTreeSet<GridPoint> = (lo..=hi).map(|j| canonical(&pa, &pb, j)).collect();
            if pa == pb || !target.is_subset(&image) {
                return false;
            }
        }
    }
    true
}
