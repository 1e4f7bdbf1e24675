//! Built-in example maps with their expected classification and scalar facts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::complex::RawComplex;
use crate::covermap::{RawMap, SimplicialSurjection, Verdict};
use crate::weights::{WeightError, WeightFunction, WeightJson};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub description: String,
    #[serde(flatten)]
    pub map: RawMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_weight: Option<WeightJson>,
    pub expected: Expected,
}

/// Rationals are kept as `"p/q"` strings. `m_values` maps piece labels to the
/// value of `M`, or to `"1/mu"` where it is the reciprocal of a varying weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_fold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_fibers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub m_values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quasi_basis_size: Option<usize>,
}

impl Expected {
    pub fn new(verdict: Verdict) -> Self {
        Expected { verdict, n_fold: None, max_fibers: None, k_min: None, pieces: None, m_values: BTreeMap::new(), quasi_basis_size: None }
    }
}

impl Fixture {
    pub fn reference_weight(&self, map: &SimplicialSurjection) -> Result<Option<WeightFunction>, WeightError> {
        self.reference_weight.as_ref().map(|json| WeightFunction::from_json(map.source(), json)).transpose()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixtures serialize")
    }
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn complex(vertices: &[&str], edges: &[(&str, &str, &str)]) -> RawComplex {
    RawComplex {
        vertices: strings(vertices),
        simplices: edges.iter().map(|(a, b, _)| strings(&[a, b])).collect(),
        lengths: edges.iter().map(|(a, b, l)| (format!("{a}-{b}"), l.to_string())).collect(),
    }
}

fn cycle(names: &[String], length: &str) -> Vec<(String, String, String)> {
    (0..names.len()).map(|i| (names[i].clone(), names[(i + 1) % names.len()].clone(), length.to_string())).collect()
}

fn owned_complex(vertices: &[String], edges: &[(String, String, String)]) -> RawComplex {
    let v: Vec<&str> = vertices.iter().map(String::as_str).collect();
    let e: Vec<(&str, &str, &str)> = edges.iter().map(|(a, b, l)| (a.as_str(), b.as_str(), l.as_str())).collect();
    complex(&v, &e)
}

fn names(prefix: &str, range: impl Iterator<Item = usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}")).collect()
}

fn vertex_map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn m_values(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    vertex_map(pairs)
}

fn weight(vertices: &[(&str, &str)], edges: &[(&str, &[(&str, &str)])]) -> WeightJson {
    WeightJson {
        vertices: vertex_map(vertices),
        edges: edges.iter().map(|(k, knots)| (k.to_string(), knots.iter().map(|(t, v)| [t.to_string(), v.to_string()]).collect())).collect(),
    }
}

fn tripod_target() -> RawComplex {
    complex(&["x0", "x1", "x2"], &[("x0", "x1", "1/2"), ("x1", "x2", "1/2")])
}

/// An interval `[0,1]` covered by a tripod that is one sheet over `[0,1/2]`
/// and splits into two branches over `(1/2,1]`.
pub fn figure2() -> Fixture {
    Fixture {
        name: "figure2".into(),
        description: "tripod onto an interval, branching at the midpoint".into(),
        map: RawMap {
            source: complex(&["a0", "a1", "b", "c"], &[("a0", "a1", "1/2"), ("a1", "b", "1/2"), ("a1", "c", "1/2")]),
            target: tripod_target(),
            vertex_map: vertex_map(&[("a0", "x0"), ("a1", "x1"), ("b", "x2"), ("c", "x2")]),
        },
        reference_weight: Some(weight(
            &[("a0", "1"), ("a1", "1"), ("b", "1/2"), ("c", "1/2")],
            &[
                ("a0-a1", &[("0", "1"), ("1", "1")]),
                ("a1-b", &[("0", "1/2"), ("1", "1/2")]),
                ("a1-c", &[("0", "1/2"), ("1", "1/2")]),
            ],
        )),
        expected: Expected {
            max_fibers: Some(2),
            k_min: Some("2".into()),
            pieces: Some(3),
            m_values: m_values(&[("Y[1,1,1]", "1"), ("Y[2,1,1]", "2"), ("Y[2,1,2]", "2")]),
            ..Expected::new(Verdict::BranchedCovering)
        },
    }
}

/// The tripod with an extra interval attached at its left end, folded back
/// over the first half. Open at the branch point, not at the fold.
pub fn remark210() -> Fixture {
    let mut source = figure2().map.source;
    source.vertices.push("e".into());
    source.simplices.push(strings(&["a0", "e"]));
    source.lengths.insert("a0-e".into(), "1/2".into());
    Fixture {
        name: "remark210".into(),
        description: "tripod with an extra interval folded back over its base".into(),
        map: RawMap {
            source,
            target: tripod_target(),
            vertex_map: vertex_map(&[("a0", "x0"), ("a1", "x1"), ("b", "x2"), ("c", "x2"), ("e", "x1")]),
        },
        reference_weight: None,
        expected: Expected::new(Verdict::NotOpen),
    }
}

/// `[0,1]` wrapped once around a circle of length 1, endpoints identified.
pub fn interval_onto_circle() -> Fixture {
    let x = names("x", 0..3);
    let y = names("y", 0..4);
    let y_edges: Vec<_> = (0..3).map(|i| (y[i].clone(), y[i + 1].clone(), "1/3".to_string())).collect();
    Fixture {
        name: "interval_onto_circle".into(),
        description: "an interval wrapped once around a circle".into(),
        map: RawMap {
            source: owned_complex(&y, &y_edges),
            target: owned_complex(&x, &cycle(&x, "1/3")),
            vertex_map: vertex_map(&[("y0", "x0"), ("y1", "x1"), ("y2", "x2"), ("y3", "x0")]),
        },
        reference_weight: None,
        expected: Expected::new(Verdict::NotOpen),
    }
}

/// Two disjoint circles onto a figure eight, glued at one point.
pub fn eight_from_two_circles() -> Fixture {
    let x = names("x", 0..5);
    let mut x_edges = cycle(&strings(&["x0", "x1", "x2"]), "1/3");
    x_edges.extend(cycle(&strings(&["x0", "x3", "x4"]), "1/3"));
    let y = strings(&["a0", "a1", "a2", "b0", "b3", "b4"]);
    let mut y_edges = cycle(&strings(&["a0", "a1", "a2"]), "1/3");
    y_edges.extend(cycle(&strings(&["b0", "b3", "b4"]), "1/3"));
    Fixture {
        name: "eight_from_two_circles".into(),
        description: "two disjoint circles onto a figure eight".into(),
        map: RawMap {
            source: owned_complex(&y, &y_edges),
            target: owned_complex(&x, &x_edges),
            vertex_map: vertex_map(&[("a0", "x0"), ("a1", "x1"), ("a2", "x2"), ("b0", "x0"), ("b3", "x3"), ("b4", "x4")]),
        },
        reference_weight: None,
        expected: Expected::new(Verdict::NotOpen),
    }
}

/// Two copies of a circle of length 1 with an interval joining the point 0
/// of the lower copy to the point 1/4 of the upper one.
pub fn two_circles_with_interval() -> Fixture {
    let x = names("x", 0..4);
    let l = names("l", 0..4);
    let u = names("u", 0..4);
    let mut y = l.clone();
    y.extend(u.clone());
    let mut y_edges = cycle(&l, "1/4");
    y_edges.extend(cycle(&u, "1/4"));
    y_edges.push(("l0".into(), "u1".into(), "1/4".into()));
    let mut vm = BTreeMap::new();
    for i in 0..4 {
        vm.insert(l[i].clone(), x[i].clone());
        vm.insert(u[i].clone(), x[i].clone());
    }
    let half: &[(&str, &str)] = &[("0", "1/2"), ("1", "1/2")];
    Fixture {
        name: "two_circles_with_interval".into(),
        description: "two circles over a circle, joined by an interval over the first quarter".into(),
        map: RawMap { source: owned_complex(&y, &y_edges), target: owned_complex(&x, &cycle(&x, "1/4")), vertex_map: vm },
        reference_weight: Some(weight(
            &[("l0", "1/2"), ("l1", "1/2"), ("l2", "1/2"), ("l3", "1/2"), ("u0", "1/2"), ("u1", "1/2"), ("u2", "1/2"), ("u3", "1/2")],
            &[
                ("l0-u1", &[("0", "1/4"), ("1", "1/4")]),
                // t + 1/4 and 1/2 - t on the arc t in (0, 1/4)
                ("l0-l1", &[("0", "1/4"), ("1", "1/2")]),
                ("u0-u1", &[("0", "1/2"), ("1", "1/4")]),
                ("l1-l2", half),
                ("l2-l3", half),
                ("l3-l0", half),
                ("u1-u2", half),
                ("u2-u3", half),
                ("u3-u0", half),
            ],
        )),
        expected: Expected {
            max_fibers: Some(3),
            k_min: Some("4".into()),
            pieces: Some(5),
            m_values: m_values(&[("Y[2,1,1]", "2"), ("Y[2,1,2]", "2"), ("Y[3,1,1]", "1/mu"), ("Y[3,1,2]", "4"), ("Y[3,1,3]", "1/mu")]),
            ..Expected::new(Verdict::BranchedCovering)
        },
    }
}

/// The connected 2-fold cover of a circle by a circle.
pub fn double_cover_circle() -> Fixture {
    let x = names("x", 0..3);
    let y = names("y", 0..6);
    let vm = (0..6).map(|i| (y[i].clone(), x[i % 3].clone())).collect();
    Fixture {
        name: "double_cover_circle".into(),
        description: "a circle wrapped twice around a circle".into(),
        map: RawMap { source: owned_complex(&y, &cycle(&y, "1/3")), target: owned_complex(&x, &cycle(&x, "1/3")), vertex_map: vm },
        reference_weight: None,
        expected: Expected {
            verdict: Verdict::Covering,
            n_fold: Some(2),
            max_fibers: Some(2),
            k_min: Some("2".into()),
            pieces: Some(4),
            m_values: m_values(&[("Y[2,1,1]", "2"), ("Y[2,1,2]", "2"), ("Y[2,2,1]", "2"), ("Y[2,2,2]", "2")]),
            quasi_basis_size: Some(4),
        },
    }
}

pub fn identity() -> Fixture {
    let x = names("x", 0..3);
    let y = names("y", 0..3);
    let vm = (0..3).map(|i| (y[i].clone(), x[i].clone())).collect();
    Fixture {
        name: "identity".into(),
        description: "the identity of a circle".into(),
        map: RawMap { source: owned_complex(&y, &cycle(&y, "1/3")), target: owned_complex(&x, &cycle(&x, "1/3")), vertex_map: vm },
        reference_weight: None,
        expected: Expected {
            verdict: Verdict::Covering,
            n_fold: Some(1),
            max_fibers: Some(1),
            k_min: Some("1".into()),
            pieces: Some(1),
            m_values: m_values(&[("Y[1,1,1]", "1")]),
            quasi_basis_size: Some(1),
        },
    }
}

pub fn all() -> Vec<Fixture> {
    vec![
        figure2(),
        remark210(),
        interval_onto_circle(),
        eight_from_two_circles(),
        two_circles_with_interval(),
        double_cover_circle(),
        identity(),
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}
