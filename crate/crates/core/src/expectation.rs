//! The conditional expectation `E_μ(f)(x) = Σ_{p(y)=x} μ(y) f(y)`, its
//! axioms, the constant `K` of index-finite type and the fiber bound.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::complex::{Point, SimplexId};
use crate::covermap::SimplicialSurjection;
use crate::hilbert::{fiber_sum, pullback, ContinuityReport, HilbertError, PiecewiseFunction, PlFunction};
use crate::scalar::{abs_sq, real, scalar_one, scalar_zero, Rational, Scalar};
use crate::weights::WeightFunction;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpectationError {
    #[error("f does not vanish on the fiber: f({point}) = {value}")]
    PreconditionViolated { point: String, value: String },
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
}

pub struct Expectation<'a> {
    map: &'a SimplicialSurjection,
    mu: &'a WeightFunction,
    mu_pw: PiecewiseFunction,
}

impl<'a> Expectation<'a> {
    pub fn new(map: &'a SimplicialSurjection, mu: &'a WeightFunction) -> Self {
        let mu_pw = mu.to_piecewise(map.source());
        Expectation { map, mu, mu_pw }
    }

    pub fn map(&self) -> &SimplicialSurjection {
        self.map
    }

    pub fn weight(&self) -> &WeightFunction {
        self.mu
    }

    pub fn apply(&self, f: &PiecewiseFunction) -> PiecewiseFunction {
        fiber_sum(self.map, &self.mu_pw.mul(f))
    }

    pub fn apply_pl(&self, f: &PlFunction) -> PiecewiseFunction {
        self.apply(&f.to_piecewise(self.map.source()))
    }

    /// `E(f)(x)` evaluated directly on the fiber.
    pub fn at(&self, f: &PlFunction, x: &Point) -> Scalar {
        let y = self.map.source();
        self.map.fiber(x).iter().fold(scalar_zero(), |acc, q| acc + f.eval(y, q) * real(self.mu.eval(y, q)))
    }

    /// `E(f)` together with a continuity check on the target.
    pub fn evaluate(&self, f: &PlFunction) -> ExpectationResult {
        let value = self.apply_pl(f);
        let continuity = value.check_continuity(self.map.target());
        ExpectationResult { value, continuity }
    }
}

pub struct ExpectationResult {
    pub value: PiecewiseFunction,
    pub continuity: ContinuityReport,
}

pub fn expectation(map: &SimplicialSurjection, mu: &WeightFunction, f: &PlFunction) -> ExpectationResult {
    Expectation::new(map, mu).evaluate(f)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AxiomReport {
    pub bimodule_left: bool,
    pub bimodule_right: bool,
    pub projection: bool,
    pub positivity: bool,
    pub unital: bool,
    pub contractive: bool,
    pub failures: Vec<String>,
    pub points_checked: usize,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.bimodule_left && self.bimodule_right && self.projection && self.positivity && self.unital && self.contractive
    }
}

/// Checks the conditional-expectation axioms for each pair `(a on X, b on Y)`
/// at the target vertices and `samples` points per target edge, exactly.
pub fn check_axioms(e: &Expectation, pairs: &[(PlFunction, PlFunction)], samples: usize) -> Result<AxiomReport, HilbertError> {
    let (y, x) = (e.map.source(), e.map.target());
    let points = x.sample_points(samples);
    let mut r = AxiomReport { bimodule_left: true, bimodule_right: true, projection: true, positivity: true, unital: true, contractive: true, ..Default::default() };

    let one = e.apply(&PiecewiseFunction::constant(y, scalar_one()));
    for p in &points {
        r.points_checked += 1;
        if one.eval(p) != scalar_one() {
            r.unital = false;
            r.failures.push(format!("E(1) = {} at {}", one.eval(p), describe(x, p)));
            break;
        }
    }

    for (i, (a, b)) in pairs.iter().enumerate() {
        let a_pw = a.to_piecewise(x);
        let b_pw = b.to_piecewise(y);
        let ia = pullback(e.map, &a_pw);
        let eb = e.apply(&b_pw);
        let left = e.apply(&ia.mul(&b_pw));
        let right = e.apply(&b_pw.mul(&ia));
        let proj = e.apply(&ia);
        let norm_sq = b.sup_norm_sq();
        for p in &points {
            r.points_checked += 1;
            let av = a_pw.eval(p);
            let ebv = eb.eval(p);
            if r.bimodule_left && left.eval(p) != &av * &ebv {
                r.bimodule_left = false;
                r.failures.push(format!("pair {i}: E(i(a) b) != a E(b) at {}", describe(x, p)));
            }
            if r.bimodule_right && right.eval(p) != &ebv * &av {
                r.bimodule_right = false;
                r.failures.push(format!("pair {i}: E(b i(a)) != E(b) a at {}", describe(x, p)));
            }
            if r.projection && proj.eval(p) != av {
                r.projection = false;
                r.failures.push(format!("pair {i}: E(i(a)) != a at {}", describe(x, p)));
            }
            if r.contractive && abs_sq(&ebv) > norm_sq {
                r.contractive = false;
                r.failures.push(format!("pair {i}: |E(b)| > ||b|| at {}", describe(x, p)));
            }
        }
        let bb = e.apply(&b_pw.conj().mul(&b_pw));
        if r.positivity && !bb.bounded_below_by(x, &Rational::zero())? {
            r.positivity = false;
            r.failures.push(format!("pair {i}: E(b* b) takes a negative value"));
        }
    }
    Ok(r)
}

fn describe(complex: &crate::complex::Complex, p: &Point) -> String {
    match p.edge_param() {
        None => complex.cell_label(p.carrier),
        Some(t) => format!("{} t={}", complex.cell_label(p.carrier), t),
    }
}

/// Where `inf μ` is reached: a vertex, an edge knot, or only as a one-sided
/// limit at an edge end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub cell: SimplexId,
    pub location: String,
    pub param: Option<Rational>,
    pub value: Rational,
    pub attained: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexFiniteReport {
    pub k_min: Rational,
    pub is_topologically_finite: bool,
    pub certificate: Certificate,
}

/// `K_min = 1 / inf μ`. In the commutative model `K E - id` is positive
/// exactly when `K μ >= 1` everywhere.
pub fn minimal_k(map: &SimplicialSurjection, mu: &WeightFunction) -> IndexFiniteReport {
    let y = map.source();
    let mut best: Option<Certificate> = None;
    let mut consider = |c: Certificate| {
        let better = match &best {
            None => true,
            Some(b) => c.value < b.value || (c.value == b.value && c.attained && !b.attained),
        };
        if better {
            best = Some(c);
        }
    };
    for v in 0..y.vertex_count() {
        consider(Certificate { cell: y.vertex_id(v), location: y.name(v).to_string(), param: None, value: mu.vertex_value(v).clone(), attained: true });
    }
    for (&e, knots) in mu.edges() {
        let last = knots.len() - 1;
        for (i, (t, val)) in knots.iter().enumerate() {
            // interior knots are attained; end knots are only limits
            let end = i == 0 || i == last;
            consider(Certificate { cell: e, location: format!("{} t={}", y.edge_key(e), t), param: Some(t.clone()), value: val.clone(), attained: !end });
        }
        for w in knots.windows(2) {
            if w[0].1 == w[1].1 {
                let mid = (&w[0].0 + &w[1].0) / Rational::from_integer(2.into());
                consider(Certificate { cell: e, location: format!("{} t={}", y.edge_key(e), mid), param: Some(mid), value: w[0].1.clone(), attained: true });
            }
        }
    }
    let cert = best.expect("source has a vertex");
    let positive = cert.value > Rational::zero();
    IndexFiniteReport {
        k_min: if positive { cert.value.recip() } else { Rational::zero() },
        is_topologically_finite: positive,
        certificate: cert,
    }
}

/// A point with `K μ(y) < 1`, i.e. where `K E - id` fails to be positive.
pub fn violating_point(map: &SimplicialSurjection, mu: &WeightFunction, k: &Rational) -> Option<Point> {
    let y = map.source();
    let report = minimal_k(map, mu);
    let cert = &report.certificate;
    if k * &cert.value >= Rational::one() {
        return None;
    }
    if cert.attained {
        return Some(match &cert.param {
            None => y.vertex_point(y.simplex(cert.cell).vertices()[0]),
            Some(t) => y.edge_point(cert.cell, t.clone()).unwrap(),
        });
    }
    // only a limit: step into the edge just far enough to stay below 1/K
    let knots = mu.knots(cert.cell);
    let at_start = cert.param.as_ref().is_some_and(|t| t.is_zero());
    let (near, next) = if at_start { (&knots[0], &knots[1]) } else { (&knots[knots.len() - 1], &knots[knots.len() - 2]) };
    let target = (k.recip() + &near.1) / Rational::from_integer(2.into());
    let span = &next.0 - &near.0;
    let rise = &next.1 - &near.1;
    let frac = if rise > Rational::zero() { ((&target - &near.1) / &rise).min(Rational::new(1.into(), 2.into())) } else { Rational::new(1.into(), 2.into()) };
    let t = &near.0 + span * frac;
    y.edge_point(cert.cell, t).ok()
}

/// `K E(|f|²)(p(y)) - |f(y)|²`, exactly.
pub fn positivity_defect(e: &Expectation, k: &Rational, f: &PlFunction, y_point: &Point) -> Rational {
    let y = e.map.source();
    let x_point = e.map.image_point(y_point);
    let sq = f.map_values(|z| real(abs_sq(z)));
    let ex = e.at(&sq, &x_point);
    k * ex.re - abs_sq(&f.eval(y, y_point))
}

/// `E(f* f)(x)` for an `f` vanishing on the fiber over `x`; `true` when it is 0.
pub fn check_fiberwise(e: &Expectation, x: &Point, f: &PlFunction) -> Result<bool, ExpectationError> {
    let y = e.map.source();
    for q in e.map.fiber(x) {
        let v = f.eval(y, &q);
        if !v.is_zero() {
            return Err(ExpectationError::PreconditionViolated { point: describe(y, &q), value: format!("{v}") });
        }
    }
    let sq = f.map_values(|z| real(abs_sq(z)));
    Ok(e.at(&sq, x).is_zero())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberBoundCheck {
    pub location: String,
    pub fiber_size: usize,
    /// `E(f_k)(x)` for the bump `f_k` at each fiber point.
    pub bump_values: Vec<Rational>,
    /// `K_min E(f_k)(x) >= 1` for every `k`.
    pub bumps_above_inverse_k: bool,
    /// `Σ_k E(f_k)(x) <= E(1)(x) = 1`.
    pub sum_at_most_one: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiberBoundReport {
    pub max_fibers: usize,
    pub k_min: Rational,
    pub holds: bool,
    pub checks: Vec<FiberBoundCheck>,
}

/// At every target vertex and edge midpoint, puts a bump of height 1 on each
/// fiber point (disjoint supports). Positivity of `K E - id` gives
/// `E(f_k)(x) >= 1/K`, and the bumps sum to at most 1, so `n <= K`.
pub fn fiber_bound_from_k(map: &SimplicialSurjection, mu: &WeightFunction) -> Result<FiberBoundReport, HilbertError> {
    let (y, x) = (map.source(), map.target());
    let e = Expectation::new(map, mu);
    let k_min = minimal_k(map, mu).k_min;
    let mut points: Vec<Point> = (0..x.vertex_count()).map(|v| x.vertex_point(v)).collect();
    points.extend(x.edges().map(|ed| x.edge_point(ed, Rational::new(1.into(), 2.into())).unwrap()));
    let mut checks = Vec::new();
    for p in &points {
        let fiber = map.fiber(p);
        let mut bump_values = Vec::with_capacity(fiber.len());
        let mut total: Option<PlFunction> = None;
        for q in &fiber {
            let bump = PlFunction::from_fn(y, 1, |g| if g == q { scalar_one() } else { scalar_zero() })?;
            bump_values.push(e.at(&bump, p).re);
            total = Some(match total {
                None => bump,
                Some(t) => PlFunction::from_fn(y, 1, |g| t.eval(y, g) + bump.eval(y, g))?,
            });
        }
        let sum = total.map(|t| e.at(&t, p).re).unwrap_or_else(Rational::zero);
        checks.push(FiberBoundCheck {
            location: describe(x, p),
            fiber_size: fiber.len(),
            bumps_above_inverse_k: bump_values.iter().all(|v| &k_min * v >= Rational::one()),
            sum_at_most_one: sum <= Rational::one(),
            bump_values,
        });
    }
    let max_fibers = map.stratify().max_fibers;
    let holds = Rational::from_integer((max_fibers as i64).into()) <= k_min
        && checks.iter().all(|c| c.bumps_above_inverse_k && c.sum_at_most_one);
    Ok(FiberBoundReport { max_fibers, k_min, holds, checks })
}
