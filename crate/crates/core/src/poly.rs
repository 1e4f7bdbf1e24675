//! Univariate polynomials with complex rational coefficients, and numbers of
//! the form `a + b*sqrt(d)` used to locate extrema of real cubics exactly.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};

use crate::scalar::{real, scalar_zero, to_f64, Rational, Scalar};

/// Coefficients from the constant term upward, with no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly(Vec<Scalar>);

impl Poly {
    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn constant(c: Scalar) -> Self {
        Poly::new(vec![c])
    }

    /// `c0 + c1 * t`
    pub fn linear(c0: Scalar, c1: Scalar) -> Self {
        Poly::new(vec![c0, c1])
    }

    pub fn new(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.0.get(i).cloned().unwrap_or_else(scalar_zero)
    }

    pub fn eval(&self, t: &Rational) -> Scalar {
        let t = real(t.clone());
        self.0.iter().rev().fold(scalar_zero(), |acc, c| acc * &t + c)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly::new((0..n).map(|i| self.coeff(i) + other.coeff(i)).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(&real(-Rational::one())))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![scalar_zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] = &out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, c: &Scalar) -> Poly {
        Poly::new(self.0.iter().map(|a| a * c).collect())
    }

    pub fn conj(&self) -> Poly {
        Poly::new(self.0.iter().map(|a| a.conj()).collect())
    }

    /// `p(c0 + c1 * t)`
    pub fn compose_affine(&self, c0: &Rational, c1: &Rational) -> Poly {
        let inner = Poly::linear(real(c0.clone()), real(c1.clone()));
        self.0.iter().rev().fold(Poly::zero(), |acc, c| acc.mul(&inner).add(&Poly::constant(c.clone())))
    }

    /// `p(1 - t)`
    pub fn reflect(&self) -> Poly {
        self.compose_affine(&Rational::one(), &-Rational::one())
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * real(Rational::from_integer((i as i64).into())))
                .collect(),
        )
    }

    pub fn is_real(&self) -> bool {
        self.0.iter().all(|c| c.im.is_zero())
    }

    pub fn real_coeffs(&self) -> Vec<Rational> {
        self.0.iter().map(|c| c.re.clone()).collect()
    }
}

/// Evaluates a real polynomial, given by coefficients, at a rational point.
pub fn eval_real(coeffs: &[Rational], t: &Rational) -> Rational {
    coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * t + c)
}

/// `a + b * sqrt(d)` with `d >= 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub a: Rational,
    pub b: Rational,
    pub d: Rational,
}

impl Surd {
    pub fn rational(a: Rational) -> Self {
        Surd { a, b: Rational::zero(), d: Rational::zero() }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero() || self.d.is_zero()
    }

    pub fn signum(&self) -> Ordering {
        let sa = self.a.cmp(&Rational::zero());
        let sb = if self.d.is_zero() { Ordering::Equal } else { self.b.cmp(&Rational::zero()) };
        match (sa, sb) {
            (x, Ordering::Equal) => x,
            (Ordering::Equal, y) => y,
            (x, y) if x == y => x,
            _ => match (&self.a * &self.a).cmp(&(&self.b * &self.b * &self.d)) {
                Ordering::Greater => sa,
                Ordering::Less => sb,
                Ordering::Equal => Ordering::Equal,
            },
        }
    }

    pub fn sub_rational(&self, r: &Rational) -> Surd {
        Surd { a: &self.a - r, b: self.b.clone(), d: self.d.clone() }
    }

    pub fn neg(&self) -> Surd {
        Surd { a: -&self.a, b: -&self.b, d: self.d.clone() }
    }

    pub fn abs(&self) -> Surd {
        if self.signum() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn cmp_rational(&self, r: &Rational) -> Ordering {
        self.sub_rational(r).signum()
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.a) + to_f64(&self.b) * to_f64(&self.d).sqrt()
    }

    fn mul(&self, other: &Surd) -> Surd {
        debug_assert!(self.is_rational() || other.is_rational() || self.d == other.d);
        let d = if self.is_rational() { other.d.clone() } else { self.d.clone() };
        Surd {
            a: &self.a * &other.a + &self.b * &other.b * &d,
            b: &self.a * &other.b + &self.b * &other.a,
            d,
        }
    }

    fn add_rational(&self, r: &Rational) -> Surd {
        Surd { a: &self.a + r, b: self.b.clone(), d: self.d.clone() }
    }
}

impl std::fmt::Display for Surd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_rational() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{} + {}*sqrt({})", self.a, self.b, self.d)
        }
    }
}

/// Evaluates a real polynomial at a surd point, exactly.
pub fn eval_real_at_surd(coeffs: &[Rational], t: &Surd) -> Surd {
    coeffs.iter().rev().fold(Surd::rational(Rational::zero()), |acc, c| acc.mul(t).add_rational(c))
}

/// Real roots of the derivative of a real polynomial of degree at most 3.
pub fn critical_points(coeffs: &[Rational]) -> Vec<Surd> {
    assert!(coeffs.len() <= 4, "degree above 3");
    let c = |i: usize| coeffs.get(i).cloned().unwrap_or_else(Rational::zero);
    // derivative: b + 2c t + 3d t^2
    let (b, c2, d3) = (c(1), c(2) * Rational::from_integer(2.into()), c(3) * Rational::from_integer(3.into()));
    if !d3.is_zero() {
        let disc = &c2 * &c2 - Rational::from_integer(4.into()) * &d3 * &b;
        if disc.is_negative() {
            return Vec::new();
        }
        let denom = Rational::from_integer(2.into()) * &d3;
        let a = -&c2 / &denom;
        if disc.is_zero() {
            return vec![Surd::rational(a)];
        }
        let s = Rational::one() / &denom;
        let mut roots = vec![Surd { a: a.clone(), b: -&s, d: disc.clone() }, Surd { a, b: s, d: disc }];
        roots.sort_by(|x, y| x.to_f64().partial_cmp(&y.to_f64()).unwrap_or(Ordering::Equal));
        roots
    } else if !c2.is_zero() {
        vec![Surd::rational(-b / c2)]
    } else {
        Vec::new()
    }
}

/// True when `start < t < end`, exactly.
pub fn strictly_inside(t: &Surd, start: &Rational, end: &Rational) -> bool {
    t.cmp_rational(start) == Ordering::Greater && t.cmp_rational(end) == Ordering::Less
}
