//! Exact scalars: arbitrary-precision rationals and complex rationals.

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Complex number with exact rational real and imaginary parts.
pub type Scalar = Complex<Rational>;

pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn real(r: Rational) -> Scalar {
    Scalar::new(r, Rational::zero())
}

pub fn cplx(re: Rational, im: Rational) -> Scalar {
    Scalar::new(re, im)
}

pub fn scalar_zero() -> Scalar {
    real(Rational::zero())
}

pub fn scalar_one() -> Scalar {
    real(Rational::one())
}

pub fn is_real(z: &Scalar) -> bool {
    z.im.is_zero()
}

/// |z|^2, exact.
pub fn abs_sq(z: &Scalar) -> Rational {
    &z.re * &z.re + &z.im * &z.im
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator/denominator too large for a direct conversion; scale down first
        let n = r.numer().bits() as i64;
        let d = r.denom().bits() as i64;
        let shift = (n.max(d) - 1000).max(0) as usize;
        let num = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let den = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        num / den
    })
}

pub fn scalar_to_f64(z: &Scalar) -> Complex<f64> {
    Complex::new(to_f64(&z.re), to_f64(&z.im))
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Ok(r) = s.parse::<Rational>() {
        return Some(r);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s),
    };
    let (whole, frac) = body.split_once('.')?;
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{whole}{frac}").parse().ok()?;
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    Some(Rational::new(digits * sign, denom))
}

pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn is_positive(r: &Rational) -> bool {
    r.is_positive()
}

/// Serde adapter storing a [`Rational`] as a `"p/q"` string.
pub mod serde_rational {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse_rational(&raw).ok_or_else(|| D::Error::custom(format!("invalid rational '{raw}'")))
    }
}

/// Serde adapter storing a [`Scalar`] as `["re", "im"]`.
pub mod serde_scalar {
    use super::*;
    use serde::{de::Error, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Scalar, s: S) -> Result<S::Ok, S::Error> {
        [format_rational(&z.re), format_rational(&z.im)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
        let [re, im] = <[String; 2]>::deserialize(d)?;
        let re = parse_rational(&re).ok_or_else(|| D::Error::custom(format!("invalid rational '{re}'")))?;
        let im = parse_rational(&im).ok_or_else(|| D::Error::custom(format!("invalid rational '{im}'")))?;
        Ok(cplx(re, im))
    }
}
