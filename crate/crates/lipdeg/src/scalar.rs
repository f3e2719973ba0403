//! Coefficient fields: `f64` for speed, `BigRational` for exact checks.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub trait Scalar: Clone + PartialEq + Debug + Send + Sync + 'static {
    fn nil() -> Self;
    fn unit() -> Self;
    fn of_i64(v: i64) -> Self;
    /// Exact conversion for rationals (every finite double is dyadic).
    fn of_f64(v: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_nil(&self) -> bool;
    fn as_f64(&self) -> f64;
    fn to_json(&self) -> Value;
    fn from_json(v: &Value, at: &str) -> Result<Self>;
}

impl Scalar for f64 {
    fn nil() -> Self {
        0.0
    }
    fn unit() -> Self {
        1.0
    }
    fn of_i64(v: i64) -> Self {
        v as f64
    }
    fn of_f64(v: f64) -> Self {
        v
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_nil(&self) -> bool {
        *self == 0.0
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self).map(Value::Number).unwrap_or(Value::Null)
    }
    fn from_json(v: &Value, at: &str) -> Result<Self> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| Error::parse(at, "number out of range")),
            Value::String(s) => ToPrimitive::to_f64(&parse_rational(s, at)?)
                .ok_or_else(|| Error::parse(at, "rational out of f64 range")),
            _ => Err(Error::parse(at, "coefficient must be a number or \"p/q\" string")),
        }
    }
}

impl Scalar for Rational {
    fn nil() -> Self {
        Zero::zero()
    }
    fn unit() -> Self {
        One::one()
    }
    fn of_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn of_f64(v: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(v).unwrap_or_else(Zero::zero)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_json(&self) -> Value {
        Value::String(format_rational(self))
    }
    fn from_json(v: &Value, at: &str) -> Result<Self> {
        match v {
            Value::String(s) => parse_rational(s, at),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(<Self as Scalar>::of_i64(i))
                } else {
                    let f = n.as_f64().ok_or_else(|| Error::parse(at, "number out of range"))?;
                    Ok(<Self as Scalar>::of_f64(f))
                }
            }
            _ => Err(Error::parse(at, "coefficient must be a number or \"p/q\" string")),
        }
    }
}

/// `"p/q"` or `"p"`; whitespace tolerated.
pub fn parse_rational(s: &str, at: &str) -> Result<Rational> {
    let bad = || Error::parse(at, format!("malformed rational {s:?}"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s.trim(), "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q.is_zero() {
        return Err(Error::parse(at, "zero denominator"));
    }
    Ok(BigRational::new(p, q))
}

pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Smallest-denominator rational within `tol` of `x`, searched along the
/// continued-fraction convergents with denominators up to `max_den`.
pub fn rational_approx(x: f64, max_den: i64, tol: f64) -> Option<num_rational::Ratio<i64>> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            return None;
        }
        let a = a as i64;
        let h2 = a.checked_mul(h1)?.checked_add(h0)?;
        let k2 = a.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_den {
            return None;
        }
        if (h2 as f64 / k2 as f64 - x).abs() <= tol {
            return Some(num_rational::Ratio::new(h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

