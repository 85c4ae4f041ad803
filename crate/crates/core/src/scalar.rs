//! Numeric abstraction shared by the exact (rational) and floating paths.
//!
//! Every distribution, measure and progression is generic over [`Scalar`].
//! `f64` is the default; [`Rat`] gives zero-tolerance arithmetic for the
//! desk-scale instances where exact comparisons matter.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde_json::Value;

/// Exact rational with 128-bit numerator and denominator.
pub type Rat = Ratio<i128>;

/// Relative tolerance used to decide coincidence of floating points.
pub const MERGE_RTOL: f64 = 1e-12;

pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// `true` for arithmetic without rounding.
    const EXACT: bool;

    fn to_f64(&self) -> f64;
    fn from_i64(v: i64) -> Self;
    fn from_frac(num: i64, den: i64) -> Self;
    /// Lossy for `Rat` only when `x` is not a finite binary fraction in range.
    fn from_f64(x: f64) -> Option<Self>;
    /// Parses a decimal literal such as `-1.25e3` or `7/3`.
    fn parse_decimal(s: &str) -> Option<Self>;

    /// Absolute slack below which two values at magnitude `scale` coincide.
    fn slack(scale: &Self) -> Self;

    /// Largest integer `k` with `k <= self`.
    fn floor_i64(&self) -> i64;

    fn is_finite(&self) -> bool;

    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Option<Self>;

    /// Hashable key, exact for rationals, bit pattern for floats.
    fn key(&self) -> ScalarKey;

    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn half(&self) -> Self {
        self.clone() / Self::from_i64(2)
    }

    /// Largest integer `k` with `k < self` (strict floor).
    fn strict_floor_i64(&self) -> i64 {
        let f = self.floor_i64();
        if Self::from_i64(f) == *self {
            f - 1
        } else {
            f
        }
    }

    fn approx_eq(&self, other: &Self) -> bool {
        let scale = if self.abs() > other.abs() {
            self.abs()
        } else {
            other.abs()
        };
        (self.clone() - other.clone()).abs() <= Self::slack(&scale)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarKey {
    Float(u64),
    Ratio(i128, i128),
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_frac(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: f64 = n.trim().parse().ok()?;
            let d: f64 = d.trim().parse().ok()?;
            return (d != 0.0).then_some(n / d);
        }
        match s {
            "inf" | "+inf" | "infinity" => Some(f64::INFINITY),
            _ => s.parse().ok(),
        }
    }
    fn slack(scale: &Self) -> Self {
        MERGE_RTOL * (1.0 + scale.abs())
    }
    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or_else(|| Value::String(format!("{self}")))
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => Self::parse_decimal(s),
            _ => None,
        }
    }
    fn key(&self) -> ScalarKey {
        // -0.0 and 0.0 must collide
        let x = if *self == 0.0 { 0.0 } else { *self };
        ScalarKey::Float(x.to_bits())
    }
    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn to_f64(&self) -> f64 {
        // Scale down both parts together when they exceed f64's exact range.
        let (mut n, mut d) = (*self.numer(), *self.denom());
        while n.abs() > (1i128 << 100) || d > (1i128 << 100) {
            n /= 2;
            d /= 2;
        }
        if d == 0 {
            return if n >= 0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN)
    }
    fn from_i64(v: i64) -> Self {
        Rat::from_integer(v as i128)
    }
    fn from_frac(num: i64, den: i64) -> Self {
        Rat::new(num as i128, den as i128)
    }
    fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        // Exact dyadic expansion; refuse values that need more than 2^100.
        let mut den: i128 = 1;
        let mut v = x;
        while v.fract() != 0.0 {
            if den > (1i128 << 100) {
                return None;
            }
            v *= 2.0;
            den *= 2;
        }
        if v.abs() > 1e30 {
            return None;
        }
        Some(Rat::new(v as i128, den))
    }
    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = Self::parse_decimal(n)?;
            let d = Self::parse_decimal(d)?;
            return (!d.is_zero()).then(|| n / d);
        }
        let (mantissa, exponent) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
            None => (s, 0),
        };
        let (neg, mantissa) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
        {
            return None;
        }
        let digits = format!("{int_part}{frac_part}");
        let mut num: i128 = if digits.is_empty() {
            0
        } else {
            digits.parse().ok()?
        };
        if neg {
            num = -num;
        }
        let scale = exponent - frac_part.len() as i32;
        let pow = 10i128.checked_pow(scale.unsigned_abs())?;
        Some(if scale >= 0 {
            Rat::from_integer(num.checked_mul(pow)?)
        } else {
            Rat::new(num, pow)
        })
    }
    fn slack(_scale: &Self) -> Self {
        Rat::zero()
    }
    fn floor_i64(&self) -> i64 {
        self.floor().to_integer() as i64
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn to_json(&self) -> Value {
        if self.is_integer() {
            let n = self.to_integer();
            if let Ok(v) = i64::try_from(n) {
                return Value::from(v);
            }
        }
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }
    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => Self::parse_decimal(&n.to_string()),
            Value::String(s) => Self::parse_decimal(s),
            _ => None,
        }
    }
    fn key(&self) -> ScalarKey {
        ScalarKey::Ratio(*self.numer(), *self.denom())
    }
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

/// Hashable key of a point; exact for rationals.
pub fn point_key<T: Scalar>(p: &[T]) -> Vec<ScalarKey> {
    p.iter().map(Scalar::key).collect()
}

pub fn lex_cmp<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Max-norm `|x| = max_j |x_j|`.
pub fn max_norm<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |acc, v| {
        let a = v.abs();
        if a > acc {
            a
        } else {
            acc
        }
    })
}

pub fn max_norm_dist<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter().zip(y).fold(T::zero(), |acc, (a, b)| {
        let d = (a.clone() - b.clone()).abs();
        if d > acc {
            d
        } else {
            acc
        }
    })
}

pub fn smax<T: Scalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

pub fn smin<T: Scalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

/// Neumaier-compensated sum, deterministic for a fixed input order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sum in the scalar's own arithmetic; compensated for floats.
pub fn sum_scalars<'a, T: Scalar, I: IntoIterator<Item = &'a T>>(values: I) -> T {
    if T::EXACT {
        values.into_iter().fold(T::zero(), |acc, v| acc + v.clone())
    } else {
        let s = compensated_sum(values.into_iter().map(|v| v.to_f64()));
        T::from_f64(s).unwrap_or_else(T::zero)
    }
}

/// Greatest common divisor of integer-valued rationals' numerators after
/// bringing them to a common denominator. Returns the common step `h` with
/// every value an integer multiple of `h`.
pub fn rational_lattice_step(values: &[Rat]) -> Option<Rat> {
    let nonzero: Vec<&Rat> = values.iter().filter(|v| !v.is_zero()).collect();
    if nonzero.is_empty() {
        return None;
    }
    let den = nonzero.iter().fold(1i128, |acc, v| acc.lcm(v.denom()));
    let g = nonzero
        .iter()
        .fold(0i128, |acc, v| acc.gcd(&(v.numer() * (den / v.denom()))));
    Some(Rat::new(g, den))
}

/// Best rational approximation `p/q` of `x` with `q <= max_den` (continued
/// fractions). Returns `None` when the approximation misses by more than `tol`.
pub fn rational_reconstruct(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 9e15 {
            break;
        }
        let a = a as i64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let approx = p1 as f64 / q1 as f64;
        if (approx - x).abs() <= tol * (1.0 + x.abs()) {
            return Some((p1, q1));
        }
        let frac = v - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 > 0 && (p1 as f64 / q1 as f64 - x).abs() <= tol * (1.0 + x.abs()) {
        Some((p1, q1))
    } else {
        None
    }
}

/// Converts a sequence of scalars to `f64`.
pub fn to_f64_vec<T: Scalar>(xs: &[T]) -> Vec<f64> {
    xs.iter().map(Scalar::to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_floor_differs_at_integers() {
        assert_eq!(2.0f64.strict_floor_i64(), 1);
        assert_eq!(2.5f64.strict_floor_i64(), 2);
        assert_eq!(Rat::from_integer(2).strict_floor_i64(), 1);
        assert_eq!(Rat::new(5, 2).strict_floor_i64(), 2);
        assert_eq!(Rat::new(-1, 2).strict_floor_i64(), -1);
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(Rat::parse_decimal("0.1"), Some(Rat::new(1, 10)));
        assert_eq!(Rat::parse_decimal("-2.5e1"), Some(Rat::from_integer(-25)));
        assert_eq!(Rat::parse_decimal("1/3"), Some(Rat::new(1, 3)));
        assert_eq!(Rat::parse_decimal("3e-2"), Some(Rat::new(3, 100)));
        assert_eq!(Rat::parse_decimal("abc"), None);
        assert_eq!(f64::parse_decimal("1/4"), Some(0.25));
    }

    #[test]
    fn dyadic_conversion() {
        assert_eq!(Rat::from_f64(0.375), Some(Rat::new(3, 8)));
        assert_eq!(Rat::from_f64(-6.0), Some(Rat::from_integer(-6)));
        assert!(Rat::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn lattice_step_of_rationals() {
        let v = [Rat::new(1, 2), Rat::new(3, 4), Rat::from_integer(2)];
        assert_eq!(rational_lattice_step(&v), Some(Rat::new(1, 4)));
        assert_eq!(rational_lattice_step(&[Rat::zero()]), None);
    }

    #[test]
    fn reconstruct_ratios() {
        assert_eq!(rational_reconstruct(0.75, 1000, 1e-12), Some((3, 4)));
        assert_eq!(rational_reconstruct(1.0 / 3.0, 1000, 1e-12), Some((1, 3)));
        assert!(rational_reconstruct(std::f64::consts::PI, 1000, 1e-12).is_none());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(v), 1.0);
    }
}
