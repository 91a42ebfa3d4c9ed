//! Scalar field abstraction.
//!
//! Every algorithm in the crate is written against [`Scalar`], which is
//! satisfied by exact rationals (`BigRational`, `Rational64`) and by the IEEE
//! floats. The vertex-algebra layers always instantiate it with
//! [`crate::Q`]; floats are only useful for quick experiments on the linear
//! algebra and finite-dimensional algebra layers, where exact zero tests on
//! floats are of course fragile.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{FromPrimitive, Num, One, Signed, Zero};

/// A field in which the crate's algorithms can be run.
pub trait Scalar:
    Num + Clone + Debug + Display + PartialEq + Signed + Send + Sync + 'static
{
    fn from_int(n: i64) -> Self;

    /// `n / d`, with `d != 0`.
    fn from_frac(n: i64, d: i64) -> Self {
        Self::from_int(n) / Self::from_int(d)
    }

    fn inv(&self) -> Self {
        Self::one() / self.clone()
    }

    /// Exact textual form used in every report and file format.
    fn to_exact_string(&self) -> String {
        self.to_string()
    }

    fn parse_exact(s: &str) -> Option<Self>;

    /// Exact rational value, when the scalar has one.
    fn to_ratio(&self) -> Option<BigRational>;

    fn from_ratio(r: &BigRational) -> Self;

    /// Binomial coefficient `C(n, k)` for arbitrary integer `n` and `k >= 0`.
    fn binomial(n: i64, k: i64) -> Self {
        if k < 0 {
            return Self::zero();
        }
        let mut acc = Self::one();
        for j in 0..k {
            acc = acc * Self::from_int(n - j) / Self::from_int(j + 1);
        }
        acc
    }
}

impl Scalar for BigRational {
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn parse_exact(s: &str) -> Option<Self> {
        parse_ratio::<BigInt>(s).map(|(n, d)| BigRational::new(n, d))
    }

    fn to_ratio(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn from_ratio(r: &BigRational) -> Self {
        r.clone()
    }
}

impl Scalar for Rational64 {
    fn from_int(n: i64) -> Self {
        Rational64::from_integer(n)
    }

    fn parse_exact(s: &str) -> Option<Self> {
        parse_ratio::<i64>(s).map(|(n, d)| Rational64::new(n, d))
    }

    fn to_ratio(&self) -> Option<BigRational> {
        Some(BigRational::new(BigInt::from(*self.numer()), BigInt::from(*self.denom())))
    }

    fn from_ratio(r: &BigRational) -> Self {
        use num_traits::ToPrimitive;
        Rational64::new(r.numer().to_i64().expect("numerator fits i64"), r.denom().to_i64().expect("denominator fits i64"))
    }
}

impl Scalar for f64 {
    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn parse_exact(s: &str) -> Option<Self> {
        if let Some((n, d)) = parse_ratio::<i64>(s) {
            return Some(n as f64 / d as f64);
        }
        s.trim().parse().ok()
    }

    fn to_ratio(&self) -> Option<BigRational> {
        BigRational::from_float(*self)
    }

    fn from_ratio(r: &BigRational) -> Self {
        use num_traits::ToPrimitive;
        r.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    fn from_int(n: i64) -> Self {
        n as f32
    }

    fn parse_exact(s: &str) -> Option<Self> {
        if let Some((n, d)) = parse_ratio::<i64>(s) {
            return Some(n as f32 / d as f32);
        }
        s.trim().parse().ok()
    }

    fn to_ratio(&self) -> Option<BigRational> {
        BigRational::from_float(*self)
    }

    fn from_ratio(r: &BigRational) -> Self {
        use num_traits::ToPrimitive;
        r.to_f32().unwrap_or(f32::NAN)
    }
}

fn parse_ratio<I>(s: &str) -> Option<(I, I)>
where
    I: FromStr + Zero + One + FromPrimitive + Clone,
{
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let ok = |t: &str| {
        let t = t.strip_prefix('-').unwrap_or(t);
        !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())
    };
    if !ok(n) || !ok(d) || d.starts_with('-') {
        return None;
    }
    let n = n.parse::<I>().ok()?;
    let d = d.parse::<I>().ok()?;
    if d.is_zero() {
        return None;
    }
    Some((n, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Q;

    #[test]
    fn parse_and_print_round_trip() {
        let x = Q::parse_exact("-6/4").unwrap();
        assert_eq!(x.to_exact_string(), "-3/2");
        assert_eq!(Q::parse_exact("7").unwrap(), Q::from_int(7));
        assert!(Q::parse_exact("1/0").is_none());
        assert!(Q::parse_exact("1.5").is_none());
        assert!(Q::parse_exact("").is_none());
        assert!(Q::parse_exact("3/-4").is_none());
    }

    #[test]
    fn binomials_with_negative_top() {
        assert_eq!(Q::binomial(5, 2), Q::from_int(10));
        assert_eq!(Q::binomial(-1, 3), Q::from_int(-1));
        assert_eq!(Q::binomial(-2, 2), Q::from_int(3));
        assert_eq!(Q::binomial(2, 3), Q::from_int(0));
        assert_eq!(Q::binomial(4, -1), Q::from_int(0));
        assert_eq!(Q::binomial(0, 0), Q::from_int(1));
    }

    #[test]
    fn floats_share_the_interface() {
        assert_eq!(f64::binomial(6, 3), 20.0);
        assert_eq!(f64::parse_exact("1/4"), Some(0.25));
        assert_eq!(Rational64::parse_exact("2/6"), Some(Rational64::new(1, 3)));
    }
}
