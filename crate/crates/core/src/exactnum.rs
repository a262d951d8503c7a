//! Exact arithmetic over dyadic rationals and the quadratic extension by √2.
//!
//! Every length, height, coordinate, and distance in this crate is either a
//! [`Dyadic`] (an integer divided by a power of two) or a [`Quad`]
//! (`a + b·√2` with dyadic `a`, `b`). Both have canonical representations,
//! decidable equality, and exact sign computation, so every inequality the
//! verification layer checks is decided without floating point.
//!
//! Euclidean distances are square roots of dyadics and generally live outside
//! `Quad`; they are compared against `Quad` values through
//! [`cmp_sqrt_vs_quad`], which eliminates the radical by squaring (the only
//! irrationality on the right-hand side is √2, which one squaring removes).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("negative radicand: √n is only defined for n ≥ 0")]
    NegativeRadicand,
}

/// A dyadic rational `num / 2^exp` in canonical form: `num` is odd or the
/// exponent is zero, and zero is represented as `0 / 2^0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u32,
}

impl Dyadic {
    pub fn zero() -> Self {
        Dyadic { num: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Self {
        Dyadic::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::from_parts(BigInt::from(n), 0)
    }

    /// `n / 2^exp` for small constants, e.g. `Dyadic::new(3, 2)` is 3/4.
    pub fn new(n: i64, exp: u32) -> Self {
        Dyadic::from_parts(BigInt::from(n), exp as i64)
    }

    /// 2^k (k may be negative).
    pub fn pow2(k: i64) -> Self {
        Dyadic::from_parts(BigInt::from(1), -k)
    }

    /// Builds `num / 2^exp`, normalizing. A negative `exp` multiplies the
    /// numerator up so the stored exponent is always a natural number.
    pub fn from_parts(mut num: BigInt, exp: i64) -> Self {
        let mut e: u32 = if exp < 0 {
            num <<= (-exp) as usize;
            0
        } else {
            u32::try_from(exp).expect("dyadic exponent out of range")
        };
        if num.is_zero() {
            return Dyadic { num, exp: 0 };
        }
        let strip = (num.trailing_zeros().unwrap_or(0) as u32).min(e);
        if strip > 0 {
            num >>= strip as usize;
            e -= strip;
        }
        Dyadic { num, exp: e }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn sign(&self) -> i32 {
        match self.num.sign() {
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
        }
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic { num: self.num.abs(), exp: self.exp }
    }

    pub fn half(&self) -> Dyadic {
        Dyadic::from_parts(self.num.clone(), self.exp as i64 + 1)
    }

    pub fn double(&self) -> Dyadic {
        Dyadic::from_parts(self.num.clone(), self.exp as i64 - 1)
    }

    /// `self · 2^k`.
    pub fn mul_pow2(&self, k: i64) -> Dyadic {
        Dyadic::from_parts(self.num.clone(), self.exp as i64 - k)
    }

    pub fn sq(&self) -> Dyadic {
        self * self
    }

    /// Exact midpoint of two dyadics.
    pub fn midpoint(a: &Dyadic, b: &Dyadic) -> Dyadic {
        (a + b).half()
    }

    /// Exact quotient when it is again dyadic, `None` otherwise (the divisor's
    /// odd part must divide the numerator).
    pub fn checked_div(&self, d: &Dyadic) -> Option<Dyadic> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Dyadic::zero());
        }
        let v2 = d.num.trailing_zeros().unwrap_or(0);
        let odd = &d.num >> v2 as usize;
        if !(&self.num % &odd).is_zero() {
            return None;
        }
        Some(Dyadic::from_parts(
            &self.num / &odd,
            self.exp as i64 + v2 as i64 - d.exp as i64,
        ))
    }

    /// `⌊self · 2^k⌋` (used only for spatial bucketing).
    pub fn floor_mul_pow2(&self, k: u32) -> BigInt {
        if self.exp <= k {
            &self.num << (k - self.exp) as usize
        } else {
            &self.num >> (self.exp - k) as usize
        }
    }

    /// Lossy conversion for rendering; never used in verification paths.
    pub fn to_f64(&self) -> f64 {
        self.num.to_f64().unwrap_or(f64::NAN) / 2f64.powi(self.exp as i32)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exp.max(other.exp);
        let a = &self.num << (e - self.exp) as usize;
        let b = &other.num << (e - other.exp) as usize;
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        let a = &self.num << (e - self.exp) as usize;
        let b = &rhs.num << (e - rhs.exp) as usize;
        Dyadic::from_parts(a + b, e as i64)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let e = self.exp.max(rhs.exp);
        let a = &self.num << (e - self.exp) as usize;
        let b = &rhs.num << (e - rhs.exp) as usize;
        Dyadic::from_parts(a - b, e as i64)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::from_parts(&self.num * &rhs.num, self.exp as i64 + rhs.exp as i64)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic { num: -self.num.clone(), exp: self.exp }
    }
}

macro_rules! forward_owned_binop {
    ($t:ty, $tr:ident, $m:ident) => {
        impl $tr for $t {
            type Output = $t;
            fn $m(self, rhs: $t) -> $t {
                (&self).$m(&rhs)
            }
        }
    };
}

forward_owned_binop!(Dyadic, Add, add);
forward_owned_binop!(Dyadic, Sub, sub);
forward_owned_binop!(Dyadic, Mul, mul);

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DyadicRepr {
    num: String,
    exp: u32,
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DyadicRepr { num: self.num.to_string(), exp: self.exp }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = DyadicRepr::deserialize(d)?;
        let num: BigInt = repr
            .num
            .parse()
            .map_err(|_| D::Error::custom("invalid integer string in dyadic"))?;
        Ok(Dyadic::from_parts(num, repr.exp as i64))
    }
}

/// An element `rat + irr·√2` of ℚ(√2) with dyadic coefficients. The
/// representation is unique because √2 is irrational.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quad {
    rat: Dyadic,
    irr: Dyadic,
}

impl Quad {
    pub fn new(rat: Dyadic, irr: Dyadic) -> Self {
        Quad { rat, irr }
    }

    pub fn zero() -> Self {
        Quad::new(Dyadic::zero(), Dyadic::zero())
    }

    pub fn one() -> Self {
        Quad::from_dyadic(Dyadic::one())
    }

    pub fn from_dyadic(d: Dyadic) -> Self {
        Quad::new(d, Dyadic::zero())
    }

    pub fn from_int(n: i64) -> Self {
        Quad::from_dyadic(Dyadic::from_int(n))
    }

    /// `d·√2`.
    pub fn sqrt2_times(d: Dyadic) -> Self {
        Quad::new(Dyadic::zero(), d)
    }

    pub fn sqrt2() -> Self {
        Quad::sqrt2_times(Dyadic::one())
    }

    pub fn rat(&self) -> &Dyadic {
        &self.rat
    }

    pub fn irr(&self) -> &Dyadic {
        &self.irr
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.irr.is_zero()
    }

    pub fn is_dyadic(&self) -> bool {
        self.irr.is_zero()
    }

    pub fn half(&self) -> Quad {
        Quad::new(self.rat.half(), self.irr.half())
    }

    pub fn double(&self) -> Quad {
        Quad::new(self.rat.double(), self.irr.double())
    }

    pub fn scale(&self, d: &Dyadic) -> Quad {
        Quad::new(&self.rat * d, &self.irr * d)
    }

    pub fn sq(&self) -> Quad {
        self * self
    }

    /// Exact sign of the real value `rat + irr·√2`, computed by comparing
    /// `rat²` with `2·irr²` when the two terms have opposite signs.
    pub fn sign(&self) -> i32 {
        let (sr, si) = (self.rat.sign(), self.irr.sign());
        match (sr, si) {
            (0, s) => s,
            (s, 0) => s,
            (a, b) if a == b => a,
            _ => {
                let rr = self.rat.sq();
                let ii = self.irr.sq().double();
                match rr.cmp(&ii) {
                    // rat² = 2·irr² is impossible for nonzero dyadics: the
                    // 2-adic valuations have opposite parity.
                    Ordering::Equal => unreachable!("√2 is irrational"),
                    Ordering::Greater => sr,
                    Ordering::Less => si,
                }
            }
        }
    }

    pub fn abs(&self) -> Quad {
        if self.sign() < 0 {
            -self
        } else {
            self.clone()
        }
    }

    pub fn min(a: &Quad, b: &Quad) -> Quad {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    pub fn max(a: &Quad, b: &Quad) -> Quad {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// Exact quotient when it is again a `Quad` with dyadic coefficients,
    /// which for the ratios arising here means `self = λ·d` for a dyadic λ.
    pub fn checked_div_to_dyadic(&self, d: &Quad) -> Option<Dyadic> {
        if d.is_zero() {
            return None;
        }
        let lambda = if !d.rat.is_zero() {
            self.rat.checked_div(&d.rat)?
        } else {
            self.irr.checked_div(&d.irr)?
        };
        if &d.scale(&lambda) == self {
            Some(lambda)
        } else {
            None
        }
    }

    /// Lossy conversion for rendering; never used in verification paths.
    pub fn to_f64(&self) -> f64 {
        self.rat.to_f64() + self.irr.to_f64() * std::f64::consts::SQRT_2
    }
}

impl Ord for Quad {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self - other).sign() {
            0 => Ordering::Equal,
            s if s > 0 => Ordering::Greater,
            _ => Ordering::Less,
        }
    }
}

impl PartialOrd for Quad {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Quad {
    type Output = Quad;
    fn add(self, rhs: &Quad) -> Quad {
        Quad::new(&self.rat + &rhs.rat, &self.irr + &rhs.irr)
    }
}

impl Sub for &Quad {
    type Output = Quad;
    fn sub(self, rhs: &Quad) -> Quad {
        Quad::new(&self.rat - &rhs.rat, &self.irr - &rhs.irr)
    }
}

impl Mul for &Quad {
    type Output = Quad;
    fn mul(self, rhs: &Quad) -> Quad {
        // (a + b√2)(c + d√2) = (ac + 2bd) + (ad + bc)√2
        let rat = &(&self.rat * &rhs.rat) + &(&self.irr * &rhs.irr).double();
        let irr = &(&self.rat * &rhs.irr) + &(&self.irr * &rhs.rat);
        Quad::new(rat, irr)
    }
}

impl Neg for &Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        Quad::new(-&self.rat, -&self.irr)
    }
}

forward_owned_binop!(Quad, Add, add);
forward_owned_binop!(Quad, Sub, sub);
forward_owned_binop!(Quad, Mul, mul);

impl Neg for Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        -&self
    }
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.irr.is_zero() {
            write!(f, "{}", self.rat)
        } else if self.rat.is_zero() {
            write!(f, "({})√2", self.irr)
        } else {
            write!(f, "{} + ({})√2", self.rat, self.irr)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct QuadRepr {
    rat: Dyadic,
    irr: Dyadic,
}

impl Serialize for Quad {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        QuadRepr { rat: self.rat.clone(), irr: self.irr.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quad {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = QuadRepr::deserialize(d)?;
        Ok(Quad::new(repr.rat, repr.irr))
    }
}

/// Exact sign of `√n − q` for a nonnegative dyadic `n`.
///
/// When `q > 0` the comparison reduces to `n` vs `q²`; the remaining √2 in
/// `q²` is handled by the sign computation of [`Quad`]. At most two exact
/// squarings are performed in total.
pub fn cmp_sqrt_vs_quad(n: &Dyadic, q: &Quad) -> Result<Ordering, NumError> {
    if n.sign() < 0 {
        return Err(NumError::NegativeRadicand);
    }
    if q.sign() <= 0 {
        if q.is_zero() && n.is_zero() {
            return Ok(Ordering::Equal);
        }
        if q.is_zero() {
            return Ok(Ordering::Greater);
        }
        return Ok(Ordering::Greater);
    }
    let diff = &Quad::from_dyadic(n.clone()) - &q.sq();
    Ok(match diff.sign() {
        0 => Ordering::Equal,
        s if s > 0 => Ordering::Greater,
        _ => Ordering::Less,
    })
}

/// `√n ≤ q`, the form almost every bound check in the crate takes.
pub fn sqrt_le_quad(n: &Dyadic, q: &Quad) -> Result<bool, NumError> {
    Ok(cmp_sqrt_vs_quad(n, q)? != Ordering::Greater)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: i64, e: u32) -> Dyadic {
        Dyadic::new(n, e)
    }

    fn q(rn: i64, re: u32, in_: i64, ie: u32) -> Quad {
        Quad::new(d(rn, re), d(in_, ie))
    }

    #[test]
    fn normalization_is_canonical() {
        assert_eq!(d(4, 2), d(1, 0));
        assert_eq!(d(6, 1), d(3, 0));
        assert_eq!(d(0, 7), Dyadic::zero());
        assert_eq!(Dyadic::from_parts(BigInt::from(3), -2), d(12, 0));
        assert_eq!(d(-8, 3), d(-1, 0));
    }

    #[test]
    fn quad_arith_examples() {
        // 1 + √2
        assert_eq!(&Quad::one() + &Quad::sqrt2(), q(1, 0, 1, 0));
        // √2 · √2 = 2
        assert_eq!(&Quad::sqrt2() * &Quad::sqrt2(), Quad::from_int(2));
        // √2/2 − 1/2 is positive
        let diff = &Quad::sqrt2_times(d(1, 1)) - &Quad::from_dyadic(d(1, 1));
        assert_eq!(diff, q(-1, 1, 1, 1));
        assert_eq!(diff.sign(), 1);
    }

    #[test]
    fn quad_sign_examples() {
        assert_eq!(Quad::zero().sign(), 0);
        assert_eq!(q(-1, 0, 1, 0).sign(), 1);
        // 3 − 2√2: compare 9 against 8.
        assert_eq!(q(3, 0, -2, 0).sign(), 1);
        assert_eq!(q(-3, 0, 2, 0).sign(), -1);
        assert_eq!(q(1, 0, -1, 0).sign(), -1);
    }

    #[test]
    fn cmp_sqrt_examples() {
        // √2 vs √2
        assert_eq!(
            cmp_sqrt_vs_quad(&d(2, 0), &Quad::sqrt2()).unwrap(),
            Ordering::Equal
        );
        // √(1/2) vs √2/2
        assert_eq!(
            cmp_sqrt_vs_quad(&d(1, 1), &Quad::sqrt2_times(d(1, 1))).unwrap(),
            Ordering::Equal
        );
        // √1 vs 1/2 + √2/2 ≈ 1.457
        assert_eq!(
            cmp_sqrt_vs_quad(&Dyadic::one(), &q(1, 1, 1, 1)).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            cmp_sqrt_vs_quad(&d(-1, 0), &Quad::zero()),
            Err(NumError::NegativeRadicand)
        );
        // Negative right-hand side: √n is never below it.
        assert_eq!(
            cmp_sqrt_vs_quad(&d(1, 0), &q(-5, 0, 0, 0)).unwrap(),
            Ordering::Greater
        );
        assert_eq!(
            cmp_sqrt_vs_quad(&Dyadic::zero(), &Quad::zero()).unwrap(),
            Ordering::Equal
        );
    }

    #[test]
    fn checked_division() {
        assert_eq!(d(3, 3).checked_div(&d(3, 0)), Some(d(1, 3)));
        assert_eq!(d(1, 0).checked_div(&d(3, 0)), None);
        assert_eq!(d(6, 0).checked_div(&d(3, 1)), Some(d(4, 0)));
        assert_eq!(d(5, 2).checked_div(&Dyadic::zero()), None);
        let total = Quad::sqrt2_times(d(8, 0));
        let cum = Quad::sqrt2_times(d(3, 0));
        assert_eq!(cum.checked_div_to_dyadic(&total), Some(d(3, 3)));
        let mixed = q(1, 0, 1, 0);
        assert_eq!(mixed.scale(&d(3, 2)).checked_div_to_dyadic(&mixed), Some(d(3, 2)));
        assert_eq!(Quad::one().checked_div_to_dyadic(&Quad::sqrt2()), None);
    }

    #[test]
    fn ordering_is_total_and_exact() {
        // 1 + √2 < 5/2  (since (3/2)² = 9/4 > 2)
        assert!(q(1, 0, 1, 0) < Quad::from_dyadic(d(5, 1)));
        // 7/5 is not dyadic; nearby: 181/128 < √2 < 182/128
        assert!(Quad::from_dyadic(d(181, 7)) < Quad::sqrt2());
        assert!(Quad::sqrt2() < Quad::from_dyadic(d(91, 6)));
    }

    #[test]
    fn floor_bucketing() {
        assert_eq!(d(3, 1).floor_mul_pow2(0), BigInt::from(1));
        assert_eq!(d(-3, 1).floor_mul_pow2(0), BigInt::from(-2));
        assert_eq!(d(5, 3).floor_mul_pow2(2), BigInt::from(2));
    }

    #[test]
    fn serde_round_trip() {
        let x = q(-7, 3, 5, 1);
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"rat":{"num":"-7","exp":3},"irr":{"num":"5","exp":1}}"#);
        let y: Quad = serde_json::from_str(&s).unwrap();
        assert_eq!(x, y);
        // Non-normalized input normalizes on load.
        let z: Dyadic = serde_json::from_str(r#"{"num":"4","exp":2}"#).unwrap();
        assert_eq!(z, Dyadic::one());
    }
}
