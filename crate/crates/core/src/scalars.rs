use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("truncation orders differ: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("constant term is nonzero, element is not in the maximal ideal")]
    NotInIdeal,
    #[error("cannot parse rational {0:?}")]
    Parse(String),
}

/// Exact rational in lowest terms with positive denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Result<Self, ScalarError> {
        if denom == 0 {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), denom.into())))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Result<Self, ScalarError> {
        if denom.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn int(n: i64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn checked_div(&self, other: &Rational) -> Result<Rational, ScalarError> {
        if other.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &other.0))
    }

    pub fn recip(&self) -> Result<Rational, ScalarError> {
        Rational::one().checked_div(self)
    }

    /// 1/k!
    pub fn inv_factorial(k: usize) -> Rational {
        let mut f = BigInt::one();
        for i in 2..=k {
            f *= BigInt::from(i);
        }
        Rational(BigRational::new(BigInt::one(), f))
    }

    pub fn factorial(k: usize) -> Rational {
        let mut f = BigInt::one();
        for i in 2..=k {
            f *= BigInt::from(i);
        }
        Rational(BigRational::from_integer(f))
    }

    pub fn pow_sign(e: i64) -> Rational {
        if e.rem_euclid(2) == 0 {
            Rational::one()
        } else {
            Rational::int(-1)
        }
    }
}

pub fn rational_arith(a: &Rational, b: &Rational, op: ArithOp) -> Result<Rational, ScalarError> {
    match op {
        ArithOp::Add => Ok(a + b),
        ArithOp::Sub => Ok(a - b),
        ArithOp::Mul => Ok(a * b),
        ArithOp::Div => a.checked_div(b),
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = ScalarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let bad = || ScalarError::Parse(s.to_string());
        match t.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                Rational::from_big(n, d)
            }
            None => {
                let n: BigInt = t.parse().map_err(|_| bad())?;
                Ok(Rational(BigRational::from_integer(n)))
            }
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::int(n)
    }
}

macro_rules! rational_binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
    };
}

rational_binop!(Add, add, +);
rational_binop!(Sub, sub, -);
rational_binop!(Mul, mul, *);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

/// Element of Q[t]/(t^{N+1}).
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct TruncatedPoly {
    coeffs: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    order: usize,
    coeffs: Vec<Rational>,
}

impl TryFrom<PolyRepr> for TruncatedPoly {
    type Error = String;
    fn try_from(r: PolyRepr) -> Result<Self, String> {
        if r.coeffs.len() != r.order + 1 {
            return Err(format!(
                "expected {} coefficients for order {}, got {}",
                r.order + 1,
                r.order,
                r.coeffs.len()
            ));
        }
        Ok(TruncatedPoly { coeffs: r.coeffs })
    }
}

impl From<TruncatedPoly> for PolyRepr {
    fn from(p: TruncatedPoly) -> Self {
        PolyRepr { order: p.order(), coeffs: p.coeffs }
    }
}

impl TruncatedPoly {
    pub fn zero(order: usize) -> Self {
        TruncatedPoly { coeffs: vec![Rational::zero(); order + 1] }
    }

    pub fn constant(order: usize, c: Rational) -> Self {
        let mut p = Self::zero(order);
        p.coeffs[0] = c;
        p
    }

    pub fn one(order: usize) -> Self {
        Self::constant(order, Rational::one())
    }

    /// c·t^k, zero when k exceeds the order.
    pub fn monomial(order: usize, k: usize, c: Rational) -> Self {
        let mut p = Self::zero(order);
        if k <= order {
            p.coeffs[k] = c;
        }
        p
    }

    pub fn from_coeffs(order: usize, coeffs: Vec<Rational>) -> Self {
        let mut p = Self::zero(order);
        for (k, c) in coeffs.into_iter().enumerate().take(order + 1) {
            p.coeffs[k] = c;
        }
        p
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Rational::is_zero)
    }

    pub fn valuation(&self) -> usize {
        ideal_valuation(self)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ScalarError> {
        self.check_order(other)?;
        Ok(TruncatedPoly {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ScalarError> {
        self.check_order(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        TruncatedPoly { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    fn check_order(&self, other: &Self) -> Result<(), ScalarError> {
        if self.order() != other.order() {
            return Err(ScalarError::OrderMismatch { left: self.order(), right: other.order() });
        }
        Ok(())
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out.coeffs[i + j] += &(a * b);
                }
            }
        }
        out
    }
}

pub fn poly_mul(a: &TruncatedPoly, b: &TruncatedPoly) -> Result<TruncatedPoly, ScalarError> {
    a.checked_mul(b)
}

pub fn ideal_valuation(a: &TruncatedPoly) -> usize {
    a.coeffs.iter().position(|c| !c.is_zero()).unwrap_or(a.coeffs.len())
}

impl fmt::Display for TruncatedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})t")?,
                _ => write!(f, "({c})t^{k}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for TruncatedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[N={}] {}", self.order(), self)
    }
}

/// Panics on order mismatch; use `checked_add` for fallible addition.
impl Add for &TruncatedPoly {
    type Output = TruncatedPoly;
    fn add(self, rhs: &TruncatedPoly) -> TruncatedPoly {
        self.checked_add(rhs).expect("truncation order mismatch")
    }
}

/// Panics on order mismatch; use `checked_mul` for fallible multiplication.
impl Mul for &TruncatedPoly {
    type Output = TruncatedPoly;
    fn mul(self, rhs: &TruncatedPoly) -> TruncatedPoly {
        self.checked_mul(rhs).expect("truncation order mismatch")
    }
}

impl Neg for &TruncatedPoly {
    type Output = TruncatedPoly;
    fn neg(self) -> TruncatedPoly {
        TruncatedPoly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

/// Truncated polynomial with vanishing constant term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdealElement(TruncatedPoly);

impl IdealElement {
    pub fn new(p: TruncatedPoly) -> Result<Self, ScalarError> {
        if !p.coeff(0).is_zero() {
            return Err(ScalarError::NotInIdeal);
        }
        Ok(IdealElement(p))
    }

    pub fn t(order: usize) -> Self {
        IdealElement(TruncatedPoly::monomial(order, 1, Rational::one()))
    }

    pub fn as_poly(&self) -> &TruncatedPoly {
        &self.0
    }

    pub fn into_poly(self) -> TruncatedPoly {
        self.0
    }
}

/// Coefficient ring interface used by multilinear evaluation.
pub trait Scalar: Clone + PartialEq + fmt::Debug + fmt::Display {
    fn is_zero(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn scale(&self, c: &Rational) -> Self;
}

impl Scalar for Rational {
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: &Rational) -> Self {
        self * c
    }
}

impl Scalar for TruncatedPoly {
    fn is_zero(&self) -> bool {
        TruncatedPoly::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.order(), other.order(), "truncation order mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, c: &Rational) -> Self {
        TruncatedPoly::scale(self, c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(rational_arith(&q(1, 2), &q(1, 3), ArithOp::Add).unwrap(), q(5, 6));
        assert_eq!(q(2, 4).to_string(), "1/2");
        assert_eq!(rational_arith(&q(-3, 7), &q(7, 3), ArithOp::Mul).unwrap(), Rational::int(-1));
        assert_eq!(
            rational_arith(&q(1, 2), &Rational::zero(), ArithOp::Div),
            Err(ScalarError::DivisionByZero)
        );
        assert_eq!(Rational::zero().denom(), &BigInt::one());
        assert_eq!(q(3, -6).to_string(), "-1/2");
    }

    #[test]
    fn parse_and_serde() {
        assert_eq!("-6/4".parse::<Rational>().unwrap(), q(-3, 2));
        assert_eq!(" 7 ".parse::<Rational>().unwrap(), Rational::int(7));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        let s = serde_json::to_string(&q(5, 3)).unwrap();
        assert_eq!(s, "\"5/3\"");
        let back: Rational = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q(5, 3));
    }

    #[test]
    fn poly_examples() {
        let t1 = TruncatedPoly::monomial(1, 1, Rational::one());
        assert!(poly_mul(&t1, &t1).unwrap().is_zero());
        let a = TruncatedPoly::from_coeffs(2, vec![Rational::one(), Rational::one()]);
        let b = TruncatedPoly::from_coeffs(2, vec![Rational::one(), Rational::int(-1)]);
        let p = poly_mul(&a, &b).unwrap();
        assert_eq!(p.coeffs(), &[Rational::one(), Rational::zero(), Rational::int(-1)]);
        let t2 = TruncatedPoly::monomial(2, 1, Rational::one());
        assert!(poly_mul(&poly_mul(&t2, &t2).unwrap(), &t2).unwrap().is_zero());
        assert_eq!(
            poly_mul(&t1, &t2),
            Err(ScalarError::OrderMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(ideal_valuation(&TruncatedPoly::zero(3)), 4);
        let p = TruncatedPoly::from_coeffs(
            3,
            vec![Rational::zero(), Rational::zero(), Rational::one(), Rational::one()],
        );
        assert_eq!(ideal_valuation(&p), 2);
        assert_eq!(ideal_valuation(&TruncatedPoly::constant(2, Rational::int(5))), 0);
    }

    #[test]
    fn ideal_membership() {
        assert_eq!(
            IdealElement::new(TruncatedPoly::one(2)),
            Err(ScalarError::NotInIdeal)
        );
        assert!(IdealElement::new(TruncatedPoly::monomial(2, 1, Rational::int(3))).is_ok());
    }

    #[test]
    fn poly_serde_round_trip() {
        let p = TruncatedPoly::from_coeffs(2, vec![Rational::zero(), q(1, 2)]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"order":2,"coeffs":["0","1/2","0"]}"#);
        let back: TruncatedPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<TruncatedPoly>(r#"{"order":2,"coeffs":["0"]}"#).is_err());
    }

    fn rat() -> impl Strategy<Value = Rational> {
        (-50i64..50, 1i64..20).prop_map(|(n, d)| q(n, d))
    }

    fn poly(order: usize) -> impl Strategy<Value = TruncatedPoly> {
        proptest::collection::vec(rat(), order + 1)
            .prop_map(move |c| TruncatedPoly::from_coeffs(order, c))
    }

    fn ideal(order: usize) -> impl Strategy<Value = TruncatedPoly> {
        poly(order).prop_map(move |p| {
            let mut c = p.coeffs().to_vec();
            c[0] = Rational::zero();
            TruncatedPoly::from_coeffs(order, c)
        })
    }

    proptest! {
        #[test]
        fn field_axioms(a in rat(), b in rat(), c in rat()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a + &b, &b + &a);
            if !a.is_zero() {
                prop_assert_eq!(&a * &a.recip().unwrap(), Rational::one());
            }
            prop_assert!((&a - &a).is_zero());
        }

        #[test]
        fn poly_ring(a in poly(3), b in poly(3), c in poly(3)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn ideal_nilpotent(xs in proptest::collection::vec(ideal(3), 4)) {
            let mut p = TruncatedPoly::one(3);
            for x in &xs {
                p = &p * x;
            }
            prop_assert!(p.is_zero());
        }

        #[test]
        fn valuation_superadditive(a in poly(4), b in poly(4)) {
            let v = ideal_valuation(&(&a * &b));
            prop_assert!(v >= (ideal_valuation(&a) + ideal_valuation(&b)).min(5));
        }
    }
}
