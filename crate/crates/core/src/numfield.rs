//! Exact arithmetic in a totally ramified extension `K = Q_p[u]/(E(u))`.
//!
//! Elements are stored in the power basis `1, π, ..., π^{e-1}` with exact
//! rational coordinates. Valuations are normalized so that `v(p) = 1`, hence
//! `v(π) = 1/e`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

/// `v_p(n)` for a nonzero integer.
pub fn vp_int(p: &BigInt, n: &BigInt) -> Option<i64> {
    if n.is_zero() {
        return None;
    }
    let mut n = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(p);
        if !r.is_zero() {
            return Some(v);
        }
        n = q;
        v += 1;
    }
}

/// `v_p(q)` for a nonzero rational.
pub fn vp_rat(p: &BigInt, q: &Q) -> Option<i64> {
    Some(vp_int(p, q.numer())? - vp_int(p, q.denom())?)
}

/// `v_p(n!) = (n - s_p(n)) / (p - 1)`.
pub fn vp_factorial(p: u64, n: u64) -> u64 {
    let mut digits = 0;
    let mut k = n;
    while k > 0 {
        digits += k % p;
        k /= p;
    }
    (n - digits) / (p - 1)
}

fn is_prime(n: &BigInt) -> bool {
    if *n < BigInt::from(2) {
        return false;
    }
    let mut d = BigInt::from(2);
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            return false;
        }
        d += 1;
    }
    true
}

/// A valuation in `Q ∪ {+∞}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(Q),
    Infinity,
}

impl Valuation {
    pub fn int(v: i64) -> Self {
        Valuation::Finite(Q::from_integer(v.into()))
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Valuation::Finite(Q::new(n.into(), d.into()))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Valuation::Infinity)
    }

    pub fn finite(&self) -> Option<&Q> {
        match self {
            Valuation::Finite(q) => Some(q),
            Valuation::Infinity => None,
        }
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Valuation::Finite(q) => q.is_positive(),
            Valuation::Infinity => true,
        }
    }
}

impl Add for &Valuation {
    type Output = Valuation;

    fn add(self, rhs: &Valuation) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinity,
        }
    }
}

impl Add for Valuation {
    type Output = Valuation;

    fn add(self, rhs: Valuation) -> Valuation {
        &self + &rhs
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(q) => write!(f, "{}/{}", q.numer(), q.denom()),
            Valuation::Infinity => write!(f, "inf"),
        }
    }
}

/// The defining data of `K`: a prime `p` and an Eisenstein polynomial `E(u)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSpec {
    p: BigInt,
    /// Coefficients of `E`, low to high, monic.
    ecoeffs: Vec<BigInt>,
}

pub type Field = Arc<FieldSpec>;

impl FieldSpec {
    /// Validates primality of `p` and the Eisenstein condition on `E`.
    ///
    /// `ecoeffs` runs low-to-high and must include the leading `1`.
    pub fn new(p: BigInt, ecoeffs: Vec<BigInt>) -> Result<Field> {
        if !is_prime(&p) {
            return Err(Error::NotPrime(p.to_string()));
        }
        if ecoeffs.len() < 2 {
            return Err(Error::NotEisenstein("degree must be at least 1".into()));
        }
        if !ecoeffs.last().unwrap().is_one() {
            return Err(Error::NotEisenstein("E must be monic".into()));
        }
        let e = ecoeffs.len() - 1;
        for (i, c) in ecoeffs[..e].iter().enumerate() {
            if !(c % &p).is_zero() {
                return Err(Error::NotEisenstein(format!(
                    "coefficient c{i} = {c} is not divisible by {p}"
                )));
            }
        }
        if (&ecoeffs[0] % (&p * &p)).is_zero() {
            return Err(Error::NotEisenstein(format!(
                "constant term {} is divisible by {}^2",
                ecoeffs[0], p
            )));
        }
        Ok(Arc::new(FieldSpec { p, ecoeffs }))
    }

    pub fn from_ints(p: i64, ecoeffs: &[i64]) -> Result<Field> {
        Self::new(p.into(), ecoeffs.iter().map(|&c| c.into()).collect())
    }

    pub fn p(&self) -> &BigInt {
        &self.p
    }

    /// `p` as a machine integer; panics for absurdly large primes.
    pub fn p_u64(&self) -> u64 {
        u64::try_from(&self.p).expect("prime does not fit in u64")
    }

    pub fn e(&self) -> usize {
        self.ecoeffs.len() - 1
    }

    pub fn ecoeffs(&self) -> &[BigInt] {
        &self.ecoeffs
    }
}

/// An element `Σ aᵢ πⁱ` of `K`.
#[derive(Clone)]
pub struct FieldElement {
    field: Field,
    coords: Vec<Q>,
}

impl FieldElement {
    pub fn zero(field: &Field) -> Self {
        FieldElement {
            coords: vec![Q::zero(); field.e()],
            field: Arc::clone(field),
        }
    }

    pub fn one(field: &Field) -> Self {
        Self::from_rational(field, Q::one())
    }

    pub fn from_int(field: &Field, n: i64) -> Self {
        Self::from_rational(field, Q::from_integer(n.into()))
    }

    pub fn from_bigint(field: &Field, n: BigInt) -> Self {
        Self::from_rational(field, Q::from_integer(n))
    }

    pub fn from_rational(field: &Field, q: Q) -> Self {
        let mut x = Self::zero(field);
        x.coords[0] = q;
        x
    }

    /// The uniformizer `π`, the class of `u`.
    pub fn pi(field: &Field) -> Self {
        Self::from_poly(field, vec![Q::zero(), Q::one()])
    }

    /// Reduces an arbitrary polynomial in `π` modulo `E(π) = 0`.
    pub fn from_poly(field: &Field, mut poly: Vec<Q>) -> Self {
        let e = field.e();
        while poly.len() > e {
            let c = poly.pop().unwrap();
            if c.is_zero() {
                continue;
            }
            let shift = poly.len() - e;
            for (i, ec) in field.ecoeffs[..e].iter().enumerate() {
                poly[shift + i] -= &c * Q::from_integer(ec.clone());
            }
        }
        poly.resize(e, Q::zero());
        FieldElement {
            field: Arc::clone(field),
            coords: poly,
        }
    }

    /// Builds an element from exactly `e` coordinates.
    pub fn from_coords(field: &Field, coords: Vec<Q>) -> Result<Self> {
        if coords.len() != field.e() {
            return Err(Error::parse(
                "coords",
                format!("expected {} coordinates, got {}", field.e(), coords.len()),
            ));
        }
        Ok(FieldElement {
            field: Arc::clone(field),
            coords,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn coords(&self) -> &[Q] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coords[0].is_one() && self.coords[1..].iter().all(Zero::is_zero)
    }

    /// Returns the rational value if the element lies in `Q`.
    pub fn as_rational(&self) -> Option<&Q> {
        self.coords[1..]
            .iter()
            .all(Zero::is_zero)
            .then(|| &self.coords[0])
    }

    /// Returns the integer value if the element lies in `Z`.
    pub fn as_integer(&self) -> Option<BigInt> {
        self.as_rational()
            .filter(|q| q.is_integer())
            .map(|q| q.to_integer())
    }

    pub fn same_field(&self, other: &FieldElement) -> bool {
        Arc::ptr_eq(&self.field, &other.field) || self.field == other.field
    }

    pub fn scale(&self, q: &Q) -> Self {
        FieldElement {
            field: Arc::clone(&self.field),
            coords: self.coords.iter().map(|c| c * q).collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> Self {
        self.scale(&Q::from_integer(n.into()))
    }

    /// `min_i (v_p(aᵢ) + i/e)`, or `+∞` for zero.
    pub fn val(&self) -> Valuation {
        let e = self.field.e() as i64;
        self.coords
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                vp_rat(&self.field.p, c).map(|v| Q::new((v * e + i as i64).into(), e.into()))
            })
            .min()
            .map_or(Valuation::Infinity, Valuation::Finite)
    }

    pub fn invert(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::ZeroInversion);
        }
        let modulus: Vec<Q> = self
            .field
            .ecoeffs
            .iter()
            .map(|c| Q::from_integer(c.clone()))
            .collect();
        let s = poly::inverse_mod(&self.coords, &modulus);
        Ok(Self::from_poly(&self.field, s))
    }

    pub fn pow(&self, mut n: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(&self.field);
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            n >>= 1;
        }
        acc
    }

    /// `sup_{k ∈ Z} val(α − k)`.
    ///
    /// Integers are dense in `Z_p` and the basis terms `πⁱ` for `i ≥ 1` have
    /// pairwise distinct fractional valuations, so only the constant
    /// coordinate can be moved by subtracting an integer.
    pub fn dist_to_integers(&self) -> Valuation {
        let e = self.field.e() as i64;
        let p = &self.field.p;
        let m1 = self.coords[1..]
            .iter()
            .enumerate()
            .filter_map(|(i, c)| {
                vp_rat(p, c).map(|v| Q::new((v * e + i as i64 + 1).into(), e.into()))
            })
            .min()
            .map_or(Valuation::Infinity, Valuation::Finite);
        match vp_rat(p, &self.coords[0]) {
            Some(v0) if v0 < 0 => std::cmp::min(Valuation::int(v0), m1),
            _ => m1,
        }
    }
}

/// `E'(π)`.
pub fn eval_deriv_at_pi(field: &Field) -> FieldElement {
    let deriv: Vec<Q> = field
        .ecoeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| Q::from_integer(c * BigInt::from(i)))
        .collect();
    FieldElement::from_poly(field, deriv)
}

/// The scalar `a = −E'(π)` of the prismatic cosimplicial ring.
pub fn a_prismatic(field: &Field) -> FieldElement {
    -eval_deriv_at_pi(field)
}

/// The scalar `a = −π·E'(π)` of the log-prismatic cosimplicial ring.
pub fn a_log(field: &Field) -> FieldElement {
    -(&FieldElement::pi(field) * &eval_deriv_at_pi(field))
}

mod poly {
    use super::Q;
    use num_traits::Zero;

    fn trim(a: &mut Vec<Q>) {
        while a.last().is_some_and(Zero::is_zero) {
            a.pop();
        }
    }

    fn sub_mul(a: &[Q], b: &[Q], q: &[Q]) -> Vec<Q> {
        // a - b*q
        let mut out = a.to_vec();
        for (i, bi) in b.iter().enumerate() {
            for (j, qj) in q.iter().enumerate() {
                if out.len() <= i + j {
                    out.resize(i + j + 1, Q::zero());
                }
                out[i + j] -= bi * qj;
            }
        }
        trim(&mut out);
        out
    }

    fn divmod(a: &[Q], b: &[Q]) -> (Vec<Q>, Vec<Q>) {
        let mut r = a.to_vec();
        trim(&mut r);
        let db = b.len() - 1;
        let lead = b[db].clone();
        let mut q = vec![Q::zero(); r.len().saturating_sub(db)];
        while r.len() > db {
            let shift = r.len() - 1 - db;
            let c = r.last().unwrap() / &lead;
            for (i, bi) in b.iter().enumerate() {
                r[shift + i] -= &c * bi;
            }
            q[shift] = c;
            trim(&mut r);
        }
        (q, r)
    }

    /// Inverse of `a` modulo the irreducible `m` via extended Euclid.
    pub(super) fn inverse_mod(a: &[Q], m: &[Q]) -> Vec<Q> {
        let (mut r0, mut r1) = (m.to_vec(), a.to_vec());
        trim(&mut r1);
        let (mut s0, mut s1) = (Vec::<Q>::new(), vec![Q::from_integer(1.into())]);
        while r1.len() > 1 {
            let (q, r) = divmod(&r0, &r1);
            let s = sub_mul(&s0, &s1, &q);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        // r1 is a nonzero constant since gcd(a, m) = 1.
        let c = r1[0].clone();
        s1.iter().map(|x| x / &c).collect()
    }
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.coords == other.coords && self.same_field(other)
    }
}

impl Eq for FieldElement {}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sep = if first { "" } else { " + " };
            first = false;
            match i {
                0 => write!(f, "{sep}{c}")?,
                1 => write!(f, "{sep}({c})*pi")?,
                _ => write!(f, "{sep}({c})*pi^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl Add for &FieldElement {
    type Output = FieldElement;

    fn add(self, rhs: &FieldElement) -> FieldElement {
        debug_assert!(self.same_field(rhs));
        FieldElement {
            field: Arc::clone(&self.field),
            coords: self
                .coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl AddAssign<&FieldElement> for FieldElement {
    fn add_assign(&mut self, rhs: &FieldElement) {
        for (a, b) in self.coords.iter_mut().zip(&rhs.coords) {
            *a += b;
        }
    }
}

impl Sub for &FieldElement {
    type Output = FieldElement;

    fn sub(self, rhs: &FieldElement) -> FieldElement {
        debug_assert!(self.same_field(rhs));
        FieldElement {
            field: Arc::clone(&self.field),
            coords: self
                .coords
                .iter()
                .zip(&rhs.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        FieldElement {
            field: Arc::clone(&self.field),
            coords: self.coords.iter().map(|a| -a).collect(),
        }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;

    fn neg(self) -> FieldElement {
        -&self
    }
}

impl Mul for &FieldElement {
    type Output = FieldElement;

    fn mul(self, rhs: &FieldElement) -> FieldElement {
        debug_assert!(self.same_field(rhs));
        let e = self.field.e();
        if e == 1 {
            return FieldElement {
                field: Arc::clone(&self.field),
                coords: vec![&self.coords[0] * &rhs.coords[0]],
            };
        }
        let mut prod = vec![Q::zero(); 2 * e - 1];
        for (i, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coords.iter().enumerate() {
                if !b.is_zero() {
                    prod[i + j] += a * b;
                }
            }
        }
        FieldElement::from_poly(&self.field, prod)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: &FieldElement) -> FieldElement {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    fn qsqrt3() -> Field {
        FieldSpec::from_ints(3, &[-3, 0, 1]).unwrap()
    }

    #[test]
    fn valuation_examples() {
        let f = FieldSpec::from_ints(3, &[-3, 1]).unwrap();
        assert_eq!(FieldElement::from_int(&f, 3).val(), Valuation::int(1));
        let k = qsqrt3();
        assert_eq!(FieldElement::pi(&k).val(), Valuation::frac(1, 2));
        let x = FieldElement::from_coords(&k, vec![q(1, 2), q(1, 1)]).unwrap();
        assert_eq!(x.val(), Valuation::int(0));
        assert_eq!(FieldElement::zero(&k).val(), Valuation::Infinity);
    }

    #[test]
    fn inversion() {
        let k = qsqrt3();
        let one = FieldElement::one(&k);
        assert_eq!(one.invert().unwrap(), one);
        let pi = FieldElement::pi(&k);
        let expected = FieldElement::from_coords(&k, vec![q(0, 1), q(1, 3)]).unwrap();
        assert_eq!(pi.invert().unwrap(), expected);
        assert_eq!(FieldElement::zero(&k).invert(), Err(Error::ZeroInversion));

        let cubic = FieldSpec::from_ints(3, &[3, 3, 0, 1]).unwrap();
        let x = FieldElement::from_coords(&cubic, vec![q(2, 5), q(-1, 1), q(7, 3)]).unwrap();
        assert!((&x * &x.invert().unwrap()).is_one());
    }

    #[test]
    fn derivative_at_pi() {
        let f = FieldSpec::from_ints(5, &[-5, 1]).unwrap();
        assert!(eval_deriv_at_pi(&f).is_one());
        let k = qsqrt3();
        assert_eq!(eval_deriv_at_pi(&k), FieldElement::pi(&k).scale_int(2));
        let cubic = FieldSpec::from_ints(3, &[3, 3, 0, 1]).unwrap();
        let d = eval_deriv_at_pi(&cubic);
        assert_eq!(d.coords(), &[q(3, 1), q(0, 1), q(3, 1)]);
        assert_eq!(d.val(), Valuation::int(1));
        // a_log = -π E'(π) = -2π^2 = -6 in Q_3(√3)
        assert_eq!(a_log(&k), FieldElement::from_int(&k, -6));
    }

    #[test]
    fn distance_to_integers() {
        let f = FieldSpec::from_ints(3, &[-3, 1]).unwrap();
        let half = FieldElement::from_rational(&f, q(1, 2));
        assert_eq!(half.dist_to_integers(), Valuation::Infinity);
        let third = FieldElement::from_rational(&f, q(1, 3));
        assert_eq!(third.dist_to_integers(), Valuation::int(-1));
        let k = qsqrt3();
        let pi3 = FieldElement::pi(&k).scale(&q(1, 3));
        assert_eq!(pi3.dist_to_integers(), Valuation::frac(-1, 2));
    }

    #[test]
    fn eisenstein_is_enforced() {
        assert!(matches!(
            FieldSpec::from_ints(3, &[-9, 0, 1]),
            Err(Error::NotEisenstein(_))
        ));
        assert!(matches!(
            FieldSpec::from_ints(3, &[-3, 1, 1]),
            Err(Error::NotEisenstein(_))
        ));
        assert!(matches!(
            FieldSpec::from_ints(4, &[-2, 1]),
            Err(Error::NotPrime(_))
        ));
        assert!(matches!(
            FieldSpec::from_ints(3, &[-3, 0, 2]),
            Err(Error::NotEisenstein(_))
        ));
    }

    #[test]
    fn factorial_valuation() {
        // 10! = 2^8 * 3^4 * 5^2 * 7
        assert_eq!(vp_factorial(2, 10), 8);
        assert_eq!(vp_factorial(3, 10), 4);
        assert_eq!(vp_factorial(5, 10), 2);
    }
}
