//! Truncated power series `K[[T]]/T^m`.
//!
//! The variable `T` is any uniformizer of `K[[u − π]]`; the `unif` label only
//! records which one a series is written in. The inverse-limit case is
//! modelled by picking a large finite modulus.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::numfield::{Field, FieldElement, Valuation, Q};

#[derive(Clone, PartialEq, Eq)]
pub struct TruncSeries {
    unif: String,
    coeffs: Vec<FieldElement>,
}

impl TruncSeries {
    /// Builds a series from its first `m = coeffs.len()` coefficients.
    ///
    /// # Panics
    ///
    /// Panics if `coeffs` is empty; the zero ring is not modelled.
    pub fn new(unif: impl Into<String>, coeffs: Vec<FieldElement>) -> Self {
        assert!(!coeffs.is_empty(), "modulus must be positive");
        TruncSeries {
            unif: unif.into(),
            coeffs,
        }
    }

    pub fn zero(field: &Field, unif: &str, m: usize) -> Self {
        Self::new(unif, vec![FieldElement::zero(field); m])
    }

    pub fn constant(c: FieldElement, unif: &str, m: usize) -> Self {
        let mut s = Self::zero(c.field(), unif, m);
        s.coeffs[0] = c;
        s
    }

    pub fn one(field: &Field, unif: &str, m: usize) -> Self {
        Self::constant(FieldElement::one(field), unif, m)
    }

    /// `c·T^k` (zero if `k ≥ m`).
    pub fn monomial(c: FieldElement, k: usize, unif: &str, m: usize) -> Self {
        let mut s = Self::zero(c.field(), unif, m);
        if k < m {
            s.coeffs[k] = c;
        }
        s
    }

    /// The variable `T` itself.
    pub fn var(field: &Field, unif: &str, m: usize) -> Self {
        Self::monomial(FieldElement::one(field), 1, unif, m)
    }

    pub fn modulus(&self) -> usize {
        self.coeffs.len()
    }

    pub fn unif(&self) -> &str {
        &self.unif
    }

    pub fn field(&self) -> &Field {
        self.coeffs[0].field()
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &FieldElement {
        &self.coeffs[k]
    }

    pub fn with_unif(mut self, unif: impl Into<String>) -> Self {
        self.unif = unif.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(FieldElement::is_zero)
    }

    pub fn is_unit(&self) -> bool {
        !self.coeffs[0].is_zero()
    }

    pub fn is_uniformizer(&self) -> bool {
        self.coeffs[0].is_zero() && self.modulus() > 1 && !self.coeffs[1].is_zero()
    }

    /// Reduces (or zero-pads) to modulus `m`. Padding is only exact when the
    /// dropped information is known to vanish.
    pub fn truncate(&self, m: usize) -> Self {
        let mut coeffs: Vec<_> = self.coeffs.iter().take(m).cloned().collect();
        coeffs.resize(m, FieldElement::zero(self.field()));
        TruncSeries {
            unif: self.unif.clone(),
            coeffs,
        }
    }

    pub fn scale(&self, c: &FieldElement) -> Self {
        TruncSeries {
            unif: self.unif.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Gauss valuation: minimum coefficient valuation.
    pub fn gauss_val(&self) -> Valuation {
        self.coeffs.iter().map(FieldElement::val).min().unwrap()
    }

    pub fn pow(&self, n: u64) -> Self {
        let mut acc = Self::one(self.field(), &self.unif, self.modulus());
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn invert_unit(&self) -> Result<Self> {
        if !self.is_unit() {
            return Err(Error::NotAUnit);
        }
        let m = self.modulus();
        let inv0 = self.coeffs[0].invert()?;
        let mut out = vec![FieldElement::zero(self.field()); m];
        out[0] = inv0.clone();
        for k in 1..m {
            let mut acc = FieldElement::zero(self.field());
            for j in 1..=k {
                acc += &(&self.coeffs[j] * &out[k - j]);
            }
            out[k] = -(&acc * &inv0);
        }
        Ok(TruncSeries::new(self.unif.clone(), out))
    }

    /// Formal derivative. Exact modulo `T^{m−1}`; the top coefficient is set
    /// to zero since it depends on the unknown `T^m` coefficient.
    pub fn derivative(&self) -> Self {
        let m = self.modulus();
        let mut out = vec![FieldElement::zero(self.field()); m];
        for k in 1..m {
            out[k - 1] = self.coeffs[k].scale_int(k as i64);
        }
        TruncSeries::new(self.unif.clone(), out)
    }

    /// `T·df/dT`, exact modulo `T^m`.
    pub fn t_log_derivative(&self) -> Self {
        TruncSeries {
            unif: self.unif.clone(),
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.scale_int(k as i64))
                .collect(),
        }
    }

    /// `f / T` for `f` with vanishing constant term; the result has modulus
    /// `m − 1`.
    pub fn shift_down(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() || self.modulus() < 2 {
            return Err(Error::NotAUniformizer);
        }
        Ok(TruncSeries::new(self.unif.clone(), self.coeffs[1..].to_vec()))
    }

    /// `self(g(T))` for `g(0) = 0`, by Horner's rule. The result carries the
    /// modulus and label of `g`.
    pub fn compose(&self, g: &TruncSeries) -> Result<Self> {
        if !g.coeffs[0].is_zero() {
            return Err(Error::NotAUniformizer);
        }
        let m = g.modulus();
        let mut acc = TruncSeries::zero(self.field(), &g.unif, m);
        for c in self.coeffs.iter().take(m).rev() {
            acc = &acc * g;
            acc.coeffs[0] += c;
        }
        Ok(acc)
    }

    /// Compositional inverse: `z` with `self(z(T)) = T`.
    pub fn reversion(&self) -> Result<Self> {
        if !self.is_uniformizer() {
            return Err(Error::NotAUniformizer);
        }
        let m = self.modulus();
        let field = self.field().clone();
        let inv1 = self.coeffs[1].invert()?;
        let mut z = TruncSeries::monomial(inv1.clone(), 1, &self.unif, m);
        // Fix one coefficient per step: the coefficient of T^k in y(z) is
        // y₁·z_k + (terms in z_1..z_{k−1}).
        for k in 2..m {
            let err = self.compose(&z)?;
            let target = err.coeffs[k].clone();
            z.coeffs[k] = -(&target * &inv1);
        }
        debug_assert!({
            let check = self.compose(&z).unwrap();
            check == TruncSeries::var(&field, &self.unif, m)
        });
        Ok(z)
    }

    /// Returns `g` with `g(y(T)) = f(T)`, i.e. `f` re-expressed in the
    /// uniformizer `y`.
    pub fn rewrite_in_uniformizer(&self, y: &TruncSeries) -> Result<Self> {
        let m = self.modulus();
        if y.modulus() < m {
            return Err(Error::PrecisionTooLow {
                need: m,
                got: y.modulus(),
            });
        }
        if !y.is_uniformizer() {
            return Err(Error::NotAUniformizer);
        }
        if m == 1 {
            return Ok(self.clone());
        }
        let z = y.truncate(m).reversion()?;
        self.compose(&z)
    }
}

/// `λ_F = ∏_{n=0}^{F} E(u^{pⁿ})/E(0)` expanded in `T = u − π` modulo `T^m`.
pub fn lambda_approx(field: &Field, big_f: u32, m: usize) -> TruncSeries {
    let pi = FieldElement::pi(field);
    let p = field.p_u64();
    let c0 = Q::from_integer(field.ecoeffs()[0].clone());
    let inv_c0 = FieldElement::from_rational(field, Q::one() / c0);
    let mut acc = TruncSeries::one(field, "u-pi", m);
    for n in 0..=big_f {
        let exponent = p.pow(n);
        // (π + T)^N = Σ_k C(N, k) π^{N−k} T^k
        let mut upow = Vec::with_capacity(m);
        let mut binom = BigInt::one();
        for k in 0..m as u64 {
            if k > exponent {
                upow.push(FieldElement::zero(field));
                continue;
            }
            if k > 0 {
                binom = binom * BigInt::from(exponent - k + 1) / BigInt::from(k);
            }
            upow.push(&FieldElement::from_bigint(field, binom.clone()) * &pi.pow(exponent - k));
        }
        let x = TruncSeries::new("u-pi", upow);
        let mut ex = TruncSeries::zero(field, "u-pi", m);
        for c in field.ecoeffs().iter().rev() {
            ex = &ex * &x;
            ex.coeffs[0] += &FieldElement::from_bigint(field, c.clone());
        }
        acc = &acc * &ex.scale(&inv_c0);
    }
    acc
}

/// Lower bound on the valuation of the coefficients of `E(u^{pⁿ})/E(0) − 1`
/// in `K[[u − π]]/(u − π)^m`, i.e. how close the `n`-th factor omitted from
/// [`lambda_approx`] is to `1`: `(pⁿ − (m − 1))/e − 1`.
pub fn lambda_tail_bound(field: &Field, n: u32, m: usize) -> Valuation {
    let pn = BigInt::from(field.p_u64()).pow(n);
    let e = BigInt::from(field.e());
    let numer = pn - BigInt::from(m as u64 - 1);
    Valuation::Finite(Q::new(numer, e) - Q::one())
}

impl fmt::Debug for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for TruncSeries {
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
            write!(f, "[{c}]")?;
            if k > 0 {
                write!(f, "*T^{k}")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " mod T^{} ({})", self.modulus(), self.unif)
    }
}

impl Add for &TruncSeries {
    type Output = TruncSeries;

    fn add(self, rhs: &TruncSeries) -> TruncSeries {
        debug_assert_eq!(self.modulus(), rhs.modulus());
        TruncSeries {
            unif: self.unif.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &TruncSeries {
    type Output = TruncSeries;

    fn sub(self, rhs: &TruncSeries) -> TruncSeries {
        debug_assert_eq!(self.modulus(), rhs.modulus());
        TruncSeries {
            unif: self.unif.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &TruncSeries {
    type Output = TruncSeries;

    fn neg(self) -> TruncSeries {
        TruncSeries {
            unif: self.unif.clone(),
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl Mul for &TruncSeries {
    type Output = TruncSeries;

    fn mul(self, rhs: &TruncSeries) -> TruncSeries {
        let m = self.modulus().min(rhs.modulus());
        let mut out = vec![FieldElement::zero(self.field()); m];
        for (i, a) in self.coeffs.iter().take(m).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().take(m - i).enumerate() {
                if !b.is_zero() {
                    out[i + j] += &(a * b);
                }
            }
        }
        TruncSeries {
            unif: self.unif.clone(),
            coeffs: out,
        }
    }
}
