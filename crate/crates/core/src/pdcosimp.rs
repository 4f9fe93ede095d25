//! The truncated divided-power cosimplicial algebra `Sⁿ(R, a)/T^m`.
//!
//! `Sⁿ` is spanned by monomials `X₁^[k₁]⋯Xₙ^[kₙ]·T^j`; we keep those with
//! `Σkᵢ ≤ D` and `j < m`. Both truncations are by ideals (pd-degree and
//! `T`-degree are gradings), so every ring identity holds exactly in the
//! truncation. Only `n ≤ 2` is needed for stratifications.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::binomial;

use crate::error::{Error, Result};
use crate::numfield::{Field, FieldElement};

/// Highest cosimplicial degree modelled.
pub const MAX_DEGREE: usize = 2;

/// Exponent data of `X₁^[k₁]⋯Xₙ^[kₙ]·T^j`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub k: Vec<u32>,
    pub j: u32,
}

impl Monomial {
    pub fn pd_degree(&self) -> u32 {
        self.k.iter().sum()
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.k.iter().enumerate() {
            write!(f, "X{}^[{}]", i + 1, k)?;
        }
        write!(f, "T^{}", self.j)
    }
}

/// The parameters `(K, a, D, m)` of a truncated cosimplicial ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosimpConfig {
    a: FieldElement,
    d: u32,
    m: u32,
}

impl CosimpConfig {
    pub fn new(a: FieldElement, d: u32, m: u32) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::InvalidValuation("the scalar a must be nonzero".into()));
        }
        if m == 0 {
            return Err(Error::BadTruncationIndex { k: 0, m: 0 });
        }
        Ok(CosimpConfig { a, d, m })
    }

    pub fn field(&self) -> &Field {
        self.a.field()
    }

    pub fn a(&self) -> &FieldElement {
        &self.a
    }

    pub fn pd_cutoff(&self) -> u32 {
        self.d
    }

    pub fn modulus(&self) -> u32 {
        self.m
    }

    pub fn zero(&self, n: usize) -> PdElement {
        PdElement {
            field: self.field().clone(),
            n,
            d: self.d,
            m: self.m,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(&self, n: usize) -> PdElement {
        self.monomial(n, vec![0; n], 0, FieldElement::one(self.field()))
    }

    pub fn monomial(&self, n: usize, k: Vec<u32>, j: u32, c: FieldElement) -> PdElement {
        assert_eq!(k.len(), n);
        let mut x = self.zero(n);
        x.add_term(Monomial { k, j }, c);
        x
    }

    /// `c·T^j` in `Sⁿ`.
    pub fn t_power(&self, n: usize, j: u32, c: FieldElement) -> PdElement {
        self.monomial(n, vec![0; n], j, c)
    }

    /// `Xᵢ^[k]` in `Sⁿ`, `1 ≤ i ≤ n`.
    pub fn x_power(&self, n: usize, i: usize, k: u32) -> PdElement {
        let mut exps = vec![0; n];
        exps[i - 1] = k;
        self.monomial(n, exps, 0, FieldElement::one(self.field()))
    }

    /// `(1 + aXᵢ)^s = Σ_t s(s−1)⋯(s−t+1)·aᵗ·Xᵢ^[t]`, valid for every integer `s`.
    pub fn one_plus_ax_pow(&self, n: usize, i: usize, s: i64) -> PdElement {
        let mut out = self.zero(n);
        let mut coeff = FieldElement::one(self.field());
        for t in 0..=self.d {
            if coeff.is_zero() {
                break;
            }
            let mut exps = vec![0; n];
            exps[i - 1] = t;
            out.add_term(Monomial { k: exps, j: 0 }, coeff.clone());
            coeff = &coeff.scale_int(s - t as i64) * &self.a;
        }
        out
    }

    /// `(1 + aX₁)^{−1} = Σ n!(−a)ⁿ X₁^[n]` in `S¹`.
    pub fn inv_one_plus_ax(&self) -> PdElement {
        self.one_plus_ax_pow(1, 1, -1)
    }

    /// `(X_a − X_b)^[k] = Σᵢ (−1)ⁱ X_b^[i] X_a^[k−i]`; index 0 stands for `X₀ = 0`.
    fn difference_pd_power(&self, n: usize, xa: usize, xb: usize, k: u32) -> PdElement {
        let one = FieldElement::one(self.field());
        if xb == 0 {
            return self.x_power(n, xa, k);
        }
        let mut out = self.zero(n);
        for i in 0..=k {
            let mut exps = vec![0; n];
            exps[xb - 1] += i;
            exps[xa - 1] += k - i;
            let c = if i % 2 == 0 { one.clone() } else { -&one };
            out.add_term(Monomial { k: exps, j: 0 }, c);
        }
        out
    }

    fn check_face(&self, i: usize, x: &PdElement) -> Result<()> {
        self.check_member(x)?;
        if x.n >= MAX_DEGREE || i > x.n + 1 {
            return Err(Error::IndexOutOfRange(format!(
                "face p_{i} on S^{} (need n < {MAX_DEGREE}, i <= n + 1)",
                x.n
            )));
        }
        Ok(())
    }

    fn check_member(&self, x: &PdElement) -> Result<()> {
        if x.d != self.d || x.m != self.m || x.field != *self.field() {
            return Err(Error::DegreeMismatch(format!(
                "element has (D, m) = ({}, {}), ring has ({}, {})",
                x.d, x.m, self.d, self.m
            )));
        }
        Ok(())
    }

    /// The coface `pᵢ: Sⁿ → Sⁿ⁺¹`.
    pub fn face(&self, i: usize, x: &PdElement) -> Result<PdElement> {
        self.check_face(i, x)?;
        let n = x.n;
        let mut out = self.zero(n + 1);
        for (mono, c) in &x.terms {
            let image = if i == 0 {
                // T ↦ T(1 + aX₁), X_j ↦ (X_{j+1} − X₁)(1 + aX₁)^{−1}
                let total = mono.pd_degree() as i64;
                let mut acc = self.one_plus_ax_pow(n + 1, 1, mono.j as i64 - total);
                acc = acc.mul_unchecked(&self.t_power(n + 1, mono.j, FieldElement::one(self.field())));
                for (r, &k) in mono.k.iter().enumerate() {
                    if k > 0 {
                        acc = acc.mul_unchecked(&self.difference_pd_power(n + 1, r + 2, 1, k));
                    }
                }
                acc
            } else {
                let mut k = vec![0; n + 1];
                for (r, &kr) in mono.k.iter().enumerate() {
                    let j = r + 1;
                    let target = if j < i { j } else { j + 1 };
                    k[target - 1] = kr;
                }
                let mut single = self.zero(n + 1);
                single.add_term(Monomial { k, j: mono.j }, FieldElement::one(self.field()));
                single
            };
            out = out.add(&image.scale(c));
        }
        Ok(out)
    }

    /// The codegeneracy `σᵢ: Sⁿ⁺¹ → Sⁿ`.
    pub fn degeneracy(&self, i: usize, x: &PdElement) -> Result<PdElement> {
        self.check_member(x)?;
        if x.n == 0 || i >= x.n {
            return Err(Error::IndexOutOfRange(format!(
                "degeneracy s_{i} on S^{} (need 0 <= i < n)",
                x.n
            )));
        }
        let n = x.n - 1;
        let mut out = self.zero(n);
        for (mono, c) in &x.terms {
            if i == 0 {
                if mono.k[0] > 0 {
                    continue;
                }
                let k = mono.k[1..].to_vec();
                out.add_term(Monomial { k, j: mono.j }, c.clone());
            } else {
                // X_i and X_{i+1} both map to X_i.
                let mut k = Vec::with_capacity(n);
                k.extend_from_slice(&mono.k[..i - 1]);
                let (ka, kb) = (mono.k[i - 1], mono.k[i]);
                k.push(ka + kb);
                k.extend_from_slice(&mono.k[i + 1..]);
                let mult = binomial(BigInt::from(ka + kb), BigInt::from(ka));
                let c = c * &FieldElement::from_bigint(self.field(), mult);
                out.add_term(Monomial { k, j: mono.j }, c);
            }
        }
        Ok(out)
    }
}

/// An element of the truncated ring `Sⁿ/(T^m, pd-degree > D)`.
#[derive(Clone, PartialEq, Eq)]
pub struct PdElement {
    field: Field,
    n: usize,
    d: u32,
    m: u32,
    terms: BTreeMap<Monomial, FieldElement>,
}

impl PdElement {
    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn pd_cutoff(&self) -> u32 {
        self.d
    }

    pub fn modulus(&self) -> u32 {
        self.m
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Nonzero terms in monomial order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &FieldElement)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> FieldElement {
        self.terms
            .get(mono)
            .cloned()
            .unwrap_or_else(|| FieldElement::zero(&self.field))
    }

    /// Adds `c·mono`, dropping it if it lies outside the truncation.
    pub fn add_term(&mut self, mono: Monomial, c: FieldElement) {
        debug_assert_eq!(mono.k.len(), self.n);
        if c.is_zero() || mono.j >= self.m || mono.pd_degree() > self.d {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(x) => {
                *x += &c;
                if x.is_zero() {
                    self.terms.remove(&mono);
                }
            }
            None => {
                self.terms.insert(mono, c);
            }
        }
    }

    pub fn add(&self, other: &PdElement) -> PdElement {
        let mut out = self.clone();
        for (mono, c) in &other.terms {
            out.add_term(mono.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &PdElement) -> PdElement {
        self.add(&other.scale(&-FieldElement::one(&self.field)))
    }

    pub fn scale(&self, c: &FieldElement) -> PdElement {
        let mut out = PdElement {
            terms: BTreeMap::new(),
            ..self.clone()
        };
        if c.is_zero() {
            return out;
        }
        for (mono, x) in &self.terms {
            out.terms.insert(mono.clone(), x * c);
        }
        out
    }

    /// Divided-power product: `X^[i]·X^[j] = C(i+j, i)·X^[i+j]`, truncated.
    pub fn pd_mul(&self, other: &PdElement) -> Result<PdElement> {
        if self.n != other.n || self.d != other.d || self.m != other.m {
            return Err(Error::DegreeMismatch(format!(
                "(n, D, m) = ({}, {}, {}) vs ({}, {}, {})",
                self.n, self.d, self.m, other.n, other.d, other.m
            )));
        }
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PdElement) -> PdElement {
        let mut out = PdElement {
            terms: BTreeMap::new(),
            ..self.clone()
        };
        for (ma, ca) in &self.terms {
            let da = ma.pd_degree();
            for (mb, cb) in &other.terms {
                if ma.j + mb.j >= self.m || da + mb.pd_degree() > self.d {
                    continue;
                }
                let mut mult = BigInt::from(1);
                let k: Vec<u32> = ma
                    .k
                    .iter()
                    .zip(&mb.k)
                    .map(|(&x, &y)| {
                        if x > 0 && y > 0 {
                            mult *= binomial(BigInt::from(x + y), BigInt::from(x));
                        }
                        x + y
                    })
                    .collect();
                let c = &(ca * cb) * &FieldElement::from_bigint(&self.field, mult);
                out.add_term(Monomial { k, j: ma.j + mb.j }, c);
            }
        }
        out
    }
}

impl fmt::Debug for PdElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PdElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(mono, c)| format!("[{c}]{mono}"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
