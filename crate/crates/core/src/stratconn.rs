//! Stratifications over the truncated cosimplicial ring and log connections
//! over `K[[T]]/T^m`, with the functors between them.
//!
//! A free module `M = (K[[T]]/T^m)^l` is viewed as a `K`-space with basis
//! `T^k·e_j`, flattened to index `k·l + j`. Operators `φₙ` are only
//! `K`-linear, so they are stored as `lm × lm` matrices.

use num_bigint::BigInt;
use num_integer::binomial;

use crate::error::{Error, Result};
use crate::linalg::{KLinearOp, KMatrix};
use crate::numfield::{Field, FieldElement};
use crate::pdcosimp::{CosimpConfig, Monomial, PdElement};
use crate::series::TruncSeries;

/// A free module of rank `l` over `K[[T]]/T^m` with log connection
/// `∇(Σ f_j e_j) = Σ T f_j′ e_j + Σ f_j N e_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogConnection {
    field: Field,
    unif: String,
    m: usize,
    n: Vec<Vec<TruncSeries>>,
}

impl LogConnection {
    /// `n[i][j]` is the `e_i`-component of `∇e_j`.
    pub fn new(unif: impl Into<String>, n: Vec<Vec<TruncSeries>>) -> Result<Self> {
        let unif = unif.into();
        let l = n.len();
        let first = n
            .first()
            .and_then(|row| row.first())
            .ok_or_else(|| Error::DegreeMismatch("connection matrix is empty".into()))?;
        let field = first.field().clone();
        let m = first.modulus();
        for row in &n {
            if row.len() != l {
                return Err(Error::DegreeMismatch("connection matrix is not square".into()));
            }
            for s in row {
                if s.modulus() != m {
                    return Err(Error::DegreeMismatch(format!(
                        "entry has modulus {}, expected {m}",
                        s.modulus()
                    )));
                }
                if *s.field() != field {
                    return Err(Error::RingMismatch("entries over different fields".into()));
                }
            }
        }
        let n = n
            .into_iter()
            .map(|row| row.into_iter().map(|s| s.with_unif(unif.clone())).collect())
            .collect();
        Ok(LogConnection { field, unif, m, n })
    }

    /// `∇ = T·d/dT` on the free module of rank `l`.
    pub fn trivial(field: &Field, unif: &str, l: usize, m: usize) -> Self {
        Self::from_constant(&KMatrix::zero(field, l, l), unif, m)
    }

    /// Connection with constant matrix `N(T) = c`.
    pub fn from_constant(c: &KMatrix, unif: &str, m: usize) -> Self {
        let n = (0..c.rows())
            .map(|i| {
                (0..c.cols())
                    .map(|j| TruncSeries::constant(c.get(i, j).clone(), unif, m))
                    .collect()
            })
            .collect();
        LogConnection {
            field: c.field().clone(),
            unif: unif.to_string(),
            m,
            n,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn unif(&self) -> &str {
        &self.unif
    }

    pub fn rank(&self) -> usize {
        self.n.len()
    }

    pub fn modulus(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &[Vec<TruncSeries>] {
        &self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> &TruncSeries {
        &self.n[i][j]
    }

    pub fn with_unif(&self, unif: &str) -> Self {
        LogConnection::new(unif, self.n.clone()).expect("shape already validated")
    }

    /// `N(0)`, the residue of `∇` modulo `T`.
    pub fn residual(&self) -> KMatrix {
        let l = self.rank();
        let mut out = KMatrix::zero(&self.field, l, l);
        for i in 0..l {
            for j in 0..l {
                out.set(i, j, self.n[i][j].coeff(0).clone());
            }
        }
        out
    }

    /// `∇` as a `K`-linear operator on the flattened basis `T^k e_j`.
    pub fn operator(&self) -> KLinearOp {
        let (l, m) = (self.rank(), self.m);
        let mut out = KMatrix::zero(&self.field, l * m, l * m);
        for k in 0..m {
            for j in 0..l {
                let col = k * l + j;
                let diag = out.get(col, col) + &FieldElement::from_int(&self.field, k as i64);
                out.set(col, col, diag);
                for i in 0..l {
                    for s in 0..m - k {
                        let c = self.n[i][j].coeff(s);
                        if !c.is_zero() {
                            let row = (k + s) * l + i;
                            let x = out.get(row, col) + c;
                            out.set(row, col, x);
                        }
                    }
                }
            }
        }
        out
    }
}

/// A stratification `ε(x) = Σ φₙ(x) X₁^[n]`, stored up to pd-degree `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stratification {
    l: usize,
    m: usize,
    a: FieldElement,
    phi: Vec<KLinearOp>,
}

impl Stratification {
    /// `phi[n]` is `φₙ`; the pd cutoff is `phi.len() − 1`.
    pub fn new(l: usize, m: usize, a: FieldElement, phi: Vec<KLinearOp>) -> Result<Self> {
        if phi.is_empty() {
            return Err(Error::DegreeMismatch("empty operator family".into()));
        }
        if l == 0 || m == 0 {
            return Err(Error::DegreeMismatch("rank and modulus must be positive".into()));
        }
        for op in &phi {
            if op.rows() != l * m || op.cols() != l * m {
                return Err(Error::DegreeMismatch(format!(
                    "operator is {}x{}, expected {}x{}",
                    op.rows(),
                    op.cols(),
                    l * m,
                    l * m
                )));
            }
            if op.field() != a.field() {
                return Err(Error::RingMismatch("operator over another field".into()));
            }
        }
        Ok(Stratification { l, m, a, phi })
    }

    pub fn field(&self) -> &Field {
        self.a.field()
    }

    pub fn rank(&self) -> usize {
        self.l
    }

    pub fn modulus(&self) -> usize {
        self.m
    }

    pub fn pd_cutoff(&self) -> usize {
        self.phi.len() - 1
    }

    pub fn a(&self) -> &FieldElement {
        &self.a
    }

    pub fn phi(&self) -> &[KLinearOp] {
        &self.phi
    }

    /// Replaces `φₙ`; used to build deliberately broken families.
    pub fn with_phi(&self, n: usize, op: KLinearOp) -> Result<Self> {
        let mut phi = self.phi.clone();
        *phi
            .get_mut(n)
            .ok_or_else(|| Error::IndexOutOfRange(format!("phi_{n}")))? = op;
        Stratification::new(self.l, self.m, self.a.clone(), phi)
    }

    /// Tensor product over `K[[T]]/T^m`: `ε(x⊗y) = ε(x)·ε(y)`.
    pub fn tensor(&self, other: &Stratification) -> Result<Self> {
        if self.m != other.m || self.a != other.a || self.phi.len() != other.phi.len() {
            return Err(Error::RingMismatch(
                "tensor factors need equal m, a and D".into(),
            ));
        }
        let (l1, l2, m) = (self.l, other.l, self.m);
        let l = l1 * l2;
        let field = self.field().clone();
        let d = self.pd_cutoff();
        let mut phi = vec![KMatrix::zero(&field, l * m, l * m); d + 1];
        for (n, out) in phi.iter_mut().enumerate() {
            for r in 0..=n {
                let c = FieldElement::from_bigint(&field, binomial(BigInt::from(n), BigInt::from(r)));
                let (p, q) = (&self.phi[r], &other.phi[n - r]);
                for k in 0..m {
                    for i in 0..l1 {
                        for j in 0..l2 {
                            let col = k * l + i * l2 + j;
                            // φ_r(T^k e_i) ⊗ φ_{n−r}(f_j), multiplied in K[[T]]
                            for s in 0..m {
                                for i2 in 0..l1 {
                                    let x = p.get(s * l1 + i2, k * l1 + i);
                                    if x.is_zero() {
                                        continue;
                                    }
                                    let x = x * &c;
                                    for t in 0..m - s {
                                        for j2 in 0..l2 {
                                            let y = q.get(t * l2 + j2, j);
                                            if y.is_zero() {
                                                continue;
                                            }
                                            let row = (s + t) * l + i2 * l2 + j2;
                                            let v = out.get(row, col) + &(&x * y);
                                            out.set(row, col, v);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Stratification::new(l, m, self.a.clone(), phi)
    }
}

/// `φ₀ = id`, `φ_{n+1} = (φ₁ − n·a)∘φₙ`, for `n < len`.
pub fn product_family(phi1: &KLinearOp, a: &FieldElement, len: usize) -> Vec<KLinearOp> {
    let size = phi1.rows();
    let field = phi1.field();
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    out.push(KMatrix::identity(field, size));
    for n in 1..len {
        let shift = KMatrix::scalar(&a.scale_int((n - 1) as i64), size);
        let step = phi1 - &shift;
        let next = &step * &out[n - 1];
        out.push(next);
    }
    out
}

/// The stratification attached to `∇`: `φₙ = ∏_{i<n}(a∇ − i·a)`.
pub fn from_connection(conn: &LogConnection, a: &FieldElement, d: usize) -> Stratification {
    let phi1 = conn.operator().scale(a);
    let phi = product_family(&phi1, a, d + 1);
    Stratification::new(conn.rank(), conn.modulus(), a.clone(), phi)
        .expect("shapes agree by construction")
}

/// Recovers `∇ = φ₁/a`.
pub fn to_connection(strat: &Stratification, unif: &str) -> Result<LogConnection> {
    if !strat.phi[0].is_identity() {
        return Err(Error::NotAStratification("phi_0 is not the identity".into()));
    }
    let (l, m) = (strat.l, strat.m);
    let field = strat.field().clone();
    if strat.phi.len() < 2 {
        return Ok(LogConnection::trivial(&field, unif, l, m));
    }
    let report = check_leibniz(strat);
    if let Some(w) = report.witness {
        return Err(Error::LeibnizViolation(format!(
            "f = T^{}, x = basis vector {}",
            w.power, w.basis
        )));
    }
    let inv_a = strat.a.invert()?;
    let nabla = strat.phi[1].scale(&inv_a);
    let n = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| {
                    let coeffs = (0..m)
                        .map(|s| nabla.get(s * l + i, j).clone())
                        .collect();
                    TruncSeries::new(unif, coeffs)
                })
                .collect()
        })
        .collect();
    LogConnection::new(unif, n)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeibnizWitness {
    /// `f = T^power`.
    pub power: usize,
    /// Flattened index of `x`.
    pub basis: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeibnizReport {
    pub witness: Option<LeibnizWitness>,
}

impl LeibnizReport {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Multiplication by `T^r` on the flattened module.
fn t_shift(field: &Field, l: usize, m: usize, r: usize) -> KMatrix {
    let mut out = KMatrix::zero(field, l * m, l * m);
    for k in 0..m.saturating_sub(r) {
        for j in 0..l {
            out.set((k + r) * l + j, k * l + j, FieldElement::one(field));
        }
    }
    out
}

/// Checks `φ₁(T^r x) = T^r φ₁(x) + a·r·T^r x` for all `r < m` and basis `x`.
pub fn check_leibniz(strat: &Stratification) -> LeibnizReport {
    let (l, m) = (strat.l, strat.m);
    let field = strat.field();
    let Some(phi1) = strat.phi.get(1) else {
        return LeibnizReport { witness: None };
    };
    for r in 0..m {
        let shift = t_shift(field, l, m, r);
        let lhs = phi1 * &shift;
        let rhs = &(&shift * phi1) + &shift.scale(&strat.a.scale_int(r as i64));
        let diff = &lhs - &rhs;
        for col in 0..l * m {
            if diff.column(col).iter().any(|x| !x.is_zero()) {
                return LeibnizReport {
                    witness: Some(LeibnizWitness { power: r, basis: col }),
                };
            }
        }
    }
    LeibnizReport { witness: None }
}

/// First coefficient at which the cocycle identity fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocycleWitness {
    /// `X₁^[k₁]X₂^[k₂]T^j`; `j` is the `T`-degree of the first bad output.
    pub monomial: Monomial,
    /// Flattened index of the input basis vector.
    pub basis: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocycleReport {
    pub degeneracy_ok: bool,
    pub witness: Option<CocycleWitness>,
}

impl CocycleReport {
    pub fn passed(&self) -> bool {
        self.degeneracy_ok && self.witness.is_none()
    }
}

/// Checks `p₂*(ε)∘p₀*(ε) = p₁*(ε)` in `S²` up to pd-degree `D`, and
/// `σ₀*(ε) = id`.
///
/// With `ε(x) = Σ φₙ(x)X₁^[n]` the left side is
/// `Σ φ_l φ_N(x) · X₁^[l]·p₀(X₁^[N])` and the right side `Σ φₙ(x) X₂^[n]`;
/// the scalar pd-polynomials are expanded in `pdcosimp` and matched
/// monomial by monomial, lowest total degree first.
pub fn check_cocycle(strat: &Stratification) -> CocycleReport {
    let field = strat.field().clone();
    let d = strat.pd_cutoff();
    let degeneracy_ok = strat.phi[0].is_identity();
    // T is absorbed into the module, so the X-part lives in S²/T.
    let cfg = CosimpConfig::new(strat.a.clone(), d as u32, 1).expect("a is nonzero");

    let size = strat.l * strat.m;
    let mut lhs: std::collections::BTreeMap<Vec<u32>, KMatrix> = Default::default();
    for big_n in 0..=d {
        let face = cfg
            .face(0, &cfg.x_power(1, 1, big_n as u32))
            .expect("p_0 on S^1");
        for l in 0..=d - big_n {
            let poly: PdElement = cfg
                .x_power(2, 1, l as u32)
                .pd_mul(&face)
                .expect("same ring");
            if poly.is_zero() {
                continue;
            }
            let op = &strat.phi[l] * &strat.phi[big_n];
            for (mono, c) in poly.terms() {
                let entry = lhs
                    .entry(mono.k.clone())
                    .or_insert_with(|| KMatrix::zero(&field, size, size));
                *entry = &*entry + &op.scale(c);
            }
        }
    }

    let mut monomials: Vec<Vec<u32>> = Vec::new();
    for total in 0..=d as u32 {
        for n in 0..=total {
            monomials.push(vec![total - n, n]);
        }
    }
    let zero = KMatrix::zero(&field, size, size);
    for k in monomials {
        let left = lhs.get(&k).unwrap_or(&zero);
        let right = if k[0] == 0 { &strat.phi[k[1] as usize] } else { &zero };
        let diff = left - right;
        if diff.is_zero() {
            continue;
        }
        for col in 0..size {
            if let Some(row) = (0..size).find(|&r| !diff.get(r, col).is_zero()) {
                return CocycleReport {
                    degeneracy_ok,
                    witness: Some(CocycleWitness {
                        monomial: Monomial {
                            k,
                            j: (row / strat.l) as u32,
                        },
                        basis: col,
                    }),
                };
            }
        }
    }
    CocycleReport {
        degeneracy_ok,
        witness: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyLemmaReport {
    /// `(n, r)`: the identity for `φₙ` fails at the coefficient of `X^[r]`.
    pub failure: Option<(usize, usize)>,
}

impl KeyLemmaReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Coefficient of `X^[r]` in
/// `Σ_{l,m′} φ_l φ_{m′+n} (1+aX)^{−m′−n} (−1)^{m′} C(l+m′, l) X^[l+m′]`.
pub fn key_lemma_coefficient(
    family: &[KLinearOp],
    a: &FieldElement,
    n: usize,
    r: usize,
) -> Result<KLinearOp> {
    let need = n + r + 1;
    if family.len() < need {
        return Err(Error::FamilyTooShort {
            need,
            got: family.len(),
        });
    }
    let field = a.field();
    let size = family[0].rows();
    let mut acc = KMatrix::zero(field, size, size);
    for l in 0..=r {
        for mp in 0..=r - l {
            let t = r - l - mp;
            // (−m′−n)(−m′−n−1)⋯ t factors, times aᵗ·C(r, t)
            let mut falling = BigInt::from(1);
            for i in 0..t {
                falling *= BigInt::from(-((mp + n + i) as i64));
            }
            if falling == BigInt::from(0) {
                continue;
            }
            let sign = if mp % 2 == 0 { 1 } else { -1 };
            let mut c = falling
                * binomial(BigInt::from(l + mp), BigInt::from(l))
                * binomial(BigInt::from(r), BigInt::from(t))
                * sign;
            if c == BigInt::from(0) {
                continue;
            }
            let coeff = &FieldElement::from_bigint(field, std::mem::take(&mut c)) * &a.pow(t as u64);
            let op = &family[l] * &family[mp + n];
            acc = &acc + &op.scale(&coeff);
        }
    }
    Ok(acc)
}

/// Checks the recurrence identity for `n ≤ n_max` up to `X^[D]`, scanning
/// `X`-degree first so failures surface at the lowest coefficient.
pub fn verify_key_lemma(
    family: &[KLinearOp],
    a: &FieldElement,
    n_max: usize,
    d: usize,
) -> Result<KeyLemmaReport> {
    let need = n_max + d + 1;
    if family.len() < need {
        return Err(Error::FamilyTooShort {
            need,
            got: family.len(),
        });
    }
    if !family[0].is_identity() {
        return Err(Error::NotAStratification("phi_0 is not the identity".into()));
    }
    for r in 0..=d {
        for n in 0..=n_max {
            let coeff = key_lemma_coefficient(family, a, n, r)?;
            let ok = if r == 0 {
                coeff == family[n]
            } else {
                coeff.is_zero()
            };
            if !ok {
                return Ok(KeyLemmaReport {
                    failure: Some((n, r)),
                });
            }
        }
    }
    Ok(KeyLemmaReport { failure: None })
}
