//! Log connections: algebra, Sen weights, nilpotency, classification,
//! change of uniformizer and de Rham cohomology.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::KMatrix;
use crate::numfield::{a_log, a_prismatic, vp_rat, Field, FieldElement, Valuation, Q};
use crate::series::{lambda_approx, TruncSeries};
use crate::stratconn::LogConnection;

fn check_compatible(m1: &LogConnection, m2: &LogConnection) -> Result<()> {
    if m1.field() != m2.field() {
        return Err(Error::RingMismatch("connections over different fields".into()));
    }
    if m1.unif() != m2.unif() {
        return Err(Error::RingMismatch(format!(
            "uniformizers {} and {}",
            m1.unif(),
            m2.unif()
        )));
    }
    if m1.modulus() != m2.modulus() {
        return Err(Error::RingMismatch(format!(
            "moduli {} and {}",
            m1.modulus(),
            m2.modulus()
        )));
    }
    Ok(())
}

/// `N₁ ⊗ I + I ⊗ N₂`, basis `e_i ⊗ f_j` at index `i·l₂ + j`.
pub fn tensor(m1: &LogConnection, m2: &LogConnection) -> Result<LogConnection> {
    check_compatible(m1, m2)?;
    let (l1, l2, m) = (m1.rank(), m2.rank(), m1.modulus());
    let zero = TruncSeries::zero(m1.field(), m1.unif(), m);
    let mut n = vec![vec![zero.clone(); l1 * l2]; l1 * l2];
    for i in 0..l1 {
        for j in 0..l2 {
            for i2 in 0..l1 {
                for j2 in 0..l2 {
                    let mut s = zero.clone();
                    if j == j2 {
                        s = &s + m1.entry(i2, i);
                    }
                    if i == i2 {
                        s = &s + m2.entry(j2, j);
                    }
                    n[i2 * l2 + j2][i * l2 + j] = s;
                }
            }
        }
    }
    LogConnection::new(m1.unif(), n)
}

/// The dual connection, matrix `−Nᵗ`.
pub fn dual(m: &LogConnection) -> LogConnection {
    let l = m.rank();
    let n = (0..l)
        .map(|i| (0..l).map(|j| -m.entry(j, i)).collect())
        .collect();
    LogConnection::new(m.unif(), n).expect("shape preserved")
}

/// Breuil–Kisin twist: `N + n·I`.
pub fn bk_twist(m: &LogConnection, n: i64) -> LogConnection {
    let l = m.rank();
    let shift = FieldElement::from_int(m.field(), n);
    let rows = (0..l)
        .map(|i| {
            (0..l)
                .map(|j| {
                    let mut s = m.entry(i, j).clone();
                    if i == j {
                        s = &s + &TruncSeries::constant(shift.clone(), m.unif(), m.modulus());
                    }
                    s
                })
                .collect()
        })
        .collect();
    LogConnection::new(m.unif(), rows).expect("shape preserved")
}

/// Re-expresses `M` in the uniformizer `y`: `∇_y = (y/(T·y′))·∇_T`, then
/// every entry is rewritten as a series in `y`. Needs `y` modulo `T^{m+1}`.
pub fn change_uniformizer(
    m: &LogConnection,
    y: &TruncSeries,
    new_label: &str,
) -> Result<LogConnection> {
    let modulus = m.modulus();
    if !y.is_uniformizer() {
        return Err(Error::NotAUniformizer);
    }
    if y.modulus() < modulus + 1 {
        return Err(Error::PrecisionTooLow {
            need: modulus + 1,
            got: y.modulus(),
        });
    }
    let y = y.truncate(modulus + 1).with_unif(m.unif());
    let y_over_t = y.shift_down()?;
    let dy = y.derivative().truncate(modulus);
    let c = &y_over_t * &dy.invert_unit()?;
    let l = m.rank();
    let mut rows = Vec::with_capacity(l);
    for i in 0..l {
        let mut row = Vec::with_capacity(l);
        for j in 0..l {
            let scaled = &c * m.entry(i, j);
            row.push(scaled.rewrite_in_uniformizer(&y)?.with_unif(new_label));
        }
        rows.push(row);
    }
    LogConnection::new(new_label, rows)
}

/// `T` as a series in `y`: the coordinate change undoing `y`.
pub fn inverse_uniformizer(y: &TruncSeries, label: &str) -> Result<TruncSeries> {
    Ok(y.reversion()?.with_unif(label))
}

/// The Kummer-tower operator: `M` rewritten in the uniformizer `λ_F`.
#[derive(Debug, Clone)]
pub struct KummerSen {
    pub connection: LogConnection,
    pub lambda: TruncSeries,
    /// Whether `(1/(uλ′))·(uλ/T) = (1/λ′)·(λ/T)` held exactly, `u = π + T`.
    pub normalization_ok: bool,
}

pub fn kummer_sen_operator(m: &LogConnection, big_f: u32) -> Result<KummerSen> {
    let field = m.field();
    let modulus = m.modulus();
    let lambda = lambda_approx(field, big_f, modulus + 1).with_unif(m.unif());
    let connection = change_uniformizer(m, &lambda, &format!("lambda{big_f}"))?;

    let lam_over_t = lambda.shift_down()?;
    let dl = lambda.derivative().truncate(modulus);
    let u = &TruncSeries::var(field, m.unif(), modulus)
        + &TruncSeries::constant(FieldElement::pi(field), m.unif(), modulus);
    let lhs = &(&u * &dl).invert_unit()? * &(&u * &lam_over_t);
    let rhs = &dl.invert_unit()? * &lam_over_t;
    Ok(KummerSen {
        connection,
        lambda: lambda.with_unif("u-pi"),
        normalization_ok: lhs == rhs,
    })
}

/// Per-weight classification data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightRecord {
    pub weight: FieldElement,
    pub dist: Valuation,
    pub margin_prism: Valuation,
    pub margin_log: Valuation,
    /// An integer `k` with `val(α − k) = dist`, when `dist` is finite.
    pub nearest_integer: Option<BigInt>,
}

impl WeightRecord {
    pub fn new(weight: FieldElement) -> Self {
        let field = weight.field().clone();
        let dist = weight.dist_to_integers();
        let margin_prism = &a_prismatic(&field).val() + &dist;
        let margin_log = &a_log(&field).val() + &dist;
        let nearest_integer = nearest_integer(&weight, &dist);
        WeightRecord {
            weight,
            dist,
            margin_prism,
            margin_log,
            nearest_integer,
        }
    }
}

fn nearest_integer(alpha: &FieldElement, dist: &Valuation) -> Option<BigInt> {
    let d = dist.finite()?;
    let p = alpha.field().p().clone();
    let a0 = &alpha.coords()[0];
    match vp_rat(&p, a0) {
        Some(v) if v < 0 => return Some(BigInt::zero()),
        None => return Some(BigInt::zero()),
        _ => {}
    }
    if !d.is_positive() {
        return Some(BigInt::zero());
    }
    let exp = d.ceil().to_integer();
    let exp: u32 = exp.try_into().ok()?;
    let modulus = p.pow(exp);
    let den = a0.denom().mod_floor(&modulus);
    let inv = den.extended_gcd(&modulus).x.mod_floor(&modulus);
    Some((a0.numer() * inv).mod_floor(&modulus))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenWeightReport {
    /// `det(x − N(0))`, low-to-high.
    pub charpoly: Vec<FieldElement>,
    pub split: bool,
    /// Roots found, with multiplicity, in discovery order.
    pub weights: Vec<WeightRecord>,
}

fn eval_poly(poly: &[FieldElement], x: &FieldElement) -> FieldElement {
    let mut acc = FieldElement::zero(x.field());
    for c in poly.iter().rev() {
        acc = &(&acc * x) + c;
    }
    acc
}

/// Divides by `x − α`, assuming `α` is a root.
fn deflate(poly: &[FieldElement], alpha: &FieldElement) -> Vec<FieldElement> {
    let deg = poly.len() - 1;
    let mut out = vec![FieldElement::zero(alpha.field()); deg];
    let mut carry = FieldElement::zero(alpha.field());
    for k in (1..=deg).rev() {
        carry = &poly[k] + &(&carry * alpha);
        out[k - 1] = carry.clone();
    }
    out
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    if n.is_zero() || n > BigInt::from(1_000_000) {
        return vec![BigInt::one()];
    }
    let n: u64 = n.try_into().expect("bounded");
    let mut out = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(BigInt::from(d));
            if d * d != n {
                out.push(BigInt::from(n / d));
            }
        }
        d += 1;
    }
    out.sort();
    out
}

/// Root candidates `±(d/q)·πʲ + k` from the coordinates of the constant term.
fn rational_candidates(field: &Field, c0: &FieldElement) -> Vec<FieldElement> {
    let mut nums = vec![BigInt::one()];
    let mut dens = vec![BigInt::one()];
    for c in c0.coords() {
        if !c.is_zero() {
            nums.extend(divisors(c.numer()));
            dens.extend(divisors(c.denom()));
        }
    }
    nums.sort();
    nums.dedup();
    dens.sort();
    dens.dedup();
    let mut out = Vec::new();
    for j in 0..field.e() {
        let pij = FieldElement::pi(field).pow(j as u64);
        for d in &nums {
            for q in &dens {
                let r = Q::new(d.clone(), q.clone());
                out.push(pij.scale(&r));
                out.push(pij.scale(&-r));
            }
        }
    }
    out
}

/// Exact characteristic polynomial of `N(0)` and the roots that can be
/// found in `K` by testing candidates.
pub fn residual_sen(m: &LogConnection, extra_candidates: &[FieldElement]) -> SenWeightReport {
    eigen_report(&m.residual(), extra_candidates)
}

/// Characteristic polynomial and `K`-rational eigenvalues of a square matrix.
pub fn eigen_report(res: &KMatrix, extra_candidates: &[FieldElement]) -> SenWeightReport {
    let field = res.field().clone();
    let charpoly = res.charpoly();
    let mut poly = charpoly.clone();
    let mut weights = Vec::new();

    let mut base: Vec<FieldElement> = extra_candidates.to_vec();
    base.extend((0..res.rows()).map(|i| res.get(i, i).clone()));
    base.push(FieldElement::zero(&field));
    let mut tried_constant: Option<FieldElement> = None;
    loop {
        let mut progress = false;
        if poly.len() > 1 && tried_constant.as_ref() != Some(&poly[0]) {
            tried_constant = Some(poly[0].clone());
            base.extend(rational_candidates(&field, &poly[0]));
        }
        'outer: for b in &base {
            for k in -10i64..=10 {
                if poly.len() <= 1 {
                    break 'outer;
                }
                let cand = b + &FieldElement::from_int(&field, k);
                while poly.len() > 1 && eval_poly(&poly, &cand).is_zero() {
                    poly = deflate(&poly, &cand);
                    weights.push(WeightRecord::new(cand.clone()));
                    progress = true;
                }
            }
        }
        if !progress || poly.len() <= 1 {
            break;
        }
    }
    SenWeightReport {
        charpoly,
        split: poly.len() == 1,
        weights,
    }
}

/// Probe parameters. Configuration, not mathematics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeConfig {
    pub max_n: usize,
    pub threshold: i64,
    pub window: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            max_n: 200,
            threshold: 50,
            window: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NilpotencyStatus {
    ProvenNilpotent,
    ProvenNotNilpotent,
    ProbeConvergent,
    ProbeDivergent,
    Unknown,
}

impl NilpotencyStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NilpotencyStatus::ProvenNilpotent => "ProvenNilpotent",
            NilpotencyStatus::ProvenNotNilpotent => "ProvenNotNilpotent",
            NilpotencyStatus::ProbeConvergent => "ProbeConvergent",
            NilpotencyStatus::ProbeDivergent => "ProbeDivergent",
            NilpotencyStatus::Unknown => "Unknown",
        }
    }

    pub fn is_nilpotent(self) -> bool {
        matches!(
            self,
            NilpotencyStatus::ProvenNilpotent | NilpotencyStatus::ProbeConvergent
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NilpotencyReport {
    pub status: NilpotencyStatus,
    pub weights: Vec<WeightRecord>,
    /// `GaussVal(aⁿ∏_{i<n}(N(0) − i))` for `n = 0, 1, …`.
    pub trace: Vec<Valuation>,
}

/// How `Σ_{i<n} val(β − i)` grows with `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum WeightGrowth {
    /// `β ∈ Z≥0`: the product vanishes for `n > β`.
    Terminating,
    /// `β ∈ Z_p` otherwise: grows like `v_p(n!)`, slope `1/(p−1)`.
    Factorial { negative_integer: bool },
    /// Grows like `n·μ` up to a bounded error.
    Linear(Q),
}

/// Mean of `min(v_p(a₀ − i), m₁)` over integers `i`, for `m₁ ≥ 0`.
fn mean_truncated_valuation(p: &BigInt, m1: &Q) -> Q {
    let fl = m1.floor().to_integer();
    let fl: u32 = fl.try_into().unwrap_or(u32::MAX);
    let mut acc = Q::zero();
    let mut pk = Q::one();
    let pq = Q::from_integer(p.clone());
    for _ in 0..fl.min(4096) {
        pk /= &pq;
        acc += &pk;
    }
    let frac = m1 - m1.floor();
    if !frac.is_zero() {
        acc += frac * (pk / pq);
    }
    acc
}

pub(crate) fn weight_growth(beta: &FieldElement) -> WeightGrowth {
    let p = beta.field().p().clone();
    match beta.dist_to_integers() {
        Valuation::Infinity => match beta.as_integer() {
            Some(k) if !k.is_negative() => WeightGrowth::Terminating,
            Some(_) => WeightGrowth::Factorial {
                negative_integer: true,
            },
            None => WeightGrowth::Factorial {
                negative_integer: false,
            },
        },
        Valuation::Finite(d) if d.is_negative() => WeightGrowth::Linear(d),
        Valuation::Finite(d) => WeightGrowth::Linear(mean_truncated_valuation(&p, &d)),
    }
}

pub(crate) fn inv_p_minus_one(field: &Field) -> Q {
    Q::new(BigInt::one(), field.p() - BigInt::one())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Verdict {
    Yes,
    No,
    Undecided,
}

/// Exact per-weight nilpotency of `aⁿ∏(β − i)` (including its Jordan
/// derivatives) from the growth class of `β`.
fn weight_verdict(beta: &FieldElement, val_a: &Q) -> Verdict {
    let field = beta.field();
    match weight_growth(beta) {
        WeightGrowth::Linear(mu) => {
            if (val_a + mu).is_positive() {
                Verdict::Yes
            } else {
                Verdict::No
            }
        }
        WeightGrowth::Terminating | WeightGrowth::Factorial { .. } => {
            let slope = val_a + inv_p_minus_one(field);
            if slope.is_positive() {
                Verdict::Yes
            } else if slope.is_negative()
                && !matches!(weight_growth(beta), WeightGrowth::Terminating)
            {
                Verdict::No
            } else {
                Verdict::Undecided
            }
        }
    }
}

/// Valuation trace of `aⁿ∏_{i<n}(B − i)` for a square matrix `B`, stopping
/// early once the product is exactly zero.
pub(crate) fn product_trace(b: &KMatrix, a: &FieldElement, max_n: usize) -> Vec<Valuation> {
    let field = b.field();
    let size = b.rows();
    let mut cur = KMatrix::identity(field, size);
    let mut out = vec![cur.gauss_val()];
    for n in 0..max_n {
        if cur.is_zero() {
            break;
        }
        let step = (b - &KMatrix::scalar(&FieldElement::from_int(field, n as i64), size)).scale(a);
        cur = &step * &cur;
        out.push(cur.gauss_val());
    }
    out
}

pub(crate) fn probe_verdict(trace: &[Valuation], cfg: &ProbeConfig) -> NilpotencyStatus {
    let last = trace.last().expect("trace starts at n = 0");
    if last.is_infinite() {
        return NilpotencyStatus::ProbeConvergent;
    }
    let n = trace.len();
    if n <= cfg.window {
        return NilpotencyStatus::Unknown;
    }
    let tail = &trace[n - 1 - cfg.window..];
    // Downward drift: the window ends strictly below where it started and
    // never climbs above its starting value.
    if *last < tail[0] && tail.iter().all(|v| *v <= tail[0]) {
        return NilpotencyStatus::ProbeDivergent;
    }
    if *last >= Valuation::int(cfg.threshold) && tail[0] < *last {
        return NilpotencyStatus::ProbeConvergent;
    }
    NilpotencyStatus::Unknown
}

/// Decides whether `aⁿ∏_{i<n}(∇ − i) → 0`.
///
/// If the residual characteristic polynomial splits over `K` the answer is
/// exact, from the growth of `Σ val(α − i)` per weight; otherwise the
/// valuation trace of the residual product is probed.
pub fn check_nilpotent(m: &LogConnection, a: &FieldElement, probe: &ProbeConfig) -> NilpotencyReport {
    check_nilpotent_with(m, a, probe, &[])
}

pub fn check_nilpotent_with(
    m: &LogConnection,
    a: &FieldElement,
    probe: &ProbeConfig,
    candidates: &[FieldElement],
) -> NilpotencyReport {
    let sen = residual_sen(m, candidates);
    let res = m.residual();
    let val_a = match a.val() {
        Valuation::Finite(v) => v,
        Valuation::Infinity => {
            // a = 0: every term past n = 0 vanishes
            return NilpotencyReport {
                status: NilpotencyStatus::ProvenNilpotent,
                weights: sen.weights,
                trace: product_trace(&res, a, 1),
            };
        }
    };
    if sen.split {
        let mut verdicts = Vec::new();
        for w in &sen.weights {
            for j in 0..m.modulus() {
                let beta = &w.weight + &FieldElement::from_int(m.field(), j as i64);
                verdicts.push(weight_verdict(&beta, &val_a));
            }
        }
        let status = if verdicts.contains(&Verdict::No) {
            Some(NilpotencyStatus::ProvenNotNilpotent)
        } else if verdicts.iter().all(|v| *v == Verdict::Yes) {
            Some(NilpotencyStatus::ProvenNilpotent)
        } else {
            None
        };
        if let Some(status) = status {
            return NilpotencyReport {
                status,
                weights: sen.weights,
                trace: product_trace(&res, a, probe.window),
            };
        }
    }
    let trace = product_trace(&res, a, probe.max_n);
    NilpotencyReport {
        status: probe_verdict(&trace, probe),
        weights: sen.weights,
        trace,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifyReport {
    /// `None` when the residual polynomial does not split over `K`.
    pub nearly_dr: Option<bool>,
    pub log_nearly_dr: Option<bool>,
    pub weights: Vec<WeightRecord>,
    /// Probe evidence for the non-split case.
    pub probe: Option<NilpotencyReport>,
}

/// Nearly and log-nearly de Rham flags: every weight in `Z + a⁻¹𝔪` for
/// `a = −E′(π)`, resp. `a = −πE′(π)`.
pub fn classify_ndr(m: &LogConnection, candidates: &[FieldElement]) -> ClassifyReport {
    let sen = residual_sen(m, candidates);
    if !sen.split {
        let probe = check_nilpotent_with(m, &a_prismatic(m.field()), &ProbeConfig::default(), candidates);
        return ClassifyReport {
            nearly_dr: None,
            log_nearly_dr: None,
            weights: sen.weights,
            probe: Some(probe),
        };
    }
    let nearly = sen.weights.iter().all(|w| w.margin_prism.is_positive());
    let log_nearly = sen.weights.iter().all(|w| w.margin_log.is_positive());
    ClassifyReport {
        nearly_dr: Some(nearly),
        log_nearly_dr: Some(log_nearly),
        weights: sen.weights,
        probe: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cohomology {
    pub h0: usize,
    pub h1: usize,
    /// Horizontal sections, in the flattened basis `T^k e_j`.
    pub h0_basis: Vec<Vec<FieldElement>>,
    /// Unit vectors spanning a complement of the image of `∇`.
    pub h1_basis: Vec<Vec<FieldElement>>,
}

/// Kernel and cokernel of `∇` acting on `M` as a `K`-space.
pub fn cohomology(m: &LogConnection) -> Cohomology {
    let op = m.operator();
    let size = op.rows();
    let h0_basis = op.kernel();
    let (_, pivots) = op.transpose().rref();
    let h1_basis: Vec<Vec<FieldElement>> = (0..size)
        .filter(|i| !pivots.contains(i))
        .map(|i| {
            let mut v = vec![FieldElement::zero(m.field()); size];
            v[i] = FieldElement::one(m.field());
            v
        })
        .collect();
    Cohomology {
        h0: h0_basis.len(),
        h1: h1_basis.len(),
        h0_basis,
        h1_basis,
    }
}

/// `0 → M/T^{m−k}(with ∇ + k) → M → M/T^k → 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionSes {
    pub sub: LogConnection,
    pub quotient: LogConnection,
    pub intertwines: bool,
    pub exact: bool,
}

fn truncate_connection(m: &LogConnection, k: usize) -> LogConnection {
    let l = m.rank();
    let n = (0..l)
        .map(|i| (0..l).map(|j| m.entry(i, j).truncate(k)).collect())
        .collect();
    LogConnection::new(m.unif(), n).expect("shape preserved")
}

pub fn reduction_ses(m: &LogConnection, k: usize) -> Result<ReductionSes> {
    let modulus = m.modulus();
    if k == 0 || k >= modulus {
        return Err(Error::BadTruncationIndex { k, m: modulus });
    }
    let l = m.rank();
    let field = m.field();
    let quotient = truncate_connection(m, k);
    let sub = bk_twist(&truncate_connection(m, modulus - k), k as i64);

    let one = FieldElement::one(field);
    let mut incl = KMatrix::zero(field, l * modulus, l * (modulus - k));
    for s in 0..modulus - k {
        for j in 0..l {
            incl.set((s + k) * l + j, s * l + j, one.clone());
        }
    }
    let mut proj = KMatrix::zero(field, l * k, l * modulus);
    for i in 0..l * k {
        proj.set(i, i, one.clone());
    }
    let nm = m.operator();
    let intertwines = &nm * &incl == &incl * &sub.operator()
        && &quotient.operator() * &proj == &proj * &nm;
    let exact = incl.rank() == l * (modulus - k)
        && proj.rank() == l * k
        && (&proj * &incl).is_zero()
        && l * (modulus - k) + l * k == l * modulus;
    Ok(ReductionSes {
        sub,
        quotient,
        intertwines,
        exact,
    })
}
