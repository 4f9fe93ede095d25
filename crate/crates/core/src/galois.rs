//! The Galois action kernel `Σ aⁿ∏_{i<n}(∇ − i)·Y^[n]` and its convergence.
//!
//! Period rings are not modeled. The evaluation point enters only through
//! `v0`, the valuation of its image under `θ`, and optionally through an
//! integer `c` scaling it (for powers of a fixed generator).

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::linalg::{KLinearOp, KMatrix};
use crate::miclog::{
    eigen_report, inv_p_minus_one, probe_verdict, weight_growth, NilpotencyStatus, ProbeConfig,
    WeightGrowth,
};
use crate::numfield::{vp_factorial, vp_int, FieldElement, Valuation, Q};
use crate::stratconn::{product_family, LogConnection};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelTag {
    Prismatic,
    Log,
}

impl KernelTag {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelTag::Prismatic => "prismatic",
            KernelTag::Log => "log",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "prismatic" => Some(KernelTag::Prismatic),
            "log" => Some(KernelTag::Log),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisKernel {
    pub l: usize,
    pub m: usize,
    pub a: FieldElement,
    /// `A₀..A_D`.
    pub ops: Vec<KLinearOp>,
    pub tag: KernelTag,
    /// Scaling of the evaluation point, if specialized.
    pub c: Option<BigInt>,
}

impl GaloisKernel {
    pub fn pd_cutoff(&self) -> usize {
        self.ops.len() - 1
    }

    /// `∇ mod T`, recovered from `A₁ = a∇`.
    pub fn residual(&self) -> Result<KMatrix> {
        let field = self.a.field();
        let mut out = KMatrix::zero(field, self.l, self.l);
        let Some(a1) = self.ops.get(1) else {
            return Err(Error::FamilyTooShort { need: 2, got: 1 });
        };
        let inv = self.a.invert()?;
        for i in 0..self.l {
            for j in 0..self.l {
                out.set(i, j, a1.get(i, j) * &inv);
            }
        }
        Ok(out)
    }
}

/// `Aₙ = aⁿ∏_{i<n}(∇ − i)` for `n ≤ D`; the same family as the stratification.
pub fn action_kernel(m: &LogConnection, a: &FieldElement, d: usize, tag: KernelTag) -> GaloisKernel {
    let phi1 = m.operator().scale(a);
    GaloisKernel {
        l: m.rank(),
        m: m.modulus(),
        a: a.clone(),
        ops: product_family(&phi1, a, d + 1),
        tag,
        c: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauVariant {
    /// Over `K`: `c = pⁱ`.
    K,
    /// Over `K(π₁)`: `c = 2pⁱ`.
    Kpi1,
}

/// The kernel for the `pⁱ`-th power of `τ`: same operators, scaled point.
pub fn tau_power_kernel(
    m: &LogConnection,
    a: &FieldElement,
    d: usize,
    i: u32,
    variant: TauVariant,
) -> GaloisKernel {
    let p = m.field().p().clone();
    let c = match variant {
        TauVariant::K => p.pow(i),
        TauVariant::Kpi1 => p.pow(i) * 2,
    };
    GaloisKernel {
        c: Some(c),
        ..action_kernel(m, a, d, KernelTag::Prismatic)
    }
}

/// `H_n = a^{n−1}∏_{i=1}^{n−1}(∇ − i)` for `1 ≤ n ≤ D`; `out[0]` is zero.
pub fn h_series(m: &LogConnection, a: &FieldElement, d: usize) -> Vec<KLinearOp> {
    let field = m.field();
    let nabla = m.operator();
    let size = nabla.rows();
    let mut out = vec![KMatrix::zero(field, size, size)];
    if d == 0 {
        return out;
    }
    let mut cur = KMatrix::identity(field, size);
    out.push(cur.clone());
    for n in 2..=d {
        let step = (&nabla - &KMatrix::scalar(&FieldElement::from_int(field, (n - 1) as i64), size))
            .scale(a);
        cur = &step * &cur;
        out.push(cur.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct D0Report {
    /// `(n, basis)`: the `X^[n]` coefficients differ on this basis vector.
    pub mismatch: Option<(usize, usize)>,
}

impl D0Report {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Checks `ε(x) − x = H(∇, X)(a∇x)` coefficientwise in `X^[n]`, `n ≤ D`.
pub fn d0_check(m: &LogConnection, a: &FieldElement, d: usize) -> D0Report {
    let phi = action_kernel(m, a, d, KernelTag::Prismatic).ops;
    let h = h_series(m, a, d);
    let a_nabla = m.operator().scale(a);
    let size = a_nabla.rows();
    for n in 0..=d {
        let lhs = if n == 0 {
            &phi[0] - &KMatrix::identity(m.field(), size)
        } else {
            phi[n].clone()
        };
        let rhs = &h[n] * &a_nabla;
        let diff = &lhs - &rhs;
        if let Some(col) = (0..size).find(|&c| diff.column(c).iter().any(|x| !x.is_zero())) {
            return D0Report {
                mismatch: Some((n, col)),
            };
        }
    }
    D0Report { mismatch: None }
}

/// The evaluation point, known only through valuations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaloisElementData {
    pub v0: Valuation,
    pub c: Option<BigInt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    Convergent,
    Divergent,
    Unknown,
}

impl ConvergenceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ConvergenceStatus::Convergent => "Convergent",
            ConvergenceStatus::Divergent => "Divergent",
            ConvergenceStatus::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergenceReport {
    pub status: ConvergenceStatus,
    /// `v0` after the shift by `v_p(c)`.
    pub effective_v0: Valuation,
    /// `tₙ = GaussVal(Aₙ) + n·v0 − v_p(n!)` for `n ≤ D`.
    pub trace: Vec<Valuation>,
}

fn term_valuation(op_val: &Valuation, n: usize, v0: &Q, p: u64) -> Valuation {
    let shift = v0 * Q::from_integer(BigInt::from(n)) - Q::from_integer(vp_factorial(p, n as u64).into());
    op_val + &Valuation::Finite(shift)
}

fn eigen_verdict(beta: &FieldElement, val_a: &Q, v0: &Q) -> ConvergenceStatus {
    let field = beta.field();
    let base = val_a + v0;
    match weight_growth(beta) {
        WeightGrowth::Linear(mu) => {
            let slope = &base + mu - inv_p_minus_one(field);
            if slope.is_positive() {
                ConvergenceStatus::Convergent
            } else {
                ConvergenceStatus::Divergent
            }
        }
        // The n! from ∏(β − i) cancels the divided-power denominator.
        WeightGrowth::Factorial { negative_integer } => {
            if base.is_positive() {
                ConvergenceStatus::Convergent
            } else if base.is_negative() || negative_integer {
                ConvergenceStatus::Divergent
            } else {
                ConvergenceStatus::Unknown
            }
        }
        WeightGrowth::Terminating => {
            if base.is_positive() {
                ConvergenceStatus::Convergent
            } else {
                ConvergenceStatus::Unknown
            }
        }
    }
}

/// Decides convergence of the kernel evaluated at a point of valuation `v0`.
pub fn converges_at(kernel: &GaloisKernel, g: &GaloisElementData) -> Result<ConvergenceReport> {
    converges_at_with(kernel, g, &ProbeConfig::default())
}

pub fn converges_at_with(
    kernel: &GaloisKernel,
    g: &GaloisElementData,
    probe: &ProbeConfig,
) -> Result<ConvergenceReport> {
    let field = kernel.a.field();
    let p = field.p_u64();
    let v0 = match &g.v0 {
        Valuation::Finite(v) if v.is_positive() => v.clone(),
        Valuation::Finite(v) => {
            return Err(Error::InvalidValuation(format!("v0 = {v} must be positive")))
        }
        Valuation::Infinity => {
            return Ok(ConvergenceReport {
                status: ConvergenceStatus::Convergent,
                effective_v0: Valuation::Infinity,
                trace: vec![Valuation::int(0)],
            })
        }
    };
    let c = kernel.c.as_ref().or(g.c.as_ref());
    let v0 = match c {
        Some(c) if c.is_zero() => {
            return Err(Error::InvalidValuation("scaling constant c is zero".into()))
        }
        Some(c) => v0 + Q::from_integer(vp_int(field.p(), c).unwrap_or(0).into()),
        None => v0,
    };
    let trace: Vec<Valuation> = kernel
        .ops
        .iter()
        .enumerate()
        .map(|(n, op)| term_valuation(&op.gauss_val(), n, &v0, p))
        .collect();
    let effective_v0 = Valuation::Finite(v0.clone());
    if kernel.ops.iter().any(KMatrix::is_zero) {
        return Ok(ConvergenceReport {
            status: ConvergenceStatus::Convergent,
            effective_v0,
            trace,
        });
    }
    let res = kernel.residual()?;
    let val_a = kernel
        .a
        .val()
        .finite()
        .cloned()
        .ok_or_else(|| Error::InvalidValuation("a must be nonzero".into()))?;
    let sen = eigen_report(&res, &[]);
    if sen.split {
        let mut verdicts = Vec::new();
        for w in &sen.weights {
            for j in 0..kernel.m {
                let beta = &w.weight + &FieldElement::from_int(field, j as i64);
                verdicts.push(eigen_verdict(&beta, &val_a, &v0));
            }
        }
        let status = if verdicts.contains(&ConvergenceStatus::Divergent) {
            ConvergenceStatus::Divergent
        } else if verdicts.iter().all(|v| *v == ConvergenceStatus::Convergent) {
            ConvergenceStatus::Convergent
        } else {
            ConvergenceStatus::Unknown
        };
        return Ok(ConvergenceReport {
            status,
            effective_v0,
            trace,
        });
    }
    // Non-split residual: probe the residual series' term valuations.
    let mut cur = KMatrix::identity(field, kernel.l);
    let mut probe_trace = vec![term_valuation(&cur.gauss_val(), 0, &v0, p)];
    for n in 0..probe.max_n {
        let step = (&res - &KMatrix::scalar(&FieldElement::from_int(field, n as i64), kernel.l))
            .scale(&kernel.a);
        cur = &step * &cur;
        probe_trace.push(term_valuation(&cur.gauss_val(), n + 1, &v0, p));
        if cur.is_zero() {
            break;
        }
    }
    let status = match probe_verdict(&probe_trace, probe) {
        NilpotencyStatus::ProbeConvergent => ConvergenceStatus::Convergent,
        NilpotencyStatus::ProbeDivergent => ConvergenceStatus::Divergent,
        _ => ConvergenceStatus::Unknown,
    };
    Ok(ConvergenceReport {
        status,
        effective_v0,
        trace,
    })
}
