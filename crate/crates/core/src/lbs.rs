//! The r-order Lie bracket system `ż = b₀(z) + Σ_{i≤r} Lᵢ(z)` and the fast-time
//! terms `Λᵢ` it is derived from.

use crate::coeffs::{Class, CoefficientTable, Family, Samples};
use crate::geometry::{enumerate_brackets, zero_proof, BracketEvaluator, BracketExpr, GeometryError, ZeroProof};
use crate::jetexpr::Jet;
use crate::system::ControlAffineSystem;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LbsError {
    #[error("coefficient table has no entry for {family} {indices:?}")]
    MissingCoefficient { family: Family, indices: Vec<usize> },
    #[error("the ω → ∞ limit is undefined: {family} {indices:?} is unbounded and its bracket is not zero")]
    UnboundedLimit { family: Family, indices: Vec<usize> },
    #[error("Λ order {0} is outside 1..=4")]
    LambdaOrder(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssembleOptions {
    /// Drop terms whose bracket is identically zero.
    pub prune: bool,
    /// Realize the ω → ∞ limit: keep bounded-class terms at their ω-free value,
    /// drop vanishing ones, reject unbounded ones with a nonzero bracket.
    pub limit: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions { prune: true, limit: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub family: Family,
    pub indices: Vec<usize>,
    pub expr: BracketExpr,
    pub value: f64,
    pub omega_exponent: f64,
    pub class: Class,
    /// `value · ω^omega_exponent`.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct AveragedSystem {
    sys: ControlAffineSystem,
    r: usize,
    omega: f64,
    limit: bool,
    terms: Vec<Term>,
    max_depth: usize,
}

impl AveragedSystem {
    pub fn order(&self) -> usize {
        self.r
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn is_limit(&self) -> bool {
        self.limit
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn system(&self) -> &ControlAffineSystem {
        &self.sys
    }

    /// Same terms re-weighted for a new ω (no new quadrature).
    pub fn reweight(&self, omega: f64) -> AveragedSystem {
        let mut out = self.clone();
        out.omega = omega;
        out.sys = self.sys.with_omega(omega);
        if !self.limit {
            for t in &mut out.terms {
                t.weight = weight(t.value, t.omega_exponent, omega);
            }
        }
        out
    }

    /// `b₀(z) + Σ weight · bracket(z)`.
    pub fn rhs(&self, z: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let mut out = self.sys.field(0, z)?;
        if self.terms.is_empty() {
            return Ok(out);
        }
        let mut ev = BracketEvaluator::new(&self.sys, z, self.max_depth);
        for t in &self.terms {
            if t.weight == 0.0 {
                continue;
            }
            let v = ev.eval(&t.expr, 0)?;
            for (o, j) in out.iter_mut().zip(&v) {
                *o += t.weight * j.value();
            }
        }
        Ok(out)
    }

    /// Contribution of `L_i` alone at `z`.
    pub fn l_term(&self, i: usize, z: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let mut out = vec![0.0; self.sys.dim()];
        let mut ev = BracketEvaluator::new(&self.sys, z, self.max_depth.max(1));
        for t in self.terms.iter().filter(|t| t.family.order() == i) {
            let v = ev.eval(&t.expr, 0)?;
            for (o, j) in out.iter_mut().zip(&v) {
                *o += t.weight * j.value();
            }
        }
        Ok(out)
    }
}

/// `ω^e · value`, computed without reference to any intermediate scale.
fn weight(value: f64, exponent: f64, omega: f64) -> f64 {
    value * omega.powf(exponent)
}

pub fn assemble(
    sys: &ControlAffineSystem,
    r: usize,
    table: &CoefficientTable,
    omega: f64,
) -> Result<AveragedSystem, LbsError> {
    assemble_with(sys, r, table, omega, AssembleOptions::default())
}

pub fn assemble_with(
    sys: &ControlAffineSystem,
    r: usize,
    table: &CoefficientTable,
    omega: f64,
    opts: AssembleOptions,
) -> Result<AveragedSystem, LbsError> {
    let mut terms = Vec::new();
    for bt in enumerate_brackets(sys.m(), r)? {
        let c = table
            .get(bt.family, &bt.indices)
            .ok_or_else(|| LbsError::MissingCoefficient { family: bt.family, indices: bt.indices.clone() })?;
        let zero = (opts.prune || opts.limit) && zero_proof(&bt.expr, sys) != ZeroProof::NonZero;
        if opts.prune && zero {
            continue;
        }
        let w = if opts.limit {
            match c.class {
                Class::Bounded => c.value,
                Class::Vanishing => continue,
                Class::Unbounded if zero || c.value.abs() <= crate::analysis::ZERO_VALUE => continue,
                Class::Unbounded => return Err(LbsError::UnboundedLimit { family: bt.family, indices: bt.indices }),
            }
        } else {
            weight(c.value, c.omega_exponent, omega)
        };
        terms.push(Term {
            family: bt.family,
            indices: bt.indices,
            expr: bt.expr,
            value: c.value,
            omega_exponent: c.omega_exponent,
            class: c.class,
            weight: w,
        });
    }
    let max_depth = terms.iter().map(|t| t.expr.depth()).max().unwrap_or(0);
    Ok(AveragedSystem { sys: sys.with_omega(omega), r, omega, limit: opts.limit, terms, max_depth })
}

/// The fast-time term `Λᵢ` written with `ε = ω^{p*−1}` and `ηⱼ = ω^{pⱼ−p*}`.
#[derive(Clone, Debug)]
pub struct Lambda {
    sys: ControlAffineSystem,
    pub order: usize,
    /// (bracket, weight) pairs; for `Λ₁` the brackets are the leaves themselves.
    pub terms: Vec<(BracketExpr, f64)>,
}

impl Lambda {
    pub fn eval(&self, z: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let mut out = vec![0.0; self.sys.dim()];
        let depth = self.terms.iter().map(|t| t.0.depth()).max().unwrap_or(0);
        let mut ev = BracketEvaluator::new(&self.sys, z, depth);
        for (e, w) in &self.terms {
            let v: Vec<Jet> = ev.eval(e, 0)?;
            for (o, j) in out.iter_mut().zip(&v) {
                *o += w * j.value();
            }
        }
        Ok(out)
    }
}

/// `Λᵢ` for `i ∈ 1..=4`. The iterated-integral averages come from `table`
/// (for `Λ₁` the input means are integrated on the table's grid).
pub fn lambda_tau(
    sys: &ControlAffineSystem,
    order: usize,
    table: &CoefficientTable,
    omega: f64,
    p_star: f64,
) -> Result<Lambda, LbsError> {
    if !(1..=4).contains(&order) {
        return Err(LbsError::LambdaOrder(order));
    }
    let eps = omega.powf(p_star - 1.0);
    let eta: Vec<f64> = sys.p().iter().map(|p| omega.powf(p - p_star)).collect();
    let prod = |idx: &[usize]| idx.iter().map(|&i| eta[i - 1]).product::<f64>();
    let mut terms = Vec::new();
    if order == 1 {
        let s = Samples::new(sys, table.grid).map_err(|_| LbsError::LambdaOrder(order))?;
        for i in 1..=sys.m() {
            let mean = crate::quadrature::simpson(&s.u[i - 1], s.h) / s.period;
            terms.push((BracketExpr::Leaf(i), eps * eta[i - 1] * mean));
        }
        return Ok(Lambda { sys: sys.with_omega(omega), order, terms });
    }
    // Each ω-free coefficient is (1/c)·(period average of its iterated integral),
    // and Λᵢ carries εⁱ/c times that average.
    let c = match order {
        2 => 2.0,
        3 => 3.0,
        _ => 12.0,
    };
    for bt in enumerate_brackets(sys.m(), order)?.into_iter().filter(|b| b.family.order() == order) {
        let coef = table
            .get(bt.family, &bt.indices)
            .ok_or_else(|| LbsError::MissingCoefficient { family: bt.family, indices: bt.indices.clone() })?;
        let average = c * coef.value;
        let w = eps.powi(order as i32) / c * prod(&bt.indices) * average;
        terms.push((bt.expr, w));
    }
    Ok(Lambda { sys: sys.with_omega(omega), order, terms })
}
