//! Lie brackets `[f, g] = ∂g·f − ∂f·g` of the system's vector fields,
//! evaluated recursively on jets.

use std::collections::HashMap;
use std::fmt;

use crate::coeffs::Family;
use crate::jetexpr::{Jet, JetSpace, MAX_ORDER};
use crate::system::{halton_points, ControlAffineSystem, SystemError};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BracketExpr {
    /// Field index; `0` is the drift.
    Leaf(usize),
    Br(Box<BracketExpr>, Box<BracketExpr>),
}

pub fn leaf(i: usize) -> BracketExpr {
    BracketExpr::Leaf(i)
}

pub fn br(a: BracketExpr, b: BracketExpr) -> BracketExpr {
    BracketExpr::Br(Box::new(a), Box::new(b))
}

impl BracketExpr {
    pub fn depth(&self) -> usize {
        match self {
            BracketExpr::Leaf(_) => 0,
            BracketExpr::Br(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        match self {
            BracketExpr::Leaf(i) => vec![*i],
            BracketExpr::Br(a, b) => {
                let mut v = a.leaves();
                v.extend(b.leaves());
                v
            }
        }
    }

    fn map_leaves(&self, f: &impl Fn(usize) -> usize) -> BracketExpr {
        match self {
            BracketExpr::Leaf(i) => BracketExpr::Leaf(f(*i)),
            BracketExpr::Br(a, b) => br(a.map_leaves(f), b.map_leaves(f)),
        }
    }
}

impl fmt::Display for BracketExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BracketExpr::Leaf(i) => write!(f, "b{i}"),
            BracketExpr::Br(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error(
        "bracket of depth {depth} cannot be evaluated at order {order} (order + depth must not exceed {MAX_ORDER})"
    )]
    Budget { depth: usize, order: usize },
    #[error("truncation order {0} is outside 1..=4")]
    Order(usize),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A bracket required by the averaged system together with its coefficient key.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketTerm {
    pub family: Family,
    pub indices: Vec<usize>,
    pub expr: BracketExpr,
}

/// The bracket multiplying a coefficient of the given family and indices.
pub fn bracket_for(family: Family, idx: &[usize]) -> BracketExpr {
    match family {
        Family::Nu2 | Family::LegacyNu2 => br(leaf(idx[0]), leaf(idx[1])),
        Family::Nu3 => br(leaf(idx[2]), br(leaf(idx[0]), leaf(idx[1]))),
        Family::LegacyNu3 => br(br(leaf(idx[0]), leaf(idx[1])), leaf(idx[2])),
        Family::Beta1 => br(br(leaf(idx[0]), leaf(idx[1])), br(leaf(idx[2]), leaf(idx[3]))),
        Family::Beta2 => br(br(br(leaf(idx[0]), leaf(idx[1])), leaf(idx[2])), leaf(idx[3])),
    }
}

/// Every (bracket, multi-index) entering `L₂ … L_r` for `m` channels.
pub fn enumerate_brackets(m: usize, r: usize) -> Result<Vec<BracketTerm>, GeometryError> {
    if !(1..=4).contains(&r) {
        return Err(GeometryError::Order(r));
    }
    let mut out = Vec::new();
    let mut push = |family: Family, indices: Vec<usize>| {
        let expr = bracket_for(family, &indices);
        out.push(BracketTerm { family, indices, expr });
    };
    let pairs: Vec<(usize, usize)> = (1..=m).flat_map(|i| (i + 1..=m).map(move |j| (i, j))).collect();
    if r >= 2 {
        for &(i, j) in &pairs {
            push(Family::Nu2, vec![i, j]);
        }
    }
    if r >= 3 {
        for &(i, j) in &pairs {
            for e in 1..=m {
                push(Family::Nu3, vec![i, j, e]);
            }
        }
    }
    if r >= 4 {
        for &(i, j) in &pairs {
            for &(e, l) in &pairs {
                if (i, j) != (e, l) {
                    push(Family::Beta1, vec![i, j, e, l]);
                }
            }
        }
        for &(i, j) in &pairs {
            for e in 1..=m {
                for l in 1..=m {
                    push(Family::Beta2, vec![i, j, e, l]);
                }
            }
        }
    }
    Ok(out)
}

/// Memoizing bracket evaluator at a single state.
pub struct BracketEvaluator<'a> {
    sys: &'a ControlAffineSystem,
    x: Vec<f64>,
    leaves: HashMap<usize, Vec<Jet>>,
    leaf_order: usize,
    memo: HashMap<(BracketExpr, usize), Vec<Jet>>,
}

impl<'a> BracketEvaluator<'a> {
    /// Leaves are expanded once to `leaf_order` and truncated as needed.
    pub fn new(sys: &'a ControlAffineSystem, x: &[f64], leaf_order: usize) -> Self {
        BracketEvaluator { sys, x: x.to_vec(), leaves: HashMap::new(), leaf_order, memo: HashMap::new() }
    }

    pub fn eval(&mut self, e: &BracketExpr, order: usize) -> Result<Vec<Jet>, GeometryError> {
        let depth = e.depth();
        if order + depth > MAX_ORDER {
            return Err(GeometryError::Budget { depth, order });
        }
        if let Some(v) = self.memo.get(&(e.clone(), order)) {
            return Ok(v.clone());
        }
        let out = match e {
            BracketExpr::Leaf(i) => {
                let stale = self.leaves.get(i).is_none_or(|js| js[0].order() < order);
                if stale {
                    let js = self.sys.field_jet(*i, &self.x, self.leaf_order.max(order))?;
                    self.leaves.insert(*i, js);
                }
                let js = &self.leaves[i];
                if js[0].order() == order {
                    js.clone()
                } else {
                    js.iter().map(|j| j.truncate(order)).collect()
                }
            }
            BracketExpr::Br(a, b) => {
                let fa = self.eval(a, order + 1)?;
                let fb = self.eval(b, order + 1)?;
                lie_bracket(&fa, &fb)
            }
        };
        self.memo.insert((e.clone(), order), out.clone());
        Ok(out)
    }
}

/// `[f, g] = ∂g·f − ∂f·g` for fields given as jets of order `d ≥ 1`; the result has order `d − 1`.
pub fn lie_bracket(f: &[Jet], g: &[Jet]) -> Vec<Jet> {
    let n = f.len();
    let d = f[0].order();
    let space = JetSpace::get(n, d - 1);
    let ft: Vec<Jet> = f.iter().map(|j| j.truncate(d - 1)).collect();
    let gt: Vec<Jet> = g.iter().map(|j| j.truncate(d - 1)).collect();
    (0..n)
        .map(|i| {
            let mut acc = Jet::constant(space, 0.0);
            for k in 0..n {
                acc = acc.add(&g[i].derivative(k).mul(&ft[k]));
                acc = acc.sub(&f[i].derivative(k).mul(&gt[k]));
            }
            acc
        })
        .collect()
}

/// Bracket field and partials to `order` at `x`.
pub fn bracket_jet(
    e: &BracketExpr,
    sys: &ControlAffineSystem,
    x: &[f64],
    order: usize,
) -> Result<Vec<Jet>, GeometryError> {
    let depth = e.depth();
    if order + depth > MAX_ORDER {
        return Err(GeometryError::Budget { depth, order });
    }
    BracketEvaluator::new(sys, x, order + depth).eval(e, order)
}

/// Bracket value at `x`.
pub fn bracket_value(e: &BracketExpr, sys: &ControlAffineSystem, x: &[f64]) -> Result<Vec<f64>, GeometryError> {
    Ok(bracket_jet(e, sys, x, 0)?.iter().map(Jet::value).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroProof {
    /// Follows from identical or constant fields.
    Structural,
    /// Vanished at every probe point.
    Numeric,
    NonZero,
}

impl ZeroProof {
    pub fn is_zero(self) -> bool {
        self != ZeroProof::NonZero
    }
}

/// Number of low-discrepancy probes used by the numeric zero test.
pub const ZERO_PROBES: usize = 8;

pub fn is_structural_zero(e: &BracketExpr, sys: &ControlAffineSystem) -> bool {
    zero_proof(e, sys).is_zero()
}

pub fn zero_proof(e: &BracketExpr, sys: &ControlAffineSystem) -> ZeroProof {
    if structurally_zero(&canonical(e, sys), sys) {
        return ZeroProof::Structural;
    }
    for x in halton_points(sys.domain(), ZERO_PROBES) {
        match bracket_value(e, sys, &x) {
            Ok(v) if v.iter().all(|c| c.abs() < 1e-12) => {}
            _ => return ZeroProof::NonZero,
        }
    }
    ZeroProof::Numeric
}

/// Replace each leaf by the smallest index whose field is syntactically identical.
fn canonical(e: &BracketExpr, sys: &ControlAffineSystem) -> BracketExpr {
    let field = |i: usize| -> &[crate::jetexpr::Expr] {
        if i == 0 {
            sys.drift()
        } else {
            &sys.channel(i).field
        }
    };
    e.map_leaves(&|i| (0..i).find(|&j| field(j) == field(i)).unwrap_or(i))
}

fn structurally_zero(e: &BracketExpr, sys: &ControlAffineSystem) -> bool {
    match e {
        BracketExpr::Leaf(_) => false,
        BracketExpr::Br(a, b) => {
            if a == b {
                return true;
            }
            if let BracketExpr::Br(a1, a2) = a.as_ref() {
                if let BracketExpr::Br(b1, b2) = b.as_ref() {
                    if a1 == b2 && a2 == b1 {
                        return true;
                    }
                }
            }
            if let (BracketExpr::Leaf(i), BracketExpr::Leaf(j)) = (a.as_ref(), b.as_ref()) {
                if sys.field_is_constant(*i) && sys.field_is_constant(*j) {
                    return true;
                }
            }
            structurally_zero(a, sys) || structurally_zero(b, sys)
        }
    }
}
