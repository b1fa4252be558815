//! Truncated multivariate Taylor series ("jets").
//!
//! Coefficients are stored as `f_α / α!` in graded-lexicographic order, so the
//! layout of order `d - 1` is a prefix of the layout of order `d`. Truncation is
//! therefore a slice, and every arithmetic kernel visits contributing pairs in
//! the same sequence at every order, which keeps shared coefficients bit-equal.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Highest supported total order.
pub const MAX_ORDER: usize = 3;

/// Precomputed layout and multiplication tables for `n` variables at order `d`.
#[derive(Debug)]
pub struct JetSpace {
    n: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    /// `(a, b, out)` triples with `deg a + deg b <= order`, ordered by `a` then `b`.
    mul: Vec<(u16, u16, u16)>,
    /// Per variable: for each index of the order `d-1` space, the source index in
    /// this space and the factor `α_k + 1`.
    deriv: Vec<Vec<(u16, f64)>>,
}

impl JetSpace {
    /// Shared layout for `n` variables at total order `order`.
    pub fn get(n: usize, order: usize) -> &'static JetSpace {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static JetSpace>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.entry((n, order)).or_insert_with(|| Box::leak(Box::new(JetSpace::build(n, order))))
    }

    fn build(n: usize, order: usize) -> JetSpace {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut exps: Vec<Vec<u8>> = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u8; n];
            push_degree(&mut exps, &mut cur, 0, deg);
        }
        let degree: Vec<usize> = exps.iter().map(|e| e.iter().map(|&v| v as usize).sum()).collect();
        let index: HashMap<Vec<u8>, usize> = exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();

        let mut mul = Vec::new();
        for a in 0..exps.len() {
            for b in 0..exps.len() {
                if degree[a] + degree[b] > order {
                    continue;
                }
                let sum: Vec<u8> = exps[a].iter().zip(&exps[b]).map(|(x, y)| x + y).collect();
                mul.push((a as u16, b as u16, index[&sum] as u16));
            }
        }

        let mut deriv = Vec::with_capacity(n);
        if order > 0 {
            let lower: Vec<&Vec<u8>> = exps.iter().zip(&degree).filter(|(_, &d)| d < order).map(|(e, _)| e).collect();
            for k in 0..n {
                let table = lower
                    .iter()
                    .map(|e| {
                        let mut up = (*e).clone();
                        up[k] += 1;
                        (index[&up] as u16, up[k] as f64)
                    })
                    .collect();
                deriv.push(table);
            }
        }

        JetSpace { n, order, exps, degree, index, mul, deriv }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients, `C(n + d, d)`.
    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Multi-index of coefficient `i`.
    pub fn exponent(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    /// Position of a multi-index, if its degree fits.
    pub fn position(&self, alpha: &[u8]) -> Option<usize> {
        self.index.get(alpha).copied()
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut [u8], pos: usize, left: usize) {
    if pos + 1 == cur.len() || cur.is_empty() {
        if let Some(l) = cur.len().checked_sub(1) {
            cur[l] = left as u8;
            out.push(cur.to_vec());
            cur[l] = 0;
        } else if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for take in (0..=left).rev() {
        cur[pos] = take as u8;
        push_degree(out, cur, pos + 1, left - take);
    }
    cur[pos] = 0;
}

/// A scalar function of `n` variables truncated at a fixed total order.
#[derive(Clone, Debug)]
pub struct Jet {
    space: &'static JetSpace,
    coef: Vec<f64>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.space, other.space) && self.coef == other.coef
    }
}

impl Jet {
    pub fn constant(space: &'static JetSpace, v: f64) -> Jet {
        let mut coef = vec![0.0; space.len()];
        coef[0] = v;
        Jet { space, coef }
    }

    /// The coordinate function `x_k` expanded about `value`.
    pub fn variable(space: &'static JetSpace, k: usize, value: f64) -> Jet {
        let mut j = Jet::constant(space, value);
        if space.order > 0 {
            j.coef[1 + k] = 1.0;
        }
        j
    }

    pub fn from_coefficients(space: &'static JetSpace, coef: Vec<f64>) -> Jet {
        assert_eq!(coef.len(), space.len());
        Jet { space, coef }
    }

    pub fn space(&self) -> &'static JetSpace {
        self.space
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn value(&self) -> f64 {
        self.coef[0]
    }

    /// Raw Taylor coefficients `f_α / α!`.
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    /// The mixed partial derivative `∂^α f` at the expansion point.
    pub fn partial(&self, alpha: &[u8]) -> Option<f64> {
        let i = self.space.position(alpha)?;
        let fact: f64 = alpha.iter().map(|&a| (1..=a as u32).product::<u32>() as f64).product();
        Some(self.coef[i] * fact)
    }

    /// First partial `∂f/∂x_k`.
    pub fn d1(&self, k: usize) -> f64 {
        if self.space.order == 0 {
            return f64::NAN;
        }
        self.coef[1 + k]
    }

    /// Restrict to a lower order (bit-exact prefix).
    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.space.order);
        let space = JetSpace::get(self.space.n, order);
        Jet { space, coef: self.coef[..space.len()].to_vec() }
    }

    /// Partial derivative with respect to `x_k`, one order lower.
    pub fn derivative(&self, k: usize) -> Jet {
        assert!(self.space.order > 0, "cannot differentiate an order-0 jet");
        let space = JetSpace::get(self.space.n, self.space.order - 1);
        let coef = self.space.deriv[k].iter().map(|&(src, f)| f * self.coef[src as usize]).collect();
        Jet { space, coef }
    }

    pub fn add(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a - b)
    }

    pub fn neg(&self) -> Jet {
        Jet { space: self.space, coef: self.coef.iter().map(|v| -v).collect() }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet { space: self.space, coef: self.coef.iter().map(|v| c * v).collect() }
    }

    /// In-place `self += c * o`.
    pub fn axpy(&mut self, c: f64, o: &Jet) {
        debug_assert!(std::ptr::eq(self.space, o.space));
        for (a, b) in self.coef.iter_mut().zip(&o.coef) {
            *a += c * b;
        }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        debug_assert!(std::ptr::eq(self.space, o.space));
        let mut coef = vec![0.0; self.coef.len()];
        for &(a, b, c) in &self.space.mul {
            coef[c as usize] += self.coef[a as usize] * o.coef[b as usize];
        }
        Jet { space: self.space, coef }
    }

    /// Integer power by repeated multiplication; negative powers go through `recip`.
    pub fn powi(&self, k: i32) -> Jet {
        let base = if k < 0 { self.recip() } else { self.clone() };
        let mut acc = Jet::constant(self.space, 1.0);
        for i in 0..k.unsigned_abs() {
            acc = if i == 0 { base.clone() } else { acc.mul(&base) };
        }
        acc
    }

    /// `f(self)` given `derivs[k] = f^{(k)}(self.value())` for `k = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let d = self.space.order;
        let mut delta = self.clone();
        delta.coef[0] = 0.0;
        let mut out = Jet::constant(self.space, derivs[0]);
        let mut power = delta.clone();
        let mut fact = 1.0;
        for (k, dk) in derivs.iter().enumerate().take(d + 1).skip(1) {
            fact *= k as f64;
            let c = dk / fact;
            for (o, p) in out.coef.iter_mut().zip(&power.coef) {
                *o += c * p;
            }
            if k < d {
                power = power.mul(&delta);
            }
        }
        out.coef[0] = derivs[0];
        out
    }

    pub fn recip(&self) -> Jet {
        let x = self.coef[0];
        let r = 1.0 / x;
        self.compose(&[r, -r * r, 2.0 * r * r * r, -6.0 * r * r * r * r])
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.coef[0].sin_cos();
        self.compose(&[s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.coef[0].sin_cos();
        self.compose(&[c, -s, -c, s])
    }

    pub fn tan(&self) -> Jet {
        let t = self.coef[0].tan();
        let sec2 = 1.0 + t * t;
        self.compose(&[t, sec2, 2.0 * t * sec2, sec2 * (2.0 + 6.0 * t * t)])
    }

    pub fn exp(&self) -> Jet {
        let e = self.coef[0].exp();
        self.compose(&[e, e, e, e])
    }

    pub fn ln(&self) -> Jet {
        let x = self.coef[0];
        let r = 1.0 / x;
        self.compose(&[x.ln(), r, -r * r, 2.0 * r * r * r])
    }

    pub fn sqrt(&self) -> Jet {
        let x = self.coef[0];
        let s = x.sqrt();
        let r = 1.0 / x;
        self.compose(&[s, 0.5 / s, -0.25 * s * r * r, 0.375 * s * r * r * r])
    }

    fn zip(&self, o: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert!(std::ptr::eq(self.space, o.space));
        Jet { space: self.space, coef: self.coef.iter().zip(&o.coef).map(|(a, b)| f(*a, *b)).collect() }
    }
}
