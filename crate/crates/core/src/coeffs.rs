//! Common period and the iterated-integral coefficients of the averaged system.
//!
//! Everything is integrated in the fast time `τ = ωt`, where the integrands do
//! not depend on ω; a coefficient's numeric weight at a given ω is
//! `value · ω^omega_exponent`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{enumerate_brackets, GeometryError};
use crate::quadrature::{cumulative, simpson};
use crate::system::{phase, ControlAffineSystem, Rational};

pub const DEFAULT_GRID: usize = 4096;
pub const MAX_GRID: usize = 65536;
/// Relative change allowed between grid `N` and `2N` (floored at absolute 1).
pub const CONVERGENCE_TOL: f64 = 1e-8;
/// Half-width of the "bounded" band around a zero ω-exponent.
pub const CLASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoeffError {
    #[error("frequency ratio {0} is not positive")]
    NonPositiveK(String),
    #[error("no frequency ratios given")]
    Empty,
    #[error("grid size {0} must be even and at least 4")]
    Grid(usize),
    #[error("channel index out of range or malformed multi-index {0:?}")]
    Index(Vec<usize>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Family {
    #[serde(rename = "nu2")]
    Nu2,
    #[serde(rename = "nu3")]
    Nu3,
    #[serde(rename = "beta1")]
    Beta1,
    #[serde(rename = "beta2")]
    Beta2,
    #[serde(rename = "legacy_nu2")]
    LegacyNu2,
    #[serde(rename = "legacy_nu3")]
    LegacyNu3,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Nu2 => "nu2",
            Family::Nu3 => "nu3",
            Family::Beta1 => "beta1",
            Family::Beta2 => "beta2",
            Family::LegacyNu2 => "legacy_nu2",
            Family::LegacyNu3 => "legacy_nu3",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Family::Nu2 | Family::LegacyNu2 => 2,
            Family::Nu3 | Family::LegacyNu3 => 3,
            Family::Beta1 | Family::Beta2 => 4,
        }
    }

    /// Averaged-system order `r` at which the family first appears.
    pub fn order(self) -> usize {
        self.arity()
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Vanishing,
    Bounded,
    Unbounded,
}

impl Class {
    pub fn of_exponent(e: f64) -> Class {
        if e.abs() <= CLASS_TOL {
            Class::Bounded
        } else if e < 0.0 {
            Class::Vanishing
        } else {
            Class::Unbounded
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Class::Vanishing => "vanishing",
            Class::Bounded => "bounded",
            Class::Unbounded => "unbounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coefficient {
    pub family: Family,
    /// 1-based channel indices.
    pub indices: Vec<usize>,
    /// ω-free part.
    pub value: f64,
    pub omega_exponent: f64,
    pub class: Class,
    pub converged: bool,
}

impl Coefficient {
    /// Numeric weight at a given ω.
    pub fn at(&self, omega: f64) -> f64 {
        self.value * omega.powf(self.omega_exponent)
    }
}

/// `T' = 2π · LCM(1/k₁, …, 1/k_m)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Period {
    /// `T' / 2π` as an exact rational.
    pub multiple: Rational,
    pub value: f64,
}

pub fn common_period(k: &[Rational]) -> Result<Period, CoeffError> {
    if k.is_empty() {
        return Err(CoeffError::Empty);
    }
    let mut num: i64 = 1;
    let mut den: i64 = 0;
    for ki in k {
        if *ki.numer() <= 0 || *ki.denom() <= 0 {
            return Err(CoeffError::NonPositiveK(ki.to_string()));
        }
        let inv = ki.recip();
        num = num.lcm(inv.numer());
        den = den.gcd(inv.denom());
    }
    let multiple = Rational::new(num, den);
    Ok(Period { multiple, value: 2.0 * PI * (*multiple.numer() as f64) / (*multiple.denom() as f64) })
}

/// ω-exponent `Σ p − (len − 1)` of a multi-index.
pub fn omega_exponent(p: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| p[i - 1]).sum::<f64>() - (idx.len() as f64 - 1.0)
}

/// Samples of every input and its running integral on a uniform τ-grid over one
/// common period.
pub struct Samples {
    pub n: usize,
    pub h: f64,
    pub period: f64,
    /// `u[j][q] = u_j(k_j τ_q)`, channel `j` stored at `j - 1`.
    pub u: Vec<Vec<f64>>,
    /// `U_j(τ_q) = ∫₀^{τ_q} u_j(k_j p) dp`.
    pub big_u: Vec<Vec<f64>>,
}

impl Samples {
    pub fn new(sys: &ControlAffineSystem, n: usize) -> Result<Samples, CoeffError> {
        if n < 4 || n % 2 == 1 {
            return Err(CoeffError::Grid(n));
        }
        let period = common_period(&sys.k())?.value;
        let h = period / n as f64;
        let mut u = Vec::with_capacity(sys.m());
        let mut big_u = Vec::with_capacity(sys.m());
        for ch in sys.channels() {
            let w = &ch.waveform;
            let kf = *ch.k.numer() as f64 / *ch.k.denom() as f64;
            let uj: Vec<f64> = (0..=n).map(|q| w.eval(phase(ch.k, q as f64 * h))).collect();
            let uj_int = if w.has_antiderivative() {
                let a0 = w.anti(0.0).unwrap_or(f64::NAN);
                (0..=n).map(|q| (w.anti(phase(ch.k, q as f64 * h)).unwrap_or(f64::NAN) - a0) / kf).collect()
            } else {
                cumulative(&uj, h)
            };
            u.push(uj);
            big_u.push(uj_int);
        }
        Ok(Samples { n, h, period, u, big_u })
    }

    /// `u_j U_i − u_i U_j` (the innermost antisymmetric integrand).
    pub fn a1(&self, i: usize, j: usize) -> Vec<f64> {
        let (ui, uj) = (&self.u[i - 1], &self.u[j - 1]);
        let (bi, bj) = (&self.big_u[i - 1], &self.big_u[j - 1]);
        (0..=self.n).map(|q| uj[q] * bi[q] - ui[q] * bj[q]).collect()
    }

    fn mean(&self, f: &[f64]) -> f64 {
        simpson(f, self.h) / self.period
    }

    pub fn nu2(&self, i: usize, j: usize) -> f64 {
        self.mean(&self.a1(i, j)) / 2.0
    }

    pub fn nu3(&self, i: usize, j: usize, e: usize) -> f64 {
        let a1 = self.a1(i, j);
        let ue = &self.big_u[e - 1];
        let f: Vec<f64> = a1.iter().zip(ue).map(|(a, b)| a * b).collect();
        self.mean(&f) / 3.0
    }

    pub fn beta1(&self, i: usize, j: usize, e: usize, l: usize) -> f64 {
        let alpha2 = cumulative(&self.a1(i, j), self.h);
        self.beta1_from(&alpha2, e, l)
    }

    fn beta1_from(&self, alpha2: &[f64], e: usize, l: usize) -> f64 {
        let (ue, ul) = (&self.u[e - 1], &self.u[l - 1]);
        let ce = cumulative(&mul(ue, alpha2), self.h);
        let cl = cumulative(&mul(ul, alpha2), self.h);
        let alpha5: Vec<f64> = (0..=self.n).map(|q| ul[q] * ce[q] - ue[q] * cl[q]).collect();
        self.mean(&alpha5) / 12.0
    }

    pub fn beta2(&self, i: usize, j: usize, e: usize, l: usize) -> f64 {
        let a1 = self.a1(i, j);
        let alpha2 = cumulative(&a1, self.h);
        self.beta2_from(&a1, &alpha2, e, l)
    }

    fn beta2_from(&self, a1: &[f64], alpha2: &[f64], e: usize, l: usize) -> f64 {
        let (ue, ul) = (&self.u[e - 1], &self.u[l - 1]);
        let c8 = cumulative(&mul(alpha2, ue), self.h);
        let c10 = cumulative(&mul(a1, &self.big_u[l - 1]), self.h);
        let f: Vec<f64> = (0..=self.n).map(|q| c8[q] * ul[q] - ue[q] * c10[q]).collect();
        self.mean(&f) / 12.0
    }

    /// Value of a coefficient of any family.
    pub fn value(&self, family: Family, idx: &[usize]) -> f64 {
        match family {
            Family::Nu2 => self.nu2(idx[0], idx[1]),
            Family::Nu3 => self.nu3(idx[0], idx[1], idx[2]),
            Family::Beta1 => self.beta1(idx[0], idx[1], idx[2], idx[3]),
            Family::Beta2 => self.beta2(idx[0], idx[1], idx[2], idx[3]),
            Family::LegacyNu2 | Family::LegacyNu3 => {
                unreachable!("legacy coefficients are evaluated in t-scale")
            }
        }
    }

    /// All requested values, sharing `a1` and `α₂` between indices with the same leading pair.
    fn values(&self, keys: &[(Family, Vec<usize>)]) -> Vec<f64> {
        let mut inner: BTreeMap<(usize, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for (_, idx) in keys {
            inner.entry((idx[0], idx[1])).or_insert_with(|| {
                let a1 = self.a1(idx[0], idx[1]);
                let a2 = cumulative(&a1, self.h);
                (a1, a2)
            });
        }
        keys.par_iter()
            .map(|(fam, idx)| {
                let (a1, a2) = &inner[&(idx[0], idx[1])];
                match fam {
                    Family::Nu2 => self.mean(a1) / 2.0,
                    Family::Nu3 => self.mean(&mul(a1, &self.big_u[idx[2] - 1])) / 3.0,
                    Family::Beta1 => self.beta1_from(a2, idx[2], idx[3]),
                    Family::Beta2 => self.beta2_from(a1, a2, idx[2], idx[3]),
                    _ => unreachable!(),
                }
            })
            .collect()
    }
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn check_index(sys: &ControlAffineSystem, family: Family, idx: &[usize]) -> Result<(), CoeffError> {
    let ok = idx.len() == family.arity() && idx.iter().all(|&i| (1..=sys.m()).contains(&i));
    if ok {
        Ok(())
    } else {
        Err(CoeffError::Index(idx.to_vec()))
    }
}

/// Evaluate one coefficient with grid doubling from `n` until converged or [`MAX_GRID`].
pub fn coefficient(
    sys: &ControlAffineSystem,
    family: Family,
    idx: &[usize],
    n: usize,
) -> Result<Coefficient, CoeffError> {
    check_index(sys, family, idx)?;
    let table = build_table(sys, &[(family, idx.to_vec())], n)?;
    Ok(table.entries.into_values().next().expect("one entry"))
}

pub fn nu2(sys: &ControlAffineSystem, j1: usize, j2: usize, n: usize) -> Result<Coefficient, CoeffError> {
    coefficient(sys, Family::Nu2, &[j1, j2], n)
}

pub fn nu3(sys: &ControlAffineSystem, j1: usize, j2: usize, j3: usize, n: usize) -> Result<Coefficient, CoeffError> {
    coefficient(sys, Family::Nu3, &[j1, j2, j3], n)
}

pub fn beta(sys: &ControlAffineSystem, idx: [usize; 4], family: Family, n: usize) -> Result<Coefficient, CoeffError> {
    coefficient(sys, family, &idx, n)
}

fn converged(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONVERGENCE_TOL * b.abs().max(1.0)
}

/// All coefficients keyed by family and 1-based multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub entries: BTreeMap<(Family, Vec<usize>), Coefficient>,
    pub period: Period,
    /// Grid size of the reported values.
    pub grid: usize,
}

impl CoefficientTable {
    pub fn get(&self, family: Family, idx: &[usize]) -> Option<&Coefficient> {
        self.entries.get(&(family, idx.to_vec()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Coefficient> {
        self.entries.values()
    }

    pub fn all_converged(&self) -> bool {
        self.entries.values().all(|c| c.converged)
    }

    /// CSV with header `family,indices,value,omega_exponent,class,converged`.
    /// The indices field expands to one column per channel index, so rows of
    /// different families have different widths; the last four columns are fixed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("family,indices,value,omega_exponent,class,converged\n");
        for c in self.entries.values() {
            out.push_str(&csv_row(c));
        }
        out
    }
}

pub fn csv_row(c: &Coefficient) -> String {
    let idx: Vec<String> = c.indices.iter().map(|i| i.to_string()).collect();
    format!(
        "{},{},{},{},{},{}\n",
        c.family.name(),
        idx.join(","),
        fmt_value(c.value),
        fmt_exponent(c.omega_exponent),
        c.class.name(),
        c.converged
    )
}

/// 12 significant digits, trailing zeros trimmed, `-0` normalized.
pub fn fmt_value(v: f64) -> String {
    if v == 0.0 || v.abs() < 1e-300 {
        return "0".into();
    }
    let s = format!("{:.*e}", 11, v);
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let digits = (11 - exp).max(0) as usize;
        trim(&format!("{v:.digits$}"))
    } else {
        format!("{}e{exp}", trim(mant))
    }
}

/// Exponents are sums of user `p` values; round to 1e-12 to hide float dust.
pub fn fmt_exponent(e: f64) -> String {
    let r = (e * 1e12).round() / 1e12;
    if r == 0.0 {
        "0".into()
    } else {
        trim(&format!("{r:.12}"))
    }
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Coefficients needed for truncation order `r`, with grid doubling from `n`.
pub fn coefficient_table(sys: &ControlAffineSystem, r: usize, n: usize) -> Result<CoefficientTable, CoeffError> {
    let keys: Vec<(Family, Vec<usize>)> =
        enumerate_brackets(sys.m(), r)?.into_iter().map(|t| (t.family, t.indices)).collect();
    build_table(sys, &keys, n)
}

/// Evaluate `keys` at `N`, `2N`, … until every value changes by at most
/// [`CONVERGENCE_TOL`] or the grid reaches [`MAX_GRID`].
pub fn build_table(
    sys: &ControlAffineSystem,
    keys: &[(Family, Vec<usize>)],
    n: usize,
) -> Result<CoefficientTable, CoeffError> {
    for (f, idx) in keys {
        check_index(sys, *f, idx)?;
    }
    let period = common_period(&sys.k())?;
    let p = sys.p();
    let mut grid = n;
    let mut prev = Samples::new(sys, grid)?.values(keys);
    let mut ok: Vec<bool>;
    loop {
        let next_grid = grid * 2;
        if next_grid > MAX_GRID.max(n * 2) {
            ok = vec![false; keys.len()];
            break;
        }
        let next = Samples::new(sys, next_grid)?.values(keys);
        ok = prev.iter().zip(&next).map(|(a, b)| converged(*a, *b)).collect();
        grid = next_grid;
        prev = next;
        if ok.iter().all(|&c| c) || grid >= MAX_GRID {
            break;
        }
    }
    let entries = keys
        .iter()
        .zip(prev)
        .zip(ok)
        .map(|(((family, idx), value), conv)| {
            let e = omega_exponent(&p, idx);
            let c = Coefficient {
                family: *family,
                indices: idx.clone(),
                value,
                omega_exponent: e,
                class: Class::of_exponent(e),
                converged: conv,
            };
            ((*family, idx.clone()), c)
        })
        .collect();
    Ok(CoefficientTable { entries, period, grid })
}

/// Second-order coefficient of the classical second-order averaged system,
/// integrated directly in t over `T = T'/ω` at the given ω. The stored value is
/// the ω-free part, so it compares directly with [`nu2`].
pub fn nu2_legacy(
    sys: &ControlAffineSystem,
    i: usize,
    j: usize,
    n: usize,
    omega: f64,
) -> Result<Coefficient, CoeffError> {
    legacy(sys, Family::LegacyNu2, &[i, j], n, omega)
}

/// Third-order legacy coefficient multiplying `[[b_i, b_j], b_k]`.
pub fn nu3_legacy(
    sys: &ControlAffineSystem,
    i: usize,
    j: usize,
    k: usize,
    n: usize,
    omega: f64,
) -> Result<Coefficient, CoeffError> {
    legacy(sys, Family::LegacyNu3, &[i, j, k], n, omega)
}

fn legacy_value(
    sys: &ControlAffineSystem,
    family: Family,
    idx: &[usize],
    n: usize,
    omega: f64,
) -> Result<f64, CoeffError> {
    let period = common_period(&sys.k())?.value / omega;
    let h = period / n as f64;
    let input = |c: usize| -> Vec<f64> {
        let ch = sys.channel(c);
        (0..=n).map(|q| ch.waveform.eval(phase(ch.k, omega * (q as f64 * h)))).collect()
    };
    let p = sys.p();
    let (ui, uj) = (input(idx[0]), input(idx[1]));
    let ci = cumulative(&ui, h);
    let wsum: f64 = idx.iter().map(|&c| p[c - 1]).sum();
    let scale = omega.powf(wsum) / period;
    Ok(match family {
        Family::LegacyNu2 => scale * simpson(&mul(&uj, &ci), h),
        _ => {
            let cj = cumulative(&uj, h);
            let inner: Vec<f64> = (0..=n).map(|q| uj[q] * ci[q] - ui[q] * cj[q]).collect();
            let double = cumulative(&inner, h);
            let uk = input(idx[2]);
            scale / 3.0 * simpson(&mul(&uk, &double), h)
        }
    })
}

fn legacy(
    sys: &ControlAffineSystem,
    family: Family,
    idx: &[usize],
    n: usize,
    omega: f64,
) -> Result<Coefficient, CoeffError> {
    check_index(sys, family, idx)?;
    if n < 4 || n % 2 == 1 {
        return Err(CoeffError::Grid(n));
    }
    let e = omega_exponent(&sys.p(), idx);
    let mut grid = n;
    let mut prev = legacy_value(sys, family, idx, grid, omega)?;
    let mut conv = false;
    while grid * 2 <= MAX_GRID.max(n * 2) {
        grid *= 2;
        let next = legacy_value(sys, family, idx, grid, omega)?;
        conv = converged(prev, next);
        prev = next;
        if conv || grid >= MAX_GRID {
            break;
        }
    }
    Ok(Coefficient {
        family,
        indices: idx.to_vec(),
        value: prev / omega.powf(e),
        omega_exponent: e,
        class: Class::of_exponent(e),
        converged: conv,
    })
}
