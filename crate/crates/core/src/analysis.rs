//! Scaling-condition checks on the amplitude exponents and empirical error decay.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::coeffs::{omega_exponent, Class, CoefficientTable};
use crate::geometry::{enumerate_brackets, zero_proof, GeometryError, ZeroProof};
use crate::lbs::{assemble, LbsError};
use crate::sim::{compare, simulate_lbs, simulate_original, SimError};
use crate::system::ControlAffineSystem;

/// Absolute tolerance on `Σp = m − 1`.
pub const SUM_TOL: f64 = 1e-9;

/// Open, half-open or empty interval of admissible `p*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub empty: bool,
}

impl Interval {
    fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Interval {
        let empty = lo > hi || (lo == hi && !(lo_closed && hi_closed));
        Interval { lo, hi, lo_closed, hi_closed, empty }
    }

    pub fn intersect(&self, o: &Interval) -> Interval {
        let (lo, lo_closed) = if self.lo > o.lo {
            (self.lo, self.lo_closed)
        } else if o.lo > self.lo {
            (o.lo, o.lo_closed)
        } else {
            (self.lo, self.lo_closed && o.lo_closed)
        };
        let (hi, hi_closed) = if self.hi < o.hi {
            (self.hi, self.hi_closed)
        } else if o.hi < self.hi {
            (o.hi, o.hi_closed)
        } else {
            (self.hi, self.hi_closed && o.hi_closed)
        };
        Interval::new(lo, lo_closed, hi, hi_closed)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassCounts {
    pub vanishing: usize,
    pub bounded: usize,
    pub unbounded: usize,
    /// Of the unbounded ones, how many multiply a bracket that is not zero.
    pub unbounded_nonzero: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderVerdict {
    pub r: usize,
    /// `[max p, r/(r+1))` intersected with the well-posedness interval.
    pub p_star_interval: Interval,
    /// No retained term up to order `r` is unbounded.
    pub limit_bounded: bool,
    /// The O(ε) condition `p* ≥ max p` and the order condition cannot hold together.
    pub joint_infeasible: bool,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionResult {
    pub satisfied: bool,
    pub residual: f64,
    pub order_condition: bool,
    pub limit_bounded: bool,
    pub near_miss: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DesignReport {
    pub m: usize,
    pub r: usize,
    pub p: Vec<f64>,
    /// `(0, min(pᵢ/2 + 1/2))`.
    pub well_posed: Interval,
    /// `[max p, 1)`, giving an O(ε) right-hand side.
    pub order_eps: Interval,
    pub order_eps_feasible: bool,
    /// `[2 max p − 1, 1)`, giving O(ε^{1/2}).
    pub order_sqrt_eps: Interval,
    pub complete_by_order: OrderVerdict,
    /// `Σp = m − 1` with `r ≥ m`.
    pub complete_by_sum: ConditionResult,
    pub complete_averaging: bool,
    /// `p* = max pᵢ`, the value used for ε.
    pub p_star: f64,
    pub omega: f64,
    pub epsilon: f64,
    pub classes: BTreeMap<String, ClassCounts>,
    pub notes: Vec<String>,
}

/// Integral values at or below this magnitude count as zero when a table is given.
pub const ZERO_VALUE: f64 = 1e-10;

/// Evaluate every scaling condition for truncation order `r`.
///
/// Classes come from the exponents alone. A term that is unbounded only
/// matters if its bracket is not identically zero and, when `table` is given,
/// its iterated integral does not vanish.
pub fn check_design(
    sys: &ControlAffineSystem,
    r: usize,
    table: Option<&CoefficientTable>,
) -> Result<DesignReport, GeometryError> {
    let p = sys.p();
    let m = p.len();
    let pmax = p.iter().copied().fold(f64::MIN, f64::max);
    let bound = p.iter().map(|pi| pi / 2.0 + 0.5).fold(f64::MAX, f64::min);
    let well_posed = Interval::new(0.0, false, bound, false);
    let order_eps = Interval::new(pmax, true, 1.0, false).intersect(&well_posed);
    let order_sqrt_eps = Interval::new((2.0 * pmax - 1.0).max(0.0), true, 1.0, false).intersect(&well_posed);

    let terms = enumerate_brackets(m, r)?;
    let mut classes: BTreeMap<String, ClassCounts> = BTreeMap::new();
    // Per order, whether any retained term is unbounded.
    let mut unbounded_at: BTreeMap<usize, bool> = BTreeMap::new();
    for t in &terms {
        let e = omega_exponent(&p, &t.indices);
        let class = Class::of_exponent(e);
        let entry = classes.entry(t.family.name().to_string()).or_insert(ClassCounts {
            vanishing: 0,
            bounded: 0,
            unbounded: 0,
            unbounded_nonzero: 0,
        });
        match class {
            Class::Vanishing => entry.vanishing += 1,
            Class::Bounded => entry.bounded += 1,
            Class::Unbounded => {
                entry.unbounded += 1;
                let integral_zero =
                    table.and_then(|tb| tb.get(t.family, &t.indices)).is_some_and(|c| c.value.abs() <= ZERO_VALUE);
                let nonzero = !integral_zero && zero_proof(&t.expr, sys) == ZeroProof::NonZero;
                if nonzero {
                    entry.unbounded_nonzero += 1;
                    unbounded_at.insert(t.family.order(), true);
                }
            }
        }
    }
    let bounded_upto = |k: usize| !(2..=k).any(|i| unbounded_at.get(&i).copied().unwrap_or(false));

    let order_iv = Interval::new(pmax, true, r as f64 / (r as f64 + 1.0), false).intersect(&well_posed);
    let limit_bounded = bounded_upto(r);
    let complete_by_order = OrderVerdict {
        r,
        p_star_interval: order_iv,
        limit_bounded,
        joint_infeasible: order_iv.empty,
        satisfied: !order_iv.empty && limit_bounded,
    };

    let residual = p.iter().sum::<f64>() - (m as f64 - 1.0);
    let order_condition = r >= m;
    let sum_ok = residual.abs() <= SUM_TOL;
    let lb = bounded_upto(m.min(r));
    let complete_by_sum = ConditionResult {
        satisfied: order_condition && sum_ok && lb,
        residual,
        order_condition,
        limit_bounded: lb,
        near_miss: !sum_ok && residual.abs() <= 0.05,
    };

    let mut notes = Vec::new();
    if order_eps.empty {
        notes.push("no p* gives an O(eps) right-hand side within the well-posedness interval".into());
    }
    if order_iv.empty && !Interval::new(pmax, true, 1.0, false).empty {
        notes.push(format!("order condition p* < {}/{} is incompatible with p* >= max p = {pmax}", r, r + 1));
    }
    if complete_by_sum.near_miss {
        notes.push(format!("sum of p misses m - 1 by {residual:.3e}"));
    }

    let omega = sys.omega();
    Ok(DesignReport {
        m,
        r,
        p,
        well_posed,
        order_eps,
        order_eps_feasible: !order_eps.empty,
        order_sqrt_eps,
        complete_averaging: complete_by_order.satisfied || complete_by_sum.satisfied,
        complete_by_order,
        complete_by_sum,
        p_star: pmax,
        omega,
        epsilon: omega.powf(pmax - 1.0),
        classes,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("a sweep needs at least 3 strictly increasing ω values")]
    Omegas,
    #[error(transparent)]
    Lbs(#[from] LbsError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub omega: f64,
    pub epsilon: f64,
    pub d_sup: f64,
    pub d_rms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub r: usize,
    pub p_star: f64,
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `log d_sup` against `log ε`.
    pub slope: f64,
    /// 95% confidence half-width of the slope (NaN with fewer than 3 points).
    pub slope_halfwidth: f64,
    pub slope_rms: f64,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,epsilon,d_sup,d_rms\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::sim::full(p.omega),
                crate::sim::full(p.epsilon),
                crate::sim::full(p.d_sup),
                crate::sim::full(p.d_rms)
            ));
        }
        out
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].d_sup < w[0].d_sup)
    }
}

/// Compare the original system with its r-order LBS at each ω.
pub fn sweep_omega(
    sys: &ControlAffineSystem,
    r: usize,
    table: &CoefficientTable,
    omegas: &[f64],
    x0: &[f64],
    t_final: f64,
    dt: f64,
) -> Result<SweepResult, SweepError> {
    if omegas.len() < 3 || omegas.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(SweepError::Omegas);
    }
    let p_star = sys.p().iter().copied().fold(f64::MIN, f64::max);
    // Assemble once; the per-ω systems only differ in weights.
    let base = assemble(sys, r, table, omegas[0])?;
    let points: Vec<SweepPoint> = omegas
        .par_iter()
        .map(|&omega| {
            let s = sys.with_omega(omega);
            let avg = base.reweight(omega);
            let run = || -> Result<(f64, f64), SimError> {
                let a = simulate_original(&s, x0, t_final, dt)?;
                let b = simulate_lbs(&avg, x0, t_final, dt, true)?;
                if let Some(t) = a.diverged_at.or(b.diverged_at) {
                    return Err(SimError::Eval { t, message: "state diverged".into() });
                }
                let d = compare(&a, &b)?;
                Ok((d.sup, d.rms))
            };
            let epsilon = omega.powf(p_star - 1.0);
            match run() {
                Ok((d_sup, d_rms)) => SweepPoint { omega, epsilon, d_sup, d_rms, error: None },
                Err(e) => SweepPoint { omega, epsilon, d_sup: f64::NAN, d_rms: f64::NAN, error: Some(e.to_string()) },
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| p.d_sup.is_finite() && p.d_sup > 0.0).map(|p| (p.epsilon.ln(), p.d_sup.ln())).unzip();
    let fit = linear_fit(&xs, &ys);
    Ok(SweepResult { r, p_star, points, slope: fit.slope, slope_halfwidth: fit.halfwidth, slope_rms: fit.residual_rms })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence half-width of the slope.
    pub halfwidth: f64,
    pub residual_rms: f64,
}

/// Ordinary least squares `y ≈ a + b x` with a Student-t confidence band on `b`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len();
    if n < 2 {
        return LinearFit { slope: f64::NAN, intercept: f64::NAN, halfwidth: f64::NAN, residual_rms: f64::NAN };
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let residual_rms = (sse / nf).sqrt();
    let halfwidth = if n > 2 {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).map(|d| d.inverse_cdf(0.975)).unwrap_or(f64::NAN);
        t * se
    } else {
        f64::NAN
    };
    LinearFit { slope, intercept, halfwidth, residual_rms }
}
