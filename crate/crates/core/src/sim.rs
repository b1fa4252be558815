//! Fixed-step RK4 integration, trajectory comparison and effort integrals.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::lbs::AveragedSystem;
use crate::system::ControlAffineSystem;

/// Samples per period of the fastest input harmonic.
pub const POINTS_PER_PERIOD: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("right-hand side failed at t = {t}: {message}")]
    Eval { t: f64, message: String },
    #[error("invalid time span [{0}, {1}] or step {2}")]
    Span(f64, f64, f64),
    #[error("trajectories do not overlap in time")]
    Disjoint,
    #[error("trajectory has no input samples")]
    MissingInputs,
    #[error("state dimensions differ ({0} vs {1})")]
    Dimension(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    /// `uᵢ(kᵢωt)` at every sample, when recorded.
    pub u: Option<Vec<Vec<f64>>>,
    /// First time at which the state became non-finite; the record stops before it.
    pub diverged_at: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn last(&self) -> &[f64] {
        self.x.last().expect("non-empty trajectory")
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.x.iter().map(|s| s[k]).collect()
    }

    /// CSV with header `t,x1,...,xn[,u1,...,um]` at 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.dim();
        let m = self.u.as_ref().and_then(|u| u.first()).map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 1..=n {
            let _ = write!(out, ",x{i}");
        }
        for i in 1..=m {
            let _ = write!(out, ",u{i}");
        }
        out.push('\n');
        for (q, t) in self.t.iter().enumerate() {
            out.push_str(&full(*t));
            for v in &self.x[q] {
                out.push(',');
                out.push_str(&full(*v));
            }
            if let Some(u) = &self.u {
                for v in &u[q] {
                    out.push(',');
                    out.push_str(&full(*v));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Full-precision decimal (17 significant digits).
pub fn full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Step-size policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRule {
    pub dt: f64,
    /// `(ω, k_max)` of the oscillatory inputs, if any.
    pub oscillation: Option<(f64, f64)>,
}

impl StepRule {
    pub fn fixed(dt: f64) -> StepRule {
        StepRule { dt, oscillation: None }
    }

    /// `min(dt, 2π/(ω k_max · 40))` for the system's inputs.
    pub fn for_system(sys: &ControlAffineSystem, dt: f64) -> StepRule {
        let kmax = sys.k().iter().map(|k| *k.numer() as f64 / *k.denom() as f64).fold(0.0, f64::max);
        StepRule { dt, oscillation: Some((sys.omega(), kmax)) }
    }

    pub fn step(&self) -> f64 {
        match self.oscillation {
            Some((w, k)) if w > 0.0 && k > 0.0 => self.dt.min(2.0 * PI / (w * k * POINTS_PER_PERIOD)),
            _ => self.dt,
        }
    }
}

/// Classical RK4 on `[t0, t_final]` with the step from `rule`, shrunk so the
/// grid ends exactly at `t_final`.
pub fn integrate<F, E>(mut rhs: F, x0: &[f64], t0: f64, t_final: f64, rule: StepRule) -> Result<Trajectory, SimError>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    E: std::fmt::Display,
{
    let dt_max = rule.step();
    if t_final.partial_cmp(&t0) != Some(Ordering::Greater) || dt_max <= 0.0 || !dt_max.is_finite() {
        return Err(SimError::Span(t0, t_final, dt_max));
    }
    let steps = ((t_final - t0) / dt_max - 1e-9).ceil().max(1.0) as usize;
    let h = (t_final - t0) / steps as f64;
    let n = x0.len();
    let mut t_out = Vec::with_capacity(steps + 1);
    let mut x_out = Vec::with_capacity(steps + 1);
    t_out.push(t0);
    x_out.push(x0.to_vec());
    let mut x = x0.to_vec();
    let mut tmp = vec![0.0; n];
    let mut f = |t: f64, x: &[f64]| rhs(t, x).map_err(|e| SimError::Eval { t, message: e.to_string() });
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let k1 = f(t, &x)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        let k2 = f(t + 0.5 * h, &tmp)?;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        let k3 = f(t + 0.5 * h, &tmp)?;
        for i in 0..n {
            tmp[i] = x[i] + h * k3[i];
        }
        let k4 = f(t + h, &tmp)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = t0 + (s + 1) as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Ok(Trajectory { t: t_out, x: x_out, u: None, diverged_at: Some(t_next) });
        }
        t_out.push(t_next);
        x_out.push(x.clone());
    }
    Ok(Trajectory { t: t_out, x: x_out, u: None, diverged_at: None })
}

/// Integrate the oscillatory system and record its inputs.
pub fn simulate_original(sys: &ControlAffineSystem, x0: &[f64], t_final: f64, dt: f64) -> Result<Trajectory, SimError> {
    let mut tr = integrate(|t, x| sys.rhs_original(t, x), x0, 0.0, t_final, StepRule::for_system(sys, dt))?;
    tr.u = Some(tr.t.iter().map(|&t| sys.inputs(t)).collect());
    Ok(tr)
}

/// Integrate an averaged system. With `align` set, the step follows the
/// oscillatory rule of the source system so the grid matches [`simulate_original`].
pub fn simulate_lbs(
    avg: &AveragedSystem,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    align: bool,
) -> Result<Trajectory, SimError> {
    let rule = if align { StepRule::for_system(avg.system(), dt) } else { StepRule::fixed(dt) };
    integrate(|_, z| avg.rhs(z), x0, 0.0, t_final, rule)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Distance {
    pub sup: f64,
    pub rms: f64,
}

/// Per-sample distance on `a`'s grid (restricted to the common span).
pub fn distance_series(a: &Trajectory, b: &Trajectory) -> Result<(Vec<f64>, Vec<f64>), SimError> {
    if a.dim() != b.dim() {
        return Err(SimError::Dimension(a.dim(), b.dim()));
    }
    if a.is_empty() || b.is_empty() {
        return Err(SimError::Disjoint);
    }
    let aligned =
        a.t.len() == b.t.len() && a.t.iter().zip(&b.t).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    let mut ts = Vec::new();
    let mut ds = Vec::new();
    if aligned {
        for q in 0..a.len() {
            ts.push(a.t[q]);
            ds.push(euclid(&a.x[q], &b.x[q]));
        }
        return Ok((ts, ds));
    }
    let lo = a.t[0].max(b.t[0]);
    let hi = a.t[a.len() - 1].min(*b.t.last().expect("non-empty"));
    if hi < lo {
        return Err(SimError::Disjoint);
    }
    for q in 0..a.len() {
        let t = a.t[q];
        if t < lo - 1e-12 || t > hi + 1e-12 {
            continue;
        }
        ts.push(t);
        ds.push(euclid(&a.x[q], &interpolate(b, t)));
    }
    if ts.is_empty() {
        return Err(SimError::Disjoint);
    }
    Ok((ts, ds))
}

/// Sup and RMS (time-averaged, trapezoid) distance over the common span.
pub fn compare(a: &Trajectory, b: &Trajectory) -> Result<Distance, SimError> {
    let (ts, ds) = distance_series(a, b)?;
    let sup = ds.iter().copied().fold(0.0, f64::max);
    let rms = if ts.len() < 2 {
        ds[0]
    } else {
        let sq: Vec<f64> = ds.iter().map(|d| d * d).collect();
        let span = ts[ts.len() - 1] - ts[0];
        (trapezoid(&ts, &sq) / span).sqrt()
    };
    Ok(Distance { sup, rms })
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    (1..t.len()).map(|q| 0.5 * (t[q] - t[q - 1]) * (f[q] + f[q - 1])).sum()
}

/// Cubic (4-point Lagrange) interpolation of the state at time `t`.
pub fn interpolate(tr: &Trajectory, t: f64) -> Vec<f64> {
    let n = tr.len();
    if n == 1 {
        return tr.x[0].clone();
    }
    let j = match tr.t.binary_search_by(|v| v.partial_cmp(&t).expect("finite time")) {
        Ok(j) => return tr.x[j].clone(),
        Err(j) => j.clamp(1, n - 1),
    };
    if n < 4 {
        let (t0, t1) = (tr.t[j - 1], tr.t[j]);
        let w = (t - t0) / (t1 - t0);
        return tr.x[j - 1].iter().zip(&tr.x[j]).map(|(a, b)| a + w * (b - a)).collect();
    }
    let start = (j as isize - 2).clamp(0, n as isize - 4) as usize;
    let idx = [start, start + 1, start + 2, start + 3];
    let mut out = vec![0.0; tr.dim()];
    for &a in &idx {
        let mut w = 1.0;
        for &b in &idx {
            if a != b {
                w *= (t - tr.t[b]) / (tr.t[a] - tr.t[b]);
            }
        }
        for (o, v) in out.iter_mut().zip(&tr.x[a]) {
            *o += w * v;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateEffort {
    /// `∫ x₁² dt`.
    #[default]
    First,
    /// `∫ |x|² dt`.
    Norm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Efforts {
    pub t: Vec<f64>,
    pub control: Vec<f64>,
    pub state: Vec<f64>,
}

impl Efforts {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,control_effort,state_effort\n");
        for q in 0..self.t.len() {
            let _ = writeln!(out, "{},{},{}", full(self.t[q]), full(self.control[q]), full(self.state[q]));
        }
        out
    }
}

/// Cumulative `∫ Σ uᵢ² dt` and `∫ x₁² dt` (or `∫ |x|² dt`).
pub fn efforts(tr: &Trajectory, mode: StateEffort) -> Result<Efforts, SimError> {
    let u = tr.u.as_ref().ok_or(SimError::MissingInputs)?;
    let us: Vec<f64> = u.iter().map(|v| v.iter().map(|x| x * x).sum()).collect();
    let xs: Vec<f64> =
        tr.x.iter()
            .map(|v| match mode {
                StateEffort::First => v[0] * v[0],
                StateEffort::Norm => v.iter().map(|x| x * x).sum(),
            })
            .collect();
    Ok(Efforts { t: tr.t.clone(), control: running_trapezoid(&tr.t, &us), state: running_trapezoid(&tr.t, &xs) })
}

fn running_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    out.push(0.0);
    for q in 1..t.len() {
        acc += 0.5 * (t[q] - t[q - 1]) * (f[q] + f[q - 1]);
        out.push(acc);
    }
    out
}

/// Trailing moving average over `window` seconds; samples earlier than one
/// window are averaged over what is available.
pub fn moving_average(tr: &Trajectory, window: f64) -> Trajectory {
    let n = tr.dim();
    let cum: Vec<Vec<f64>> = (0..n).map(|k| running_trapezoid(&tr.t, &tr.component(k))).collect();
    let mut x = Vec::with_capacity(tr.len());
    let mut lo = 0usize;
    for q in 0..tr.len() {
        while tr.t[q] - tr.t[lo] > window + 1e-12 {
            lo += 1;
        }
        let span = tr.t[q] - tr.t[lo];
        x.push((0..n).map(|k| if span > 0.0 { (cum[k][q] - cum[k][lo]) / span } else { tr.x[q][k] }).collect());
    }
    Trajectory { t: tr.t.clone(), x, u: None, diverged_at: tr.diverged_at }
}

/// First time after which `|x_k − target| < tol` holds for the rest of the record.
pub fn settling_time(tr: &Trajectory, k: usize, target: f64, tol: f64) -> Option<f64> {
    if tr.diverged_at.is_some() {
        return None;
    }
    let mut settled: Option<f64> = None;
    for (q, s) in tr.x.iter().enumerate() {
        if (s[k] - target).abs() < tol {
            settled.get_or_insert(tr.t[q]);
        } else {
            settled = None;
        }
    }
    settled
}
