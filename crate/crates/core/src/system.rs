//! The control-affine system `ẋ = b₀(x) + Σᵢ ω^{pᵢ} bᵢ(x) uᵢ(kᵢωt)` and its
//! sampled validation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_rational::Ratio;
use serde::Serialize;

use crate::jetexpr::{self, Expr, Jet, JetSpace, Program, Scope};

pub type Rational = Ratio<i64>;

/// Threshold below which the control guard switches the control fields off.
pub const GUARD_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SystemError {
    #[error("{context}: {source}")]
    Expr { context: String, source: jetexpr::Error },
    #[error("{0}")]
    Structure(String),
    #[error("field {field} could not be evaluated: {source}")]
    Eval { field: usize, source: jetexpr::Error },
}

fn ctx(context: String) -> impl FnOnce(jetexpr::Error) -> SystemError {
    move |source| SystemError::Expr { context, source }
}

/// A 2π-periodic input `u(s)`, optionally with a closed-form antiderivative `A`
/// satisfying `A' = u`.
#[derive(Clone, Debug)]
pub struct Waveform {
    expr: Expr,
    antiderivative: Option<Expr>,
    prog: Program,
    anti: Option<Program>,
}

impl PartialEq for Waveform {
    fn eq(&self, o: &Self) -> bool {
        self.expr == o.expr && self.antiderivative == o.antiderivative
    }
}

impl Waveform {
    pub fn new(
        expr: Expr,
        antiderivative: Option<Expr>,
        params: &BTreeMap<String, f64>,
    ) -> Result<Waveform, SystemError> {
        let scope = Scope { nstates: 0, phase: true, params: Some(params) };
        let prog = Program::compile(&expr, &scope).map_err(ctx("waveform".into()))?;
        let anti = antiderivative
            .as_ref()
            .map(|a| Program::compile(a, &scope))
            .transpose()
            .map_err(ctx("waveform antiderivative".into()))?;
        Ok(Waveform { expr, antiderivative, prog, anti })
    }

    /// Parse from text with no parameters.
    pub fn from_text(expr: &str, antiderivative: Option<&str>) -> Result<Waveform, SystemError> {
        let e = jetexpr::parse(expr).map_err(ctx("waveform".into()))?;
        let a = antiderivative.map(jetexpr::parse).transpose().map_err(ctx("waveform antiderivative".into()))?;
        Waveform::new(e, a, &BTreeMap::new())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn antiderivative(&self) -> Option<&Expr> {
        self.antiderivative.as_ref()
    }

    pub fn has_antiderivative(&self) -> bool {
        self.anti.is_some()
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.prog.eval(&[], s).unwrap_or(f64::NAN)
    }

    /// `A(s)` if a closed form was declared.
    pub fn anti(&self, s: f64) -> Option<f64> {
        self.anti.as_ref().map(|p| p.eval(&[], s).unwrap_or(f64::NAN))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControlChannel {
    pub p: f64,
    pub k: Rational,
    pub waveform: Waveform,
    pub field: Vec<Expr>,
}

/// Field index `0` is the drift, `i >= 1` is channel `i`.
#[derive(Clone, Debug)]
pub struct ControlAffineSystem {
    n: usize,
    params: BTreeMap<String, f64>,
    drift: Vec<Expr>,
    channels: Vec<ControlChannel>,
    omega: f64,
    domain: Vec<(f64, f64)>,
    guard: Option<Expr>,
    progs: Vec<Vec<Program>>,
    const_field: Vec<bool>,
    guard_prog: Option<Program>,
}

impl PartialEq for ControlAffineSystem {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n
            && self.params == o.params
            && self.drift == o.drift
            && self.channels == o.channels
            && self.omega == o.omega
            && self.domain == o.domain
            && self.guard == o.guard
    }
}

/// Builder input for [`ControlAffineSystem::new`].
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub params: BTreeMap<String, f64>,
    pub drift: Vec<Expr>,
    pub channels: Vec<ControlChannel>,
    pub omega: f64,
    pub domain: Vec<(f64, f64)>,
    pub guard: Option<Expr>,
}

impl ControlAffineSystem {
    pub fn new(spec: SystemSpec) -> Result<ControlAffineSystem, SystemError> {
        let SystemSpec { params, drift, channels, omega, domain, guard } = spec;
        let n = drift.len();
        if n == 0 {
            return Err(SystemError::Structure("dimension must be at least 1".into()));
        }
        if channels.is_empty() {
            return Err(SystemError::Structure("at least one control channel is required".into()));
        }
        if domain.len() != n {
            return Err(SystemError::Structure(format!("domain has {} intervals for dimension {n}", domain.len())));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(SystemError::Structure(format!("omega must be positive, got {omega}")));
        }
        let scope = Scope { nstates: n, phase: false, params: Some(&params) };
        let mut progs = Vec::with_capacity(channels.len() + 1);
        let compile_field = |exprs: &[Expr], label: String| -> Result<Vec<Program>, SystemError> {
            if exprs.len() != n {
                return Err(SystemError::Structure(format!("{label} has {} components, expected {n}", exprs.len())));
            }
            exprs
                .iter()
                .enumerate()
                .map(|(c, e)| Program::compile(e, &scope).map_err(ctx(format!("{label} component {}", c + 1))))
                .collect()
        };
        progs.push(compile_field(&drift, "drift".into())?);
        for (i, ch) in channels.iter().enumerate() {
            progs.push(compile_field(&ch.field, format!("channel {}", i + 1))?);
        }
        let guard_prog =
            guard.as_ref().map(|g| Program::compile(g, &scope).map_err(ctx("control guard".into()))).transpose()?;
        let const_field = progs.iter().map(|f| f.iter().all(Program::is_constant)).collect();
        let mut channels = channels;
        for ch in channels.iter_mut() {
            // Rebind waveforms against the system parameters.
            ch.waveform = Waveform::new(ch.waveform.expr.clone(), ch.waveform.antiderivative.clone(), &params)?;
        }
        Ok(ControlAffineSystem { n, params, drift, channels, omega, domain, guard, progs, const_field, guard_prog })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.channels.len()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn drift(&self) -> &[Expr] {
        &self.drift
    }

    pub fn channels(&self) -> &[ControlChannel] {
        &self.channels
    }

    /// Channel `i`, 1-based.
    pub fn channel(&self, i: usize) -> &ControlChannel {
        &self.channels[i - 1]
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn guard(&self) -> Option<&Expr> {
        self.guard.as_ref()
    }

    pub fn p(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.p).collect()
    }

    pub fn k(&self) -> Vec<Rational> {
        self.channels.iter().map(|c| c.k).collect()
    }

    /// Same system at a different ω.
    pub fn with_omega(&self, omega: f64) -> ControlAffineSystem {
        let mut s = self.clone();
        s.omega = omega;
        s
    }

    /// Same system with the waveform of channel `i` (1-based) replaced.
    pub fn with_waveform(&self, i: usize, w: Waveform) -> Result<ControlAffineSystem, SystemError> {
        let mut spec = self.spec();
        let m = spec.channels.len();
        let ch = i
            .checked_sub(1)
            .and_then(|j| spec.channels.get_mut(j))
            .ok_or_else(|| SystemError::Structure(format!("channel {i} out of range 1..={m}")))?;
        ch.waveform = w;
        ControlAffineSystem::new(spec)
    }

    pub fn spec(&self) -> SystemSpec {
        SystemSpec {
            params: self.params.clone(),
            drift: self.drift.clone(),
            channels: self.channels.clone(),
            omega: self.omega,
            domain: self.domain.clone(),
            guard: self.guard.clone(),
        }
    }

    /// True when every component of field `i` is state-independent.
    pub fn field_is_constant(&self, i: usize) -> bool {
        self.const_field[i] && (i == 0 || self.guard.is_none())
    }

    fn guarded(&self, i: usize, x: &[f64]) -> Result<bool, SystemError> {
        match (&self.guard_prog, i) {
            (Some(g), i) if i > 0 => {
                let v = g.eval(x, 0.0).map_err(|source| SystemError::Eval { field: i, source })?;
                Ok(v.abs() <= GUARD_EPS)
            }
            _ => Ok(false),
        }
    }

    /// Value of field `i` at `x`.
    pub fn field(&self, i: usize, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        if self.guarded(i, x)? {
            return Ok(vec![0.0; self.n]);
        }
        self.progs[i].iter().map(|p| p.eval(x, 0.0).map_err(|source| SystemError::Eval { field: i, source })).collect()
    }

    /// Jets of every component of field `i` at `x`.
    pub fn field_jet(&self, i: usize, x: &[f64], order: usize) -> Result<Vec<Jet>, SystemError> {
        if order > jetexpr::MAX_ORDER {
            return Err(SystemError::Eval { field: i, source: jetexpr::Error::OrderTooHigh(order) });
        }
        let space = JetSpace::get(self.n, order);
        if self.guarded(i, x)? {
            return Ok(vec![Jet::constant(space, 0.0); self.n]);
        }
        self.progs[i]
            .iter()
            .map(|p| p.eval_in(space, x).map_err(|source| SystemError::Eval { field: i, source }))
            .collect()
    }

    /// `uᵢ(kᵢ ω t)` for every channel.
    pub fn inputs(&self, t: f64) -> Vec<f64> {
        self.channels.iter().map(|c| c.waveform.eval(phase(c.k, self.omega * t))).collect()
    }

    /// Right-hand side of the oscillatory system.
    pub fn rhs_original(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, SystemError> {
        let mut dx = self.field(0, x)?;
        for (i, ch) in self.channels.iter().enumerate() {
            let u = ch.waveform.eval(phase(ch.k, self.omega * t));
            if u == 0.0 {
                continue;
            }
            let w = self.omega.powf(ch.p) * u;
            let b = self.field(i + 1, x)?;
            for (d, bj) in dx.iter_mut().zip(&b) {
                *d += w * bj;
            }
        }
        Ok(dx)
    }

    /// Period of `rhs_original` in t.
    pub fn period(&self) -> f64 {
        crate::coeffs::common_period(&self.k()).map(|p| p.value).unwrap_or(f64::NAN) / self.omega
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self, &ValidateOptions::default())
    }
}

/// `k·τ` evaluated with the rational split so that large τ keeps precision.
pub fn phase(k: Rational, tau: f64) -> f64 {
    tau * (*k.numer() as f64) / (*k.denom() as f64)
}

#[derive(Clone, Debug)]
pub struct ValidateOptions {
    /// Probe points per axis of the domain box.
    pub grid_per_axis: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { grid_per_axis: 5 }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn validate(sys: &ControlAffineSystem, opts: &ValidateOptions) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: String, passed: bool, measured: &[(&str, f64)], note: Option<String>| {
        checks.push(Check { name, passed, measured: measured.iter().map(|(k, v)| (k.to_string(), *v)).collect(), note })
    };

    for (idx, ch) in sys.channels.iter().enumerate() {
        let i = idx + 1;
        push(format!("channel{i}.p_range"), ch.p > 0.0 && ch.p < 1.0, &[("p", ch.p)], None);
        push(
            format!("channel{i}.k_positive"),
            *ch.k.numer() > 0 && *ch.k.denom() > 0,
            &[("k", *ch.k.numer() as f64 / *ch.k.denom() as f64)],
            None,
        );

        let w = &ch.waveform;
        let mut resid: f64 = 0.0;
        for q in 0..16 {
            let s = 2.0 * PI * (q as f64 + 0.5) / 16.0 + 0.1 * q as f64;
            resid = resid.max((w.eval(s) - w.eval(s + 2.0 * PI)).abs());
        }
        push(format!("channel{i}.periodic"), resid <= 1e-9, &[("residual", resid)], None);

        let grid = 4096;
        let h = 2.0 * PI / grid as f64;
        let vals: Vec<f64> = (0..=grid).map(|q| w.eval(q as f64 * h)).collect();
        let mean = crate::quadrature::simpson(&vals, h) / (2.0 * PI);
        let sup = vals.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        push(format!("channel{i}.zero_mean"), mean.abs() <= 1e-8, &[("mean", mean)], None);
        push(format!("channel{i}.bounded"), sup.is_finite(), &[("sup", sup)], None);

        if w.has_antiderivative() {
            let a0 = w.anti(0.0).unwrap_or(f64::NAN);
            let cum = crate::quadrature::cumulative(&vals, h);
            let mut err: f64 = 0.0;
            for q in (0..=grid).step_by(256) {
                let a = w.anti(q as f64 * h).unwrap_or(f64::NAN) - a0;
                err = err.max((a - cum[q]).abs());
            }
            push(
                format!("channel{i}.antiderivative"),
                err <= 1e-8,
                &[("max_error", err)],
                Some("closed form compared with numeric prefix integral".into()),
            );
        }
    }

    // A1 proxy: every field has finite third-order jets on a grid over the box.
    let pts = box_grid(&sys.domain, opts.grid_per_axis.max(2));
    for f in 0..=sys.m() {
        let label = if f == 0 { "drift.smooth".to_string() } else { format!("channel{f}.smooth") };
        let mut failure: Option<(Vec<f64>, String)> = None;
        for x in &pts {
            match sys.field_jet(f, x, 3) {
                Ok(js) if js.iter().all(|j| j.coefficients().iter().all(|v| v.is_finite())) => {}
                Ok(_) => failure = Some((x.clone(), "non-finite derivative".into())),
                Err(e) => failure = Some((x.clone(), e.to_string())),
            }
            if failure.is_some() {
                break;
            }
        }
        let probes = pts.len() as f64;
        match failure {
            None => push(label, true, &[("probes", probes)], None),
            Some((x, why)) => push(label, false, &[("probes", probes)], Some(format!("at {x:?}: {why}"))),
        }
    }

    if sys.guard.is_some() {
        push(
            "control_guard".into(),
            true,
            &[("threshold", GUARD_EPS)],
            Some("control fields are defined piecewise and vanish where the guard is zero; smoothness holds away from that set only".into()),
        );
    }

    let passed = checks.iter().all(|c| c.passed);
    ValidationReport { passed, checks }
}

/// Tensor grid with `k` points per axis, endpoints included.
pub fn box_grid(domain: &[(f64, f64)], k: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for &(lo, hi) in domain {
        let mut next = Vec::with_capacity(out.len() * k);
        for base in &out {
            for q in 0..k {
                let mut p = base.clone();
                p.push(lo + (hi - lo) * q as f64 / (k - 1) as f64);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Deterministic low-discrepancy (Halton) points inside the box.
pub fn halton_points(domain: &[(f64, f64)], count: usize) -> Vec<Vec<f64>> {
    const PRIMES: [u32; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];
    (1..=count)
        .map(|i| {
            domain
                .iter()
                .enumerate()
                .map(|(d, &(lo, hi))| lo + (hi - lo) * radical_inverse(i as u32, PRIMES[d % PRIMES.len()]))
                .collect()
        })
        .collect()
}

fn radical_inverse(mut i: u32, base: u32) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
