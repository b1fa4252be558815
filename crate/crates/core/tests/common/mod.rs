//! Test-only oracles, written independently of the library's quadrature and
//! bracket code.

#![allow(dead_code)]

use lieavg_core::config::{ChannelConfig, Config, SimulationConfig, WaveformConfig};
use lieavg_core::sim::StateEffort;
use lieavg_core::ControlAffineSystem;
use rand::rngs::StdRng;
use rand::Rng;

/// Closing rule used at odd prefix lengths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rule {
    /// Simpson up to `j − 1` plus the parabolic half-panel through `j − 1, j, j + 1`.
    HalfPanel,
    /// Simpson up to `j − 3` plus a 3/8 panel; shares no stencil with the library.
    ThreeEighths,
}

/// `∫₀^{jh} f` from samples `f`, recomputed from scratch.
pub fn prefix_integral_with(f: &[f64], h: f64, j: usize, rule: Rule) -> f64 {
    let simpson =
        |even: usize| -> f64 { (0..even).step_by(2).map(|q| h / 3.0 * (f[q] + 4.0 * f[q + 1] + f[q + 2])).sum() };
    if j == 0 {
        return 0.0;
    }
    if j.is_multiple_of(2) {
        return simpson(j);
    }
    match rule {
        Rule::HalfPanel if j + 1 < f.len() => simpson(j - 1) + h / 12.0 * (5.0 * f[j - 1] + 8.0 * f[j] - f[j + 1]),
        Rule::HalfPanel => simpson(j - 1) + h / 12.0 * (-f[j - 2] + 8.0 * f[j - 1] + 5.0 * f[j]),
        Rule::ThreeEighths if j == 1 => h / 12.0 * (5.0 * f[0] + 8.0 * f[1] - f[2]),
        Rule::ThreeEighths => {
            let s = j - 3;
            simpson(s) + 3.0 * h / 8.0 * (f[s] + 3.0 * f[s + 1] + 3.0 * f[s + 2] + f[s + 3])
        }
    }
}

/// [`prefix_integral_with`] using the 3/8 closing rule.
pub fn prefix_integral(f: &[f64], h: f64, j: usize) -> f64 {
    prefix_integral_with(f, h, j, Rule::ThreeEighths)
}

/// Every running integral recomputed from scratch (O(N²)).
pub fn nested_with(f: &[f64], h: f64, rule: Rule) -> Vec<f64> {
    (0..f.len()).map(|j| prefix_integral_with(f, h, j, rule)).collect()
}

pub fn nested(f: &[f64], h: f64) -> Vec<f64> {
    nested_with(f, h, Rule::ThreeEighths)
}

fn times(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Direct evaluation of the iterated-integral averages from raw input samples.
pub struct DirectOracle {
    rule: Rule,
    n: usize,
    h: f64,
    period: f64,
    u: Vec<Vec<f64>>,
    big_u: Vec<Vec<f64>>,
}

impl DirectOracle {
    /// `period` is the common period in τ; `n` intervals. Odd prefixes use
    /// the same closing stencil as the library, so only the evaluation
    /// order differs.
    pub fn new(sys: &ControlAffineSystem, period: f64, n: usize) -> DirectOracle {
        DirectOracle::with_rule(sys, period, n, Rule::HalfPanel)
    }

    pub fn with_rule(sys: &ControlAffineSystem, period: f64, n: usize, rule: Rule) -> DirectOracle {
        let h = period / n as f64;
        let u: Vec<Vec<f64>> = sys
            .channels()
            .iter()
            .map(|c| {
                let k = *c.k.numer() as f64 / *c.k.denom() as f64;
                (0..=n).map(|q| c.waveform.eval(k * q as f64 * h)).collect()
            })
            .collect();
        let big_u = u.iter().map(|v| nested_with(v, h, rule)).collect();
        DirectOracle { rule, n, h, period, u, big_u }
    }

    fn mean(&self, f: &[f64]) -> f64 {
        prefix_integral_with(f, self.h, self.n, self.rule) / self.period
    }

    fn nested(&self, f: &[f64]) -> Vec<f64> {
        nested_with(f, self.h, self.rule)
    }

    /// `u_{j2} U_{j1} − u_{j1} U_{j2}`.
    fn inner(&self, j1: usize, j2: usize) -> Vec<f64> {
        (0..=self.n)
            .map(|q| self.u[j2 - 1][q] * self.big_u[j1 - 1][q] - self.u[j1 - 1][q] * self.big_u[j2 - 1][q])
            .collect()
    }

    pub fn nu2(&self, j1: usize, j2: usize) -> f64 {
        self.mean(&self.inner(j1, j2)) / 2.0
    }

    pub fn nu3(&self, j1: usize, j2: usize, j3: usize) -> f64 {
        self.mean(&times(&self.big_u[j3 - 1], &self.inner(j1, j2))) / 3.0
    }

    pub fn beta1(&self, j1: usize, j2: usize, j3: usize, j4: usize) -> f64 {
        let inner2 = self.nested(&self.inner(j1, j2));
        let (u3, u4) = (&self.u[j3 - 1], &self.u[j4 - 1]);
        let c3 = self.nested(&times(u3, &inner2));
        let c4 = self.nested(&times(u4, &inner2));
        let alpha5: Vec<f64> = (0..=self.n).map(|q| u4[q] * c3[q] - u3[q] * c4[q]).collect();
        self.mean(&alpha5) / 12.0
    }

    pub fn beta2(&self, j1: usize, j2: usize, j3: usize, j4: usize) -> f64 {
        let inner = self.inner(j1, j2);
        let inner2 = self.nested(&inner);
        let (u3, u4) = (&self.u[j3 - 1], &self.u[j4 - 1]);
        let alpha8 = times(&self.nested(&times(&inner2, u3)), u4);
        let alpha10 = times(u3, &self.nested(&times(&inner, &self.big_u[j4 - 1])));
        let d: Vec<f64> = alpha8.iter().zip(&alpha10).map(|(a, b)| a - b).collect();
        self.mean(&d) / 12.0
    }
}

/// Channels with the given waveforms `(expr, k)`, all fields `(x1, 0, ..)`.
pub fn waveform_system(waves: &[(&str, &str)]) -> ControlAffineSystem {
    let channels = waves
        .iter()
        .map(|&(e, k)| ChannelConfig {
            components: vec!["x1".into()],
            p: 0.5,
            k: k.into(),
            waveform: WaveformConfig { expr: e.into(), antiderivative: None },
        })
        .collect();
    Config {
        name: None,
        dimension: 1,
        parameters: Default::default(),
        drift: vec!["0".into()],
        channels,
        omega: 10.0,
        domain: vec![[-1.0, 1.0]],
        control_guard: None,
        simulation: SimulationConfig { x0: vec![0.0], t_final: 1.0, dt: 0.01 },
        state_effort: StateEffort::First,
    }
    .to_system()
    .unwrap()
}

/// Random polynomial of total degree ≤ `deg` in `n` variables, as text.
pub fn random_poly(rng: &mut StdRng, n: usize, deg: u32) -> String {
    let terms = rng.random_range(1..=4);
    let mut out = Vec::new();
    for _ in 0..terms {
        let c: f64 = rng.random_range(-2.0..2.0);
        let mut t = format!("{c:.3}");
        let mut left = rng.random_range(0..=deg);
        while left > 0 {
            let v = rng.random_range(1..=n);
            let e = rng.random_range(1..=left);
            t.push_str(&format!("*x{v}^{e}"));
            left -= e;
        }
        out.push(t);
    }
    out.join(" + ")
}

/// A system whose `m` channel fields are random polynomial vector fields.
pub fn poly_system(rng: &mut StdRng, n: usize, m: usize, deg: u32) -> ControlAffineSystem {
    let channels = (0..m)
        .map(|_| ChannelConfig {
            components: (0..n).map(|_| random_poly(rng, n, deg)).collect(),
            p: 0.5,
            k: "1".into(),
            waveform: WaveformConfig { expr: "sin(s)".into(), antiderivative: Some("-cos(s)".into()) },
        })
        .collect();
    Config {
        name: None,
        dimension: n,
        parameters: Default::default(),
        drift: vec!["0".into(); n],
        channels,
        omega: 10.0,
        domain: vec![[-1.5, 1.5]; n],
        control_guard: None,
        simulation: SimulationConfig { x0: vec![0.0; n], t_final: 1.0, dt: 0.01 },
        state_effort: StateEffort::First,
    }
    .to_system()
    .unwrap()
}

/// Central-difference Jacobian of field `i`.
pub fn jacobian_fd(sys: &ControlAffineSystem, i: usize, x: &[f64], step: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut jac = vec![vec![0.0; n]; n];
    for c in 0..n {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[c] += step;
        xm[c] -= step;
        let fp = sys.field(i, &xp).unwrap();
        let fm = sys.field(i, &xm).unwrap();
        for r in 0..n {
            jac[r][c] = (fp[r] - fm[r]) / (2.0 * step);
        }
    }
    jac
}

/// `[f_i, f_j] = Df_j·f_i − Df_i·f_j` from finite-difference Jacobians.
pub fn bracket_fd(sys: &ControlAffineSystem, i: usize, j: usize, x: &[f64], step: f64) -> Vec<f64> {
    let (fi, fj) = (sys.field(i, x).unwrap(), sys.field(j, x).unwrap());
    let (ji, jj) = (jacobian_fd(sys, i, x, step), jacobian_fd(sys, j, x, step));
    (0..x.len()).map(|r| (0..x.len()).map(|c| jj[r][c] * fi[c] - ji[r][c] * fj[c]).sum()).collect()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
