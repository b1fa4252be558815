//! Built-in example systems.
//!
//! Every preset is defined as a [`Config`] so that `preset --emit-config`
//! prints exactly what is simulated.

use std::collections::BTreeMap;

use crate::config::{ChannelConfig, Config, ConfigError, SimulationConfig, WaveformConfig};
use crate::sim::StateEffort;
use crate::system::ControlAffineSystem;

pub const NAMES: [&str; 6] = ["example1", "example2", "example3", "example3_baseline", "example4", "example4_baseline"];

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub config: Config,
    pub system: ControlAffineSystem,
    /// Known closed form of the averaged dynamics, when there is one.
    pub closed_form: Option<&'static str>,
}

impl Preset {
    pub fn x0(&self) -> &[f64] {
        &self.config.simulation.x0
    }

    pub fn t_final(&self) -> f64 {
        self.config.simulation.t_final
    }

    pub fn dt(&self) -> f64 {
        self.config.simulation.dt
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PresetError {
    #[error("unknown preset '{0}' (known: {known})", known = NAMES.join(", "))]
    Unknown(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

pub fn build(name: &str) -> Result<Preset, PresetError> {
    let (name, config, closed_form) = match name {
        "example1" => ("example1", example1(), Some(EX1_CLOSED)),
        "example2" => ("example2", example2(), Some(EX2_CLOSED)),
        "example3" => ("example3", example3(), None),
        "example3_baseline" => ("example3_baseline", example3_baseline(), Some(EX2_CLOSED)),
        "example4" => ("example4", example4(), Some(EX4_CLOSED)),
        "example4_baseline" => ("example4_baseline", example4_baseline(), Some(EX4_BASELINE_CLOSED)),
        other => return Err(PresetError::Unknown(other.to_string())),
    };
    let system = config.to_system()?;
    Ok(Preset { name, config, system, closed_form })
}

const EX1_CLOSED: &str = "r=2: z1' = (a/2)·J'(z1), z2' = h·(J(z1) - z2), J = -H(z1-1)^4";
const EX2_CLOSED: &str = "r=3, ω → ∞: ż = b₀(z) + (0, 0, wy·J'(z1), wz·J''(z1))";
const EX4_CLOSED: &str = "r=2: ż = -(ν₁₂ + ν₃₄)·J'(z) = -2.5·J'(z), since [b₁,b₂] = [b₃,b₄] = -J'";
const EX4_BASELINE_CLOSED: &str = "r=2: ż = -J'(z)/2";

fn params(list: &[(&str, f64)]) -> BTreeMap<String, f64> {
    list.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

fn channel(components: &[&str], p: f64, k: &str, expr: &str, anti: &str) -> ChannelConfig {
    ChannelConfig {
        components: components.iter().map(|s| s.to_string()).collect(),
        p,
        k: k.to_string(),
        waveform: WaveformConfig { expr: expr.to_string(), antiderivative: Some(anti.to_string()) },
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

const SIN: (&str, &str) = ("sin(s)", "-cos(s)");
const COS: (&str, &str) = ("cos(s)", "sin(s)");

/// Extremum seeking on `J = -H(x1-1)^4` with a high-pass state `x2`.
fn example1() -> Config {
    let j = "-H*(x1-1)^4 - x2";
    Config {
        name: Some("example1".into()),
        dimension: 2,
        parameters: params(&[("H", 0.1), ("h", 5.0), ("a", 1.0)]),
        drift: strings(&["0", "h*(-H*(x1-1)^4 - x2)"]),
        channels: vec![channel(&[j, "0"], 0.5, "1", SIN.0, SIN.1), channel(&["a", "0"], 0.5, "1", COS.0, COS.1)],
        omega: 20.0,
        domain: vec![[-2.0, 5.0], [-60.0, 10.0]],
        control_guard: None,
        simulation: SimulationConfig { x0: vec![4.0, 0.0], t_final: 50.0, dt: 0.01 },
        state_effort: StateEffort::First,
    }
}

/// Newton-like extremum seeking: `x1` is the parameter, `d` the Hessian
/// estimate, `y` and `z` filtered gradient and curvature estimates.
fn newton_config(name: &str, cost: &str, omega: f64, x0: Vec<f64>, t_final: f64) -> Config {
    let b2 = format!("a2*({cost})");
    let b3 = format!("a3*({cost})");
    Config {
        name: Some(name.into()),
        dimension: 4,
        // a2 = -2·k·wy and a3 = 8·k²·wz with k = 1, so the averaged dynamics
        // read ẏ = -wy·y + wy·J', ż = -wz·z + wz·J''.
        parameters: params(&[("rho", 0.3), ("wd", 0.5), ("wy", 20.0), ("wz", 0.5), ("a2", -40.0), ("a3", 4.0)]),
        drift: strings(&["rho*x2", "-wd*(x3 + x4*x2)", "-wy*x3", "-wz*x4"]),
        channels: vec![
            channel(&["1", "0", "0", "0"], 0.51, "1", SIN.0, SIN.1),
            channel(&["0", "0", &b2, "0"], 0.49, "1", COS.0, COS.1),
            channel(&["0", "0", "0", &b3], 0.98, "2", COS.0, COS.1),
        ],
        omega,
        domain: vec![[-2.0, 4.0], [-10.0, 10.0], [-10.0, 10.0], [-10.0, 10.0]],
        control_guard: None,
        simulation: SimulationConfig { x0, t_final, dt: 0.01 },
        state_effort: StateEffort::First,
    }
}

fn example2() -> Config {
    let mut c = newton_config("example2", "H*(x1-1)^2", 20.0, vec![2.0, 0.0, 0.0, 0.0], 50.0);
    c.parameters.insert("H".into(), 2.0);
    c
}

/// Four inputs with incommensurate-looking ratios `1, 1, 1/3, 3/2`.
fn example3() -> Config {
    let j = "-H*(x1-1)^4 - x2";
    Config {
        name: Some("example3".into()),
        dimension: 2,
        parameters: params(&[("H", 0.2), ("h", 5.0), ("a", 1.0)]),
        drift: strings(&["0", "h*(-H*(x1-1)^4 - x2)"]),
        channels: vec![
            channel(&[j, "0"], 0.5, "1", SIN.0, SIN.1),
            channel(&["a", "0"], 0.5, "1", COS.0, COS.1),
            channel(&["a", "0"], 0.5, "1/3", SIN.0, SIN.1),
            channel(&["a", "0"], 0.99, "3/2", COS.0, COS.1),
        ],
        omega: 100.0,
        domain: vec![[-2.0, 5.0], [-60.0, 10.0]],
        control_guard: None,
        simulation: SimulationConfig { x0: vec![3.0, 0.0], t_final: 40.0, dt: 0.01 },
        state_effort: StateEffort::First,
    }
}

/// The Newton-like scheme applied to the quartic cost of example 3. The scheme
/// minimizes, so the cost enters with the sign that makes its optimum a
/// minimum: `H(x1-1)^4` rather than `-H(x1-1)^4`.
fn example3_baseline() -> Config {
    let mut c = newton_config("example3_baseline", "H*(x1-1)^4", 100.0, vec![4.0, 26.6, 0.0, 0.0], 40.0);
    c.parameters.insert("H".into(), 0.2);
    c
}

const EX4_J: &str = "H*(x1-1)^4";

fn ex4_amplitude() -> String {
    format!("sqrt((1 - exp(-{EX4_J}))/(1 + exp({EX4_J})))")
}

fn ex4_phase() -> String {
    format!("exp({EX4_J}) + 2*log(exp({EX4_J}) - 1)")
}

fn ex4_fields() -> (String, String) {
    let a = ex4_amplitude();
    let ph = ex4_phase();
    (format!("{a}*sin({ph})"), format!("{a}*cos({ph})"))
}

/// Bounded-update descent on `J = H(x-1)^4` with four inputs.
fn example4() -> Config {
    let (fs, fc) = ex4_fields();
    Config {
        name: Some("example4".into()),
        dimension: 1,
        parameters: params(&[("H", 1.0 / 3.0)]),
        drift: strings(&["0"]),
        channels: vec![
            channel(&[&fs], 0.99, "1", COS.0, COS.1),
            channel(&[&fc], 0.01, "1", SIN.0, SIN.1),
            channel(&[&fs], 0.99, "1/4", COS.0, COS.1),
            channel(&[&fc], 0.01, "1/4", SIN.0, SIN.1),
        ],
        omega: 100.0,
        domain: vec![[-1.0, 3.0]],
        control_guard: Some(EX4_J.into()),
        simulation: SimulationConfig { x0: vec![2.0], t_final: 20.0, dt: 0.01 },
        state_effort: StateEffort::First,
    }
}

fn example4_baseline() -> Config {
    let (fs, fc) = ex4_fields();
    Config {
        name: Some("example4_baseline".into()),
        dimension: 1,
        parameters: params(&[("H", 1.0 / 3.0)]),
        drift: strings(&["0"]),
        channels: vec![channel(&[&fs], 0.5, "1", COS.0, COS.1), channel(&[&fc], 0.5, "1", SIN.0, SIN.1)],
        omega: 100.0,
        domain: vec![[-1.0, 3.0]],
        control_guard: Some(EX4_J.into()),
        simulation: SimulationConfig { x0: vec![2.0], t_final: 20.0, dt: 0.01 },
        state_effort: StateEffort::First,
    }
}
