//! JSON configuration: a serializable mirror of [`ControlAffineSystem`] plus a
//! simulation block.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::jetexpr::{self, Expr};
use crate::sim::StateEffort;
use crate::system::{ControlAffineSystem, ControlChannel, Rational, SystemError, SystemSpec, Waveform};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("{context}: {source}")]
    Expr { context: String, source: jetexpr::Error },
    #[error("channel {channel}: frequency ratio '{text}' is not of the form num/den with positive integers")]
    Ratio { channel: usize, text: String },
    #[error("dimension {dimension} does not match {what} of length {len}")]
    Dimension { dimension: usize, what: &'static str, len: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformConfig {
    /// Expression in the phase variable `s`.
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antiderivative: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub components: Vec<String>,
    pub p: f64,
    /// Exact ratio as `"num/den"` (or an integer).
    pub k: String,
    pub waveform: WaveformConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub x0: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    pub drift: Vec<String>,
    pub channels: Vec<ChannelConfig>,
    pub omega: f64,
    /// Compact box used for validation probes, one `[lo, hi]` per state.
    pub domain: Vec<[f64; 2]>,
    /// Control fields vanish where `|guard| <= 1e-12`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_guard: Option<String>,
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub state_effort: StateEffort,
}

fn parse_expr(text: &str, context: impl Into<String>) -> Result<Expr, ConfigError> {
    jetexpr::parse(text).map_err(|source| ConfigError::Expr { context: context.into(), source })
}

/// `"num/den"` or `"num"` with positive integers, reduced.
pub fn parse_ratio(text: &str) -> Option<Rational> {
    let (n, d) = match text.split_once('/') {
        Some((n, d)) => (n.trim().parse::<i64>().ok()?, d.trim().parse::<i64>().ok()?),
        None => (text.trim().parse::<i64>().ok()?, 1),
    };
    if n <= 0 || d <= 0 {
        return None;
    }
    Some(Rational::new(n, d))
}

pub fn format_ratio(k: Rational) -> String {
    format!("{}/{}", k.numer(), k.denom())
}

impl Config {
    pub fn from_json(text: &str) -> Result<Config, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn to_system(&self) -> Result<ControlAffineSystem, ConfigError> {
        let n = self.dimension;
        let check = |what: &'static str, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(ConfigError::Dimension { dimension: n, what, len })
            }
        };
        check("drift", self.drift.len())?;
        check("domain", self.domain.len())?;
        check("simulation.x0", self.simulation.x0.len())?;
        let drift = self
            .drift
            .iter()
            .enumerate()
            .map(|(c, e)| parse_expr(e, format!("drift component {}", c + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        let mut channels = Vec::with_capacity(self.channels.len());
        for (i, ch) in self.channels.iter().enumerate() {
            let label = format!("channel {}", i + 1);
            check("channel components", ch.components.len())?;
            let field = ch
                .components
                .iter()
                .enumerate()
                .map(|(c, e)| parse_expr(e, format!("{label} component {}", c + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            let k = parse_ratio(&ch.k).ok_or_else(|| ConfigError::Ratio { channel: i + 1, text: ch.k.clone() })?;
            let wexpr = parse_expr(&ch.waveform.expr, format!("{label} waveform"))?;
            let anti = ch
                .waveform
                .antiderivative
                .as_deref()
                .map(|a| parse_expr(a, format!("{label} antiderivative")))
                .transpose()?;
            let waveform = Waveform::new(wexpr, anti, &self.parameters)?;
            channels.push(ControlChannel { p: ch.p, k, waveform, field });
        }
        let guard = self.control_guard.as_deref().map(|g| parse_expr(g, "control guard")).transpose()?;
        Ok(ControlAffineSystem::new(SystemSpec {
            params: self.parameters.clone(),
            drift,
            channels,
            omega: self.omega,
            domain: self.domain.iter().map(|d| (d[0], d[1])).collect(),
            guard,
        })?)
    }

    /// Serialize a system; expressions are printed in a form that re-parses
    /// to the identical tree.
    pub fn from_system(
        sys: &ControlAffineSystem,
        simulation: SimulationConfig,
        state_effort: StateEffort,
        name: Option<String>,
    ) -> Config {
        Config {
            name,
            dimension: sys.dim(),
            parameters: sys.params().clone(),
            drift: sys.drift().iter().map(Expr::to_string).collect(),
            channels: sys
                .channels()
                .iter()
                .map(|c| ChannelConfig {
                    components: c.field.iter().map(Expr::to_string).collect(),
                    p: c.p,
                    k: format_ratio(c.k),
                    waveform: WaveformConfig {
                        expr: c.waveform.expr().to_string(),
                        antiderivative: c.waveform.antiderivative().map(Expr::to_string),
                    },
                })
                .collect(),
            omega: sys.omega(),
            domain: sys.domain().iter().map(|&(a, b)| [a, b]).collect(),
            control_guard: sys.guard().map(Expr::to_string),
            simulation,
            state_effort,
        }
    }
}
