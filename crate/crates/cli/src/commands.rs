//! Subcommand implementations.

use std::path::Path;

use lieavg_core::coeffs::CoefficientTable;
use lieavg_core::sim::{self, full, SimError, StateEffort, Trajectory};
use lieavg_core::system::ValidateOptions;
use lieavg_core::{
    assemble_with, check_design, coefficient_table, presets, sweep_omega, AssembleOptions, AveragedSystem, Config,
    ControlAffineSystem,
};
use serde::Serialize;

use crate::report::{write_json, write_text, Failure, Outcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Original,
    Lbs(usize),
}

pub fn parse_model(text: &str) -> Result<Model, String> {
    if text == "original" {
        return Ok(Model::Original);
    }
    match text.strip_prefix("lbs:").map(str::parse::<usize>) {
        Some(Ok(r)) if (1..=4).contains(&r) => Ok(Model::Lbs(r)),
        _ => Err(format!("expected 'original' or 'lbs:R' with R in 1..=4, got '{text}'")),
    }
}

fn read_config(path: &Path) -> Result<Config, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config("io", format!("cannot read {}: {e}", path.display())))?;
    Config::from_json(&text).map_err(|e| Failure::config("config", e))
}

/// Parse, build and validate; a failed validation aborts with its report.
fn load_system(path: &Path) -> Result<(Config, ControlAffineSystem), Failure> {
    let cfg = read_config(path)?;
    let sys = cfg.to_system().map_err(|e| Failure::config("config", e))?;
    let report = sys.validate();
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(Failure::Config {
            kind: "validation",
            message: format!("system fails validation: {}", failed.join(", ")),
            report: Some(report),
        });
    }
    Ok((cfg, sys))
}

fn check_order(r: usize) -> Result<(), Failure> {
    if (1..=4).contains(&r) {
        Ok(())
    } else {
        Err(Failure::config("usage", format!("order must be in 1..=4, got {r}")))
    }
}

fn table(sys: &ControlAffineSystem, r: usize, grid: usize) -> Result<CoefficientTable, Failure> {
    coefficient_table(sys, r, grid).map_err(|e| Failure::config("coeffs", e))
}

fn averaged(sys: &ControlAffineSystem, r: usize, limit: bool, grid: usize) -> Result<AveragedSystem, Failure> {
    check_order(r)?;
    let t = table(sys, r, grid)?;
    assemble_with(sys, r, &t, sys.omega(), AssembleOptions { prune: true, limit })
        .map_err(|e| Failure::config("assemble", e))
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Eval { t, message } => Failure::Divergence { message, t: Some(t) },
        other => Failure::config("usage", other),
    }
}

fn diverged(tr: &Trajectory, what: &str) -> Outcome {
    match tr.diverged_at {
        Some(t) => Err(Failure::Divergence { message: format!("{what} state became non-finite"), t: Some(t) }),
        None => Ok(()),
    }
}

pub fn preset(name: &str, out: &Path) -> Outcome {
    let p = presets::build(name).map_err(|e| Failure::config("config", e))?;
    write_text(out, &p.config.to_json())
}

pub fn validate(path: &Path, out: Option<&Path>, meta: bool) -> Outcome {
    let cfg = read_config(path)?;
    let sys = cfg.to_system().map_err(|e| Failure::config("config", e))?;
    let report = lieavg_core::system::validate(&sys, &ValidateOptions::default());
    if let Some(out) = out {
        write_json(out, &report, meta)?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Config { kind: "validation", message: "system fails validation".into(), report: Some(report) })
    }
}

pub fn coeffs(path: &Path, r: usize, grid: usize, out: &Path) -> Outcome {
    let (_, sys) = load_system(path)?;
    check_order(r)?;
    write_text(out, &table(&sys, r, grid)?.to_csv())
}

#[derive(Serialize)]
struct TermOut {
    family: String,
    indices: Vec<usize>,
    bracket: String,
    value: f64,
    omega_exponent: f64,
    class: String,
    weight: f64,
}

#[derive(Serialize)]
struct AssemblyOut {
    order: usize,
    omega: f64,
    limit: bool,
    terms: Vec<TermOut>,
    x0: Vec<f64>,
    rhs_at_x0: Vec<f64>,
}

pub fn assemble(path: &Path, r: usize, limit: bool, grid: usize, out: &Path, meta: bool) -> Outcome {
    let (cfg, sys) = load_system(path)?;
    let avg = averaged(&sys, r, limit, grid)?;
    let x0 = cfg.simulation.x0.clone();
    let rhs_at_x0 = avg.rhs(&x0).map_err(|e| Failure::Divergence { message: e.to_string(), t: None })?;
    let terms = avg
        .terms()
        .iter()
        .map(|t| TermOut {
            family: t.family.name().into(),
            indices: t.indices.clone(),
            bracket: t.expr.to_string(),
            value: t.value,
            omega_exponent: t.omega_exponent,
            class: t.class.name().into(),
            weight: t.weight,
        })
        .collect();
    write_json(out, &AssemblyOut { order: r, omega: avg.omega(), limit, terms, x0, rhs_at_x0 }, meta)
}

pub fn check(path: &Path, r: usize, grid: usize, out: &Path, meta: bool) -> Outcome {
    let (_, sys) = load_system(path)?;
    check_order(r)?;
    let t = table(&sys, r, grid)?;
    let report = check_design(&sys, r, Some(&t)).map_err(|e| Failure::config("check", e))?;
    write_json(out, &report, meta)
}

/// A validated system with the simulation settings resolved.
pub struct Job {
    sys: ControlAffineSystem,
    x0: Vec<f64>,
    t_final: f64,
    dt: f64,
    state_effort: StateEffort,
}

#[derive(Serialize)]
struct CompareSummary {
    order: usize,
    omega: f64,
    limit: bool,
    epsilon: f64,
    t_final: f64,
    dt: f64,
    samples: usize,
    d_sup: f64,
    d_rms: f64,
    final_original: Vec<f64>,
    final_lbs: Vec<f64>,
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    #[serde(flatten)]
    result: &'a lieavg_core::SweepResult,
    strictly_decreasing: bool,
    t_final: f64,
    dt: f64,
}

impl Job {
    pub fn load(path: &Path, t_final: Option<f64>, dt: Option<f64>, omega: Option<f64>) -> Result<Job, Failure> {
        let (cfg, sys) = load_system(path)?;
        let sys = match omega {
            Some(w) if w > 0.0 && w.is_finite() => sys.with_omega(w),
            Some(w) => return Err(Failure::config("usage", format!("omega must be positive, got {w}"))),
            None => sys,
        };
        let t_final = t_final.unwrap_or(cfg.simulation.t_final);
        let dt = dt.unwrap_or(cfg.simulation.dt);
        if !(t_final > 0.0 && t_final.is_finite() && dt > 0.0 && dt.is_finite()) {
            return Err(Failure::config("usage", format!("need t_final > 0 and dt > 0, got {t_final} and {dt}")));
        }
        Ok(Job { sys, x0: cfg.simulation.x0, t_final, dt, state_effort: cfg.state_effort })
    }

    fn original(&self) -> Result<Trajectory, Failure> {
        sim::simulate_original(&self.sys, &self.x0, self.t_final, self.dt).map_err(sim_failure)
    }

    fn lbs(&self, avg: &AveragedSystem) -> Result<Trajectory, Failure> {
        sim::simulate_lbs(avg, &self.x0, self.t_final, self.dt, true).map_err(sim_failure)
    }

    pub fn simulate(&self, model: Model, limit: bool, grid: usize, out: &Path) -> Outcome {
        let tr = match model {
            Model::Original => self.original()?,
            Model::Lbs(r) => self.lbs(&averaged(&self.sys, r, limit, grid)?)?,
        };
        // The record up to the blow-up is still written.
        write_text(out, &tr.to_csv())?;
        diverged(&tr, "trajectory")
    }

    pub fn compare(&self, r: usize, limit: bool, grid: usize, out: &Path, summary: &Path, meta: bool) -> Outcome {
        let avg = averaged(&self.sys, r, limit, grid)?;
        let a = self.original()?;
        diverged(&a, "original")?;
        let b = self.lbs(&avg)?;
        diverged(&b, "averaged")?;
        let (ts, ds) = sim::distance_series(&a, &b).map_err(sim_failure)?;
        let d = sim::compare(&a, &b).map_err(sim_failure)?;
        let mut csv = String::from("t,distance\n");
        for (t, v) in ts.iter().zip(&ds) {
            csv.push_str(&format!("{},{}\n", full(*t), full(*v)));
        }
        write_text(out, &csv)?;
        let pmax = self.sys.p().iter().copied().fold(f64::MIN, f64::max);
        let s = CompareSummary {
            order: r,
            omega: self.sys.omega(),
            limit,
            epsilon: self.sys.omega().powf(pmax - 1.0),
            t_final: self.t_final,
            dt: a.t[1] - a.t[0],
            samples: ts.len(),
            d_sup: d.sup,
            d_rms: d.rms,
            final_original: a.last().to_vec(),
            final_lbs: b.last().to_vec(),
        };
        write_json(summary, &s, meta)
    }

    pub fn sweep(&self, r: usize, grid: usize, omegas: &[f64], out: &Path, summary: &Path, meta: bool) -> Outcome {
        check_order(r)?;
        let t = table(&self.sys, r, grid)?;
        let res = sweep_omega(&self.sys, r, &t, omegas, &self.x0, self.t_final, self.dt).map_err(|e| match e {
            lieavg_core::analysis::SweepError::Omegas => Failure::config("usage", e),
            other => Failure::config("assemble", other),
        })?;
        write_text(out, &res.to_csv())?;
        let s = SweepSummary {
            result: &res,
            strictly_decreasing: res.strictly_decreasing(),
            t_final: self.t_final,
            dt: self.dt,
        };
        write_json(summary, &s, meta)?;
        match res.points.iter().find(|p| p.error.is_some()) {
            Some(p) => Err(Failure::Divergence {
                message: format!("ω = {}: {}", p.omega, p.error.as_deref().unwrap_or_default()),
                t: None,
            }),
            None => Ok(()),
        }
    }

    pub fn efforts(&self, mode: Option<StateEffort>, out: &Path) -> Outcome {
        let tr = self.original()?;
        let e = sim::efforts(&tr, mode.unwrap_or(self.state_effort)).map_err(sim_failure)?;
        write_text(out, &e.to_csv())?;
        diverged(&tr, "trajectory")
    }
}
