//! Fixtures shared by the benchmarks.

use lieavg_core::presets::{self, Preset};
use lieavg_core::{assemble, coefficient_table, AveragedSystem};

pub fn preset(name: &str) -> Preset {
    presets::build(name).expect("built-in preset")
}

/// The order-`r` averaged system at the preset's own ω.
pub fn averaged(p: &Preset, r: usize) -> AveragedSystem {
    let table = coefficient_table(&p.system, r, 1024).expect("coefficients");
    assemble(&p.system, r, &table, p.system.omega()).expect("assembly")
}
