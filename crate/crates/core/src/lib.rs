//! Higher-order Lie bracket averaging for control-affine systems
//! `ẋ = b₀(x) + Σ ω^{pᵢ} bᵢ(x) uᵢ(kᵢωt)`.

pub mod analysis;
pub mod coeffs;
pub mod config;
pub mod geometry;
pub mod jetexpr;
pub mod lbs;
pub mod presets;
pub mod quadrature;
pub mod sim;
pub mod system;

pub use analysis::{check_design, sweep_omega, DesignReport, SweepResult};
pub use coeffs::{coefficient_table, Class, Coefficient, CoefficientTable, Family};
pub use config::Config;
pub use geometry::{BracketEvaluator, BracketExpr};
pub use jetexpr::{Expr, Jet};
pub use lbs::{assemble, assemble_with, AssembleOptions, AveragedSystem};
pub use system::{ControlAffineSystem, ControlChannel, Rational, SystemSpec, Waveform};
