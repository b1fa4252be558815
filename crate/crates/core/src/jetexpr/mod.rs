//! Expression language for vector fields and waveforms, with forward-mode
//! evaluation to third order.

mod jet;
mod parse;
mod program;

use std::collections::BTreeMap;

pub use jet::{Jet, JetSpace, MAX_ORDER};
pub use parse::{parse, Expr, Func};
pub use program::{Program, Scope};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function '{name}' at offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("exponent at offset {offset} is not an integer")]
    NonIntegerExponent { offset: usize },
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("jet order {0} exceeds the supported maximum of 3")]
    OrderTooHigh(usize),
}

/// One-shot jet evaluation of `e` at `point` with the given parameter values.
pub fn eval_jet(e: &Expr, point: &[f64], params: &BTreeMap<String, f64>, order: usize) -> Result<Jet, Error> {
    let scope = Scope { nstates: point.len(), phase: false, params: Some(params) };
    Program::compile(e, &scope)?.eval_jet(point, order)
}
