//! Compiled postfix form of an [`Expr`], evaluated on plain floats or on jets.
//!
//! Both evaluators perform the same floating-point operations in the same
//! order, so an order-0 jet reproduces the scalar result exactly.

use std::collections::BTreeMap;

use super::jet::{Jet, JetSpace, MAX_ORDER};
use super::parse::{Expr, Func};
use super::Error;

/// Names an expression may refer to.
#[derive(Clone, Debug, Default)]
pub struct Scope<'a> {
    pub nstates: usize,
    pub phase: bool,
    pub params: Option<&'a BTreeMap<String, f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Const(f64),
    Var(usize),
    Phase,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    Call(Func),
}

/// An expression with all identifiers resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    ops: Vec<Op>,
    depth: usize,
    nstates: usize,
}

impl Program {
    pub fn compile(e: &Expr, scope: &Scope) -> Result<Program, Error> {
        let mut ops = Vec::new();
        emit(e, scope, &mut ops)?;
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Var(_) | Op::Phase => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div => depth -= 1,
                _ => {}
            }
            max = max.max(depth);
        }
        Ok(Program { ops, depth: max, nstates: scope.nstates })
    }

    /// True if the program is a literal constant (no state or phase reads).
    pub fn is_constant(&self) -> bool {
        !self.ops.iter().any(|o| matches!(o, Op::Var(_) | Op::Phase))
    }

    /// Evaluate on floats. `phase` is ignored unless the program reads `s`.
    pub fn eval(&self, x: &[f64], phase: f64) -> Result<f64, Error> {
        let mut st: Vec<f64> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => st.push(c),
                Op::Var(i) => st.push(x[i]),
                Op::Phase => st.push(phase),
                Op::Neg => {
                    let a = st.last_mut().expect("stack");
                    *a = -*a;
                }
                Op::Pow(k) => {
                    let a = st.last_mut().expect("stack");
                    *a = powi_scalar(*a, k)?;
                }
                Op::Call(f) => {
                    let a = st.last_mut().expect("stack");
                    *a = call_scalar(f, *a)?;
                }
                bin => {
                    let b = st.pop().expect("stack");
                    let a = st.last_mut().expect("stack");
                    *a = match bin {
                        Op::Add => *a + b,
                        Op::Sub => *a - b,
                        Op::Mul => *a * b,
                        Op::Div => {
                            if b == 0.0 {
                                return Err(Error::DivisionByZero);
                            }
                            *a * (1.0 / b)
                        }
                        _ => unreachable!(),
                    };
                }
            }
        }
        Ok(st.pop().expect("stack"))
    }

    /// Evaluate as a jet of the given order about `x` (phase-free programs only).
    pub fn eval_jet(&self, x: &[f64], order: usize) -> Result<Jet, Error> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooHigh(order));
        }
        let space = JetSpace::get(x.len(), order);
        self.eval_in(space, x)
    }

    pub(crate) fn eval_in(&self, space: &'static JetSpace, x: &[f64]) -> Result<Jet, Error> {
        let mut st: Vec<Jet> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => st.push(Jet::constant(space, c)),
                Op::Var(i) => st.push(Jet::variable(space, i, x[i])),
                Op::Phase => return Err(Error::UnknownIdentifier("s".into())),
                Op::Neg => {
                    let a = st.pop().expect("stack");
                    st.push(a.neg());
                }
                Op::Pow(k) => {
                    let a = st.pop().expect("stack");
                    if k < 0 && a.value() == 0.0 {
                        return Err(Error::DivisionByZero);
                    }
                    st.push(a.powi(k));
                }
                Op::Call(f) => {
                    let a = st.pop().expect("stack");
                    check_domain(f, a.value(), space.order())?;
                    st.push(match f {
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Tan => a.tan(),
                        Func::Exp => a.exp(),
                        Func::Log => a.ln(),
                        Func::Sqrt => a.sqrt(),
                    });
                }
                bin => {
                    let b = st.pop().expect("stack");
                    let a = st.pop().expect("stack");
                    st.push(match bin {
                        Op::Add => a.add(&b),
                        Op::Sub => a.sub(&b),
                        Op::Mul => a.mul(&b),
                        Op::Div => {
                            if b.value() == 0.0 {
                                return Err(Error::DivisionByZero);
                            }
                            a.mul(&b.recip())
                        }
                        _ => unreachable!(),
                    });
                }
            }
        }
        Ok(st.pop().expect("stack"))
    }

    pub fn nstates(&self) -> usize {
        self.nstates
    }
}

fn emit(e: &Expr, scope: &Scope, ops: &mut Vec<Op>) -> Result<(), Error> {
    match e {
        Expr::Num(v) => ops.push(Op::Const(*v)),
        Expr::Var(i) => {
            if *i >= scope.nstates {
                return Err(Error::UnknownIdentifier(format!("x{}", i + 1)));
            }
            ops.push(Op::Var(*i));
        }
        Expr::Phase => {
            if !scope.phase {
                return Err(Error::UnknownIdentifier("s".into()));
            }
            ops.push(Op::Phase);
        }
        Expr::Param(name) => {
            let v = scope.params.and_then(|p| p.get(name)).ok_or_else(|| Error::UnknownIdentifier(name.clone()))?;
            ops.push(Op::Const(*v));
        }
        Expr::Neg(a) => {
            emit(a, scope, ops)?;
            ops.push(Op::Neg);
        }
        Expr::Pow(a, k) => {
            emit(a, scope, ops)?;
            ops.push(Op::Pow(*k));
        }
        Expr::Call(f, a) => {
            emit(a, scope, ops)?;
            ops.push(Op::Call(*f));
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            emit(a, scope, ops)?;
            emit(b, scope, ops)?;
            ops.push(match e {
                Expr::Add(..) => Op::Add,
                Expr::Sub(..) => Op::Sub,
                Expr::Mul(..) => Op::Mul,
                _ => Op::Div,
            });
        }
    }
    Ok(())
}

fn powi_scalar(a: f64, k: i32) -> Result<f64, Error> {
    let base = if k < 0 {
        if a == 0.0 {
            return Err(Error::DivisionByZero);
        }
        1.0 / a
    } else {
        a
    };
    let mut acc = 1.0;
    for i in 0..k.unsigned_abs() {
        acc = if i == 0 { base } else { acc * base };
    }
    Ok(acc)
}

fn check_domain(f: Func, v: f64, order: usize) -> Result<(), Error> {
    let bad = match f {
        Func::Log => v <= 0.0,
        Func::Sqrt => v < 0.0 || (v == 0.0 && order > 0),
        _ => false,
    };
    if bad {
        Err(Error::Domain { func: f.name(), value: v })
    } else {
        Ok(())
    }
}

fn call_scalar(f: Func, v: f64) -> Result<f64, Error> {
    check_domain(f, v, 0)?;
    Ok(match f {
        Func::Sin => v.sin_cos().0,
        Func::Cos => v.sin_cos().1,
        Func::Tan => v.tan(),
        Func::Exp => v.exp(),
        Func::Log => v.ln(),
        Func::Sqrt => v.sqrt(),
    })
}
