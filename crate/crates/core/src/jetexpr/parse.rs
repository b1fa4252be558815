//! Recursive-descent parser and round-trippable printer for field expressions.
//!
//! ```text
//! expr    = [ "-" | "+" ] term { ("+" | "-") term }
//! term    = factor { ("*" | "/") factor }
//! factor  = "-" factor | power
//! power   = atom [ "^" exponent ]
//! exponent= [ "-" ] integer | "(" [ "-" ] integer ")"
//! atom    = number | ident | func "(" expr ")" | "(" expr ")"
//! ident   = x<k> (state, 1-based) | s (phase) | any other name (parameter)
//! func    = sin | cos | tan | exp | log | sqrt
//! ```
//!
//! A leading minus negates the whole first product, so `-H*(x1-1)^4` is
//! `Neg(Mul(H, Pow(...)))`.

use std::fmt;

use super::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// State variable, 0-based (`x1` is `Var(0)`).
    Var(usize),
    /// Phase variable `s` of a waveform.
    Phase,
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Visit every node, parent before children.
    pub fn walk(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.walk(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            _ => {}
        }
    }

    /// True when no state variable occurs.
    pub fn is_state_free(&self) -> bool {
        let mut free = true;
        self.walk(&mut |e| {
            if matches!(e, Expr::Var(_)) {
                free = false;
            }
        });
        free
    }

    /// Largest state index referenced, plus one.
    pub fn state_arity(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |e| {
            if let Expr::Var(i) = e {
                n = n.max(i + 1);
            }
        });
        n
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        // ctx: 0 top, 1 left operand of a sum, 2 right operand of a sum or
        // left of a product, 3 right of a product, 5 base of a power.
        let open = match self {
            Expr::Add(..) | Expr::Sub(..) | Expr::Neg(_) => ctx > 1,
            Expr::Mul(..) | Expr::Div(..) => ctx > 2,
            _ => false,
        };
        if open {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 || v.is_sign_negative() {
                    write!(f, "(-{:?})", -v)?
                } else {
                    write!(f, "{v:?}")?
                }
            }
            Expr::Var(i) => write!(f, "x{}", i + 1)?,
            Expr::Phase => f.write_str("s")?,
            Expr::Param(p) => f.write_str(p)?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write(f, 2)?;
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write(f, 1)?;
                f.write_str(if matches!(self, Expr::Add(..)) { "+" } else { "-" })?;
                b.write(f, 2)?;
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.write(f, 2)?;
                f.write_str(if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                b.write(f, 3)?;
            }
            Expr::Pow(a, k) => {
                a.write_atom(f)?;
                write!(f, "^{k}")?;
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write(f, 0)?;
                f.write_str(")")?;
            }
        }
        if open {
            f.write_str(")")?;
        }
        Ok(())
    }

    fn write_atom(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(_) | Expr::Phase | Expr::Param(_) | Expr::Call(..) => self.write(f, 5),
            Expr::Num(v) if *v >= 0.0 && !v.is_sign_negative() => self.write(f, 5),
            _ => {
                f.write_str("(")?;
                self.write(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

/// Prints a string that parses back to the identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr, Error> {
        parse(s)
    }
}

pub fn parse(text: &str) -> Result<Expr, Error> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(Error::Syntax { offset: p.pos, message: "empty expression".into() });
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax { offset: self.pos, message: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), Error> {
        if self.eat(c) {
            Ok(())
        } else if self.peek().is_none() {
            Err(self.err(&format!("expected '{}' before end of input", c as char)))
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, Error> {
        let mut lhs = if self.eat(b'-') {
            Expr::Neg(Box::new(self.term()?))
        } else {
            self.eat(b'+');
            self.term()?
        };
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, Error> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, Error> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let k = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, Error> {
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        let v = self.number()?;
        if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
            return Err(Error::NonIntegerExponent { offset: start });
        }
        if paren {
            self.expect(b')')?;
        }
        Ok(if neg { -(v as i32) } else { v as i32 })
    }

    fn number(&mut self) -> Result<f64, Error> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > b
        };
        let mut p = self.pos;
        let int = digits(&mut p);
        let mut frac = false;
        if p < s.len() && s[p] == b'.' {
            p += 1;
            frac = digits(&mut p);
        }
        if !int && !frac {
            return Err(self.err("expected a number"));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                p = q;
            }
        }
        self.pos = p;
        let text = std::str::from_utf8(&s[start..p]).expect("ascii");
        text.parse::<f64>().map_err(|_| Error::Syntax { offset: start, message: "bad number".into() })
    }

    fn atom(&mut self) -> Result<Expr, Error> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => Ok(Expr::Num(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if self.peek() == Some(b'(') {
                    let func = Func::from_name(name)
                        .ok_or_else(|| Error::UnknownFunction { name: name.into(), offset: start })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                Ok(classify(name))
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }
}

fn classify(name: &str) -> Expr {
    if name == "s" {
        return Expr::Phase;
    }
    if let Some(rest) = name.strip_prefix('x') {
        if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) && !rest.starts_with('0') {
            if let Ok(k) = rest.parse::<usize>() {
                return Expr::Var(k - 1);
            }
        }
    }
    Expr::Param(name.to_string())
}
