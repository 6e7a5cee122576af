//! A small expression language for problem data.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' INTEGER)*
//! primary := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'
//! VAR     := 'x'k (1 <= k <= n) | 't' | 'p'k (1 <= k <= params)
//! FUNC    := sin | cos | exp | log | sqrt
//! ```
//!
//! Exponents are nonnegative integer literals, so differentiation is total.

mod diff;
mod parser;

use std::fmt;

use thiserror::Error;

pub use diff::{add, call, differentiate, div, mul, neg, nth_derivative, pow, sub};
pub use parser::parse;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("SyntaxError at {pos}: {msg}")]
    SyntaxError { pos: usize, msg: String },
    #[error("UnknownIdentifier '{name}' at {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("DimensionError: {0}")]
    DimensionError(String),
    #[error("DomainError: {0}")]
    DomainError(String),
    #[error("MissingBinding: {0}")]
    MissingBinding(String),
}

impl ExprError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExprError::SyntaxError { .. } => "SyntaxError",
            ExprError::UnknownIdentifier { .. } => "UnknownIdentifier",
            ExprError::DimensionError(_) => "DimensionError",
            ExprError::DomainError(_) => "DomainError",
            ExprError::MissingBinding(_) => "MissingBinding",
        }
    }
}

/// Variable reference. Indices are zero-based internally; `X(0)` prints as `x1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X(usize),
    T,
    P(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64, ExprError> {
        match self {
            Func::Log if v <= 0.0 => Err(ExprError::DomainError(format!("log of nonpositive value {v}"))),
            Func::Sqrt if v < 0.0 => Err(ExprError::DomainError(format!("sqrt of negative value {v}"))),
            Func::Sin => Ok(v.sin()),
            Func::Cos => Ok(v.cos()),
            Func::Exp => Ok(v.exp()),
            Func::Log => Ok(v.ln()),
            Func::Sqrt => Ok(v.sqrt()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

/// Declared variable ranges for parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub params: usize,
    pub allow_t: bool,
}

impl Dims {
    pub fn new(n: usize) -> Self {
        Dims { n, params: 0, allow_t: true }
    }
}

/// Variable bindings. `t: None` leaves `t` unbound.
#[derive(Debug, Clone, Copy)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub t: Option<f64>,
    pub params: &'a [f64],
}

impl<'a> Env<'a> {
    pub fn new(x: &'a [f64], t: f64) -> Self {
        Env { x, t: Some(t), params: &[] }
    }
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn x(i: usize) -> Expr {
        Expr::Var(Var::X(i))
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn is_num(&self, v: f64) -> bool {
        matches!(self, Expr::Num(a) if *a == v)
    }

    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X(i)) => *env
                .x
                .get(*i)
                .ok_or_else(|| ExprError::MissingBinding(format!("x{}", i + 1)))?,
            Expr::Var(Var::T) => env.t.ok_or_else(|| ExprError::MissingBinding("t".into()))?,
            Expr::Var(Var::P(i)) => *env
                .params
                .get(*i)
                .ok_or_else(|| ExprError::MissingBinding(format!("p{}", i + 1)))?,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let den = b.eval(env)?;
                if den == 0.0 {
                    return Err(ExprError::DomainError("division by zero".into()));
                }
                a.eval(env)? / den
            }
            Expr::Pow(a, k) => a.eval(env)?.powi(*k as i32),
            Expr::Call(f, a) => f.apply(a.eval(env)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::DomainError(format!("non-finite value in {self}")))
        }
    }

    /// Replace every occurrence of `var` by `with`.
    pub fn substitute(&self, var: Var, with: &Expr) -> Expr {
        self.map_vars(&|v| if v == var { Some(with.clone()) } else { None })
    }

    /// Replace variables for which `f` returns `Some`. Substitution is
    /// simultaneous.
    pub fn map_vars(&self, f: &dyn Fn(Var) -> Option<Expr>) -> Expr {
        let rec = |e: &Expr| Box::new(e.map_vars(f));
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(v) => f(*v).unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::Neg(rec(a)),
            Expr::Add(a, b) => Expr::Add(rec(a), rec(b)),
            Expr::Sub(a, b) => Expr::Sub(rec(a), rec(b)),
            Expr::Mul(a, b) => Expr::Mul(rec(a), rec(b)),
            Expr::Div(a, b) => Expr::Div(rec(a), rec(b)),
            Expr::Pow(a, k) => Expr::Pow(rec(a), *k),
            Expr::Call(g, a) => Expr::Call(*g, rec(a)),
        }
    }

    /// Replace parameters `p1..pk` by numeric literals.
    pub fn bind_params(&self, params: &[f64]) -> Expr {
        self.map_vars(&|v| match v {
            Var::P(i) if i < params.len() => Some(Expr::Num(params[i])),
            _ => None,
        })
    }

    pub fn mentions(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.mentions(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.mentions(var) || b.mentions(var)
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() && *v != 0.0 => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => fmt_number(*v, f),
            Expr::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Var(Var::P(i)) => write!(f, "p{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_at(f, 4)
            }
            Expr::Add(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " - ")?;
                b.fmt_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "*")?;
                b.fmt_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "/")?;
                b.fmt_at(f, 3)
            }
            Expr::Pow(a, k) => {
                a.fmt_at(f, 5)?;
                write!(f, "^{k}")
            }
            Expr::Call(g, a) => {
                write!(f, "{}(", g.name())?;
                a.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

fn fmt_number(v: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if v == v.trunc() && v.abs() < 1e15 {
        write!(f, "{}", v as i64)
    } else {
        write!(f, "{v:?}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}
