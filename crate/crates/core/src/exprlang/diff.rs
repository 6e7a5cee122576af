//! Symbolic differentiation with constant folding.
//!
//! The smart constructors below fold numeric subtrees and absorb 0 and 1.
//! Products keep numeric coefficients in front so repeated derivatives of
//! monomials collapse to `c*...`.

use super::{Expr, Func, Var};

fn bx(e: Expr) -> Box<Expr> {
    Box::new(e)
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(bx(other)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (a, b) if a.is_num(0.0) => b,
        (a, b) if b.is_num(0.0) => a,
        (a, b) => Expr::Add(bx(a), bx(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (a, b) if b.is_num(0.0) => a,
        (a, b) if a.is_num(0.0) => neg(b),
        (a, b) => Expr::Sub(bx(a), bx(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (a, b) if a.is_num(0.0) || b.is_num(0.0) => Expr::Num(0.0),
        (a, b) if a.is_num(1.0) => b,
        (a, b) if b.is_num(1.0) => a,
        (a, b) if a.is_num(-1.0) => neg(b),
        (a, b) if b.is_num(-1.0) => neg(a),
        (Expr::Num(x), Expr::Mul(inner_a, inner_b)) => match *inner_a {
            Expr::Num(y) => mul(Expr::Num(x * y), *inner_b),
            other => Expr::Mul(bx(Expr::Num(x)), bx(Expr::Mul(bx(other), inner_b))),
        },
        (a, Expr::Num(y)) => mul(Expr::Num(y), a),
        (a, b) => Expr::Mul(bx(a), bx(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Expr::Num(x), Expr::Num(y)) if y != 0.0 => Expr::Num(x / y),
        (a, b) if a.is_num(0.0) && !b.is_num(0.0) => Expr::Num(0.0),
        (a, b) if b.is_num(1.0) => a,
        (a, b) => Expr::Div(bx(a), bx(b)),
    }
}

pub fn pow(a: Expr, k: u32) -> Expr {
    match (a, k) {
        (_, 0) => Expr::Num(1.0),
        (a, 1) => a,
        (Expr::Num(x), k) => Expr::Num(x.powi(k as i32)),
        (a, k) => Expr::Pow(bx(a), k),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    if let Expr::Num(v) = a {
        if let Ok(r) = f.apply(v) {
            if r.is_finite() {
                return Expr::Num(r);
            }
        }
    }
    Expr::Call(f, bx(a))
}

/// Symbolic partial derivative of `e` with respect to `var`.
pub fn differentiate(e: &Expr, var: Var) -> Expr {
    let d = |e: &Expr| differentiate(e, var);
    match e {
        Expr::Num(_) => Expr::Num(0.0),
        Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(d(a)),
        Expr::Add(a, b) => add(d(a), d(b)),
        Expr::Sub(a, b) => sub(d(a), d(b)),
        Expr::Mul(a, b) => add(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))),
        Expr::Div(a, b) => div(
            sub(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))),
            pow((**b).clone(), 2),
        ),
        Expr::Pow(a, k) => {
            if *k == 0 {
                Expr::Num(0.0)
            } else {
                mul(mul(Expr::Num(*k as f64), pow((**a).clone(), k - 1)), d(a))
            }
        }
        Expr::Call(f, a) => {
            let inner = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, inner),
                Func::Cos => neg(call(Func::Sin, inner)),
                Func::Exp => call(Func::Exp, inner),
                Func::Log => div(Expr::Num(1.0), inner),
                Func::Sqrt => div(Expr::Num(0.5), call(Func::Sqrt, inner)),
            };
            mul(outer, d(a))
        }
    }
}

/// The `k`-th derivative with respect to `var`.
pub fn nth_derivative(e: &Expr, var: Var, k: usize) -> Expr {
    (0..k).fold(e.clone(), |acc, _| differentiate(&acc, var))
}
