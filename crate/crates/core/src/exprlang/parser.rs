use super::{Dims, Expr, ExprError, Func, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Op(char),
}

struct Lexer<'a> {
    src: &'a str,
    tokens: Vec<(usize, Tok)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(usize, Tok)>, ExprError> {
        let mut lx = Lexer { src, tokens: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                i = lx.number(i)?;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.tokens.push((start, Tok::Ident(src[start..i].to_string())));
            } else if "+-*/^()".contains(c) {
                lx.tokens.push((i, Tok::Op(c)));
                i += 1;
            } else {
                return Err(ExprError::SyntaxError { pos: i, msg: format!("unexpected character '{c}'") });
            }
        }
        Ok(lx.tokens)
    }

    fn number(&mut self, start: usize) -> Result<usize, ExprError> {
        let bytes = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            while *i < bytes.len() && bytes[*i].is_ascii_digit() {
                *i += 1;
            }
        };
        digits(&mut i);
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            digits(&mut i);
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                i = j;
                digits(&mut i);
            }
        }
        let text = &self.src[start..i];
        let v: f64 = text
            .parse()
            .map_err(|_| ExprError::SyntaxError { pos: start, msg: format!("malformed number '{text}'") })?;
        self.tokens.push((start, Tok::Num(v, text.to_string())));
        Ok(i)
    }
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    dims: Dims,
}

/// Parse `src` against the declared variable ranges.
pub fn parse(src: &str, dims: Dims) -> Result<Expr, ExprError> {
    let tokens = Lexer::run(src)?;
    if tokens.is_empty() {
        return Err(ExprError::SyntaxError { pos: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { tokens, pos: 0, end: src.len(), dims };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        let (at, tok) = &p.tokens[p.pos];
        return Err(ExprError::SyntaxError { pos: *at, msg: format!("unexpected token {tok:?}") });
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat_op(c) {
            Ok(())
        } else {
            Err(ExprError::SyntaxError { pos: self.here(), msg: format!("expected '{c}'") })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat_op('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat_op('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat_op('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if !self.eat_op('-') {
            return self.power();
        }
        // a minus directly on a bare literal is folded into the literal
        let bare_literal = matches!(self.peek(), Some(Tok::Num(..)))
            && self.tokens.get(self.pos + 1).map(|(_, t)| t) != Some(&Tok::Op('^'));
        let operand = self.unary()?;
        match operand {
            Expr::Num(v) if bare_literal => Ok(Expr::Num(-v)),
            other => Ok(Expr::Neg(Box::new(other))),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.primary()?;
        while self.eat_op('^') {
            let at = self.here();
            let k = match self.peek() {
                Some(Tok::Num(_, text)) => text.parse::<u32>().ok(),
                _ => None,
            };
            let k = k.ok_or_else(|| ExprError::SyntaxError {
                pos: at,
                msg: "exponent must be a nonnegative integer literal".into(),
            })?;
            self.pos += 1;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let at = self.here();
        let tok = self
            .tokens
            .get(self.pos)
            .map(|(_, t)| t.clone())
            .ok_or(ExprError::SyntaxError { pos: at, msg: "unexpected end of input".into() })?;
        self.pos += 1;
        match tok {
            Tok::Num(v, _) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(f) = Func::from_name(&name) {
                    self.expect_op('(')?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                self.variable(&name, at).map(Expr::Var)
            }
            Tok::Op(c) => Err(ExprError::SyntaxError { pos: at, msg: format!("unexpected '{c}'") }),
        }
    }

    fn variable(&self, name: &str, pos: usize) -> Result<Var, ExprError> {
        if name == "t" {
            return if self.dims.allow_t {
                Ok(Var::T)
            } else {
                Err(ExprError::DimensionError("t is not available in this context".into()))
            };
        }
        let indexed = |prefix: char| -> Option<usize> {
            let rest = name.strip_prefix(prefix)?;
            if rest.is_empty() || rest.starts_with('0') || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            rest.parse().ok()
        };
        if let Some(k) = indexed('x') {
            if k > self.dims.n {
                return Err(ExprError::DimensionError(format!("{name} exceeds dimension {}", self.dims.n)));
            }
            return Ok(Var::X(k - 1));
        }
        if let Some(k) = indexed('p') {
            if k > self.dims.params {
                return Err(ExprError::DimensionError(format!(
                    "{name} exceeds declared parameter count {}",
                    self.dims.params
                )));
            }
            return Ok(Var::P(k - 1));
        }
        Err(ExprError::UnknownIdentifier { name: name.to_string(), pos })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> Dims {
        Dims { n: 3, params: 1, allow_t: true }
    }

    fn bx(e: Expr) -> Box<Expr> {
        Box::new(e)
    }

    #[test]
    fn precedence_tree() {
        let e = parse("x1 + t^2 * x2", dims()).unwrap();
        let expect = Expr::Add(
            bx(Expr::x(0)),
            bx(Expr::Mul(bx(Expr::Pow(bx(Expr::t()), 2)), bx(Expr::x(1)))),
        );
        assert_eq!(e, expect);
    }

    #[test]
    fn function_calls_parse() {
        assert!(parse("sin(x1)*cos(t)", dims()).is_ok());
    }

    #[test]
    fn dimension_error() {
        let err = parse("x9", dims()).unwrap_err();
        assert_eq!(err.kind(), "DimensionError");
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("x1 + foo", dims()).unwrap_err();
        assert_eq!(err, ExprError::UnknownIdentifier { name: "foo".into(), pos: 5 });
    }

    #[test]
    fn syntax_errors_carry_position() {
        assert_eq!(parse("x1 +", dims()).unwrap_err(), ExprError::SyntaxError {
            pos: 4,
            msg: "unexpected end of input".into()
        });
        assert_eq!(parse("x1 ^ 1.5", dims()).unwrap_err().kind(), "SyntaxError");
        assert_eq!(parse("(x1", dims()).unwrap_err().kind(), "SyntaxError");
        assert_eq!(parse("", dims()).unwrap_err().kind(), "SyntaxError");
        assert_eq!(parse("x1 $ 2", dims()).unwrap_err().kind(), "SyntaxError");
    }

    #[test]
    fn t_can_be_disallowed() {
        let d = Dims { allow_t: false, ..dims() };
        assert_eq!(parse("t", d).unwrap_err().kind(), "DimensionError");
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = parse("-x1^2", dims()).unwrap();
        assert_eq!(e, Expr::Neg(bx(Expr::Pow(bx(Expr::x(0)), 2))));
        assert_eq!(parse("-3", dims()).unwrap(), Expr::Num(-3.0));
    }

    #[test]
    fn left_associative_subtraction() {
        let e = parse("x1 - x2 - x3", dims()).unwrap();
        let expect = Expr::Sub(bx(Expr::Sub(bx(Expr::x(0)), bx(Expr::x(1)))), bx(Expr::x(2)));
        assert_eq!(e, expect);
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(parse("1.5e-3", dims()).unwrap(), Expr::Num(1.5e-3));
        assert_eq!(parse(".25", dims()).unwrap(), Expr::Num(0.25));
    }
}
