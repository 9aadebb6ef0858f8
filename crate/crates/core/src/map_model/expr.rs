//! Text grammar for maps.
//!
//! ```text
//! term    := sum
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | ident ['(' args ')'] | '[' args ']' | '(' term ')'
//! ```
//!
//! Identifiers `x1..xn` are coordinates. Calls name either arithmetic
//! functions (`norm`, `min`, `max`, `abs`) or map generators, which the
//! builders in `map_model` interpret.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Untyped parse tree shared by the map and sphere-map builders.
#[derive(Debug, Clone, PartialEq)]
pub enum Syntax {
    Number(f64, usize),
    Ident(String, usize),
    Call(String, Vec<Syntax>, usize),
    List(Vec<Syntax>, usize),
    Neg(Box<Syntax>, usize),
    Binary(BinOp, Box<Syntax>, Box<Syntax>, usize),
}

impl Syntax {
    pub fn pos(&self) -> usize {
        match self {
            Syntax::Number(_, p)
            | Syntax::Ident(_, p)
            | Syntax::Call(_, _, p)
            | Syntax::List(_, p)
            | Syntax::Neg(_, p)
            | Syntax::Binary(_, _, _, p) => *p,
        }
    }

    pub fn as_number(&self) -> Result<f64> {
        match self {
            Syntax::Number(x, _) => Ok(*x),
            Syntax::Neg(inner, _) => inner.as_number().map(|x| -x),
            other => Err(parse_err(other.pos(), "expected a number")),
        }
    }

    pub fn as_integer(&self) -> Result<i64> {
        let x = self.as_number()?;
        if x.fract() != 0.0 || x.abs() > 1e15 {
            return Err(parse_err(self.pos(), "expected an integer"));
        }
        Ok(x as i64)
    }

    pub fn as_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let Syntax::List(rows, pos) = self else {
            return Err(parse_err(self.pos(), "expected a matrix [[..],[..]]"));
        };
        let rows = rows
            .iter()
            .map(|r| match r {
                Syntax::List(items, _) => items.iter().map(Syntax::as_number).collect(),
                other => Err(parse_err(other.pos(), "expected a matrix row")),
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let width = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || width == 0 || rows.iter().any(|r| r.len() != width) {
            return Err(parse_err(*pos, "matrix rows must be non-empty and equally long"));
        }
        Ok(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

pub(crate) fn parse_err(pos: usize, msg: impl Into<String>) -> Error {
    Error::Parse { pos, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_digit() || c == '.' {
            let mut end = i;
            let mut prev = ' ';
            while let Some(&(j, d)) = chars.peek() {
                let exp_sign = (d == '+' || d == '-') && (prev == 'e' || prev == 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    end = j + d.len_utf8();
                    prev = d;
                    chars.next();
                } else {
                    break;
                }
            }
            let text = &src[i..end];
            let x: f64 = text.parse().map_err(|_| parse_err(i, format!("bad number `{text}`")))?;
            out.push((Tok::Num(x), i));
        } else if c.is_alphabetic() || c == '_' {
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_alphanumeric() || d == '_' {
                    end = j + d.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            out.push((Tok::Ident(src[i..end].to_string()), i));
        } else {
            let sym = match c {
                '\u{2212}' => '-',
                '\u{00b7}' | '\u{22c5}' => '*',
                other => other,
            };
            if !"+-*/^(),[]".contains(sym) {
                return Err(parse_err(i, format!("unexpected character `{c}`")));
            }
            out.push((Tok::Sym(sym), i));
            chars.next();
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn eat(&mut self, sym: char) -> bool {
        if self.peek() == Some(&Tok::Sym(sym)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: char) -> Result<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            Err(parse_err(self.pos(), format!("expected `{sym}`")))
        }
    }

    fn sum(&mut self) -> Result<Syntax> {
        let mut lhs = self.product()?;
        loop {
            let pos = self.pos();
            let op = if self.eat('+') {
                BinOp::Add
            } else if self.eat('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.product()?;
            lhs = Syntax::Binary(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn product(&mut self) -> Result<Syntax> {
        let mut lhs = self.unary()?;
        loop {
            let pos = self.pos();
            let op = if self.eat('*') {
                BinOp::Mul
            } else if self.eat('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Syntax::Binary(op, Box::new(lhs), Box::new(rhs), pos);
        }
    }

    fn unary(&mut self) -> Result<Syntax> {
        let pos = self.pos();
        if self.eat('-') {
            return Ok(Syntax::Neg(Box::new(self.unary()?), pos));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Syntax> {
        let base = self.atom()?;
        let pos = self.pos();
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Syntax::Binary(BinOp::Pow, Box::new(base), Box::new(exp), pos));
        }
        Ok(base)
    }

    fn args(&mut self, close: char) -> Result<Vec<Syntax>> {
        let mut items = Vec::new();
        if self.eat(close) {
            return Ok(items);
        }
        loop {
            items.push(self.sum()?);
            if self.eat(close) {
                return Ok(items);
            }
            self.expect(',')?;
        }
    }

    fn atom(&mut self) -> Result<Syntax> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(x)) => {
                self.at += 1;
                Ok(Syntax::Number(x, pos))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if self.eat('(') {
                    Ok(Syntax::Call(name, self.args(')')?, pos))
                } else {
                    Ok(Syntax::Ident(name, pos))
                }
            }
            Some(Tok::Sym('[')) => {
                self.at += 1;
                Ok(Syntax::List(self.args(']')?, pos))
            }
            Some(Tok::Sym('(')) => {
                self.at += 1;
                let inner = self.sum()?;
                self.expect(')')?;
                Ok(inner)
            }
            _ => Err(parse_err(pos, "expected a term")),
        }
    }
}

/// Parse map text into an untyped syntax tree.
pub fn parse(src: &str) -> Result<Syntax> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0, end: src.len() };
    let s = p.sum()?;
    if p.at != p.toks.len() {
        return Err(parse_err(p.pos(), "trailing input"));
    }
    Ok(s)
}

/// A scalar arithmetic expression in the coordinates `x1..xn`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Const(f64),
    /// Zero-based coordinate index.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Norm(Vec<Expr>),
    Min(Vec<Expr>),
    Max(Vec<Expr>),
    Abs(Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(e) => -e.eval(x),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => {
                        if b.fract() == 0.0 && b.abs() < 64.0 {
                            a.powi(b as i32)
                        } else {
                            a.powf(b)
                        }
                    }
                }
            }
            Expr::Norm(items) => items.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt(),
            Expr::Min(items) => items.iter().map(|e| e.eval(x)).fold(f64::INFINITY, f64::min),
            Expr::Max(items) => items.iter().map(|e| e.eval(x)).fold(f64::NEG_INFINITY, f64::max),
            Expr::Abs(e) => e.eval(x).abs(),
        }
    }

    /// Largest coordinate index used, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) | Expr::Abs(e) => e.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
            Expr::Norm(v) | Expr::Min(v) | Expr::Max(v) => v.iter().map(Expr::arity).max().unwrap_or(0),
        }
    }

    pub fn from_syntax(s: &Syntax) -> Result<Expr> {
        Ok(match s {
            Syntax::Number(x, _) => Expr::Const(*x),
            Syntax::Ident(name, pos) => match coordinate_index(name) {
                Some(i) => Expr::Var(i),
                None if name == "pi" => Expr::Const(std::f64::consts::PI),
                None => return Err(parse_err(*pos, format!("unknown identifier `{name}`"))),
            },
            Syntax::Neg(e, _) => Expr::Neg(Box::new(Expr::from_syntax(e)?)),
            Syntax::Binary(op, a, b, _) => {
                Expr::Bin(*op, Box::new(Expr::from_syntax(a)?), Box::new(Expr::from_syntax(b)?))
            }
            Syntax::Call(name, args, pos) => {
                let items = args.iter().map(Expr::from_syntax).collect::<Result<Vec<_>>>()?;
                match (name.as_str(), items.len()) {
                    ("norm", n) if n > 0 => Expr::Norm(items),
                    ("min", n) if n > 0 => Expr::Min(items),
                    ("max", n) if n > 0 => Expr::Max(items),
                    ("abs", 1) => Expr::Abs(Box::new(items.into_iter().next().unwrap())),
                    _ => return Err(parse_err(*pos, format!("`{name}` is not a scalar function here"))),
                }
            }
            Syntax::List(_, pos) => return Err(parse_err(*pos, "nested list inside an expression")),
        })
    }
}

fn coordinate_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('x')?;
    let i: usize = digits.parse().ok()?;
    (i >= 1).then(|| i - 1)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, v: &[Expr]| {
            write!(f, "{name}(")?;
            for (i, e) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, ")")
        };
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Norm(v) => list(f, "norm", v),
            Expr::Min(v) => list(f, "min", v),
            Expr::Max(v) => list(f, "max", v),
            Expr::Abs(e) => write!(f, "abs({e})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, x: &[f64]) -> f64 {
        Expr::from_syntax(&parse(src).unwrap()).unwrap().eval(x)
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 + 2 * 3", &[]), 7.0);
        assert_eq!(eval("2 ^ 3 ^ 2", &[]), 512.0);
        assert_eq!(eval("-x1^2", &[3.0]), -9.0);
        assert_eq!(eval("8 / 4 / 2", &[]), 1.0);
        assert_eq!(eval("x1 \u{2212} x2", &[5.0, 2.0]), 3.0);
    }

    #[test]
    fn functions() {
        assert_eq!(eval("norm(x1, x2)", &[3.0, 4.0]), 5.0);
        assert_eq!(eval("min(x1, 2, x2)", &[3.0, 4.0]), 2.0);
        assert_eq!(eval("max(x1, 2, x2)", &[3.0, 4.0]), 4.0);
        assert_eq!(eval("abs(-x1)", &[3.0]), 3.0);
        assert_eq!(eval("1e-1 * 10", &[]), 1.0);
    }

    #[test]
    fn errors_carry_positions() {
        match parse("x1 + * 2") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 5),
            other => panic!("{other:?}"),
        }
        assert!(parse("(x1").is_err());
        assert!(parse("x1 x2").is_err());
        assert!(Expr::from_syntax(&parse("y + 1").unwrap()).is_err());
        assert!(tokenize("x1 $ 2").is_err());
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::from_syntax(&parse("norm(x1, x2) - x2^2 / min(1, x1)").unwrap()).unwrap();
        let again = Expr::from_syntax(&parse(&e.to_string()).unwrap()).unwrap();
        for x in [[0.3, -2.0], [1.5, 0.25]] {
            assert_eq!(e.eval(&x), again.eval(&x));
        }
    }
}
