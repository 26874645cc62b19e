//! Scalar expressions in `x` and `y`.
//!
//! Grammar (hand-written recursive descent):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'x' | 'y' | func '(' expr ')' | '(' expr ')'
//! func    := sqrt | sin | cos | exp | abs | ln
//! ```
//!
//! `^` binds tighter than unary minus and is right associative, so `-x^2`
//! is `-(x^2)` and `2^3^2` is `2^(3^2)`. Implicit multiplication is not
//! accepted: write `x*(x-y)` rather than `x(x-y)`.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{Evaluable, Point2};

pub type Span = Range<usize>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: expected {}, found {found}", expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("empty expression")]
    Empty,
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } => *offset,
            ParseError::Empty => 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero at {span:?}")]
    DivisionByZero { span: Span },
    #[error("{func} domain error at {span:?}: argument {arg}")]
    Domain {
        func: &'static str,
        arg: f64,
        span: Span,
    },
    #[error("non-finite result at {span:?}")]
    NonFinite { span: Span },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Abs,
    Ln,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Ln => "ln",
        }
    }

    fn lookup(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "abs" => Func::Abs,
            "ln" => Func::Ln,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// An AST node together with the byte range of source it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub node: Node,
    pub span: Span,
}

impl Expr {
    fn precedence(&self) -> u8 {
        match &self.node {
            Node::Binary(op, ..) => op.precedence(),
            Node::Neg(_) => 3,
            _ => 5,
        }
    }

    pub fn eval(&self, t: Point2) -> Result<f64, EvalError> {
        let span = || self.span.clone();
        let v = match &self.node {
            Node::Num(v) => *v,
            Node::X => t.x,
            Node::Y => t.y,
            Node::Neg(e) => -e.eval(t)?,
            Node::Binary(op, l, r) => {
                let a = l.eval(t)?;
                let b = r.eval(t)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero { span: span() });
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        let v = a.powf(b);
                        if v.is_nan() {
                            return Err(EvalError::Domain {
                                func: "^",
                                arg: a,
                                span: span(),
                            });
                        }
                        v
                    }
                }
            }
            Node::Call(func, arg) => {
                let a = arg.eval(t)?;
                let domain = |ok: bool| {
                    if ok {
                        Ok(())
                    } else {
                        Err(EvalError::Domain {
                            func: func.name(),
                            arg: a,
                            span: span(),
                        })
                    }
                };
                match func {
                    Func::Sqrt => {
                        domain(a >= 0.0)?;
                        a.sqrt()
                    }
                    Func::Ln => {
                        domain(a > 0.0)?;
                        a.ln()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { span: span() })
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool| {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match &self.node {
            Node::Num(v) => write!(f, "{v}"),
            Node::X => f.write_str("x"),
            Node::Y => f.write_str("y"),
            Node::Neg(e) => {
                f.write_str("-")?;
                wrap(f, e, e.precedence() < 3)
            }
            Node::Binary(BinOp::Pow, l, r) => {
                wrap(f, l, l.precedence() <= 4)?;
                f.write_str("^")?;
                wrap(f, r, r.precedence() < 3)
            }
            Node::Binary(op, l, r) => {
                let p = op.precedence();
                wrap(f, l, l.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                wrap(f, r, r.precedence() <= p)
            }
            Node::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}

/// A parsed expression and its source text.
#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    source: String,
    root: Expr,
}

impl Expression {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn eval(&self, t: Point2) -> Result<f64, EvalError> {
        self.root.eval(t)
    }

    /// True when the expression mentions neither `x` nor `y`.
    pub fn is_constant(&self) -> bool {
        fn walk(e: &Expr) -> bool {
            match &e.node {
                Node::Num(_) => true,
                Node::X | Node::Y => false,
                Node::Neg(a) | Node::Call(_, a) => walk(a),
                Node::Binary(_, a, b) => walk(a) && walk(b),
            }
        }
        walk(&self.root)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Evaluable for Expression {
    fn evaluate(&self, t: Point2) -> Result<f64, EvalError> {
        self.eval(t)
    }
}

pub fn parse(src: &str) -> Result<Expression, ParseError> {
    if src.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut parser = Parser { src, pos: 0 };
    let root = parser.expr()?;
    parser.skip_ws();
    if parser.pos < src.len() {
        return Err(parser.error(&["operator", "end of input"]));
    }
    Ok(Expression {
        source: src.to_string(),
        root,
    })
}

pub fn evaluate(e: &Expression, t: Point2) -> Result<f64, EvalError> {
    e.eval(t)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.peek_char()
    }

    fn error(&mut self, expected: &[&'static str]) -> ParseError {
        self.skip_ws();
        let found = match self.peek_char() {
            Some(c) => format!("{c:?}"),
            None => "end of input".to_string(),
        };
        ParseError::Syntax {
            offset: self.pos,
            expected: expected.to_vec(),
            found,
        }
    }

    fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        let span = l.span.start..r.span.end;
        Expr {
            node: Node::Binary(op, Box::new(l), Box::new(r)),
            span,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some('+') => BinOp::Add,
                Some('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some('*') => BinOp::Mul,
                Some('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Self::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some('-') {
            let start = self.pos;
            self.pos += 1;
            let inner = self.unary()?;
            let span = start..inner.span.end;
            return Ok(Expr {
                node: Node::Neg(Box::new(inner)),
                span,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(Self::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        const EXPECTED: &[&str] = &["number", "x", "y", "function", "'('", "'-'"];
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some('(') => {
                let open = self.pos;
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error(&["')'", "operator"]));
                }
                self.pos += 1;
                Ok(Expr {
                    node: inner.node,
                    span: open..self.pos,
                })
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let ident_start = self.pos;
                while self
                    .peek_char()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    self.pos += 1;
                }
                let ident = &self.src[ident_start..self.pos];
                match ident {
                    "x" => Ok(Expr {
                        node: Node::X,
                        span: ident_start..self.pos,
                    }),
                    "y" => Ok(Expr {
                        node: Node::Y,
                        span: ident_start..self.pos,
                    }),
                    _ => {
                        let Some(func) = Func::lookup(ident) else {
                            self.pos = ident_start;
                            return Err(self.error(EXPECTED));
                        };
                        if self.peek() != Some('(') {
                            return Err(self.error(&["'('"]));
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        if self.peek() != Some(')') {
                            return Err(self.error(&["')'", "operator"]));
                        }
                        self.pos += 1;
                        Ok(Expr {
                            node: Node::Call(func, Box::new(arg)),
                            span: ident_start..self.pos,
                        })
                    }
                }
            }
            _ => {
                self.pos = self.pos.max(start);
                Err(self.error(EXPECTED))
            }
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut count = digits(&mut p);
        if p < bytes.len() && bytes[p] == b'.' {
            p += 1;
            count += digits(&mut p);
        }
        if count == 0 {
            return Err(self.error(&["number"]));
        }
        if p < bytes.len() && (bytes[p] == b'e' || bytes[p] == b'E') {
            let mut q = p + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        let text = &self.src[start..p];
        let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            expected: vec!["number"],
            found: text.to_string(),
        })?;
        self.pos = p;
        Ok(Expr {
            node: Node::Num(value),
            span: start..p,
        })
    }
}

/// Transcriptions of the function pair used for the reference figures, with
/// explicit multiplication.
pub mod figures {
    /// `f(x, y) = (xy + 113) / 432`.
    pub const F: &str = "(x*y+113)/432";
    /// `b(x, y) = f(x, y) - x(x - y + 1.22)(x - 1) y (y - √3/2)`.
    pub const B: &str = "(x*y+113)/432-x*(x-y+1.22)*(x-1)*y*(y-3^(1/2)/2)";
    /// Constant scaling of the first figure.
    pub const ALPHA: f64 = 0.7;
    /// Scaling sweep of the second figure.
    pub const ALPHA_SWEEP: [f64; 4] = [0.3, 0.4, 0.5, 0.6];
}
