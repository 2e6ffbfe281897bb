//! A small arithmetic expression language over the variables `x` and `t`.
//!
//! Grammar (recursive descent, no implicit multiplication):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | 't' | func '(' expr ')' | '(' expr ')'
//! func  := sin | cos | exp | ln | abs | sqrt
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-2^2` is
//! `-4` and `2^3^2` is `512`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Abs,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Ln, Func::Abs, Func::Sqrt];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownIdentifier(String),
    UnbalancedParen,
    DanglingOperator,
    UnexpectedChar(char),
    InvalidNumber,
    TrailingInput,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source.
    pub offset: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnknownIdentifier(s) => write!(f, "unknown identifier `{s}`"),
            ParseErrorKind::UnbalancedParen => f.write_str("unbalanced parenthesis"),
            ParseErrorKind::DanglingOperator => f.write_str("operator is missing an operand"),
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::InvalidNumber => f.write_str("invalid numeric literal"),
            ParseErrorKind::TrailingInput => f.write_str("unexpected trailing input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} in `{subexpr}`")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpr: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Ident(usize, usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let v = f64::from_str(text).map_err(|_| ParseError {
                    kind: ParseErrorKind::InvalidNumber,
                    offset: start,
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(start, i), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError { kind: ParseErrorKind::UnexpectedChar(ch), offset: start });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Tok> {
        self.toks.get(self.pos).map(|t| t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.src.len(), |t| t.1)
    }

    fn err(&self, kind: ParseErrorKind, offset: usize) -> ParseError {
        ParseError { kind, offset }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek().and_then(|t| match t {
            Tok::Plus => Some(BinOp::Add),
            Tok::Minus => Some(BinOp::Sub),
            _ => None,
        }) {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek().and_then(|t| match t {
            Tok::Star => Some(BinOp::Mul),
            Tok::Slash => Some(BinOp::Div),
            _ => None,
        }) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(Tok::Caret) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn close_paren(&mut self, open_at: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::RParen) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(ParseErrorKind::UnbalancedParen, open_at)),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(s, e)) => {
                self.pos += 1;
                let name = &self.src[s..e];
                match name {
                    "x" => Ok(Expr::Var(Var::X)),
                    "t" => Ok(Expr::Var(Var::T)),
                    _ => {
                        let func = Func::from_name(name).ok_or_else(|| {
                            self.err(ParseErrorKind::UnknownIdentifier(name.to_string()), s)
                        })?;
                        let open_at = self.offset();
                        if self.peek() != Some(Tok::LParen) {
                            return Err(self.err(
                                ParseErrorKind::UnknownIdentifier(name.to_string()),
                                s,
                            ));
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        self.close_paren(open_at)?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.close_paren(at)?;
                Ok(inner)
            }
            Some(Tok::RParen) if self.pos == 0 || self.prev_is_lparen() => {
                Err(self.err(ParseErrorKind::UnbalancedParen, at))
            }
            _ => Err(self.err(ParseErrorKind::DanglingOperator, at)),
        }
    }

    fn prev_is_lparen(&self) -> bool {
        self.pos > 0 && matches!(self.toks[self.pos - 1].0, Tok::LParen)
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { src, toks, pos: 0 };
    let e = p.expr()?;
    if let Some(tok) = p.peek() {
        let kind = match tok {
            Tok::RParen => ParseErrorKind::UnbalancedParen,
            _ => ParseErrorKind::TrailingInput,
        };
        return Err(p.err(kind, p.offset()));
    }
    Ok(e)
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Expr {
    pub fn eval(&self, x: f64, t: f64) -> Result<f64, EvalError> {
        let fail = |kind, e: &Expr| EvalError { kind, subexpr: e.to_string() };
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::T) => t,
            Expr::Neg(e) => -e.eval(x, t)?,
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(x, t)?, r.eval(x, t)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(fail(EvalErrorKind::DivisionByZero, self));
                        }
                        a / b
                    }
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(func, arg) => {
                let a = arg.eval(x, t)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if a <= 0.0 {
                            return Err(fail(EvalErrorKind::LogOfNonPositive, self));
                        }
                        a.ln()
                    }
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(fail(EvalErrorKind::SqrtOfNegative, self));
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(EvalErrorKind::NonFinite, self))
        }
    }

    pub fn uses(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses(var),
            Expr::Bin(_, l, r) => l.uses(var) || r.uses(var),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }
}

/// Parses a constant expression such as `29/729`.
pub fn eval_constant(src: &str) -> Result<f64, ConstantError> {
    let e = parse(src)?;
    if e.uses(Var::X) || e.uses(Var::T) {
        return Err(ConstantError::NotConstant(src.to_string()));
    }
    Ok(e.eval(0.0, 0.0)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstantError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("`{0}` depends on a variable")]
    NotConstant(String),
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the minimal parentheses needed to reparse to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_child(f, e, 3)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Bin(op, l, r) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => (" * ", 2, 3),
                    BinOp::Div => (" / ", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                write_child(f, l, lp)?;
                f.write_str(sym)?;
                write_child(f, r, rp)
            }
        }
    }
}
