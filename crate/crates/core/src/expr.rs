//! Expression language for objectives, constraints and network inputs.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' integer)*
//! atom    := number | ident | ident '.' 'y' '[' integer ']'
//!          | ('exp' | 'tanh') '(' sum ')' | '(' sum ')'
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::relax::ActivationMode;
use crate::scalar::{Arith, Real};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    NetOut { net: String, index: usize },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    /// Evaluated as a product with the reciprocal of the divisor.
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    PowInt(Box<Expr>, u32),
    Exp(Box<Expr>),
    Tanh(Box<Expr>),
}

/// Name resolution for evaluation.
pub trait Env<V> {
    fn var(&self, name: &str) -> Option<V>;
    fn net_output(&self, net: &str, index: usize) -> Option<V>;
}

impl Expr {
    pub fn parse(source: &str) -> Result<Expr> {
        Parser::new(source)?.parse_all()
    }

    pub fn eval<T: Real, V: Arith<T>>(&self, env: &impl Env<V>, mode: ActivationMode) -> Result<V> {
        Ok(match self {
            Expr::Const(c) => V::constant(
                T::from_f64(*c).ok_or_else(|| Error::Domain(format!("constant {c} not representable")))?,
            ),
            Expr::Var(name) => env
                .var(name)
                .ok_or_else(|| Error::UnresolvedName(name.clone()))?,
            Expr::NetOut { net, index } => env
                .net_output(net, *index)
                .ok_or_else(|| Error::UnresolvedName(format!("{net}.y[{index}]")))?,
            Expr::Add(a, b) => a.eval(env, mode)?.add(&b.eval(env, mode)?)?,
            Expr::Sub(a, b) => a.eval(env, mode)?.sub(&b.eval(env, mode)?)?,
            Expr::Mul(a, b) => a.eval(env, mode)?.mul(&b.eval(env, mode)?)?,
            Expr::Div(a, b) => a.eval(env, mode)?.mul(&b.eval(env, mode)?.recip()?)?,
            Expr::Neg(a) => a.eval(env, mode)?.neg()?,
            Expr::PowInt(a, n) => a.eval(env, mode)?.powi(*n)?,
            Expr::Exp(a) => a.eval(env, mode)?.exp()?,
            Expr::Tanh(a) => a.eval(env, mode)?.tanh(mode)?,
        })
    }

    /// Visit every node, parents before children.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::NetOut { .. } => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Neg(a) | Expr::PowInt(a, _) | Expr::Exp(a) | Expr::Tanh(a) => a.visit(f),
        }
    }

    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Var(n) = e {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    pub fn net_refs(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::NetOut { net, index } = e {
                let r = (net.clone(), *index);
                if !out.contains(&r) {
                    out.push(r);
                }
            }
        });
        out
    }
}

/// Fully parenthesized form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(n) => f.write_str(n),
            Expr::NetOut { net, index } => write!(f, "{net}.y[{index}]"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::PowInt(a, n) => write!(f, "({a} ^ {n})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Tanh(a) => write!(f, "tanh({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64, bool),
    Ident(String),
    Op(char),
    End,
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn err<T>(offset: usize, expected: &[&str]) -> Result<T> {
    Err(Error::Parse {
        offset,
        expected: expected.iter().map(|s| s.to_string()).collect(),
    })
}

const OPERAND: [&str; 4] = ["number", "identifier", "'('", "'-'"];

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            let start = i;
            let mut integer = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
                integer = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            } else if i < bytes.len() && bytes[i] == b'.' && !bytes.get(i + 1).is_some_and(|b| b.is_ascii_alphabetic()) {
                // trailing dot, as in "3."
                integer = false;
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integer = false;
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let v: f64 = src[start..i].parse().map_err(|_| Error::Parse {
                offset: start,
                expected: vec!["number".into()],
            })?;
            out.push((Tok::Num(v, integer), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^().[]".contains(&c) {
            out.push((Tok::Op(c as char), i));
            i += 1;
        } else {
            return err(i, &["operator", "number", "identifier"]);
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Self {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect_op(&mut self, op: char) -> Result<()> {
        if *self.peek() == Tok::Op(op) {
            self.bump();
            Ok(())
        } else {
            err(self.offset(), &[&format!("'{op}'")])
        }
    }

    fn expect_int(&mut self, what: &str) -> Result<u64> {
        match *self.peek() {
            Tok::Num(v, true) if v <= u32::MAX as f64 => {
                self.bump();
                Ok(v as u64)
            }
            _ => err(self.offset(), &[what]),
        }
    }

    fn parse_all(mut self) -> Result<Expr> {
        if *self.peek() == Tok::End {
            return err(self.offset(), &OPERAND);
        }
        let e = self.sum()?;
        if *self.peek() != Tok::End {
            return err(self.offset(), &["operator", "end of input"]);
        }
        Ok(e)
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        while *self.peek() == Tok::Op('^') {
            self.bump();
            let n = self.expect_int("non-negative integer exponent")?;
            base = Expr::PowInt(Box::new(base), n as u32);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v, _) => Ok(Expr::Const(v)),
            Tok::Op('(') => {
                let e = self.sum()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') && (name == "exp" || name == "tanh") {
                    self.bump();
                    let arg = Box::new(self.sum()?);
                    self.expect_op(')')?;
                    return Ok(if name == "exp" { Expr::Exp(arg) } else { Expr::Tanh(arg) });
                }
                if *self.peek() == Tok::Op('.') {
                    self.bump();
                    match self.peek() {
                        Tok::Ident(y) if y == "y" => {
                            self.bump();
                        }
                        _ => return err(self.offset(), &["'y'"]),
                    }
                    self.expect_op('[')?;
                    let index = self.expect_int("output index")? as usize;
                    self.expect_op(']')?;
                    return Ok(Expr::NetOut { net: name, index });
                }
                Ok(Expr::Var(name))
            }
            _ => err(at, &OPERAND),
        }
    }
}
