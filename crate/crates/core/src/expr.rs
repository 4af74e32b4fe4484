//! Closed-form periodic coefficient functions.
//!
//! Coefficients are written in a small trigonometric-rational language:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number | 't' | 'pi' | 'sin' '(' expr ')' | 'cos' '(' expr ')'
//!         | '(' expr ')' | '-' factor
//! ```
//!
//! Implicit multiplication is rejected. Every accepted expression is checked
//! against its declared period on a uniform sample before it is handed out.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// Samples used by the periodicity check.
pub const PERIODICITY_SAMPLES: usize = 1024;

/// Relative tolerance of the periodicity check.
pub const PERIODICITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Pi,
    T,
    Sin(Box<Node>),
    Cos(Box<Node>),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

impl Node {
    /// IEEE evaluation: division by zero yields an infinity or NaN instead of an error.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Pi => PI,
            Node::T => t,
            Node::Sin(a) => a.value(t).sin(),
            Node::Cos(a) => a.value(t).cos(),
            Node::Neg(a) => -a.value(t),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.value(t), b.value(t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
        }
    }

    fn checked(&self, t: f64) -> Result<f64> {
        Ok(match self {
            Node::Num(v) => *v,
            Node::Pi => PI,
            Node::T => t,
            Node::Sin(a) => a.checked(t)?.sin(),
            Node::Cos(a) => a.checked(t)?.cos(),
            Node::Neg(a) => -a.checked(t)?,
            Node::Bin(op, a, b) => {
                let (a, b) = (a.checked(t)?, b.checked(t)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(Error::DivisionByZero { t });
                        }
                        a / b
                    }
                }
            }
        })
    }

    fn mentions_t(&self) -> bool {
        match self {
            Node::Num(_) | Node::Pi => false,
            Node::T => true,
            Node::Sin(a) | Node::Cos(a) | Node::Neg(a) => a.mentions_t(),
            Node::Bin(_, a, b) => a.mentions_t() || b.mentions_t(),
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(v) => write!(f, "{v}"),
            Node::Pi => f.write_str("pi"),
            Node::T => f.write_str("t"),
            Node::Sin(a) => {
                f.write_str("sin(")?;
                a.write(f)?;
                f.write_str(")")
            }
            Node::Cos(a) => {
                f.write_str("cos(")?;
                a.write(f)?;
                f.write_str(")")
            }
            Node::Neg(a) => {
                f.write_str("-")?;
                write_operand(a, matches!(**a, Node::Bin(..)), f)
            }
            Node::Bin(op, a, b) => {
                let p = op.precedence();
                let left_parens = matches!(&**a, Node::Bin(o, ..) if o.precedence() < p);
                let right_parens = matches!(&**b, Node::Bin(o, ..) if o.precedence() <= p);
                write_operand(a, left_parens, f)?;
                write!(f, "{}", op.symbol())?;
                write_operand(b, right_parens, f)
            }
        }
    }
}

fn write_operand(node: &Node, parens: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        node.write(f)?;
        f.write_str(")")
    } else {
        node.write(f)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f)
    }
}

/// An ω-periodic scalar function given in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicExpr {
    root: Node,
    period: f64,
}

impl PeriodicExpr {
    /// Parses `text` and checks that `period` really is a period of it.
    pub fn parse(text: &str, period: f64) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidPeriod(period));
        }
        let root = parse_node(text)?;
        let expr = PeriodicExpr { root, period };
        expr.check_periodicity()?;
        Ok(expr)
    }

    /// A constant function; constants are periodic for every period.
    pub fn constant(value: f64, period: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite { what: "constant", t: 0.0 });
        }
        PeriodicExpr::parse(&format!("{value}"), period)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_constant(&self) -> bool {
        !self.root.mentions_t()
    }

    /// Evaluates at `t`, reporting division by zero and non-finite results.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let v = self.root.checked(t)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { what: "expression", t })
        }
    }

    /// Unchecked evaluation for hot loops over inputs that were validated once.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.root.value(t)
    }

    /// `values` at `n` uniformly spaced points of `[0, ω)`.
    pub fn sample(&self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|j| self.eval(j as f64 * self.period / n as f64)).collect()
    }

    /// `∫₀^ω expr dt`, to absolute accuracy 1e-12.
    pub fn mean_integral(&self) -> Result<f64> {
        let rule = GaussLegendre::new(8);
        let mut panels = 32;
        let mut prev = self.composite(&rule, panels)?;
        loop {
            panels *= 2;
            let next = self.composite(&rule, panels)?;
            if (next - prev).abs() <= 1e-13 || panels >= 1 << 14 {
                return Ok(next);
            }
            prev = next;
        }
    }

    fn composite(&self, rule: &GaussLegendre, panels: usize) -> Result<f64> {
        let h = self.period / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let a = p as f64 * h;
            for (x, w) in rule.mapped(a, a + h) {
                total += w * self.eval(x)?;
            }
        }
        Ok(total)
    }

    fn check_periodicity(&self) -> Result<()> {
        let mut worst: Option<(f64, f64)> = None;
        for k in 0..PERIODICITY_SAMPLES {
            let t = k as f64 * self.period / PERIODICITY_SAMPLES as f64;
            let a = self.eval(t)?;
            let b = self.eval(t + self.period)?;
            let gap = (a - b).abs();
            if gap > PERIODICITY_TOL * (1.0 + a.abs()) && worst.is_none_or(|(_, g)| gap > g) {
                worst = Some((t, gap));
            }
        }
        match worst {
            None => Ok(()),
            Some((t, gap)) => Err(Error::NotPeriodic { text: self.to_string(), period: self.period, t, gap }),
        }
    }
}

impl fmt::Display for PeriodicExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

/// Evaluates a constant expression such as `2*pi`; `t` is rejected.
pub fn parse_constant(text: &str) -> Result<f64> {
    let node = parse_node(text)?;
    if node.mentions_t() {
        return Err(Error::Syntax {
            pos: text.find('t').unwrap_or(0),
            msg: "constant expression may not depend on t".into(),
        });
    }
    let v = node.checked(0.0)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what: "constant expression", t: 0.0 })
    }
}

/// Parses text into a tree without any periodicity check.
pub fn parse_node(text: &str) -> Result<Node> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let node = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(node)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.to_string() }
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

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == b'+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(c @ (b'*' | b'/')) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    let op = if c == b'*' { BinOp::Mul } else { BinOp::Div };
                    lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
                }
                Some(c) if c.is_ascii_alphanumeric() || c == b'(' || c == b'.' => {
                    return Err(self.error("implicit multiplication is not allowed"));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.factor()?)))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(b')')?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                match word {
                    "t" => Ok(Node::T),
                    "pi" => Ok(Node::Pi),
                    "sin" | "cos" => {
                        self.expect(b'(')?;
                        let arg = Box::new(self.expr()?);
                        self.expect(b')')?;
                        Ok(if word == "sin" { Node::Sin(arg) } else { Node::Cos(arg) })
                    }
                    _ => {
                        self.pos = start;
                        Err(self.error(&format!("unknown identifier '{word}'")))
                    }
                }
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos > s
        };
        let int = digits(self);
        let mut frac = false;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            frac = digits(self);
        }
        if !int && !frac {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if !digits(self) {
                self.pos = mark;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Node::Num(v)),
            _ => {
                self.pos = start;
                Err(self.error("number out of range"))
            }
        }
    }
}
