//! Arithmetic expressions over the variables `x`, `y`, `t`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' unary)?          right associative
//! atom    := number | var | func '(' sum (',' sum)* ')' | '(' sum ')'
//! ```
//!
//! So `-x^2` is `-(x^2)`, `2^3^2` is `2^(3^2)` and `2*-3` is `2 * (-3)`.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("variable `{0}` is not bound")]
    Unbound(Var),
    #[error("domain error: {0}")]
    Domain(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    T,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Var::X => "x",
            Var::Y => "y",
            Var::T => "t",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Min,
    Max,
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Variable bindings for [`Expr::eval`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Env {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub t: Option<f64>,
}

impl Env {
    pub fn space(x: f64, y: f64) -> Self {
        Self { x: Some(x), y: Some(y), t: None }
    }

    pub fn space_time(x: f64, y: f64, t: f64) -> Self {
        Self { x: Some(x), y: Some(y), t: Some(t) }
    }
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0 };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax { offset: self.pos, message: message.to_string() }
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

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut mantissa = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            mantissa += digits(self);
        }
        if mantissa == 0 {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.error("malformed exponent"));
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: "malformed number".to_string(),
        })?;
        if !value.is_finite() {
            return Err(ExprError::Syntax { offset: start, message: "number overflows".to_string() });
        }
        Ok(Expr::Num(value))
    }

    fn identifier(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = core::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "x" => return Ok(Expr::Var(Var::X)),
            "y" => return Ok(Expr::Var(Var::Y)),
            "t" => return Ok(Expr::Var(Var::T)),
            _ => {}
        }
        let Some(func) = Func::from_name(name) else {
            return Err(ExprError::UnknownIdentifier { offset: start, name: name.to_string() });
        };
        if !self.eat(b'(') {
            return Err(self.error("expected `(` after function name"));
        }
        let mut args = Vec::new();
        loop {
            args.push(self.sum()?);
            if self.eat(b',') {
                continue;
            }
            if self.eat(b')') {
                break;
            }
            return Err(self.error("expected `,` or `)`"));
        }
        if args.len() != func.arity() {
            return Err(ExprError::Syntax {
                offset: start,
                message: alloc::format!("{} takes {} argument(s)", func.name(), func.arity()),
            });
        }
        Ok(Expr::Call(func, args))
    }
}

impl Expr {
    pub fn eval(&self, env: &Env) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => {
                let bound = match var {
                    Var::X => env.x,
                    Var::Y => env.y,
                    Var::T => env.t,
                };
                bound.ok_or(ExprError::Unbound(*var))?
            }
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env)?, b.eval(env)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::Domain("division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b == 0.0 {
                            1.0
                        } else if a < 0.0 && libm::trunc(b) != b {
                            return Err(ExprError::Domain("negative base with fractional exponent"));
                        } else if a == 0.0 && b < 0.0 {
                            return Err(ExprError::Domain("zero raised to a negative power"));
                        } else {
                            libm::pow(a, b)
                        }
                    }
                }
            }
            Expr::Call(f, args) => {
                let a = args[0].eval(env)?;
                match f {
                    Func::Abs => libm::fabs(a),
                    Func::Exp => libm::exp(a),
                    Func::Sin => libm::sin(a),
                    Func::Cos => libm::cos(a),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(ExprError::Domain("sqrt of a negative number"));
                        }
                        libm::sqrt(a)
                    }
                    Func::Min => a.min(args[1].eval(env)?),
                    Func::Max => a.max(args[1].eval(env)?),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::Domain("non-finite result"))
        }
    }

    /// Variables referenced anywhere in the tree, sorted and deduplicated.
    pub fn variables(&self) -> Vec<Var> {
        fn walk(e: &Expr, out: &mut Vec<Var>) {
            match e {
                Expr::Num(_) => {}
                Expr::Var(v) => out.push(*v),
                Expr::Neg(e) => walk(e, out),
                Expr::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn is_atom(&self) -> bool {
        matches!(self, Expr::Num(_) | Expr::Var(_) | Expr::Call(..))
    }
}

struct Operand<'a>(&'a Expr);

impl fmt::Display for Operand<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_atom() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

/// Prints a form that parses back to the same tree: every non-atomic operand
/// is parenthesised and numbers use the shortest round-trip representation.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => write!(f, "-{}", Operand(e)),
            Expr::Bin(op, a, b) => write!(f, "{} {} {}", Operand(a), op.symbol(), Operand(b)),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl core::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
