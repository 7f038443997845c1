use std::fmt;

use num::rational::Ratio;
use num::{ToPrimitive, Zero};

/// Arithmetic over the integration variables `t1…t8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    /// Nonnegative rational literal. Integers have denominator 1.
    Num(Ratio<i64>),
    /// Zero-based variable index: `t1` is `Var(0)`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    DivisionByZero,
    UnboundVariable(usize),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::DivisionByZero => write!(f, "division by zero"),
            EvalError::UnboundVariable(i) => write!(f, "variable t{} is not bound", i + 1),
        }
    }
}

impl std::error::Error for EvalError {}

impl Expr {
    pub fn int(n: i64) -> Self {
        Expr::Num(Ratio::from_integer(n))
    }

    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Bin(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Evaluates at `point`, where `point[i]` is `t(i+1)`.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(r) => ratio_to_f64(*r),
            Expr::Var(i) => *point.get(*i).ok_or(EvalError::UnboundVariable(*i))?,
            Expr::Neg(a) => -a.eval(point)?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(point)?, b.eval(point)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        x / y
                    }
                }
            }
            Expr::Pow(a, n) => a.eval(point)?.powi(*n as i32),
            Expr::Min(a, b) => a.eval(point)?.min(b.eval(point)?),
            Expr::Max(a, b) => a.eval(point)?.max(b.eval(point)?),
        })
    }

    /// Exact value when the expression has no variables.
    pub fn constant(&self) -> Option<Ratio<i64>> {
        Some(match self {
            Expr::Num(r) => *r,
            Expr::Var(_) => return None,
            Expr::Neg(a) => -a.constant()?,
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.constant()?, b.constant()?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div if y.is_zero() => return None,
                    BinOp::Div => x / y,
                }
            }
            Expr::Pow(a, n) => {
                let x = a.constant()?;
                (0..*n).fold(Ratio::from_integer(1), |acc, _| acc * x)
            }
            Expr::Min(a, b) => a.constant()?.min(b.constant()?),
            Expr::Max(a, b) => a.constant()?.max(b.constant()?),
        })
    }
}

pub(crate) fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Flattened form used by the samplers.
#[derive(Debug, Clone)]
pub(crate) enum Compiled {
    Const(f64),
    Var(usize),
    Neg(Box<Compiled>),
    Add(Box<Compiled>, Box<Compiled>),
    Sub(Box<Compiled>, Box<Compiled>),
    Mul(Box<Compiled>, Box<Compiled>),
    Div(Box<Compiled>, Box<Compiled>),
    Powi(Box<Compiled>, i32),
    Min(Box<Compiled>, Box<Compiled>),
    Max(Box<Compiled>, Box<Compiled>),
}

impl Compiled {
    pub(crate) fn new(e: &Expr) -> Self {
        if let Some(c) = e.constant() {
            return Compiled::Const(ratio_to_f64(c));
        }
        let b = |x: &Expr| Box::new(Compiled::new(x));
        match e {
            Expr::Num(r) => Compiled::Const(ratio_to_f64(*r)),
            Expr::Var(i) => Compiled::Var(*i),
            Expr::Neg(a) => Compiled::Neg(b(a)),
            Expr::Bin(BinOp::Add, x, y) => Compiled::Add(b(x), b(y)),
            Expr::Bin(BinOp::Sub, x, y) => Compiled::Sub(b(x), b(y)),
            Expr::Bin(BinOp::Mul, x, y) => Compiled::Mul(b(x), b(y)),
            Expr::Bin(BinOp::Div, x, y) => Compiled::Div(b(x), b(y)),
            Expr::Pow(a, n) => Compiled::Powi(b(a), *n as i32),
            Expr::Min(x, y) => Compiled::Min(b(x), b(y)),
            Expr::Max(x, y) => Compiled::Max(b(x), b(y)),
        }
    }

    /// Division by zero yields ±inf or NaN; callers check finiteness.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Compiled::Const(c) => *c,
            Compiled::Var(i) => x[*i],
            Compiled::Neg(a) => -a.eval(x),
            Compiled::Add(a, b) => a.eval(x) + b.eval(x),
            Compiled::Sub(a, b) => a.eval(x) - b.eval(x),
            Compiled::Mul(a, b) => a.eval(x) * b.eval(x),
            Compiled::Div(a, b) => a.eval(x) / b.eval(x),
            Compiled::Powi(a, n) => a.eval(x).powi(*n),
            Compiled::Min(a, b) => a.eval(x).min(b.eval(x)),
            Compiled::Max(a, b) => a.eval(x).max(b.eval(x)),
        }
    }
}
