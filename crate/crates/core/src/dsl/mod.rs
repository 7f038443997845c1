//! A line-oriented language for the loss integrals.
//!
//! ```text
//! integral LOSS_S42 group S42 sign + paper 0.7226
//!   var t1 in [1/35, 17/35]
//!   var t2 in [1/35, min(t1, (1 - t1)/2)]
//!   require L(t1, t2)
//!   factor omega_exact ((1 - t1 - t2) / t2)
//!   measure 1 / (t1 * t2^2)
//! end
//! ```
//!
//! Variables are declared in order `t1, t2, …`; each bound may use only the
//! variables before it. A `require` line is a disjunction of region atoms
//! (`!` negates, `or` separates alternatives) and may appear between variable
//! declarations. `#` starts a comment.

mod expr;
mod parser;
mod printer;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num::rational::Ratio;
use thiserror::Error;

pub use expr::{BinOp, EvalError, Expr};
pub(crate) use expr::{ratio_to_f64, Compiled};
pub use parser::{parse, parse_expr};
pub use printer::{print, print_expr};

use crate::regions::{self, Ledger, Partition};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: {atom} takes {expected} arguments, got {got}")]
    Arity {
        line: usize,
        atom: String,
        expected: String,
        got: usize,
    },
    #[error("line {line}, column {col}: t{var} is used before it is declared")]
    ForwardReference { line: usize, col: usize, var: usize },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum Group {
    S42,
    M,
    N0,
    N1,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::S42, Group::M, Group::N0, Group::N1];

    pub fn name(self) -> &'static str {
        match self {
            Group::S42 => "S42",
            Group::M => "M",
            Group::N0 => "N0",
            Group::N1 => "N1",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Group::ALL.into_iter().find(|g| g.name() == s).ok_or(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    OmegaExact,
    OmegaLower,
    OmegaUpper,
    /// `max(1/u, 0.5672)`.
    OmegaSimple,
}

impl FactorKind {
    pub const ALL: [FactorKind; 4] = [
        FactorKind::OmegaExact,
        FactorKind::OmegaLower,
        FactorKind::OmegaUpper,
        FactorKind::OmegaSimple,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            FactorKind::OmegaExact => "omega_exact",
            FactorKind::OmegaLower => "omega_lower",
            FactorKind::OmegaUpper => "omega_upper",
            FactorKind::OmegaSimple => "omega_simple",
        }
    }
}

/// Region named in a `require` line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    T0,
    T1,
    T2,
    T21,
    T22,
    T23,
    I,
    J,
    L,
    M,
    N,
    U(Ledger),
}

impl Atom {
    pub fn keyword(self) -> &'static str {
        match self {
            Atom::T0 => "T0",
            Atom::T1 => "T1",
            Atom::T2 => "T2",
            Atom::T21 => "T21",
            Atom::T22 => "T22",
            Atom::T23 => "T23",
            Atom::I => "I",
            Atom::J => "J",
            Atom::L => "L",
            Atom::M => "M",
            Atom::N => "N",
            Atom::U(l) => l.name(),
        }
    }

    pub fn parse_keyword(s: &str) -> Option<Atom> {
        Some(match s {
            "T0" => Atom::T0,
            "T1" => Atom::T1,
            "T2" => Atom::T2,
            "T21" => Atom::T21,
            "T22" => Atom::T22,
            "T23" => Atom::T23,
            "I" => Atom::I,
            "J" => Atom::J,
            "L" => Atom::L,
            "M" => Atom::M,
            "N" => Atom::N,
            other => Atom::U(other.parse().ok()?),
        })
    }

    /// Allowed argument counts.
    pub fn arity(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Atom::T0 | Atom::T1 | Atom::L | Atom::M | Atom::N => 2..=2,
            Atom::T2 | Atom::T21 | Atom::T22 | Atom::T23 => 3..=3,
            Atom::I | Atom::J => 1..=regions::MAX_DIM,
            Atom::U(l) => l.dim()..=l.dim(),
        }
    }

    /// Membership of the argument values.
    pub fn holds(self, args: &[f64], partition: Partition) -> bool {
        use regions::*;
        match self {
            Atom::T0 => in_t0(&args[0], &args[1]),
            Atom::T1 => in_t1(&args[0], &args[1]),
            Atom::T2 => in_t2(&args[0], &args[1], &args[2]),
            Atom::T21 => in_t21(&args[0], &args[1], &args[2]),
            Atom::T22 => in_t22(&args[0], &args[1], &args[2]),
            Atom::T23 => in_t23(&args[0], &args[1], &args[2]),
            Atom::I => in_i_with(args, partition),
            Atom::J => in_j_with(args, partition),
            Atom::L => in_l_with(&args[0], &args[1], partition),
            Atom::M => in_m_with(&args[0], &args[1], partition),
            Atom::N => in_n_with(&args[0], &args[1], partition),
            Atom::U(l) => in_u_with(l, args, partition).unwrap_or(false),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Literal {
    pub negated: bool,
    pub atom: Atom,
    pub args: Vec<Expr>,
}

/// A disjunction of literals, checked once `declared_after` variables are bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub any_of: Vec<Literal>,
    /// Number of variables declared before this line.
    pub declared_after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub lower: Expr,
    pub upper: Expr,
}

/// `kind(num / den)`; `den` is `None` when the argument is not a quotient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub kind: FactorKind,
    pub num: Expr,
    pub den: Option<Expr>,
}

impl Factor {
    pub fn argument(&self) -> Expr {
        match &self.den {
            Some(d) => Expr::Bin(BinOp::Div, Box::new(self.num.clone()), Box::new(d.clone())),
            None => self.num.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegralSpec {
    pub name: String,
    pub group: Group,
    pub sign: Sign,
    pub paper_value: Ratio<i64>,
    /// `vars[k]` declares `t(k+1)`.
    pub vars: Vec<VarDecl>,
    pub constraints: Vec<Constraint>,
    pub factors: Vec<Factor>,
    pub measure: Expr,
}

impl IntegralSpec {
    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn paper_value_f64(&self) -> f64 {
        ratio_to_f64(self.paper_value)
    }

    /// Per-variable exponents when the measure is `1 / (t_a^p * t_b^q * …)`.
    pub fn denominator_exponents(&self) -> Option<Vec<u32>> {
        let Expr::Bin(BinOp::Div, one, den) = &self.measure else {
            return None;
        };
        if **one != Expr::int(1) {
            return None;
        }
        let mut exps = vec![0u32; self.dim()];
        fn walk(e: &Expr, exps: &mut [u32]) -> bool {
            match e {
                Expr::Var(i) if *i < exps.len() => {
                    exps[*i] += 1;
                    true
                }
                Expr::Pow(base, n) => match **base {
                    Expr::Var(i) if i < exps.len() => {
                        exps[i] += n;
                        true
                    }
                    _ => false,
                },
                Expr::Bin(BinOp::Mul, a, b) => walk(a, exps) && walk(b, exps),
                _ => false,
            }
        }
        walk(den, &mut exps).then_some(exps)
    }

    /// Copy with every factor replaced by `kind`.
    pub fn with_all_factors(&self, kind: FactorKind) -> Self {
        let mut s = self.clone();
        for f in &mut s.factors {
            f.kind = kind;
        }
        s
    }
}

const BUILTIN_SOURCES: [(&str, &str); 22] = [
    ("LOSS_S42", include_str!("../../specs/LOSS_S42.spec")),
    ("LOSS_M1", include_str!("../../specs/LOSS_M1.spec")),
    ("LOSS_M2", include_str!("../../specs/LOSS_M2.spec")),
    ("LOSS_M3", include_str!("../../specs/LOSS_M3.spec")),
    ("LOSS_M4", include_str!("../../specs/LOSS_M4.spec")),
    ("LOSS_M5", include_str!("../../specs/LOSS_M5.spec")),
    ("LOSS_M6", include_str!("../../specs/LOSS_M6.spec")),
    ("LOSS_M7", include_str!("../../specs/LOSS_M7.spec")),
    ("LOSS_N01", include_str!("../../specs/LOSS_N01.spec")),
    ("LOSS_N02", include_str!("../../specs/LOSS_N02.spec")),
    ("LOSS_N03", include_str!("../../specs/LOSS_N03.spec")),
    ("LOSS_N04", include_str!("../../specs/LOSS_N04.spec")),
    ("LOSS_N05", include_str!("../../specs/LOSS_N05.spec")),
    ("LOSS_N06", include_str!("../../specs/LOSS_N06.spec")),
    ("LOSS_N07", include_str!("../../specs/LOSS_N07.spec")),
    ("LOSS_N08", include_str!("../../specs/LOSS_N08.spec")),
    ("LOSS_N09", include_str!("../../specs/LOSS_N09.spec")),
    ("LOSS_N10", include_str!("../../specs/LOSS_N10.spec")),
    ("LOSS_N11", include_str!("../../specs/LOSS_N11.spec")),
    ("LOSS_N12", include_str!("../../specs/LOSS_N12.spec")),
    ("LOSS_N13", include_str!("../../specs/LOSS_N13.spec")),
    ("LOSS_N14", include_str!("../../specs/LOSS_N14.spec")),
];

/// Names of the built-in integrals in report order.
pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN_SOURCES.iter().map(|(n, _)| *n)
}

/// Source text of a built-in spec.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTIN_SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// The 22 loss integrals, parsed from the embedded spec files.
pub fn builtin_specs() -> Vec<IntegralSpec> {
    BUILTIN_SOURCES
        .iter()
        .map(|(name, src)| {
            let spec = parse(src).unwrap_or_else(|e| panic!("built-in spec {name}: {e}"));
            assert_eq!(spec.name, *name, "built-in spec file name mismatch");
            spec
        })
        .collect()
}

/// Loads `<dir>/<NAME>.spec` for every built-in name.
pub fn load_specs_from_dir(dir: &Path) -> Result<Vec<IntegralSpec>, DslError> {
    builtin_names()
        .map(|name| {
            let path = dir.join(format!("{name}.spec"));
            let src = std::fs::read_to_string(&path).map_err(|e| DslError::Io {
                path: path.display().to_string(),
                msg: e.to_string(),
            })?;
            let spec = parse(&src)?;
            if spec.name != name {
                return Err(DslError::Io {
                    path: path.display().to_string(),
                    msg: format!("file declares integral {}, expected {name}", spec.name),
                });
            }
            Ok(spec)
        })
        .collect()
}
