use num::rational::Ratio;

use super::{
    Atom, BinOp, Constraint, DslError, Expr, Factor, FactorKind, Group, IntegralSpec, Literal, Sign, VarDecl,
};
use crate::regions::MAX_DIM;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn tokenize(text: &str, line: usize) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                col,
            });
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Number(chars[start..i].iter().collect()),
                col,
            });
        } else if "+-*/^()[],!".contains(c) {
            out.push(Token { tok: Tok::Sym(c), col });
            i += 1;
        } else {
            return Err(DslError::Syntax {
                line,
                col,
                msg: format!("unexpected character {c:?}"),
            });
        }
    }
    Ok(out)
}

/// Exact value of a plain decimal such as `0.081234` or `17`.
pub(crate) fn parse_decimal(s: &str) -> Option<Ratio<i64>> {
    let (int, frac) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 15 {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    let denom = 10i64.checked_pow(frac.len() as u32)?;
    Some(Ratio::new(numer, denom))
}

struct Cursor<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    /// `(variable index, column)` of every variable reference parsed.
    vars: Vec<(usize, usize)>,
    eol_col: usize,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token], line: usize, eol_col: usize) -> Self {
        Cursor {
            toks,
            pos: 0,
            line,
            vars: Vec::new(),
            eol_col,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.eol_col, |t| t.col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, DslError> {
        Err(DslError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), DslError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            self.err(format!("expected '{c}'"))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, DslError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected '{kw}'")),
        }
    }

    fn finish(&self) -> Result<(), DslError> {
        if self.pos < self.toks.len() {
            return self.err("unexpected trailing input");
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat_sym('+') {
                BinOp::Add
            } else if self.eat_sym('-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat_sym('*') {
                BinOp::Mul
            } else if self.eat_sym('/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let col = self.col();
            let rhs = self.unary()?;
            lhs = match (op, &lhs, &rhs) {
                // p/q with integer literals is a rational literal.
                (BinOp::Div, Expr::Num(a), Expr::Num(b)) if a.is_integer() && b.is_integer() => {
                    if *b.numer() == 0 {
                        return Err(DslError::Syntax {
                            line: self.line,
                            col,
                            msg: "division by zero literal".into(),
                        });
                    }
                    Expr::Num(a / b)
                }
                _ => Expr::Bin(op, Box::new(lhs), Box::new(rhs)),
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.eat_sym('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.primary()?;
        if self.eat_sym('^') {
            let col = self.col();
            match self.next() {
                Some(Tok::Number(n)) => match n.parse::<u32>() {
                    Ok(k) if k <= 16 => Ok(Expr::Pow(Box::new(base), k)),
                    _ => Err(DslError::Syntax {
                        line: self.line,
                        col,
                        msg: format!("exponent must be an integer in 0..=16, got {n}"),
                    }),
                },
                _ => Err(DslError::Syntax {
                    line: self.line,
                    col,
                    msg: "expected integer exponent".into(),
                }),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        let col = self.col();
        match self.next() {
            Some(Tok::Number(n)) => match parse_decimal(&n) {
                Some(r) => Ok(Expr::Num(r)),
                None => Err(DslError::Syntax {
                    line: self.line,
                    col,
                    msg: format!("malformed number {n:?}"),
                }),
            },
            Some(Tok::Sym('(')) => {
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) if name == "min" || name == "max" => {
                self.expect_sym('(')?;
                let a = self.expr()?;
                self.expect_sym(',')?;
                let b = self.expr()?;
                self.expect_sym(')')?;
                let (a, b) = (Box::new(a), Box::new(b));
                Ok(if name == "min" { Expr::Min(a, b) } else { Expr::Max(a, b) })
            }
            Some(Tok::Ident(name)) => match var_index(&name) {
                Some(i) => {
                    self.vars.push((i, col));
                    Ok(Expr::Var(i))
                }
                None => Err(DslError::Syntax {
                    line: self.line,
                    col,
                    msg: format!("unknown identifier {name:?}"),
                }),
            },
            Some(Tok::Sym(c)) => Err(DslError::Syntax {
                line: self.line,
                col,
                msg: format!("unexpected '{c}'"),
            }),
            None => Err(DslError::Syntax {
                line: self.line,
                col,
                msg: "unexpected end of line".into(),
            }),
        }
    }

    fn literal(&mut self) -> Result<(Literal, usize), DslError> {
        let negated = self.eat_sym('!');
        let col = self.col();
        let name = self.ident("region name")?;
        let atom = Atom::parse_keyword(&name).ok_or(DslError::Syntax {
            line: self.line,
            col,
            msg: format!("unknown region {name:?}"),
        })?;
        self.expect_sym('(')?;
        let mut args = vec![self.expr()?];
        while self.eat_sym(',') {
            args.push(self.expr()?);
        }
        self.expect_sym(')')?;
        let arity = atom.arity();
        if !arity.contains(&args.len()) {
            let expected = if arity.start() == arity.end() {
                arity.start().to_string()
            } else {
                format!("{} to {}", arity.start(), arity.end())
            };
            return Err(DslError::Arity {
                line: self.line,
                atom: name,
                expected,
                got: args.len(),
            });
        }
        Ok((Literal { negated, atom, args }, col))
    }

    /// Rejects references to variables at or beyond `bound`.
    fn check_vars(&self, bound: usize) -> Result<(), DslError> {
        match self.vars.iter().find(|(v, _)| *v >= bound) {
            Some(&(v, col)) => Err(DslError::ForwardReference {
                line: self.line,
                col,
                var: v + 1,
            }),
            None => Ok(()),
        }
    }
}

fn var_index(name: &str) -> Option<usize> {
    let k: usize = name.strip_prefix('t')?.parse().ok()?;
    (1..=MAX_DIM).contains(&k).then(|| k - 1)
}

/// Parses a standalone expression (used by tests and the CLI).
pub fn parse_expr(src: &str) -> Result<Expr, DslError> {
    let toks = tokenize(src, 1)?;
    let mut c = Cursor::new(&toks, 1, src.chars().count() + 1);
    let e = c.expr()?;
    c.finish()?;
    Ok(e)
}

struct Header {
    name: String,
    group: Group,
    sign: Sign,
    paper_value: Ratio<i64>,
}

fn parse_header(c: &mut Cursor) -> Result<Header, DslError> {
    c.keyword("integral")?;
    let name = c.ident("integral name")?;
    c.keyword("group")?;
    let col = c.col();
    let g = c.ident("group name")?;
    let group = g.parse().map_err(|_| DslError::Syntax {
        line: c.line,
        col,
        msg: format!("unknown group {g:?} (expected S42, M, N0 or N1)"),
    })?;
    c.keyword("sign")?;
    let sign = if c.eat_sym('+') {
        Sign::Plus
    } else if c.eat_sym('-') {
        Sign::Minus
    } else {
        return c.err("expected '+' or '-'");
    };
    c.keyword("paper")?;
    let col = c.col();
    let paper_value = match c.next() {
        Some(Tok::Number(n)) => parse_decimal(&n),
        _ => None,
    }
    .ok_or(DslError::Syntax {
        line: c.line,
        col,
        msg: "expected a nonnegative decimal paper value".into(),
    })?;
    c.finish()?;
    Ok(Header {
        name,
        group,
        sign,
        paper_value,
    })
}

/// Parses one spec file.
pub fn parse(source: &str) -> Result<IntegralSpec, DslError> {
    let mut header: Option<Header> = None;
    let mut vars: Vec<VarDecl> = Vec::new();
    let mut constraints = Vec::new();
    let mut factors = Vec::new();
    let mut measure: Option<Expr> = None;
    let mut ended = false;
    // Deferred until the dimension is known: (line, first offending reference).
    let mut body_refs: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let text = raw.split('#').next().unwrap_or("");
        let toks = tokenize(text, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor::new(&toks, line, text.chars().count() + 1);
        if ended {
            return c.err("content after 'end'");
        }
        if header.is_none() {
            header = Some(parse_header(&mut c)?);
            continue;
        }
        let kw_col = c.col();
        let kw = c.ident("a keyword")?;
        match kw.as_str() {
            "var" => {
                if !factors.is_empty() || measure.is_some() {
                    return Err(DslError::Syntax {
                        line,
                        col: kw_col,
                        msg: "variables must be declared before factors and measure".into(),
                    });
                }
                let col = c.col();
                let name = c.ident("variable name")?;
                let expected = vars.len();
                match var_index(&name) {
                    Some(i) if i == expected => {}
                    _ => {
                        return Err(DslError::Syntax {
                            line,
                            col,
                            msg: format!("expected variable t{}, got {name:?}", expected + 1),
                        })
                    }
                }
                c.keyword("in")?;
                c.expect_sym('[')?;
                let lower = c.expr()?;
                c.expect_sym(',')?;
                let upper = c.expr()?;
                c.expect_sym(']')?;
                c.finish()?;
                c.check_vars(expected)?;
                vars.push(VarDecl { lower, upper });
            }
            "require" => {
                let mut any_of = vec![c.literal()?.0];
                while matches!(c.peek(), Some(Tok::Ident(s)) if s == "or") {
                    c.pos += 1;
                    any_of.push(c.literal()?.0);
                }
                c.finish()?;
                c.check_vars(vars.len())?;
                constraints.push(Constraint {
                    any_of,
                    declared_after: vars.len(),
                });
            }
            "factor" => {
                let col = c.col();
                let k = c.ident("factor kind")?;
                let kind = FactorKind::ALL
                    .into_iter()
                    .find(|f| f.keyword() == k)
                    .ok_or(DslError::Syntax {
                        line,
                        col,
                        msg: format!("unknown factor kind {k:?}"),
                    })?;
                let arg = c.expr()?;
                c.finish()?;
                body_refs.push((line, std::mem::take(&mut c.vars)));
                let (num, den) = match arg {
                    Expr::Bin(BinOp::Div, a, b) => (*a, Some(*b)),
                    other => (other, None),
                };
                factors.push(Factor { kind, num, den });
            }
            "measure" => {
                if measure.is_some() {
                    return Err(DslError::Syntax {
                        line,
                        col: kw_col,
                        msg: "duplicate measure".into(),
                    });
                }
                let e = c.expr()?;
                c.finish()?;
                body_refs.push((line, std::mem::take(&mut c.vars)));
                measure = Some(e);
            }
            "end" => {
                c.finish()?;
                ended = true;
            }
            other => {
                return Err(DslError::Syntax {
                    line,
                    col: kw_col,
                    msg: format!("unknown keyword {other:?}"),
                })
            }
        }
    }

    let eof = |msg: &str| DslError::Syntax {
        line: last_line.max(1),
        col: 1,
        msg: msg.into(),
    };
    let header = header.ok_or_else(|| eof("missing 'integral' header"))?;
    if !ended {
        return Err(eof("missing 'end'"));
    }
    if vars.is_empty() {
        return Err(eof("no variables declared"));
    }
    let measure = measure.ok_or_else(|| eof("missing 'measure'"))?;
    for (line, refs) in body_refs {
        if let Some(&(v, col)) = refs.iter().find(|(v, _)| *v >= vars.len()) {
            return Err(DslError::ForwardReference { line, col, var: v + 1 });
        }
    }
    Ok(IntegralSpec {
        name: header.name,
        group: header.group,
        sign: header.sign,
        paper_value: header.paper_value,
        vars,
        constraints,
        factors,
        measure,
    })
}
