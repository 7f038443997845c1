use std::fmt::Write;

use num::rational::Ratio;
use num::Zero;

use super::{BinOp, Expr, IntegralSpec, Literal};

// Binding strength: sums 1, products and p/q literals 2, unary minus 3, powers 4.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Num(r) if !r.is_integer() => 2,
        Expr::Num(_) | Expr::Var(_) | Expr::Min(..) | Expr::Max(..) => 5,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Pow(..) => 4,
    }
}

fn write_operand(out: &mut String, e: &Expr, min_prec: u8) {
    if precedence(e) < min_prec {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Num(r) => {
            if r.is_integer() {
                write!(out, "{}", r.numer()).unwrap();
            } else {
                write!(out, "{}/{}", r.numer(), r.denom()).unwrap();
            }
        }
        Expr::Var(i) => write!(out, "t{}", i + 1).unwrap(),
        Expr::Neg(a) => {
            out.push('-');
            write_operand(out, a, 3);
        }
        Expr::Bin(op, a, b) => {
            let p = precedence(e);
            write_operand(out, a, p);
            write!(out, " {} ", op.symbol()).unwrap();
            write_operand(out, b, p + 1);
        }
        Expr::Pow(a, n) => {
            write_operand(out, a, 5);
            write!(out, "^{n}").unwrap();
        }
        Expr::Min(a, b) | Expr::Max(a, b) => {
            out.push_str(if matches!(e, Expr::Min(..)) { "min(" } else { "max(" });
            write_expr(out, a);
            out.push_str(", ");
            write_expr(out, b);
            out.push(')');
        }
    }
}

/// Canonical text of an expression.
pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

/// Terminating decimal expansion; the parser only produces such values.
fn decimal(r: Ratio<i64>) -> String {
    let mut out = r.to_integer().to_string();
    let mut rem = r.fract();
    if rem.is_zero() {
        return out;
    }
    out.push('.');
    for _ in 0..18 {
        rem *= Ratio::from_integer(10);
        let digit = rem.to_integer();
        write!(out, "{digit}").unwrap();
        rem = rem.fract();
        if rem.is_zero() {
            break;
        }
    }
    out
}

fn write_literal(out: &mut String, lit: &Literal) {
    if lit.negated {
        out.push('!');
    }
    out.push_str(lit.atom.keyword());
    out.push('(');
    for (i, a) in lit.args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, a);
    }
    out.push(')');
}

/// Canonical text of a spec; `parse(print(s)) == s`.
pub fn print(spec: &IntegralSpec) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "integral {} group {} sign {} paper {}",
        spec.name,
        spec.group,
        spec.sign.symbol(),
        decimal(spec.paper_value)
    )
    .unwrap();
    let mut constraints = spec.constraints.iter().peekable();
    for k in 0..=spec.vars.len() {
        while let Some(c) = constraints.next_if(|c| c.declared_after == k) {
            out.push_str("  require ");
            for (i, lit) in c.any_of.iter().enumerate() {
                if i > 0 {
                    out.push_str(" or ");
                }
                write_literal(&mut out, lit);
            }
            out.push('\n');
        }
        if let Some(v) = spec.vars.get(k) {
            writeln!(out, "  var t{} in [{}, {}]", k + 1, print_expr(&v.lower), print_expr(&v.upper)).unwrap();
        }
    }
    for f in &spec.factors {
        writeln!(out, "  factor {} ({})", f.kind.keyword(), print_expr(&f.argument())).unwrap();
    }
    writeln!(out, "  measure {}", print_expr(&spec.measure)).unwrap();
    out.push_str("end\n");
    out
}
