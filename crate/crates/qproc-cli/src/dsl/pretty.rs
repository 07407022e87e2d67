//! Canonical text form for parsed models.
//!
//! One statement per line, single spaces, and only the parentheses that
//! precedence requires, so printing and reparsing is the identity on the
//! abstract form.

use std::fmt::Write;

use super::ast::{BinOp, BoolExpr, CmpOp, DeltaTerm, Expr, ModelSpec, Sign, SiteExpr};

/// Renders a model in the canonical statement-per-line form.
pub fn pretty_print(spec: &ModelSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", spec.name);
    let _ = writeln!(out, "dim {}", spec.dimension);
    for (name, value) in &spec.params {
        let _ = writeln!(out, "param {name} = {value}");
    }
    for family in &spec.families {
        out.push_str("trans");
        match family.site_vars.as_slice() {
            [] => {}
            [u] => {
                let _ = write!(out, " for {u} in sites");
            }
            vars => {
                let _ = write!(out, " for {} in sites, {} in sites", vars[0], vars[1]);
            }
        }
        if let Some(guard) = &family.guard {
            let _ = write!(out, " where {}", bool_string(guard));
        }
        out.push_str(": delta");
        for term in &family.delta {
            let _ = write!(out, " {}", delta_string(term));
        }
        let _ = writeln!(out, " rate {}", expr_string(&family.rate));
    }
    out
}

fn delta_string(term: &DeltaTerm) -> String {
    let sign = match term.0 {
        Sign::Plus => '+',
        Sign::Minus => '-',
    };
    format!("{sign}e({})", site_string(&term.1))
}

fn site_string(site: &SiteExpr) -> String {
    match site {
        SiteExpr::Var(name) => name.clone(),
        SiteExpr::Literal(k) => k.to_string(),
    }
}

fn bool_string(guard: &BoolExpr) -> String {
    match guard {
        BoolExpr::Cmp(op, lhs, rhs) => {
            let op = match op {
                CmpOp::Eq => "==",
                CmpOp::Ne => "!=",
                CmpOp::Lt => "<",
                CmpOp::Le => "<=",
                CmpOp::Gt => ">",
                CmpOp::Ge => ">=",
            };
            format!("{} {op} {}", expr_string(lhs), expr_string(rhs))
        }
        BoolExpr::And(lhs, rhs) => format!("{} and {}", bool_string(lhs), bool_string(rhs)),
        BoolExpr::Or(lhs, rhs) => format!("{} or {}", bool_string(lhs), bool_string(rhs)),
    }
}

/// Renders an expression with minimal parentheses.
pub(crate) fn expr_string(expr: &Expr) -> String {
    render(expr, 0)
}

fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Bin(BinOp::Add | BinOp::Sub, _, _) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, _, _) => 2,
        Expr::Neg(_) => 3,
        Expr::Bin(BinOp::Pow, _, _) => 4,
        _ => 6,
    }
}

fn render(expr: &Expr, min_prec: u8) -> String {
    if precedence(expr) < min_prec {
        return format!("({})", render(expr, 0));
    }
    match expr {
        Expr::Number(v) => v.to_string(),
        Expr::Param(name) | Expr::Site(name) => name.clone(),
        Expr::Coord(site) => format!("x({})", site_string(site)),
        Expr::Dim => "dim".into(),
        Expr::Uniform => "uniform".into(),
        Expr::Level => "level".into(),
        Expr::Neg(inner) => format!("-{}", render(inner, 3)),
        Expr::Bin(op, lhs, rhs) => {
            let (symbol, left, right) = match op {
                BinOp::Add => ("+", 1, 2),
                BinOp::Sub => ("-", 1, 2),
                BinOp::Mul => ("*", 2, 3),
                BinOp::Div => ("/", 2, 3),
                BinOp::Pow => ("^", 5, 3),
            };
            format!("{} {symbol} {}", render(lhs, left), render(rhs, right))
        }
    }
}
