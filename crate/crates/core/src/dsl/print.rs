use std::fmt::Write;

use super::ast::{BinOp, Expr, Sketch};
use super::vocab::Vocabulary;

// Binding strength of the surface forms. `if`/`match` only appear bare in
// expression position and get parenthesised anywhere tighter.
const PREC_EXPR: u8 = 0;
const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_ATOM: u8 = 4;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::If { .. } | Expr::TokenMatch { .. } => PREC_EXPR,
        Expr::Bin {
            op: BinOp::Add | BinOp::Sub,
            ..
        } => PREC_ADD,
        Expr::Bin { op: BinOp::Mul, .. } => PREC_MUL,
        Expr::Neg(_) => PREC_UNARY,
        Expr::Const(c) if c.is_sign_negative() => PREC_UNARY,
        _ => PREC_ATOM,
    }
}

/// Formats a float so the lexer reads back the identical value.
pub(crate) fn fmt_number(c: f64) -> String {
    let a = c.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{c}")
    } else {
        format!("{c:?}")
    }
}

struct Printer<'a> {
    vocab: &'a Vocabulary,
    out: String,
}

impl Printer<'_> {
    fn newline(&mut self, indent: usize) {
        self.out.push('\n');
        for _ in 0..indent {
            self.out.push_str("  ");
        }
    }

    fn expr(&mut self, e: &Expr, min_prec: u8, indent: usize) {
        let wrap = prec(e) < min_prec;
        if wrap {
            self.out.push('(');
        }
        match e {
            Expr::Const(c) => self.out.push_str(&fmt_number(*c)),
            Expr::Hole(id) => {
                let _ = write!(self.out, "?{id}");
            }
            Expr::StepIndex => self.out.push_str("step"),
            Expr::Len => self.out.push_str("len"),
            Expr::Count { token, inclusive } => {
                let kw = if *inclusive {
                    "count_inclusive"
                } else {
                    "count"
                };
                let _ = write!(self.out, "{kw}({})", self.vocab.name(*token));
            }
            Expr::Neg(inner) => {
                self.out.push('-');
                // `-3` would read back as a negative literal, not a negation.
                if matches!(**inner, Expr::Const(_)) {
                    self.out.push('(');
                    self.expr(inner, PREC_EXPR, indent);
                    self.out.push(')');
                } else {
                    self.expr(inner, PREC_UNARY, indent);
                }
            }
            Expr::Bin { op, lhs, rhs } => {
                let (lp, rp) = match op {
                    BinOp::Add | BinOp::Sub => (PREC_ADD, PREC_MUL),
                    BinOp::Mul => (PREC_MUL, PREC_UNARY),
                };
                self.expr(lhs, lp, indent);
                let _ = write!(self.out, " {} ", op.symbol());
                self.expr(rhs, rp, indent);
            }
            Expr::If { guard, then, els } => {
                self.out.push_str("if ");
                self.expr(&guard.lhs, PREC_ADD, indent);
                let _ = write!(self.out, " {} ", guard.op.symbol());
                self.expr(&guard.rhs, PREC_ADD, indent);
                self.out.push_str(" then ");
                self.expr(then, PREC_EXPR, indent);
                self.out.push_str(" else ");
                self.expr(els, PREC_EXPR, indent);
            }
            Expr::TokenMatch { arms, default } => {
                self.out.push_str("match token {");
                for (token, arm) in arms {
                    self.newline(indent + 1);
                    let _ = write!(self.out, "{} => ", self.vocab.name(*token));
                    self.expr(arm, PREC_EXPR, indent + 1);
                    self.out.push(',');
                }
                self.newline(indent + 1);
                self.out.push_str("_ => ");
                self.expr(default, PREC_EXPR, indent + 1);
                self.newline(indent);
                self.out.push('}');
            }
        }
        if wrap {
            self.out.push(')');
        }
    }
}

/// Renders a sketch in the surface syntax accepted by
/// [`parse_sketch`](super::parse_sketch).
pub fn print_sketch(sketch: &Sketch) -> String {
    let mut p = Printer {
        vocab: sketch.vocabulary(),
        out: String::from("fn(traj) {"),
    };
    p.newline(1);
    p.expr(sketch.body(), PREC_EXPR, 1);
    p.newline(0);
    p.out.push_str("}\n");
    p.out
}

impl std::fmt::Display for Sketch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&print_sketch(self))
    }
}
