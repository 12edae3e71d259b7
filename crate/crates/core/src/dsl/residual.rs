//! Partial evaluation of a sketch against a fixed trajectory. Everything
//! that depends only on the trajectory (token matching, counts, step
//! indices) is folded away, leaving per-step expressions over the holes.

use super::ast::{BinOp, CmpOp, Expr, Sketch};
use super::eval::{for_each_step, StepCtx};
use super::DslError;
use crate::trajectory::Trajectory;

/// A hole-only expression. Applying it performs the same floating-point
/// operations in the same order as full evaluation, so results match
/// bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub enum Residual {
    Const(f64),
    Hole(usize),
    Neg(Box<Residual>),
    Bin {
        op: BinOp,
        lhs: Box<Residual>,
        rhs: Box<Residual>,
    },
    Cond {
        op: CmpOp,
        lhs: Box<Residual>,
        rhs: Box<Residual>,
        then: Box<Residual>,
        els: Box<Residual>,
    },
}

/// `coeffs . h + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Affine {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl Affine {
    pub fn constant(n: usize, c: f64) -> Self {
        Self {
            coeffs: vec![0.0; n],
            offset: c,
        }
    }

    pub fn eval(&self, h: &[f64]) -> f64 {
        self.coeffs.iter().zip(h).map(|(c, x)| c * x).sum::<f64>() + self.offset
    }

    fn scale(mut self, k: f64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c *= k);
        self.offset *= k;
        self
    }

    fn add(mut self, other: &Affine, sign: f64) -> Self {
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += sign * o;
        }
        self.offset += sign * other.offset;
        self
    }

    fn as_const(&self) -> Option<f64> {
        self.coeffs.iter().all(|c| *c == 0.0).then_some(self.offset)
    }
}

impl Residual {
    pub fn apply(&self, h: &[f64]) -> f64 {
        match self {
            Residual::Const(c) => *c,
            Residual::Hole(id) => h[id - 1],
            Residual::Neg(e) => -e.apply(h),
            Residual::Bin { op, lhs, rhs } => {
                let l = lhs.apply(h);
                let r = rhs.apply(h);
                op.apply(l, r)
            }
            Residual::Cond {
                op,
                lhs,
                rhs,
                then,
                els,
            } => {
                let l = lhs.apply(h);
                let r = rhs.apply(h);
                if op.holds(l, r) {
                    then.apply(h)
                } else {
                    els.apply(h)
                }
            }
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Residual::Const(_))
    }

    /// Affine view over `n` holes, or `None` when the residual branches on
    /// the holes or multiplies two of them.
    pub fn as_affine(&self, n: usize) -> Option<Affine> {
        match self {
            Residual::Const(c) => Some(Affine::constant(n, *c)),
            Residual::Hole(id) => {
                let mut a = Affine::constant(n, 0.0);
                a.coeffs[id - 1] = 1.0;
                Some(a)
            }
            Residual::Neg(e) => Some(e.as_affine(n)?.scale(-1.0)),
            Residual::Bin { op, lhs, rhs } => {
                let l = lhs.as_affine(n)?;
                let r = rhs.as_affine(n)?;
                match op {
                    BinOp::Add => Some(l.add(&r, 1.0)),
                    BinOp::Sub => Some(l.add(&r, -1.0)),
                    BinOp::Mul => match (l.as_const(), r.as_const()) {
                        (Some(k), _) => Some(r.scale(k)),
                        (_, Some(k)) => Some(l.scale(k)),
                        _ => None,
                    },
                }
            }
            Residual::Cond { .. } => None,
        }
    }

    /// Hole ids referenced anywhere in the residual.
    pub fn holes(&self, out: &mut Vec<usize>) {
        match self {
            Residual::Const(_) => {}
            Residual::Hole(id) => {
                if !out.contains(id) {
                    out.push(*id);
                }
            }
            Residual::Neg(e) => e.holes(out),
            Residual::Bin { lhs, rhs, .. } => {
                lhs.holes(out);
                rhs.holes(out);
            }
            Residual::Cond {
                lhs,
                rhs,
                then,
                els,
                ..
            } => {
                lhs.holes(out);
                rhs.holes(out);
                then.holes(out);
                els.holes(out);
            }
        }
    }
}

fn fold(e: &Expr, ctx: &StepCtx<'_>) -> Residual {
    match e {
        Expr::Const(c) => Residual::Const(*c),
        Expr::Hole(id) => Residual::Hole(*id),
        Expr::Count { token, inclusive } => Residual::Const(ctx.count(*token, *inclusive)),
        Expr::StepIndex => Residual::Const(ctx.t as f64),
        Expr::Len => Residual::Const((ctx.t + 1) as f64),
        Expr::TokenMatch { arms, default } => {
            let arm = arms
                .iter()
                .find(|(t, _)| *t == ctx.token)
                .map_or(&**default, |(_, e)| e);
            fold(arm, ctx)
        }
        Expr::Neg(inner) => match fold(inner, ctx) {
            Residual::Const(c) => Residual::Const(-c),
            r => Residual::Neg(Box::new(r)),
        },
        Expr::Bin { op, lhs, rhs } => match (fold(lhs, ctx), fold(rhs, ctx)) {
            (Residual::Const(a), Residual::Const(b)) => Residual::Const(op.apply(a, b)),
            (l, r) => Residual::Bin {
                op: *op,
                lhs: Box::new(l),
                rhs: Box::new(r),
            },
        },
        Expr::If { guard, then, els } => match (fold(&guard.lhs, ctx), fold(&guard.rhs, ctx)) {
            (Residual::Const(a), Residual::Const(b)) => {
                if guard.op.holds(a, b) {
                    fold(then, ctx)
                } else {
                    fold(els, ctx)
                }
            }
            (l, r) => Residual::Cond {
                op: guard.op,
                lhs: Box::new(l),
                rhs: Box::new(r),
                then: Box::new(fold(then, ctx)),
                els: Box::new(fold(els, ctx)),
            },
        },
    }
}

/// One residual per trajectory step.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualProgram {
    n_holes: usize,
    per_step: Vec<Residual>,
}

impl ResidualProgram {
    pub fn n_holes(&self) -> usize {
        self.n_holes
    }

    pub fn per_step(&self) -> &[Residual] {
        &self.per_step
    }

    pub fn len(&self) -> usize {
        self.per_step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_step.is_empty()
    }

    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>, DslError> {
        if h.len() != self.n_holes {
            return Err(DslError::AssignmentLength {
                expected: self.n_holes,
                found: h.len(),
            });
        }
        Ok(self.per_step.iter().map(|r| r.apply(h)).collect())
    }

    /// Sum of the per-step values. Panics if `h` has the wrong length.
    pub fn total(&self, h: &[f64]) -> f64 {
        assert_eq!(h.len(), self.n_holes, "hole assignment length");
        self.per_step.iter().map(|r| r.apply(h)).sum()
    }
}

/// Folds every hole-independent part of `sketch` on `tau`.
pub fn partial_eval(sketch: &Sketch, tau: &Trajectory) -> ResidualProgram {
    partial_eval_tokens(sketch, tau.tokens())
}

impl Sketch {
    pub fn partial_eval_tokens(&self, tokens: &[super::Token]) -> ResidualProgram {
        partial_eval_tokens(self, tokens)
    }
}

fn partial_eval_tokens(sketch: &Sketch, tokens: &[super::Token]) -> ResidualProgram {
    let mut per_step = Vec::with_capacity(tokens.len());
    for_each_step(sketch.vocabulary().len(), tokens, |ctx| {
        per_step.push(fold(sketch.body(), ctx));
    });
    ResidualProgram {
        n_holes: sketch.n_holes(),
        per_step,
    }
}
