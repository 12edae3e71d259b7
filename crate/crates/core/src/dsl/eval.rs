use std::sync::Arc;

use super::ast::{Expr, Sketch};
use super::vocab::Token;
use super::DslError;
use crate::trajectory::Trajectory;

/// Values for the holes `?1..?n`, all finite.
#[derive(Clone, Debug, PartialEq)]
pub struct HoleAssignment(Vec<f64>);

impl HoleAssignment {
    pub fn new(values: Vec<f64>) -> Result<Self, DslError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(DslError::NonFiniteHole(i + 1));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-step evaluation context: the step index, its token and the number of
/// times each token occurred strictly before it.
pub(crate) struct StepCtx<'a> {
    pub t: usize,
    pub token: Token,
    pub counts_before: &'a [u32],
}

impl StepCtx<'_> {
    pub fn count(&self, token: Token, inclusive: bool) -> f64 {
        let c = self.counts_before[token.index()] + u32::from(inclusive && token == self.token);
        c as f64
    }
}

/// Walks the token stream, handing each step's context to `f`.
pub(crate) fn for_each_step(n_tokens: usize, tokens: &[Token], mut f: impl FnMut(&StepCtx<'_>)) {
    let mut counts = vec![0u32; n_tokens];
    for (t, &token) in tokens.iter().enumerate() {
        f(&StepCtx {
            t,
            token,
            counts_before: &counts,
        });
        counts[token.index()] += 1;
    }
}

pub(crate) fn eval_expr(e: &Expr, holes: &[f64], ctx: &StepCtx<'_>) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Hole(id) => holes[id - 1],
        Expr::TokenMatch { arms, default } => {
            let arm = arms
                .iter()
                .find(|(t, _)| *t == ctx.token)
                .map_or(&**default, |(_, e)| e);
            eval_expr(arm, holes, ctx)
        }
        Expr::If { guard, then, els } => {
            let l = eval_expr(&guard.lhs, holes, ctx);
            let r = eval_expr(&guard.rhs, holes, ctx);
            if guard.op.holds(l, r) {
                eval_expr(then, holes, ctx)
            } else {
                eval_expr(els, holes, ctx)
            }
        }
        Expr::Neg(inner) => -eval_expr(inner, holes, ctx),
        Expr::Bin { op, lhs, rhs } => {
            let l = eval_expr(lhs, holes, ctx);
            let r = eval_expr(rhs, holes, ctx);
            op.apply(l, r)
        }
        Expr::Count { token, inclusive } => ctx.count(*token, *inclusive),
        Expr::StepIndex => ctx.t as f64,
        Expr::Len => (ctx.t + 1) as f64,
    }
}

impl Sketch {
    fn check_assignment(&self, holes: &[f64]) -> Result<(), DslError> {
        if holes.len() != self.n_holes() {
            return Err(DslError::AssignmentLength {
                expected: self.n_holes(),
                found: holes.len(),
            });
        }
        Ok(())
    }

    /// Per-step rewards over a bare token stream.
    pub fn eval_tokens(&self, holes: &[f64], tokens: &[Token]) -> Result<Vec<f64>, DslError> {
        self.check_assignment(holes)?;
        let mut out = Vec::with_capacity(tokens.len());
        for_each_step(self.vocabulary().len(), tokens, |ctx| {
            out.push(eval_expr(self.body(), holes, ctx));
        });
        Ok(out)
    }

    /// The complete program `e[h/?]`, a sketch without holes.
    pub fn substitute(&self, holes: &[f64]) -> Result<Sketch, DslError> {
        self.check_assignment(holes)?;
        HoleAssignment::new(holes.to_vec())?;
        Sketch::new(self.body().substitute(holes), Arc::clone(self.vocabulary()))
    }
}

/// Per-step rewards of the sketch completed with `h` on `tau`; the output
/// has one entry per step.
pub fn eval_program(sketch: &Sketch, h: &[f64], tau: &Trajectory) -> Result<Vec<f64>, DslError> {
    sketch.eval_tokens(h, tau.tokens())
}

/// `l(tau)`: the sum of the per-step rewards.
pub fn total_reward(sketch: &Sketch, h: &[f64], tau: &Trajectory) -> Result<f64, DslError> {
    Ok(eval_program(sketch, h, tau)?.iter().sum())
}

/// A sketch together with a hole assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Program {
    sketch: Sketch,
    holes: HoleAssignment,
}

impl Program {
    pub fn new(sketch: Sketch, holes: HoleAssignment) -> Result<Self, DslError> {
        sketch.check_assignment(holes.values())?;
        Ok(Self { sketch, holes })
    }

    pub fn sketch(&self) -> &Sketch {
        &self.sketch
    }

    pub fn holes(&self) -> &HoleAssignment {
        &self.holes
    }

    pub fn rewards(&self, tokens: &[Token]) -> Vec<f64> {
        self.sketch
            .eval_tokens(self.holes.values(), tokens)
            .expect("assignment length checked at construction")
    }

    pub fn total(&self, tokens: &[Token]) -> f64 {
        self.rewards(tokens).iter().sum()
    }

    /// The hole-free program text.
    pub fn complete(&self) -> Sketch {
        self.sketch
            .substitute(self.holes.values())
            .expect("assignment checked at construction")
    }
}
