use std::sync::Arc;

use super::vocab::{Token, Vocabulary};
use super::DslError;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn apply(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            BinOp::Add => lhs + rhs,
            BinOp::Sub => lhs - rhs,
            BinOp::Mul => lhs * rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }
}

/// Guard comparison. Every comparison is closed on its stated side and `==`
/// is exact equality.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

impl CmpOp {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Le => lhs <= rhs,
            CmpOp::Lt => lhs < rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Eq => lhs == rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
            CmpOp::Eq => "==",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Guard {
    pub op: CmpOp,
    pub lhs: Box<Expr>,
    pub rhs: Box<Expr>,
}

/// Reward expression evaluated once per trajectory step.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    /// 1-based hole id.
    Hole(usize),
    /// Selects an arm by the current step's token. Arms keep source order.
    TokenMatch {
        arms: Vec<(Token, Expr)>,
        default: Box<Expr>,
    },
    If {
        guard: Guard,
        then: Box<Expr>,
        els: Box<Expr>,
    },
    Neg(Box<Expr>),
    Bin {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    /// Occurrences of `token` before the current step, or up to and
    /// including it when `inclusive`.
    Count {
        token: Token,
        inclusive: bool,
    },
    StepIndex,
    Len,
}

impl Expr {
    pub fn bin(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Bin {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn if_then_else(op: CmpOp, lhs: Expr, rhs: Expr, then: Expr, els: Expr) -> Expr {
        Expr::If {
            guard: Guard {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            then: Box::new(then),
            els: Box::new(els),
        }
    }

    /// Visits sub-expressions in source order (guards before branches,
    /// match arms before the default arm).
    pub fn visit_preorder<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::TokenMatch { arms, default } => {
                for (_, arm) in arms {
                    arm.visit_preorder(f);
                }
                default.visit_preorder(f);
            }
            Expr::If { guard, then, els } => {
                guard.lhs.visit_preorder(f);
                guard.rhs.visit_preorder(f);
                then.visit_preorder(f);
                els.visit_preorder(f);
            }
            Expr::Neg(e) => e.visit_preorder(f),
            Expr::Bin { lhs, rhs, .. } => {
                lhs.visit_preorder(f);
                rhs.visit_preorder(f);
            }
            Expr::Const(_) | Expr::Hole(_) | Expr::Count { .. } | Expr::StepIndex | Expr::Len => {}
        }
    }

    pub(crate) fn substitute(&self, holes: &[f64]) -> Expr {
        match self {
            Expr::Hole(id) => Expr::Const(holes[id - 1]),
            Expr::TokenMatch { arms, default } => Expr::TokenMatch {
                arms: arms
                    .iter()
                    .map(|(t, e)| (*t, e.substitute(holes)))
                    .collect(),
                default: Box::new(default.substitute(holes)),
            },
            Expr::If { guard, then, els } => Expr::If {
                guard: Guard {
                    op: guard.op,
                    lhs: Box::new(guard.lhs.substitute(holes)),
                    rhs: Box::new(guard.rhs.substitute(holes)),
                },
                then: Box::new(then.substitute(holes)),
                els: Box::new(els.substitute(holes)),
            },
            Expr::Neg(e) => Expr::Neg(Box::new(e.substitute(holes))),
            Expr::Bin { op, lhs, rhs } => {
                Expr::bin(*op, lhs.substitute(holes), rhs.substitute(holes))
            }
            other => other.clone(),
        }
    }
}

/// A reward sketch: an expression with holes `?1..?n`, bound to the token
/// vocabulary of an environment.
#[derive(Clone, Debug)]
pub struct Sketch {
    body: Expr,
    n_holes: usize,
    vocab: Arc<Vocabulary>,
}

impl PartialEq for Sketch {
    fn eq(&self, other: &Self) -> bool {
        self.body == other.body && self.n_holes == other.n_holes && *self.vocab == *other.vocab
    }
}

impl Sketch {
    /// Wraps an expression, checking that holes are numbered by first
    /// appearance and that every token belongs to `vocab`.
    pub fn new(body: Expr, vocab: Arc<Vocabulary>) -> Result<Self, DslError> {
        let mut next = 1usize;
        let mut err = None;
        body.visit_preorder(&mut |e| {
            if err.is_some() {
                return;
            }
            match e {
                Expr::Hole(id) => {
                    if *id == next {
                        next += 1;
                    } else if *id == 0 || *id > next {
                        err = Some(DslError::HoleOrder {
                            line: 0,
                            col: 0,
                            found: *id,
                            expected: next,
                        });
                    }
                }
                Expr::Count { token, .. } if token.index() >= vocab.len() => {
                    err = Some(DslError::TokenOutOfVocabulary(token.index()));
                }
                Expr::TokenMatch { arms, .. } => {
                    for (i, (t, _)) in arms.iter().enumerate() {
                        if t.index() >= vocab.len() {
                            err = Some(DslError::TokenOutOfVocabulary(t.index()));
                        } else if arms[..i].iter().any(|(u, _)| u == t) {
                            err = Some(DslError::DuplicateArm {
                                line: 0,
                                col: 0,
                                name: vocab.name(*t).to_string(),
                            });
                        }
                    }
                }
                Expr::Const(c) if !c.is_finite() => {
                    err = Some(DslError::NonFiniteConstant(*c));
                }
                _ => {}
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        Ok(Self {
            body,
            n_holes: next - 1,
            vocab,
        })
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }

    pub fn n_holes(&self) -> usize {
        self.n_holes
    }

    pub fn vocabulary(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    /// Hole ids in order of first appearance; always `1..=n`.
    pub fn holes(&self) -> Vec<usize> {
        let mut seen = Vec::new();
        self.body.visit_preorder(&mut |e| {
            if let Expr::Hole(id) = e {
                if !seen.contains(id) {
                    seen.push(*id);
                }
            }
        });
        seen
    }

    /// Tokens referenced by match arms or counts, in source order.
    pub fn referenced_tokens(&self) -> Vec<Token> {
        let mut out = Vec::new();
        self.body.visit_preorder(&mut |e| match e {
            Expr::TokenMatch { arms, .. } => {
                for (t, _) in arms {
                    if !out.contains(t) {
                        out.push(*t);
                    }
                }
            }
            Expr::Count { token, .. } if !out.contains(token) => out.push(*token),
            _ => {}
        });
        out
    }
}
