//! Random sketches, trajectories and constraints for property tests.
#![allow(dead_code)]

use proptest::prelude::*;

use sketchreward::constraint::{Atom, Constraint};
use sketchreward::dsl::{BinOp, CmpOp, Expr, Sketch, Token};
use sketchreward::trajectory::Trajectory;

const N_TOKENS: usize = 3;
const MAX_HOLES: usize = 4;

fn token(i: usize) -> Token {
    super::vocab_abc().lookup(["a", "b", "c"][i]).unwrap()
}

pub fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        // integers often, so that `==` guards against counts can fire
        (-3i32..4).prop_map(|c| Expr::Const(c as f64)),
        (-3.0f64..3.0).prop_map(Expr::Const),
        (1..=MAX_HOLES).prop_map(Expr::Hole),
        (0..N_TOKENS, any::<bool>()).prop_map(|(t, inclusive)| Expr::Count {
            token: token(t),
            inclusive
        }),
        Just(Expr::StepIndex),
        Just(Expr::Len),
    ]
}

pub fn cmp() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Le),
        Just(CmpOp::Lt),
        Just(CmpOp::Ge),
        Just(CmpOp::Gt),
        Just(CmpOp::Eq)
    ]
}

pub fn binop() -> impl Strategy<Value = BinOp> {
    prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)]
}

pub fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 40, 4, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (binop(), inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::bin(op, a, b)),
            (
                cmp(),
                inner.clone(),
                inner.clone(),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r, t, e)| Expr::if_then_else(op, l, r, t, e)),
            (
                proptest::sample::subsequence((0..N_TOKENS).collect::<Vec<_>>(), 0..=N_TOKENS),
                proptest::collection::vec(inner.clone(), N_TOKENS),
                inner
            )
                .prop_map(|(ts, bodies, default)| Expr::TokenMatch {
                    arms: ts
                        .into_iter()
                        .zip(bodies)
                        .map(|(t, b)| (token(t), b))
                        .collect(),
                    default: Box::new(default),
                }),
        ]
    })
}

/// Renames holes to `1..=n` by first appearance, the numbering sketches
/// require.
fn renumber(e: &mut Expr, map: &mut Vec<usize>) {
    match e {
        Expr::Hole(id) => {
            let pos = match map.iter().position(|x| x == id) {
                Some(p) => p,
                None => {
                    map.push(*id);
                    map.len() - 1
                }
            };
            *id = pos + 1;
        }
        Expr::TokenMatch { arms, default } => {
            for (_, a) in arms {
                renumber(a, map);
            }
            renumber(default, map);
        }
        Expr::If { guard, then, els } => {
            renumber(&mut guard.lhs, map);
            renumber(&mut guard.rhs, map);
            renumber(then, map);
            renumber(els, map);
        }
        Expr::Neg(x) => renumber(x, map),
        Expr::Bin { lhs, rhs, .. } => {
            renumber(lhs, map);
            renumber(rhs, map);
        }
        _ => {}
    }
}

pub fn sketch() -> impl Strategy<Value = Sketch> {
    expr().prop_map(|mut e| {
        renumber(&mut e, &mut Vec::new());
        Sketch::new(e, super::vocab_abc()).unwrap()
    })
}

pub fn hole_value() -> impl Strategy<Value = f64> {
    prop_oneof![(-3i32..4).prop_map(f64::from), -3.0f64..3.0]
}

pub fn case() -> impl Strategy<Value = (Sketch, Vec<f64>, Trajectory)> {
    (
        sketch(),
        proptest::collection::vec(hole_value(), MAX_HOLES),
        proptest::collection::vec(0..N_TOKENS, 1..25),
    )
        .prop_map(|(s, mut h, toks)| {
            h.truncate(s.n_holes());
            let tau = Trajectory::from_tokens(toks.into_iter().map(token).collect(), 0.0).unwrap();
            (s, h, tau)
        })
}

// constraints

pub const N: usize = 3;

pub fn atom() -> impl Strategy<Value = Constraint> {
    (proptest::collection::vec(-2.0f64..2.0, N), -2.0f64..2.0)
        .prop_map(|(c, o)| Constraint::Atom(Atom::new(c, o)))
}

pub fn constraint() -> impl Strategy<Value = Constraint> {
    atom().prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Constraint::not),
            proptest::collection::vec(inner.clone(), 0..3).prop_map(Constraint::and),
            proptest::collection::vec(inner, 0..3).prop_map(Constraint::or),
        ]
    })
}

pub fn conjunction() -> impl Strategy<Value = Constraint> {
    proptest::collection::vec(atom(), 1..5).prop_map(Constraint::and)
}

pub fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, N)
}
