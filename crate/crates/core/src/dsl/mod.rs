//! Reward sketches: a small expression language evaluated once per
//! trajectory step, with numeric holes `?1..?n` left for learning.

mod ast;
mod eval;
mod parser;
mod print;
mod residual;
mod vocab;

pub use ast::{BinOp, CmpOp, Expr, Guard, Sketch};
pub use eval::{eval_program, total_reward, HoleAssignment, Program};
pub use parser::parse_sketch;
pub use print::print_sketch;
pub use residual::{partial_eval, Affine, Residual, ResidualProgram};
pub use vocab::{Token, Vocabulary, VocabularyError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DslError {
    #[error("{line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("{line}:{col}: unknown token `{name}`")]
    UnknownToken {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("{line}:{col}: hole ?{found} appears before ?{expected}; holes must be numbered by first appearance")]
    HoleOrder {
        line: usize,
        col: usize,
        found: usize,
        expected: usize,
    },
    #[error("{line}:{col}: duplicate match arm for `{name}`")]
    DuplicateArm {
        line: usize,
        col: usize,
        name: String,
    },
    #[error("token index {0} is outside the vocabulary")]
    TokenOutOfVocabulary(usize),
    #[error("constant {0} is not finite")]
    NonFiniteConstant(f64),
    #[error("hole assignment has {found} values, sketch has {expected} holes")]
    AssignmentLength { expected: usize, found: usize },
    #[error("hole assignment contains a non-finite value at ?{0}")]
    NonFiniteHole(usize),
}
