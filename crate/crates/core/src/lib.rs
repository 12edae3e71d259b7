#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod constraint;
pub mod dsl;
pub mod env;
pub mod estimators;
pub mod kv;
pub mod learner;
pub mod policy;
pub mod study;
pub mod trajectory;
