// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod identification;
pub mod probability;
pub mod proxy;
pub mod seu;
pub mod simulation;
