// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod numcore;
pub mod simgen;
pub mod regpath;
pub mod modelselect;
pub mod par;
pub mod identify;
pub mod metrics;
pub mod bench;
