//! Discrete-event vehicular network simulator built around neighbor-table
//! beacon piggybacking (CRNT).

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod proto;
pub mod radio;
pub mod mobility;
pub mod metrics;
pub mod engine;
pub mod cli;
