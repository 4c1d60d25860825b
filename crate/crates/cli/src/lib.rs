//! Command-line driver for graph alignment experiments.

// `!(x > y)` is the NaN-rejecting form of parameter checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod experiment;
pub mod io;
