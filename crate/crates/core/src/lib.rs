//! Graph alignment under a match/mismatch/neutral scoring model.
//!
//! The crate provides the scored alignment graph (explicit and matrix-free),
//! two spectral aligners ([`align::eigen_align`] and [`align::low_rank_align`]),
//! exact small-instance oracles, synthetic graph generators and the
//! closed-form expected-matrix quantities used to sanity-check the aligners
//! on Erdős–Rényi inputs.
//!
//! All randomness flows through [`randgen::Rng`] (ChaCha8 seeded from a
//! `u64`), so every generator and experiment is reproducible from its seed.

// `!(x > y)` is the NaN-rejecting form of parameter checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod align;
pub mod error;
pub mod graph;
pub mod matching;
pub mod metrics;
pub mod randgen;
pub mod score;
pub mod spectral;

pub use error::{Error, Result};
pub use graph::{Graph, Permutation};
pub use matching::{Assignment, Mask};
pub use score::{MappingSet, ScoreScheme};
