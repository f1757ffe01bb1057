// NaN-rejecting checks are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod additive;
pub mod error;
pub mod grid;
pub mod jumps;
pub mod lie;
pub mod moments;
pub mod multiplicative;
pub mod regularity;
pub mod rng;
pub mod stats;
pub mod verdict;

pub use error::{Error, Result};
