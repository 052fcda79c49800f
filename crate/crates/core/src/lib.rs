//! Sparse domination of Calderón–Zygmund operators with respect to
//! non-doubling measures on the real line.
//!
//! The crate builds David–Mattila type interval lattices for atomic measures,
//! runs the stopping-time cell selection, and certifies pointwise domination of
//! the maximal truncation by a sparse form. Weighted characteristics and
//! empirical weighted norms sit on top of the same lattice.

// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod lattice;
pub mod measure;
pub mod numeric;
pub mod operators;
pub mod sparse;
pub mod weights;

pub use error::{Error, Result};
