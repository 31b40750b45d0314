//! Exact counting of transversals, near transversals, and diagonals in
//! iterated quasigroups.
//!
//! Given the Cayley table of a binary quasigroup `G` of order `n`, the crate
//! builds the exact transition matrix over the `n^n` tuple space, decomposes
//! it into equivalence classes, periods, and units, counts diagonals of every
//! type in the iterated quasigroups `G[d]` with arbitrary-precision integers,
//! and checks the structural predictions against independent brute-force
//! oracles.

pub mod algebra;
pub mod classes;
pub mod counting;
pub mod error;
pub mod grouptools;
pub mod num;
pub mod oracle;
pub mod transition;

pub use error::{Error, Result};

/// The default exact count scalar.
pub type Count = num_bigint::BigUint;
/// Exact signed integers, used inside ratios.
pub type Int = num_bigint::BigInt;
/// Exact ratios for predictions and deviations.
pub type Ratio = num_rational::BigRational;
