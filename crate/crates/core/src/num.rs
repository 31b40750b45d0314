//! Scalar abstraction for exact diagonal counts.
//!
//! Counting in iterated quasigroups multiplies masses of size `n!` per
//! iteration step, so the natural scalar is an arbitrary-precision integer.
//! The propagation kernels are nevertheless generic over the scalar: when a
//! caller can bound the total mass (`n!^d` fits a machine word) the same code
//! runs an order of magnitude faster on `u64`/`u128`, and the result is
//! identical. Machine-word impls are checked, never wrapping.

use num_bigint::BigUint;
use num_traits::Zero;

/// An exact nonnegative count.
///
/// Implementations must be exact: additions either return the true sum or
/// panic (machine words on overflow). Wrapping arithmetic would silently
/// corrupt counts and is therefore not an acceptable implementation.
pub trait CountScalar: Clone + Send + Sync + PartialEq + Zero + std::fmt::Debug {
    fn from_u64(value: u64) -> Self;

    /// `self += other`.
    fn add_ref(&mut self, other: &Self);

    /// `self += other * factor`, the fused kernel of sparse propagation.
    fn add_mul_u64(&mut self, other: &Self, factor: u64);

    fn to_biguint(&self) -> BigUint;
}

impl CountScalar for u64 {
    fn from_u64(value: u64) -> Self {
        value
    }

    fn add_ref(&mut self, other: &Self) {
        *self = self.checked_add(*other).expect("u64 count overflow");
    }

    fn add_mul_u64(&mut self, other: &Self, factor: u64) {
        let term = other.checked_mul(factor).expect("u64 count overflow");
        *self = self.checked_add(term).expect("u64 count overflow");
    }

    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }
}

impl CountScalar for u128 {
    fn from_u64(value: u64) -> Self {
        value as u128
    }

    fn add_ref(&mut self, other: &Self) {
        *self = self.checked_add(*other).expect("u128 count overflow");
    }

    fn add_mul_u64(&mut self, other: &Self, factor: u64) {
        let term = other
            .checked_mul(factor as u128)
            .expect("u128 count overflow");
        *self = self.checked_add(term).expect("u128 count overflow");
    }

    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }
}

impl CountScalar for BigUint {
    fn from_u64(value: u64) -> Self {
        BigUint::from(value)
    }

    fn add_ref(&mut self, other: &Self) {
        *self += other;
    }

    fn add_mul_u64(&mut self, other: &Self, factor: u64) {
        if factor == 1 {
            *self += other;
        } else {
            *self += other * factor;
        }
    }

    fn to_biguint(&self) -> BigUint {
        self.clone()
    }
}

/// `n!` as a machine word; callers guarantee `n <= 20`.
pub fn factorial_u64(n: usize) -> u64 {
    assert!(n <= 20, "factorial_u64 overflows past 20!");
    (1..=n as u64).product()
}

/// `n!` exactly.
pub fn factorial_big(n: usize) -> BigUint {
    let mut acc = BigUint::from(1u32);
    for i in 1..=n as u64 {
        acc *= i;
    }
    acc
}

/// Number of bits needed to represent `n!^d`, used to pick a scalar type.
pub fn factorial_power_bits(n: usize, d: u32) -> u64 {
    if n <= 1 {
        return 1;
    }
    // log2(n!) rounded up generously.
    let log2_fact: f64 = (2..=n).map(|k| (k as f64).log2()).sum();
    (log2_fact * d as f64).ceil() as u64 + 2
}
