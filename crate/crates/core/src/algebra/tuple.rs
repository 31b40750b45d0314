//! Tuples over the symbol set, their canonical integer codes, and
//! permutations acting on symbols and coordinates.

use serde::Serialize;

use crate::algebra::CayleyTable;
use crate::error::{Error, Result};

/// An element of the tuple space: `n` symbols, each in `0..n` internally.
///
/// The canonical code reads the digits most-significant first, so tuples
/// order lexicographically by code; `(1,1,...,1)` is code 0 and the identity
/// permutation `(1,2,...,n)` has a fixed, easily recomputed code.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TupleCode {
    digits: Vec<u8>,
}

impl std::fmt::Debug for TupleCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({})", self.to_display())
    }
}

impl TupleCode {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        let n = digits.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty tuple".into()));
        }
        if let Some(&d) = digits.iter().find(|&&d| d as usize >= n) {
            return Err(Error::SymbolRange {
                found: d as i64 + 1,
                n,
                line: 0,
            });
        }
        Ok(TupleCode { digits })
    }

    /// Builds a tuple from 1-based symbols, e.g. parsed from `"1,2,3"`.
    pub fn from_symbols_1based(symbols: &[usize]) -> Result<Self> {
        let n = symbols.len();
        for &s in symbols {
            if s < 1 || s > n {
                return Err(Error::SymbolRange {
                    found: s as i64,
                    n,
                    line: 0,
                });
            }
        }
        Ok(TupleCode {
            digits: symbols.iter().map(|&s| (s - 1) as u8).collect(),
        })
    }

    /// The identity permutation `(1, 2, ..., n)` as a tuple.
    pub fn identity_permutation(n: usize) -> Self {
        TupleCode {
            digits: (0..n as u8).collect(),
        }
    }

    /// The constant tuple `(a, a, ..., a)`, 0-based `a`.
    pub fn constant(n: usize, a: u8) -> Self {
        TupleCode { digits: vec![a; n] }
    }

    /// Decodes a canonical code back into digits.
    pub fn from_code(n: usize, mut code: u64) -> Self {
        let mut digits = vec![0u8; n];
        for i in (0..n).rev() {
            digits[i] = (code % n as u64) as u8;
            code /= n as u64;
        }
        debug_assert_eq!(code, 0, "code out of range for order {n}");
        TupleCode { digits }
    }

    pub fn n(&self) -> usize {
        self.digits.len()
    }

    #[inline]
    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Canonical code: digits most-significant first, base `n`.
    pub fn code(&self) -> u64 {
        encode_digits(&self.digits)
    }

    pub fn is_permutation(&self) -> bool {
        let n = self.n();
        let mut seen = 0u64;
        for &d in &self.digits {
            let bit = 1u64 << d;
            if seen & bit != 0 {
                return false;
            }
            seen |= bit;
        }
        seen.count_ones() as usize == n
    }

    /// Number of distinct symbols; a near-transversal type has at least
    /// `n - 1` of them.
    pub fn distinct_symbols(&self) -> usize {
        let mut seen = 0u64;
        for &d in &self.digits {
            seen |= 1 << d;
        }
        seen.count_ones() as usize
    }

    /// The tuple equal to `self` except (possibly) at coordinate `i`.
    pub fn with_coordinate(&self, i: usize, b: u8) -> Self {
        let mut digits = self.digits.clone();
        digits[i] = b;
        TupleCode { digits }
    }

    /// 1-based display, `"1,2,3"`.
    pub fn to_display(&self) -> String {
        self.digits
            .iter()
            .map(|&d| (d as usize + 1).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn symbols_1based(&self) -> Vec<usize> {
        self.digits.iter().map(|&d| d as usize + 1).collect()
    }
}

/// Canonical code of a digit slice without constructing a tuple.
#[inline]
pub fn encode_digits(digits: &[u8]) -> u64 {
    let n = digits.len() as u64;
    debug_assert!(digits.len() <= 15, "codes overflow u64 past order 15");
    digits.iter().fold(0u64, |acc, &d| acc * n + d as u64)
}

/// A permutation of the symbol set, stored as its image vector.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Permutation {
    image: Vec<u8>,
}

impl std::fmt::Debug for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}]", self.as_tuple().to_display())
    }
}

impl Permutation {
    pub fn new(image: Vec<u8>) -> Result<Self> {
        let t = TupleCode::new(image.clone())?;
        if !t.is_permutation() {
            return Err(Error::InvalidParameter(format!(
                "not a permutation: {}",
                t.to_display()
            )));
        }
        Ok(Permutation { image })
    }

    pub fn from_symbols_1based(symbols: &[usize]) -> Result<Self> {
        let t = TupleCode::from_symbols_1based(symbols)?;
        Self::new(t.digits().to_vec())
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            image: (0..n as u8).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    #[inline]
    pub fn apply(&self, x: u8) -> u8 {
        self.image[x as usize]
    }

    #[inline]
    pub fn image(&self) -> &[u8] {
        &self.image
    }

    pub fn is_identity(&self) -> bool {
        self.image.iter().enumerate().all(|(i, &v)| v as usize == i)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u8; self.image.len()];
        for (i, &v) in self.image.iter().enumerate() {
            inv[v as usize] = i as u8;
        }
        Permutation { image: inv }
    }

    /// `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Self {
        Permutation {
            image: other.image.iter().map(|&x| self.apply(x)).collect(),
        }
    }

    pub fn as_tuple(&self) -> TupleCode {
        TupleCode {
            digits: self.image.clone(),
        }
    }

    /// A transposition swapping two symbols (0-based).
    pub fn transposition(n: usize, a: u8, b: u8) -> Self {
        let mut image: Vec<u8> = (0..n as u8).collect();
        image.swap(a as usize, b as usize);
        Permutation { image }
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    assert!(n <= 10, "permutation enumeration past 10! is not supported");
    let mut out = Vec::with_capacity(crate::num::factorial_u64(n) as usize);
    let mut image: Vec<u8> = (0..n as u8).collect();
    loop {
        out.push(Permutation {
            image: image.clone(),
        });
        // Next lexicographic permutation.
        let Some(i) = (0..n.saturating_sub(1))
            .rev()
            .find(|&i| image[i] < image[i + 1])
        else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| image[j] > image[i]).unwrap();
        image.swap(i, j);
        image[i + 1..].reverse();
    }
    out
}

/// Entrywise product `V[i] = U[i] * W[i]`.
pub fn multiply_tuples(g: &CayleyTable, u: &TupleCode, w: &TupleCode) -> Result<TupleCode> {
    check_orders(g.order(), &[u.n(), w.n()])?;
    Ok(TupleCode {
        digits: u
            .digits
            .iter()
            .zip(&w.digits)
            .map(|(&a, &b)| g.op(a, b))
            .collect(),
    })
}

/// Left-nested product of the entries: `(...(v1 * v2) * ...) * vk`.
pub fn pi_product(g: &CayleyTable, entries: &[u8]) -> Result<u8> {
    if entries.is_empty() {
        return Err(Error::InvalidParameter("empty product".into()));
    }
    if let Some(&d) = entries.iter().find(|&&d| d as usize >= g.order()) {
        return Err(Error::OrderMismatch {
            left: g.order(),
            right: d as usize + 1,
        });
    }
    Ok(entries[1..].iter().fold(entries[0], |acc, &x| g.op(acc, x)))
}

/// Evaluates the iterated operation on `d + 1` arguments; a single argument
/// is returned unchanged.
pub fn eval_iterated(g: &CayleyTable, xs: &[u8]) -> Result<u8> {
    pi_product(g, xs)
}

/// Symbol action: maps every entry of `v` through `pi`.
pub fn symbol_action(pi: &Permutation, v: &TupleCode) -> Result<TupleCode> {
    check_orders(pi.n(), &[v.n()])?;
    Ok(TupleCode {
        digits: v.digits.iter().map(|&d| pi.apply(d)).collect(),
    })
}

/// Coordinate action `V^pi`: entry `i` of the result is `V[pi(i)]`.
pub fn coordinate_action(v: &TupleCode, pi: &Permutation) -> Result<TupleCode> {
    check_orders(pi.n(), &[v.n()])?;
    Ok(TupleCode {
        digits: pi.image().iter().map(|&j| v.digits[j as usize]).collect(),
    })
}

fn check_orders(n: usize, others: &[usize]) -> Result<()> {
    for &m in others {
        if m != n {
            return Err(Error::OrderMismatch { left: n, right: m });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_cayley;

    fn order2() -> CayleyTable {
        parse_cayley("2\n1 2\n2 1\n").unwrap()
    }

    #[test]
    fn code_is_most_significant_first() {
        let t = TupleCode::from_symbols_1based(&[1, 2]).unwrap();
        assert_eq!(t.code(), 1);
        let t = TupleCode::from_symbols_1based(&[2, 1]).unwrap();
        assert_eq!(t.code(), 2);
    }

    #[test]
    fn encode_decode_round_trips_exhaustively() {
        for n in 1..=4usize {
            let count = (n as u64).pow(n as u32);
            for code in 0..count {
                let t = TupleCode::from_code(n, code);
                assert_eq!(t.code(), code);
            }
        }
    }

    #[test]
    fn multiply_matches_table() {
        let g = order2();
        let u = TupleCode::from_symbols_1based(&[1, 1]).unwrap();
        let w = TupleCode::from_symbols_1based(&[1, 2]).unwrap();
        let v = multiply_tuples(&g, &u, &w).unwrap();
        assert_eq!(v.symbols_1based(), vec![1, 2]);

        let u = TupleCode::from_symbols_1based(&[1, 2]).unwrap();
        let w = TupleCode::from_symbols_1based(&[2, 1]).unwrap();
        let v = multiply_tuples(&g, &u, &w).unwrap();
        assert_eq!(v.symbols_1based(), vec![2, 2]);
    }

    #[test]
    fn multiplying_by_the_identity_constant_fixes_loops() {
        // In a loop, the constant tuple at the identity is a right unit for
        // the entrywise product.
        let g = crate::algebra::catalog::cyclic(4);
        let e = TupleCode::constant(4, 0);
        for code in 0..256u64 {
            let u = TupleCode::from_code(4, code);
            assert_eq!(multiply_tuples(&g, &u, &e).unwrap(), u);
        }
    }

    #[test]
    fn multiply_rejects_order_mismatch() {
        let g = order2();
        let u = TupleCode::from_symbols_1based(&[1, 1]).unwrap();
        let w = TupleCode::from_symbols_1based(&[1, 2, 3]).unwrap();
        assert!(multiply_tuples(&g, &u, &w).is_err());
    }

    #[test]
    fn pi_product_examples() {
        let g = order2();
        assert_eq!(pi_product(&g, &[0, 1]).unwrap(), 1); // 1*2 = 2
        assert_eq!(pi_product(&g, &[1]).unwrap(), 1); // singleton

        // ((1*2)*3)*4 on the order-4 quasigroup from the catalog.
        let e2 = crate::algebra::catalog::example2();
        assert_eq!(pi_product(&e2, &[0, 1, 2, 3]).unwrap(), 0);
    }

    #[test]
    fn eval_iterated_matches_pi_product() {
        let g = order2();
        assert_eq!(eval_iterated(&g, &[2 - 2]).unwrap(), 0); // d = 0 returns x1
        assert_eq!(eval_iterated(&g, &[0, 1, 1]).unwrap(), 0); // (1*2)*2 = 1
    }

    #[test]
    fn coordinate_action_reindexes() {
        let v = TupleCode::from_symbols_1based(&[1, 1, 2]).unwrap();
        let pi = Permutation::from_symbols_1based(&[2, 3, 1]).unwrap();
        let w = coordinate_action(&v, &pi).unwrap();
        assert_eq!(w.symbols_1based(), vec![1, 2, 1]);
    }

    #[test]
    fn constant_tuples_are_fixed_by_coordinate_action() {
        let v = TupleCode::constant(4, 2);
        for pi in all_permutations(4) {
            assert_eq!(coordinate_action(&v, &pi).unwrap(), v);
        }
    }

    #[test]
    fn symbol_action_on_identity_gives_image() {
        let w = TupleCode::identity_permutation(3);
        let pi = Permutation::from_symbols_1based(&[3, 1, 2]).unwrap();
        let out = symbol_action(&pi, &w).unwrap();
        assert_eq!(out.digits(), pi.image());
    }

    #[test]
    fn permutation_enumeration_is_lexicographic_and_complete() {
        let perms = all_permutations(3);
        assert_eq!(perms.len(), 6);
        assert_eq!(perms[0].image(), &[0, 1, 2]);
        assert_eq!(perms[5].image(), &[2, 1, 0]);
        for w in perms.windows(2) {
            assert!(w[0].image() < w[1].image());
        }
    }

    #[test]
    fn inverse_and_compose() {
        for p in all_permutations(4) {
            let q = p.inverse();
            assert!(p.compose(&q).is_identity());
            assert!(q.compose(&p).is_identity());
        }
    }
}
