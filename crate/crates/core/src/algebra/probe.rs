//! Structural probes of a quasigroup and the isotopy action on tables.

use serde::Serialize;

use crate::algebra::{CayleyTable, Permutation};
use crate::error::{Error, Result};

/// What the exhaustive structural probe found.
#[derive(Debug, Clone, Serialize)]
pub struct StructureProbe {
    pub is_associative: bool,
    /// 1-based identity element, when the table is a loop.
    pub identity: Option<usize>,
    pub is_loop: bool,
    pub is_group: bool,
    pub is_commutative: bool,
    /// Witness for the right inverse property: a permutation `pi` with
    /// `(g * h) * pi(h) = g` for all `g, h`. Present iff the property holds.
    pub right_inverse_permutation: Option<Vec<usize>>,
}

/// Probes associativity, identity, and the right inverse property by
/// exhaustive search. The cubic loop is fine at the orders this crate
/// targets.
pub fn structure_probe(g: &CayleyTable) -> StructureProbe {
    let n = g.order();

    let mut is_associative = true;
    'assoc: for a in 0..n as u8 {
        for b in 0..n as u8 {
            let ab = g.op(a, b);
            for c in 0..n as u8 {
                if g.op(ab, c) != g.op(a, g.op(b, c)) {
                    is_associative = false;
                    break 'assoc;
                }
            }
        }
    }

    let identity = (0..n as u8).find(|&e| (0..n as u8).all(|x| g.op(e, x) == x && g.op(x, e) == x));

    let mut is_commutative = true;
    'comm: for a in 0..n as u8 {
        for b in 0..a {
            if g.op(a, b) != g.op(b, a) {
                is_commutative = false;
                break 'comm;
            }
        }
    }

    // Right inverse property: for every h, the inverse of the right
    // translation x -> x * h must itself be a right translation, by some
    // pi(h). The witness map is automatically a bijection.
    let mut pi = vec![0u8; n];
    let mut has_rip = true;
    'rip: for h in 0..n as u8 {
        let mut found = None;
        for k in 0..n as u8 {
            if (0..n as u8).all(|x| g.op(g.op(x, h), k) == x) {
                found = Some(k);
                break;
            }
        }
        match found {
            Some(k) => pi[h as usize] = k,
            None => {
                has_rip = false;
                break 'rip;
            }
        }
    }

    let is_loop = identity.is_some();
    StructureProbe {
        is_associative,
        identity: identity.map(|e| e as usize + 1),
        is_loop,
        is_group: is_associative && is_loop,
        is_commutative,
        right_inverse_permutation: if has_rip {
            Some(pi.into_iter().map(|k| k as usize + 1).collect())
        } else {
            None
        },
    }
}

/// A triple of bijections relating two quasigroups by
/// `alpha(x) . beta(y) = gamma(x * y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isotopy {
    pub alpha: Permutation,
    pub beta: Permutation,
    pub gamma: Permutation,
}

impl Isotopy {
    pub fn new(alpha: Permutation, beta: Permutation, gamma: Permutation) -> Result<Self> {
        let n = alpha.n();
        if beta.n() != n || gamma.n() != n {
            return Err(Error::OrderMismatch {
                left: n,
                right: beta.n().max(gamma.n()),
            });
        }
        Ok(Isotopy { alpha, beta, gamma })
    }

    pub fn identity(n: usize) -> Self {
        Isotopy {
            alpha: Permutation::identity(n),
            beta: Permutation::identity(n),
            gamma: Permutation::identity(n),
        }
    }

    pub fn row(alpha: Permutation) -> Self {
        let n = alpha.n();
        Isotopy {
            alpha,
            beta: Permutation::identity(n),
            gamma: Permutation::identity(n),
        }
    }

    pub fn column(beta: Permutation) -> Self {
        let n = beta.n();
        Isotopy {
            alpha: Permutation::identity(n),
            beta,
            gamma: Permutation::identity(n),
        }
    }

    pub fn symbol(gamma: Permutation) -> Self {
        let n = gamma.n();
        Isotopy {
            alpha: Permutation::identity(n),
            beta: Permutation::identity(n),
            gamma,
        }
    }

    pub fn inverse(&self) -> Self {
        Isotopy {
            alpha: self.alpha.inverse(),
            beta: self.beta.inverse(),
            gamma: self.gamma.inverse(),
        }
    }

    pub fn n(&self) -> usize {
        self.alpha.n()
    }
}

/// Applies an isotopy: the result `H` satisfies
/// `H(alpha(x), beta(y)) = gamma(x * y)`, and is again a latin square.
pub fn apply_isotopy(g: &CayleyTable, iso: &Isotopy) -> Result<CayleyTable> {
    let n = g.order();
    if iso.n() != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: iso.n(),
        });
    }
    let mut cells = vec![0u8; n * n];
    for x in 0..n as u8 {
        let ax = iso.alpha.apply(x) as usize;
        for y in 0..n as u8 {
            let by = iso.beta.apply(y) as usize;
            cells[ax * n + by] = iso.gamma.apply(g.op(x, y));
        }
    }
    CayleyTable::from_cells(n, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog;
    use crate::algebra::parse_cayley;

    #[test]
    fn order_two_group_probe() {
        let g = catalog::example1();
        let p = structure_probe(&g);
        assert!(p.is_group);
        assert_eq!(p.identity, Some(1));
        assert!(p.is_commutative);
    }

    #[test]
    fn example2_is_not_a_group() {
        let g = catalog::example2();
        let p = structure_probe(&g);
        assert!(!p.is_group);
        assert!(!p.is_loop);
    }

    #[test]
    fn groups_have_right_inverse_property() {
        for g in [catalog::cyclic(4), catalog::cyclic(5)] {
            let p = structure_probe(&g);
            let pi = p.right_inverse_permutation.expect("groups have the RIP");
            // For a group the witness is inversion: h * pi(h) = e.
            let e = (p.identity.unwrap() - 1) as u8;
            for h in 0..g.order() as u8 {
                assert_eq!(g.op(h, (pi[h as usize] - 1) as u8), e);
            }
        }
    }

    #[test]
    fn identity_isotopy_is_a_no_op() {
        let g = catalog::example2();
        let h = apply_isotopy(&g, &Isotopy::identity(4)).unwrap();
        assert_eq!(g, h);
    }

    #[test]
    fn isotopy_then_inverse_restores_table() {
        let g = catalog::cyclic(4);
        let iso = Isotopy::new(
            Permutation::from_symbols_1based(&[2, 3, 4, 1]).unwrap(),
            Permutation::from_symbols_1based(&[1, 3, 2, 4]).unwrap(),
            Permutation::from_symbols_1based(&[4, 2, 1, 3]).unwrap(),
        )
        .unwrap();
        let h = apply_isotopy(&g, &iso).unwrap();
        let back = apply_isotopy(&h, &iso.inverse()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn example2_is_a_row_swap_of_klein_group() {
        let klein = parse_cayley("4\n1 2 3 4\n2 1 4 3\n3 4 1 2\n4 3 2 1\n").unwrap();
        let swap = Isotopy::row(Permutation::transposition(4, 0, 1));
        let h = apply_isotopy(&klein, &swap).unwrap();
        assert_eq!(h, catalog::example2());
    }
}
