//! Built-in tables: cyclic groups, direct products, the two hand-sized
//! reference quasigroups used throughout the tests, block assemblies, and
//! seeded random latin squares.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::CayleyTable;
use crate::error::{Error, Result};

/// The cyclic group of order `n` with `a * b = ((a-1) + (b-1) mod n) + 1`.
pub fn cyclic(n: usize) -> CayleyTable {
    let mut cells = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            cells.push(((a + b) % n) as u8);
        }
    }
    CayleyTable::from_cells(n, cells).expect("cyclic tables are latin")
}

/// Componentwise product; the symbol `(a, b)` gets index `(a-1)*|H| + b`.
pub fn direct_product(g: &CayleyTable, h: &CayleyTable) -> CayleyTable {
    let (gn, hn) = (g.order(), h.order());
    let n = gn * hn;
    let mut cells = vec![0u8; n * n];
    for a1 in 0..gn {
        for b1 in 0..hn {
            let x = a1 * hn + b1;
            for a2 in 0..gn {
                for b2 in 0..hn {
                    let y = a2 * hn + b2;
                    let va = g.op(a1 as u8, a2 as u8) as usize;
                    let vb = h.op(b1 as u8, b2 as u8) as usize;
                    cells[x * n + y] = (va * hn + vb) as u8;
                }
            }
        }
    }
    CayleyTable::from_cells(n, cells).expect("products of latin squares are latin")
}

/// The order-2 group table used as the running small example.
pub fn example1() -> CayleyTable {
    cyclic(2)
}

/// An order-4 quasigroup isotopic to the Klein four-group (first two rows of
/// its table swapped). It is not a loop, which makes it the smallest handy
/// specimen with a genuinely mixed class structure.
pub fn example2() -> CayleyTable {
    CayleyTable::from_rows_1based(&[
        vec![2, 1, 4, 3],
        vec![1, 2, 3, 4],
        vec![3, 4, 1, 2],
        vec![4, 3, 2, 1],
    ])
    .expect("fixed table is latin")
}

/// Assembles the block table
///
/// ```text
/// A' B'
/// B'' A''
/// ```
///
/// where `A'`, `A''` are latin squares of order `k` over `{1..k}` and `B'`,
/// `B''` are latin squares over `{k+1..2k}`. Each part is given as `k` rows
/// of 1-based symbols taken from its own symbol set.
pub fn block(
    a1: &[Vec<usize>],
    a2: &[Vec<usize>],
    b1: &[Vec<usize>],
    b2: &[Vec<usize>],
) -> Result<CayleyTable> {
    let k = a1.len();
    if k == 0 {
        return Err(Error::InvalidParameter(
            "block parts must be nonempty".into(),
        ));
    }
    let check_part = |part: &[Vec<usize>], low: usize, name: &str| -> Result<()> {
        if part.len() != k || part.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParameter(format!(
                "block part {name} must be {k}x{k}"
            )));
        }
        for row in part {
            for &v in row {
                if v < low || v >= low + k {
                    return Err(Error::InvalidParameter(format!(
                        "block part {name} uses symbol {v}, expected {low}..={}",
                        low + k - 1
                    )));
                }
            }
        }
        Ok(())
    };
    check_part(a1, 1, "A'")?;
    check_part(a2, 1, "A''")?;
    check_part(b1, k + 1, "B'")?;
    check_part(b2, k + 1, "B''")?;

    let n = 2 * k;
    let mut cells = vec![0u8; n * n];
    for i in 0..k {
        for j in 0..k {
            cells[i * n + j] = (a1[i][j] - 1) as u8;
            cells[i * n + (j + k)] = (b1[i][j] - 1) as u8;
            cells[(i + k) * n + j] = (b2[i][j] - 1) as u8;
            cells[(i + k) * n + (j + k)] = (a2[i][j] - 1) as u8;
        }
    }
    CayleyTable::from_cells(n, cells)
}

/// Convenience: block assembly from four order-`k` tables, with the `B`
/// parts shifted into the upper symbol set.
pub fn block_from_tables(
    a1: &CayleyTable,
    a2: &CayleyTable,
    b1: &CayleyTable,
    b2: &CayleyTable,
) -> Result<CayleyTable> {
    let k = a1.order();
    for t in [a2, b1, b2] {
        if t.order() != k {
            return Err(Error::OrderMismatch {
                left: k,
                right: t.order(),
            });
        }
    }
    let rows = |t: &CayleyTable, shift: usize| -> Vec<Vec<usize>> {
        (0..k)
            .map(|a| t.row(a).iter().map(|&v| v as usize + 1 + shift).collect())
            .collect()
    };
    block(&rows(a1, 0), &rows(a2, 0), &rows(b1, k), &rows(b2, k))
}

/// A seeded random latin square via full-grid backtracking with shuffled
/// candidate order. Reproducible; no uniformity over all latin squares is
/// claimed.
pub fn random(n: usize, seed: u64) -> Result<CayleyTable> {
    if n == 0 || n > 16 {
        return Err(Error::InvalidParameter(format!(
            "random tables supported for orders 1..=16, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = vec![u8::MAX; n * n];
    let mut row_used = vec![0u32; n];
    let mut col_used = vec![0u32; n];
    // Per-cell shuffled candidate orders, fixed up front so the search is a
    // pure function of the seed.
    let orders: Vec<Vec<u8>> = (0..n * n)
        .map(|_| {
            let mut symbols: Vec<u8> = (0..n as u8).collect();
            symbols.shuffle(&mut rng);
            symbols
        })
        .collect();

    fn fill(
        cell: usize,
        n: usize,
        grid: &mut [u8],
        row_used: &mut [u32],
        col_used: &mut [u32],
        orders: &[Vec<u8>],
    ) -> bool {
        if cell == n * n {
            return true;
        }
        let (r, c) = (cell / n, cell % n);
        for &s in &orders[cell] {
            let bit = 1u32 << s;
            if row_used[r] & bit != 0 || col_used[c] & bit != 0 {
                continue;
            }
            grid[cell] = s;
            row_used[r] |= bit;
            col_used[c] |= bit;
            if fill(cell + 1, n, grid, row_used, col_used, orders) {
                return true;
            }
            row_used[r] &= !bit;
            col_used[c] &= !bit;
        }
        grid[cell] = u8::MAX;
        false
    }

    if !fill(0, n, &mut grid, &mut row_used, &mut col_used, &orders) {
        return Err(Error::internal("latin square backtracking cannot fail"));
    }
    CayleyTable::from_cells(n, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{parse_cayley, structure_probe};

    #[test]
    fn cyclic_two_is_the_order_two_example() {
        assert_eq!(cyclic(2), example1());
    }

    #[test]
    fn cyclic_tables_are_groups_with_identity_one() {
        for n in 1..=7 {
            let p = structure_probe(&cyclic(n));
            assert!(p.is_group, "cyclic({n})");
            assert_eq!(p.identity, Some(1));
        }
    }

    #[test]
    fn example2_matches_printed_table() {
        let t = parse_cayley("4\n2 1 4 3\n1 2 3 4\n3 4 1 2\n4 3 2 1\n").unwrap();
        assert_eq!(t, example2());
    }

    #[test]
    fn klein_group_is_a_product_of_two_cyclics() {
        let k = direct_product(&cyclic(2), &cyclic(2));
        let p = structure_probe(&k);
        assert!(p.is_group);
        assert!(p.is_commutative);
        // Every non-identity element is an involution.
        for x in 1..4u8 {
            assert_eq!(k.op(x, x), 0);
        }
    }

    #[test]
    fn block_assembly_of_order_two_parts_is_latin() {
        let c = cyclic(2);
        let t = block_from_tables(&c, &c, &c, &c).unwrap();
        assert_eq!(t.order(), 4);
        // Mixed symbol sets multiply into the upper set, same sets into the
        // lower set.
        for a in 0..4u8 {
            for b in 0..4u8 {
                let mixed = (a < 2) != (b < 2);
                assert_eq!(t.op(a, b) >= 2, mixed);
            }
        }
    }

    #[test]
    fn block_rejects_wrong_symbol_sets() {
        let rows_low = vec![vec![1, 2], vec![2, 1]];
        let err = block(&rows_low, &rows_low, &rows_low, &rows_low).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn random_is_reproducible_and_latin() {
        let a = random(5, 42).unwrap();
        let b = random(5, 42).unwrap();
        assert_eq!(a, b);
        let c = random(5, 43).unwrap();
        assert_ne!(a, c, "different seeds should differ at order 5");
    }
}
