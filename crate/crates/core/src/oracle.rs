//! Independent brute-force enumeration of diagonals and constructive
//! witnesses. The enumeration stays deliberately naive: it iterates every
//! collection of permutations and folds products, so it can vouch for the
//! matrix-power machinery without sharing any code path with it.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::algebra::{
    all_permutations, multiply_tuples, pi_product, structure_probe, CayleyTable, Permutation,
    TupleCode,
};
use crate::error::{Error, Result};
use crate::num::factorial_u64;

/// Enumeration limits: a cap on the number of permutation collections and a
/// wall-clock guard.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub max_collections: u64,
    pub time_limit: Duration,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_collections: 10_000_000,
            time_limit: Duration::from_secs(60),
        }
    }
}

/// A concrete seed-diagonal: folding the steps from the seed produces the
/// result tuple.
#[derive(Debug, Clone)]
pub struct DiagonalWitness {
    pub seed: TupleCode,
    pub steps: Vec<Permutation>,
    pub result: TupleCode,
}

impl DiagonalWitness {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Joins two witnesses whose middle tuples agree.
    pub fn concat(first: &DiagonalWitness, second: &DiagonalWitness) -> Result<DiagonalWitness> {
        if first.result != second.seed {
            return Err(Error::InvalidParameter(
                "witness concatenation needs matching middle tuples".into(),
            ));
        }
        let mut steps = first.steps.clone();
        steps.extend(second.steps.iter().cloned());
        Ok(DiagonalWitness {
            seed: first.seed.clone(),
            steps,
            result: second.result.clone(),
        })
    }
}

/// Checks a witness by folding its steps from the seed.
pub fn verify_witness(g: &CayleyTable, w: &DiagonalWitness) -> bool {
    if w.seed.n() != g.order() || w.result.n() != g.order() {
        return false;
    }
    let mut cur = w.seed.clone();
    for step in &w.steps {
        if step.n() != g.order() {
            return false;
        }
        cur = match multiply_tuples(g, &cur, &step.as_tuple()) {
            Ok(next) => next,
            Err(_) => return false,
        };
    }
    cur == w.result
}

fn check_budget(n: usize, d: u32, budget: &OracleBudget) -> Result<u64> {
    if n > 10 && d > 0 {
        return Err(Error::budget(
            "oracle enumeration",
            format!("order {n}"),
            "order <= 10",
        ));
    }
    let nf = factorial_u64(n.min(10));
    let mut total = 1u64;
    for _ in 0..d {
        total = total
            .checked_mul(nf)
            .filter(|&t| t <= budget.max_collections)
            .ok_or_else(|| {
                Error::budget(
                    "oracle enumeration",
                    format!("{nf}^{d} collections"),
                    budget.max_collections,
                )
            })?;
    }
    Ok(total)
}

/// Sequential depth-first tally of all `n!^d` fold results from a seed,
/// reusing fold prefixes.
fn census_subtree(
    g: &CayleyTable,
    perms: &[Permutation],
    seed: TupleCode,
    d: u32,
    deadline: Instant,
    time_limit: Duration,
) -> Result<BTreeMap<u64, u64>> {
    let mut counts = BTreeMap::new();
    let mut stack: Vec<TupleCode> = Vec::with_capacity(d as usize + 1);
    stack.push(seed);
    let mut choice = vec![0usize; d as usize];
    let mut level = 0usize;
    let mut visited = 0u64;
    loop {
        if level == d as usize {
            *counts.entry(stack[level].code()).or_insert(0) += 1;
            visited += 1;
            if visited.is_multiple_of(65536) && Instant::now() > deadline {
                return Err(Error::budget(
                    "oracle enumeration",
                    "wall clock",
                    format!("{time_limit:?}"),
                ));
            }
            // Backtrack to the deepest level with a remaining choice.
            loop {
                if level == 0 {
                    return Ok(counts);
                }
                level -= 1;
                stack.truncate(level + 1);
                choice[level] += 1;
                if choice[level] < perms.len() {
                    break;
                }
                choice[level] = 0;
            }
        }
        let next = multiply_tuples(g, &stack[level], &perms[choice[level]].as_tuple())?;
        stack.push(next);
        level += 1;
    }
}

/// Exhaustively enumerates all `n!^d` collections of permutations from a
/// seed, folding entrywise products, and tallies the resulting types.
///
/// Work splits over the first permutation; the partial tallies merge by
/// summation, so the total is deterministic under any scheduling.
pub fn enumerate_diagonals(
    g: &CayleyTable,
    seed: &TupleCode,
    d: u32,
    budget: &OracleBudget,
) -> Result<BTreeMap<u64, u64>> {
    if seed.n() != g.order() {
        return Err(Error::OrderMismatch {
            left: g.order(),
            right: seed.n(),
        });
    }
    check_budget(g.order(), d, budget)?;
    if d == 0 {
        return Ok(BTreeMap::from([(seed.code(), 1)]));
    }
    let deadline = Instant::now() + budget.time_limit;
    let perms = all_permutations(g.order());
    let partials: Result<Vec<BTreeMap<u64, u64>>> = perms
        .par_iter()
        .map(|w1| {
            let first = multiply_tuples(g, seed, &w1.as_tuple())?;
            census_subtree(g, &perms, first, d - 1, deadline, budget.time_limit)
        })
        .collect();
    let mut counts = BTreeMap::new();
    for part in partials? {
        for (code, c) in part {
            *counts.entry(code).or_insert(0) += c;
        }
    }
    Ok(counts)
}

/// Like [`enumerate_diagonals`], also recording the first witness found for
/// every reachable type.
pub fn witness_census(
    g: &CayleyTable,
    seed: &TupleCode,
    d: u32,
    budget: &OracleBudget,
) -> Result<BTreeMap<u64, (u64, DiagonalWitness)>> {
    check_budget(g.order(), d, budget)?;
    let perms = all_permutations(g.order());
    let nf = perms.len() as u64;
    let mut out: BTreeMap<u64, (u64, DiagonalWitness)> = BTreeMap::new();
    let total = nf.pow(d);
    for rank in 0..total {
        let mut cur = seed.clone();
        let mut steps = Vec::with_capacity(d as usize);
        let mut rest = rank;
        for _ in 0..d {
            let w = &perms[(rest % nf) as usize];
            rest /= nf;
            cur = multiply_tuples(g, &cur, &w.as_tuple())?;
            steps.push(w.clone());
        }
        let entry = out.entry(cur.code()).or_insert_with(|| {
            (
                0,
                DiagonalWitness {
                    seed: seed.clone(),
                    steps: steps.clone(),
                    result: cur.clone(),
                },
            )
        });
        entry.0 += 1;
    }
    Ok(out)
}

/// True when the tuple is constant except possibly at coordinate `i`.
fn is_canonical_form(v: &TupleCode, a: u8, i: usize) -> bool {
    v.digits()
        .iter()
        .enumerate()
        .all(|(j, &x)| j == i || x == a)
}

/// Fills the unassigned positions of two partial permutations with the
/// unused symbols in ascending order.
fn complete_permutation(partial: &[Option<u8>]) -> Vec<u8> {
    let n = partial.len();
    let mut used = vec![false; n];
    for x in partial.iter().flatten() {
        used[*x as usize] = true;
    }
    let mut free: Vec<u8> = (0..n as u8).filter(|&x| !used[x as usize]).collect();
    free.reverse();
    partial
        .iter()
        .map(|slot| slot.unwrap_or_else(|| free.pop().expect("enough spare symbols")))
        .collect()
}

/// Constructs a witness of even length at most `2n` from `V` to a tuple that
/// is constant `a` away from coordinate `i`.
///
/// Each double step fixes the smallest still-wrong coordinate: it pairs that
/// coordinate with the unique two-step return to `a`, keeps every already-`a`
/// coordinate in place with disjoint pairs `(w, w')` satisfying
/// `(a * w) * w' = a`, chosen greedily in ascending `w`, and fills the rest
/// of both permutations with the unused symbols in order.
pub fn reduce_to_canonical(
    g: &CayleyTable,
    v: &TupleCode,
    a_1based: usize,
    i: usize,
) -> Result<DiagonalWitness> {
    let n = g.order();
    if v.n() != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: v.n(),
        });
    }
    if a_1based < 1 || a_1based > n || i >= n {
        return Err(Error::InvalidParameter(format!(
            "target symbol {a_1based} or coordinate {i} out of range"
        )));
    }
    let a = (a_1based - 1) as u8;

    let mut cur = v.clone();
    let mut steps: Vec<Permutation> = Vec::new();
    // The return pairs (w, w') with (a*w)*w' = a; both components are
    // bijective in w, so distinct w give disjoint pairs.
    let keep_pair = |w: u8| -> u8 {
        let aw = g.op(a, w);
        g.right_div(aw, a)
    };

    for _round in 0..n {
        let Some(target) = (0..n).filter(|&j| j != i && cur.digits()[j] != a).min() else {
            break;
        };
        let vj = cur.digits()[target];
        // Fix the pair for the target coordinate first: smallest w with
        // (vj * w) * w' = a.
        let w_star = 0u8;
        let w_star_prime = g.right_div(g.op(vj, w_star), a);

        let mut w_slots: Vec<Option<u8>> = vec![None; n];
        let mut wp_slots: Vec<Option<u8>> = vec![None; n];
        w_slots[target] = Some(w_star);
        wp_slots[target] = Some(w_star_prime);

        // Greedy disjoint keep pairs for the coordinates already at `a`.
        let mut w_candidate = 0u8;
        for j in 0..n {
            if j == i || j == target || cur.digits()[j] != a {
                continue;
            }
            let (w, wp) = loop {
                let w = w_candidate;
                w_candidate += 1;
                let wp = keep_pair(w);
                if w != w_star && wp != w_star_prime {
                    break (w, wp);
                }
            };
            w_slots[j] = Some(w);
            wp_slots[j] = Some(wp);
        }

        let w = Permutation::new(complete_permutation(&w_slots))?;
        let wp = Permutation::new(complete_permutation(&wp_slots))?;
        cur = multiply_tuples(g, &cur, &w.as_tuple())?;
        cur = multiply_tuples(g, &cur, &wp.as_tuple())?;
        steps.push(w);
        steps.push(wp);
        if cur.digits()[target] != a {
            return Err(Error::internal(
                "canonical reduction failed to fix its target coordinate",
            ));
        }
    }

    if !is_canonical_form(&cur, a, i) {
        return Err(Error::internal(
            "canonical reduction exhausted its rounds without converging",
        ));
    }
    debug_assert!(steps.len() <= 2 * n);
    Ok(DiagonalWitness {
        seed: v.clone(),
        steps,
        result: cur,
    })
}

/// Group variant of the canonical reduction: the witness ends exactly at
/// the tuple that is the identity everywhere except coordinate 1, which
/// carries the product of the entries of `V`.
///
/// Each double step clears the last non-identity coordinate `k` by folding
/// its value into coordinate `k - 1`, pairing all other coordinates with
/// mutually inverse elements.
pub fn reduce_to_canonical_group(g: &CayleyTable, v: &TupleCode) -> Result<DiagonalWitness> {
    let n = g.order();
    if v.n() != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: v.n(),
        });
    }
    let probe = structure_probe(g);
    if !probe.is_group {
        return Err(Error::NotAGroup("reduce_to_canonical_group".into()));
    }
    let e = (probe.identity.unwrap() - 1) as u8;
    let pi_v = pi_product(g, v.digits())?;
    let inv = |x: u8| g.right_div(x, e);

    let mut cur = v.clone();
    let mut steps: Vec<Permutation> = Vec::new();
    // Clear the last non-identity coordinate until only the first is left.
    while let Some(k) = (0..n).rev().find(|&j| cur.digits()[j] != e) {
        if k == 0 {
            break; // already e_1(v_0)
        }
        let vk = cur.digits()[k];
        // g is free; the smallest element keeps the construction canonical.
        let gel = 0u8;
        let w_k = gel;
        let wp_k = g.op(inv(gel), inv(vk));
        let w_k1 = g.op(vk, gel);
        let wp_k1 = inv(gel);

        let mut w_slots: Vec<Option<u8>> = vec![None; n];
        let mut wp_slots: Vec<Option<u8>> = vec![None; n];
        w_slots[k] = Some(w_k);
        wp_slots[k] = Some(wp_k);
        w_slots[k - 1] = Some(w_k1);
        wp_slots[k - 1] = Some(wp_k1);

        // Remaining coordinates get the unused mutually inverse pairs, in
        // ascending order of w.
        let mut spare: Vec<u8> = (0..n as u8).filter(|&x| x != w_k && x != w_k1).collect();
        spare.reverse();
        for j in 0..n {
            if j == k || j == k - 1 {
                continue;
            }
            let w = spare.pop().expect("exactly n - 2 spare elements");
            w_slots[j] = Some(w);
            wp_slots[j] = Some(inv(w));
        }

        let w = Permutation::new(w_slots.into_iter().map(|s| s.unwrap()).collect())?;
        let wp = Permutation::new(wp_slots.into_iter().map(|s| s.unwrap()).collect())?;
        cur = multiply_tuples(g, &cur, &w.as_tuple())?;
        cur = multiply_tuples(g, &cur, &wp.as_tuple())?;
        steps.push(w);
        steps.push(wp);
    }

    let expected = TupleCode::constant(n, e).with_coordinate(0, pi_v);
    if cur != expected {
        return Err(Error::internal(format!(
            "group reduction landed on {cur:?}, expected {expected:?}"
        )));
    }
    debug_assert!(steps.len() <= 2 * n);
    Ok(DiagonalWitness {
        seed: v.clone(),
        steps,
        result: cur,
    })
}

/// Result of cross-checking the oracle against matrix propagation.
#[derive(Debug, Clone)]
pub struct CrossCheckReport {
    pub seeds_checked: usize,
    pub depths_checked: u32,
    pub entries_compared: u64,
}

/// Asserts that the naive enumeration and the matrix propagation agree
/// entrywise for the given seeds up to `d_max`, and that every type the
/// oracle reaches lies in the seed's equivalence class at the predicted
/// unit residue.
pub fn cross_check(
    g: &CayleyTable,
    t: &crate::transition::TransitionMatrix,
    d: &crate::classes::ClassDecomposition,
    seeds: &[TupleCode],
    d_max: u32,
    budget: &OracleBudget,
) -> Result<CrossCheckReport> {
    let mut entries = 0u64;
    for seed in seeds {
        let seed_class = d.class_of(seed.code());
        let seed_unit = d.unit_of(seed.code());
        for depth in 0..=d_max {
            let oracle = enumerate_diagonals(g, seed, depth, budget)?;
            let counted: crate::transition::CountVector<u64> =
                crate::transition::propagate(t, seed, depth);
            for code in 0..t.tuple_count() as u64 {
                let lhs = oracle.get(&code).copied().unwrap_or(0);
                let rhs = *counted.entry(code);
                if lhs != rhs {
                    return Err(Error::internal(format!(
                        "oracle disagrees with propagation at seed {}, depth {depth}, type {}: {lhs} vs {rhs}",
                        seed.to_display(),
                        TupleCode::from_code(g.order(), code).to_display(),
                    )));
                }
                entries += 1;
                if lhs > 0 {
                    let class = d.class_of(code);
                    let unit = d.unit_of(code);
                    let period = d.class(seed_class).period;
                    if class != seed_class || unit != (seed_unit + depth) % period {
                        return Err(Error::internal(format!(
                            "oracle reached type {} outside the predicted unit",
                            TupleCode::from_code(g.order(), code).to_display(),
                        )));
                    }
                }
            }
        }
    }
    Ok(CrossCheckReport {
        seeds_checked: seeds.len(),
        depths_checked: d_max,
        entries_compared: entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog::{cyclic, direct_product, example1, example2};
    use crate::classes::decompose;
    use crate::transition::{build_transition, TransitionBudget};

    fn code_of(symbols: &[usize]) -> u64 {
        TupleCode::from_symbols_1based(symbols).unwrap().code()
    }

    #[test]
    fn depth_zero_enumeration_is_the_seed() {
        let g = example2();
        let seed = TupleCode::from_symbols_1based(&[4, 2, 2, 1]).unwrap();
        let counts = enumerate_diagonals(&g, &seed, 0, &OracleBudget::default()).unwrap();
        assert_eq!(counts.len(), 1);
        assert_eq!(counts[&seed.code()], 1);
    }

    #[test]
    fn depth_one_from_identity_on_order_two() {
        let g = example1();
        let seed = TupleCode::identity_permutation(2);
        let counts = enumerate_diagonals(&g, &seed, 1, &OracleBudget::default()).unwrap();
        assert_eq!(counts[&code_of(&[1, 1])], 1);
        assert_eq!(counts[&code_of(&[2, 2])], 1);
        assert_eq!(counts.len(), 2);
    }

    #[test]
    fn klein_identity_step_reaches_eight_permutations() {
        let klein = direct_product(&cyclic(2), &cyclic(2));
        let seed = TupleCode::identity_permutation(4);
        let counts = enumerate_diagonals(&klein, &seed, 1, &OracleBudget::default()).unwrap();
        let perm_mass: u64 = counts
            .iter()
            .filter(|(&code, _)| TupleCode::from_code(4, code).is_permutation())
            .map(|(_, &c)| c)
            .sum();
        assert_eq!(perm_mass, 8);
    }

    #[test]
    fn totals_equal_factorial_powers() {
        let g = cyclic(3);
        let seed = TupleCode::from_symbols_1based(&[2, 2, 3]).unwrap();
        for d in 0..5u32 {
            let counts = enumerate_diagonals(&g, &seed, d, &OracleBudget::default()).unwrap();
            let total: u64 = counts.values().sum();
            assert_eq!(total, 6u64.pow(d));
        }
    }

    #[test]
    fn budget_guards_depth_and_order() {
        let g = cyclic(4);
        let tight = OracleBudget {
            max_collections: 100,
            time_limit: Duration::from_secs(60),
        };
        assert!(
            enumerate_diagonals(&g, &TupleCode::identity_permutation(4), 2, &tight)
                .unwrap_err()
                .is_budget()
        );

        let big = cyclic(11);
        assert!(enumerate_diagonals(
            &big,
            &TupleCode::identity_permutation(11),
            1,
            &OracleBudget::default()
        )
        .unwrap_err()
        .is_budget());
    }

    #[test]
    fn witness_round_trip_and_corruption() {
        let g = example1();
        let w = DiagonalWitness {
            seed: TupleCode::from_symbols_1based(&[1, 1]).unwrap(),
            steps: vec![Permutation::from_symbols_1based(&[1, 2]).unwrap()],
            result: TupleCode::from_symbols_1based(&[1, 2]).unwrap(),
        };
        assert!(verify_witness(&g, &w));

        let empty = DiagonalWitness {
            seed: w.seed.clone(),
            steps: vec![],
            result: w.seed.clone(),
        };
        assert!(verify_witness(&g, &empty));

        let corrupted = DiagonalWitness {
            result: TupleCode::from_symbols_1based(&[2, 2]).unwrap(),
            ..w.clone()
        };
        assert!(!verify_witness(&g, &corrupted));
    }

    #[test]
    fn witness_census_counts_match_plain_enumeration() {
        let g = example2();
        let seed = TupleCode::from_symbols_1based(&[3, 1, 2, 2]).unwrap();
        let budget = OracleBudget::default();
        let plain = enumerate_diagonals(&g, &seed, 2, &budget).unwrap();
        let with_witnesses = witness_census(&g, &seed, 2, &budget).unwrap();
        assert_eq!(plain.len(), with_witnesses.len());
        for (code, (count, witness)) in &with_witnesses {
            assert_eq!(plain[code], *count);
            assert!(verify_witness(&g, witness));
            assert_eq!(witness.result.code(), *code);
        }
    }

    #[test]
    fn witness_concatenation() {
        let g = cyclic(3);
        let all = witness_census(
            &g,
            &TupleCode::identity_permutation(3),
            2,
            &OracleBudget::default(),
        )
        .unwrap();
        let (_, first) = all.values().next().unwrap().clone();
        let second = reduce_to_canonical(&g, &first.result, 2, 0).unwrap();
        let joined = DiagonalWitness::concat(&first, &second).unwrap();
        assert!(verify_witness(&g, &joined));
        assert_eq!(joined.len(), first.len() + second.len());
    }

    #[test]
    fn canonical_reduction_on_already_canonical_tuple() {
        let g = example2();
        let v = TupleCode::from_symbols_1based(&[1, 1, 3, 1]).unwrap();
        let w = reduce_to_canonical(&g, &v, 1, 2).unwrap();
        assert!(w.is_empty());
        assert_eq!(w.result, v);
    }

    #[test]
    fn canonical_reduction_on_example2() {
        let g = example2();
        let v = TupleCode::from_symbols_1based(&[1, 1, 3, 4]).unwrap();
        let w = reduce_to_canonical(&g, &v, 1, 3).unwrap();
        assert!(verify_witness(&g, &w));
        assert!(w.len().is_multiple_of(2) && w.len() <= 8);
        for (j, &x) in w.result.digits().iter().enumerate() {
            if j != 3 {
                assert_eq!(x, 0);
            }
        }
    }

    #[test]
    fn group_reduction_lands_on_product_tuple() {
        let g = cyclic(3);
        let v = TupleCode::from_symbols_1based(&[2, 3, 1]).unwrap();
        let w = reduce_to_canonical_group(&g, &v).unwrap();
        assert!(verify_witness(&g, &w));
        let pi = pi_product(&g, v.digits()).unwrap();
        assert_eq!(w.result.digits()[0], pi);
        for &x in &w.result.digits()[1..] {
            assert_eq!(x, 0);
        }
    }

    #[test]
    fn group_reduction_rejects_non_groups() {
        let g = example2();
        let v = TupleCode::from_symbols_1based(&[1, 2, 3, 4]).unwrap();
        assert!(reduce_to_canonical_group(&g, &v).is_err());
    }

    #[test]
    fn cross_check_small_orders() {
        for g in [cyclic(2), cyclic(3)] {
            let t = build_transition(&g, &TransitionBudget::default()).unwrap();
            let d = decompose(&t).unwrap();
            let n = g.order();
            let seeds: Vec<TupleCode> = (0..t.tuple_count() as u64)
                .map(|c| TupleCode::from_code(n, c))
                .collect();
            let report = cross_check(&g, &t, &d, &seeds, 3, &OracleBudget::default()).unwrap();
            assert_eq!(report.seeds_checked, t.tuple_count());
        }
    }
}
