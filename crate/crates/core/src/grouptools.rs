//! Group and loop invariants: the abelianization congruence and commutator
//! subloop, the Hall-Paige condition, the Denes-Hermann alternative for the
//! product of all elements, and the factorization sets `P^k`.

use serde::Serialize;

use crate::algebra::{structure_probe, CayleyTable};
use crate::error::{Error, Result};

/// Outcome of the group-level analysis of a loop.
#[derive(Debug, Clone, Serialize)]
pub struct GroupAnalysis {
    pub is_group: bool,
    /// 1-based identity element.
    pub identity: usize,
    /// The commutator subloop, as sorted 1-based symbols. This is the
    /// congruence class of the identity under the abelianization congruence.
    pub commutator: Vec<usize>,
    /// Cosets of the commutator subloop, each sorted, ordered by smallest
    /// member; the identity coset comes first.
    pub cosets: Vec<Vec<usize>>,
    /// `a` with `2^a` the exact power of two dividing the order.
    pub sylow2_valuation: u32,
    /// Whether every Sylow 2-subgroup is trivial or non-cyclic. Groups only.
    pub hall_paige: Option<bool>,
    /// For a group failing the condition: the unique involution of a cyclic
    /// Sylow 2-subgroup, 1-based.
    pub involution: Option<usize>,
}

impl GroupAnalysis {
    pub fn commutator_size(&self) -> usize {
        self.commutator.len()
    }

    pub fn commutator_contains(&self, symbol_1based: usize) -> bool {
        self.commutator.binary_search(&symbol_1based).is_ok()
    }

    /// Index of the coset containing a 1-based symbol.
    pub fn coset_of(&self, symbol_1based: usize) -> usize {
        self.cosets
            .iter()
            .position(|c| c.binary_search(&symbol_1based).is_ok())
            .expect("cosets partition the symbol set")
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns true when the union changed anything.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}

/// Computes the smallest congruence of a loop whose quotient is an abelian
/// group, by closing commutativity and associativity pairs under the
/// congruence property. The class of the identity is the commutator subloop
/// and the classes are its cosets.
pub fn abelianization(g: &CayleyTable) -> Result<GroupAnalysis> {
    let probe = structure_probe(g);
    let Some(identity) = probe.identity else {
        return Err(Error::NotALoop);
    };
    let n = g.order();
    let mut uf = UnionFind::new(n);

    // Seed with x*y ~ y*x and (x*y)*z ~ x*(y*z).
    for x in 0..n as u8 {
        for y in 0..n as u8 {
            uf.union(g.op(x, y) as usize, g.op(y, x) as usize);
            for z in 0..n as u8 {
                uf.union(g.op(g.op(x, y), z) as usize, g.op(x, g.op(y, z)) as usize);
            }
        }
    }
    // Close under a ~ a', b ~ b'  =>  a*b ~ a'*b'. It suffices to merge
    // products that differ in one argument by an equivalent element.
    let mut changed = true;
    while changed {
        changed = false;
        for a in 0..n {
            for a2 in a + 1..n {
                if uf.find(a) != uf.find(a2) {
                    continue;
                }
                for b in 0..n as u8 {
                    changed |= uf.union(g.op(a as u8, b) as usize, g.op(a2 as u8, b) as usize);
                    changed |= uf.union(g.op(b, a as u8) as usize, g.op(b, a2 as u8) as usize);
                }
            }
        }
    }

    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); n];
    for x in 0..n {
        classes[uf.find(x)].push(x + 1);
    }
    let mut cosets: Vec<Vec<usize>> = classes.into_iter().filter(|c| !c.is_empty()).collect();
    cosets.sort();
    let commutator = cosets
        .iter()
        .find(|c| c.binary_search(&identity).is_ok())
        .expect("identity belongs to some class")
        .clone();
    // Identity coset first, the rest stay ordered by smallest member.
    cosets.sort_by_key(|c| (c != &commutator, c[0]));

    let k = commutator.len();
    if !n.is_multiple_of(k) || cosets.iter().any(|c| c.len() != k) {
        return Err(Error::internal(
            "abelianization classes are not equal-sized cosets",
        ));
    }

    let sylow2_valuation = (n as u64).trailing_zeros();
    let mut analysis = GroupAnalysis {
        is_group: probe.is_group,
        identity,
        commutator,
        cosets,
        sylow2_valuation,
        hall_paige: None,
        involution: None,
    };
    if probe.is_group {
        let (hp, invol) = hall_paige_flag(g, identity, sylow2_valuation);
        analysis.hall_paige = Some(hp);
        analysis.involution = invol;
    }
    Ok(analysis)
}

/// Multiplicative order of a 0-based element in a group.
fn element_order(g: &CayleyTable, identity0: u8, x: u8) -> u32 {
    let mut acc = x;
    let mut ord = 1;
    while acc != identity0 {
        acc = g.op(acc, x);
        ord += 1;
    }
    ord
}

fn hall_paige_flag(g: &CayleyTable, identity: usize, a: u32) -> (bool, Option<usize>) {
    if a == 0 {
        return (true, None);
    }
    let e0 = (identity - 1) as u8;
    let target = 1u32 << a;
    // A Sylow 2-subgroup is cyclic exactly when some element has the full
    // 2-power order 2^a; its power of order two is then the involution.
    for x in 0..g.order() as u8 {
        if element_order(g, e0, x) == target {
            let mut invol = x;
            for _ in 0..(target / 2 - 1) {
                invol = g.op(invol, x);
            }
            return (false, Some(invol as usize + 1));
        }
    }
    (true, None)
}

/// Decides the Hall-Paige condition for a group: true iff the order is odd
/// or no element realizes the full 2-power part of the order. On failure the
/// witnessing involution is returned (1-based).
pub fn hall_paige_check(g: &CayleyTable) -> Result<(bool, Option<usize>)> {
    let probe = structure_probe(g);
    if !probe.is_group {
        return Err(Error::NotAGroup("hall_paige_check".into()));
    }
    let identity = probe.identity.expect("groups are loops");
    let a = (g.order() as u64).trailing_zeros();
    Ok(hall_paige_flag(g, identity, a))
}

/// Which side of the product-of-all-elements alternative holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProductSetMatch {
    /// `P(G)` equals the commutator subgroup.
    Commutator,
    /// `P(G)` equals the involution coset `g G'`.
    InvolutionCoset,
}

#[derive(Debug, Clone, Serialize)]
pub struct DenesHermannReport {
    /// The set `P(G)` of products of all group elements over every ordering,
    /// sorted, 1-based.
    pub p1: Vec<usize>,
    pub matches: ProductSetMatch,
}

/// Computes `P(G)` for a group by enumerating all orderings of the element
/// list (bracketing is irrelevant in a group) and verifies it equals either
/// the commutator subgroup or the involution coset, consistent with the
/// Hall-Paige check. A mismatch would contradict a theorem and is reported
/// as an internal error.
pub fn denes_hermann_check(
    g: &CayleyTable,
    analysis: &GroupAnalysis,
) -> Result<DenesHermannReport> {
    if !analysis.is_group {
        return Err(Error::NotAGroup("denes_hermann_check".into()));
    }
    let n = g.order();
    const MAX_ORDER: usize = 10;
    if n > MAX_ORDER {
        return Err(Error::budget(
            "ordering enumeration",
            format!("{n}! products"),
            format!("order <= {MAX_ORDER}"),
        ));
    }

    let mut seen = vec![false; n];
    // Heap's algorithm over the element list; track the running product per
    // prefix would not survive the swaps, so fold each ordering directly.
    let mut elems: Vec<u8> = (0..n as u8).collect();
    let mut stack = vec![0usize; n];
    let fold = |elems: &[u8]| elems[1..].iter().fold(elems[0], |acc, &x| g.op(acc, x)) as usize;
    seen[fold(&elems)] = true;
    let mut i = 1;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                elems.swap(0, i);
            } else {
                elems.swap(stack[i], i);
            }
            seen[fold(&elems)] = true;
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }

    let p1: Vec<usize> = (0..n).filter(|&x| seen[x]).map(|x| x + 1).collect();
    let hall_paige = analysis.hall_paige.expect("analysis of a group");
    let expected: Vec<usize> = if hall_paige {
        analysis.commutator.clone()
    } else {
        let invol = analysis.involution.expect("non-Hall-Paige involution") as u8 - 1;
        let mut coset: Vec<usize> = analysis
            .commutator
            .iter()
            .map(|&h| g.op(invol, (h - 1) as u8) as usize + 1)
            .collect();
        coset.sort();
        coset
    };
    if p1 != expected {
        return Err(Error::internal(format!(
            "product set {:?} does not match the predicted coset {:?}",
            p1, expected
        )));
    }
    Ok(DenesHermannReport {
        p1,
        matches: if hall_paige {
            ProductSetMatch::Commutator
        } else {
            ProductSetMatch::InvolutionCoset
        },
    })
}

/// The sets `P^1(G), ..., P^k(G)` of elements expressible as a product, in
/// any order and bracketing, using every element exactly `k` times.
#[derive(Debug, Clone, Serialize)]
pub struct PowerProfile {
    /// `p_sets[k - 1]` is `P^k(G)`, sorted 1-based symbols.
    pub p_sets: Vec<Vec<usize>>,
    /// Union of all computed `P^k`.
    pub p_infinity: Vec<usize>,
    /// True when the top of the computed range repeated for both parities,
    /// i.e. `P^k = P^{k-2}` held at `k_max` and `k_max - 1`.
    pub stabilized: bool,
    pub k_max: u32,
}

/// Cost guards for the sub-multiset dynamic program behind [`power_sets`].
#[derive(Debug, Clone, Copy)]
pub struct PowerBudget {
    pub max_states: u64,
    pub max_split_ops: u64,
}

impl Default for PowerBudget {
    fn default() -> Self {
        PowerBudget {
            max_states: 1 << 24,
            max_split_ops: 2_000_000_000,
        }
    }
}

/// Default `k_max` for [`power_sets`]: twice the order.
pub fn default_k_max(n: usize) -> u32 {
    (2 * n) as u32
}

/// Computes `P^k` for `k = 1..=k_max` by dynamic programming over
/// sub-multisets of the multiset holding every element `k_max` times.
///
/// A multiset is achievable-set-valued: the singletons seed the recursion
/// and a larger multiset takes the union of `achievable(M1) * achievable(M2)`
/// over all proper ordered splits. This enumerates exactly the values of all
/// ordered, arbitrarily bracketed products, without the factorial blowup.
pub fn power_sets(g: &CayleyTable, k_max: u32, budget: &PowerBudget) -> Result<PowerProfile> {
    let n = g.order();
    if k_max == 0 {
        return Err(Error::InvalidParameter("k_max must be at least 1".into()));
    }
    if n > 16 {
        return Err(Error::budget(
            "factorization-set DP",
            format!("order {n}"),
            "order <= 16",
        ));
    }
    let radix = k_max as u64 + 1;
    let states = radix
        .checked_pow(n as u32)
        .ok_or_else(|| Error::budget("factorization-set DP", "2^64 states", budget.max_states))?;
    if states > budget.max_states {
        return Err(Error::budget(
            "factorization-set DP",
            format!("{states} states"),
            budget.max_states,
        ));
    }
    // Each state of digit vector c costs prod(c_i + 1) split products.
    let per_digit = radix * (radix + 1) / 2;
    let split_ops = (0..n).try_fold(1u64, |acc, _| acc.checked_mul(per_digit));
    match split_ops {
        Some(ops) if ops <= budget.max_split_ops => {}
        _ => {
            return Err(Error::budget(
                "factorization-set DP",
                split_ops.map_or("2^64 split products".into(), |o| {
                    format!("{o} split products")
                }),
                budget.max_split_ops,
            ))
        }
    }

    // Achievable-value bitmask per multiset state, indexed in base `radix`
    // with digit i counting copies of element i.
    let mut table = vec![0u32; states as usize];
    let pow: Vec<u64> = (0..n).map(|i| radix.pow(i as u32)).collect();
    for i in 0..n {
        table[pow[i] as usize] = 1 << i;
    }
    // Element-by-set product images: img[a][mask] = { a * b : b in mask }.
    let full = (1u64 << n) as usize;
    let mut img = vec![0u32; n * full];
    for a in 0..n {
        for mask in 1..full {
            let low = mask.trailing_zeros() as usize;
            img[a * full + mask] =
                img[a * full + (mask & (mask - 1))] | (1 << g.op(a as u8, low as u8));
        }
    }
    let mul_sets = |x: u32, y: u32| -> u32 {
        let mut acc = 0u32;
        let mut rest = x;
        while rest != 0 {
            let a = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            acc |= img[a * full + y as usize];
        }
        acc
    };

    // Enumerate states in an order where every proper sub-multiset comes
    // first: by total count. Buckets are built once.
    let mut digits = vec![0u32; n];
    let total_of = |mut s: u64, radix: u64| -> u32 {
        let mut t = 0;
        while s > 0 {
            t += (s % radix) as u32;
            s /= radix;
        }
        t
    };
    let max_total = k_max * n as u32;
    let mut buckets: Vec<Vec<u64>> = vec![Vec::new(); max_total as usize + 1];
    for s in 0..states {
        buckets[total_of(s, radix) as usize].push(s);
    }

    for total in 2..=max_total {
        for &s in &buckets[total as usize] {
            let mut v = s;
            for d in digits.iter_mut() {
                *d = (v % radix) as u32;
                v /= radix;
            }
            // Odometer over proper nonempty sub-multisets m1 of s.
            let mut sub = vec![0u32; n];
            let mut acc = 0u32;
            loop {
                // Advance the odometer.
                let mut i = 0;
                loop {
                    if i == n {
                        break;
                    }
                    if sub[i] < digits[i] {
                        sub[i] += 1;
                        break;
                    }
                    sub[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
                let m1: u64 = sub
                    .iter()
                    .enumerate()
                    .map(|(j, &c)| c as u64 * pow[j])
                    .sum();
                if m1 == s {
                    continue; // improper
                }
                let m2 = s - m1;
                let (x, y) = (table[m1 as usize], table[m2 as usize]);
                if x != 0 && y != 0 {
                    acc |= mul_sets(x, y);
                }
            }
            table[s as usize] = acc;
        }
    }

    let full_state = |k: u64| -> u64 { (0..n).map(|i| k * pow[i]).sum() };
    let mask_to_symbols = |mask: u32| -> Vec<usize> {
        (0..n)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| i + 1)
            .collect()
    };
    let masks: Vec<u32> = (1..=k_max as u64)
        .map(|k| table[full_state(k) as usize])
        .collect();
    let p_sets: Vec<Vec<usize>> = masks.iter().map(|&m| mask_to_symbols(m)).collect();
    let union = masks.iter().fold(0u32, |a, &m| a | m);
    let stabilized = k_max >= 4
        && masks[(k_max - 1) as usize] == masks[(k_max - 3) as usize]
        && masks[(k_max - 2) as usize] == masks[(k_max - 4) as usize];
    Ok(PowerProfile {
        p_sets,
        p_infinity: mask_to_symbols(union),
        stabilized,
        k_max,
    })
}
