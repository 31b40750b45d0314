//! Decomposition of the tuple space into equivalence classes, periods, and
//! units, plus the structural checks that the decomposition of a valid
//! transition matrix must satisfy.
//!
//! The support digraph of a doubly stochastic pattern splits into strongly
//! connected blocks with no edges between them; each block has a period
//! `tau` and splits into `tau` units that one multiplication step advances
//! cyclically. Unit sizes are always `r * n^(n-1)` for an integer
//! `1 <= r <= n`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{
    all_permutations, coordinate_action, pi_product, CayleyTable, Permutation, TupleCode,
};
use crate::error::{Error, Result};
use crate::grouptools::GroupAnalysis;
use crate::num::factorial_big;
use crate::transition::{propagate_step, CountVector, TransitionMatrix};
use crate::Ratio;

/// One irreducible block of the transition pattern.
#[derive(Debug, Clone)]
pub struct EquivalenceClass {
    pub id: u32,
    /// Member codes, ascending.
    pub members: Vec<u32>,
    pub period: u32,
    /// `units[k]` are the member codes at residue `k`, ascending; one
    /// multiplication step maps unit `k` into unit `k + 1 (mod period)`.
    /// Unit 0 holds the identity permutation when the class contains it,
    /// otherwise the smallest member code.
    pub units: Vec<Vec<u32>>,
    /// Unit size divided by `n^(n-1)`.
    pub r: u32,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn unit_size(&self) -> usize {
        self.units[0].len()
    }

    pub fn contains(&self, code: u64) -> bool {
        self.members.binary_search(&(code as u32)).is_ok()
    }
}

/// Partition of all `n^n` tuples into classes and units.
#[derive(Debug, Clone)]
pub struct ClassDecomposition {
    n: usize,
    classes: Vec<EquivalenceClass>,
    /// `(class id, unit id)` per tuple code.
    tuple_index: Vec<(u32, u32)>,
}

impl ClassDecomposition {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    #[inline]
    pub fn class_of(&self, code: u64) -> u32 {
        self.tuple_index[code as usize].0
    }

    #[inline]
    pub fn unit_of(&self, code: u64) -> u32 {
        self.tuple_index[code as usize].1
    }

    pub fn class(&self, id: u32) -> &EquivalenceClass {
        &self.classes[id as usize]
    }

    /// The class containing the identity permutation.
    pub fn permutation_class(&self) -> &EquivalenceClass {
        let w = TupleCode::identity_permutation(self.n);
        self.class(self.class_of(w.code()))
    }

    /// `n^(n-1)` as a machine word; valid for the orders a matrix can have.
    pub fn unit_quantum(&self) -> u64 {
        (self.n as u64).pow(self.n as u32 - 1)
    }

    pub fn summary(
        &self,
        g: &CayleyTable,
        analysis: Option<&GroupAnalysis>,
    ) -> DecompositionSummary {
        let n = self.n;
        let classes = self
            .classes
            .iter()
            .map(|class| {
                let contains_permutations = {
                    let w = TupleCode::identity_permutation(n).code();
                    class.contains(w)
                };
                let contains_constants = class.contains(0);
                let pi_cosets = analysis.filter(|a| a.is_group).map(|_| {
                    class
                        .units
                        .iter()
                        .map(|unit| {
                            let mut vals: Vec<usize> = unit
                                .iter()
                                .map(|&code| {
                                    let t = TupleCode::from_code(n, code as u64);
                                    pi_product(g, t.digits()).unwrap() as usize + 1
                                })
                                .collect();
                            vals.sort_unstable();
                            vals.dedup();
                            vals
                        })
                        .collect()
                });
                ClassSummary {
                    id: class.id,
                    size: class.size(),
                    period: class.period,
                    r: class.r,
                    unit_sizes: class.units.iter().map(|u| u.len()).collect(),
                    contains_permutations,
                    contains_constants,
                    pi_cosets,
                }
            })
            .collect();
        DecompositionSummary {
            order: n,
            tuple_count: self.tuple_index.len(),
            class_count: self.classes.len(),
            classes,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassSummary {
    pub id: u32,
    pub size: usize,
    pub period: u32,
    pub r: u32,
    pub unit_sizes: Vec<usize>,
    pub contains_permutations: bool,
    pub contains_constants: bool,
    /// Distinct products-of-entries per unit, 1-based; groups only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pi_cosets: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSummary {
    pub order: usize,
    pub tuple_count: usize,
    pub class_count: usize,
    pub classes: Vec<ClassSummary>,
}

/// Iterative Tarjan over the CSR pattern.
fn strongly_connected_components(t: &TransitionMatrix) -> Vec<u32> {
    let size = t.tuple_count();
    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; size];
    let mut lowlink = vec![0u32; size];
    let mut on_stack = vec![false; size];
    let mut comp = vec![UNSEEN; size];
    let mut stack: Vec<u32> = Vec::new();
    let mut next_index = 0u32;
    let mut comp_count = 0u32;
    // DFS frames: (node, iterator position into its row).
    let mut frames: Vec<(u32, u32)> = Vec::new();

    for start in 0..size as u32 {
        if index[start as usize] != UNSEEN {
            continue;
        }
        frames.push((start, 0));
        index[start as usize] = next_index;
        lowlink[start as usize] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start as usize] = true;

        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            let (codes, _) = t.row(v as u64);
            if (*pos as usize) < codes.len() {
                let w = codes[*pos as usize];
                *pos += 1;
                if index[w as usize] == UNSEEN {
                    index[w as usize] = next_index;
                    lowlink[w as usize] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    frames.push((w, 0));
                } else if on_stack[w as usize] {
                    lowlink[v as usize] = lowlink[v as usize].min(index[w as usize]);
                }
            } else {
                frames.pop();
                if let Some(&mut (parent, _)) = frames.last_mut() {
                    lowlink[parent as usize] = lowlink[parent as usize].min(lowlink[v as usize]);
                }
                if lowlink[v as usize] == index[v as usize] {
                    loop {
                        let w = stack.pop().expect("scc stack underflow");
                        on_stack[w as usize] = false;
                        comp[w as usize] = comp_count;
                        if w == v {
                            break;
                        }
                    }
                    comp_count += 1;
                }
            }
        }
    }
    comp
}

/// Union-find over edges, giving weakly connected components.
fn weak_components(t: &TransitionMatrix) -> Vec<u32> {
    let size = t.tuple_count();
    let mut parent: Vec<u32> = (0..size as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    for u in 0..size as u64 {
        let (codes, _) = t.row(u);
        let ru = find(&mut parent, u as u32);
        for &v in codes {
            let rv = find(&mut parent, v);
            if ru != rv {
                parent[rv as usize] = ru;
            }
        }
    }
    (0..size as u32).map(|x| find(&mut parent, x)).collect()
}

/// Decomposes the support digraph into equivalence classes with periods and
/// units.
///
/// Classes are the strongly connected components; for a doubly stochastic
/// pattern these must coincide with the weakly connected components, and a
/// disagreement aborts with an internal error since it means the matrix was
/// not doubly stochastic to begin with. Periods come from the gcd of level
/// differences along edges of a BFS from each class anchor; units are the
/// residues of those levels, rotated so that the identity permutation sits
/// in unit 0 of its class.
pub fn decompose(t: &TransitionMatrix) -> Result<ClassDecomposition> {
    let n = t.order();
    let size = t.tuple_count();
    let scc = strongly_connected_components(t);

    let weak = weak_components(t);
    // Partitions agree iff the scc labels and weak labels induce the same
    // blocks; compare via representative mapping both ways.
    {
        let mut scc_to_weak = vec![u32::MAX; size];
        let mut weak_to_scc = vec![u32::MAX; size];
        for i in 0..size {
            let (s, w) = (scc[i] as usize, weak[i] as usize);
            if scc_to_weak[s] == u32::MAX {
                scc_to_weak[s] = weak[i];
            } else if scc_to_weak[s] != weak[i] {
                return Err(Error::internal(
                    "strong and weak components disagree; the pattern is not doubly stochastic",
                ));
            }
            if weak_to_scc[w] == u32::MAX {
                weak_to_scc[w] = scc[i];
            } else if weak_to_scc[w] != scc[i] {
                return Err(Error::internal(
                    "strong and weak components disagree; the pattern is not doubly stochastic",
                ));
            }
        }
    }

    // Gather members per scc label, then order classes by smallest member.
    let mut label_members: Vec<Vec<u32>> = Vec::new();
    let mut label_of: Vec<u32> = vec![u32::MAX; size];
    {
        let mut remap: Vec<u32> = vec![u32::MAX; size];
        for code in 0..size as u32 {
            let raw = scc[code as usize];
            if remap[raw as usize] == u32::MAX {
                remap[raw as usize] = label_members.len() as u32;
                label_members.push(Vec::new());
            }
            let label = remap[raw as usize];
            label_of[code as usize] = label;
            label_members[label as usize].push(code);
        }
    }
    // Members were pushed in ascending code order; first-encounter labeling
    // already orders classes by smallest member.

    let quantum = (n as u64).pow(n as u32 - 1);
    let w_code = TupleCode::identity_permutation(n).code() as u32;

    let mut classes = Vec::with_capacity(label_members.len());
    let mut tuple_index = vec![(0u32, 0u32); size];
    let mut level = vec![0i64; size];

    for (label, members) in label_members.iter().enumerate() {
        let anchor = if label_of[w_code as usize] as usize == label {
            w_code
        } else {
            members[0]
        };
        // BFS levels from the anchor; all out-edges stay inside the class.
        let mut queue = std::collections::VecDeque::new();
        let mut seen = vec![false; members.len()];
        let pos_of = |code: u32| members.binary_search(&code).expect("edge stays in class");
        queue.push_back(anchor);
        seen[pos_of(anchor)] = true;
        level[anchor as usize] = 0;
        while let Some(u) = queue.pop_front() {
            let (codes, _) = t.row(u as u64);
            for &v in codes {
                let p = pos_of(v);
                if !seen[p] {
                    seen[p] = true;
                    level[v as usize] = level[u as usize] + 1;
                    queue.push_back(v);
                }
            }
        }
        // Period: gcd of (level(u) + 1 - level(v)) over all edges.
        let mut g: i64 = 0;
        for &u in members {
            let (codes, _) = t.row(u as u64);
            for &v in codes {
                g = g.gcd(&(level[u as usize] + 1 - level[v as usize]));
            }
        }
        let period = g.abs().max(1) as u32;

        let mut units: Vec<Vec<u32>> = vec![Vec::new(); period as usize];
        for &code in members {
            let residue = level[code as usize].rem_euclid(period as i64) as u32;
            units[residue as usize].push(code);
            tuple_index[code as usize] = (label as u32, residue);
        }

        let unit_size = units[0].len();
        if units.iter().any(|u| u.len() != unit_size) {
            return Err(Error::internal(format!(
                "units of class {label} have unequal sizes"
            )));
        }
        let (r, rem) = (unit_size as u64).div_rem(&quantum);
        if rem != 0 || r < 1 || r > n as u64 {
            return Err(Error::internal(format!(
                "unit size {unit_size} is not r * n^(n-1) with 1 <= r <= {n}"
            )));
        }

        classes.push(EquivalenceClass {
            id: label as u32,
            members: members.clone(),
            period,
            units,
            r: r as u32,
        });
    }

    Ok(ClassDecomposition {
        n,
        classes,
        tuple_index,
    })
}

/// Per-unit census of the set `V_j^* = { V with coordinate j replaced }`.
///
/// Within one class every unit must contain the same number of these tuples,
/// and that number must be the class's `r`; a contradiction is an internal
/// error.
pub fn unit_census(d: &ClassDecomposition, v: &TupleCode, j: usize) -> Result<Vec<Vec<u32>>> {
    let n = d.order();
    if v.n() != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: v.n(),
        });
    }
    if j >= n {
        return Err(Error::InvalidParameter(format!(
            "coordinate {j} out of range for order {n}"
        )));
    }
    let mut census: Vec<Vec<u32>> = d
        .classes()
        .iter()
        .map(|c| vec![0u32; c.period as usize])
        .collect();
    for b in 0..n as u8 {
        let code = v.with_coordinate(j, b).code();
        let (class, unit) = (d.class_of(code), d.unit_of(code));
        census[class as usize][unit as usize] += 1;
    }
    for (class, counts) in d.classes().iter().zip(&census) {
        if counts.iter().any(|&c| c != class.r) {
            return Err(Error::internal(format!(
                "census of class {} is {:?}, expected uniform {}",
                class.id, counts, class.r
            )));
        }
    }
    Ok(census)
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureReport {
    /// Tuple/permutation pairs checked for unit closure under coordinate
    /// permutations, and whether the check was exhaustive.
    pub coordinate_closure_pairs: u64,
    pub coordinate_closure_exhaustive: bool,
    /// Period of the class holding permutations and constants.
    pub permutation_class_period: u32,
    /// Canonical-form tuples verified present in every unit.
    pub canonical_tuples_checked: u64,
}

/// Verifies the closure properties of a decomposition:
///
/// (a) every unit is closed under coordinate permutations (exhaustive up to
///     order 4, sampled above);
/// (b) all permutations and all constant tuples share one class, whose
///     period is at most 2, with permutations in a single unit;
/// (c) every unit contains a tuple that is constant except at one
///     coordinate, for every (value, coordinate) pair.
pub fn closure_checks(d: &ClassDecomposition, g: &CayleyTable, seed: u64) -> Result<ClosureReport> {
    let n = g.order();

    // (a) coordinate closure.
    let mut pairs = 0u64;
    let exhaustive = n <= 4;
    if exhaustive {
        let perms = all_permutations(n);
        for code in 0..d.tuple_index.len() as u64 {
            let v = TupleCode::from_code(n, code);
            let home = d.tuple_index[code as usize];
            for pi in &perms {
                let moved = coordinate_action(&v, pi)?;
                pairs += 1;
                if d.tuple_index[moved.code() as usize] != home {
                    return Err(Error::internal(format!(
                        "unit not closed under coordinate permutation: {v:?} vs {moved:?}"
                    )));
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = d.tuple_index.len() as u64;
        for _ in 0..1000 {
            let code = rng.gen_range(0..size);
            let v = TupleCode::from_code(n, code);
            let mut image: Vec<u8> = (0..n as u8).collect();
            for i in (1..n).rev() {
                image.swap(i, rng.gen_range(0..=i));
            }
            let pi = Permutation::new(image).expect("shuffled identity is a permutation");
            let moved = coordinate_action(&v, &pi)?;
            pairs += 1;
            if d.tuple_index[moved.code() as usize] != d.tuple_index[code as usize] {
                return Err(Error::internal(format!(
                    "unit not closed under coordinate permutation: {v:?} vs {moved:?}"
                )));
            }
        }
    }

    // (b) permutations and constants co-classed, period <= 2, permutations
    // in one unit.
    let w = TupleCode::identity_permutation(n);
    let w_home = d.tuple_index[w.code() as usize];
    let class = d.class(w_home.0);
    if class.period > 2 {
        return Err(Error::internal(format!(
            "permutation class has period {}",
            class.period
        )));
    }
    for pi in all_permutations(n) {
        if d.tuple_index[pi.as_tuple().code() as usize] != w_home {
            return Err(Error::internal(
                "not all permutations share the identity permutation's unit",
            ));
        }
    }
    for a in 0..n as u8 {
        let c = TupleCode::constant(n, a);
        if d.class_of(c.code()) != w_home.0 {
            return Err(Error::internal(
                "constant tuples do not share the permutation class",
            ));
        }
    }

    // (c) canonical tuples in every unit.
    let mut canonical_checked = 0u64;
    for a in 0..n as u8 {
        for j in 0..n {
            let base = TupleCode::constant(n, a);
            let mut present: Vec<Vec<bool>> = d
                .classes()
                .iter()
                .map(|c| vec![false; c.period as usize])
                .collect();
            for b in 0..n as u8 {
                let code = base.with_coordinate(j, b).code();
                present[d.class_of(code) as usize][d.unit_of(code) as usize] = true;
            }
            canonical_checked += n as u64;
            if present.iter().any(|units| units.iter().any(|&p| !p)) {
                return Err(Error::internal(format!(
                    "some unit misses every tuple constant {} off coordinate {}",
                    a + 1,
                    j + 1
                )));
            }
        }
    }

    Ok(ClosureReport {
        coordinate_closure_pairs: pairs,
        coordinate_closure_exhaustive: exhaustive,
        permutation_class_period: class.period,
        canonical_tuples_checked: canonical_checked,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupClassReport {
    pub class_count: usize,
    pub commutator_size: usize,
    pub hall_paige: bool,
    /// Common class size; for groups all classes are equal-sized.
    pub class_size: usize,
}

/// Verifies the coset description of classes and units for a group:
///
/// in the Hall-Paige case every class is a single unit and exactly the fiber
/// `{ V : product(V) in h G' }` of one coset; otherwise every class has two
/// units that are the fibers of `h g G'` and `h G'` respectively. Also checks
/// the `m = n / (tau * |G'|)` bookkeeping.
pub fn group_class_description(
    d: &ClassDecomposition,
    g: &CayleyTable,
    analysis: &GroupAnalysis,
) -> Result<GroupClassReport> {
    if !analysis.is_group {
        return Err(Error::NotAGroup("group_class_description".into()));
    }
    let n = g.order();
    let hall_paige = analysis.hall_paige.expect("groups carry the flag");
    let commutator_size = analysis.commutator_size();
    let quantum = d.unit_quantum();
    let expected_unit = commutator_size as u64 * quantum;

    let class_size = d.classes()[0].size();
    for class in d.classes() {
        if class.size() != class_size {
            return Err(Error::internal("group classes must be equal-sized"));
        }
        let expected_period = if hall_paige { 1 } else { 2 };
        if class.period != expected_period {
            return Err(Error::internal(format!(
                "class {} has period {}, expected {expected_period}",
                class.id, class.period
            )));
        }
        if class.r as usize != commutator_size {
            return Err(Error::internal(format!(
                "class {} has r = {}, expected |G'| = {commutator_size}",
                class.id, class.r
            )));
        }
        for unit in &class.units {
            if unit.len() as u64 != expected_unit {
                return Err(Error::internal(format!(
                    "unit size {} differs from |G'| n^(n-1) = {expected_unit}",
                    unit.len()
                )));
            }
            // Each unit must be exactly one coset fiber of the product map.
            let mut cosets: Vec<usize> = unit
                .iter()
                .map(|&code| {
                    let t = TupleCode::from_code(n, code as u64);
                    let p = pi_product(g, t.digits()).unwrap() as usize + 1;
                    analysis.coset_of(p)
                })
                .collect();
            cosets.dedup();
            if cosets.len() != 1 {
                return Err(Error::internal(format!(
                    "unit of class {} spans {} cosets",
                    class.id,
                    cosets.len()
                )));
            }
            // Fiber size of one coset is |G'| n^(n-1) = the unit size, so
            // containment plus the size match gives equality.
        }
        if !hall_paige {
            // The two units must be fibers of cosets differing by the
            // involution.
            let invol = (analysis.involution.expect("non-Hall-Paige group") - 1) as u8;
            let coset_rep = |unit: &Vec<u32>| -> u8 {
                let t = TupleCode::from_code(n, unit[0] as u64);
                pi_product(g, t.digits()).unwrap()
            };
            let (p0, p1) = (coset_rep(&class.units[0]), coset_rep(&class.units[1]));
            let shifted = g.op(invol, p1);
            if analysis.coset_of(p0 as usize + 1) != analysis.coset_of(shifted as usize + 1) {
                return Err(Error::internal(format!(
                    "units of class {} are not involution-shifted cosets",
                    class.id
                )));
            }
        }
    }

    let tau = if hall_paige { 1 } else { 2 };
    if d.class_count() * tau * commutator_size != n {
        return Err(Error::internal(format!(
            "class bookkeeping failed: {} classes * tau {} * |G'| {} != {}",
            d.class_count(),
            tau,
            commutator_size,
            n
        )));
    }

    Ok(GroupClassReport {
        class_count: d.class_count(),
        commutator_size,
        hall_paige,
        class_size,
    })
}

/// Outcome of the entrywise-product closure experiment on the permutation
/// class. For groups the class is closed (it is a subgroup of the direct
/// power); whether the same holds for general quasigroups is open, so the
/// experiment reports evidence instead of assuming an answer.
#[derive(Debug, Clone, Serialize)]
pub struct ProductClosureExperiment {
    pub pairs_checked: u64,
    pub exhaustive: bool,
    pub closed: bool,
    /// 1-based display of a violating pair, when one was found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<(String, String)>,
}

/// Scans pairs of permutation-class members for closure under the
/// entrywise product: exhaustively when the pair count fits `max_pairs`,
/// otherwise by seeded sampling.
pub fn permutation_class_product_closure(
    d: &ClassDecomposition,
    g: &CayleyTable,
    seed: u64,
    max_pairs: u64,
) -> ProductClosureExperiment {
    let n = g.order();
    let class = d.permutation_class();
    let members = &class.members;
    let in_class = |code: u64| d.class_of(code) == class.id;
    let product_code = |a: u32, b: u32| -> u64 {
        let (ta, tb) = (
            TupleCode::from_code(n, a as u64),
            TupleCode::from_code(n, b as u64),
        );
        crate::algebra::multiply_tuples(g, &ta, &tb)
            .expect("orders agree")
            .code()
    };

    let total = members.len() as u64 * members.len() as u64;
    let exhaustive = total <= max_pairs;
    let mut pairs_checked = 0u64;
    let mut counterexample = None;
    if exhaustive {
        'outer: for &a in members {
            for &b in members {
                pairs_checked += 1;
                if !in_class(product_code(a, b)) {
                    counterexample = Some((a, b));
                    break 'outer;
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..max_pairs {
            let a = members[rng.gen_range(0..members.len())];
            let b = members[rng.gen_range(0..members.len())];
            pairs_checked += 1;
            if !in_class(product_code(a, b)) {
                counterexample = Some((a, b));
                break;
            }
        }
    }
    ProductClosureExperiment {
        pairs_checked,
        exhaustive,
        closed: counterexample.is_none(),
        counterexample: counterexample.map(|(a, b)| {
            (
                TupleCode::from_code(n, a as u64).to_display(),
                TupleCode::from_code(n, b as u64).to_display(),
            )
        }),
    }
}

/// One row of the convergence table for a seed tuple.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub d: u32,
    /// `max over V in the reachable unit of |count(V)/n!^d - 1/unit_size|`.
    pub deviation: Ratio,
    /// Whether the support at this depth fills the whole predicted unit.
    pub support_full: bool,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// First depth whose support equals the predicted unit.
    pub empirical_d0: Option<u32>,
}

/// Tracks, for `d = 1..=d_max`, how far the exact distribution of
/// seed-diagonal counts is from the uniform limit on the reachable unit.
pub fn convergence_report(
    t: &TransitionMatrix,
    d: &ClassDecomposition,
    seed: &TupleCode,
    d_max: u32,
) -> Result<ConvergenceReport> {
    let n = t.order();
    if seed.n() != n {
        return Err(Error::OrderMismatch {
            left: n,
            right: seed.n(),
        });
    }
    let class = d.class(d.class_of(seed.code()));
    let seed_unit = d.unit_of(seed.code());
    let nf = factorial_big(n);

    let mut rows = Vec::with_capacity(d_max as usize);
    let mut empirical_d0 = None;
    let mut counts: CountVector<BigUint> = CountVector::unit(n, seed);
    let mut mass = BigUint::one();
    for depth in 1..=d_max {
        counts = propagate_step(t, &counts);
        mass *= &nf;
        let unit_idx = (seed_unit + depth) % class.period;
        let unit = &class.units[unit_idx as usize];
        let unit_size = BigUint::from(unit.len() as u64);

        // Everything reachable must stay in the predicted unit.
        let support = counts.support_size();
        let mut in_unit = 0usize;
        let mut max_dev = Ratio::zero();
        for &code in unit {
            let c = counts.entry(code as u64);
            if !c.is_zero() {
                in_unit += 1;
            }
            // |c / mass - 1 / unit_size| = |c * unit_size - mass| / (mass * unit_size)
            let scaled = c * &unit_size;
            let num = if scaled >= mass {
                &scaled - &mass
            } else {
                &mass - &scaled
            };
            let dev = Ratio::new(crate::Int::from(num), crate::Int::from(&mass * &unit_size));
            if dev > max_dev {
                max_dev = dev;
            }
        }
        if in_unit != support {
            return Err(Error::internal(format!(
                "support leaks outside the predicted unit at depth {depth}"
            )));
        }
        let support_full = in_unit == unit.len();
        if support_full && empirical_d0.is_none() {
            empirical_d0 = Some(depth);
        }
        rows.push(ConvergenceRow {
            d: depth,
            deviation: max_dev,
            support_full,
        });
    }
    Ok(ConvergenceReport { rows, empirical_d0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog::{block_from_tables, cyclic, direct_product, example1, example2};
    use crate::grouptools::abelianization;
    use crate::transition::{build_transition, matrix_from_raw_rows, TransitionBudget};

    fn decomposition_of(g: &CayleyTable) -> (TransitionMatrix, ClassDecomposition) {
        let t = build_transition(g, &TransitionBudget::default()).unwrap();
        let d = decompose(&t).unwrap();
        (t, d)
    }

    fn code_of(symbols: &[usize]) -> u64 {
        TupleCode::from_symbols_1based(symbols).unwrap().code()
    }

    #[test]
    fn order_two_example_has_one_class_of_period_two() {
        let (_, d) = decomposition_of(&example1());
        assert_eq!(d.class_count(), 1);
        let class = &d.classes()[0];
        assert_eq!(class.period, 2);
        assert_eq!(class.r, 1);
        // Unit 0 holds the permutations, unit 1 the constants.
        assert_eq!(
            class.units[0],
            vec![code_of(&[1, 2]) as u32, code_of(&[2, 1]) as u32]
        );
        assert_eq!(
            class.units[1],
            vec![code_of(&[1, 1]) as u32, code_of(&[2, 2]) as u32]
        );
    }

    #[test]
    fn klein_group_has_four_product_fiber_classes() {
        let klein = direct_product(&cyclic(2), &cyclic(2));
        let (_, d) = decomposition_of(&klein);
        assert_eq!(d.class_count(), 4);
        for class in d.classes() {
            assert_eq!(class.period, 1);
            assert_eq!(class.size(), 64);
            // Fiber of the product of entries.
            let products: Vec<u8> = class
                .members
                .iter()
                .map(|&code| {
                    let t = TupleCode::from_code(4, code as u64);
                    pi_product(&klein, t.digits()).unwrap()
                })
                .collect();
            assert!(products.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn example2_has_three_classes_with_periods_1_1_2() {
        let (_, d) = decomposition_of(&example2());
        assert_eq!(d.class_count(), 3);
        let mut periods: Vec<u32> = d.classes().iter().map(|c| c.period).collect();
        periods.sort_unstable();
        assert_eq!(periods, vec![1, 1, 2]);
        let sizes: Vec<usize> = d.classes().iter().map(|c| c.size()).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 256);
        for class in d.classes() {
            assert_eq!(class.unit_size() as u64, class.r as u64 * 64);
        }
    }

    #[test]
    fn strong_weak_disagreement_aborts() {
        // A pattern whose strong components are finer than its weak ones:
        // 0 -> 1, 1 -> 1. Such a matrix cannot come from a latin table.
        let bad = matrix_from_raw_rows(
            2,
            vec![vec![(1u32, 1u32)], vec![(1, 1)], vec![(2, 1)], vec![(3, 1)]],
            1,
        );
        let err = decompose(&bad).unwrap_err();
        assert!(err.is_internal());
    }

    #[test]
    fn census_of_order_two_example() {
        let (_, d) = decomposition_of(&example1());
        let v = TupleCode::from_symbols_1based(&[1, 2]).unwrap();
        let census = unit_census(&d, &v, 0).unwrap();
        assert_eq!(census, vec![vec![1, 1]]);
    }

    #[test]
    fn census_sums_to_class_intersection() {
        let (_, d) = decomposition_of(&cyclic(3));
        let v = TupleCode::from_symbols_1based(&[2, 3, 1]).unwrap();
        for j in 0..3 {
            let census = unit_census(&d, &v, j).unwrap();
            let total: u32 = census.iter().flatten().sum();
            assert_eq!(total, 3);
        }
    }

    #[test]
    fn klein_census_is_one_per_class() {
        let klein = direct_product(&cyclic(2), &cyclic(2));
        let (_, d) = decomposition_of(&klein);
        let v = TupleCode::from_symbols_1based(&[3, 1, 4, 2]).unwrap();
        for j in 0..4 {
            let census = unit_census(&d, &v, j).unwrap();
            assert_eq!(census, vec![vec![1]; 4]);
        }
    }

    #[test]
    fn closure_checks_pass_on_small_tables() {
        for g in [example1(), example2(), cyclic(3), cyclic(4)] {
            let (_, d) = decomposition_of(&g);
            let report = closure_checks(&d, &g, 7).unwrap();
            assert!(report.permutation_class_period <= 2);
            assert!(report.coordinate_closure_exhaustive);
        }
    }

    #[test]
    fn closure_checks_sample_at_order_five() {
        let g = cyclic(5);
        let (_, d) = decomposition_of(&g);
        let report = closure_checks(&d, &g, 7).unwrap();
        assert!(!report.coordinate_closure_exhaustive);
        assert_eq!(report.coordinate_closure_pairs, 1000);
    }

    #[test]
    fn cyclic_three_permutation_class_has_period_one() {
        let (_, d) = decomposition_of(&cyclic(3));
        assert_eq!(d.permutation_class().period, 1);
    }

    #[test]
    fn right_inverse_property_bounds_all_periods() {
        // Wherever the probe certifies the right inverse property, every
        // class period must be 1 or 2. Groups always qualify; the probe
        // decides for the quasigroups.
        let tables = [
            cyclic(4),
            cyclic(5),
            example2(),
            crate::algebra::catalog::random(4, 3).unwrap(),
            crate::algebra::catalog::random(5, 3).unwrap(),
        ];
        let mut verified = 0;
        for g in tables {
            let probe = crate::algebra::structure_probe(&g);
            if probe.right_inverse_permutation.is_none() {
                continue;
            }
            verified += 1;
            let (_, d) = decomposition_of(&g);
            for class in d.classes() {
                assert!(class.period <= 2, "order {}", g.order());
            }
        }
        assert!(verified >= 2, "the sample must include RIP tables");
    }

    #[test]
    fn group_class_description_small_groups() {
        for (g, expect_classes) in [
            (cyclic(2), 1usize),
            (cyclic(3), 3),
            (cyclic(4), 2),
            (cyclic(5), 5),
            (direct_product(&cyclic(2), &cyclic(2)), 4),
        ] {
            let (_, d) = decomposition_of(&g);
            let a = abelianization(&g).unwrap();
            let report = group_class_description(&d, &g, &a).unwrap();
            assert_eq!(report.class_count, expect_classes, "order {}", g.order());
        }
    }

    #[test]
    fn block_table_parity_invariants() {
        // Order 2 (k = 1): every class needs at least two units.
        let c1 = cyclic(1);
        let t2 = block_from_tables(&c1, &c1, &c1, &c1).unwrap();
        let (_, d) = decomposition_of(&t2);
        for class in d.classes() {
            assert!(class.period >= 2);
        }
        // Order 4 (k = 2): at least two classes, separated by the parity of
        // the number of low symbols.
        let c2 = cyclic(2);
        let t4 = block_from_tables(&c2, &c2, &c2, &c2).unwrap();
        let (_, d) = decomposition_of(&t4);
        assert!(d.class_count() >= 2);
        for class in d.classes() {
            let parity_of = |code: u32| -> u32 {
                TupleCode::from_code(4, code as u64)
                    .digits()
                    .iter()
                    .filter(|&&x| x < 2)
                    .count() as u32
                    % 2
            };
            let p0 = parity_of(class.members[0]);
            assert!(class.members.iter().all(|&m| parity_of(m) == p0));
        }
    }

    #[test]
    fn product_closure_holds_on_groups() {
        for g in [cyclic(3), cyclic(4), direct_product(&cyclic(2), &cyclic(2))] {
            let (_, d) = decomposition_of(&g);
            let exp = permutation_class_product_closure(&d, &g, 5, 1 << 20);
            assert!(exp.exhaustive);
            assert!(exp.closed, "order {}", g.order());
        }
    }

    #[test]
    fn product_closure_reports_evidence_on_example2() {
        let g = example2();
        let (_, d) = decomposition_of(&g);
        let exp = permutation_class_product_closure(&d, &g, 5, 1 << 20);
        assert!(exp.exhaustive);
        // Whatever the verdict, a counterexample must accompany a failure.
        assert_eq!(exp.closed, exp.counterexample.is_none());
    }

    #[test]
    fn convergence_on_order_two_is_exact() {
        let (t, d) = decomposition_of(&example1());
        let seed = TupleCode::identity_permutation(2);
        let report = convergence_report(&t, &d, &seed, 6).unwrap();
        for row in &report.rows {
            assert!(row.deviation.is_zero(), "d = {}", row.d);
            assert!(row.support_full);
        }
        assert_eq!(report.empirical_d0, Some(1));
    }

    #[test]
    fn convergence_on_cyclic_three_decreases() {
        let (t, d) = decomposition_of(&cyclic(3));
        let seed = TupleCode::identity_permutation(3);
        let report = convergence_report(&t, &d, &seed, 30).unwrap();
        let threshold = Ratio::new(crate::Int::from(1), crate::Int::from(1_000_000));
        let mut crossed = None;
        for row in &report.rows {
            assert!(row.deviation > Ratio::zero(), "deviation stays positive");
            if crossed.is_none() && row.deviation < threshold {
                crossed = Some(row.d);
            }
        }
        let crossing = crossed.expect("deviation dips below 1e-6 within 30 steps");
        assert!(crossing > 1);
        // Decreasing along the tail.
        for w in report.rows.windows(2) {
            assert!(w[1].deviation <= w[0].deviation);
        }
    }
}
