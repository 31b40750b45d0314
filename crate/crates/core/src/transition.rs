//! The transition matrix of a quasigroup over its tuple space, exact-count
//! vector propagation, the isotopy relations between transition matrices,
//! and a binary on-disk cache.
//!
//! For a table of order `n` the matrix has order `n^n`: entry `(U, V)`
//! counts the permutations `W` with `U * W = V` entrywise. Rows and columns
//! sum to `n!`, and the matrix of the `d`-iterated quasigroup is the `d`-th
//! power, so counting diagonals reduces to sparse matrix-vector products
//! with exact integers.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::algebra::{all_permutations, CayleyTable, Isotopy, Permutation, TupleCode};
use crate::error::{Error, Result};
use crate::num::{factorial_u64, CountScalar};

/// Size limits for building transition matrices.
#[derive(Debug, Clone, Copy)]
pub struct TransitionBudget {
    /// Largest order built without the explicit override.
    pub max_order: usize,
    /// Permit order 7 (the matrix has 7^7 rows of 5040 entries; check the
    /// byte budget before enabling this).
    pub allow_order7: bool,
    /// Cap on the estimated allocation for the sparse pattern.
    pub max_bytes: u64,
}

impl Default for TransitionBudget {
    fn default() -> Self {
        TransitionBudget {
            max_order: 6,
            allow_order7: false,
            max_bytes: 2 << 30,
        }
    }
}

impl TransitionBudget {
    pub fn with_max_bytes(mut self, bytes: u64) -> Self {
        self.max_bytes = bytes;
        self
    }

    pub fn allowing_order7(mut self) -> Self {
        self.allow_order7 = true;
        self
    }
}

/// Estimated bytes for the sparse pattern of the order-`n` matrix.
pub fn estimate_build_bytes(n: usize) -> u64 {
    let size = (n as u64).saturating_pow(n as u32);
    let nf = factorial_u64(n.min(20));
    size.saturating_mul(nf)
        .saturating_mul(4)
        .saturating_add(size * 8)
}

/// Sparse exact transition matrix, rows keyed by tuple code in ascending
/// order. Immutable after construction.
pub struct TransitionMatrix {
    n: usize,
    size: usize,
    row_sum: u64,
    offsets: Vec<u64>,
    codes: Vec<u32>,
    /// Entry multiplicities; `None` means every stored entry counts 1,
    /// which is always the case for matrices built from a latin table.
    counts: Option<Vec<u32>>,
}

impl std::fmt::Debug for TransitionMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "TransitionMatrix(order {}, {} tuples, row sum {})",
            self.n, self.size, self.row_sum
        )
    }
}

impl TransitionMatrix {
    pub fn order(&self) -> usize {
        self.n
    }

    /// Number of tuples, `n^n`.
    pub fn tuple_count(&self) -> usize {
        self.size
    }

    /// Common row and column sum, `n!`.
    pub fn row_sum(&self) -> u64 {
        self.row_sum
    }

    /// Total number of stored entries.
    pub fn nnz(&self) -> u64 {
        self.offsets[self.size]
    }

    /// The nonzero entries of row `u` as parallel slices of codes and
    /// multiplicities (`None` when all are 1).
    #[inline]
    pub fn row(&self, u: u64) -> (&[u32], Option<&[u32]>) {
        let lo = self.offsets[u as usize] as usize;
        let hi = self.offsets[u as usize + 1] as usize;
        (
            &self.codes[lo..hi],
            self.counts.as_ref().map(|c| &c[lo..hi]),
        )
    }

    /// Iterates `(code, count)` over row `u`.
    pub fn row_entries(&self, u: u64) -> impl Iterator<Item = (u32, u32)> + '_ {
        let (codes, counts) = self.row(u);
        codes.iter().enumerate().map(move |(i, &code)| {
            let c = counts.map_or(1, |cs| cs[i]);
            (code, c)
        })
    }

    /// The exact count `t_{U,V}` for a pair of codes.
    pub fn entry(&self, u: u64, v: u64) -> u64 {
        let (codes, counts) = self.row(u);
        match codes.binary_search(&(v as u32)) {
            Ok(i) => counts.map_or(1, |cs| cs[i]) as u64,
            Err(_) => 0,
        }
    }
}

fn checked_tuple_count(n: usize) -> Result<usize> {
    (n as u64)
        .checked_pow(n as u32)
        .filter(|&s| s <= usize::MAX as u64 && n <= 15)
        .map(|s| s as usize)
        .ok_or_else(|| Error::budget("tuple space", format!("{n}^{n}"), "order <= 15"))
}

/// Builds the transition matrix of a table.
///
/// Every row is produced by enumerating the `n!` permutations `W` and
/// recording the code of `U * W`; the row and column sums are verified
/// before the matrix is returned.
pub fn build_transition(g: &CayleyTable, budget: &TransitionBudget) -> Result<TransitionMatrix> {
    let n = g.order();
    let hard_cap = if budget.allow_order7 {
        7
    } else {
        budget.max_order
    };
    if n > hard_cap {
        return Err(Error::budget(
            "transition matrix",
            format!("order {n}"),
            format!("order <= {hard_cap}"),
        ));
    }
    let estimate = estimate_build_bytes(n);
    if estimate > budget.max_bytes {
        return Err(Error::budget(
            "transition matrix",
            format!("about {estimate} bytes"),
            format!("{} bytes", budget.max_bytes),
        ));
    }

    let size = checked_tuple_count(n)?;
    let nf = factorial_u64(n) as usize;
    let perms = all_permutations(n);
    let pow: Vec<u64> = (0..n).map(|i| (n as u64).pow((n - 1 - i) as u32)).collect();

    let mut codes = vec![0u32; size * nf];
    let any_dup = codes
        .par_chunks_mut(nf)
        .enumerate()
        .map(|(u, chunk)| {
            let mut digits = [0u8; 16];
            let mut rest = u as u64;
            for i in (0..n).rev() {
                digits[i] = (rest % n as u64) as u8;
                rest /= n as u64;
            }
            for (slot, w) in chunk.iter_mut().zip(&perms) {
                let mut code = 0u64;
                for i in 0..n {
                    code += g.op(digits[i], w.image()[i]) as u64 * pow[i];
                }
                *slot = code as u32;
            }
            chunk.sort_unstable();
            chunk.windows(2).any(|p| p[0] == p[1])
        })
        .reduce(|| false, |a, b| a | b);

    let matrix = if !any_dup {
        // The common case: distinct permutations hit distinct types, so
        // rows are uniform with unit multiplicities.
        let offsets = (0..=size).map(|i| (i * nf) as u64).collect();
        TransitionMatrix {
            n,
            size,
            row_sum: nf as u64,
            offsets,
            codes,
            counts: None,
        }
    } else {
        // General fallback: run-length encode each sorted row.
        let mut out_codes = Vec::new();
        let mut out_counts = Vec::new();
        let mut offsets = Vec::with_capacity(size + 1);
        offsets.push(0u64);
        for row in codes.chunks(nf) {
            let mut i = 0;
            while i < row.len() {
                let mut j = i + 1;
                while j < row.len() && row[j] == row[i] {
                    j += 1;
                }
                out_codes.push(row[i]);
                out_counts.push((j - i) as u32);
                i = j;
            }
            offsets.push(out_codes.len() as u64);
        }
        TransitionMatrix {
            n,
            size,
            row_sum: nf as u64,
            offsets,
            codes: out_codes,
            counts: Some(out_counts),
        }
    };

    verify_sums(&matrix)?;
    Ok(matrix)
}

/// Checks that every row and every column sums to `n!`.
fn verify_sums(t: &TransitionMatrix) -> Result<()> {
    let mut col = vec![0u64; t.size];
    for u in 0..t.size as u64 {
        let mut sum = 0u64;
        for (code, c) in t.row_entries(u) {
            sum += c as u64;
            col[code as usize] += c as u64;
        }
        if sum != t.row_sum {
            return Err(Error::internal(format!(
                "row {u} sums to {sum}, expected {}",
                t.row_sum
            )));
        }
    }
    if let Some(bad) = col.iter().position(|&s| s != t.row_sum) {
        return Err(Error::internal(format!(
            "column {bad} sums to {}, expected {}",
            col[bad], t.row_sum
        )));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) fn matrix_from_raw_rows(
    n: usize,
    rows: Vec<Vec<(u32, u32)>>,
    row_sum: u64,
) -> TransitionMatrix {
    let size = rows.len();
    let mut offsets = Vec::with_capacity(size + 1);
    offsets.push(0u64);
    let mut codes = Vec::new();
    let mut counts = Vec::new();
    for row in rows {
        for (code, c) in row {
            codes.push(code);
            counts.push(c);
        }
        offsets.push(codes.len() as u64);
    }
    TransitionMatrix {
        n,
        size,
        row_sum,
        offsets,
        codes,
        counts: Some(counts),
    }
}

/// An exact count per tuple type after some number of propagation steps.
#[derive(Debug, Clone)]
pub struct CountVector<C> {
    n: usize,
    depth: u32,
    dense: Vec<C>,
}

impl<C: CountScalar> CountVector<C> {
    /// Unit mass at one tuple, depth 0.
    pub fn unit(n: usize, seed: &TupleCode) -> Self {
        let size = checked_tuple_count(n).expect("order checked by the matrix");
        let mut dense = vec![C::zero(); size];
        dense[seed.code() as usize] = C::from_u64(1);
        CountVector { n, depth: 0, dense }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, code: u64) -> &C {
        &self.dense[code as usize]
    }

    /// Nonzero entries in ascending code order.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (u64, &C)> + '_ {
        self.dense
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i as u64, c))
    }

    pub fn support_size(&self) -> usize {
        self.dense.iter().filter(|c| !c.is_zero()).count()
    }

    pub fn total(&self) -> C {
        let mut acc = C::zero();
        for c in &self.dense {
            acc.add_ref(c);
        }
        acc
    }
}

/// One propagation step: `out[V] = sum_U in[U] * t_{U,V}`.
pub fn propagate_step<C: CountScalar>(t: &TransitionMatrix, v: &CountVector<C>) -> CountVector<C> {
    assert_eq!(t.order(), v.n, "matrix and vector orders must match");
    let size = t.tuple_count();
    let threads = rayon::current_num_threads().max(1);
    let chunk = size.div_ceil(threads);
    let ranges: Vec<(usize, usize)> = (0..threads)
        .map(|i| (i * chunk, ((i + 1) * chunk).min(size)))
        .filter(|(lo, hi)| lo < hi)
        .collect();

    // Scatter into per-worker partial vectors, then merge by summation;
    // exact addition makes the merge order irrelevant, so the result is
    // deterministic under any scheduling.
    let partials: Vec<Vec<C>> = ranges
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut out = vec![C::zero(); size];
            for u in lo..hi {
                let mass = &v.dense[u];
                if mass.is_zero() {
                    continue;
                }
                let (codes, counts) = t.row(u as u64);
                match counts {
                    None => {
                        for &code in codes {
                            out[code as usize].add_ref(mass);
                        }
                    }
                    Some(cs) => {
                        for (&code, &c) in codes.iter().zip(cs) {
                            out[code as usize].add_mul_u64(mass, c as u64);
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut dense = vec![C::zero(); size];
    for part in partials {
        for (acc, term) in dense.iter_mut().zip(&part) {
            if !term.is_zero() {
                acc.add_ref(term);
            }
        }
    }
    CountVector {
        n: v.n,
        depth: v.depth + 1,
        dense,
    }
}

/// Applies `d` propagation steps to a unit mass at `seed`; the entry at `V`
/// is then the number of seed-diagonals of type `V` at depth `d`.
pub fn propagate<C: CountScalar>(t: &TransitionMatrix, seed: &TupleCode, d: u32) -> CountVector<C> {
    let mut v = CountVector::unit(t.order(), seed);
    for _ in 0..d {
        v = propagate_step(t, &v);
    }
    v
}

/// Dense exact power of the transition matrix, for small tuple spaces.
#[derive(Debug, Clone)]
pub struct DenseMatrix<C> {
    size: usize,
    data: Vec<C>,
}

impl<C: CountScalar> DenseMatrix<C> {
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn entry(&self, u: u64, v: u64) -> &C {
        &self.data[u as usize * self.size + v as usize]
    }

    pub fn row(&self, u: u64) -> &[C] {
        &self.data[u as usize * self.size..(u as usize + 1) * self.size]
    }
}

/// Computes `T^d` densely. Refuses tuple spaces larger than `dense_cap`
/// (default 256, i.e. order 4).
pub fn dense_power<C: CountScalar>(
    t: &TransitionMatrix,
    d: u32,
    dense_cap: usize,
) -> Result<DenseMatrix<C>> {
    let size = t.tuple_count();
    if size > dense_cap {
        return Err(Error::budget(
            "dense power",
            format!("{size} tuples"),
            format!("{dense_cap} tuples"),
        ));
    }
    // Identity.
    let mut data = vec![C::zero(); size * size];
    for i in 0..size {
        data[i * size + i] = C::from_u64(1);
    }
    for _ in 0..d {
        let mut next = vec![C::zero(); size * size];
        for u in 0..size {
            let row_in = &data[u * size..(u + 1) * size];
            let row_out = &mut next[u * size..(u + 1) * size];
            for (z, mass) in row_in.iter().enumerate() {
                if mass.is_zero() {
                    continue;
                }
                let (codes, counts) = t.row(z as u64);
                match counts {
                    None => {
                        for &code in codes {
                            row_out[code as usize].add_ref(mass);
                        }
                    }
                    Some(cs) => {
                        for (&code, &c) in codes.iter().zip(cs) {
                            row_out[code as usize].add_mul_u64(mass, c as u64);
                        }
                    }
                }
            }
        }
        data = next;
    }
    Ok(DenseMatrix { size, data })
}

pub const DEFAULT_DENSE_CAP: usize = 256;

/// Which single isotopy component relates two tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsotopyComponent {
    Row,
    Column,
    Symbol,
}

#[derive(Debug, Clone)]
pub struct IsotopyRelationReport {
    pub component: IsotopyComponent,
    pub pairs_checked: u64,
}

fn map_code_through(n: usize, code: u32, pi: &Permutation, pow: &[u64]) -> u32 {
    let mut rest = code as u64;
    let mut out = 0u64;
    for i in (0..n).rev() {
        let d = (rest % n as u64) as u8;
        rest /= n as u64;
        out += pi.apply(d) as u64 * pow[i];
    }
    out as u32
}

/// Verifies the transition-matrix relation induced by a single-component
/// isotopy between `g` and `h = apply_isotopy(g, iso)`:
///
/// - row isotopy `alpha`: `t_{U,V} = r_{alpha(U),V}` (symbol action on `U`);
/// - column isotopy: `T = R`;
/// - symbol isotopy `gamma`: `t_{U,V} = r_{U,gamma(V)}`.
///
/// A violation contradicts a proved identity and is an internal error.
pub fn isotopy_relation_check(
    g: &CayleyTable,
    h: &CayleyTable,
    iso: &Isotopy,
    budget: &TransitionBudget,
) -> Result<IsotopyRelationReport> {
    let nontrivial: Vec<IsotopyComponent> = [
        (!iso.alpha.is_identity(), IsotopyComponent::Row),
        (!iso.beta.is_identity(), IsotopyComponent::Column),
        (!iso.gamma.is_identity(), IsotopyComponent::Symbol),
    ]
    .into_iter()
    .filter_map(|(nt, c)| nt.then_some(c))
    .collect();
    if nontrivial.len() > 1 {
        return Err(Error::InvalidParameter(
            "exactly one isotopy component may be nontrivial".into(),
        ));
    }
    // The identity isotopy behaves like a (trivial) column isotopy: T = R.
    let component = nontrivial
        .first()
        .copied()
        .unwrap_or(IsotopyComponent::Column);

    let expected = crate::algebra::apply_isotopy(g, iso)?;
    if &expected != h {
        return Err(Error::InvalidParameter(
            "h is not the image of g under the given isotopy".into(),
        ));
    }

    let t = build_transition(g, budget)?;
    let r = build_transition(h, budget)?;
    let n = g.order();
    let size = t.tuple_count() as u64;
    let pow: Vec<u64> = (0..n).map(|i| (n as u64).pow((n - 1 - i) as u32)).collect();

    let rows_equal = |a: (&[u32], Option<&[u32]>), b: (&[u32], Option<&[u32]>)| -> bool {
        if a.0 != b.0 {
            return false;
        }
        let ca = a.1;
        let cb = b.1;
        match (ca, cb) {
            (None, None) => true,
            _ => {
                a.0.iter()
                    .enumerate()
                    .all(|(i, _)| ca.map_or(1, |c| c[i]) == cb.map_or(1, |c| c[i]))
            }
        }
    };

    for u in 0..size {
        let ok = match component {
            IsotopyComponent::Row => {
                let mapped = map_code_through(n, u as u32, &iso.alpha, &pow);
                rows_equal(t.row(u), r.row(mapped as u64))
            }
            IsotopyComponent::Column => rows_equal(t.row(u), r.row(u)),
            IsotopyComponent::Symbol => {
                let (codes, counts) = t.row(u);
                let mut mapped: Vec<(u32, u32)> = codes
                    .iter()
                    .enumerate()
                    .map(|(i, &code)| {
                        (
                            map_code_through(n, code, &iso.gamma, &pow),
                            counts.map_or(1, |c| c[i]),
                        )
                    })
                    .collect();
                mapped.sort_unstable();
                let (rcodes, rcounts) = r.row(u);
                mapped.len() == rcodes.len()
                    && mapped.iter().enumerate().all(|(i, &(code, c))| {
                        rcodes[i] == code && rcounts.map_or(1, |cs| cs[i]) == c
                    })
            }
        };
        if !ok {
            return Err(Error::internal(format!(
                "isotopy relation violated at row code {u}"
            )));
        }
    }
    Ok(IsotopyRelationReport {
        component,
        pairs_checked: size * size,
    })
}

const CACHE_MAGIC: &[u8; 4] = b"ITQT";
const CACHE_VERSION: u32 = 1;

fn write_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            break;
        }
        out.push(byte | 0x80);
    }
}

fn read_varint(data: &[u8], pos: &mut usize) -> Result<u64> {
    let mut shift = 0u32;
    let mut acc = 0u64;
    loop {
        let &byte = data
            .get(*pos)
            .ok_or_else(|| Error::Cache("truncated varint".into()))?;
        *pos += 1;
        if shift >= 64 {
            return Err(Error::Cache("varint overflow".into()));
        }
        acc |= ((byte & 0x7f) as u64) << shift;
        if byte & 0x80 == 0 {
            return Ok(acc);
        }
        shift += 7;
    }
}

impl TransitionMatrix {
    /// Serializes the matrix: magic, version, order, then per-row entry
    /// counts followed by code/count varint pairs.
    pub fn write_cache(&self, w: &mut impl Write) -> Result<()> {
        let mut buf = Vec::new();
        buf.extend_from_slice(CACHE_MAGIC);
        buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.n as u64).to_le_bytes());
        for u in 0..self.size as u64 {
            let (codes, _) = self.row(u);
            write_varint(&mut buf, codes.len() as u64);
            for (code, count) in self.row_entries(u) {
                write_varint(&mut buf, code as u64);
                write_varint(&mut buf, count as u64);
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn save_cache(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        self.write_cache(&mut file)
    }

    /// Loads a cached matrix, rejecting version or order mismatches, and
    /// re-verifies the row and column sums.
    pub fn read_cache(r: &mut impl Read, expected_order: usize) -> Result<Self> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        if data.len() < 16 || &data[0..4] != CACHE_MAGIC {
            return Err(Error::Cache("bad magic".into()));
        }
        let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
        if version != CACHE_VERSION {
            return Err(Error::Cache(format!(
                "version {version}, expected {CACHE_VERSION}"
            )));
        }
        let n = u64::from_le_bytes(data[8..16].try_into().unwrap()) as usize;
        if n != expected_order {
            return Err(Error::Cache(format!(
                "order {n}, expected {expected_order}"
            )));
        }
        let size = checked_tuple_count(n)?;
        let mut pos = 16usize;
        let mut offsets = Vec::with_capacity(size + 1);
        offsets.push(0u64);
        let mut codes = Vec::new();
        let mut counts = Vec::new();
        let mut uniform = true;
        for _ in 0..size {
            let nnz = read_varint(&data, &mut pos)?;
            for _ in 0..nnz {
                let code = read_varint(&data, &mut pos)?;
                let count = read_varint(&data, &mut pos)?;
                if code >= size as u64 || count == 0 {
                    return Err(Error::Cache("entry out of range".into()));
                }
                codes.push(code as u32);
                counts.push(count as u32);
                uniform &= count == 1;
            }
            offsets.push(codes.len() as u64);
        }
        if pos != data.len() {
            return Err(Error::Cache("trailing bytes".into()));
        }
        let matrix = TransitionMatrix {
            n,
            size,
            row_sum: factorial_u64(n),
            offsets,
            codes,
            counts: if uniform { None } else { Some(counts) },
        };
        verify_sums(&matrix).map_err(|e| Error::Cache(format!("corrupt matrix: {e}")))?;
        Ok(matrix)
    }

    pub fn load_cache(path: &Path, expected_order: usize) -> Result<Self> {
        let mut file = std::fs::File::open(path)?;
        Self::read_cache(&mut file, expected_order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::catalog::{cyclic, example1, example2};
    use crate::algebra::parse_cayley;
    use num_bigint::BigUint;

    fn code_of(symbols: &[usize]) -> u64 {
        TupleCode::from_symbols_1based(symbols).unwrap().code()
    }

    #[test]
    fn order_two_matrix_matches_reference() {
        let t = build_transition(&example1(), &TransitionBudget::default()).unwrap();
        // Rows and columns ordered (1,1), (1,2), (2,1), (2,2).
        let expect = [[0u64, 1, 1, 0], [1, 0, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0]];
        for u in 0..4u64 {
            for v in 0..4u64 {
                assert_eq!(t.entry(u, v), expect[u as usize][v as usize], "({u},{v})");
            }
        }
    }

    #[test]
    fn trivial_order_one_matrix() {
        let t = build_transition(&cyclic(1), &TransitionBudget::default()).unwrap();
        assert_eq!(t.tuple_count(), 1);
        assert_eq!(t.entry(0, 0), 1);
    }

    #[test]
    fn cyclic_three_row_sums() {
        let t = build_transition(&cyclic(3), &TransitionBudget::default()).unwrap();
        assert_eq!(t.tuple_count(), 27);
        for u in 0..27u64 {
            let sum: u64 = t.row_entries(u).map(|(_, c)| c as u64).sum();
            assert_eq!(sum, 6);
        }
    }

    #[test]
    fn budget_refusal_reports_estimate() {
        let err = build_transition(&cyclic(7), &TransitionBudget::default()).unwrap_err();
        assert!(err.is_budget());
        // With the override the order gate passes but the byte budget still
        // guards the allocation.
        let err = build_transition(&cyclic(7), &TransitionBudget::default().allowing_order7())
            .unwrap_err();
        assert!(err.to_string().contains("bytes"), "{err}");
    }

    #[test]
    fn propagate_depth_zero_is_unit_mass() {
        let t = build_transition(&example1(), &TransitionBudget::default()).unwrap();
        let seed = TupleCode::identity_permutation(2);
        let v: CountVector<u64> = propagate(&t, &seed, 0);
        assert_eq!(v.support_size(), 1);
        assert_eq!(*v.entry(seed.code()), 1);
    }

    #[test]
    fn propagate_depth_one_from_identity() {
        let t = build_transition(&example1(), &TransitionBudget::default()).unwrap();
        let seed = TupleCode::identity_permutation(2);
        let v: CountVector<u64> = propagate(&t, &seed, 1);
        assert_eq!(*v.entry(code_of(&[1, 1])), 1);
        assert_eq!(*v.entry(code_of(&[2, 2])), 1);
        assert_eq!(v.total(), 2);
    }

    #[test]
    fn propagate_depth_two_reaches_permutations() {
        let t = build_transition(&example1(), &TransitionBudget::default()).unwrap();
        let seed = TupleCode::from_symbols_1based(&[1, 2]).unwrap();
        let v: CountVector<u64> = propagate(&t, &seed, 2);
        assert_eq!(*v.entry(code_of(&[1, 2])), 2);
        assert_eq!(*v.entry(code_of(&[2, 1])), 2);
    }

    #[test]
    fn propagation_total_mass_is_factorial_power() {
        let t = build_transition(&cyclic(3), &TransitionBudget::default()).unwrap();
        let seed = TupleCode::identity_permutation(3);
        for d in 0..6u32 {
            let v: CountVector<BigUint> = propagate(&t, &seed, d);
            assert_eq!(v.total(), BigUint::from(6u64).pow(d));
        }
    }

    #[test]
    fn propagation_is_deterministic_across_thread_counts() {
        let t = build_transition(&cyclic(4), &TransitionBudget::default()).unwrap();
        let seed = TupleCode::identity_permutation(4);
        let reference: CountVector<BigUint> = propagate(&t, &seed, 5);
        for threads in [2usize, 5] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let parallel: CountVector<BigUint> = pool.install(|| propagate(&t, &seed, 5));
            for code in 0..t.tuple_count() as u64 {
                assert_eq!(reference.entry(code), parallel.entry(code));
            }
        }
    }

    #[test]
    fn propagation_splits_compose() {
        let t = build_transition(&cyclic(3), &TransitionBudget::default()).unwrap();
        let seed = TupleCode::from_symbols_1based(&[2, 2, 1]).unwrap();
        let whole: CountVector<u64> = propagate(&t, &seed, 5);
        let mut staged: CountVector<u64> = propagate(&t, &seed, 2);
        for _ in 0..3 {
            staged = propagate_step(&t, &staged);
        }
        for code in 0..27u64 {
            assert_eq!(whole.entry(code), staged.entry(code));
        }
    }

    #[test]
    fn dense_power_agrees_with_propagate() {
        for g in [example1(), cyclic(3)] {
            let t = build_transition(&g, &TransitionBudget::default()).unwrap();
            for d in 0..=6u32 {
                let m: DenseMatrix<u64> = dense_power(&t, d, DEFAULT_DENSE_CAP).unwrap();
                for u in 0..t.tuple_count() as u64 {
                    let v: CountVector<u64> = propagate(&t, &TupleCode::from_code(g.order(), u), d);
                    for code in 0..t.tuple_count() as u64 {
                        assert_eq!(m.entry(u, code), v.entry(code), "d={d} u={u}");
                    }
                }
            }
        }
    }

    #[test]
    fn dense_power_identity_and_first_power() {
        let t = build_transition(&example1(), &TransitionBudget::default()).unwrap();
        let id: DenseMatrix<u64> = dense_power(&t, 0, 256).unwrap();
        for u in 0..4u64 {
            for v in 0..4u64 {
                assert_eq!(*id.entry(u, v), (u == v) as u64);
            }
        }
        let first: DenseMatrix<u64> = dense_power(&t, 1, 256).unwrap();
        for u in 0..4u64 {
            for v in 0..4u64 {
                assert_eq!(*first.entry(u, v), t.entry(u, v));
            }
        }
    }

    #[test]
    fn dense_power_respects_cap() {
        let t = build_transition(&cyclic(4), &TransitionBudget::default()).unwrap();
        assert!(dense_power::<u64>(&t, 1, 16).is_err());
    }

    #[test]
    fn row_isotopy_relation_on_example2() {
        let klein = parse_cayley("4\n1 2 3 4\n2 1 4 3\n3 4 1 2\n4 3 2 1\n").unwrap();
        let iso = Isotopy::row(Permutation::transposition(4, 0, 1));
        let report =
            isotopy_relation_check(&klein, &example2(), &iso, &TransitionBudget::default())
                .unwrap();
        assert_eq!(report.component, IsotopyComponent::Row);
        assert_eq!(report.pairs_checked, 256 * 256);
    }

    #[test]
    fn column_isotopy_gives_equal_matrices() {
        let g = cyclic(3);
        let iso = Isotopy::column(Permutation::from_symbols_1based(&[2, 3, 1]).unwrap());
        let h = crate::algebra::apply_isotopy(&g, &iso).unwrap();
        let report = isotopy_relation_check(&g, &h, &iso, &TransitionBudget::default()).unwrap();
        assert_eq!(report.component, IsotopyComponent::Column);
    }

    #[test]
    fn symbol_isotopy_relation() {
        let g = cyclic(3);
        let iso = Isotopy::symbol(Permutation::from_symbols_1based(&[3, 1, 2]).unwrap());
        let h = crate::algebra::apply_isotopy(&g, &iso).unwrap();
        let report = isotopy_relation_check(&g, &h, &iso, &TransitionBudget::default()).unwrap();
        assert_eq!(report.component, IsotopyComponent::Symbol);
    }

    #[test]
    fn identity_isotopy_compares_equal_matrices() {
        let g = example1();
        let iso = Isotopy::identity(2);
        let report = isotopy_relation_check(&g, &g, &iso, &TransitionBudget::default()).unwrap();
        assert_eq!(report.component, IsotopyComponent::Column);
    }

    #[test]
    fn cache_round_trip() {
        let t = build_transition(&cyclic(3), &TransitionBudget::default()).unwrap();
        let mut buf = Vec::new();
        t.write_cache(&mut buf).unwrap();
        let back = TransitionMatrix::read_cache(&mut buf.as_slice(), 3).unwrap();
        assert_eq!(back.tuple_count(), t.tuple_count());
        for u in 0..27u64 {
            for v in 0..27u64 {
                assert_eq!(t.entry(u, v), back.entry(u, v));
            }
        }
    }

    #[test]
    fn cache_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.itqt");
        let t = build_transition(&example2(), &TransitionBudget::default()).unwrap();
        t.save_cache(&path).unwrap();
        let back = TransitionMatrix::load_cache(&path, 4).unwrap();
        assert_eq!(back.nnz(), t.nnz());
        assert!(TransitionMatrix::load_cache(&path, 5).is_err());
    }

    #[test]
    fn cache_rejects_wrong_order_and_version() {
        let t = build_transition(&example1(), &TransitionBudget::default()).unwrap();
        let mut buf = Vec::new();
        t.write_cache(&mut buf).unwrap();
        assert!(TransitionMatrix::read_cache(&mut buf.as_slice(), 3).is_err());
        let mut corrupt = buf.clone();
        corrupt[4] = 9; // version
        assert!(TransitionMatrix::read_cache(&mut corrupt.as_slice(), 2).is_err());
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(TransitionMatrix::read_cache(&mut bad_magic.as_slice(), 2).is_err());
    }
}
