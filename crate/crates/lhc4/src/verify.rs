//! Desk-scale reproduction of the computer-verified completability facts:
//! exhaustive enumeration for small arities, seeded sampling beyond, the
//! lemma-case census over disjoint pairs, and the unsplittable 2-fold code
//! search.
//!
//! Exhaustive runs are deterministic; sampled runs are deterministic given
//! `(seed, samples)` because every item derives its own RNG stream, so
//! results are independent of the worker count. Reports merge by
//! component-wise addition in item order.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::OnceLock;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{Isotopy, Perm};
use crate::completion::{combine_disjoint, complete, split_2fold};
use crate::fileio;
use crate::qcore::{pointwise_disjoint, CodeSet, HypercuboidTable, QuasigroupTable, Shape};
use crate::structure::{
    canonical_decomposition, is_completely_reducible, is_reducible, is_semilinear,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("full enumeration refused for arity {arity} (maximum {max}); use sampling")]
    ArityTooLarge { arity: usize, max: usize },
    #[error("quasigroups are not pointwise disjoint")]
    NotDisjoint,
    #[error("no witness found within the search budget")]
    NotFoundWithinBudget,
}

/// Soft limits for a verification run: a wall-clock deadline and an item
/// cap. Exceeding a budget is an outcome recorded in the report, not a
/// crash.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    deadline_ms: Option<u64>,
    item_cap: Option<u64>,
}

impl Budget {
    pub fn seconds(s: u64) -> Self {
        Budget {
            deadline_ms: Some(s.saturating_mul(1000)),
            item_cap: None,
        }
    }

    pub fn unlimited() -> Self {
        Budget {
            deadline_ms: None,
            item_cap: None,
        }
    }

    pub fn with_item_cap(mut self, cap: u64) -> Self {
        self.item_cap = Some(cap);
        self
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::seconds(60)
    }
}

/// Running budget state shared across shards.
struct BudgetClock {
    start: Instant,
    deadline_ms: Option<u64>,
    item_cap: Option<u64>,
    items: AtomicU64,
    hit: AtomicBool,
}

impl BudgetClock {
    fn new(budget: &Budget) -> Self {
        BudgetClock {
            start: Instant::now(),
            deadline_ms: budget.deadline_ms,
            item_cap: budget.item_cap,
            items: AtomicU64::new(0),
            hit: AtomicBool::new(false),
        }
    }

    /// Records processed items against the cap; returns true once any limit
    /// is exceeded.
    fn charge(&self, items: u64) -> bool {
        if let Some(cap) = self.item_cap {
            if self.items.fetch_add(items, Ordering::Relaxed) + items > cap {
                self.hit.store(true, Ordering::Relaxed);
            }
        }
        self.exceeded()
    }

    fn exceeded(&self) -> bool {
        if self.hit.load(Ordering::Relaxed) {
            return true;
        }
        if let Some(ms) = self.deadline_ms {
            if self.start.elapsed().as_millis() as u64 > ms {
                self.hit.store(true, Ordering::Relaxed);
                return true;
            }
        }
        false
    }

    fn elapsed_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Exhaustive,
    Sample,
}

impl RunMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunMode::Exhaustive => "exhaustive",
            RunMode::Sample => "sample",
        }
    }
}

/// Case taxonomy for a disjoint pair, following the lemma split: an
/// irreducible member, reducible members with different canonical
/// partitions, equal partitions with a root of arity at least 4, both
/// completely reducible, or none of these (tracked, not failed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaCase {
    IrreduciblePresent,
    ReducibleDifferentPartitions,
    ReducibleSamePartitionM4,
    BothCompletelyReducible,
    Unclassified,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CaseTallies {
    pub irreducible_present: u64,
    pub reducible_different_partitions: u64,
    pub reducible_same_partition_m4: u64,
    pub both_completely_reducible: u64,
    pub unclassified: u64,
}

impl CaseTallies {
    fn add(&mut self, case: LemmaCase) {
        match case {
            LemmaCase::IrreduciblePresent => self.irreducible_present += 1,
            LemmaCase::ReducibleDifferentPartitions => self.reducible_different_partitions += 1,
            LemmaCase::ReducibleSamePartitionM4 => self.reducible_same_partition_m4 += 1,
            LemmaCase::BothCompletelyReducible => self.both_completely_reducible += 1,
            LemmaCase::Unclassified => self.unclassified += 1,
        }
    }

    fn merge(&mut self, other: &CaseTallies) {
        self.irreducible_present += other.irreducible_present;
        self.reducible_different_partitions += other.reducible_different_partitions;
        self.reducible_same_partition_m4 += other.reducible_same_partition_m4;
        self.both_completely_reducible += other.both_completely_reducible;
        self.unclassified += other.unclassified;
    }

    pub fn total(&self) -> u64 {
        self.irreducible_present
            + self.reducible_different_partitions
            + self.reducible_same_partition_m4
            + self.both_completely_reducible
            + self.unclassified
    }
}

/// Aggregated outcome of one verification claim.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub mode: String,
    pub arity: usize,
    pub universe: u64,
    pub counterexamples: u64,
    pub cases: CaseTallies,
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub budget_exceeded: bool,
    pub notes: Vec<String>,
    pub elapsed_ms: u64,
    pub payloads: Vec<String>,
}

impl VerificationReport {
    pub fn holds(&self) -> bool {
        self.counterexamples == 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "claim {} mode={} arity={}\n",
            self.claim, self.mode, self.arity
        ));
        out.push_str(&format!(
            "universe {} counterexamples {}\n",
            self.universe, self.counterexamples
        ));
        if self.cases.total() > 0 {
            out.push_str(&format!(
                "cases: irreducible_present={} different_partitions={} same_partition_m4={} both_completely_reducible={} unclassified={}\n",
                self.cases.irreducible_present,
                self.cases.reducible_different_partitions,
                self.cases.reducible_same_partition_m4,
                self.cases.both_completely_reducible,
                self.cases.unclassified
            ));
        }
        if let (Some(seed), Some(samples)) = (self.seed, self.samples) {
            out.push_str(&format!("seed {seed} samples {samples}\n"));
        }
        if self.budget_exceeded {
            out.push_str("budget exceeded: results cover the examined prefix only\n");
        }
        for note in &self.notes {
            out.push_str(&format!("note: {note}\n"));
        }
        out.push_str(&format!("elapsed_ms {}\n", self.elapsed_ms));
        out.push_str(if self.holds() { "verdict PASS\n" } else { "verdict FAIL\n" });
        out
    }
}

/// Per-shard accumulator; merges are order-independent for the counts and
/// ordered by item key for the payloads.
#[derive(Default)]
struct Tally {
    universe: u64,
    counterexamples: u64,
    cases: CaseTallies,
    budget_exceeded: bool,
    payloads: Vec<(u64, String)>,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.universe += other.universe;
        self.counterexamples += other.counterexamples;
        self.cases.merge(&other.cases);
        self.budget_exceeded |= other.budget_exceeded;
        self.payloads.extend(other.payloads);
        self
    }
}

fn finish_report(
    claim: &str,
    mode: RunMode,
    arity: usize,
    seed: Option<u64>,
    samples: Option<u64>,
    notes: Vec<String>,
    clock: &BudgetClock,
    tally: Tally,
) -> VerificationReport {
    let mut payloads = tally.payloads;
    payloads.sort();
    VerificationReport {
        claim: claim.to_string(),
        mode: mode.as_str().to_string(),
        arity,
        universe: tally.universe,
        counterexamples: tally.counterexamples,
        cases: tally.cases,
        seed,
        samples,
        budget_exceeded: tally.budget_exceeded,
        notes,
        elapsed_ms: clock.elapsed_ms(),
        payloads: payloads.into_iter().map(|(_, p)| p).collect(),
    }
}

/// Seeded RNG for reproducible sampling; `stream` separates independent
/// uses of one seed.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    item_rng(seed, stream)
}

/// Per-item RNG stream: streams are independent of the worker count.
fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn item_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, stream))
}

// ---------------------------------------------------------------------------
// Enumeration

/// Line bookkeeping shared by the enumerator and the random fillers.
struct LineState {
    order: usize,
    ndims: usize,
    cell_lines: Vec<u32>,
    line_used: Vec<u16>,
}

impl LineState {
    fn new(shape: &Shape) -> Self {
        let dims = shape.dims();
        let n = dims.len();
        let total = shape.cell_count();
        let mut stride = vec![1usize; n];
        for a in (0..n - 1).rev() {
            stride[a] = stride[a + 1] * dims[a + 1];
        }
        let mut line_offset = vec![0usize; n];
        let mut line_total = 0usize;
        for a in 0..n {
            line_offset[a] = line_total;
            line_total += total / dims[a];
        }
        let mut cell_lines = vec![0u32; total * n];
        for idx in 0..total {
            for a in 0..n {
                let outer = idx / (stride[a] * dims[a]);
                let inner = idx % stride[a];
                cell_lines[idx * n + a] = (line_offset[a] + outer * stride[a] + inner) as u32;
            }
        }
        LineState {
            order: shape.order(),
            ndims: n,
            cell_lines,
            line_used: vec![0u16; line_total],
        }
    }

    #[inline]
    fn used_mask(&self, cell: usize) -> u16 {
        let mut mask = 0u16;
        for a in 0..self.ndims {
            mask |= self.line_used[self.cell_lines[cell * self.ndims + a] as usize];
        }
        mask
    }

    #[inline]
    fn mark(&mut self, cell: usize, symbol: u8) {
        for a in 0..self.ndims {
            self.line_used[self.cell_lines[cell * self.ndims + a] as usize] |= 1 << symbol;
        }
    }

    #[inline]
    fn unmark(&mut self, cell: usize, symbol: u8) {
        for a in 0..self.ndims {
            self.line_used[self.cell_lines[cell * self.ndims + a] as usize] &= !(1 << symbol);
        }
    }
}

/// Streams every latin hypercuboid of a shape, in lexicographic cell order
/// with symbols ascending; `forbidden` masks ban symbols per cell.
pub struct TableEnumerator {
    shape: Shape,
    total: usize,
    cells: Vec<u8>,
    forbidden: Vec<u16>,
    state: LineState,
    try_from: Vec<u8>,
    pos: usize,
    done: bool,
}

impl TableEnumerator {
    pub fn new(shape: Shape) -> Self {
        let total = shape.cell_count();
        Self::with_forbidden(shape, vec![0u16; total])
    }

    pub fn with_forbidden(shape: Shape, forbidden: Vec<u16>) -> Self {
        let total = shape.cell_count();
        assert_eq!(forbidden.len(), total);
        let state = LineState::new(&shape);
        TableEnumerator {
            shape,
            total,
            cells: vec![0u8; total],
            forbidden,
            state,
            try_from: vec![0u8; total + 1],
            pos: 0,
            done: false,
        }
    }

    fn step_back(&mut self) {
        self.pos -= 1;
        self.state.unmark(self.pos, self.cells[self.pos]);
    }
}

impl Iterator for TableEnumerator {
    type Item = HypercuboidTable;

    fn next(&mut self) -> Option<HypercuboidTable> {
        if self.done {
            return None;
        }
        loop {
            if self.pos == self.total {
                let out = HypercuboidTable::new(self.shape.clone(), self.cells.clone())
                    .expect("enumerated tables are well formed");
                self.step_back();
                return Some(out);
            }
            let banned = self.forbidden[self.pos] | self.state.used_mask(self.pos);
            let mut placed = false;
            for s in self.try_from[self.pos]..self.shape.order() as u8 {
                if banned & (1 << s) == 0 {
                    self.cells[self.pos] = s;
                    self.state.mark(self.pos, s);
                    self.try_from[self.pos] = s + 1;
                    self.pos += 1;
                    self.try_from[self.pos] = 0;
                    placed = true;
                    break;
                }
            }
            if !placed {
                if self.pos == 0 {
                    self.done = true;
                    return None;
                }
                self.step_back();
            }
        }
    }
}

/// Every latin cuboid of the given dimensions over order 4.
pub fn enumerate_cuboids(ndims: usize, k: usize) -> TableEnumerator {
    TableEnumerator::new(Shape::cuboid(4, ndims, k).expect("requested shape is valid"))
}

/// Every n-ary quasigroup of order 4, exactly once, in lexicographic table
/// order. Full enumeration is refused above arity 3.
pub fn enumerate_quasigroups(
    arity: usize,
) -> Result<impl Iterator<Item = QuasigroupTable>, VerifyError> {
    if arity > 3 {
        return Err(VerifyError::ArityTooLarge { arity, max: 3 });
    }
    Ok(TableEnumerator::new(Shape::cube(4, arity))
        .map(|t| QuasigroupTable::from_table(t).expect("enumerated cubes are latin")))
}

/// Every quasigroup pointwise disjoint from `q`, in lexicographic order.
pub fn disjoint_mates(q: &QuasigroupTable) -> impl Iterator<Item = QuasigroupTable> {
    let forbidden: Vec<u16> = q.cells().iter().map(|&v| 1u16 << v).collect();
    TableEnumerator::with_forbidden(Shape::cube(q.order(), q.arity()), forbidden)
        .map(|t| QuasigroupTable::from_table(t).expect("mates are latin"))
}

/// Cuboids of `k` layers whose first layer is `layer0` (sharding handle for
/// the exhaustive theorem census).
pub fn cuboids_extending(layer0: &QuasigroupTable, k: usize) -> TableEnumerator {
    let shape = Shape::cuboid(4, layer0.arity() + 1, k).expect("extension shape is valid");
    let forbidden: Vec<u16> = (0..shape.cell_count())
        .map(|idx| {
            if idx % k == 0 {
                !(1u16 << layer0.cells()[idx / k]) & 0xF
            } else {
                0
            }
        })
        .collect();
    TableEnumerator::with_forbidden(shape, forbidden)
}

// ---------------------------------------------------------------------------
// Seeded random generation

fn fill_random(
    cells: &mut [u8],
    pos: usize,
    forbidden: &[u16],
    state: &mut LineState,
    rng: &mut ChaCha8Rng,
) -> bool {
    if pos == cells.len() {
        return true;
    }
    let banned = forbidden[pos] | state.used_mask(pos);
    let mut cands: Vec<u8> = (0..state.order as u8)
        .filter(|s| banned & (1 << s) == 0)
        .collect();
    cands.shuffle(rng);
    for s in cands {
        cells[pos] = s;
        state.mark(pos, s);
        if fill_random(cells, pos + 1, forbidden, state, rng) {
            return true;
        }
        state.unmark(pos, s);
    }
    false
}

fn random_table(shape: Shape, forbidden: Vec<u16>, rng: &mut ChaCha8Rng) -> HypercuboidTable {
    let total = shape.cell_count();
    let mut cells = vec![0u8; total];
    let mut state = LineState::new(&shape);
    let filled = fill_random(&mut cells, 0, &forbidden, &mut state, rng);
    assert!(filled, "backtracking fill found no table for the constraints");
    HypercuboidTable::new(shape, cells).expect("random fill respects the shape")
}

/// Uniform-seeded random n-ary quasigroup of order 4 (randomized
/// backtracking fill).
pub fn random_quasigroup(arity: usize, rng: &mut ChaCha8Rng) -> QuasigroupTable {
    let t = random_table(Shape::cube(4, arity), vec![0; 4usize.pow(arity as u32)], rng);
    QuasigroupTable::from_table(t).expect("filled cube is latin")
}

/// Random quasigroup pointwise disjoint from `q`.
pub fn random_disjoint_mate(q: &QuasigroupTable, rng: &mut ChaCha8Rng) -> QuasigroupTable {
    let forbidden: Vec<u16> = q.cells().iter().map(|&v| 1u16 << v).collect();
    let t = random_table(Shape::cube(q.order(), q.arity()), forbidden, rng);
    QuasigroupTable::from_table(t).expect("filled cube is latin")
}

/// Random latin cuboid of the given dimensions over order 4.
pub fn random_cuboid(ndims: usize, k: usize, rng: &mut ChaCha8Rng) -> HypercuboidTable {
    let shape = Shape::cuboid(4, ndims, k).expect("requested shape is valid");
    let total = shape.cell_count();
    random_table(shape, vec![0; total], rng)
}

fn random_isotope(q: &QuasigroupTable, rng: &mut ChaCha8Rng) -> QuasigroupTable {
    let all = Perm::all();
    let perms: Vec<Perm> = (0..=q.arity())
        .map(|_| all[rng.random_range(0..all.len())])
        .collect();
    Isotopy::new(perms)
        .apply_quasigroup(q)
        .expect("arity matches")
}

/// Random 2-fold MDS code: backtracking over membership bits with
/// exact-line-count pruning, candidate order randomized.
pub fn random_2fold_code(word_len: usize, rng: &mut ChaCha8Rng) -> CodeSet {
    let shape = Shape::cube(4, word_len);
    let state = LineState::new(&shape);
    let space = shape.cell_count();
    let n = word_len;
    let line_total = state.line_used.len();
    let mut count = vec![0u8; line_total];
    let mut undecided = vec![4u8; line_total];
    let mut member = vec![false; space];

    fn go(
        idx: usize,
        space: usize,
        n: usize,
        cell_lines: &[u32],
        count: &mut [u8],
        undecided: &mut [u8],
        member: &mut [bool],
        rng: &mut ChaCha8Rng,
    ) -> bool {
        if idx == space {
            return true;
        }
        let lines = &cell_lines[idx * n..(idx + 1) * n];
        let mut order = [0u8, 1];
        if rng.random_bool(0.5) {
            order = [1, 0];
        }
        'bits: for &bit in &order {
            for &l in lines {
                let l = l as usize;
                let c = count[l] + bit;
                if c > 2 || c + (undecided[l] - 1) < 2 {
                    continue 'bits;
                }
            }
            for &l in lines {
                let l = l as usize;
                undecided[l] -= 1;
                count[l] += bit;
            }
            member[idx] = bit == 1;
            if go(idx + 1, space, n, cell_lines, count, undecided, member, rng) {
                return true;
            }
            for &l in lines {
                let l = l as usize;
                undecided[l] += 1;
                count[l] -= bit;
            }
        }
        false
    }

    let ok = go(
        0,
        space,
        n,
        &state.cell_lines,
        &mut count,
        &mut undecided,
        &mut member,
        rng,
    );
    assert!(ok, "2-fold codes exist for every word length");
    let mut code = CodeSet::empty(4, word_len);
    for (idx, &m) in member.iter().enumerate() {
        if m {
            code.insert_index(idx);
        }
    }
    debug_assert!(code.is_kfold_mds(2));
    code
}

// ---------------------------------------------------------------------------
// Independent split oracle

/// Exhaustive split search, independent of the bipartiteness route: assigns
/// each member to one of two parts by direct backtracking under the
/// one-member-per-line-per-part constraint.
pub fn exhaustive_split_oracle(m: &CodeSet) -> Option<[CodeSet; 2]> {
    assert!(m.is_kfold_mds(2), "oracle expects a 2-fold MDS code");
    let shape = Shape::cube(m.order(), m.word_len());
    let state = LineState::new(&shape);
    let n = m.word_len();
    let members: Vec<usize> = m.iter_indices().collect();
    let line_total = state.line_used.len();
    let mut part_count = vec![[0u8; 2]; line_total];
    let mut assignment = vec![0u8; members.len()];

    fn go(
        i: usize,
        members: &[usize],
        n: usize,
        cell_lines: &[u32],
        part_count: &mut [[u8; 2]],
        assignment: &mut [u8],
    ) -> bool {
        if i == members.len() {
            return true;
        }
        let lines = &cell_lines[members[i] * n..(members[i] + 1) * n];
        // the part labels are interchangeable, so pin the first member
        let parts: &[u8] = if i == 0 { &[0] } else { &[0, 1] };
        'parts: for &p in parts {
            for &l in lines {
                if part_count[l as usize][p as usize] > 0 {
                    continue 'parts;
                }
            }
            for &l in lines {
                part_count[l as usize][p as usize] += 1;
            }
            assignment[i] = p;
            if go(i + 1, members, n, cell_lines, part_count, assignment) {
                return true;
            }
            for &l in lines {
                part_count[l as usize][p as usize] -= 1;
            }
        }
        false
    }

    if go(
        0,
        &members,
        n,
        &state.cell_lines,
        &mut part_count,
        &mut assignment,
    ) {
        let mut parts = [
            CodeSet::empty(m.order(), m.word_len()),
            CodeSet::empty(m.order(), m.word_len()),
        ];
        for (i, &idx) in members.iter().enumerate() {
            parts[assignment[i] as usize].insert_index(idx);
        }
        Some(parts)
    } else {
        None
    }
}

/// Searches for an unsplittable 2-fold MDS code in `Sigma^word_len` by
/// randomized generation with restarts. Asserts the duality property on the
/// witness: its complement is unsplittable too.
pub fn find_unsplittable(
    word_len: usize,
    budget: Budget,
    seed: u64,
) -> Result<CodeSet, VerifyError> {
    assert!(word_len >= 3, "unsplittable 2-fold codes need word length >= 3");
    let clock = BudgetClock::new(&budget);
    let mut attempt = 0u64;
    loop {
        if clock.charge(1) {
            return Err(VerifyError::NotFoundWithinBudget);
        }
        let mut rng = item_rng(seed, attempt);
        let code = random_2fold_code(word_len, &mut rng);
        if split_2fold(&code)
            .expect("generated code is 2-fold")
            .is_none()
        {
            let complement = code.complement();
            assert!(
                split_2fold(&complement)
                    .expect("complement of a 2-fold code is 2-fold")
                    .is_none(),
                "duality: the complement of an unsplittable code must be unsplittable"
            );
            return Ok(code);
        }
        attempt += 1;
    }
}

// ---------------------------------------------------------------------------
// Structural profiles and the lemma-case taxonomy

#[derive(Clone, Debug)]
struct Profile {
    reducible: bool,
    completely_reducible: bool,
    partition: Vec<Vec<usize>>,
    root_arity: usize,
}

fn profile_of(q: &QuasigroupTable) -> Profile {
    if q.arity() < 3 || is_reducible(q).is_none() {
        return Profile {
            reducible: false,
            completely_reducible: false,
            partition: Vec::new(),
            root_arity: 0,
        };
    }
    let tree = canonical_decomposition(q);
    Profile {
        reducible: true,
        completely_reducible: is_completely_reducible(q),
        partition: tree.top_partition(),
        root_arity: tree.root_arity(),
    }
}

fn classify_profiles(pf: &Profile, pg: &Profile) -> LemmaCase {
    if !pf.reducible || !pg.reducible {
        LemmaCase::IrreduciblePresent
    } else if !(pf.completely_reducible && pg.completely_reducible)
        && pf.partition != pg.partition
    {
        LemmaCase::ReducibleDifferentPartitions
    } else if pf.partition == pg.partition && pf.root_arity >= 4 {
        LemmaCase::ReducibleSamePartitionM4
    } else if pf.completely_reducible && pg.completely_reducible {
        LemmaCase::BothCompletelyReducible
    } else {
        LemmaCase::Unclassified
    }
}

/// Assigns a disjoint pair to its lemma case.
pub fn classify_pair(
    f: &QuasigroupTable,
    g: &QuasigroupTable,
) -> Result<LemmaCase, VerifyError> {
    if !pointwise_disjoint(f, g) {
        return Err(VerifyError::NotDisjoint);
    }
    Ok(classify_profiles(&profile_of(f), &profile_of(g)))
}

/// A deterministic irreducible quasigroup of the given arity, found once by
/// seeded random search and cached.
pub fn irreducible_quasigroup(arity: usize) -> &'static QuasigroupTable {
    assert!((3..=4).contains(&arity), "search supported for arities 3 and 4");
    static IRR3: OnceLock<QuasigroupTable> = OnceLock::new();
    static IRR4: OnceLock<QuasigroupTable> = OnceLock::new();
    let cell = if arity == 3 { &IRR3 } else { &IRR4 };
    cell.get_or_init(|| {
        let mut stream = 0u64;
        loop {
            let mut rng = item_rng(0x1bbc_ded4_3f0d_9e6b, stream);
            let q = random_quasigroup(arity, &mut rng);
            if is_reducible(&q).is_none() {
                return q;
            }
            stream += 1;
        }
    })
}

// ---------------------------------------------------------------------------
// Pair checks

fn pair_payload(f: &QuasigroupTable, g: &QuasigroupTable) -> String {
    let mut cells = Vec::with_capacity(f.cells().len() * 2);
    for i in 0..f.cells().len() {
        cells.push(f.cells()[i]);
        cells.push(g.cells()[i]);
    }
    let shape = Shape::cuboid(4, f.arity() + 1, 2).expect("pair shape is valid");
    let table = HypercuboidTable::new(shape, cells).expect("disjoint pair stacks");
    fileio::table_to_text(&table)
}

/// One base-case check: classify the pair, extend it, and verify the
/// extension restricts to the pair and is latin.
fn check_pair(
    key: u64,
    f: &QuasigroupTable,
    g: &QuasigroupTable,
    pf: &Profile,
    pg: &Profile,
    tally: &mut Tally,
) {
    tally.universe += 1;
    tally.cases.add(classify_profiles(pf, pg));
    let ok = match combine_disjoint(f, g) {
        Ok(big) => {
            big.as_table().layer(0) == *f.as_table()
                && big.as_table().layer(1) == *g.as_table()
                && big.as_table().is_valid()
        }
        Err(_) => false,
    };
    if !ok {
        tally.counterexamples += 1;
        tally.payloads.push((key, pair_payload(f, g)));
    }
}

// ---------------------------------------------------------------------------
// Claim: base cases (disjoint pairs extend)

/// Verifies that disjoint n-ary pairs extend to `(n+1)`-ary quasigroups:
/// exhaustively over the full pair universe for `arity <= 3`, by seeded
/// sampling (plus structured adversarial families at arity 4) otherwise.
pub fn verify_base_cases(
    arity: usize,
    mode: RunMode,
    samples: u64,
    seed: u64,
    budget: Budget,
) -> Result<VerificationReport, VerifyError> {
    let clock = BudgetClock::new(&budget);
    match mode {
        RunMode::Exhaustive => {
            let fs: Vec<QuasigroupTable> = enumerate_quasigroups(arity)?.collect();
            let tally = fs
                .par_iter()
                .enumerate()
                .map(|(i, f)| {
                    let mut tally = Tally::default();
                    if clock.exceeded() {
                        tally.budget_exceeded = true;
                        return tally;
                    }
                    let pf = profile_of(f);
                    let mut mate_cache: HashMap<Vec<u8>, Profile> = HashMap::new();
                    for (j, g) in disjoint_mates(f).enumerate() {
                        if j % 512 == 0 && clock.charge(512) {
                            tally.budget_exceeded = true;
                            break;
                        }
                        let pg = mate_cache
                            .entry(g.cells().to_vec())
                            .or_insert_with(|| profile_of(&g))
                            .clone();
                        let key = (i as u64) << 32 | j as u64;
                        check_pair(key, f, &g, &pf, &pg, &mut tally);
                    }
                    tally
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(Tally::default(), Tally::merge);
            Ok(finish_report(
                "base-cases",
                mode,
                arity,
                None,
                None,
                Vec::new(),
                &clock,
                tally,
            ))
        }
        RunMode::Sample => {
            let families: &[(&str, u64)] = if arity == 4 {
                &[
                    ("cyclic-sum isotopes", 500),
                    ("klein-sum isotopes", 500),
                    ("irreducible isotopes", 500),
                    ("mixed reducible", 500),
                ]
            } else {
                &[]
            };
            let family_total: u64 = families.iter().map(|(_, c)| c).sum();
            let tally = (0..samples + family_total)
                .into_par_iter()
                .map(|i| {
                    let mut tally = Tally::default();
                    if i % 64 == 0 && clock.charge(64) {
                        tally.budget_exceeded = true;
                        return tally;
                    }
                    let mut rng = item_rng(seed, i);
                    let f = if i < samples {
                        random_quasigroup(arity, &mut rng)
                    } else {
                        let mut rest = i - samples;
                        let mut family = 0usize;
                        while rest >= families[family].1 {
                            rest -= families[family].1;
                            family += 1;
                        }
                        let base = match family {
                            0 => QuasigroupTable::cyclic_sum(4, arity),
                            1 => QuasigroupTable::klein_sum(arity),
                            2 => irreducible_quasigroup(arity).clone(),
                            _ => {
                                // irreducible ternary root with one grouped pair
                                let root = irreducible_quasigroup(3);
                                let square = random_quasigroup(2, &mut rng);
                                QuasigroupTable::from_fn(4, 4, |x| {
                                    root.eval(&[square.eval(&[x[0], x[1]]), x[2], x[3]])
                                })
                                .expect("composition of latin tables is latin")
                            }
                        };
                        random_isotope(&base, &mut rng)
                    };
                    let g = random_disjoint_mate(&f, &mut rng);
                    let (pf, pg) = (profile_of(&f), profile_of(&g));
                    check_pair(i, &f, &g, &pf, &pg, &mut tally);
                    tally
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(Tally::default(), Tally::merge);
            let mut notes = vec![
                "sampled universe: full exhaustion is out of desk-scale reach for this arity"
                    .to_string(),
            ];
            for (name, count) in families {
                notes.push(format!("adversarial family: {name} x{count}"));
            }
            Ok(finish_report(
                "base-cases",
                mode,
                arity,
                Some(seed),
                Some(samples),
                notes,
                &clock,
                tally,
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// Claim: theorem over cuboids

fn check_cuboid(key: u64, t: &HypercuboidTable, tally: &mut Tally) {
    tally.universe += 1;
    let k = t.shape().last_dim();
    let ok = match complete(t) {
        Ok(cube) => cube.as_table().truncate_layers(k) == *t && cube.as_table().is_valid(),
        Err(_) => false,
    };
    if !ok {
        tally.counterexamples += 1;
        tally.payloads.push((key, fileio::table_to_text(t)));
    }
}

/// Verifies completion over order-4 cuboids of dimension `ndims` for each
/// truncated extent `k in {1, 2, 3}`: exhaustively (sharded by the first
/// layer) or by seeded sampling.
pub fn verify_theorem_cuboids(
    ndims: usize,
    mode: RunMode,
    samples: u64,
    seed: u64,
    budget: Budget,
) -> Result<VerificationReport, VerifyError> {
    let clock = BudgetClock::new(&budget);
    match mode {
        RunMode::Exhaustive => {
            if ndims == 1 {
                // single lines: enumerate directly, no layer sharding
                let mut tally = Tally::default();
                for k in 1..=3usize {
                    for (j, t) in enumerate_cuboids(1, k).enumerate() {
                        check_cuboid((k as u64) << 32 | j as u64, &t, &mut tally);
                    }
                }
                return Ok(finish_report(
                    "theorem-cuboids",
                    mode,
                    ndims,
                    None,
                    None,
                    Vec::new(),
                    &clock,
                    tally,
                ));
            }
            let layers: Vec<QuasigroupTable> = enumerate_quasigroups(ndims - 1)?.collect();
            let tally = layers
                .par_iter()
                .enumerate()
                .map(|(i, layer0)| {
                    let mut tally = Tally::default();
                    for k in 1..=3usize {
                        if clock.exceeded() {
                            tally.budget_exceeded = true;
                            return tally;
                        }
                        for (j, t) in cuboids_extending(layer0, k).enumerate() {
                            if j % 512 == 0 && clock.charge(512) {
                                tally.budget_exceeded = true;
                                break;
                            }
                            let key = (k as u64) << 56 | (i as u64) << 28 | j as u64;
                            check_cuboid(key, &t, &mut tally);
                        }
                    }
                    tally
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(Tally::default(), Tally::merge);
            Ok(finish_report(
                "theorem-cuboids",
                mode,
                ndims,
                None,
                None,
                Vec::new(),
                &clock,
                tally,
            ))
        }
        RunMode::Sample => {
            let tally = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut tally = Tally::default();
                    if i % 64 == 0 && clock.charge(64) {
                        tally.budget_exceeded = true;
                        return tally;
                    }
                    let mut rng = item_rng(seed, i);
                    let k = 1 + (i % 3) as usize;
                    let t = random_cuboid(ndims, k, &mut rng);
                    check_cuboid(i, &t, &mut tally);
                    tally
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(Tally::default(), Tally::merge);
            Ok(finish_report(
                "theorem-cuboids",
                mode,
                ndims,
                Some(seed),
                Some(samples),
                Vec::new(),
                &clock,
                tally,
            ))
        }
    }
}

// ---------------------------------------------------------------------------
// Claim: reducible or semilinear

fn check_prop1(key: u64, q: &QuasigroupTable, tally: &mut Tally) {
    tally.universe += 1;
    if is_reducible(q).is_none() && is_semilinear(q).is_none() {
        tally.counterexamples += 1;
        tally
            .payloads
            .push((key, fileio::table_to_text(q.as_table())));
    }
}

/// Verifies that every order-4 quasigroup of the given arity is reducible
/// or semilinear: full census when enumeration is within reach and budget,
/// seeded sampling otherwise (the fallback is recorded in the report).
pub fn verify_prop1(
    arity: usize,
    mode: RunMode,
    samples: u64,
    seed: u64,
    budget: Budget,
) -> Result<VerificationReport, VerifyError> {
    let clock = BudgetClock::new(&budget);
    let sampled = |clock: &BudgetClock, notes: Vec<String>| {
        let tally = (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut tally = Tally::default();
                if i % 256 == 0 && clock.charge(256) {
                    tally.budget_exceeded = true;
                    return tally;
                }
                let mut rng = item_rng(seed, i);
                let q = random_quasigroup(arity, &mut rng);
                check_prop1(i, &q, &mut tally);
                tally
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Tally::default(), Tally::merge);
        finish_report(
            "prop1",
            RunMode::Sample,
            arity,
            Some(seed),
            Some(samples),
            notes,
            clock,
            tally,
        )
    };
    match mode {
        RunMode::Exhaustive => {
            if arity > 3 {
                return Err(VerifyError::ArityTooLarge { arity, max: 3 });
            }
            let qs: Vec<QuasigroupTable> = enumerate_quasigroups(arity)?.collect();
            if clock.exceeded() {
                let notes = vec![
                    "exhaustive enumeration exceeded the budget; sampled fallback".to_string(),
                ];
                return Ok(sampled(&clock, notes));
            }
            let tally = qs
                .par_chunks(256)
                .enumerate()
                .map(|(chunk_idx, chunk)| {
                    let mut tally = Tally::default();
                    if clock.charge(chunk.len() as u64) {
                        tally.budget_exceeded = true;
                        return tally;
                    }
                    for (j, q) in chunk.iter().enumerate() {
                        check_prop1((chunk_idx * 256 + j) as u64, q, &mut tally);
                    }
                    tally
                })
                .collect::<Vec<_>>()
                .into_iter()
                .fold(Tally::default(), Tally::merge);
            Ok(finish_report(
                "prop1",
                mode,
                arity,
                None,
                None,
                Vec::new(),
                &clock,
                tally,
            ))
        }
        RunMode::Sample => Ok(sampled(&clock, Vec::new())),
    }
}
