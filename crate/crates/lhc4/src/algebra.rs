//! Symmetry operations on order-4 codes and quasigroups: isotopy,
//! parastrophy, retracts, and an isotopy search for small word lengths.
//!
//! A set isotopy carries one permutation per word coordinate. A quasigroup
//! isotopy carries `n + 1` permutations, the last one acting on the value
//! coordinate of the graph.

use thiserror::Error;

use crate::qcore::{CodeSet, QuasigroupTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("isotopy has {perms} permutations but the object needs {expected}")]
    ArityMismatch { perms: usize, expected: usize },
    #[error("cannot fix {fixed} of {arity} argument positions")]
    TooManyFixed { fixed: usize, arity: usize },
    #[error("invalid fixing: {0}")]
    BadFixing(&'static str),
    #[error("operation requires order 4, got {0}")]
    UnsupportedOrder(usize),
}

/// A permutation of the order-4 symbol set, stored as its image table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Perm([u8; 4]);

impl Perm {
    pub fn identity() -> Self {
        Perm([0, 1, 2, 3])
    }

    pub fn new(image: [u8; 4]) -> Option<Self> {
        let mut seen = [false; 4];
        for &v in &image {
            if v > 3 || seen[v as usize] {
                return None;
            }
            seen[v as usize] = true;
        }
        Some(Perm(image))
    }

    /// The cyclic shift `x -> x + c mod 4`.
    pub fn shift(c: u8) -> Self {
        Perm([c % 4, (1 + c) % 4, (2 + c) % 4, (3 + c) % 4])
    }

    pub fn apply(&self, x: u8) -> u8 {
        self.0[x as usize]
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = [0u8; 4];
        for (x, &y) in self.0.iter().enumerate() {
            inv[y as usize] = x as u8;
        }
        Perm(inv)
    }

    /// Function composition: apply `first`, then `self`.
    pub fn after(&self, first: &Perm) -> Perm {
        Perm([
            self.apply(first.0[0]),
            self.apply(first.0[1]),
            self.apply(first.0[2]),
            self.apply(first.0[3]),
        ])
    }

    pub fn image(&self) -> [u8; 4] {
        self.0
    }

    /// All 24 permutations in lexicographic order of their image tables.
    pub fn all() -> Vec<Perm> {
        let mut out = Vec::with_capacity(24);
        for a in 0..4u8 {
            for b in 0..4u8 {
                for c in 0..4u8 {
                    for d in 0..4u8 {
                        if let Some(p) = Perm::new([a, b, c, d]) {
                            out.push(p);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Per-coordinate symbol permutations acting on a code or a quasigroup
/// graph. For a quasigroup of arity n the list has `n + 1` entries with the
/// value permutation last.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isotopy {
    perms: Vec<Perm>,
}

impl Isotopy {
    pub fn new(perms: Vec<Perm>) -> Self {
        Isotopy { perms }
    }

    pub fn identity(len: usize) -> Self {
        Isotopy {
            perms: vec![Perm::identity(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.perms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perms.is_empty()
    }

    pub fn perms(&self) -> &[Perm] {
        &self.perms
    }

    pub fn inverse(&self) -> Isotopy {
        Isotopy {
            perms: self.perms.iter().map(Perm::inverse).collect(),
        }
    }

    /// Composite whose action applies `other` first, then `self`:
    /// `apply(M, self.compose(other)) == apply(apply(M, other), self)`.
    pub fn compose(&self, other: &Isotopy) -> Isotopy {
        assert_eq!(self.perms.len(), other.perms.len());
        Isotopy {
            perms: self
                .perms
                .iter()
                .zip(&other.perms)
                .map(|(t, s)| s.after(t))
                .collect(),
        }
    }

    /// Image code `M'` with `chi_M'(x) = chi_M(t1 x1, .., tn xn)`. Preserves
    /// cardinality and every k-fold property.
    pub fn apply_code(&self, m: &CodeSet) -> Result<CodeSet, AlgebraError> {
        if m.order() != 4 {
            return Err(AlgebraError::UnsupportedOrder(m.order()));
        }
        if self.perms.len() != m.word_len() {
            return Err(AlgebraError::ArityMismatch {
                perms: self.perms.len(),
                expected: m.word_len(),
            });
        }
        let inv: Vec<Perm> = self.perms.iter().map(Perm::inverse).collect();
        let mut out = CodeSet::empty(m.order(), m.word_len());
        let mut image = vec![0u8; m.word_len()];
        for word in m.words() {
            for (i, &c) in word.iter().enumerate() {
                image[i] = inv[i].apply(c);
            }
            out.insert(&image);
        }
        Ok(out)
    }

    /// Image quasigroup `q'(x) = t0^-1(q(t1 x1, .., tn xn))`; the unique
    /// quasigroup whose graph is the isotopy image of `q`'s graph.
    pub fn apply_quasigroup(&self, q: &QuasigroupTable) -> Result<QuasigroupTable, AlgebraError> {
        if q.order() != 4 {
            return Err(AlgebraError::UnsupportedOrder(q.order()));
        }
        let n = q.arity();
        if self.perms.len() != n + 1 {
            return Err(AlgebraError::ArityMismatch {
                perms: self.perms.len(),
                expected: n + 1,
            });
        }
        let value_inv = self.perms[n].inverse();
        let q2 = QuasigroupTable::from_fn(4, n, |x| {
            let args: Vec<u8> = x
                .iter()
                .enumerate()
                .map(|(i, &c)| self.perms[i].apply(c))
                .collect();
            value_inv.apply(q.eval(&args))
        })
        .expect("isotopy image of a latin table is latin");
        Ok(q2)
    }
}

/// A permutation of the `n + 1` roles of a quasigroup relation; position 0
/// is the value coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parastrophy {
    sigma: Vec<usize>,
}

impl Parastrophy {
    pub fn new(sigma: Vec<usize>) -> Option<Self> {
        let m = sigma.len();
        let mut seen = vec![false; m];
        for &v in &sigma {
            if v >= m || seen[v] {
                return None;
            }
            seen[v] = true;
        }
        Some(Parastrophy { sigma })
    }

    pub fn identity(arity: usize) -> Self {
        Parastrophy {
            sigma: (0..=arity).collect(),
        }
    }

    /// Swap of positions `a` and `b` among `0..=arity`.
    pub fn transposition(arity: usize, a: usize, b: usize) -> Self {
        let mut sigma: Vec<usize> = (0..=arity).collect();
        sigma.swap(a, b);
        Parastrophy { sigma }
    }

    pub fn inverse(&self) -> Parastrophy {
        let mut inv = vec![0usize; self.sigma.len()];
        for (i, &v) in self.sigma.iter().enumerate() {
            inv[v] = i;
        }
        Parastrophy { sigma: inv }
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }
}

/// The quasigroup `g` with `x_{sigma 0} = f(x_{sigma 1}, .., x_{sigma n})`
/// iff `x_0 = g(x_1, .., x_n)`.
pub fn parastrophe(q: &QuasigroupTable, p: &Parastrophy) -> QuasigroupTable {
    let n = q.arity();
    assert_eq!(p.sigma.len(), n + 1, "parastrophy arity mismatch");
    // graph words are stored (x1, .., xn, x0): abstract position p sits at
    // slot p-1 for p >= 1 and slot n for p = 0
    let slot = |pos: usize| if pos == 0 { n } else { pos - 1 };
    let source: Vec<usize> = (0..=n)
        .map(|j| {
            let pos = if j == n { 0 } else { j + 1 };
            slot(p.sigma[pos])
        })
        .collect();
    let graph = q.graph().permute_positions(&source);
    QuasigroupTable::from_code(&graph).expect("parastroph graph is MDS")
}

/// Fixes `l` argument positions (1-based) of `q`, producing the
/// `(n - l)`-ary principal retract over the remaining positions in
/// ascending order.
pub fn retract(
    q: &QuasigroupTable,
    fixed: &[(usize, u8)],
) -> Result<QuasigroupTable, AlgebraError> {
    let n = q.arity();
    let l = fixed.len();
    if l == 0 || l >= n {
        return Err(AlgebraError::TooManyFixed { fixed: l, arity: n });
    }
    let mut assigned = vec![None; n];
    for &(pos, val) in fixed {
        if pos == 0 || pos > n {
            return Err(AlgebraError::BadFixing("position out of range"));
        }
        if val as usize >= q.order() {
            return Err(AlgebraError::BadFixing("value out of range"));
        }
        if assigned[pos - 1].is_some() {
            return Err(AlgebraError::BadFixing("duplicate position"));
        }
        assigned[pos - 1] = Some(val);
    }
    let free: Vec<usize> = (0..n).filter(|i| assigned[*i].is_none()).collect();
    let mut args = vec![0u8; n];
    for (i, a) in assigned.iter().enumerate() {
        if let Some(v) = a {
            args[i] = *v;
        }
    }
    let table = QuasigroupTable::from_fn(q.order(), n - l, |x| {
        let mut args = args.clone();
        for (j, &i) in free.iter().enumerate() {
            args[i] = x[j];
        }
        q.eval(&args)
    })
    .expect("retract of a latin table is latin");
    Ok(table)
}

/// Searches for a set isotopy `t` with `apply_code(m1, t) == m2`, i.e.
/// `t` maps `m2` onto `m1` coordinatewise. Backtracking over per-coordinate
/// permutations with marginal-count pruning; intended for word length <= 5.
pub fn find_isotopy(m1: &CodeSet, m2: &CodeSet) -> Result<Option<Isotopy>, AlgebraError> {
    if m1.order() != 4 || m2.order() != 4 {
        return Err(AlgebraError::UnsupportedOrder(m1.order().max(m2.order())));
    }
    if m1.word_len() != m2.word_len() {
        return Err(AlgebraError::ArityMismatch {
            perms: m2.word_len(),
            expected: m1.word_len(),
        });
    }
    if m1.cardinality() != m2.cardinality() {
        return Ok(None);
    }
    let n = m1.word_len();
    let counts1 = m1.coordinate_counts();
    let counts2 = m2.coordinate_counts();
    // frequency multisets must agree coordinatewise
    for i in 0..n {
        let mut a = counts1[i].clone();
        let mut b = counts2[i].clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Ok(None);
        }
    }

    // prefix marginals of m1 and m2 at each depth d: counts over Sigma^d
    let words1: Vec<Vec<u8>> = m1.words().collect();
    let words2: Vec<Vec<u8>> = m2.words().collect();
    let prefix_counts = |words: &[Vec<u8>], d: usize| -> Vec<u32> {
        let mut counts = vec![0u32; 4usize.pow(d as u32)];
        for w in words {
            let mut idx = 0usize;
            for &c in &w[..d] {
                idx = idx * 4 + c as usize;
            }
            counts[idx] += 1;
        }
        counts
    };
    let m1_prefix: Vec<Vec<u32>> = (1..=n).map(|d| prefix_counts(&words1, d)).collect();
    let m2_prefix: Vec<Vec<u32>> = (1..=n).map(|d| prefix_counts(&words2, d)).collect();

    let all_perms = Perm::all();
    let mut chosen: Vec<Perm> = Vec::with_capacity(n);

    // the witness requires count(m2, x_i = s) == count(m1, x_i = t_i(s))
    fn consistent_depth(
        depth: usize,
        chosen: &[Perm],
        m1_prefix: &[Vec<u32>],
        m2_prefix: &[Vec<u32>],
    ) -> bool {
        let size = 4usize.pow(depth as u32);
        let m1c = &m1_prefix[depth - 1];
        let m2c = &m2_prefix[depth - 1];
        for u in 0..size {
            // map prefix u through the chosen permutations
            let mut mapped = 0usize;
            let mut rest = u;
            let mut digits = [0u8; 8];
            for d in (0..depth).rev() {
                digits[d] = (rest % 4) as u8;
                rest /= 4;
            }
            for (d, digit) in digits.iter().enumerate().take(depth) {
                mapped = mapped * 4 + chosen[d].apply(*digit) as usize;
            }
            if m2c[u] != m1c[mapped] {
                return false;
            }
        }
        true
    }

    fn search(
        depth: usize,
        n: usize,
        chosen: &mut Vec<Perm>,
        all_perms: &[Perm],
        counts1: &[Vec<usize>],
        counts2: &[Vec<usize>],
        m1_prefix: &[Vec<u32>],
        m2_prefix: &[Vec<u32>],
    ) -> bool {
        if depth == n {
            return true;
        }
        'next: for p in all_perms {
            for s in 0..4usize {
                if counts2[depth][s] != counts1[depth][p.apply(s as u8) as usize] {
                    continue 'next;
                }
            }
            chosen.push(*p);
            if consistent_depth(depth + 1, chosen, m1_prefix, m2_prefix)
                && search(
                    depth + 1,
                    n,
                    chosen,
                    all_perms,
                    counts1,
                    counts2,
                    m1_prefix,
                    m2_prefix,
                )
            {
                return true;
            }
            chosen.pop();
        }
        false
    }

    if search(
        0,
        n,
        &mut chosen,
        &all_perms,
        &counts1,
        &counts2,
        &m1_prefix,
        &m2_prefix,
    ) {
        let witness = Isotopy::new(chosen);
        debug_assert_eq!(witness.apply_code(m1).expect("same arity"), *m2);
        Ok(Some(witness))
    } else {
        Ok(None)
    }
}
