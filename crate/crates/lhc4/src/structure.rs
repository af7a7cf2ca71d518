//! Structural classification of order-4 quasigroups: reducibility, the
//! canonical decomposition tree, complete reducibility and its group form,
//! and (semi)linearity of 2-fold MDS codes.

use std::collections::HashMap;
use std::collections::HashSet;

use thiserror::Error;

use crate::algebra::{Isotopy, Perm};
use crate::qcore::{CodeSet, QuasigroupTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("quasigroup is not completely reducible")]
    NotCompletelyReducible,
    #[error("code is not a 2-fold MDS code")]
    NotTwoFold,
}

/// Witness that `f(x) == outer(inner(x_A), x_rest)` for the variable subset
/// `A = vars` (1-based, ascending). `outer` takes the inner value as its
/// first argument, followed by the remaining variables in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub vars: Vec<usize>,
    pub inner: QuasigroupTable,
    pub outer: QuasigroupTable,
}

/// Fingerprint grouping for one variable subset (0-based bitmask). When `q`
/// factors through the subset, returns the inner quasigroup labeled by the
/// retract at rest-coordinates zero.
fn reducible_wrt(q: &QuasigroupTable, mask: u32) -> Option<QuasigroupTable> {
    let n = q.arity();
    let a_vars: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
    let rest_vars: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
    let m = a_vars.len();
    debug_assert!(m >= 2 && m < n);
    let a_size = 1usize << (2 * m);
    let rest_size = 1usize << (2 * (n - m));

    // section of q over the rest variables, per subset assignment
    let mut sections = vec![vec![0u8; rest_size]; a_size];
    for (idx, &v) in q.cells().iter().enumerate() {
        let mut a_idx = 0usize;
        for &i in &a_vars {
            a_idx = a_idx << 2 | (idx >> (2 * (n - 1 - i))) & 3;
        }
        let mut rest_idx = 0usize;
        for &i in &rest_vars {
            rest_idx = rest_idx << 2 | (idx >> (2 * (n - 1 - i))) & 3;
        }
        sections[a_idx][rest_idx] = v;
    }

    // when q factors through the subset, sections take four distinct values
    // at every rest point, so the value at rest = 0 labels the classes
    let labels: Vec<u8> = sections.iter().map(|s| s[0]).collect();
    let mut rep: [Option<usize>; 4] = [None; 4];
    for (a_idx, section) in sections.iter().enumerate() {
        let l = labels[a_idx] as usize;
        match rep[l] {
            None => rep[l] = Some(a_idx),
            Some(r) => {
                if &sections[r] != section {
                    return None;
                }
            }
        }
    }
    // the class map must itself be a latin table over the subset
    QuasigroupTable::new(4, m, labels).ok()
}

/// Builds the outer quasigroup for a reduction: first argument is the inner
/// value, remaining arguments are the rest variables ascending.
fn outer_table(q: &QuasigroupTable, mask: u32, inner: &QuasigroupTable) -> QuasigroupTable {
    let n = q.arity();
    let a_vars: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
    let rest_vars: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 0).collect();
    let m = a_vars.len();
    // representative subset assignment per inner value
    let mut rep = [usize::MAX; 4];
    for a_idx in (0..1usize << (2 * m)).rev() {
        rep[inner.cells()[a_idx] as usize] = a_idx;
    }
    QuasigroupTable::from_fn(4, n - m + 1, |args| {
        let a_idx = rep[args[0] as usize];
        let mut coords = vec![0u8; n];
        for (j, &i) in a_vars.iter().enumerate() {
            coords[i] = (a_idx >> (2 * (m - 1 - j)) & 3) as u8;
        }
        for (j, &i) in rest_vars.iter().enumerate() {
            coords[i] = args[j + 1];
        }
        q.eval(&coords)
    })
    .expect("outer factor of a reduction is latin")
}

/// Sorted subsets of `{1, .., n}` with sizes in `min..=max`, emitted in
/// lexicographic order of the subset vectors.
fn subsets_lex(n: usize, min: usize, max: usize) -> Vec<Vec<usize>> {
    fn go(n: usize, min: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let start = prefix.last().map_or(1, |&v| v + 1);
        for next in start..=n {
            prefix.push(next);
            if prefix.len() >= min && prefix.len() <= max {
                out.push(prefix.clone());
            }
            if prefix.len() < max {
                go(n, min, max, prefix, out);
            }
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, min, max, &mut Vec::new(), &mut out);
    out
}

/// Searches variable subsets `A` with `2 <= |A| <= n-1` in lexicographic
/// order and returns the first that factors `q`, with witnesses. Binary and
/// unary quasigroups are irreducible by definition.
pub fn is_reducible(q: &QuasigroupTable) -> Option<Reduction> {
    let n = q.arity();
    if n < 3 {
        return None;
    }
    for vars in subsets_lex(n, 2, n - 1) {
        let mask = vars.iter().fold(0u32, |m, &v| m | 1 << (v - 1));
        if let Some(inner) = reducible_wrt(q, mask) {
            let outer = outer_table(q, mask, &inner);
            return Some(Reduction { vars, inner, outer });
        }
    }
    None
}

/// One node of a decomposition tree: a variable, or an inner quasigroup
/// applied to the values of its ordered children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompNode {
    /// 1-based variable index.
    Leaf(usize),
    Inner {
        op: QuasigroupTable,
        children: Vec<DecompNode>,
    },
}

impl DecompNode {
    pub fn eval(&self, x: &[u8]) -> u8 {
        match self {
            DecompNode::Leaf(v) => x[*v - 1],
            DecompNode::Inner { op, children } => {
                let args: Vec<u8> = children.iter().map(|c| c.eval(x)).collect();
                op.eval(&args)
            }
        }
    }

    pub fn leaves(&self, out: &mut Vec<usize>) {
        match self {
            DecompNode::Leaf(v) => out.push(*v),
            DecompNode::Inner { children, .. } => {
                for c in children {
                    c.leaves(out);
                }
            }
        }
    }

    fn relabel(&mut self, map: &[usize]) {
        match self {
            DecompNode::Leaf(v) => *v = map[*v - 1],
            DecompNode::Inner { children, .. } => {
                for c in children {
                    c.relabel(map);
                }
            }
        }
    }
}

/// Canonical decomposition of a quasigroup: an irreducible root applied to
/// recursively decomposed blocks of variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionTree {
    arity: usize,
    root: DecompNode,
}

impl DecompositionTree {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> &DecompNode {
        &self.root
    }

    pub fn root_op(&self) -> &QuasigroupTable {
        match &self.root {
            DecompNode::Inner { op, .. } => op,
            DecompNode::Leaf(_) => unreachable!("tree roots are inner nodes"),
        }
    }

    /// Number of root blocks (`m` in the canonical form).
    pub fn root_arity(&self) -> usize {
        match &self.root {
            DecompNode::Inner { children, .. } => children.len(),
            DecompNode::Leaf(_) => unreachable!("tree roots are inner nodes"),
        }
    }

    /// The root-level variable blocks, each sorted, ordered by minimum.
    pub fn top_partition(&self) -> Vec<Vec<usize>> {
        match &self.root {
            DecompNode::Inner { children, .. } => children
                .iter()
                .map(|c| {
                    let mut vs = Vec::new();
                    c.leaves(&mut vs);
                    vs.sort_unstable();
                    vs
                })
                .collect(),
            DecompNode::Leaf(_) => unreachable!("tree roots are inner nodes"),
        }
    }

    pub fn eval(&self, x: &[u8]) -> u8 {
        self.root.eval(x)
    }

    /// True when the root is the quasigroup itself over bare leaves.
    pub fn is_identity_decomposition(&self) -> bool {
        match &self.root {
            DecompNode::Inner { children, .. } => {
                children.iter().all(|c| matches!(c, DecompNode::Leaf(_)))
                    && children.len() == self.arity
            }
            DecompNode::Leaf(_) => false,
        }
    }
}

/// A multi-block factorization candidate: blocks are 0-based, sorted, and
/// ordered by minimum element.
struct Candidate {
    blocks: Vec<Vec<usize>>,
    root: QuasigroupTable,
    block_tables: Vec<Option<QuasigroupTable>>,
}

/// Set partitions of `{0, .., n-1}` via restricted growth strings.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut assign = vec![0usize; n];
    fn go(i: usize, n: usize, max_used: usize, assign: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let blocks_count = max_used + 1;
            let mut blocks = vec![Vec::new(); blocks_count];
            for (v, &b) in assign.iter().enumerate() {
                blocks[b].push(v);
            }
            out.push(blocks);
            return;
        }
        for b in 0..=max_used + 1 {
            assign[i] = b;
            go(i + 1, n, max_used.max(b), assign, out);
        }
    }
    // variable 0 always opens block 0
    go(1, n, 0, &mut assign, &mut out);
    out
}

/// All partitions (with at least two blocks, not all singletons) whose
/// non-singleton blocks each factor `q` and whose collapsed root is
/// irreducible.
fn factorization_candidates(
    q: &QuasigroupTable,
    memo: &mut HashMap<u32, Option<QuasigroupTable>>,
) -> Vec<Candidate> {
    let n = q.arity();
    let mut candidates = Vec::new();
    if n < 3 {
        return candidates;
    }
    'partition: for blocks in set_partitions(n) {
        let m = blocks.len();
        if m < 2 || m == n {
            continue;
        }
        let mut block_tables = Vec::with_capacity(m);
        for block in &blocks {
            if block.len() == 1 {
                block_tables.push(None);
                continue;
            }
            let mask = block.iter().fold(0u32, |acc, &v| acc | 1 << v);
            let entry = memo
                .entry(mask)
                .or_insert_with(|| reducible_wrt(q, mask))
                .clone();
            match entry {
                Some(t) => block_tables.push(Some(t)),
                None => continue 'partition,
            }
        }
        let root = collapse_root(q, &blocks, &block_tables);
        if is_reducible(&root).is_none() {
            candidates.push(Candidate {
                blocks,
                root,
                block_tables,
            });
        }
    }
    candidates
}

/// Root table over the block values: `root(u) = q` at per-block class
/// representatives.
fn collapse_root(
    q: &QuasigroupTable,
    blocks: &[Vec<usize>],
    block_tables: &[Option<QuasigroupTable>],
) -> QuasigroupTable {
    let n = q.arity();
    let m = blocks.len();
    // rep[j][u] = lexicographically first block assignment with label u
    let reps: Vec<[usize; 4]> = block_tables
        .iter()
        .map(|table| match table {
            None => [0, 1, 2, 3],
            Some(t) => {
                let mut rep = [usize::MAX; 4];
                for a_idx in (0..t.cells().len()).rev() {
                    rep[t.cells()[a_idx] as usize] = a_idx;
                }
                rep
            }
        })
        .collect();
    QuasigroupTable::from_fn(4, m, |u| {
        let mut coords = vec![0u8; n];
        for (j, block) in blocks.iter().enumerate() {
            let a_idx = reps[j][u[j] as usize];
            let width = block.len();
            for (pos, &var) in block.iter().enumerate() {
                coords[var] = (a_idx >> (2 * (width - 1 - pos)) & 3) as u8;
            }
        }
        q.eval(&coords)
    })
    .expect("collapsed root of an admissible partition is latin")
}

/// Deterministic candidate order: finest first; ties prefer peeling a late,
/// small, lexicographically early last block (yielding left-nested chains).
fn better_candidate(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match a.blocks.len().cmp(&b.blocks.len()) {
        Ordering::Less => return Ordering::Greater,
        Ordering::Greater => return Ordering::Less,
        Ordering::Equal => {}
    }
    let la = a.blocks.last().expect("at least two blocks");
    let lb = b.blocks.last().expect("at least two blocks");
    lb[0].cmp(&la[0])
        .then(la.len().cmp(&lb.len()))
        .then(la.cmp(lb))
        .then(a.blocks.cmp(&b.blocks))
}

fn decompose_node(q: &QuasigroupTable) -> DecompNode {
    let n = q.arity();
    let mut memo = HashMap::new();
    let mut candidates = factorization_candidates(q, &mut memo);
    if candidates.is_empty() {
        return DecompNode::Inner {
            op: q.clone(),
            children: (1..=n).map(DecompNode::Leaf).collect(),
        };
    }
    candidates.sort_by(better_candidate);
    let best = &candidates[0];
    let children = best
        .blocks
        .iter()
        .zip(&best.block_tables)
        .map(|(block, table)| match table {
            None => DecompNode::Leaf(block[0] + 1),
            Some(t) => {
                let mut sub = decompose_node(t);
                let map: Vec<usize> = block.iter().map(|&v| v + 1).collect();
                sub.relabel(&map);
                sub
            }
        })
        .collect();
    DecompNode::Inner {
        op: best.root.clone(),
        children,
    }
}

/// Canonical decomposition: irreducible root over recursively decomposed
/// variable blocks. Irreducible input yields the identity decomposition
/// (the quasigroup itself over bare leaves).
pub fn canonical_decomposition(q: &QuasigroupTable) -> DecompositionTree {
    assert_eq!(q.order(), 4, "decomposition is implemented for order 4");
    let root = decompose_node(q);
    let tree = DecompositionTree {
        arity: q.arity(),
        root,
    };
    debug_assert!((0..q.cells().len()).all(|i| {
        let coords = q.as_table().shape().coords_of(i);
        tree.eval(&coords) == q.cells()[i]
    }));
    tree
}

/// True when `q` is reducible and every principal retract of arity more
/// than 2 (over all parastrophs) is reducible. Binary quasigroups are never
/// completely reducible.
pub fn is_completely_reducible(q: &QuasigroupTable) -> bool {
    let n = q.arity();
    if n < 3 || is_reducible(q).is_none() {
        return false;
    }
    // retracts over all parastrophs = graph restrictions: fix any subset of
    // word positions, read the rest as a quasigroup (value last)
    let graph = q.graph();
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    for l in 1..=n.saturating_sub(3) {
        for positions in subsets_lex(n + 1, l, l) {
            // positions are 1-based here; restrict from the highest slot down
            let slots: Vec<usize> = positions.iter().rev().map(|&p| p - 1).collect();
            let assignments = 1usize << (2 * l);
            for a in 0..assignments {
                let mut code = graph.clone();
                for (j, &slot) in slots.iter().enumerate() {
                    code = code.restrict(slot, (a >> (2 * j) & 3) as u8);
                }
                let rq = QuasigroupTable::from_code(&code)
                    .expect("graph restrictions are MDS codes");
                if seen.insert(rq.cells().to_vec()) && is_reducible(&rq).is_none() {
                    return false;
                }
            }
        }
    }
    true
}

/// Group-form decomposition `q1(x1~) * .. * qk(xk~)` of a completely
/// reducible quasigroup: `star` is a group operation on the symbols and no
/// part splits further through `star`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupFormDecomposition {
    pub star: QuasigroupTable,
    /// `(part table, variables)` with 1-based ascending variables; parts are
    /// ordered by their minimum variable.
    pub parts: Vec<(QuasigroupTable, Vec<usize>)>,
}

impl GroupFormDecomposition {
    /// Identity element of `star`.
    pub fn identity(&self) -> u8 {
        star_identity(&self.star).expect("star is a group operation")
    }

    /// Left-to-right chain evaluation of the parts under `star`.
    pub fn eval(&self, x: &[u8]) -> u8 {
        let mut it = self.parts.iter();
        let (first, vars) = it.next().expect("at least two parts");
        let mut acc = eval_part(first, vars, x);
        for (part, vars) in it {
            acc = self.star.eval(&[acc, eval_part(part, vars, x)]);
        }
        acc
    }
}

fn eval_part(part: &QuasigroupTable, vars: &[usize], x: &[u8]) -> u8 {
    let args: Vec<u8> = vars.iter().map(|&v| x[v - 1]).collect();
    part.eval(&args)
}

fn star_identity(star: &QuasigroupTable) -> Option<u8> {
    (0..4u8).find(|&e| (0..4u8).all(|x| star.eval(&[e, x]) == x && star.eval(&[x, e]) == x))
}

fn star_is_associative(star: &QuasigroupTable) -> bool {
    for a in 0..4u8 {
        for b in 0..4u8 {
            for c in 0..4u8 {
                if star.eval(&[star.eval(&[a, b]), c]) != star.eval(&[a, star.eval(&[b, c])]) {
                    return false;
                }
            }
        }
    }
    true
}

/// Unique `b` with `a * b = c`.
fn star_left_divide(star: &QuasigroupTable, a: u8, c: u8) -> u8 {
    (0..4u8)
        .find(|&b| star.eval(&[a, b]) == c)
        .expect("latin row")
}

/// Inner tables for a two-block split of `p`, or None when a block does not
/// factor `p`. Singleton blocks get the identity permutation table.
fn two_block_tables(
    p: &QuasigroupTable,
    left: &[usize],
    right: &[usize],
) -> Option<(QuasigroupTable, QuasigroupTable)> {
    let inner = |block: &[usize]| -> Option<QuasigroupTable> {
        if block.len() == 1 {
            QuasigroupTable::from_fn(4, 1, |x| x[0]).ok()
        } else {
            let mask = block.iter().fold(0u32, |acc, &v| acc | 1 << v);
            reducible_wrt(p, mask)
        }
    };
    Some((inner(left)?, inner(right)?))
}

/// Outer binary table `t(u, v) = p` at class representatives of the blocks.
fn two_block_outer(
    p: &QuasigroupTable,
    left: &[usize],
    right: &[usize],
    g_left: &QuasigroupTable,
    g_right: &QuasigroupTable,
) -> QuasigroupTable {
    let blocks = vec![left.to_vec(), right.to_vec()];
    let tables = vec![
        (left.len() > 1).then(|| g_left.clone()),
        (right.len() > 1).then(|| g_right.clone()),
    ];
    collapse_root(p, &blocks, &tables)
}

/// Splits `p` as `p1(left) star p2(right)` if possible: requires both blocks
/// to factor `p` and the outer table to match `star` after relabeling the
/// block values (no relabeling of `p`'s own output is allowed).
fn star_split(
    p: &QuasigroupTable,
    star: &QuasigroupTable,
    left: &[usize],
    right: &[usize],
) -> Option<(QuasigroupTable, QuasigroupTable)> {
    let (g_left, g_right) = two_block_tables(p, left, right)?;
    let t = two_block_outer(p, left, right, &g_left, &g_right);
    // find alpha, beta with t(u, v) = alpha(u) * beta(v)
    for alpha in Perm::all() {
        let beta_img: Vec<u8> = (0..4u8)
            .map(|v| star_left_divide(star, alpha.apply(0), t.eval(&[0, v])))
            .collect();
        let beta = match Perm::new([beta_img[0], beta_img[1], beta_img[2], beta_img[3]]) {
            Some(b) => b,
            None => continue,
        };
        let matches = (0..4u8).all(|u| {
            (0..4u8).all(|v| t.eval(&[u, v]) == star.eval(&[alpha.apply(u), beta.apply(v)]))
        });
        if matches {
            let relabel = |g: &QuasigroupTable, perm: Perm| {
                QuasigroupTable::new(
                    4,
                    g.arity(),
                    g.cells().iter().map(|&c| perm.apply(c)).collect(),
                )
                .expect("relabeled latin table stays latin")
            };
            return Some((relabel(&g_left, alpha), relabel(&g_right, beta)));
        }
    }
    None
}

/// Two-block partitions of `vars` (ascending), deterministically ordered:
/// the right block prefers a late minimum, small size, then lexicographic
/// order, matching the chain tie-break of the canonical decomposition.
fn two_block_partitions(vars: &[usize]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let k = vars.len();
    let mut out = Vec::new();
    // nonempty proper subsets not containing vars[0] form the right block
    for mask in 1u32..(1 << (k - 1)) {
        let right: Vec<usize> = (0..k - 1)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| vars[i + 1])
            .collect();
        let left: Vec<usize> = vars
            .iter()
            .copied()
            .filter(|v| !right.contains(v))
            .collect();
        out.push((left, right));
    }
    out.sort_by(|(_, ra), (_, rb)| {
        rb[0].cmp(&ra[0])
            .then(ra.len().cmp(&rb.len()))
            .then(ra.cmp(rb))
    });
    out
}

/// Group-form decomposition of a completely reducible quasigroup per the
/// chain form: finds a group operation on the symbols and the maximal chain
/// of star-indecomposable parts.
pub fn group_form(q: &QuasigroupTable) -> Result<GroupFormDecomposition, StructureError> {
    if !is_completely_reducible(q) {
        return Err(StructureError::NotCompletelyReducible);
    }
    let n = q.arity();
    let all_vars: Vec<usize> = (1..=n).collect();

    // top split: first two-block factorization in deterministic order
    let (left, right, g_left, g_right) = two_block_partitions(&all_vars)
        .into_iter()
        .find_map(|(l, r)| {
            let lz: Vec<usize> = l.iter().map(|v| v - 1).collect();
            let rz: Vec<usize> = r.iter().map(|v| v - 1).collect();
            two_block_tables(q, &lz, &rz).map(|(gl, gr)| (l, r, gl, gr))
        })
        .expect("a completely reducible quasigroup admits a two-block split");

    let lz: Vec<usize> = left.iter().map(|v| v - 1).collect();
    let rz: Vec<usize> = right.iter().map(|v| v - 1).collect();
    let t = two_block_outer(q, &lz, &rz, &g_left, &g_right);

    // loop-normalize the outer table at (0, 0); at order 4 every loop
    // isotope of a latin square that arises here is a group
    let rho = Perm::new([
        t.eval(&[0, 0]),
        t.eval(&[1, 0]),
        t.eval(&[2, 0]),
        t.eval(&[3, 0]),
    ])
    .expect("latin column is a permutation");
    let lambda = Perm::new([
        t.eval(&[0, 0]),
        t.eval(&[0, 1]),
        t.eval(&[0, 2]),
        t.eval(&[0, 3]),
    ])
    .expect("latin row is a permutation");
    let rho_inv = rho.inverse();
    let lambda_inv = lambda.inverse();
    let star = QuasigroupTable::from_fn(4, 2, |x| {
        t.eval(&[rho_inv.apply(x[0]), lambda_inv.apply(x[1])])
    })
    .expect("principal isotope of a latin square is latin");
    assert!(
        star_identity(&star).is_some() && star_is_associative(&star),
        "loop normalization must produce a group at order 4"
    );

    let relabel = |g: &QuasigroupTable, perm: Perm| {
        QuasigroupTable::new(
            4,
            g.arity(),
            g.cells().iter().map(|&c| perm.apply(c)).collect(),
        )
        .expect("relabeled latin table stays latin")
    };

    // q = (rho . g_left)(left) star (lambda . g_right)(right)
    let mut worklist = vec![
        (relabel(&g_left, rho), left),
        (relabel(&g_right, lambda), right),
    ];
    let mut parts: Vec<(QuasigroupTable, Vec<usize>)> = Vec::new();
    while let Some((p, vars)) = worklist.pop() {
        let mut split = None;
        if vars.len() >= 2 {
            for (l, r) in two_block_partitions(&vars) {
                let lz: Vec<usize> = l.iter().map(|v| v - 1).collect();
                let rz: Vec<usize> = r.iter().map(|v| v - 1).collect();
                // block variables are positions within the part table
                let local = |vs: &[usize]| -> Vec<usize> {
                    vs.iter()
                        .map(|v| vars.iter().position(|w| w == v).expect("var in part"))
                        .collect()
                };
                let _ = (lz, rz);
                if let Some((pl, pr)) = star_split(&p, &star, &local(&l), &local(&r)) {
                    split = Some(((pl, l), (pr, r)));
                    break;
                }
            }
        }
        match split {
            Some((a, b)) => {
                worklist.push(a);
                worklist.push(b);
            }
            None => parts.push((p, vars)),
        }
    }
    parts.sort_by_key(|(_, vars)| vars[0]);

    let out = GroupFormDecomposition { star, parts };
    debug_assert!((0..q.cells().len()).all(|i| {
        let coords = q.as_table().shape().coords_of(i);
        out.eval(&coords) == q.cells()[i]
    }));
    Ok(out)
}

/// The linear 2-fold MDS code `L`: words where an odd number of coordinates
/// lie in `{0, 1}`.
pub fn linear_code(word_len: usize) -> CodeSet {
    let mut code = CodeSet::empty(4, word_len);
    for idx in 0..code.space_size() {
        let mut parity = 0u32;
        for pos in 0..word_len {
            let digit = idx >> (2 * (word_len - 1 - pos)) & 3;
            parity ^= u32::from(digit < 2);
        }
        if parity == 1 {
            code.insert_index(idx);
        }
    }
    code
}

/// Decides whether a 2-fold MDS code is linear (isotopic to `L`) and
/// returns a witness isotopy mapping the code onto `L`.
///
/// Only the per-coordinate 2-subsets `t_i^-1{0,1}` matter, and on a linear
/// code those subsets are visible on the lines through the origin, so one
/// candidate family plus a parity check decides membership.
pub fn is_linear_2mds(m: &CodeSet) -> Result<Option<Isotopy>, StructureError> {
    assert_eq!(m.order(), 4, "linearity is defined for order 4");
    if !m.is_kfold_mds(2) {
        return Err(StructureError::NotTwoFold);
    }
    let n = m.word_len();
    // the 2-subset of symbols on each line through the origin
    let mut subsets: Vec<[u8; 2]> = Vec::with_capacity(n);
    for pos in 0..n {
        let stride = 4usize.pow((n - 1 - pos) as u32);
        let members: Vec<u8> = (0..4u8)
            .filter(|&s| m.contains_index(s as usize * stride))
            .collect();
        debug_assert_eq!(members.len(), 2);
        subsets.push([members[0], members[1]]);
    }
    let parity = |idx: usize| -> u32 {
        let mut p = 0u32;
        for (pos, t) in subsets.iter().enumerate() {
            let digit = (idx >> (2 * (n - 1 - pos)) & 3) as u8;
            p ^= u32::from(digit == t[0] || digit == t[1]);
        }
        p
    };
    let eps = parity(m.min_index().expect("2-fold codes are nonempty"));
    for idx in 0..m.space_size() {
        if m.contains_index(idx) != (parity(idx) == eps) {
            return Ok(None);
        }
    }
    // witness: map each 2-subset onto {0,1}; flip the first coordinate when
    // the member parity is even
    let perms: Vec<Perm> = subsets
        .iter()
        .enumerate()
        .map(|(pos, t)| {
            let comp: Vec<u8> = (0..4u8).filter(|s| *s != t[0] && *s != t[1]).collect();
            let image = if pos == 0 && eps == 0 {
                [comp[0], comp[1], t[0], t[1]]
            } else {
                [t[0], t[1], comp[0], comp[1]]
            };
            Perm::new(image).expect("disjoint pairs form a permutation")
        })
        .collect();
    let witness = Isotopy::new(perms);
    debug_assert_eq!(
        witness.apply_code(m).expect("arity matches"),
        linear_code(n)
    );
    Ok(Some(witness))
}

/// The 2-fold MDS code `S_{a,b}(q) = { x : q(x) in {a, b} }`.
pub fn value_pair_code(q: &QuasigroupTable, a: u8, b: u8) -> CodeSet {
    assert!(a != b);
    let mut code = CodeSet::empty(q.order(), q.arity());
    for (idx, &v) in q.cells().iter().enumerate() {
        if v == a || v == b {
            code.insert_index(idx);
        }
    }
    code
}

/// Certificate that `S_{a,b}(q)` is linear, with the witness isotopy
/// mapping it onto `L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilinearityCertificate {
    pub a: u8,
    pub b: u8,
    pub witness: Isotopy,
}

/// Tries the six unordered symbol pairs in lexicographic order and returns
/// the first whose value-pair code is linear.
pub fn is_semilinear(q: &QuasigroupTable) -> Option<SemilinearityCertificate> {
    assert_eq!(q.order(), 4, "semilinearity is defined for order 4");
    for a in 0..4u8 {
        for b in a + 1..4u8 {
            let code = value_pair_code(q, a, b);
            debug_assert!(code.is_kfold_mds(2));
            if let Some(witness) = is_linear_2mds(&code).expect("value-pair codes are 2-fold") {
                return Some(SemilinearityCertificate { a, b, witness });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum3() -> QuasigroupTable {
        QuasigroupTable::cyclic_sum(4, 3)
    }

    #[test]
    fn binary_quasigroups_are_irreducible() {
        assert!(is_reducible(&QuasigroupTable::cyclic_sum(4, 2)).is_none());
        assert!(is_reducible(&QuasigroupTable::klein_sum(2)).is_none());
    }

    #[test]
    fn ternary_sum_reduces_over_first_pair() {
        let r = is_reducible(&sum3()).expect("sums are reducible");
        assert_eq!(r.vars, vec![1, 2]);
        assert_eq!(r.inner, QuasigroupTable::cyclic_sum(4, 2));
        // f(x) == outer(inner(x_A), x_rest) pointwise
        for x in 0..4u8 {
            for y in 0..4u8 {
                for z in 0..4u8 {
                    let v = r.outer.eval(&[r.inner.eval(&[x, y]), z]);
                    assert_eq!(v, sum3().eval(&[x, y, z]));
                }
            }
        }
    }

    #[test]
    fn reduction_picks_lexicographically_smallest_subset() {
        // f(x, y, z) = x + (y + z): every pair works for the full sum, so
        // the witness must be {1, 2}
        let r = is_reducible(&sum3()).unwrap();
        assert_eq!(r.vars, vec![1, 2]);
    }

    #[test]
    fn decomposition_of_sum_is_left_nested_chain() {
        let tree = canonical_decomposition(&sum3());
        assert_eq!(tree.root_arity(), 2);
        assert_eq!(tree.top_partition(), vec![vec![1, 2], vec![3]]);
        for i in 0..64usize {
            let coords = sum3().as_table().shape().coords_of(i);
            assert_eq!(tree.eval(&coords), sum3().cells()[i]);
        }
    }

    #[test]
    fn decomposition_of_irreducible_is_identity() {
        let q = QuasigroupTable::cyclic_sum(4, 2);
        let tree = canonical_decomposition(&q);
        assert!(tree.is_identity_decomposition());
        assert_eq!(tree.root_op(), &q);
    }

    #[test]
    fn four_variable_chain_decomposes_deterministically() {
        let q = QuasigroupTable::cyclic_sum(4, 4);
        let tree = canonical_decomposition(&q);
        assert_eq!(tree.top_partition(), vec![vec![1, 2, 3], vec![4]]);
        for i in (0..256usize).step_by(7) {
            let coords = q.as_table().shape().coords_of(i);
            assert_eq!(tree.eval(&coords), q.cells()[i]);
        }
    }

    #[test]
    fn complete_reducibility_of_sums() {
        assert!(is_completely_reducible(&sum3()));
        assert!(is_completely_reducible(&QuasigroupTable::cyclic_sum(4, 4)));
        assert!(is_completely_reducible(&QuasigroupTable::klein_sum(3)));
        assert!(!is_completely_reducible(&QuasigroupTable::cyclic_sum(4, 2)));
    }

    #[test]
    fn group_form_of_cyclic_sum() {
        let gf = group_form(&sum3()).unwrap();
        assert!(star_is_associative(&gf.star));
        assert!(star_identity(&gf.star).is_some());
        assert_eq!(gf.parts.len(), 3);
        for (part, vars) in &gf.parts {
            assert_eq!(part.arity(), 1);
            assert_eq!(vars.len(), 1);
        }
        for i in 0..64usize {
            let coords = sum3().as_table().shape().coords_of(i);
            assert_eq!(gf.eval(&coords), sum3().cells()[i]);
        }
    }

    #[test]
    fn group_form_of_klein_sum() {
        let q = QuasigroupTable::klein_sum(3);
        let gf = group_form(&q).unwrap();
        // the group must be the Klein table up to isomorphism: every
        // element is its own inverse
        let e = gf.identity();
        for x in 0..4u8 {
            assert_eq!(gf.star.eval(&[x, x]), e);
        }
        for i in 0..64usize {
            let coords = q.as_table().shape().coords_of(i);
            assert_eq!(gf.eval(&coords), q.cells()[i]);
        }
    }

    #[test]
    fn group_form_rejects_binary() {
        assert_eq!(
            group_form(&QuasigroupTable::cyclic_sum(4, 2)).unwrap_err(),
            StructureError::NotCompletelyReducible
        );
    }

    #[test]
    fn linear_code_is_two_fold() {
        for n in 1..=4 {
            assert!(linear_code(n).is_kfold_mds(2));
        }
    }

    #[test]
    fn linear_code_is_linear_with_identity_like_witness() {
        let l = linear_code(3);
        let w = is_linear_2mds(&l).unwrap().expect("L is linear");
        assert_eq!(w.apply_code(&l).unwrap(), l);
    }

    #[test]
    fn linearity_agrees_with_subset_family_oracle() {
        // independent oracle: try all per-coordinate 2-subset families and
        // both parities
        fn oracle(m: &CodeSet) -> bool {
            let n = m.word_len();
            let pairs: Vec<[u8; 2]> = vec![[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
            let mut choice = vec![0usize; n];
            loop {
                for eps in 0..2u32 {
                    let ok = (0..m.space_size()).all(|idx| {
                        let mut p = 0u32;
                        for pos in 0..n {
                            let digit = (idx >> (2 * (n - 1 - pos)) & 3) as u8;
                            let t = pairs[choice[pos]];
                            p ^= u32::from(digit == t[0] || digit == t[1]);
                        }
                        m.contains_index(idx) == (p == eps)
                    });
                    if ok {
                        return true;
                    }
                }
                let mut pos = 0;
                loop {
                    if pos == n {
                        return false;
                    }
                    choice[pos] += 1;
                    if choice[pos] < pairs.len() {
                        break;
                    }
                    choice[pos] = 0;
                    pos += 1;
                }
            }
        }

        let z4 = QuasigroupTable::cyclic_sum(4, 2);
        for (a, b) in [(0u8, 1u8), (0, 2), (1, 3), (2, 3)] {
            let s = value_pair_code(&z4, a, b);
            let fast = is_linear_2mds(&s).unwrap().is_some();
            assert_eq!(fast, oracle(&s), "pair ({a},{b})");
        }
    }

    #[test]
    fn z4_square_is_semilinear_with_even_pair() {
        let cert = is_semilinear(&QuasigroupTable::cyclic_sum(4, 2)).expect("semilinear");
        assert_eq!((cert.a, cert.b), (0, 2));
        let s = value_pair_code(&QuasigroupTable::cyclic_sum(4, 2), cert.a, cert.b);
        assert_eq!(cert.witness.apply_code(&s).unwrap(), linear_code(2));
    }

    #[test]
    fn klein_square_is_semilinear_with_first_pair() {
        let cert = is_semilinear(&QuasigroupTable::klein_sum(2)).expect("semilinear");
        assert_eq!((cert.a, cert.b), (0, 1));
    }

    #[test]
    fn value_pair_codes_are_two_fold() {
        let q = QuasigroupTable::cyclic_sum(4, 3);
        for a in 0..4u8 {
            for b in a + 1..4u8 {
                assert!(value_pair_code(&q, a, b).is_kfold_mds(2));
            }
        }
    }
}
