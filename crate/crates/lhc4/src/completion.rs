//! Completion of order-4 latin hypercuboids to latin hypercubes.
//!
//! The engine is `split_2fold`: each line of the space meets a 2-fold MDS
//! code in exactly two members, which must land in different parts of any
//! split, so splittability is bipartiteness of the resulting line-constraint
//! graph. Completion reduces to splitting the complement code of the
//! partial table.

use thiserror::Error;

use crate::qcore::{
    pointwise_disjoint, CodeSet, HypercuboidTable, QuasigroupTable, Shape, TableError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompletionError {
    #[error("input is not a valid latin hypercuboid")]
    InvalidCuboid,
    #[error("completion requires order 4, got {0}")]
    UnsupportedOrder(usize),
    #[error("code is not a 2-fold MDS code")]
    NotTwoFold,
    #[error("quasigroups are not pointwise disjoint")]
    NotDisjoint,
    #[error("arities differ: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },
    /// Unreachable at order 4 by the completability theorem; firing means an
    /// implementation defect. Carries the offending cuboid for a bug report.
    #[error("internal theorem violation: complement code did not split")]
    TheoremViolation { cuboid: HypercuboidTable },
}

impl From<TableError> for CompletionError {
    fn from(_: TableError) -> Self {
        CompletionError::InvalidCuboid
    }
}

/// A 2-fold MDS code split into two disjoint MDS codes. `parts[0]` is the
/// part containing the member with the smallest bit index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    pub parts: [CodeSet; 2],
}

/// Splits a 2-fold MDS code into two disjoint MDS codes when possible.
///
/// Builds the line-constraint graph (vertices: members, edges: the two
/// members of each line) and 2-colors it; an odd cycle means the code is
/// unsplittable. Coloring is anchored at the smallest bit index of each
/// connected component.
pub fn split_2fold(m: &CodeSet) -> Result<Option<SplitResult>, CompletionError> {
    if !m.is_kfold_mds(2) {
        return Err(CompletionError::NotTwoFold);
    }
    let order = m.order();
    let members: Vec<usize> = m.iter_indices().collect();
    let mut vertex_of = vec![u32::MAX; m.space_size()];
    for (v, &idx) in members.iter().enumerate() {
        vertex_of[idx] = v as u32;
    }

    let mut adjacency = vec![Vec::with_capacity(m.word_len()); members.len()];
    m.for_each_line(|_, base, stride| {
        let pair: Vec<u32> = (0..order)
            .filter_map(|t| {
                let idx = base + t * stride;
                (vertex_of[idx] != u32::MAX).then(|| vertex_of[idx])
            })
            .collect();
        assert_eq!(pair.len(), 2, "each line of a 2-fold code has two members");
        adjacency[pair[0] as usize].push(pair[1]);
        adjacency[pair[1] as usize].push(pair[0]);
    });
    // the line-constraint graph of a 2-fold code is n-regular
    assert!(adjacency.iter().all(|a| a.len() == m.word_len()));

    let mut color = vec![2u8; members.len()];
    let mut queue = Vec::new();
    for start in 0..members.len() {
        if color[start] != 2 {
            continue;
        }
        color[start] = 0;
        queue.clear();
        queue.push(start as u32);
        while let Some(v) = queue.pop() {
            let c = color[v as usize];
            for &w in &adjacency[v as usize] {
                if color[w as usize] == 2 {
                    color[w as usize] = 1 - c;
                    queue.push(w);
                } else if color[w as usize] == c {
                    return Ok(None); // odd cycle
                }
            }
        }
    }

    let mut parts = [
        CodeSet::empty(order, m.word_len()),
        CodeSet::empty(order, m.word_len()),
    ];
    for (v, &idx) in members.iter().enumerate() {
        parts[color[v] as usize].insert_index(idx);
    }
    // re-assert the contract on every return
    assert!(parts[0].is_disjoint(&parts[1]));
    assert_eq!(parts[0].union(&parts[1]), *m);
    assert!(parts[0].is_mds() && parts[1].is_mds());
    Ok(Some(SplitResult { parts }))
}

/// Fills the forced final layer of a cuboid with `k = order - 1`: each cell
/// receives the unique symbol missing from its last-axis line.
pub fn last_layer(t: &HypercuboidTable) -> Result<QuasigroupTable, CompletionError> {
    let order = t.order();
    let k = t.shape().last_dim();
    if k != order - 1 || !t.is_valid() {
        return Err(CompletionError::InvalidCuboid);
    }
    let mut cells = Vec::with_capacity(t.cells().len() / k * order);
    for line in t.cells().chunks(k) {
        let mut seen = 0u32;
        for &v in line {
            seen |= 1 << v;
        }
        let missing = (!seen & ((1 << order) - 1)).trailing_zeros() as u8;
        cells.extend_from_slice(line);
        cells.push(missing);
    }
    let table = HypercuboidTable::new(Shape::cube(order, t.ndims()), cells)?;
    // guaranteed: the missing-symbol map is the quasigroup of the
    // 1-fold complement code
    Ok(QuasigroupTable::from_table(table).expect("forced layer completes the cuboid"))
}

/// A quasigroup everywhere different from `q`: the cyclic shift of its
/// values.
pub fn disjoint_mate(q: &QuasigroupTable) -> QuasigroupTable {
    QuasigroupTable::new(
        q.order(),
        q.arity(),
        q.cells()
            .iter()
            .map(|&v| (v + 1) % q.order() as u8)
            .collect(),
    )
    .expect("value shift of a latin table is latin")
}

/// Stacks layers along a new last axis.
fn stack_layers(layers: &[&QuasigroupTable]) -> HypercuboidTable {
    let order = layers[0].order();
    let arity = layers[0].arity();
    let k = layers.len();
    let mut cells = Vec::with_capacity(layers[0].cells().len() * k);
    for point in 0..layers[0].cells().len() {
        for layer in layers {
            cells.push(layer.cells()[point]);
        }
    }
    let shape = Shape::cuboid(order, arity + 1, k).expect("stacked shape is valid");
    HypercuboidTable::new(shape, cells).expect("stacked layers are well formed")
}

/// Extends two pointwise-disjoint n-ary quasigroups of order 4 to an
/// `(n+1)`-ary quasigroup whose first two layers are `f` and `g`. The two
/// remaining layers come from splitting the complement 2-fold code; the
/// part holding the smallest-index complement word becomes layer 2.
pub fn combine_disjoint(
    f: &QuasigroupTable,
    g: &QuasigroupTable,
) -> Result<QuasigroupTable, CompletionError> {
    if f.order() != 4 || g.order() != 4 {
        return Err(CompletionError::UnsupportedOrder(f.order().max(g.order())));
    }
    if f.arity() != g.arity() {
        return Err(CompletionError::ArityMismatch {
            left: f.arity(),
            right: g.arity(),
        });
    }
    if !pointwise_disjoint(f, g) {
        return Err(CompletionError::NotDisjoint);
    }
    let two_layers = stack_layers(&[f, g]);
    complete_two_layers(&two_layers, f, g)
}

fn complete_two_layers(
    two_layers: &HypercuboidTable,
    f: &QuasigroupTable,
    g: &QuasigroupTable,
) -> Result<QuasigroupTable, CompletionError> {
    let complement = two_layers
        .to_kfold_code()
        .expect("disjoint layers form a cuboid")
        .kfold_complement(2)
        .expect("cuboid code is 2-fold");
    let split = match split_2fold(&complement).expect("complement is 2-fold") {
        Some(split) => split,
        None => {
            return Err(CompletionError::TheoremViolation {
                cuboid: two_layers.clone(),
            })
        }
    };
    let layer2 = QuasigroupTable::from_code(&split.parts[0]).expect("split parts are MDS");
    let layer3 = QuasigroupTable::from_code(&split.parts[1]).expect("split parts are MDS");
    let cube = stack_layers(&[f, g, &layer2, &layer3]);
    Ok(QuasigroupTable::from_table(cube).expect("completed stack is latin"))
}

/// Completes a valid order-4 latin hypercuboid to a latin hypercube whose
/// first `k` layers equal the input.
pub fn complete(t: &HypercuboidTable) -> Result<QuasigroupTable, CompletionError> {
    if t.order() != 4 {
        return Err(CompletionError::UnsupportedOrder(t.order()));
    }
    if !t.is_valid() {
        return Err(CompletionError::InvalidCuboid);
    }
    let k = t.shape().last_dim();
    if t.ndims() == 1 {
        // a single line: append the missing symbols in ascending order
        let mut cells = t.cells().to_vec();
        let mut seen = 0u32;
        for &v in &cells {
            seen |= 1 << v;
        }
        for s in 0..4u8 {
            if seen & (1 << s) == 0 {
                cells.push(s);
            }
        }
        return Ok(QuasigroupTable::new(4, 1, cells).expect("completed line is a permutation"));
    }
    match k {
        4 => Ok(QuasigroupTable::from_table(t.clone()).expect("validated cube")),
        3 => last_layer(t),
        2 => {
            let f = QuasigroupTable::from_table(t.layer(0)).expect("layer of a valid cuboid");
            let g = QuasigroupTable::from_table(t.layer(1)).expect("layer of a valid cuboid");
            complete_two_layers(t, &f, &g)
        }
        1 => {
            let f = QuasigroupTable::from_table(t.layer(0)).expect("layer of a valid cuboid");
            let g = disjoint_mate(&f);
            let two_layers = stack_layers(&[&f, &g]);
            complete_two_layers(&two_layers, &f, &g)
        }
        _ => unreachable!("shape guarantees 1 <= k <= 4"),
    }
}
