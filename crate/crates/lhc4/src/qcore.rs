//! Core data model: latin hypercuboid tables, quasigroup tables, and MDS
//! code sets over the alphabet `{0, .., order-1}`.
//!
//! Indexing is row-major with the last axis varying fastest everywhere:
//! `index(x1, .., xn) = sum(x_i * prod(dims[j] for j > i))`. The bit index of
//! a [`CodeSet`] uses the same rule with all dims equal to the order. The
//! value of a quasigroup is stored as the *last* coordinate of its graph
//! words.

use thiserror::Error;

/// Errors raised while constructing or converting tables.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("shape has {expected} cells but {actual} were supplied")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("symbol {symbol} at cell {index} is out of range for order {order}")]
    SymbolOutOfRange {
        index: usize,
        symbol: u8,
        order: usize,
    },
    #[error("invalid shape: {0}")]
    BadShape(&'static str),
    #[error("table is not a latin hypercuboid")]
    InvalidCuboid,
}

/// Errors raised by word/code operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("word lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("set is not an MDS code")]
    NotAnMdsCode,
    #[error("set is not a {k}-fold MDS code")]
    NotKFold { k: usize },
}

/// Number of positions in which two equal-length words differ.
pub fn hamming_distance(x: &[u8], y: &[u8]) -> Result<usize, CodeError> {
    if x.len() != y.len() {
        return Err(CodeError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(x.iter().zip(y).filter(|(a, b)| a != b).count())
}

/// Dimensions of a hypercuboid: all leading axes equal the order, the last
/// axis may be truncated to `k` layers with `1 <= k <= order`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    order: usize,
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(order: usize, dims: Vec<usize>) -> Result<Self, TableError> {
        if order < 2 {
            return Err(TableError::BadShape("order must be at least 2"));
        }
        if dims.is_empty() {
            return Err(TableError::BadShape("at least one axis is required"));
        }
        let k = *dims.last().expect("nonempty");
        if k < 1 || k > order {
            return Err(TableError::BadShape("last axis must lie in 1..=order"));
        }
        if dims[..dims.len() - 1].iter().any(|&d| d != order) {
            return Err(TableError::BadShape("leading axes must equal the order"));
        }
        Ok(Self { order, dims })
    }

    /// `ndims - 1` full axes followed by a truncated last axis of `k` layers.
    pub fn cuboid(order: usize, ndims: usize, k: usize) -> Result<Self, TableError> {
        if ndims == 0 {
            return Err(TableError::BadShape("at least one axis is required"));
        }
        let mut dims = vec![order; ndims];
        dims[ndims - 1] = k;
        Self::new(order, dims)
    }

    /// Full cube: every axis equals the order.
    pub fn cube(order: usize, ndims: usize) -> Self {
        Self::cuboid(order, ndims, order).expect("cube shape is always valid")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn ndims(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Extent of the last (possibly truncated) axis.
    pub fn last_dim(&self) -> usize {
        *self.dims.last().expect("nonempty")
    }

    pub fn is_cube(&self) -> bool {
        self.last_dim() == self.order
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major index, last axis fastest.
    pub fn index_of(&self, coords: &[u8]) -> usize {
        debug_assert_eq!(coords.len(), self.dims.len());
        let mut idx = 0;
        for (c, d) in coords.iter().zip(&self.dims) {
            idx = idx * d + *c as usize;
        }
        idx
    }

    pub fn coords_of(&self, mut index: usize) -> Vec<u8> {
        let mut coords = vec![0u8; self.dims.len()];
        for (c, d) in coords.iter_mut().zip(&self.dims).rev() {
            *c = (index % d) as u8;
            index /= d;
        }
        coords
    }
}

/// Outcome of the latin-property check. Violations report the first bad
/// line in scan order: axis ascending, then lexicographic fixed coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationResult {
    Valid,
    /// `axis` is the varying (free) axis; `fixed` lists the remaining
    /// coordinates in ascending axis order.
    LineViolation { axis: usize, fixed: Vec<u8> },
}

impl ValidationResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidationResult::Valid)
    }
}

/// The table of a partial n-ary quasigroup: an n-dimensional array over
/// `{0, .., order-1}` whose last axis may be truncated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HypercuboidTable {
    shape: Shape,
    cells: Vec<u8>,
}

impl HypercuboidTable {
    pub fn new(shape: Shape, cells: Vec<u8>) -> Result<Self, TableError> {
        if cells.len() != shape.cell_count() {
            return Err(TableError::ShapeMismatch {
                expected: shape.cell_count(),
                actual: cells.len(),
            });
        }
        for (index, &symbol) in cells.iter().enumerate() {
            if symbol as usize >= shape.order() {
                return Err(TableError::SymbolOutOfRange {
                    index,
                    symbol,
                    order: shape.order(),
                });
            }
        }
        Ok(Self { shape, cells })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn ndims(&self) -> usize {
        self.shape.ndims()
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, coords: &[u8]) -> u8 {
        self.cells[self.shape.index_of(coords)]
    }

    /// Checks that every line holds pairwise-distinct symbols, reporting the
    /// first violation in scan order.
    pub fn validate(&self) -> ValidationResult {
        let dims = self.shape.dims();
        let n = dims.len();
        // stride[a] = product of dims after axis a
        let mut stride = vec![1usize; n];
        for a in (0..n - 1).rev() {
            stride[a] = stride[a + 1] * dims[a + 1];
        }
        for axis in 0..n {
            let extent = dims[axis];
            let outer_count: usize = dims[..axis].iter().product();
            let inner_count = stride[axis];
            for outer in 0..outer_count {
                for inner in 0..inner_count {
                    let base = outer * stride[axis] * extent + inner;
                    let mut seen = 0u32;
                    for t in 0..extent {
                        let v = self.cells[base + t * stride[axis]];
                        if seen & (1 << v) != 0 {
                            let mut fixed = self.shape.coords_of(base);
                            fixed.remove(axis);
                            return ValidationResult::LineViolation { axis, fixed };
                        }
                        seen |= 1 << v;
                    }
                }
            }
        }
        ValidationResult::Valid
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_valid()
    }

    /// Extracts layer `s` of the last axis as an `(ndims-1)`-dimensional
    /// full cube (only meaningful when `ndims >= 2`).
    pub fn layer(&self, s: usize) -> HypercuboidTable {
        assert!(self.ndims() >= 2, "layers need at least two axes");
        assert!(s < self.shape.last_dim());
        let k = self.shape.last_dim();
        let cells = self
            .cells
            .chunks(k)
            .map(|line| line[s])
            .collect::<Vec<_>>();
        let shape = Shape::cube(self.order(), self.ndims() - 1);
        HypercuboidTable::new(shape, cells).expect("layer of a well-formed table")
    }

    /// Restriction to the first `k` layers of the last axis.
    pub fn truncate_layers(&self, k: usize) -> HypercuboidTable {
        assert!(k >= 1 && k <= self.shape.last_dim());
        let old_k = self.shape.last_dim();
        let cells = self
            .cells
            .chunks(old_k)
            .flat_map(|line| line[..k].iter().copied())
            .collect::<Vec<_>>();
        let shape =
            Shape::cuboid(self.order(), self.ndims(), k).expect("truncated shape is valid");
        HypercuboidTable::new(shape, cells).expect("truncation preserves well-formedness")
    }

    /// The k-fold MDS code of a partial quasigroup: each domain point
    /// `(x, s)` contributes the word `(x, f(x, s))`; the layer index is
    /// projected away and the value occupies the last coordinate.
    pub fn to_kfold_code(&self) -> Result<CodeSet, TableError> {
        if !self.is_valid() {
            return Err(TableError::InvalidCuboid);
        }
        let order = self.order();
        let k = self.shape.last_dim();
        let mut code = CodeSet::empty(order, self.ndims());
        for (cell_index, &v) in self.cells.iter().enumerate() {
            let point_index = cell_index / k;
            code.insert_index(point_index * order + v as usize);
        }
        debug_assert!(code.is_kfold_mds(k));
        Ok(code)
    }
}

/// The table of a (total) n-ary quasigroup: a latin hypercube.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuasigroupTable {
    table: HypercuboidTable,
}

impl QuasigroupTable {
    pub fn new(order: usize, arity: usize, cells: Vec<u8>) -> Result<Self, TableError> {
        let shape = Shape::cube(order, arity);
        Self::from_table(HypercuboidTable::new(shape, cells)?)
    }

    pub fn from_table(table: HypercuboidTable) -> Result<Self, TableError> {
        if !table.shape().is_cube() {
            return Err(TableError::BadShape("quasigroup table must be a full cube"));
        }
        if !table.is_valid() {
            return Err(TableError::InvalidCuboid);
        }
        Ok(Self { table })
    }

    pub fn from_fn(
        order: usize,
        arity: usize,
        f: impl Fn(&[u8]) -> u8,
    ) -> Result<Self, TableError> {
        let shape = Shape::cube(order, arity);
        let cells = (0..shape.cell_count())
            .map(|i| f(&shape.coords_of(i)))
            .collect();
        Self::new(order, arity, cells)
    }

    /// The sum `x1 + .. + xn mod order`.
    pub fn cyclic_sum(order: usize, arity: usize) -> Self {
        Self::from_fn(order, arity, |x| {
            (x.iter().map(|&v| v as usize).sum::<usize>() % order) as u8
        })
        .expect("modular sum is latin")
    }

    /// The bitwise xor `x1 ^ .. ^ xn` over order 4 (the Klein group).
    pub fn klein_sum(arity: usize) -> Self {
        Self::from_fn(4, arity, |x| x.iter().fold(0, |acc, &v| acc ^ v))
            .expect("xor sum is latin")
    }

    pub fn arity(&self) -> usize {
        self.table.ndims()
    }

    pub fn order(&self) -> usize {
        self.table.order()
    }

    pub fn cells(&self) -> &[u8] {
        self.table.cells()
    }

    pub fn eval(&self, args: &[u8]) -> u8 {
        self.table.get(args)
    }

    pub fn as_table(&self) -> &HypercuboidTable {
        &self.table
    }

    pub fn into_table(self) -> HypercuboidTable {
        self.table
    }

    /// The graph `{(x1, .., xn, q(x))}` as a code in `Sigma^(n+1)`.
    pub fn graph(&self) -> CodeSet {
        let order = self.order();
        let mut code = CodeSet::empty(order, self.arity() + 1);
        for (idx, &v) in self.cells().iter().enumerate() {
            code.insert_index(idx * order + v as usize);
        }
        code
    }

    /// Inverse of [`QuasigroupTable::graph`]: recovers the quasigroup whose
    /// value is the last coordinate of each code word.
    pub fn from_code(code: &CodeSet) -> Result<Self, CodeError> {
        if !code.is_mds() {
            return Err(CodeError::NotAnMdsCode);
        }
        let order = code.order();
        let cell_count = code.space_size() / order;
        let mut cells = vec![0u8; cell_count];
        for idx in code.iter_indices() {
            cells[idx / order] = (idx % order) as u8;
        }
        Ok(Self::new(order, code.word_len() - 1, cells)
            .expect("an MDS code is the graph of a quasigroup"))
    }
}

/// True when `f(x) != g(x)` for every point of the common domain.
pub fn pointwise_disjoint(f: &QuasigroupTable, g: &QuasigroupTable) -> bool {
    f.arity() == g.arity()
        && f.order() == g.order()
        && f.cells().iter().zip(g.cells()).all(|(a, b)| a != b)
}

/// A subset of `Sigma^n` stored as a dense bitset; bit indices follow the
/// shared mixed-radix rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeSet {
    order: usize,
    word_len: usize,
    bits: Vec<u64>,
}

impl CodeSet {
    pub fn empty(order: usize, word_len: usize) -> Self {
        assert!(order >= 2 && word_len >= 1);
        let size = order.pow(word_len as u32);
        Self {
            order,
            word_len,
            bits: vec![0u64; size.div_ceil(64)],
        }
    }

    pub fn full(order: usize, word_len: usize) -> Self {
        let mut code = Self::empty(order, word_len);
        let size = code.space_size();
        for w in code.bits.iter_mut() {
            *w = !0;
        }
        // clear the tail beyond the space
        let tail = size % 64;
        if tail != 0 {
            *code.bits.last_mut().expect("nonempty") = (1u64 << tail) - 1;
        }
        code
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn word_len(&self) -> usize {
        self.word_len
    }

    /// Total number of points in the ambient space `Sigma^n`.
    pub fn space_size(&self) -> usize {
        self.order.pow(self.word_len as u32)
    }

    pub fn index_of(&self, word: &[u8]) -> usize {
        debug_assert_eq!(word.len(), self.word_len);
        word.iter()
            .fold(0usize, |acc, &c| acc * self.order + c as usize)
    }

    pub fn word_of(&self, mut index: usize) -> Vec<u8> {
        let mut word = vec![0u8; self.word_len];
        for c in word.iter_mut().rev() {
            *c = (index % self.order) as u8;
            index /= self.order;
        }
        word
    }

    pub fn insert(&mut self, word: &[u8]) {
        self.insert_index(self.index_of(word));
    }

    pub fn insert_index(&mut self, index: usize) {
        self.bits[index / 64] |= 1u64 << (index % 64);
    }

    pub fn remove_index(&mut self, index: usize) {
        self.bits[index / 64] &= !(1u64 << (index % 64));
    }

    pub fn contains(&self, word: &[u8]) -> bool {
        self.contains_index(self.index_of(word))
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.bits[index / 64] & (1u64 << (index % 64)) != 0
    }

    pub fn cardinality(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Smallest member bit index, if any.
    pub fn min_index(&self) -> Option<usize> {
        for (i, &w) in self.bits.iter().enumerate() {
            if w != 0 {
                return Some(i * 64 + w.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn iter_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let bit = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(i * 64 + bit)
                }
            })
        })
    }

    pub fn words(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        self.iter_indices().map(|i| self.word_of(i))
    }

    /// Visits every line of the space: `(axis, base_index, stride)` where the
    /// line's points are `base + t * stride` for `t in 0..order`.
    pub(crate) fn for_each_line(&self, mut f: impl FnMut(usize, usize, usize)) {
        let n = self.word_len;
        let order = self.order;
        for axis in 0..n {
            let stride = order.pow((n - 1 - axis) as u32);
            let outer_count = order.pow(axis as u32);
            for outer in 0..outer_count {
                for inner in 0..stride {
                    f(axis, outer * stride * order + inner, stride);
                }
            }
        }
    }

    fn line_count(&self, base: usize, stride: usize) -> usize {
        (0..self.order)
            .filter(|t| self.contains_index(base + t * stride))
            .count()
    }

    /// Exactly `k` members on every line of the space.
    pub fn is_kfold_mds(&self, k: usize) -> bool {
        let mut ok = true;
        self.for_each_line(|_, base, stride| {
            if ok && self.line_count(base, stride) != k {
                ok = false;
            }
        });
        ok
    }

    /// MDS code with distance 2: cardinality `order^(n-1)` and one member
    /// per line (the two formulations coincide).
    pub fn is_mds(&self) -> bool {
        self.cardinality() == self.space_size() / self.order && self.is_kfold_mds(1)
    }

    /// Plain set complement within `Sigma^n`.
    pub fn complement(&self) -> CodeSet {
        let mut out = Self::full(self.order, self.word_len);
        for (o, s) in out.bits.iter_mut().zip(&self.bits) {
            *o &= !s;
        }
        out
    }

    /// Checked complement of a k-fold MDS code; the result is
    /// `(order - k)`-fold.
    pub fn kfold_complement(&self, k: usize) -> Result<CodeSet, CodeError> {
        if !self.is_kfold_mds(k) {
            return Err(CodeError::NotKFold { k });
        }
        let out = self.complement();
        debug_assert!(out.is_kfold_mds(self.order - k));
        Ok(out)
    }

    pub fn is_disjoint(&self, other: &CodeSet) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &CodeSet) -> CodeSet {
        assert_eq!(self.word_len, other.word_len);
        let mut out = self.clone();
        for (o, b) in out.bits.iter_mut().zip(&other.bits) {
            *o |= b;
        }
        out
    }

    /// Fixes coordinate `position` (0-based) to `value` and projects it away,
    /// keeping the remaining coordinates in order.
    pub fn restrict(&self, position: usize, value: u8) -> CodeSet {
        assert!(position < self.word_len);
        let mut out = CodeSet::empty(self.order, self.word_len - 1);
        for idx in self.iter_indices() {
            let word = self.word_of(idx);
            if word[position] == value {
                let mut rest = word;
                rest.remove(position);
                out.insert(&rest);
            }
        }
        out
    }

    /// Reorders word coordinates: output coordinate `j` takes the input
    /// coordinate `source[j]`.
    pub fn permute_positions(&self, source: &[usize]) -> CodeSet {
        assert_eq!(source.len(), self.word_len);
        let mut out = CodeSet::empty(self.order, self.word_len);
        let mut permuted = vec![0u8; self.word_len];
        for idx in self.iter_indices() {
            let word = self.word_of(idx);
            for (j, &s) in source.iter().enumerate() {
                permuted[j] = word[s];
            }
            out.insert(&permuted);
        }
        out
    }

    /// Per-coordinate symbol frequencies: `counts[i][s]` is the number of
    /// members whose i-th coordinate equals `s`.
    pub fn coordinate_counts(&self) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0usize; self.order]; self.word_len];
        for idx in self.iter_indices() {
            let word = self.word_of(idx);
            for (i, &c) in word.iter().enumerate() {
                counts[i][c as usize] += 1;
            }
        }
        counts
    }
}
