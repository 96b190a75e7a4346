//! Elementary row operations, words of elementary matrices, and their
//! rewriting into canonical products.
//!
//! A [`Word`] `(E_1, …, E_k)` is stored in product order: it denotes the
//! matrix `E_1·E_2⋯E_k`, so `E_k` is the first operation applied to a matrix.
//!
//! `AddMul { src: i, dst: j, λ }` adds `λ·(row i)` to row `j`.
//!
//! Canonicalization rewrites a word, never lengthening it, into
//!
//! 1. a prefix of swaps,
//! 2. at most one scale per row, rows strictly increasing,
//! 3. transvection blocks: inside a block the index sets `{src, dst}` are
//!    pairwise disjoint, and every transvection of a later block meets some
//!    transvection of the block just before it.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::{Matrix, OpCounter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Swap {
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Scale {
    pub row: usize,
    pub lambda: FieldElement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AddMul {
    pub src: usize,
    pub dst: usize,
    pub lambda: FieldElement,
}

impl Swap {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::DegenerateOp(format!("swap of row {i} with itself")));
        }
        Ok(Swap { i, j })
    }

    /// The transposition exchanging `i` and `j`.
    #[inline]
    pub fn permute(&self, k: usize) -> usize {
        if k == self.i {
            self.j
        } else if k == self.j {
            self.i
        } else {
            k
        }
    }
}

impl Scale {
    pub fn new(row: usize, lambda: FieldElement) -> Result<Self> {
        if lambda.value() <= 1 {
            return Err(Error::DegenerateOp(format!(
                "scale of row {row} by {lambda}"
            )));
        }
        Ok(Scale { row, lambda })
    }
}

impl AddMul {
    pub fn new(src: usize, dst: usize, lambda: FieldElement) -> Result<Self> {
        if src == dst {
            return Err(Error::DegenerateOp(format!("row {src} added to itself")));
        }
        if lambda.is_zero() {
            return Err(Error::DegenerateOp(format!(
                "zero multiple of row {src} added to row {dst}"
            )));
        }
        Ok(AddMul { src, dst, lambda })
    }

    pub fn index_set(&self) -> [usize; 2] {
        [self.src, self.dst]
    }

    /// Whether the index sets intersect.
    #[inline]
    pub fn meets(&self, other: &AddMul) -> bool {
        self.src == other.src
            || self.src == other.dst
            || self.dst == other.src
            || self.dst == other.dst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementaryOp {
    Swap(Swap),
    Scale(Scale),
    AddMul(AddMul),
}

impl From<Swap> for ElementaryOp {
    fn from(s: Swap) -> Self {
        ElementaryOp::Swap(s)
    }
}

impl From<Scale> for ElementaryOp {
    fn from(s: Scale) -> Self {
        ElementaryOp::Scale(s)
    }
}

impl From<AddMul> for ElementaryOp {
    fn from(a: AddMul) -> Self {
        ElementaryOp::AddMul(a)
    }
}

impl fmt::Display for ElementaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementaryOp::Swap(s) => write!(f, "S {} {}", s.i, s.j),
            ElementaryOp::Scale(s) => write!(f, "M {} {}", s.row, s.lambda),
            ElementaryOp::AddMul(a) => write!(f, "A {} {} {}", a.src, a.dst, a.lambda),
        }
    }
}

impl ElementaryOp {
    pub fn swap(i: usize, j: usize) -> Result<Self> {
        Swap::new(i, j).map(Into::into)
    }

    pub fn scale(row: usize, lambda: FieldElement) -> Result<Self> {
        Scale::new(row, lambda).map(Into::into)
    }

    pub fn add_mul(src: usize, dst: usize, lambda: FieldElement) -> Result<Self> {
        AddMul::new(src, dst, lambda).map(Into::into)
    }

    /// Checks indices against `n`, coefficients against the field, and
    /// non-degeneracy.
    pub fn validate(&self, n: usize, field: &FieldSpec) -> Result<()> {
        let check = |index: usize| {
            if index < n {
                Ok(())
            } else {
                Err(Error::IndexOutOfRange { index, n })
            }
        };
        let check_lambda = |l: FieldElement| {
            if field.contains(l) {
                Ok(())
            } else {
                Err(Error::ElementOutOfRange {
                    value: l.value() as u32,
                    q: field.order(),
                })
            }
        };
        match *self {
            ElementaryOp::Swap(s) => {
                check(s.i)?;
                check(s.j)?;
                Swap::new(s.i, s.j).map(drop)
            }
            ElementaryOp::Scale(s) => {
                check(s.row)?;
                check_lambda(s.lambda)?;
                Scale::new(s.row, s.lambda).map(drop)
            }
            ElementaryOp::AddMul(a) => {
                check(a.src)?;
                check(a.dst)?;
                check_lambda(a.lambda)?;
                AddMul::new(a.src, a.dst, a.lambda).map(drop)
            }
        }
    }

    pub fn inverse(&self, field: &FieldSpec) -> ElementaryOp {
        match *self {
            ElementaryOp::Swap(s) => ElementaryOp::Swap(s),
            ElementaryOp::Scale(s) => ElementaryOp::Scale(Scale {
                row: s.row,
                lambda: field.inv(s.lambda).expect("scale coefficient is nonzero"),
            }),
            ElementaryOp::AddMul(a) => ElementaryOp::AddMul(AddMul {
                lambda: field.neg(a.lambda),
                ..a
            }),
        }
    }

    /// The n×n elementary matrix `E` with `E·A` = this operation applied to `A`.
    pub fn elementary_matrix(&self, n: usize, field: Arc<FieldSpec>) -> Result<Matrix> {
        let mut m = Matrix::identity(n, field)?;
        m.apply_op(self, &mut OpCounter::new())?;
        Ok(m)
    }

    pub fn is_swap(&self) -> bool {
        matches!(self, ElementaryOp::Swap(_))
    }
}

/// A product of elementary matrices, in product order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    n: usize,
    ops: Vec<ElementaryOp>,
}

impl Word {
    pub fn new(n: usize, ops: Vec<ElementaryOp>) -> Self {
        Word { n, ops }
    }

    pub fn empty(n: usize) -> Self {
        Word { n, ops: Vec::new() }
    }

    /// Builds a word from operations listed in the order they are applied.
    pub fn from_application_order(n: usize, mut applied: Vec<ElementaryOp>) -> Self {
        applied.reverse();
        Word { n, ops: applied }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[ElementaryOp] {
        &self.ops
    }

    pub fn into_ops(self) -> Vec<ElementaryOp> {
        self.ops
    }

    /// Operations in the order they act on a matrix.
    pub fn application_order(&self) -> impl Iterator<Item = &ElementaryOp> + '_ {
        self.ops.iter().rev()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn validate(&self, field: &FieldSpec) -> Result<()> {
        self.ops
            .iter()
            .try_for_each(|op| op.validate(self.n, field))
    }

    /// The group element this word denotes.
    pub fn product(&self, field: Arc<FieldSpec>) -> Result<Matrix> {
        let id = Matrix::identity(self.n, field)?;
        eval_word(self, &id, &mut OpCounter::new())
    }
}

/// `E_1⋯E_k · A`, charging one unit per operation.
pub fn eval_word(w: &Word, a: &Matrix, counter: &mut OpCounter) -> Result<Matrix> {
    if w.n != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: w.n,
        });
    }
    let mut out = a.clone();
    for op in w.application_order() {
        out.apply_op(op, counter)?;
    }
    Ok(out)
}

pub fn invert_word(w: &Word, field: &FieldSpec) -> Word {
    Word {
        n: w.n,
        ops: w.ops.iter().rev().map(|op| op.inverse(field)).collect(),
    }
}

/// Relabels `op` by the transposition of `sw`, so that `op·E_sw = E_sw·result`.
pub fn swap_conjugate(op: &ElementaryOp, sw: &Swap) -> ElementaryOp {
    match *op {
        ElementaryOp::Swap(s) => ElementaryOp::Swap(Swap {
            i: sw.permute(s.i),
            j: sw.permute(s.j),
        }),
        ElementaryOp::Scale(s) => ElementaryOp::Scale(Scale {
            row: sw.permute(s.row),
            ..s
        }),
        ElementaryOp::AddMul(a) => ElementaryOp::AddMul(AddMul {
            src: sw.permute(a.src),
            dst: sw.permute(a.dst),
            ..a
        }),
    }
}

/// Returns `op'` with `op·E_sc = E_sc·op'`.
///
/// A scale on the source row multiplies the coefficient by λ; a scale on the
/// destination row divides it by λ; any other scale commutes.
pub fn scale_commute(op: &AddMul, sc: &Scale, field: &FieldSpec) -> AddMul {
    if sc.row == op.src {
        AddMul {
            lambda: field.mul(sc.lambda, op.lambda),
            ..*op
        }
    } else if sc.row == op.dst {
        AddMul {
            lambda: field
                .div(op.lambda, sc.lambda)
                .expect("scale coefficient is nonzero"),
            ..*op
        }
    } else {
        *op
    }
}

/// Moves every swap to the front, keeping swaps in their original relative
/// order and conjugating each operation a swap passes over.
pub fn normalize_swaps(w: &Word) -> Word {
    // perm[k] is where label k ends up after conjugating by every swap to
    // the right of the scan position, nearest swap first.
    let mut perm: Vec<usize> = (0..w.n).collect();
    let mut swaps = Vec::new();
    let mut rest = Vec::with_capacity(w.ops.len());
    for op in w.ops.iter().rev() {
        match *op {
            ElementaryOp::Swap(s) => {
                perm.swap(s.i, s.j);
                swaps.push(*op);
            }
            ElementaryOp::Scale(s) => rest.push(ElementaryOp::Scale(Scale {
                row: perm[s.row],
                ..s
            })),
            ElementaryOp::AddMul(a) => rest.push(ElementaryOp::AddMul(AddMul {
                src: perm[a.src],
                dst: perm[a.dst],
                ..a
            })),
        }
    }
    swaps.reverse();
    rest.reverse();
    swaps.extend(rest);
    Word { n: w.n, ops: swaps }
}

/// Moves scales in front of all transvections and merges them per row.
///
/// Requires the swaps to form a prefix. Rows whose merged coefficient is 1
/// are dropped.
pub fn normalize_scales(w: &Word, field: &FieldSpec) -> Result<Word> {
    let prefix = w.ops.iter().take_while(|op| op.is_swap()).count();
    if let Some(position) = w.ops[prefix..].iter().position(|op| op.is_swap()) {
        return Err(Error::SwapsNotPrefix {
            position: prefix + position,
        });
    }
    // Product of the scales to the right of the scan position, per row.
    let mut factor = vec![FieldElement::ONE; w.n];
    let mut adds = Vec::new();
    for op in w.ops[prefix..].iter().rev() {
        match *op {
            ElementaryOp::Scale(s) => factor[s.row] = field.mul(factor[s.row], s.lambda),
            ElementaryOp::AddMul(a) => {
                let lambda = field
                    .div(field.mul(a.lambda, factor[a.src]), factor[a.dst])
                    .expect("scale factors are nonzero");
                adds.push(ElementaryOp::AddMul(AddMul { lambda, ..a }));
            }
            ElementaryOp::Swap(_) => unreachable!(),
        }
    }
    adds.reverse();
    let mut ops = w.ops[..prefix].to_vec();
    ops.extend(
        factor
            .iter()
            .enumerate()
            .filter(|(_, l)| **l != FieldElement::ONE)
            .map(|(row, &lambda)| ElementaryOp::Scale(Scale { row, lambda })),
    );
    ops.extend(adds);
    Ok(Word { n: w.n, ops })
}

/// Greedy left-to-right partition into blocks of pairwise disjoint index
/// sets. Returns the block lengths.
pub fn partition_blocks(suffix: &[AddMul]) -> Vec<usize> {
    let mut lengths = Vec::new();
    let mut start = 0;
    for (idx, op) in suffix.iter().enumerate() {
        if suffix[start..idx].iter().any(|o| o.meets(op)) {
            lengths.push(idx - start);
            start = idx;
        }
    }
    if start < suffix.len() {
        lengths.push(suffix.len() - start);
    }
    lengths
}

/// Splits `suffix` according to `lengths`.
pub fn split_blocks(suffix: &[AddMul], lengths: &[usize]) -> Vec<Vec<AddMul>> {
    let mut out = Vec::with_capacity(lengths.len());
    let mut start = 0;
    for &len in lengths {
        out.push(suffix[start..start + len].to_vec());
        start += len;
    }
    out
}

/// Sum over all transvections of their 1-based block number.
pub fn block_potential(blocks: &[Vec<AddMul>]) -> u64 {
    blocks
        .iter()
        .enumerate()
        .map(|(t, b)| (t as u64 + 1) * b.len() as u64)
        .sum()
}

/// Moves transvections to earlier blocks until every transvection of a block
/// meets the block before it. Empty blocks are removed.
pub fn compact_blocks(blocks: Vec<Vec<AddMul>>) -> Vec<Vec<AddMul>> {
    compact_blocks_observed(blocks, |_| {})
}

/// [`compact_blocks`] calling `observe` with the blocks after every single
/// one-block move.
pub fn compact_blocks_observed<F>(mut blocks: Vec<Vec<AddMul>>, mut observe: F) -> Vec<Vec<AddMul>>
where
    F: FnMut(&[Vec<AddMul>]),
{
    let disjoint = |op: &AddMul, block: &[AddMul]| block.iter().all(|o| !o.meets(op));
    blocks.retain(|b| !b.is_empty());
    loop {
        let mut moved = false;
        for t in 1..blocks.len() {
            let mut idx = 0;
            while idx < blocks[t].len() {
                let op = blocks[t][idx];
                if !disjoint(&op, &blocks[t - 1]) {
                    idx += 1;
                    continue;
                }
                blocks[t].remove(idx);
                blocks[t - 1].push(op);
                observe(&blocks);
                let mut at = t - 1;
                while at > 0 && disjoint(&op, &blocks[at - 1]) {
                    blocks[at].pop();
                    blocks[at - 1].push(op);
                    at -= 1;
                    observe(&blocks);
                }
                moved = true;
            }
        }
        let before = blocks.len();
        blocks.retain(|b| !b.is_empty());
        if !moved && blocks.len() == before {
            return blocks;
        }
    }
}

/// A product in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalWord {
    pub n: usize,
    pub swaps: Vec<Swap>,
    pub scales: Vec<Scale>,
    pub blocks: Vec<Vec<AddMul>>,
}

impl CanonicalWord {
    pub fn len(&self) -> usize {
        self.swaps.len() + self.scales.len() + self.blocks.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `[r_1, …, r_s]`.
    pub fn block_lengths(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// `r_i' = r + r_0 + r_1 + … + r_i` for `i = 0..=s`.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = self.swaps.len() + self.scales.len();
        let mut out = vec![acc];
        for b in &self.blocks {
            acc += b.len();
            out.push(acc);
        }
        out
    }

    pub fn to_word(&self) -> Word {
        let mut ops: Vec<ElementaryOp> = Vec::with_capacity(self.len());
        ops.extend(self.swaps.iter().copied().map(ElementaryOp::from));
        ops.extend(self.scales.iter().copied().map(ElementaryOp::from));
        for b in &self.blocks {
            ops.extend(b.iter().copied().map(ElementaryOp::from));
        }
        Word { n: self.n, ops }
    }
}

/// Rewrites `w` into canonical form: swaps forward, then scales, then
/// greedy blocks compacted toward the front.
pub fn canonicalize(w: &Word, field: &FieldSpec) -> CanonicalWord {
    let swapped = normalize_swaps(w);
    let scaled = normalize_scales(&swapped, field).expect("swaps form a prefix");
    let mut swaps = Vec::new();
    let mut scales = Vec::new();
    let mut suffix = Vec::new();
    for op in scaled.ops {
        match op {
            ElementaryOp::Swap(s) => swaps.push(s),
            ElementaryOp::Scale(s) => scales.push(s),
            ElementaryOp::AddMul(a) => suffix.push(a),
        }
    }
    let lengths = partition_blocks(&suffix);
    let blocks = compact_blocks(split_blocks(&suffix, &lengths));
    CanonicalWord {
        n: w.n,
        swaps,
        scales,
        blocks,
    }
}

/// Checks the canonical-product conditions on an explicitly blocked word.
pub fn is_canonical(cw: &CanonicalWord) -> bool {
    let scales_sorted = cw.scales.windows(2).all(|p| p[0].row < p[1].row);
    let within_disjoint = cw.blocks.iter().all(|b| {
        b.iter()
            .enumerate()
            .all(|(x, op)| b[x + 1..].iter().all(|o| !o.meets(op)))
    });
    let chained = cw
        .blocks
        .windows(2)
        .all(|pair| pair[1].iter().all(|op| pair[0].iter().any(|o| o.meets(op))));
    scales_sorted && within_disjoint && chained
}
