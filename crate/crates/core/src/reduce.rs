//! Reduction of invertible matrices to the identity by counted row
//! operations.
//!
//! Both algorithms return the word they applied, so every result can be
//! replayed and checked independently of the algorithm that produced it.

use std::collections::HashMap;
use std::fmt;

use crate::elemword::{eval_word, AddMul, ElementaryOp, Scale, Swap, Word};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::gray::GrayCode;
use crate::matrix::{Matrix, OpCounter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    GaussJordan,
    Striped,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::GaussJordan => "gj",
            Algorithm::Striped => "striped",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ReductionResult {
    /// Product-order word with `word · A = I`.
    pub word: Word,
    pub op_count: u64,
    pub algorithm: Algorithm,
    pub stripe_width: Option<usize>,
}

/// Records applied operations alongside the charged count.
struct Recorder {
    m: Matrix,
    applied: Vec<ElementaryOp>,
    counter: OpCounter,
}

impl Recorder {
    fn new(a: &Matrix) -> Self {
        Recorder {
            m: a.clone(),
            applied: Vec::new(),
            counter: OpCounter::new(),
        }
    }

    fn apply(&mut self, op: ElementaryOp) {
        self.m
            .apply_op(&op, &mut self.counter)
            .expect("reduction emits valid operations");
        self.applied.push(op);
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.apply(ElementaryOp::Swap(Swap { i, j }));
    }

    fn scale(&mut self, row: usize, lambda: FieldElement) {
        self.apply(ElementaryOp::Scale(Scale { row, lambda }));
    }

    fn add_mul(&mut self, src: usize, dst: usize, lambda: FieldElement) {
        self.apply(ElementaryOp::AddMul(AddMul { src, dst, lambda }));
    }

    fn finish(self, algorithm: Algorithm, stripe_width: Option<usize>) -> ReductionResult {
        debug_assert!(self.m.is_identity());
        let n = self.m.n();
        ReductionResult {
            op_count: self.counter.count(),
            word: Word::from_application_order(n, self.applied),
            algorithm,
            stripe_width,
        }
    }
}

/// Makes the entry at `(target, col)` equal to 1 using one operation, given
/// a row `source > target` with a nonzero entry in `col` and `(target, col)`
/// possibly zero.
fn fix_pivot(rec: &mut Recorder, field: &FieldSpec, target: usize, col: usize, source: usize) {
    let v = rec.m.get(source, col);
    if v == FieldElement::ONE {
        rec.swap(source, target);
    } else {
        rec.add_mul(source, target, field.inv(v).expect("nonzero"));
    }
}

/// Column-by-column Gauss–Jordan elimination. At most `n` operations per
/// column: one to make the pivot 1, one per other nonzero entry.
pub fn gauss_jordan(a: &Matrix) -> Result<ReductionResult> {
    let n = a.n();
    let field = a.field().clone();
    let mut rec = Recorder::new(a);
    for c in 0..n {
        let piv = rec.m.get(c, c);
        if piv.is_zero() {
            let src = (c + 1..n)
                .find(|&r| !rec.m.get(r, c).is_zero())
                .ok_or(Error::Singular { column: c })?;
            fix_pivot(&mut rec, &field, c, c, src);
        } else if piv != FieldElement::ONE {
            rec.scale(c, field.inv(piv)?);
        }
        for r in (0..n).filter(|&r| r != c) {
            let v = rec.m.get(r, c);
            if !v.is_zero() {
                rec.add_mul(c, r, field.neg(v));
            }
        }
    }
    Ok(rec.finish(Algorithm::GaussJordan, None))
}

/// Stripe width `⌊log_q n − 2·log_q max(log_q n, q)⌋`, clamped to `[1, n]`.
pub fn default_stripe_width(n: usize, q: u32) -> usize {
    if n < 2 {
        return 1;
    }
    let lq = |x: f64| x.ln() / (q as f64).ln();
    let log_n = lq(n as f64);
    let w = (log_n - 2.0 * lq(log_n.max(q as f64))).floor();
    if w < 1.0 {
        1
    } else {
        (w as usize).min(n)
    }
}

/// `⌈n/w⌉·(n + 2q^w + 3w² + w)`, saturating.
pub fn striped_bound(n: usize, q: u32, w: usize) -> u128 {
    let stripes = n.div_ceil(w) as u128;
    let qw = (q as u128).checked_pow(w as u32).unwrap_or(u128::MAX / 4);
    let w = w as u128;
    stripes.saturating_mul(
        (n as u128)
            .saturating_add(qw.saturating_mul(2))
            .saturating_add(3 * w * w + w),
    )
}

/// Striped elimination with stripes of `width` columns.
///
/// Per stripe: choose pivot rows and turn the stripe's diagonal block into
/// the identity, then for each leading position sweep the pivot row through
/// every normalized pattern in Gray-code order, clearing each remaining row
/// with one transvection when its pattern comes up.
pub fn striped_eliminate(a: &Matrix, width: usize) -> Result<ReductionResult> {
    let n = a.n();
    if width == 0 || width > n {
        return Err(Error::StripeWidth { width, n });
    }
    let field = a.field().clone();
    let q = field.order();
    let mut rec = Recorder::new(a);

    let mut c0 = 0;
    while c0 < n {
        let wt = width.min(n - c0);
        select_pivots(&mut rec, &field, c0, wt)?;
        clear_stripe(&mut rec, &field, c0, wt);
        c0 += wt;
    }

    let bound = striped_bound(n, q, width);
    assert!(
        (rec.counter.count() as u128) <= bound,
        "striped elimination used {} ops, bound {bound}",
        rec.counter.count()
    );
    Ok(rec.finish(Algorithm::Striped, Some(width)))
}

/// Places pivots on the diagonal of columns `c0..c0+wt` and makes the
/// diagonal block the identity. Rows above `c0` are untouched here.
fn select_pivots(rec: &mut Recorder, field: &FieldSpec, c0: usize, wt: usize) -> Result<()> {
    let n = rec.m.n();
    for j in 0..wt {
        let c = c0 + j;
        // Value of row r in column c once reduced by the pivots chosen so far.
        let reduced = |m: &Matrix, r: usize| {
            (0..j).fold(m.get(r, c), |acc, i| {
                field.sub(acc, field.mul(m.get(r, c0 + i), m.get(c0 + i, c)))
            })
        };
        let r = (c..n)
            .find(|&r| !reduced(&rec.m, r).is_zero())
            .ok_or(Error::Singular { column: c })?;
        if r != c {
            rec.swap(r, c);
        }
        for i in 0..j {
            let v = rec.m.get(c, c0 + i);
            if !v.is_zero() {
                rec.add_mul(c0 + i, c, field.neg(v));
            }
        }
        let v = rec.m.get(c, c);
        if v != FieldElement::ONE {
            rec.scale(c, field.inv(v)?);
        }
        for i in 0..j {
            let v = rec.m.get(c0 + i, c);
            if !v.is_zero() {
                rec.add_mul(c, c0 + i, field.neg(v));
            }
        }
    }
    Ok(())
}

/// Clears the stripe columns in every row outside the pivot block.
fn clear_stripe(rec: &mut Recorder, field: &FieldSpec, c0: usize, wt: usize) {
    let n = rec.m.n();
    let q = field.order() as u64;

    // buckets[j]: normalized tail code -> rows (with leading coefficient)
    // whose stripe pattern leads at position j.
    let mut buckets: Vec<HashMap<u64, Vec<(usize, FieldElement)>>> = vec![HashMap::new(); wt];
    let mut pending = vec![0usize; wt];
    for r in (0..n).filter(|r| !(c0..c0 + wt).contains(r)) {
        let Some(j) = (0..wt).find(|&j| !rec.m.get(r, c0 + j).is_zero()) else {
            continue;
        };
        let lead = rec.m.get(r, c0 + j);
        let lead_inv = field.inv(lead).expect("nonzero");
        let code = (j + 1..wt).rev().fold(0u64, |acc, i| {
            acc * q + field.mul(rec.m.get(r, c0 + i), lead_inv).value() as u64
        });
        buckets[j].entry(code).or_default().push((r, lead));
        pending[j] += 1;
    }

    for j in 0..wt {
        if pending[j] == 0 {
            continue;
        }
        let acc = c0 + j;
        let tail = wt - j - 1;
        let mut clear = |rec: &mut Recorder, code: u64, pending: &mut usize| {
            if let Some(rows) = buckets[j].remove(&code) {
                for (r, lead) in rows {
                    rec.add_mul(acc, r, field.neg(lead));
                    *pending -= 1;
                }
            }
        };
        let mut left = pending[j];
        clear(rec, 0, &mut left);
        let mut code = 0u64;
        let mut gray = GrayCode::new(field.order(), tail);
        let powers: Vec<u64> = (0..tail).map(|i| q.pow(i as u32)).collect();
        while left > 0 {
            let step = gray
                .next()
                .expect("every pattern is visited before the sweep ends");
            let delta = field.sub(FieldElement(step.new as u16), FieldElement(step.old as u16));
            rec.add_mul(acc + 1 + step.coord, acc, delta);
            code =
                code + step.new as u64 * powers[step.coord] - step.old as u64 * powers[step.coord];
            clear(rec, code, &mut left);
        }
        // Restore the accumulator to its pivot row.
        for (i, &d) in gray.digits().iter().enumerate() {
            if d != 0 {
                rec.add_mul(acc + 1 + i, acc, field.neg(FieldElement(d as u16)));
            }
        }
    }
}

/// Outcome of replaying a reduction word.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verification {
    pub passed: bool,
    /// Application-order index of the first operation that is invalid or
    /// differs from a fresh run of the recorded algorithm.
    pub first_divergence: Option<usize>,
}

/// Replays `result.word` on `a` and checks that it lands on the identity.
pub fn verify_reduction(a: &Matrix, result: &ReductionResult) -> Verification {
    let mut m = a.clone();
    let mut counter = OpCounter::new();
    for (idx, op) in result.word.application_order().enumerate() {
        if m.apply_op(op, &mut counter).is_err() {
            return Verification {
                passed: false,
                first_divergence: Some(idx),
            };
        }
    }
    if m.is_identity() {
        return Verification {
            passed: true,
            first_divergence: None,
        };
    }
    let fresh = match result.algorithm {
        Algorithm::GaussJordan => gauss_jordan(a),
        Algorithm::Striped => striped_eliminate(a, result.stripe_width.unwrap_or(1)),
    };
    let first_divergence = fresh.ok().and_then(|fresh| {
        let expected: Vec<_> = fresh.word.application_order().collect();
        let got: Vec<_> = result.word.application_order().collect();
        (0..expected.len().max(got.len())).find(|&i| expected.get(i) != got.get(i))
    });
    Verification {
        passed: false,
        first_divergence,
    }
}

/// Applies the reduction word to the identity, yielding `A⁻¹`, and checks
/// `A·A⁻¹ = I`.
pub fn invert_via_word(a: &Matrix, result: &ReductionResult) -> Result<Matrix> {
    let id = Matrix::identity(a.n(), a.field().clone())?;
    let inv = eval_word(&result.word, &id, &mut OpCounter::new())?;
    if !a.mul(&inv)?.is_identity() {
        return Err(Error::Verification {
            first_divergence: verify_reduction(a, result).first_divergence,
        });
    }
    Ok(inv)
}
