//! Dense n×n matrices over GF(q).
//!
//! Entries are stored row-major. Over GF(2) rows are packed 64 entries per
//! word; that layout is an implementation detail and every public operation
//! behaves identically on both layouts.

use std::fmt::Write as _;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elemword::{AddMul, ElementaryOp, Scale, Swap};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};

/// Counts charged row operations. Algorithms thread one of these through
/// every [`Matrix::apply_op`] call so that reported costs are exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    count: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn charge(&mut self) {
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Storage layout selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    /// Packed bits over GF(2), dense otherwise.
    Auto,
    /// One `u16` per entry regardless of field.
    Dense,
}

#[derive(Clone, Debug)]
enum Storage {
    Dense(Vec<u16>),
    Packed { stride: usize, bits: Vec<u64> },
}

/// Integer key of a matrix: `Σ entry[r][c] · q^(r·n + c)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey(pub BigUint);

impl GroupKey {
    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
}

#[derive(Clone, Debug)]
pub struct Matrix {
    n: usize,
    field: Arc<FieldSpec>,
    storage: Storage,
}

impl PartialEq for Matrix {
    fn eq(&self, other: &Self) -> bool {
        if self.n != other.n || *self.field != *other.field {
            return false;
        }
        match (&self.storage, &other.storage) {
            (Storage::Dense(a), Storage::Dense(b)) => a == b,
            (Storage::Packed { bits: a, .. }, Storage::Packed { bits: b, .. }) => a == b,
            _ => (0..self.n).all(|r| (0..self.n).all(|c| self.get(r, c) == other.get(r, c))),
        }
    }
}

impl Eq for Matrix {}

fn two_rows<T>(data: &mut [T], stride: usize, a: usize, b: usize) -> (&mut [T], &mut [T]) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = data.split_at_mut(b * stride);
        (&mut lo[a * stride..(a + 1) * stride], &mut hi[..stride])
    } else {
        let (lo, hi) = data.split_at_mut(a * stride);
        (&mut hi[..stride], &mut lo[b * stride..(b + 1) * stride])
    }
}

impl Matrix {
    pub fn zeros(n: usize, field: Arc<FieldSpec>) -> Result<Self> {
        Self::zeros_with(n, field, Layout::Auto)
    }

    pub fn zeros_with(n: usize, field: Arc<FieldSpec>, layout: Layout) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        let storage = if layout == Layout::Auto && field.order() == 2 {
            let stride = n.div_ceil(64);
            Storage::Packed {
                stride,
                bits: vec![0; stride * n],
            }
        } else {
            Storage::Dense(vec![0; n * n])
        };
        Ok(Matrix { n, field, storage })
    }

    pub fn identity(n: usize, field: Arc<FieldSpec>) -> Result<Self> {
        Self::identity_with(n, field, Layout::Auto)
    }

    pub fn identity_with(n: usize, field: Arc<FieldSpec>, layout: Layout) -> Result<Self> {
        let mut m = Self::zeros_with(n, field, layout)?;
        for i in 0..n {
            m.set(i, i, FieldElement::ONE);
        }
        Ok(m)
    }

    /// Builds a matrix from integer rows, validating shape and entry range.
    pub fn from_rows(field: Arc<FieldSpec>, rows: &[Vec<u32>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n, field)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                let e = m.field.element(v)?;
                m.set(r, c, e);
            }
        }
        Ok(m)
    }

    /// Same matrix in the requested layout.
    pub fn with_layout(&self, layout: Layout) -> Matrix {
        let mut out = Self::zeros_with(self.n, self.field.clone(), layout).expect("n >= 1");
        for r in 0..self.n {
            for c in 0..self.n {
                out.set(r, c, self.get(r, c));
            }
        }
        out
    }

    pub fn is_packed(&self) -> bool {
        matches!(self.storage, Storage::Packed { .. })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        match &self.storage {
            Storage::Dense(d) => FieldElement(d[r * self.n + c]),
            Storage::Packed { stride, bits } => {
                FieldElement(((bits[r * stride + c / 64] >> (c % 64)) & 1) as u16)
            }
        }
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: FieldElement) {
        debug_assert!(self.field.contains(v));
        match &mut self.storage {
            Storage::Dense(d) => d[r * self.n + c] = v.0,
            Storage::Packed { stride, bits } => {
                let w = &mut bits[r * *stride + c / 64];
                let mask = 1u64 << (c % 64);
                if v.0 & 1 == 1 {
                    *w |= mask;
                } else {
                    *w &= !mask;
                }
            }
        }
    }

    pub fn row(&self, r: usize) -> Vec<FieldElement> {
        (0..self.n).map(|c| self.get(r, c)).collect()
    }

    pub fn is_identity(&self) -> bool {
        match &self.storage {
            Storage::Packed { stride, bits } => (0..self.n).all(|r| {
                let row = &bits[r * stride..(r + 1) * stride];
                row.iter().enumerate().all(|(w, &word)| {
                    let expect = if r / 64 == w { 1u64 << (r % 64) } else { 0 };
                    word == expect
                })
            }),
            Storage::Dense(d) => d
                .chunks(self.n)
                .enumerate()
                .all(|(r, row)| row.iter().enumerate().all(|(c, &v)| v == u16::from(r == c))),
        }
    }

    pub fn is_zero_row(&self, r: usize) -> bool {
        match &self.storage {
            Storage::Dense(d) => d[r * self.n..(r + 1) * self.n].iter().all(|&v| v == 0),
            Storage::Packed { stride, bits } => {
                bits[r * stride..(r + 1) * stride].iter().all(|&w| w == 0)
            }
        }
    }

    /// Checks that `op` is a valid operation on this matrix.
    pub fn check_op(&self, op: &ElementaryOp) -> Result<()> {
        op.validate(self.n, &self.field)
    }

    /// Left-multiplies by the elementary matrix of `op`, charging one unit.
    pub fn apply_op(&mut self, op: &ElementaryOp, counter: &mut OpCounter) -> Result<()> {
        self.check_op(op)?;
        self.apply_unchecked(op);
        counter.charge();
        Ok(())
    }

    /// Like [`Matrix::apply_op`] but returns the result as a new matrix.
    pub fn applied(&self, op: &ElementaryOp, counter: &mut OpCounter) -> Result<Matrix> {
        let mut out = self.clone();
        out.apply_op(op, counter)?;
        Ok(out)
    }

    pub(crate) fn apply_unchecked(&mut self, op: &ElementaryOp) {
        let n = self.n;
        let field = &self.field;
        match (&mut self.storage, *op) {
            (Storage::Dense(d), ElementaryOp::Swap(Swap { i, j })) => {
                let (a, b) = two_rows(d, n, i, j);
                a.swap_with_slice(b);
            }
            (Storage::Packed { stride, bits }, ElementaryOp::Swap(Swap { i, j })) => {
                let (a, b) = two_rows(bits, *stride, i, j);
                a.swap_with_slice(b);
            }
            (Storage::Dense(d), ElementaryOp::Scale(Scale { row, lambda })) => {
                let slice = &mut d[row * n..(row + 1) * n];
                match field.mul_row(lambda.0) {
                    Some(t) => slice.iter_mut().for_each(|v| *v = t[*v as usize]),
                    None => slice
                        .iter_mut()
                        .for_each(|v| *v = field.mul_raw(lambda.0, *v)),
                }
            }
            (Storage::Packed { .. }, ElementaryOp::Scale(_)) => {
                unreachable!("GF(2) has no scale other than the identity")
            }
            (Storage::Dense(d), ElementaryOp::AddMul(AddMul { src, dst, lambda })) => {
                let (dst_row, src_row) = two_rows(d, n, dst, src);
                match field.mul_row(lambda.0) {
                    Some(t) => {
                        for (x, &s) in dst_row.iter_mut().zip(src_row.iter()) {
                            if s != 0 {
                                *x = field.add_raw(*x, t[s as usize]);
                            }
                        }
                    }
                    None => {
                        for (x, &s) in dst_row.iter_mut().zip(src_row.iter()) {
                            if s != 0 {
                                *x = field.add_raw(*x, field.mul_raw(lambda.0, s));
                            }
                        }
                    }
                }
            }
            (Storage::Packed { stride, bits }, ElementaryOp::AddMul(AddMul { src, dst, .. })) => {
                let (dst_row, src_row) = two_rows(bits, *stride, dst, src);
                for (x, &s) in dst_row.iter_mut().zip(src_row.iter()) {
                    *x ^= s;
                }
            }
        }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.n != rhs.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: rhs.n,
            });
        }
        if *self.field != *rhs.field {
            return Err(Error::FieldMismatch {
                expected: self.field.order(),
                got: rhs.field.order(),
            });
        }
        let n = self.n;
        if let (Storage::Packed { stride, bits: a }, Storage::Packed { bits: b, .. }) =
            (&self.storage, &rhs.storage)
        {
            let stride = *stride;
            let mut out = vec![0u64; stride * n];
            for r in 0..n {
                let out_row = &mut out[r * stride..(r + 1) * stride];
                for k in 0..n {
                    if (a[r * stride + k / 64] >> (k % 64)) & 1 == 1 {
                        for (x, &y) in out_row.iter_mut().zip(&b[k * stride..(k + 1) * stride]) {
                            *x ^= y;
                        }
                    }
                }
            }
            return Ok(Matrix {
                n,
                field: self.field.clone(),
                storage: Storage::Packed { stride, bits: out },
            });
        }
        let layout = if self.is_packed() {
            Layout::Auto
        } else {
            Layout::Dense
        };
        let mut out = Matrix::zeros_with(n, self.field.clone(), layout)?;
        let f = &self.field;
        for r in 0..n {
            let mut acc = vec![0u16; n];
            for k in 0..n {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for (c, x) in acc.iter_mut().enumerate() {
                    *x = f.add_raw(*x, f.mul_raw(a.0, rhs.get(k, c).0));
                }
            }
            for (c, &v) in acc.iter().enumerate() {
                out.set(r, c, FieldElement(v));
            }
        }
        Ok(out)
    }

    pub fn rank(&self) -> usize {
        let n = self.n;
        match &self.storage {
            Storage::Packed { stride, bits } => {
                let stride = *stride;
                let mut rows = bits.clone();
                let mut rank = 0;
                for c in 0..n {
                    let (w, mask) = (c / 64, 1u64 << (c % 64));
                    let Some(p) = (rank..n).find(|&r| rows[r * stride + w] & mask != 0) else {
                        continue;
                    };
                    if p != rank {
                        let (a, b) = two_rows(&mut rows, stride, p, rank);
                        a.swap_with_slice(b);
                    }
                    for r in rank + 1..n {
                        if rows[r * stride + w] & mask != 0 {
                            let (dst, src) = two_rows(&mut rows, stride, r, rank);
                            for (x, &y) in dst[w..].iter_mut().zip(&src[w..]) {
                                *x ^= y;
                            }
                        }
                    }
                    rank += 1;
                }
                rank
            }
            Storage::Dense(d) => {
                let f = &self.field;
                let mut rows = d.clone();
                let mut rank = 0;
                for c in 0..n {
                    let Some(p) = (rank..n).find(|&r| rows[r * n + c] != 0) else {
                        continue;
                    };
                    if p != rank {
                        let (a, b) = two_rows(&mut rows, n, p, rank);
                        a.swap_with_slice(b);
                    }
                    let pivot_inv = f
                        .inv(FieldElement(rows[rank * n + c]))
                        .expect("nonzero pivot");
                    for r in rank + 1..n {
                        let v = rows[r * n + c];
                        if v != 0 {
                            let factor = f.neg(f.mul(FieldElement(v), pivot_inv)).0;
                            let (dst, src) = two_rows(&mut rows, n, r, rank);
                            for (x, &y) in dst[c..].iter_mut().zip(&src[c..]) {
                                *x = f.add_raw(*x, f.mul_raw(factor, y));
                            }
                        }
                    }
                    rank += 1;
                }
                rank
            }
        }
    }

    pub fn is_invertible(&self) -> bool {
        self.rank() == self.n
    }

    pub fn encode(&self) -> GroupKey {
        let q = BigUint::from(self.field.order());
        let mut key = BigUint::zero();
        for idx in (0..self.n * self.n).rev() {
            key = key * &q + BigUint::from(self.get(idx / self.n, idx % self.n).0);
        }
        GroupKey(key)
    }

    pub fn decode(key: &GroupKey, n: usize, field: Arc<FieldSpec>) -> Result<Matrix> {
        let q = field.order();
        let mut m = Matrix::zeros(n, field)?;
        let qb = BigUint::from(q);
        let mut rest = key.0.clone();
        for idx in 0..n * n {
            let digit = (&rest % &qb).to_u32().expect("digit < q");
            m.set(idx / n, idx % n, FieldElement(digit as u16));
            rest /= &qb;
        }
        if !rest.is_zero() {
            return Err(Error::KeyOutOfRange { n, q });
        }
        Ok(m)
    }

    /// Uniform random matrix (not necessarily invertible).
    pub fn random<R: Rng + ?Sized>(n: usize, field: Arc<FieldSpec>, rng: &mut R) -> Result<Matrix> {
        let q = field.order();
        let mut m = Matrix::zeros(n, field)?;
        for r in 0..n {
            for c in 0..n {
                m.set(r, c, FieldElement(rng.gen_range(0..q) as u16));
            }
        }
        Ok(m)
    }

    /// Uniform sample from GL(n, q) by rejection; deterministic in `seed`.
    pub fn random_invertible(n: usize, field: Arc<FieldSpec>, seed: u64) -> Result<Matrix> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_invertible_with(n, field, &mut rng)
    }

    pub fn random_invertible_with<R: Rng + ?Sized>(
        n: usize,
        field: Arc<FieldSpec>,
        rng: &mut R,
    ) -> Result<Matrix> {
        loop {
            let m = Self::random(n, field.clone(), rng)?;
            if m.is_invertible() {
                return Ok(m);
            }
        }
    }

    /// Text form: `n p m` header then one line of entries per row.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.n * self.n * 3 + 16);
        let _ = writeln!(
            s,
            "{} {} {}",
            self.n,
            self.field.characteristic(),
            self.field.degree()
        );
        for r in 0..self.n {
            for c in 0..self.n {
                if c > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{}", self.get(r, c));
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Matrix> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let nums = parse_ints(header, hline)?;
        let [n, p, m] = nums[..] else {
            return Err(Error::Parse {
                line: hline,
                message: "header must be `n p m`".into(),
            });
        };
        let field = Arc::new(FieldSpec::new(p as u32, m as u32)?);
        let mut rows = Vec::with_capacity(n as usize);
        for (line, l) in lines {
            let row = parse_ints(l, line)?;
            if row.len() as u64 != n {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {n} entries, found {}", row.len()),
                });
            }
            if let Some(&bad) = row.iter().find(|&&v| v >= field.order() as u64) {
                return Err(Error::Parse {
                    line,
                    message: format!("entry {bad} out of range for GF({})", field.order()),
                });
            }
            rows.push(row.into_iter().map(|v| v as u32).collect());
        }
        if rows.len() as u64 != n {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected {n} rows, found {}", rows.len()),
            });
        }
        Matrix::from_rows(field, &rows)
    }
}

fn parse_ints(line: &str, lineno: usize) -> Result<Vec<u64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("not a non-negative integer: {t:?}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

    fn gf(q: u32) -> Arc<FieldSpec> {
        Arc::new(FieldSpec::with_order(q).unwrap())
    }

    fn fe(v: u16) -> FieldElement {
        FieldElement(v)
    }

    #[test]
    fn apply_examples() {
        let f2 = gf(2);
        let mut c = OpCounter::new();
        let i2 = Matrix::identity(2, f2.clone()).unwrap();
        let s = i2
            .applied(&ElementaryOp::swap(0, 1).unwrap(), &mut c)
            .unwrap();
        assert_eq!(
            s,
            Matrix::from_rows(f2.clone(), &[vec![0, 1], vec![1, 0]]).unwrap()
        );
        let a = i2
            .applied(&ElementaryOp::add_mul(0, 1, fe(1)).unwrap(), &mut c)
            .unwrap();
        assert_eq!(a, Matrix::from_rows(f2, &[vec![1, 0], vec![1, 1]]).unwrap());

        let f3 = gf(3);
        let m = Matrix::from_rows(f3.clone(), &[vec![1, 2], vec![0, 1]]).unwrap();
        let m = m
            .applied(&ElementaryOp::scale(0, fe(2)).unwrap(), &mut c)
            .unwrap();
        assert_eq!(m, Matrix::from_rows(f3, &[vec![2, 1], vec![0, 1]]).unwrap());
        assert_eq!(c.count(), 3);
    }

    #[test]
    fn apply_rejects_bad_ops() {
        let f3 = gf(3);
        let mut m = Matrix::identity(2, f3).unwrap();
        let mut c = OpCounter::new();
        assert!(m
            .apply_op(&ElementaryOp::swap(0, 2).unwrap(), &mut c)
            .is_err());
        assert!(m
            .apply_op(&ElementaryOp::scale(0, fe(7)).unwrap(), &mut c)
            .is_err());
        assert_eq!(c.count(), 0);
    }

    #[test]
    fn rank_examples() {
        let f2 = gf(2);
        let i3 = Matrix::identity(3, f2.clone()).unwrap();
        assert_eq!(i3.rank(), 3);
        assert!(i3.is_invertible());
        assert_eq!(Matrix::zeros(2, f2.clone()).unwrap().rank(), 0);
        let ones = Matrix::from_rows(f2, &[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(ones.rank(), 1);
        assert!(!ones.is_invertible());
        let f5 = gf(5);
        let m = Matrix::from_rows(f5, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(m.rank(), 1);
    }

    #[test]
    fn key_examples() {
        let f2 = gf(2);
        let i2 = Matrix::identity(2, f2.clone()).unwrap();
        assert_eq!(i2.encode().to_u64(), Some(9));
        assert_eq!(
            Matrix::zeros(2, f2.clone()).unwrap().encode().to_u64(),
            Some(0)
        );
        assert!(Matrix::decode(&GroupKey(BigUint::from(16u32)), 2, f2).is_err());
    }

    #[test]
    fn key_round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for q in [2, 3, 4, 9] {
            let f = gf(q);
            for _ in 0..250 {
                let n = rng.gen_range(1..6);
                let a = Matrix::random(n, f.clone(), &mut rng).unwrap();
                assert_eq!(Matrix::decode(&a.encode(), n, f.clone()).unwrap(), a);
            }
        }
    }

    #[test]
    fn gl_1_2_is_singleton() {
        let f2 = gf(2);
        for seed in 0..20 {
            let a = Matrix::random_invertible(1, f2.clone(), seed).unwrap();
            assert_eq!(a, Matrix::identity(1, f2.clone()).unwrap());
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = gf(3);
        let a = Matrix::random_invertible(6, f.clone(), 42).unwrap();
        let b = Matrix::random_invertible(6, f, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.is_invertible());
    }

    #[test]
    fn gl_2_2_sampling_uniform() {
        let f2 = gf(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..6000 {
            let a = Matrix::random_invertible_with(2, f2.clone(), &mut rng).unwrap();
            *counts.entry(a.encode()).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (k, v) in &counts {
            assert!((850..=1150).contains(v), "{k:?}: {v}");
        }
    }

    #[test]
    fn invertibility_frequency_matches_product() {
        // P(invertible) = Π_{r=1..4} (1 - 2^-r) for uniform 4×4 over GF(2).
        let p: f64 = (1..=4).map(|r| 1.0 - 0.5f64.powi(r)).product();
        let trials = 100_000;
        let f2 = gf(2);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let hits = (0..trials)
            .filter(|_| {
                Matrix::random(4, f2.clone(), &mut rng)
                    .unwrap()
                    .is_invertible()
            })
            .count();
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits as f64 - trials as f64 * p).abs() <= 3.0 * sigma,
            "hits={hits}"
        );
    }

    #[test]
    fn text_round_trip_and_rejections() {
        let f = gf(4);
        let a = Matrix::random_invertible(3, f, 1).unwrap();
        assert_eq!(Matrix::from_text(&a.to_text()).unwrap(), a);
        assert!(Matrix::from_text("2 2 1\n1 0\n").is_err());
        assert!(Matrix::from_text("2 2 1\n1 0\n0 2\n").is_err());
        assert!(Matrix::from_text("2 2 1\n1 0 0\n0 1\n").is_err());
        assert!(Matrix::from_text("2 4 1\n1 0\n0 1\n").is_err());
        assert!(Matrix::from_text("").is_err());
    }

    fn random_op<R: Rng>(rng: &mut R, n: usize, f: &FieldSpec) -> ElementaryOp {
        let q = f.order() as u16;
        loop {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            let l = FieldElement(rng.gen_range(0..q));
            let op = match rng.gen_range(0..3) {
                0 => ElementaryOp::swap(i, j),
                1 => ElementaryOp::scale(i, l),
                _ => ElementaryOp::add_mul(i, j, l),
            };
            if let Ok(op) = op {
                return op;
            }
        }
    }

    proptest! {
        #[test]
        fn op_then_inverse_is_identity(seed in any::<u64>(), qi in 0usize..4, n in 2usize..7) {
            let q = [2, 3, 4, 5][qi];
            let f = gf(q);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = Matrix::random(n, f.clone(), &mut rng).unwrap();
            let op = random_op(&mut rng, n, &f);
            let mut c = OpCounter::new();
            let back = a.applied(&op, &mut c).unwrap().applied(&op.inverse(&f), &mut c).unwrap();
            prop_assert_eq!(back, a);
            prop_assert_eq!(c.count(), 2);
        }

        #[test]
        fn op_matches_elementary_product(seed in any::<u64>(), qi in 0usize..4, n in 2usize..7) {
            let q = [2, 3, 4, 5][qi];
            let f = gf(q);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = Matrix::random(n, f.clone(), &mut rng).unwrap();
            let op = random_op(&mut rng, n, &f);
            let e = op.elementary_matrix(n, f.clone()).unwrap();
            let mut c = OpCounter::new();
            prop_assert_eq!(a.applied(&op, &mut c).unwrap(), e.mul(&a).unwrap());
        }

        #[test]
        fn packed_and_dense_agree(seed in any::<u64>(), n in 1usize..130) {
            let f = gf(2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = Matrix::random(n, f.clone(), &mut rng).unwrap();
            let b = Matrix::random(n, f.clone(), &mut rng).unwrap();
            prop_assert!(a.is_packed());
            let (ad, bd) = (a.with_layout(Layout::Dense), b.with_layout(Layout::Dense));
            prop_assert!(!ad.is_packed());
            prop_assert_eq!(a.rank(), ad.rank());
            prop_assert_eq!(a.encode(), ad.encode());
            prop_assert_eq!(a.mul(&b).unwrap(), ad.mul(&bd).unwrap());
            prop_assert_eq!(a.is_identity(), ad.is_identity());
            let (mut ap, mut adn) = (a.clone(), ad.clone());
            let mut c = OpCounter::new();
            if n >= 2 {
                for _ in 0..20 {
                    let op = random_op(&mut rng, n, &f);
                    ap.apply_op(&op, &mut c).unwrap();
                    adn.apply_op(&op, &mut c).unwrap();
                }
            }
            prop_assert_eq!(&ap, &adn);
            prop_assert_eq!(ap.to_text(), adn.to_text());
        }
    }
}
