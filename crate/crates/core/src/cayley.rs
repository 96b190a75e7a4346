//! Exact row-operation distances on GL(n, q).
//!
//! Breadth-first search from the identity over the Cayley graph whose
//! generators are all non-identity elementary matrices, acting by left
//! multiplication. States are integer keys (see [`Matrix::encode`]). When the
//! whole key space `q^(n²)` fits under the state cap, distances live in a
//! direct-addressed byte array; otherwise, if the group itself fits, in a
//! hash map.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::bounds::gl_order;
use crate::elemword::{AddMul, ElementaryOp, Scale, Swap};
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldSpec};
use crate::matrix::Matrix;

/// Default limit on the number of BFS states.
pub const DEFAULT_STATE_CAP: u64 = 1 << 28;

const UNVISITED: u8 = u8::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSet {
    pub n: usize,
    pub ops: Vec<ElementaryOp>,
}

impl GeneratorSet {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// All non-identity elementary operations: `n(n−1)/2` swaps, `n(q−2)`
/// scales and `n(n−1)(q−1)` transvections.
pub fn generators(n: usize, field: &FieldSpec) -> GeneratorSet {
    let mut ops = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            ops.push(ElementaryOp::Swap(Swap { i, j }));
        }
    }
    for row in 0..n {
        for lambda in field.nonzero_elements().skip(1) {
            ops.push(ElementaryOp::Scale(Scale { row, lambda }));
        }
    }
    for src in 0..n {
        for dst in (0..n).filter(|&d| d != src) {
            for lambda in field.nonzero_elements() {
                ops.push(ElementaryOp::AddMul(AddMul { src, dst, lambda }));
            }
        }
    }
    GeneratorSet { n, ops }
}

/// Distribution of distances from the identity over the whole group.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceHistogram {
    pub n: usize,
    pub p: u32,
    pub m: u32,
    pub q: u32,
    pub group_order: BigUint,
    /// `counts[d]` = number of elements at distance `d`.
    pub counts: Vec<u64>,
}

impl DistanceHistogram {
    pub fn diameter(&self) -> usize {
        self.counts.len().saturating_sub(1)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let weighted: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(d, &c)| d as f64 * c as f64)
            .sum();
        weighted / self.total() as f64
    }

    /// Cumulative counts: `ball_sizes()[k]` = elements within distance `k`.
    pub fn ball_sizes(&self) -> Vec<u64> {
        self.counts
            .iter()
            .scan(0u64, |acc, &c| {
                *acc += c;
                Some(*acc)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = HistogramJson {
            n: self.n,
            p: self.p,
            m: self.m,
            group_order: self.group_order.to_string(),
            histogram: self
                .counts
                .iter()
                .enumerate()
                .map(|(d, &c)| (d as u32, c))
                .collect(),
            diameter: self.diameter(),
            mean: self.mean(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: HistogramJson = serde_json::from_str(text)?;
        let parse_err = |message: String| Error::Parse { line: 1, message };
        let group_order: BigUint = doc
            .group_order
            .parse()
            .map_err(|_| parse_err(format!("bad group_order {:?}", doc.group_order)))?;
        let len = doc
            .histogram
            .keys()
            .next_back()
            .map_or(0, |&d| d as usize + 1);
        let mut counts = vec![0u64; len];
        for (d, c) in doc.histogram {
            counts[d as usize] = c;
        }
        let q = doc
            .p
            .checked_pow(doc.m)
            .ok_or_else(|| parse_err(format!("bad field {}^{}", doc.p, doc.m)))?;
        Ok(DistanceHistogram {
            n: doc.n,
            p: doc.p,
            m: doc.m,
            q,
            group_order,
            counts,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct HistogramJson {
    n: usize,
    p: u32,
    m: u32,
    group_order: String,
    histogram: BTreeMap<u32, u64>,
    diameter: usize,
    mean: f64,
}

#[derive(Clone, Debug)]
enum Distances {
    Direct(Vec<u8>),
    Sparse(HashMap<u64, u8>),
}

/// BFS result: the histogram plus per-element distances.
#[derive(Clone, Debug)]
pub struct DistanceTable {
    field: Arc<FieldSpec>,
    distances: Distances,
    pub histogram: DistanceHistogram,
}

/// Row-level arithmetic on integer keys. A row is the integer
/// `Σ_c entry[c]·q^c`; the key is `Σ_r row[r]·q^(r·n)`.
struct RowArith {
    n: usize,
    q: u64,
    field: Arc<FieldSpec>,
}

impl RowArith {
    fn digits(&self, mut row: u64, out: &mut [u16]) {
        for d in out.iter_mut() {
            *d = (row % self.q) as u16;
            row /= self.q;
        }
    }

    fn undigits(&self, ds: &[u16]) -> u64 {
        ds.iter().rev().fold(0, |acc, &d| acc * self.q + d as u64)
    }

    fn add_mul(&self, dst: u64, src: u64, lambda: FieldElement) -> u64 {
        let mut a = vec![0u16; self.n];
        let mut b = vec![0u16; self.n];
        self.digits(dst, &mut a);
        self.digits(src, &mut b);
        for (x, &y) in a.iter_mut().zip(&b) {
            *x = self
                .field
                .add(FieldElement(*x), self.field.mul(lambda, FieldElement(y)))
                .value();
        }
        self.undigits(&a)
    }

    fn scale(&self, row: u64, lambda: FieldElement) -> u64 {
        let mut a = vec![0u16; self.n];
        self.digits(row, &mut a);
        for x in a.iter_mut() {
            *x = self.field.mul(lambda, FieldElement(*x)).value();
        }
        self.undigits(&a)
    }
}

/// Precomputed neighbor function on keys.
struct Stepper {
    n: usize,
    row_space: u64,
    row_weight: Vec<u64>,
    // Indexed [generator-specific λ slot][dst_row * row_space + src_row].
    add_tables: Vec<Vec<u32>>,
    scale_tables: Vec<Vec<u32>>,
    lambda_slot: Vec<usize>,
    ops: Vec<ElementaryOp>,
    arith: RowArith,
}

impl Stepper {
    fn new(n: usize, field: Arc<FieldSpec>, ops: Vec<ElementaryOp>) -> Self {
        let q = field.order() as u64;
        let row_space = q.pow(n as u32);
        let row_weight = (0..n).map(|r| row_space.pow(r as u32)).collect();
        let arith = RowArith {
            n,
            q,
            field: field.clone(),
        };
        let mut lambda_slot = vec![usize::MAX; q as usize];
        for (slot, l) in field.nonzero_elements().enumerate() {
            lambda_slot[l.value() as usize] = slot;
        }
        let tabulate = row_space.saturating_mul(row_space).saturating_mul(q - 1) <= 1 << 22;
        let (add_tables, scale_tables) = if tabulate {
            let adds = field
                .nonzero_elements()
                .map(|l| {
                    let mut t = vec![0u32; (row_space * row_space) as usize];
                    for d in 0..row_space {
                        for s in 0..row_space {
                            t[(d * row_space + s) as usize] = arith.add_mul(d, s, l) as u32;
                        }
                    }
                    t
                })
                .collect();
            let scales = field
                .nonzero_elements()
                .map(|l| (0..row_space).map(|r| arith.scale(r, l) as u32).collect())
                .collect();
            (adds, scales)
        } else {
            (Vec::new(), Vec::new())
        };
        Stepper {
            n,
            row_space,
            row_weight,
            add_tables,
            scale_tables,
            lambda_slot,
            ops,
            arith,
        }
    }

    fn rows(&self, key: u64, out: &mut [u64]) {
        let mut k = key;
        for r in out.iter_mut().take(self.n) {
            *r = k % self.row_space;
            k /= self.row_space;
        }
    }

    fn neighbor(&self, key: u64, rows: &[u64], op: &ElementaryOp) -> u64 {
        let replace = |key: u64, r: usize, new: u64| {
            key - rows[r] * self.row_weight[r] + new * self.row_weight[r]
        };
        match *op {
            ElementaryOp::Swap(Swap { i, j }) => {
                let k = replace(key, i, rows[j]);
                k - rows[j] * self.row_weight[j] + rows[i] * self.row_weight[j]
            }
            ElementaryOp::Scale(Scale { row, lambda }) => {
                let slot = self.lambda_slot[lambda.value() as usize];
                let new = match self.scale_tables.get(slot) {
                    Some(t) => t[rows[row] as usize] as u64,
                    None => self.arith.scale(rows[row], lambda),
                };
                replace(key, row, new)
            }
            ElementaryOp::AddMul(AddMul { src, dst, lambda }) => {
                let slot = self.lambda_slot[lambda.value() as usize];
                let new = match self.add_tables.get(slot) {
                    Some(t) => t[(rows[dst] * self.row_space + rows[src]) as usize] as u64,
                    None => self.arith.add_mul(rows[dst], rows[src], lambda),
                };
                replace(key, dst, new)
            }
        }
    }
}

/// Runs the BFS for GL(n, q). Refuses (rather than truncates) when neither
/// the key space nor the group fits under `state_cap`.
pub fn bfs_histogram(n: usize, field: Arc<FieldSpec>, state_cap: u64) -> Result<DistanceTable> {
    let q = field.order();
    let order = gl_order(n, q);
    let key_space = BigUint::from(q).pow((n * n) as u32);
    let refuse = || Error::StateCap {
        n,
        q,
        required: order.to_string(),
        cap: state_cap,
    };
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let direct = key_space <= BigUint::from(state_cap);
    if !direct && (order > BigUint::from(state_cap) || key_space.to_u64().is_none()) {
        return Err(refuse());
    }

    let identity = Matrix::identity(n, field.clone())?;
    let start = identity.encode().to_u64().expect("key fits in u64");
    let stepper = Stepper::new(n, field.clone(), generators(n, &field).ops);

    let mut distances = if direct {
        let mut v = vec![UNVISITED; key_space.to_usize().expect("bounded by state cap")];
        v[start as usize] = 0;
        Distances::Direct(v)
    } else {
        Distances::Sparse(HashMap::from([(start, 0u8)]))
    };

    let mut counts = vec![1u64];
    let mut frontier = vec![start];
    let mut rows = vec![0u64; n];
    let mut depth: u8 = 0;
    while !frontier.is_empty() {
        assert!(
            depth < UNVISITED - 1,
            "diameter exceeds distance table range"
        );
        depth += 1;
        let mut next = Vec::new();
        for &key in &frontier {
            stepper.rows(key, &mut rows);
            for op in &stepper.ops {
                let nb = stepper.neighbor(key, &rows, op);
                let fresh = match &mut distances {
                    Distances::Direct(v) => {
                        let slot = &mut v[nb as usize];
                        (*slot == UNVISITED).then(|| *slot = depth).is_some()
                    }
                    Distances::Sparse(map) => {
                        let before = map.len();
                        map.entry(nb).or_insert(depth);
                        map.len() > before
                    }
                };
                if fresh {
                    next.push(nb);
                }
            }
        }
        if !next.is_empty() {
            counts.push(next.len() as u64);
        }
        frontier = next;
    }

    Ok(DistanceTable {
        histogram: DistanceHistogram {
            n,
            p: field.characteristic(),
            m: field.degree(),
            q,
            group_order: order,
            counts,
        },
        field,
        distances,
    })
}

impl DistanceTable {
    pub fn n(&self) -> usize {
        self.histogram.n
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    /// Minimal number of row operations reducing `a` to the identity.
    pub fn distance_of(&self, a: &Matrix) -> Result<u32> {
        if a.n() != self.n() || **a.field() != *self.field {
            return Err(Error::NoDistanceTable {
                n: a.n(),
                q: a.field().order(),
            });
        }
        let key = a.encode().to_u64().expect("key space fits in u64");
        let d = match &self.distances {
            Distances::Direct(v) => v[key as usize],
            Distances::Sparse(map) => map.get(&key).copied().unwrap_or(UNVISITED),
        };
        if d == UNVISITED {
            return Err(Error::NotInvertible);
        }
        Ok(d as u32)
    }

    /// Every group element with its distance, in key order.
    pub fn elements(&self) -> Vec<(Matrix, u32)> {
        let n = self.n();
        let decode = |key: u64| {
            Matrix::decode(
                &crate::matrix::GroupKey(BigUint::from(key)),
                n,
                self.field.clone(),
            )
            .expect("stored keys are in range")
        };
        let mut out: Vec<(u64, u8)> = match &self.distances {
            Distances::Direct(v) => v
                .iter()
                .enumerate()
                .filter(|(_, &d)| d != UNVISITED)
                .map(|(k, &d)| (k as u64, d))
                .collect(),
            Distances::Sparse(map) => map.iter().map(|(&k, &d)| (k, d)).collect(),
        };
        out.sort_unstable();
        out.into_iter()
            .map(|(k, d)| (decode(k), d as u32))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elemword::invert_word;
    use crate::reduce::gauss_jordan;

    fn gf(q: u32) -> Arc<FieldSpec> {
        Arc::new(FieldSpec::with_order(q).unwrap())
    }

    #[test]
    fn generator_counts() {
        let g = generators(2, &gf(2));
        assert_eq!(
            g.ops,
            vec![
                ElementaryOp::swap(0, 1).unwrap(),
                ElementaryOp::add_mul(0, 1, FieldElement(1)).unwrap(),
                ElementaryOp::add_mul(1, 0, FieldElement(1)).unwrap(),
            ]
        );
        assert_eq!(generators(2, &gf(3)).len(), 7);
        assert!(generators(1, &gf(2)).is_empty());
        for (n, q) in [(3usize, 4u32), (4, 5), (2, 9)] {
            let expect = n * (n - 1) / 2 + n * (q as usize - 2) + n * (n - 1) * (q as usize - 1);
            assert_eq!(generators(n, &gf(q)).len(), expect);
        }
    }

    #[test]
    fn generators_are_distinct_and_closed_under_inverse() {
        for (n, q) in [(2, 2), (3, 3), (3, 4)] {
            let f = gf(q);
            let g = generators(n, &f);
            let keys: Vec<_> = g
                .ops
                .iter()
                .map(|op| op.elementary_matrix(n, f.clone()).unwrap().encode())
                .collect();
            let set: std::collections::HashSet<_> = keys.iter().cloned().collect();
            assert_eq!(set.len(), keys.len());
            assert!(!set.contains(&Matrix::identity(n, f.clone()).unwrap().encode()));
            for op in &g.ops {
                let inv = op
                    .inverse(&f)
                    .elementary_matrix(n, f.clone())
                    .unwrap()
                    .encode();
                assert!(set.contains(&inv));
            }
        }
    }

    #[test]
    fn gl_2_2_histogram() {
        let t = bfs_histogram(2, gf(2), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(t.histogram.counts, vec![1, 3, 2]);
        assert_eq!(t.histogram.diameter(), 2);
        assert!((t.histogram.mean() - 7.0 / 6.0).abs() < 1e-12);
        assert_eq!(t.histogram.ball_sizes(), vec![1, 4, 6]);
    }

    #[test]
    fn totals_match_group_order() {
        for (n, q, total) in [(2, 3, 48u64), (3, 2, 168), (2, 4, 180), (1, 7, 6)] {
            let t = bfs_histogram(n, gf(q), DEFAULT_STATE_CAP).unwrap();
            assert_eq!(t.histogram.total(), total);
            assert_eq!(t.histogram.group_order, BigUint::from(total));
        }
    }

    #[test]
    fn sparse_and_direct_agree() {
        let f = gf(3);
        let direct = bfs_histogram(2, f.clone(), DEFAULT_STATE_CAP).unwrap();
        // 3^4 = 81 keys, 48 elements: a cap of 60 forces the hash map.
        let sparse = bfs_histogram(2, f.clone(), 60).unwrap();
        assert!(matches!(sparse.distances, Distances::Sparse(_)));
        assert_eq!(direct.histogram, sparse.histogram);
        for (a, d) in direct.elements() {
            assert_eq!(sparse.distance_of(&a).unwrap(), d);
        }
        assert!(matches!(
            bfs_histogram(2, f, 40),
            Err(Error::StateCap { .. })
        ));
    }

    #[test]
    fn distance_lookups() {
        let f = gf(2);
        let t = bfs_histogram(3, f.clone(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(
            t.distance_of(&Matrix::identity(3, f.clone()).unwrap())
                .unwrap(),
            0
        );
        for op in generators(3, &f).ops {
            assert_eq!(
                t.distance_of(&op.elementary_matrix(3, f.clone()).unwrap())
                    .unwrap(),
                1
            );
        }
        for (a, d) in t.elements() {
            let gj = gauss_jordan(&a).unwrap();
            let inv = invert_word(&gj.word, &f).product(f.clone()).unwrap();
            assert_eq!(t.distance_of(&inv).unwrap(), d);
        }
        assert!(t
            .distance_of(&Matrix::identity(2, f.clone()).unwrap())
            .is_err());
        assert!(t.distance_of(&Matrix::identity(3, gf(3)).unwrap()).is_err());
        assert!(t.distance_of(&Matrix::zeros(3, f).unwrap()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let t = bfs_histogram(2, gf(4), DEFAULT_STATE_CAP).unwrap();
        let text = t.histogram.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["group_order"], "180");
        assert_eq!(v["histogram"]["0"], 1);
        assert_eq!(v["p"], 2);
        assert_eq!(v["m"], 2);
        assert_eq!(DistanceHistogram::from_json(&text).unwrap(), t.histogram);
    }

    #[test]
    fn untabulated_rows_match_tables() {
        let f = gf(3);
        let ops = generators(3, &f).ops;
        let tabled = Stepper::new(3, f.clone(), ops.clone());
        assert!(!tabled.add_tables.is_empty());
        let mut plain = Stepper::new(3, f.clone(), ops.clone());
        plain.add_tables.clear();
        plain.scale_tables.clear();
        let mut rows = vec![0u64; 3];
        for seed in 0..50u64 {
            let a = Matrix::random_invertible(3, f.clone(), seed).unwrap();
            let key = a.encode().to_u64().unwrap();
            tabled.rows(key, &mut rows);
            for op in &ops {
                let expect = a
                    .applied(op, &mut Default::default())
                    .unwrap()
                    .encode()
                    .to_u64()
                    .unwrap();
                assert_eq!(tabled.neighbor(key, &rows, op), expect);
                assert_eq!(plain.neighbor(key, &rows, op), expect);
            }
        }
    }
}
