//! Counting bounds for row-operation reduction over GF(q).
//!
//! All logarithms are base `q` unless stated otherwise. The group order is
//! exact; everything else is evaluated in `f64`.

use std::f64::consts::{E, LN_2};
use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::cayley::DistanceHistogram;
use crate::error::{Error, Result};
use crate::reduce::{default_stripe_width, striped_bound};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsQuery {
    pub n: usize,
    pub q: u32,
    pub alpha: f64,
    pub k: Option<u64>,
}

impl BoundsQuery {
    pub fn new(n: usize, q: u32, alpha: f64, k: Option<u64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Alpha(alpha));
        }
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if crate::field::prime_power(q).is_none() {
            return Err(Error::NotPrimePower(q));
        }
        Ok(BoundsQuery { n, q, alpha, k })
    }

    pub fn kmax(&self) -> f64 {
        threshold_kmax(self.n, self.q, self.alpha)
    }
}

#[inline]
fn log_q(x: f64, q: u32) -> f64 {
    x.ln() / (q as f64).ln()
}

/// Natural log of an arbitrary-precision integer (`x > 0`).
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * LN_2
}

/// `|GL(n, q)| = Π_{k=0}^{n-1} (q^n − q^k)`.
pub fn gl_order(n: usize, q: u32) -> BigUint {
    let qb = BigUint::from(q);
    let qn = qb.pow(n as u32);
    let mut out = BigUint::one();
    let mut qk = BigUint::one();
    for _ in 0..n {
        out *= &qn - &qk;
        qk *= &qb;
    }
    out
}

/// `n² + Σ_{k=0}^{n-1} log_q(1 − q^(k−n))`.
pub fn gl_order_log_q(n: usize, q: u32) -> f64 {
    let qf = q as f64;
    let correction: f64 = (0..n)
        .map(|k| (-(qf.powi(k as i32 - n as i32))).ln_1p())
        .sum::<f64>()
        / qf.ln();
    (n * n) as f64 + correction
}

/// `n² − log_q(e)/(q−1)`: the closed-form lower estimate of `log_q |GL(n,q)|`
/// obtained from `Π(1 − q^−r) ≥ e^(−1/(q−1))`. That inequality does not hold
/// for small q (at q = 2 the product is ≈ 0.289 < e^−1), so this value is
/// reported for display only; see [`gl_approx_is_lower_bound`].
pub fn gl_order_log_q_approx(n: usize, q: u32) -> f64 {
    (n * n) as f64 - log_q(E, q) / (q as f64 - 1.0)
}

/// Whether the closed-form estimate is actually below the exact value.
pub fn gl_approx_is_lower_bound(n: usize, q: u32) -> bool {
    gl_order_log_q_approx(n, q) <= gl_order_log_q(n, q)
}

/// Exponent of `q` in the bound on the number of distinct matrices that are
/// products of at most `k` elementary matrices:
/// `(k+2n)·log_q n + (3k+n)·log_q 2 + n + k + k·log_q e`.
pub fn counting_bound_log(n: usize, q: u32, k: f64) -> f64 {
    let nf = n as f64;
    (k + 2.0 * nf) * log_q(nf, q) + (3.0 * k + nf) * log_q(2.0, q) + nf + k + k * log_q(E, q)
}

/// Largest operation count below which at most an `alpha` fraction of
/// GL(n, q) can be reduced to the identity. Negative for small `n`.
pub fn threshold_kmax(n: usize, q: u32, alpha: f64) -> f64 {
    let nf = n as f64;
    let qf = q as f64;
    let numerator = nf * nf
        - 2.0 * nf * log_q(nf, q)
        - nf
        - nf * log_q(2.0, q)
        - log_q(E, q) / (qf - 1.0)
        - log_q(1.0 / alpha, q);
    let denominator = log_q(nf, q) + log_q(8.0 * qf * E, q);
    numerator / denominator
}

/// The pieces the counting bound is assembled from, as `log_q` counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentCounts {
    /// `log_q n^n`, bounding the `n!` swap products.
    pub permutation: f64,
    /// `log_q (2^n (q−1)^n)`: choices of scaled rows and coefficients.
    pub scale_exact: f64,
    /// `n·log_q 2 + n`, the relaxation of `scale_exact` used in the bound.
    pub scale: f64,
    /// `k·log_q 2`: compositions `r_1 + … + r_s ≤ k`.
    pub composition: f64,
    /// `n·log_q n + k·log_q n + 2k·log_q 2 + k`: transvection choices for
    /// fixed block lengths.
    pub per_block: f64,
    /// `k·log_q e`: slack left after dividing by the within-block orderings
    /// `r_1!⋯r_s!`.
    pub collision: f64,
}

impl ComponentCounts {
    /// Sum of the bound terms; equals [`counting_bound_log`].
    pub fn total(&self) -> f64 {
        self.permutation + self.scale + self.composition + self.per_block + self.collision
    }
}

pub fn component_counts(n: usize, q: u32, k: f64) -> ComponentCounts {
    let nf = n as f64;
    let l2 = log_q(2.0, q);
    let ln = log_q(nf, q);
    ComponentCounts {
        permutation: nf * ln,
        scale_exact: nf * l2 + nf * log_q(q as f64 - 1.0, q),
        scale: nf * l2 + nf,
        composition: k * l2,
        per_block: nf * ln + k * ln + 2.0 * k * l2 + k,
        collision: k * log_q(E, q),
    }
}

/// One row of the asymptotics table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteRow {
    pub n: usize,
    pub q: u32,
    pub alpha: f64,
    pub n_squared: f64,
    pub n_squared_over_log_q_n: f64,
    pub kmax: f64,
    pub gj_bound: f64,
    pub stripe_width: usize,
    pub striped_bound: f64,
    pub gl_log_q: f64,
    pub gl_log_q_approx: f64,
    pub approx_is_lower_bound: bool,
}

/// Column order of [`write_asymptote_csv`].
pub const ASYMPTOTE_COLUMNS: [&str; 12] = [
    "n",
    "q",
    "alpha",
    "n_squared",
    "n_squared_over_log_q_n",
    "kmax",
    "gj_bound",
    "stripe_width",
    "striped_bound",
    "gl_log_q",
    "gl_log_q_approx",
    "approx_is_lower_bound",
];

pub fn asymptote_table(n_list: &[usize], q: u32, alpha: f64) -> Vec<AsymptoteRow> {
    n_list
        .iter()
        .map(|&n| {
            let nf = n as f64;
            let w = default_stripe_width(n, q);
            AsymptoteRow {
                n,
                q,
                alpha,
                n_squared: nf * nf,
                n_squared_over_log_q_n: nf * nf / log_q(nf, q),
                kmax: threshold_kmax(n, q, alpha),
                gj_bound: nf * nf,
                stripe_width: w,
                striped_bound: striped_bound(n, q, w) as f64,
                gl_log_q: gl_order_log_q(n, q),
                gl_log_q_approx: gl_order_log_q_approx(n, q),
                approx_is_lower_bound: gl_approx_is_lower_bound(n, q),
            }
        })
        .collect()
}

pub fn write_asymptote_csv<W: Write>(rows: &[AsymptoteRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(ASYMPTOTE_COLUMNS)?;
    for r in rows {
        w.write_record(&[
            r.n.to_string(),
            r.q.to_string(),
            r.alpha.to_string(),
            r.n_squared.to_string(),
            format!("{:.6}", r.n_squared_over_log_q_n),
            format!("{:.6}", r.kmax),
            r.gj_bound.to_string(),
            r.stripe_width.to_string(),
            r.striped_bound.to_string(),
            format!("{:.6}", r.gl_log_q),
            format!("{:.6}", r.gl_log_q_approx),
            r.approx_is_lower_bound.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Ball size at radius `k` against the counting bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCheck {
    pub k: usize,
    pub ball: u64,
    pub ball_log_q: f64,
    pub bound_log_q: f64,
    pub holds: bool,
}

pub const BALL_COLUMNS: [&str; 5] = ["k", "ball", "ball_log_q", "bound_log_q", "holds"];

pub fn ball_domination(hist: &DistanceHistogram) -> Vec<BallCheck> {
    let q = hist.q;
    hist.ball_sizes()
        .into_iter()
        .enumerate()
        .map(|(k, ball)| {
            let ball_log_q = log_q(ball as f64, q);
            let bound_log_q = counting_bound_log(hist.n, q, k as f64);
            BallCheck {
                k,
                ball,
                ball_log_q,
                bound_log_q,
                holds: ball_log_q <= bound_log_q,
            }
        })
        .collect()
}

pub fn write_ball_csv<W: Write>(rows: &[BallCheck], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(BALL_COLUMNS)?;
    for r in rows {
        w.write_record(&[
            r.k.to_string(),
            r.ball.to_string(),
            format!("{:.6}", r.ball_log_q),
            format!("{:.6}", r.bound_log_q),
            if r.holds { "pass" } else { "fail" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fraction of the group within distance `⌊kmax⌋`, and whether it is at
/// most `alpha` (vacuously true when `kmax < 0`).
pub fn proportion_within_kmax(hist: &DistanceHistogram, alpha: f64) -> (f64, f64, bool) {
    let kmax = threshold_kmax(hist.n, hist.q, alpha);
    if kmax < 0.0 {
        return (kmax, 0.0, true);
    }
    let radius = kmax.floor() as usize;
    let balls = hist.ball_sizes();
    let total = *balls.last().unwrap_or(&1) as f64;
    let within = balls.get(radius).or(balls.last()).copied().unwrap_or(0) as f64;
    let fraction = within / total;
    (kmax, fraction, fraction <= alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_order_examples() {
        assert_eq!(gl_order(2, 2), BigUint::from(6u32));
        assert_eq!(gl_order(3, 2), BigUint::from(168u32));
        assert_eq!(gl_order(4, 2), BigUint::from(20160u32));
        for q in [2, 3, 4, 5, 7, 9] {
            assert_eq!(gl_order(1, q), BigUint::from(q - 1));
        }
    }

    #[test]
    fn gl_order_against_brute_force_count() {
        // Count invertible 2×2 matrices over GF(p) by determinant.
        for p in [2u64, 3, 5, 7] {
            let mut count = 0u64;
            for a in 0..p {
                for b in 0..p {
                    for c in 0..p {
                        for d in 0..p {
                            if (a * d + p * p - b * c) % p != 0 {
                                count += 1;
                            }
                        }
                    }
                }
            }
            assert_eq!(gl_order(2, p as u32), BigUint::from(count));
        }
    }

    #[test]
    fn log_form_matches_exact() {
        for q in [2, 3, 4, 5, 7, 8, 9] {
            for n in 1..=64 {
                let exact = ln_big(&gl_order(n, q)) / (q as f64).ln();
                let approx = gl_order_log_q(n, q);
                assert!(
                    ((exact - approx) / exact.max(1e-300)).abs() < 1e-9,
                    "n={n} q={q}"
                );
            }
        }
    }

    #[test]
    fn closed_form_estimate_fails_at_q2() {
        assert!(!gl_approx_is_lower_bound(10, 2));
        let prod: f64 = (1..=60).map(|r| 1.0 - 0.5f64.powi(r)).product();
        assert!((prod - 0.288788).abs() < 1e-6);
        assert!((-1.0f64).exp() > prod);
    }

    #[test]
    fn counting_bound_examples() {
        let v = counting_bound_log(2, 2, 1.0);
        assert!((v - (13.0 + std::f64::consts::LOG2_E)).abs() < 1e-12);
        assert!((counting_bound_log(1, 2, 0.0) - 2.0).abs() < 1e-12);
        for q in [2, 3, 5] {
            for k in 0..50 {
                assert!(
                    counting_bound_log(7, q, k as f64 + 1.0) > counting_bound_log(7, q, k as f64)
                );
            }
        }
    }

    #[test]
    fn kmax_examples() {
        let k = threshold_kmax(100, 2, 0.5);
        assert!((k - 700.68).abs() < 0.01, "{k}");
        assert!(threshold_kmax(4, 2, 0.5) < 0.0);
    }

    #[test]
    fn kmax_solves_counting_equation() {
        for n in [10usize, 100, 1000, 10_000] {
            for q in [2, 3, 4, 5, 8, 9] {
                for alpha in [0.1, 0.5, 0.9] {
                    let k = threshold_kmax(n, q, alpha);
                    let lhs = counting_bound_log(n, q, k);
                    let rhs =
                        (n * n) as f64 - log_q(E, q) / (q as f64 - 1.0) - log_q(1.0 / alpha, q);
                    assert!(((lhs - rhs) / rhs).abs() < 1e-9, "n={n} q={q} a={alpha}");
                }
            }
        }
    }

    #[test]
    fn kmax_monotone() {
        for q in [2, 3] {
            let mut prev = threshold_kmax(40, q, 0.5);
            for n in 41..400 {
                let k = threshold_kmax(n, q, 0.5);
                assert!(k > prev);
                prev = k;
            }
            assert!(threshold_kmax(100, q, 0.2) < threshold_kmax(100, q, 0.8));
        }
    }

    #[test]
    fn component_examples() {
        let c = component_counts(3, 2, 0.0);
        assert!((c.permutation - 3.0 * 3f64.log2()).abs() < 1e-12);
        assert!((component_counts(2, 2, 0.0).scale_exact - 2.0).abs() < 1e-12);
        for n in [1, 2, 5, 50] {
            for q in [2, 3, 4, 9] {
                for k in [0.0, 1.0, 7.0, 123.5] {
                    let c = component_counts(n, q, k);
                    assert!(
                        (c.total() - counting_bound_log(n, q, k)).abs()
                            < 1e-12 * c.total().max(1.0)
                    );
                }
            }
        }
    }

    #[test]
    fn asymptote_examples() {
        assert!(asymptote_table(&[], 2, 0.5).is_empty());
        let rows = asymptote_table(&[1_000_000], 2, 0.5);
        let ratio = rows[0].kmax * (1e6f64).log2() / 1e12;
        assert!((ratio - 0.785).abs() < 0.001, "{ratio}");
        let rows = asymptote_table(&[2_000_000, 4_000_000], 2, 0.5);
        assert!(rows[1].kmax * 4e6f64.log2() / 16e12 > rows[0].kmax * 2e6f64.log2() / 4e12);
        for row in asymptote_table(&[512, 1024, 4096, 1 << 16], 2, 0.5) {
            assert!(
                row.kmax >= 0.0 && row.n_squared_over_log_q_n >= 0.0 && row.striped_bound >= 0.0
            );
        }
    }

    #[test]
    fn query_validation() {
        assert!(BoundsQuery::new(4, 2, 0.5, None).is_ok());
        assert!(BoundsQuery::new(4, 2, 1.0, None).is_err());
        assert!(BoundsQuery::new(4, 6, 0.5, None).is_err());
        assert!(BoundsQuery::new(0, 2, 0.5, Some(3)).is_err());
    }

    #[test]
    fn csv_header() {
        let mut buf = Vec::new();
        write_asymptote_csv(&asymptote_table(&[100], 2, 0.5), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), ASYMPTOTE_COLUMNS.join(","));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        let kmax: f64 = row[5].parse().unwrap();
        assert!((kmax - 700.68).abs() < 0.01);
    }
}
