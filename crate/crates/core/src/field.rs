//! Arithmetic in GF(q), q = p^m, backed by lookup tables.
//!
//! Elements are integers in `[0, q)`. For extension fields the base-p digits
//! of an element are the coefficients of its polynomial representative, with
//! the constant term in the least-significant digit. The modulus is the
//! lexicographically smallest monic irreducible polynomial of degree `m`,
//! where polynomials are compared by their coefficient tuples read from the
//! highest non-leading degree down (equivalently, by the integer whose base-p
//! digits are the non-leading coefficients).

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported field order.
pub const MAX_ORDER: u32 = 1 << 16;

/// Above this order the full `q × q` add/mul tables are not materialized;
/// multiplication goes through log/antilog tables instead.
const FULL_TABLE_LIMIT: u32 = 256;

/// An element of GF(q) in base-p digit encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite field GF(p^m) with precomputed tables.
///
/// Immutable after construction; share it behind an `Arc`.
#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    add: Option<Vec<u16>>,
    mul: Option<Vec<u16>>,
    neg: Vec<u16>,
    inv: Vec<u16>,
    // log[0] is unused; exp has length 2(q-1) so log sums need no reduction.
    log: Vec<u32>,
    exp: Vec<u16>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("m", &self.m)
            .field("q", &self.q)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.m == other.m
    }
}

impl Eq for FieldSpec {}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Dense polynomials over GF(p), coefficients low to high.
mod poly {
    pub fn trim(a: &mut Vec<u32>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub fn from_code(code: u32, p: u32, len: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(len);
        let mut c = code;
        for _ in 0..len {
            out.push(c % p);
            c /= p;
        }
        out
    }

    pub fn to_code(a: &[u32], p: u32) -> u32 {
        a.iter().rev().fold(0, |acc, &d| acc * p + d)
    }

    fn inv_mod(a: u32, p: u32) -> u32 {
        // p is prime, so a^(p-2) is the inverse.
        let mut result = 1u64;
        let mut base = a as u64 % p as u64;
        let mut e = p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = result * base % p as u64;
            }
            base = base * base % p as u64;
            e >>= 1;
        }
        result as u32
    }

    /// Remainder of `a` modulo `b` (b nonzero).
    pub fn rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut r = a.to_vec();
        trim(&mut r);
        let mut b = b.to_vec();
        trim(&mut b);
        let db = b.len() - 1;
        let lead_inv = inv_mod(b[db], p);
        while r.len() > db {
            let dr = r.len() - 1;
            let factor = r[dr] * lead_inv % p;
            let shift = dr - db;
            for (i, &bc) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - factor * bc % p) % p;
            }
            trim(&mut r);
        }
        r
    }

    pub fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u32; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        trim(&mut out);
        out
    }

    /// Irreducibility of a monic polynomial by trial division with every
    /// monic polynomial of degree 1..=deg/2.
    pub fn is_irreducible(f: &[u32], p: u32) -> bool {
        let deg = f.len() - 1;
        for d in 1..=deg / 2 {
            let count = p.pow(d as u32);
            for code in 0..count {
                let mut g = from_code(code, p, d);
                g.push(1);
                if rem(f, &g, p).is_empty() {
                    return false;
                }
            }
        }
        true
    }
}

impl FieldSpec {
    /// Builds GF(p^m).
    pub fn new(p: u32, m: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if m == 0 {
            return Err(Error::FieldOrder { p, m });
        }
        let q = p
            .checked_pow(m)
            .filter(|&q| q <= MAX_ORDER)
            .ok_or(Error::FieldOrder { p, m })?;

        let modulus = (0..q)
            .map(|code| {
                let mut f = poly::from_code(code, p, m as usize);
                f.push(1);
                f
            })
            .find(|f| poly::is_irreducible(f, p))
            .expect("a monic irreducible polynomial exists in every degree");

        let slow_mul = |a: u32, b: u32| -> u32 {
            let pa = poly::from_code(a, p, m as usize);
            let pb = poly::from_code(b, p, m as usize);
            let prod = poly::rem(&poly::mul(&pa, &pb, p), &modulus, p);
            poly::to_code(&prod, p)
        };
        let slow_pow = |a: u32, mut e: u32| -> u32 {
            let mut result = 1u32;
            let mut base = a;
            while e > 0 {
                if e & 1 == 1 {
                    result = slow_mul(result, base);
                }
                base = slow_mul(base, base);
                e >>= 1;
            }
            result
        };

        let order = q - 1;
        let factors = prime_factors(order);
        let generator = (1..q)
            .find(|&g| factors.iter().all(|&f| slow_pow(g, order / f) != 1))
            .expect("the multiplicative group of a finite field is cyclic");

        let mut exp = vec![0u16; 2 * order as usize];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..order {
            exp[i as usize] = x as u16;
            log[x as usize] = i;
            x = slow_mul(x, generator);
        }
        for i in order..2 * order {
            exp[i as usize] = exp[(i - order) as usize];
        }

        let digit_add = |a: u32, b: u32, negate_b: bool| -> u32 {
            let (mut a, mut b) = (a, b);
            let mut out = 0u32;
            let mut place = 1u32;
            for _ in 0..m {
                let da = a % p;
                let db = b % p;
                let d = if negate_b {
                    (da + p - db) % p
                } else {
                    (da + db) % p
                };
                out += d * place;
                place *= p;
                a /= p;
                b /= p;
            }
            out
        };

        let neg: Vec<u16> = (0..q).map(|a| digit_add(0, a, true) as u16).collect();
        let mut inv = vec![0u16; q as usize];
        for a in 1..q {
            let l = log[a as usize];
            inv[a as usize] = exp[((order - l) % order) as usize];
        }

        let (add, mul) = if q <= FULL_TABLE_LIMIT {
            let mut add = vec![0u16; (q * q) as usize];
            let mut mul = vec![0u16; (q * q) as usize];
            for a in 0..q {
                for b in 0..q {
                    let idx = (a * q + b) as usize;
                    add[idx] = digit_add(a, b, false) as u16;
                    if a != 0 && b != 0 {
                        mul[idx] = exp[(log[a as usize] + log[b as usize]) as usize];
                    }
                }
            }
            (Some(add), Some(mul))
        } else {
            (None, None)
        };

        Ok(FieldSpec {
            p,
            m,
            q,
            modulus,
            add,
            mul,
            neg,
            inv,
            log,
            exp,
        })
    }

    /// Builds the field of order `q` (a prime power).
    pub fn with_order(q: u32) -> Result<Self> {
        let (p, m) = prime_power(q).ok_or(Error::NotPrimePower(q))?;
        Self::new(p, m)
    }

    #[inline]
    pub fn characteristic(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.m
    }

    #[inline]
    pub fn order(&self) -> u32 {
        self.q
    }

    /// Modulus coefficients, constant term first; monic of length `m + 1`.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn element(&self, value: u32) -> Result<FieldElement> {
        if value < self.q {
            Ok(FieldElement(value as u16))
        } else {
            Err(Error::ElementOutOfRange { value, q: self.q })
        }
    }

    pub fn contains(&self, a: FieldElement) -> bool {
        (a.0 as u32) < self.q
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> {
        (0..self.q).map(|v| FieldElement(v as u16))
    }

    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> {
        (1..self.q).map(|v| FieldElement(v as u16))
    }

    #[inline]
    pub(crate) fn add_raw(&self, a: u16, b: u16) -> u16 {
        match &self.add {
            Some(t) => t[a as usize * self.q as usize + b as usize],
            None if self.p == 2 => a ^ b,
            None => {
                let (p, mut a, mut b) = (self.p, a as u32, b as u32);
                let mut out = 0u32;
                let mut place = 1u32;
                for _ in 0..self.m {
                    out += ((a % p + b % p) % p) * place;
                    place *= p;
                    a /= p;
                    b /= p;
                }
                out as u16
            }
        }
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u16, b: u16) -> u16 {
        match &self.mul {
            Some(t) => t[a as usize * self.q as usize + b as usize],
            None => {
                if a == 0 || b == 0 {
                    0
                } else {
                    self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
                }
            }
        }
    }

    /// Row of the multiplication table for a fixed left factor, when the
    /// full table is materialized.
    #[inline]
    pub(crate) fn mul_row(&self, a: u16) -> Option<&[u16]> {
        let q = self.q as usize;
        self.mul
            .as_ref()
            .map(|t| &t[a as usize * q..(a as usize + 1) * q])
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.add_raw(a.0, b.0))
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.mul_raw(a.0, b.0))
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            Err(Error::ZeroInverse)
        } else {
            Ok(FieldElement(self.inv[a.0 as usize]))
        }
    }

    /// `a / b`; fails when `b` is zero.
    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElement, mut e: u64) -> FieldElement {
        let mut result = FieldElement::ONE;
        let mut base = a;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(result, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        result
    }
}

/// Splits `q` into `(p, m)` with `q = p^m`, or `None` if `q` is not a prime power.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut m = 0;
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
        m += 1;
    }
    (r == 1).then_some((p, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fe(v: u16) -> FieldElement {
        FieldElement(v)
    }

    #[test]
    fn prime_field_modulus_is_x() {
        let f = FieldSpec::new(2, 1).unwrap();
        assert_eq!(f.order(), 2);
        assert_eq!(f.modulus(), &[0, 1]);
    }

    #[test]
    fn gf4_modulus() {
        let f = FieldSpec::new(2, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
    }

    #[test]
    fn smallest_moduli() {
        // x^3 + x + 1 beats x^3 + x^2 + 1; x^2 + 1 is irreducible over GF(3).
        assert_eq!(FieldSpec::new(2, 3).unwrap().modulus(), &[1, 1, 0, 1]);
        assert_eq!(FieldSpec::new(3, 2).unwrap().modulus(), &[1, 0, 1]);
        assert_eq!(FieldSpec::new(2, 4).unwrap().modulus(), &[1, 1, 0, 0, 1]);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(FieldSpec::new(4, 1), Err(Error::NotPrime(4))));
        assert!(matches!(
            FieldSpec::new(2, 17),
            Err(Error::FieldOrder { .. })
        ));
        assert!(matches!(
            FieldSpec::new(3, 0),
            Err(Error::FieldOrder { .. })
        ));
        assert!(FieldSpec::with_order(6).is_err());
        assert!(FieldSpec::with_order(1).is_err());
    }

    #[test]
    fn spot_values() {
        let gf3 = FieldSpec::new(3, 1).unwrap();
        assert_eq!(gf3.add(fe(2), fe(2)), fe(1));
        let gf4 = FieldSpec::new(2, 2).unwrap();
        assert_eq!(gf4.mul(fe(2), fe(3)), fe(1));
        let gf5 = FieldSpec::new(5, 1).unwrap();
        assert_eq!(gf5.inv(fe(3)).unwrap(), fe(2));
        assert!(matches!(gf5.inv(fe(0)), Err(Error::ZeroInverse)));
    }

    #[test]
    fn prime_power_split() {
        assert_eq!(prime_power(9), Some((3, 2)));
        assert_eq!(prime_power(2), Some((2, 1)));
        assert_eq!(prime_power(65536), Some((2, 16)));
        assert_eq!(prime_power(12), None);
    }

    fn check_axioms(f: &FieldSpec) {
        let els: Vec<_> = f.elements().collect();
        for &a in &els {
            assert_eq!(f.add(a, f.neg(a)), FieldElement::ZERO);
            assert_eq!(f.sub(a, a), FieldElement::ZERO);
            assert_eq!(f.mul(a, FieldElement::ONE), a);
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
            }
            for &b in &els {
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert!(f.contains(f.add(a, b)) && f.contains(f.mul(a, b)));
                for &c in &els {
                    assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
                    assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }

    #[test]
    fn axioms_exhaustive_small_fields() {
        for q in [2, 3, 4, 5, 7, 8, 9, 11, 13, 16] {
            check_axioms(&FieldSpec::with_order(q).unwrap());
        }
    }

    #[test]
    fn frobenius_is_additive() {
        for q in [4, 8, 9] {
            let f = FieldSpec::with_order(q).unwrap();
            let p = f.characteristic() as u64;
            for a in f.elements() {
                for b in f.elements() {
                    assert_eq!(
                        f.pow(f.add(a, b), p),
                        f.add(f.pow(a, p), f.pow(b, p)),
                        "q={q} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn large_field_without_full_tables() {
        for q in [3u32.pow(6), 1 << 12, 65536] {
            let f = FieldSpec::with_order(q).unwrap();
            assert!(f.mul.is_none());
            for v in [1u16, 2, 3, 100, (q - 1) as u16] {
                let a = fe(v);
                assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
                assert_eq!(f.add(a, f.neg(a)), FieldElement::ZERO);
            }
            let a = fe(5);
            let b = fe(77);
            let c = fe(300);
            assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        }
    }
}
