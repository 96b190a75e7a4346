//! Reflected base-q Gray code over `{0, …, q-1}^d`.
//!
//! Consecutive vectors differ in exactly one coordinate, by ±1 as integers.
//! Coordinate 0 changes fastest.

/// One step of the code: `coord` moved from `old` to `new`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GrayStep {
    pub coord: usize,
    pub old: u32,
    pub new: u32,
}

/// Iterator over the steps of the code starting from the all-zero vector.
/// Yields `q^d - 1` steps; [`GrayCode::digits`] holds the current vector.
#[derive(Clone, Debug)]
pub struct GrayCode {
    q: u32,
    digits: Vec<u32>,
    rising: Vec<bool>,
    done: bool,
}

impl GrayCode {
    pub fn new(q: u32, d: usize) -> Self {
        assert!(q >= 2);
        GrayCode {
            q,
            digits: vec![0; d],
            rising: vec![true; d],
            done: false,
        }
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }
}

impl Iterator for GrayCode {
    type Item = GrayStep;

    fn next(&mut self) -> Option<GrayStep> {
        if self.done {
            return None;
        }
        for coord in 0..self.digits.len() {
            let old = self.digits[coord];
            if self.rising[coord] && old + 1 < self.q {
                self.digits[coord] = old + 1;
                return Some(GrayStep {
                    coord,
                    old,
                    new: old + 1,
                });
            }
            if !self.rising[coord] && old > 0 {
                self.digits[coord] = old - 1;
                return Some(GrayStep {
                    coord,
                    old,
                    new: old - 1,
                });
            }
            self.rising[coord] = !self.rising[coord];
        }
        self.done = true;
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn visits_every_vector_once() {
        for (q, d) in [
            (2, 0),
            (2, 1),
            (2, 4),
            (3, 2),
            (3, 3),
            (4, 3),
            (5, 2),
            (9, 2),
        ] {
            let mut code = GrayCode::new(q, d);
            let mut seen = HashSet::new();
            seen.insert(code.digits().to_vec());
            let mut steps = 0;
            while let Some(step) = code.next() {
                assert_eq!(step.old.abs_diff(step.new), 1);
                assert_eq!(code.digits()[step.coord], step.new);
                assert!(seen.insert(code.digits().to_vec()), "repeat in q={q} d={d}");
                steps += 1;
            }
            assert_eq!(steps + 1, (q as usize).pow(d as u32));
            assert!(code.next().is_none());
        }
    }

    #[test]
    fn ternary_order() {
        let mut code = GrayCode::new(3, 2);
        let mut seq = vec![code.digits().to_vec()];
        while code.next().is_some() {
            seq.push(code.digits().to_vec());
        }
        let expect: Vec<Vec<u32>> = [
            [0, 0],
            [1, 0],
            [2, 0],
            [2, 1],
            [1, 1],
            [0, 1],
            [0, 2],
            [1, 2],
            [2, 2],
        ]
        .iter()
        .map(|v| v.to_vec())
        .collect();
        assert_eq!(seq, expect);
    }
}
