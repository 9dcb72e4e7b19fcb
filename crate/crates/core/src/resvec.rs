//! Sparse integer vectors over the abstract basis `e_1..e_m`.
//!
//! These encode resonance candidates: `R_k` is the set of vectors with zero
//! signed sum and l1 norm at most `2k`.

use std::collections::BTreeMap;
use std::fmt;

/// Sparse vector in Z^m with cached signed sum and l1 norm.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ResVec {
    entries: BTreeMap<usize, i64>,
    sum: i64,
    l1: i64,
}

impl fmt::Debug for ResVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (k, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v:+}e{k}")?;
        }
        write!(f, "]")
    }
}

impl ResVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(idx: usize) -> Self {
        let mut v = Self::new();
        v.add_entry(idx, 1);
        v
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (usize, i64)>) -> Self {
        let mut v = Self::new();
        for (i, c) in entries {
            v.add_entry(i, c);
        }
        v
    }

    pub fn add_entry(&mut self, idx: usize, coef: i64) {
        if coef == 0 {
            return;
        }
        let e = self.entries.entry(idx).or_insert(0);
        self.sum += coef;
        self.l1 -= e.abs();
        *e += coef;
        self.l1 += e.abs();
        if *e == 0 {
            self.entries.remove(&idx);
        }
    }

    pub fn get(&self, idx: usize) -> i64 {
        self.entries.get(&idx).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.entries.iter().map(|(&k, &v)| (k, v))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn sum(&self) -> i64 {
        self.sum
    }

    pub fn l1(&self) -> i64 {
        self.l1
    }

    /// Membership in `R_k`: zero signed sum and l1 norm at most `2k`.
    pub fn in_r(&self, k: i64) -> bool {
        self.sum == 0 && self.l1 <= 2 * k
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn add(&self, other: &ResVec) -> ResVec {
        let mut out = self.clone();
        for (i, c) in other.iter() {
            out.add_entry(i, c);
        }
        out
    }

    pub fn sub(&self, other: &ResVec) -> ResVec {
        let mut out = self.clone();
        for (i, c) in other.iter() {
            out.add_entry(i, -c);
        }
        out
    }

    pub fn neg(&self) -> ResVec {
        let mut out = ResVec::new();
        for (i, c) in self.iter() {
            out.add_entry(i, -c);
        }
        out
    }

    pub fn scaled(&self, q: i64) -> ResVec {
        let mut out = ResVec::new();
        for (i, c) in self.iter() {
            out.add_entry(i, c * q);
        }
        out
    }

    /// Positive part (entries > 0) and negative part (negated entries < 0),
    /// both as non-negative vectors.
    pub fn split_signs(&self) -> (ResVec, ResVec) {
        let mut pos = ResVec::new();
        let mut neg = ResVec::new();
        for (i, c) in self.iter() {
            if c > 0 {
                pos.add_entry(i, c);
            } else {
                neg.add_entry(i, -c);
            }
        }
        (pos, neg)
    }

    /// l1 norm of the restriction to an index range.
    pub fn l1_in_range(&self, range: std::ops::Range<usize>) -> i64 {
        self.entries
            .range(range)
            .map(|(_, v)| v.abs())
            .sum()
    }

    /// Canonical sign: the first nonzero entry is positive. Returns the
    /// canonical representative of {v, -v}.
    pub fn canonical_sign(&self) -> ResVec {
        match self.entries.values().next() {
            Some(&c) if c < 0 => self.neg(),
            _ => self.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caches_stay_consistent() {
        let mut v = ResVec::new();
        v.add_entry(3, 2);
        v.add_entry(5, -1);
        v.add_entry(3, -2); // cancels index 3
        assert_eq!(v.get(3), 0);
        assert_eq!(v.sum(), -1);
        assert_eq!(v.l1(), 1);
        assert_eq!(v.support_len(), 1);
    }

    #[test]
    fn r_membership() {
        let v = ResVec::from_entries([(0, 1), (1, 1), (2, -1), (3, -1)]);
        assert!(v.in_r(2));
        assert!(!v.scaled(3).in_r(2)); // l1 = 12 > 2*2... also budget k=2 means l1<=4
        assert!(v.scaled(2).in_r(4));
        let w = ResVec::from_entries([(0, 1)]);
        assert!(!w.in_r(2)); // signed sum nonzero
    }

    #[test]
    fn split_and_canonical() {
        let v = ResVec::from_entries([(1, -2), (4, 3)]);
        let (p, n) = v.split_signs();
        assert_eq!(p.get(4), 3);
        assert_eq!(n.get(1), 2);
        assert_eq!(v.canonical_sign().get(1), 2);
    }
}
