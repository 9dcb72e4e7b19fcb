//! Prototype embedding of the abstract generations into Z^2.
//!
//! The `k`-th generation consists of the tuples `S2^(k-1) x S1^(N-k)` over the
//! alphabets `S1 = {1, i}` and `S2 = {0, 1+i}`; a tuple maps to the Gaussian
//! integer product of its symbols. These products are highly non-distinct (any
//! tuple containing the symbol 0 collapses to the origin); they only serve as
//! placement targets and as the carrier of the family combinatorics.

use crate::error::{Error, Result};

/// A symbol of the combined alphabet, as a Gaussian integer.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Symbol {
    /// `1` (first generation alphabet)
    One,
    /// `i`
    I,
    /// `0` (later generation alphabet)
    Zero,
    /// `1 + i`
    OnePlusI,
}

impl Symbol {
    pub fn in_s1(self) -> bool {
        matches!(self, Symbol::One | Symbol::I)
    }

    pub fn in_s2(self) -> bool {
        matches!(self, Symbol::Zero | Symbol::OnePlusI)
    }

    /// (re, im) of the symbol.
    pub fn value(self) -> (i64, i64) {
        match self {
            Symbol::One => (1, 0),
            Symbol::I => (0, 1),
            Symbol::Zero => (0, 0),
            Symbol::OnePlusI => (1, 1),
        }
    }

    /// The involution `sigma` swapping the two symbols of each alphabet:
    /// `0 <-> 1+i`, `1 <-> i`. It preserves generations and families.
    pub fn sigma(self) -> Symbol {
        match self {
            Symbol::One => Symbol::I,
            Symbol::I => Symbol::One,
            Symbol::Zero => Symbol::OnePlusI,
            Symbol::OnePlusI => Symbol::Zero,
        }
    }

    /// Index within its own alphabet, used for lexicographic ordering.
    fn local_index(self) -> usize {
        match self {
            Symbol::Zero | Symbol::One => 0,
            Symbol::OnePlusI | Symbol::I => 1,
        }
    }
}

/// One element of the prototype: a tuple of `N-1` symbols.
pub type Tuple = Vec<Symbol>;

/// Gaussian-integer product of the symbols of a tuple.
pub fn tuple_product(t: &[Symbol]) -> (i64, i64) {
    let (mut re, mut im) = (1i64, 0i64);
    for s in t {
        let (a, b) = s.value();
        let nre = re * a - im * b;
        let nim = re * b + im * a;
        re = nre;
        im = nim;
    }
    (re, im)
}

/// The prototype embedding for `N` generations: all `m = N * 2^(N-1)` tuples
/// in generation-major, lexicographic order, with their Gaussian products.
#[derive(Clone, Debug)]
pub struct PrototypeEmbedding {
    pub n_gens: usize,
    pub elements: Vec<Tuple>,
    pub gauss_points: Vec<(i64, i64)>,
}

pub const MAX_N: usize = 16;

impl PrototypeEmbedding {
    pub fn generation_size(&self) -> usize {
        1usize << (self.n_gens - 1)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// 1-based generation number of a 0-based element index.
    pub fn generation_of(&self, idx: usize) -> usize {
        idx / self.generation_size() + 1
    }

    /// 0-based index range of a 1-based generation.
    pub fn generation_range(&self, gen: usize) -> std::ops::Range<usize> {
        let n = self.generation_size();
        (gen - 1) * n..gen * n
    }

    /// Look up the global index of a tuple (must be well-formed for some
    /// generation).
    pub fn index_of(&self, t: &[Symbol]) -> Option<usize> {
        let gen = t.iter().take_while(|s| s.in_s2()).count() + 1;
        if gen > self.n_gens {
            return None;
        }
        if !t.iter().skip(gen - 1).all(|s| s.in_s1()) {
            return None;
        }
        let mut local = 0usize;
        for s in t {
            local = local * 2 + s.local_index();
        }
        Some((gen - 1) * self.generation_size() + local)
    }
}

/// Build the prototype embedding for `2 <= N <= 16`.
pub fn build_prototype(n_gens: usize) -> Result<PrototypeEmbedding> {
    if !(2..=MAX_N).contains(&n_gens) {
        return Err(Error::Input(format!(
            "generation count must be in 2..={MAX_N}, got {n_gens}"
        )));
    }
    let slots = n_gens - 1;
    let gen_size = 1usize << slots;
    let mut elements = Vec::with_capacity(n_gens * gen_size);
    for gen in 1..=n_gens {
        // slots 0..gen-1 use S2, the rest S1; enumerate lexicographically.
        for code in 0..gen_size {
            let mut t = Vec::with_capacity(slots);
            for slot in 0..slots {
                let bit = (code >> (slots - 1 - slot)) & 1;
                let sym = if slot < gen - 1 {
                    if bit == 0 { Symbol::Zero } else { Symbol::OnePlusI }
                } else if bit == 0 {
                    Symbol::One
                } else {
                    Symbol::I
                };
                t.push(sym);
            }
            elements.push(t);
        }
    }
    let gauss_points = elements.iter().map(|t| tuple_product(t)).collect();
    Ok(PrototypeEmbedding { n_gens, elements, gauss_points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n2_products_match_symbols() {
        let p = build_prototype(2).unwrap();
        assert_eq!(p.len(), 4);
        // generation 1: tuples (1), (i); generation 2: (0), (1+i)
        assert_eq!(p.gauss_points[0], (1, 0));
        assert_eq!(p.gauss_points[1], (0, 1));
        assert_eq!(p.gauss_points[2], (0, 0));
        assert_eq!(p.gauss_points[3], (1, 1));
    }

    #[test]
    fn n2_family_rectangle_identity() {
        let p = build_prototype(2).unwrap();
        let sum = |idx: &[usize], sign: &[i64]| -> (i64, i64) {
            idx.iter().zip(sign).fold((0, 0), |(x, y), (&i, &s)| {
                (x + s * p.gauss_points[i].0, y + s * p.gauss_points[i].1)
            })
        };
        // parents (1), (i); children (0), (1+i): sum and norm-sum both cancel
        assert_eq!(sum(&[0, 1, 2, 3], &[1, 1, -1, -1]), (0, 0));
        let n2 = |i: usize| {
            let (x, y) = p.gauss_points[i];
            x * x + y * y
        };
        assert_eq!(n2(0) + n2(1) - n2(2) - n2(3), 0);
    }

    #[test]
    fn n3_counts() {
        let p = build_prototype(3).unwrap();
        assert_eq!(p.len(), 12);
        assert_eq!(p.generation_size(), 4);
        for g in 1..=3 {
            for i in p.generation_range(g) {
                assert_eq!(p.generation_of(i), g);
                let t = &p.elements[i];
                assert!(t[..g - 1].iter().all(|s| s.in_s2()));
                assert!(t[g - 1..].iter().all(|s| s.in_s1()));
            }
        }
    }

    #[test]
    fn index_roundtrip() {
        let p = build_prototype(4).unwrap();
        for (i, t) in p.elements.iter().enumerate() {
            assert_eq!(p.index_of(t), Some(i));
        }
    }

    #[test]
    fn size_guard() {
        assert!(build_prototype(1).is_err());
        assert!(build_prototype(17).is_err());
    }
}
