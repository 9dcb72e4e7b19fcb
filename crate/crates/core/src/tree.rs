//! The genealogical tree: the complete family system over the abstract
//! generations, its lower-row-echelon matrix, membership in the integer span,
//! and the intra-generational symmetry maps.
//!
//! A family links two parents of generation `g` to two children of generation
//! `g+1`; as a vector it is `e_p1 + e_p2 - e_c1 - e_c2`. Row-echelon order
//! (rows sorted by generation, then by the larger child index, which is the
//! pivot) makes span membership a single back-substitution sweep.

use crate::error::{Error, Result};
use crate::prototype::{PrototypeEmbedding, Symbol};
use crate::resvec::ResVec;
use std::collections::HashSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Family {
    /// 1-based generation number of the parents.
    pub gen: usize,
    /// 0-based global indices, parents in generation `gen`.
    pub parents: [usize; 2],
    /// 0-based global indices, children in generation `gen + 1`.
    /// `children[1]` is the pivot (the larger index).
    pub children: [usize; 2],
}

impl Family {
    pub fn vector(&self) -> ResVec {
        ResVec::from_entries([
            (self.parents[0], 1),
            (self.parents[1], 1),
            (self.children[0], -1),
            (self.children[1], -1),
        ])
    }

    pub fn pivot(&self) -> usize {
        self.children[1]
    }

    pub fn members(&self) -> [usize; 4] {
        [self.parents[0], self.parents[1], self.children[0], self.children[1]]
    }
}

#[derive(Clone, Debug)]
pub struct GenealogicalTree {
    pub n_gens: usize,
    /// Families in echelon order: by generation, then by pivot index.
    pub families: Vec<Family>,
    /// For each basis index: the family (index into `families`) in which it is
    /// a parent, if any (all of generations 1..N-1).
    pub family_as_parent: Vec<Option<usize>>,
    /// For each basis index: the family in which it is a child, if any
    /// (all of generations 2..N).
    pub family_as_child: Vec<Option<usize>>,
}

impl GenealogicalTree {
    pub fn generation_size(&self) -> usize {
        1usize << (self.n_gens - 1)
    }

    pub fn len_basis(&self) -> usize {
        self.n_gens << (self.n_gens - 1)
    }

    pub fn generation_of(&self, idx: usize) -> usize {
        idx / self.generation_size() + 1
    }

    pub fn generation_range(&self, gen: usize) -> std::ops::Range<usize> {
        let n = self.generation_size();
        (gen - 1) * n..gen * n
    }

    /// Families whose parents are in generation `gen` (1-based), in echelon order.
    pub fn families_of_generation(&self, gen: usize) -> &[Family] {
        let per_gen = 1usize << (self.n_gens - 2);
        let start = (gen - 1) * per_gen;
        &self.families[start..start + per_gen]
    }

    /// Sibling of a child index (the other child in its family).
    pub fn sibling(&self, idx: usize) -> Option<usize> {
        let f = &self.families[self.family_as_child[idx]?];
        Some(if f.children[0] == idx { f.children[1] } else { f.children[0] })
    }

    /// Spouse of a parent index (the other parent in its family).
    pub fn spouse(&self, idx: usize) -> Option<usize> {
        let f = &self.families[self.family_as_parent[idx]?];
        Some(if f.parents[0] == idx { f.parents[1] } else { f.parents[0] })
    }

    /// Decompose `v` over the family rows with integer coefficients, if
    /// possible. Returns the coefficient of each family in echelon order.
    ///
    /// Back-substitution on the pivots (each pivot child carries entry -1 and
    /// appears in exactly one row), followed by an exact residual check.
    pub fn span_decompose(&self, v: &ResVec) -> Option<Vec<i64>> {
        let mut coeffs = vec![0i64; self.families.len()];
        let mut rest = v.clone();
        for (fi, fam) in self.families.iter().enumerate().rev() {
            let c = rest.get(fam.pivot());
            if c != 0 {
                // pivot entry of the row is -1
                let alpha = -c;
                coeffs[fi] = alpha;
                rest = rest.sub(&fam.vector().scaled(alpha));
            }
        }
        if rest.is_zero() {
            Some(coeffs)
        } else {
            None
        }
    }

    pub fn in_span(&self, v: &ResVec) -> bool {
        self.span_decompose(v).is_some()
    }

    /// Recombine family coefficients into a vector (inverse of decompose).
    pub fn combine(&self, coeffs: &[i64]) -> ResVec {
        let mut out = ResVec::new();
        for (fam, &c) in self.families.iter().zip(coeffs) {
            if c != 0 {
                out = out.add(&fam.vector().scaled(c));
            }
        }
        out
    }

    /// The permutation of basis indices induced by composing the slot
    /// involutions that carry element `j1` to element `j2` (both must be in
    /// the same generation). Preserves generations and the family system.
    pub fn symmetry_map(&self, proto: &PrototypeEmbedding, j1: usize, j2: usize) -> Result<Vec<usize>> {
        if self.generation_of(j1) != self.generation_of(j2) {
            return Err(Error::Input("symmetry map endpoints must share a generation".into()));
        }
        let t1 = &proto.elements[j1];
        let t2 = &proto.elements[j2];
        let flips: Vec<usize> = (0..t1.len()).filter(|&s| t1[s] != t2[s]).collect();
        let map_tuple = |t: &[Symbol]| -> Vec<Symbol> {
            let mut o = t.to_vec();
            for &s in &flips {
                o[s] = o[s].sigma();
            }
            o
        };
        let mut perm = Vec::with_capacity(proto.len());
        for t in &proto.elements {
            let idx = proto
                .index_of(&map_tuple(t))
                .ok_or_else(|| Error::Internal("sigma image left the prototype".into()))?;
            perm.push(idx);
        }
        if perm[j1] != j2 {
            return Err(Error::Internal("symmetry map misses its endpoint".into()));
        }
        Ok(perm)
    }

    /// Check that a basis permutation fixes each generation setwise and maps
    /// the family system onto itself.
    pub fn permutation_preserves_tree(&self, perm: &[usize]) -> bool {
        for (i, &p) in perm.iter().enumerate() {
            if self.generation_of(i) != self.generation_of(p) {
                return false;
            }
        }
        let canon = |f: &Family| -> ([usize; 2], [usize; 2]) {
            let mut pa = f.parents;
            pa.sort_unstable();
            let mut ch = f.children;
            ch.sort_unstable();
            (pa, ch)
        };
        let all: HashSet<_> = self.families.iter().map(canon).collect();
        self.families.iter().all(|f| {
            let mapped = Family {
                gen: f.gen,
                parents: [perm[f.parents[0]], perm[f.parents[1]]],
                children: [perm[f.children[0]], perm[f.children[1]]],
            };
            all.contains(&canon(&mapped))
        })
    }

    /// Structural checks: each index of generations 1..N-1 is a parent exactly
    /// once, each index of generations 2..N a child exactly once, and for
    /// interior generations sibling != spouse.
    pub fn verify_structure(&self) -> Result<()> {
        let m = self.len_basis();
        let mut parent_count = vec![0usize; m];
        let mut child_count = vec![0usize; m];
        for f in &self.families {
            if f.parents[0] == f.parents[1] || f.children[0] == f.children[1] {
                return Err(Error::Internal("degenerate family".into()));
            }
            for p in f.parents {
                if self.generation_of(p) != f.gen {
                    return Err(Error::Internal("parent outside its generation".into()));
                }
                parent_count[p] += 1;
            }
            for c in f.children {
                if self.generation_of(c) != f.gen + 1 {
                    return Err(Error::Internal("child outside its generation".into()));
                }
                child_count[c] += 1;
            }
        }
        for i in 0..m {
            let g = self.generation_of(i);
            let want_parent = usize::from(g <= self.n_gens - 1);
            let want_child = usize::from(g >= 2);
            if parent_count[i] != want_parent {
                return Err(Error::Internal(format!("index {i} is parent {} times", parent_count[i])));
            }
            if child_count[i] != want_child {
                return Err(Error::Internal(format!("index {i} is child {} times", child_count[i])));
            }
        }
        // sibling != spouse on interior generations
        for i in 0..m {
            let g = self.generation_of(i);
            if (2..self.n_gens).contains(&g) {
                if let (Some(sib), Some(sp)) = (self.sibling(i), self.spouse(i)) {
                    if sib == sp {
                        return Err(Error::Internal(format!("sibling equals spouse at index {i}")));
                    }
                }
            }
        }
        // echelon: pivots strictly increasing
        for w in self.families.windows(2) {
            if w[0].pivot() >= w[1].pivot() {
                return Err(Error::Internal("family pivots not strictly increasing".into()));
            }
        }
        Ok(())
    }
}

/// Derive the family system of the prototype: for each generation `g` and each
/// choice of the fixed symbols, the four tuples obtained by varying slot `g`
/// over the full alphabet form one family (parents from S1, children from S2).
pub fn genealogical_tree(proto: &PrototypeEmbedding) -> Result<GenealogicalTree> {
    let n_gens = proto.n_gens;
    let mut families = Vec::with_capacity((n_gens - 1) << (n_gens.saturating_sub(2)));
    for gen in 1..n_gens {
        let var_slot = gen - 1; // 0-based slot varied by generation-`gen` families
        let mut fams: Vec<Family> = Vec::new();
        let mut seen = HashSet::new();
        for idx in proto.generation_range(gen) {
            let t = &proto.elements[idx];
            let mut key = t.clone();
            key[var_slot] = Symbol::One; // canonical representative
            if !seen.insert(key.clone()) {
                continue;
            }
            let with = |sym: Symbol| -> Result<usize> {
                let mut u = t.clone();
                u[var_slot] = sym;
                proto
                    .index_of(&u)
                    .ok_or_else(|| Error::Internal("family member not in prototype".into()))
            };
            let p1 = with(Symbol::One)?;
            let p2 = with(Symbol::I)?;
            let c1 = with(Symbol::Zero)?;
            let c2 = with(Symbol::OnePlusI)?;
            let children = if c1 < c2 { [c1, c2] } else { [c2, c1] };
            fams.push(Family { gen, parents: [p1, p2], children });
        }
        fams.sort_by_key(|f| f.pivot());
        families.extend(fams);
    }

    let m = proto.len();
    let mut family_as_parent = vec![None; m];
    let mut family_as_child = vec![None; m];
    for (fi, f) in families.iter().enumerate() {
        for p in f.parents {
            family_as_parent[p] = Some(fi);
        }
        for c in f.children {
            family_as_child[c] = Some(fi);
        }
    }
    let tree = GenealogicalTree { n_gens, families, family_as_parent, family_as_child };
    tree.verify_structure()?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prototype::build_prototype;

    fn tree_for(n: usize) -> GenealogicalTree {
        genealogical_tree(&build_prototype(n).unwrap()).unwrap()
    }

    #[test]
    fn family_counts() {
        assert_eq!(tree_for(2).families.len(), 1);
        assert_eq!(tree_for(3).families.len(), 4);
        assert_eq!(tree_for(4).families.len(), 12);
    }

    #[test]
    fn n3_every_gen2_index_is_parent_and_child_once() {
        let t = tree_for(3);
        for i in t.generation_range(2) {
            assert!(t.family_as_parent[i].is_some());
            assert!(t.family_as_child[i].is_some());
        }
    }

    #[test]
    fn span_decompose_units_and_combos() {
        let t = tree_for(4);
        for (fi, f) in t.families.iter().enumerate() {
            let c = t.span_decompose(&f.vector()).unwrap();
            for (j, &cj) in c.iter().enumerate() {
                assert_eq!(cj, i64::from(j == fi));
            }
        }
        // f1 + 2 f2
        let v = t.families[0].vector().add(&t.families[1].vector().scaled(2));
        let c = t.span_decompose(&v).unwrap();
        assert_eq!(c[0], 1);
        assert_eq!(c[1], 2);
        assert!(c[2..].iter().all(|&x| x == 0));
    }

    #[test]
    fn support_two_never_in_span() {
        let t = tree_for(3);
        for i in 0..6 {
            for j in (i + 1)..12 {
                let v = ResVec::from_entries([(i, 1), (j, -1)]);
                assert!(!t.in_span(&v), "e{i} - e{j} wrongly in span");
            }
        }
    }

    #[test]
    fn symmetry_maps_preserve_families() {
        let proto = build_prototype(4).unwrap();
        let t = genealogical_tree(&proto).unwrap();
        let gs = t.generation_size();
        for g in 1..=4usize {
            let r = t.generation_range(g);
            let (a, b) = (r.start, r.start + gs - 1);
            let perm = t.symmetry_map(&proto, a, b).unwrap();
            assert_eq!(perm[a], b);
            assert!(t.permutation_preserves_tree(&perm));
        }
    }
}
