//! Exact derivation of the restricted Hamiltonian over the symmetric subspace
//! (equal amplitudes within each generation).
//!
//! The coefficient of the profile pair `(a, b)` is
//!
//! `C_(a,b) = sum over (alpha, beta) in N^m with alpha - beta in the family
//!  span, per-generation sums matching (a, b), of binom(d, alpha) binom(d,
//!  beta)`,
//!
//! and the restricted Hamiltonian is `(1/n) sum C_(a,b) b^a conj(b)^b`.
//! The sum over `(alpha, beta)` is organized per span element
//! `lambda = alpha - beta`; the diagonal padding `gamma` is aggregated per
//! generation without enumerating slots, which keeps the computation
//! polynomial in the generation size.

use crate::error::{Error, Result};
use crate::exact::{rat, Rat};
use crate::prototype::build_prototype;
use crate::resvec::ResVec;
use crate::toy::poly::{compositions, factorial, multinomial, Pattern, PolyInN, ToyPoly, ToyPolyInN};
use crate::tree::{genealogical_tree, GenealogicalTree};
use crate::verify::enumerate_span_bounded;
use num_traits::{One, Zero};

/// Budget guard for the derivation (pattern-aggregated path).
#[derive(Clone, Debug)]
pub struct DeriveBudget {
    pub max_span_elements: usize,
    pub max_work_units: u64,
}

impl Default for DeriveBudget {
    fn default() -> Self {
        DeriveBudget { max_span_elements: 2_000_000, max_work_units: 500_000_000 }
    }
}

/// Partitions of `g` into positive non-increasing parts.
fn partitions(g: u8) -> Vec<Vec<u8>> {
    fn rec(rem: u8, max: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rem.min(max)).rev() {
            cur.push(p);
            rec(rem - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(g, g, &mut Vec::new(), &mut out);
    out
}

/// Sum over placements of extra units on `free` identical slots:
/// `sum over multisets {p_1..p_r} of positive parts with sum g` of
/// `falling(free, r) / prod(mult!) * prod 1/(p_j!)^2`.
fn free_slot_sum(g: u8, free: i64) -> Rat {
    let mut acc = Rat::zero();
    for part in partitions(g) {
        let r = part.len() as i64;
        if r > free {
            continue;
        }
        // falling factorial free * (free-1) * ... * (free-r+1)
        let mut ways = Rat::one();
        for j in 0..r {
            ways *= rat(free - j);
        }
        // divide by multiplicities of equal parts
        let mut run = 1u32;
        for w in part.windows(2) {
            if w[0] == w[1] {
                run += 1;
            } else {
                ways /= factorial(run);
                run = 1;
            }
        }
        ways /= factorial(run);
        for &p in &part {
            let f = factorial(p as u32);
            ways /= &f * &f;
        }
        acc += ways;
    }
    acc
}

/// `T(g)`: distribution sum for one generation with fixed offset slots
/// `fixed = [(a_s, b_s)]` and `free` unconstrained slots:
/// `sum over gamma >= 0 with |gamma| = g` of
/// `prod_s 1/((gamma_s + a_s)! (gamma_s + b_s)!)` aggregated over slots.
fn generation_sum(fixed: &[(u8, u8)], free: i64, g: u8) -> Rat {
    fn rec(fixed: &[(u8, u8)], free: i64, rem: u8, idx: usize, weight: Rat, acc: &mut Rat) {
        if idx == fixed.len() {
            *acc += weight * free_slot_sum(rem, free);
            return;
        }
        let (a, b) = fixed[idx];
        for u in 0..=rem {
            let w = &weight
                / (factorial(a as u32 + u as u32) * factorial(b as u32 + u as u32));
            rec(fixed, free, rem - u, idx + 1, w, acc);
        }
    }
    let mut acc = Rat::zero();
    rec(fixed, free, g, 0, Rat::one(), &mut acc);
    acc
}

/// Per-generation fixed-slot offsets of a span element.
fn lambda_generation_offsets(
    lambda: &ResVec,
    tree: &GenealogicalTree,
) -> (Vec<Vec<(u8, u8)>>, Vec<u8>, Vec<u8>) {
    let n_gens = tree.n_gens;
    let mut fixed: Vec<Vec<(u8, u8)>> = vec![Vec::new(); n_gens];
    let mut pos_profile = vec![0u8; n_gens];
    let mut neg_profile = vec![0u8; n_gens];
    for (i, c) in lambda.iter() {
        let g = tree.generation_of(i) - 1;
        if c > 0 {
            fixed[g].push((c as u8, 0));
            pos_profile[g] += c as u8;
        } else {
            fixed[g].push((0, (-c) as u8));
            neg_profile[g] += (-c) as u8;
        }
    }
    (fixed, pos_profile, neg_profile)
}

/// Exact restricted Hamiltonian `h = (1/n) sum C_(a,b) b^a conj(b)^b`
/// for the tree at its concrete generation size.
pub fn derive_toy(tree: &GenealogicalTree, d: u32, budget: &DeriveBudget) -> Result<ToyPoly> {
    let n_gens = tree.n_gens;
    let n = 1i64 << (n_gens - 1);
    let mut out = ToyPoly::new(n_gens, d);

    let mut lambdas = enumerate_span_bounded(tree, 2 * d as i64);
    lambdas.push(ResVec::new()); // the diagonal lambda = 0
    if lambdas.len() > budget.max_span_elements {
        return Err(Error::Resource(format!(
            "span enumeration produced {} elements, budget {}",
            lambdas.len(),
            budget.max_span_elements
        )));
    }

    let d8 = d as u8;
    let df2 = {
        let f = factorial(d);
        &f * &f
    };
    let mut work: u64 = 0;
    for lambda in &lambdas {
        let (pos, _neg) = lambda.split_signs();
        let lp = pos.l1();
        if lp > d as i64 {
            continue; // |lambda_+| must fit inside degree d
        }
        let (fixed, pos_profile, neg_profile) = lambda_generation_offsets(lambda, tree);
        let g_total = d8 - lp as u8;
        for comp in compositions(g_total, n_gens) {
            work += 1;
            if work > budget.max_work_units {
                return Err(Error::Resource("derivation work budget exceeded".into()));
            }
            let mut weight = df2.clone();
            for gi in 0..n_gens {
                let free = n - fixed[gi].len() as i64;
                weight *= generation_sum(&fixed[gi], free, comp[gi]);
                if weight.is_zero() {
                    break;
                }
            }
            if weight.is_zero() {
                continue;
            }
            let mut a = comp.clone();
            let mut b = comp.clone();
            for gi in 0..n_gens {
                a[gi] += pos_profile[gi];
                b[gi] += neg_profile[gi];
            }
            out.add_term(Pattern::new(a, b), weight);
        }
    }
    let out = out.scale(&Rat::new(1.into(), n.into()));
    debug_assert!(out.is_real());
    Ok(out)
}

/// Brute-force oracle: enumerate every pair `(alpha, beta)` of degree-`d`
/// multi-indices over all `m` slots and test span membership directly.
/// Exponential in `m`; only for small trees.
pub fn brute_force_toy(tree: &GenealogicalTree, d: u32) -> Result<ToyPoly> {
    let m = tree.len_basis();
    let n_gens = tree.n_gens;
    let n = 1i64 << (n_gens - 1);
    if m > 16 || d > 4 {
        return Err(Error::Resource(format!("brute force infeasible at m={m}, d={d}")));
    }
    let multis = degree_multiindices(m, d as u8);
    let mut out = ToyPoly::new(n_gens, d);
    let gen_size = 1usize << (n_gens - 1);
    for alpha in &multis {
        let ca = multinomial_slots(d, alpha);
        for beta in &multis {
            let mut diff = ResVec::new();
            for i in 0..m {
                diff.add_entry(i, alpha[i] as i64 - beta[i] as i64);
            }
            if !tree.in_span(&diff) {
                continue;
            }
            let cb = multinomial_slots(d, beta);
            let mut a = vec![0u8; n_gens];
            let mut b = vec![0u8; n_gens];
            for i in 0..m {
                a[i / gen_size] += alpha[i];
                b[i / gen_size] += beta[i];
            }
            out.add_term(Pattern::new(a, b), &ca * &cb);
        }
    }
    Ok(out.scale(&Rat::new(1.into(), n.into())))
}

fn multinomial_slots(d: u32, slots: &[u8]) -> Rat {
    let mut v = factorial(d);
    for &s in slots {
        if s > 1 {
            v /= factorial(s as u32);
        }
    }
    v
}

/// All multi-indices over `m` slots with total degree `d`.
pub fn degree_multiindices(m: usize, d: u8) -> Vec<Vec<u8>> {
    compositions(d, m)
}

/// Derive the coefficients `C_(a,b)` as exact polynomials in the generation
/// size `n`, for patterns over a window of `window_gens` generations.
///
/// Sampling runs at `window_gens..window_gens + d + 2` generations; the extra
/// sample verifies that the interpolant has degree at most `d` (the structural
/// degree bound), which certifies the reconstruction.
pub fn derive_in_n(window_gens: usize, d: u32, budget: &DeriveBudget) -> Result<ToyPolyInN> {
    let samples = d as usize + 2;
    let mut per_pattern: std::collections::BTreeMap<Pattern, Vec<(i64, Rat)>> =
        std::collections::BTreeMap::new();
    let mut ns = Vec::new();
    for k in 0..samples {
        let n_gens = window_gens.max(2) + k;
        let n = 1i64 << (n_gens - 1);
        ns.push(n);
        let proto = build_prototype(n_gens)?;
        let tree = genealogical_tree(&proto)?;
        let h = derive_toy(&tree, d, budget)?;
        for (p, c) in &h.terms {
            if let Some(win) = p.resized(window_gens) {
                // store C = n * h-coefficient
                per_pattern
                    .entry(win)
                    .or_default()
                    .push((n, c * rat(n)));
            }
        }
    }
    let mut out = ToyPolyInN { n_gens: window_gens, d, terms: Default::default() };
    for (p, mut pts) in per_pattern {
        // patterns absent at some sample have coefficient zero there
        for &n in &ns {
            if !pts.iter().any(|&(x, _)| x == n) {
                pts.push((n, Rat::zero()));
            }
        }
        pts.sort_by_key(|&(x, _)| x);
        let poly = PolyInN::interpolate(&pts);
        if poly.degree().map_or(false, |deg| deg > d as usize) {
            return Err(Error::Internal(format!(
                "coefficient of pattern {p:?} has degree {} > d = {d} in n",
                poly.degree().unwrap()
            )));
        }
        out.terms.insert(p, poly);
    }
    Ok(out)
}

/// The closed leading orders of `C_(a,b)` as predicted for the two top powers
/// of `n`: coefficient of `n^d` and of `n^(d-1)`. Patterns over `window_gens`
/// generations.
pub fn expected_leading_coefficients(
    window_gens: usize,
    d: u32,
) -> std::collections::BTreeMap<Pattern, (Rat, Rat)> {
    use std::collections::BTreeMap;
    let mut top: BTreeMap<Pattern, Rat> = BTreeMap::new();
    let mut second: BTreeMap<Pattern, Rat> = BTreeMap::new();

    // n^d: d! * J^d (diagonal multinomial profiles)
    for gamma in compositions(d as u8, window_gens) {
        let c = factorial(d) * multinomial(d, &gamma);
        top.insert(Pattern::new(gamma.clone(), gamma), c);
    }
    // n^(d-1): d! d (d-1) * J^(d-2) * ( -1/4 sum |b_i|^4 + sum Re(b_i^2 conj(b_{i+1})^2) )
    let pref = factorial(d) * rat(d as i64) * rat(d as i64 - 1);
    for gamma in compositions(d as u8 - 2, window_gens) {
        let mc = multinomial(d - 2, &gamma);
        for i in 0..window_gens {
            let mut e = gamma.clone();
            e[i] += 2;
            let p = Pattern::new(e.clone(), e);
            *second.entry(p).or_insert_with(Rat::zero) +=
                -&pref * &mc * Rat::new(1.into(), 4.into());
        }
        for i in 0..window_gens.saturating_sub(1) {
            let mut a = gamma.clone();
            let mut b = gamma.clone();
            a[i] += 2;
            b[i + 1] += 2;
            *second.entry(Pattern::new(a.clone(), b.clone())).or_insert_with(Rat::zero) +=
                &pref * &mc * Rat::new(1.into(), 2.into());
            *second.entry(Pattern::new(b, a)).or_insert_with(Rat::zero) +=
                &pref * &mc * Rat::new(1.into(), 2.into());
        }
    }

    let mut out = std::collections::BTreeMap::new();
    for (p, c) in top {
        out.insert(p, (c, Rat::zero()));
    }
    for (p, c) in second {
        out.entry(p.clone())
            .and_modify(|e: &mut (Rat, Rat)| e.1 = c.clone())
            .or_insert((Rat::zero(), c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::poly::leading_order_poly;

    fn tree_for(n: usize) -> GenealogicalTree {
        genealogical_tree(&build_prototype(n).unwrap()).unwrap()
    }

    #[test]
    fn free_slot_sums() {
        // g=2, M slots: M/4 (one slot gets 2: 1/(2!)^2) + C(M,2) (two slots get 1 each)
        let m = 5i64;
        let expect = rat(m) * Rat::new(1.into(), 4.into()) + rat(m * (m - 1) / 2);
        assert_eq!(free_slot_sum(2, m), expect);
        assert_eq!(free_slot_sum(0, m), rat(1));
        assert_eq!(free_slot_sum(1, 0), rat(0));
    }

    #[test]
    fn derive_matches_brute_force_n2_d2() {
        let tree = tree_for(2);
        let fast = derive_toy(&tree, 2, &DeriveBudget::default()).unwrap();
        let brute = brute_force_toy(&tree, 2).unwrap();
        assert_eq!(fast, brute);
    }

    #[test]
    fn derive_matches_brute_force_n2_d3() {
        let tree = tree_for(2);
        let fast = derive_toy(&tree, 3, &DeriveBudget::default()).unwrap();
        let brute = brute_force_toy(&tree, 3).unwrap();
        assert_eq!(fast, brute);
    }

    #[test]
    fn derive_matches_brute_force_n3_d2() {
        let tree = tree_for(3);
        let fast = derive_toy(&tree, 2, &DeriveBudget::default()).unwrap();
        let brute = brute_force_toy(&tree, 2).unwrap();
        assert_eq!(fast, brute);
    }

    #[test]
    fn d2_has_no_tail_beyond_leading_orders() {
        // at d = 2 the closed leading orders are the whole Hamiltonian
        for n_gens in [2usize, 3] {
            let tree = tree_for(n_gens);
            let h = derive_toy(&tree, 2, &DeriveBudget::default()).unwrap();
            let lead = leading_order_poly(n_gens, 2, 1i64 << (n_gens - 1));
            assert_eq!(h, lead, "N={n_gens}");
        }
    }

    #[test]
    fn structural_properties_hold() {
        let tree = tree_for(3);
        for d in [2u32, 3] {
            let h = derive_toy(&tree, d, &DeriveBudget::default()).unwrap();
            assert!(h.is_real());
            assert!(h.is_gauge_preserving());
            assert!(h.has_even_generation_degree());
            for j in 1..3 {
                assert!(h.restriction_exchange_symmetric(j), "d={d} j={j}");
            }
        }
    }

    #[test]
    fn polynomial_in_n_leading_orders_d2() {
        let c = derive_in_n(2, 2, &DeriveBudget::default()).unwrap();
        let expected = expected_leading_coefficients(2, 2);
        for (p, poly) in &c.terms {
            let (top, second) = expected.get(p).cloned().unwrap_or((Rat::zero(), Rat::zero()));
            assert_eq!(poly.coeff(2), top, "n^2 coefficient at {p:?}");
            assert_eq!(poly.coeff(1), second, "n^1 coefficient at {p:?}");
        }
        // and every expected pattern is present
        for (p, (top, second)) in &expected {
            let poly = c.terms.get(p).cloned().unwrap_or_default();
            assert_eq!(&poly.coeff(2), top);
            assert_eq!(&poly.coeff(1), second);
        }
    }
}
