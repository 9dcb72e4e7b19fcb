//! Exact polynomials over the generation amplitudes `(b, conj b)`.
//!
//! A term is indexed by its generation profile pair `(a, b)`: the monomial
//! `prod_i b_i^{a_i} conj(b_i)^{b_i}` with `|a| = |b| = d`. Coefficients are
//! exact rationals. The restricted Hamiltonian `h = n^{-1} H|_{U_S}` of an
//! acceptable set is such a polynomial; so are the closed leading orders.

use crate::error::{Error, Result};
use crate::exact::{int, rat, rat_frac, rat_to_f64, Rat};
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub type C64 = Complex64;

/// Generation-profile exponent pair; `a[i]`/`b[i]` are the powers of `b_i`
/// and `conj(b_i)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub struct Pattern {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
}

impl Pattern {
    pub fn new(a: Vec<u8>, b: Vec<u8>) -> Self {
        Pattern { a, b }
    }

    pub fn transposed(&self) -> Pattern {
        Pattern { a: self.b.clone(), b: self.a.clone() }
    }

    pub fn degree(&self) -> u32 {
        self.a.iter().map(|&x| x as u32).sum()
    }

    /// Largest generation index (1-based) with a nonzero exponent.
    pub fn max_generation(&self) -> usize {
        let top = |v: &[u8]| v.iter().rposition(|&x| x != 0).map_or(0, |i| i + 1);
        top(&self.a).max(top(&self.b))
    }

    /// Zero-pad or truncate to `n` generations (truncation requires zeros).
    pub fn resized(&self, n: usize) -> Option<Pattern> {
        if self.max_generation() > n {
            return None;
        }
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        a.resize(n, 0);
        b.resize(n, 0);
        Some(Pattern { a, b })
    }
}

/// Exact polynomial with rational coefficients over the patterns.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ToyPoly {
    pub n_gens: usize,
    pub d: u32,
    pub terms: BTreeMap<Pattern, Rat>,
}

impl ToyPoly {
    pub fn new(n_gens: usize, d: u32) -> Self {
        ToyPoly { n_gens, d, terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, p: Pattern, c: Rat) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(p).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            // avoid re-borrow dance: collect zero keys lazily in normalize()
        }
    }

    pub fn normalize(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn scale(&self, k: &Rat) -> ToyPoly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= k;
        }
        out.normalize();
        out
    }

    pub fn sub(&self, other: &ToyPoly) -> ToyPoly {
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(p.clone(), -c.clone());
        }
        out.normalize();
        out
    }

    pub fn add(&self, other: &ToyPoly) -> ToyPoly {
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(p.clone(), c.clone());
        }
        out.normalize();
        out
    }

    /// Reality: the coefficient of `(a,b)` equals that of `(b,a)`.
    pub fn is_real(&self) -> bool {
        self.terms.iter().all(|(p, c)| {
            self.terms.get(&p.transposed()).map_or(false, |c2| c2 == c)
        })
    }

    /// Gauge preservation: every term has `|a| = |b| = d`.
    pub fn is_gauge_preserving(&self) -> bool {
        self.terms.keys().all(|p| {
            p.degree() == self.d && p.transposed().degree() == self.d
        })
    }

    /// Per-generation parity: `a_i + b_i` even for every term and index.
    pub fn has_even_generation_degree(&self) -> bool {
        self.terms
            .keys()
            .all(|p| p.a.iter().zip(&p.b).all(|(&x, &y)| (x + y) % 2 == 0))
    }

    /// Exchange symmetry of the restriction to generations (j, j+1) under
    /// swapping the two generations (checked on the full polynomial
    /// restricted to patterns supported there).
    pub fn restriction_exchange_symmetric(&self, j: usize) -> bool {
        let swap = |p: &Pattern| -> Pattern {
            let mut a = p.a.clone();
            let mut b = p.b.clone();
            a.swap(j - 1, j);
            b.swap(j - 1, j);
            Pattern { a, b }
        };
        self.terms.iter().all(|(p, c)| {
            let supported = p
                .a
                .iter()
                .zip(&p.b)
                .enumerate()
                .all(|(i, (&x, &y))| (i == j - 1 || i == j) || (x == 0 && y == 0));
            if !supported {
                return true;
            }
            self.terms.get(&swap(p)).map_or(false, |c2| c2 == c)
        })
    }

    /// Restrict to patterns supported on generations `gens` (1-based, set).
    pub fn restricted_to(&self, gens: &[usize]) -> ToyPoly {
        let mut out = ToyPoly::new(self.n_gens, self.d);
        'outer: for (p, c) in &self.terms {
            for i in 0..self.n_gens {
                if !gens.contains(&(i + 1)) && (p.a[i] != 0 || p.b[i] != 0) {
                    continue 'outer;
                }
            }
            out.add_term(p.clone(), c.clone());
        }
        out
    }

    /// Evaluate at a complex state (mostly for conservation monitoring).
    pub fn eval(&self, b: &[C64]) -> C64 {
        let pows = pow_table(b, self.d as usize + 1);
        let mut acc = C64::default();
        for (p, c) in &self.terms {
            let mut m = C64::new(rat_to_f64(c), 0.0);
            for i in 0..self.n_gens {
                m *= pows[i][p.a[i] as usize];
                m *= pows[i][p.b[i] as usize].conj();
            }
            acc += m;
        }
        acc
    }

    /// Compile the Hamiltonian vector field `db_i/dt = 2i d h / d conj(b_i)`
    /// into per-component term lists with f64 coefficients.
    pub fn compile_field(&self) -> CompiledField {
        let n = self.n_gens;
        let mut comps: Vec<Vec<FieldTerm>> = vec![Vec::new(); n];
        for (p, c) in &self.terms {
            for i in 0..n {
                let bi = p.b[i];
                if bi == 0 {
                    continue;
                }
                let mut db = p.b.clone();
                db[i] -= 1;
                comps[i].push(FieldTerm {
                    coef: rat_to_f64(&(c * rat(bi as i64))),
                    a: p.a.clone().into_boxed_slice(),
                    b: db.into_boxed_slice(),
                });
            }
        }
        CompiledField { n_gens: n, max_pow: self.d as usize + 1, comps }
    }
}

fn pow_table(b: &[C64], up_to: usize) -> Vec<Vec<C64>> {
    b.iter()
        .map(|&z| {
            let mut v = Vec::with_capacity(up_to + 1);
            v.push(C64::new(1.0, 0.0));
            for k in 1..=up_to {
                let prev = v[k - 1];
                v.push(prev * z);
            }
            v
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct FieldTerm {
    pub coef: f64,
    pub a: Box<[u8]>,
    pub b: Box<[u8]>,
}

/// The compiled vector field `db_i/dt = 2i * sum_t coef * b^a * conj(b)^b`.
#[derive(Clone, Debug)]
pub struct CompiledField {
    pub n_gens: usize,
    pub max_pow: usize,
    comps: Vec<Vec<FieldTerm>>,
}

impl CompiledField {
    pub fn eval(&self, b: &[C64], out: &mut [C64]) {
        let pows = pow_table(b, self.max_pow);
        let two_i = C64::new(0.0, 2.0);
        for (i, terms) in self.comps.iter().enumerate() {
            let mut acc = C64::default();
            for t in terms {
                let mut m = C64::new(t.coef, 0.0);
                for j in 0..self.n_gens {
                    if t.a[j] != 0 {
                        m *= pows[j][t.a[j] as usize];
                    }
                    if t.b[j] != 0 {
                        m *= pows[j][t.b[j] as usize].conj();
                    }
                }
                acc += m;
            }
            out[i] = two_i * acc;
        }
    }
}

/// `multinomial(d, parts) = d! / prod(parts!)` for `sum(parts) = d`.
pub fn multinomial(d: u32, parts: &[u8]) -> Rat {
    let mut v = factorial(d);
    for &p in parts {
        v /= factorial(p as u32);
    }
    v
}

pub fn factorial(k: u32) -> Rat {
    let mut v = Rat::one();
    for i in 2..=k as i64 {
        v *= rat(i);
    }
    v
}

/// Enumerate all weak compositions of `total` into `parts` slots.
pub fn compositions(total: u8, parts: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; parts];
    fn rec(total: u8, idx: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if idx + 1 == cur.len() {
            cur[idx] = total;
            out.push(cur.clone());
            return;
        }
        for v in 0..=total {
            cur[idx] = v;
            rec(total - v, idx + 1, cur, out);
        }
    }
    if parts == 0 {
        if total == 0 {
            out.push(vec![]);
        }
        return out;
    }
    rec(total, 0, &mut cur, &mut out);
    out
}

/// The closed leading orders of the restricted Hamiltonian, as an exact
/// polynomial at a concrete `n`:
///
/// `d! n^(d-1) J^d + n^(d-2) d! d (d-1) [ J^(d-2) ( -1/4 sum_i |b_i|^4
///  + sum_i Re(b_i^2 conj(b_{i+1})^2) ) ]`,  with `J = sum_i |b_i|^2`.
pub fn leading_order_poly(n_gens: usize, d: u32, n: i64) -> ToyPoly {
    let mut out = gauge_poly(n_gens, d, n);
    let pref = factorial(d) * rat(d as i64) * rat(d as i64 - 1) * pow_rat(n, d as i64 - 2);

    // -1/4 J^(d-2) sum_i |b_i|^4
    for gamma in compositions(d as u8 - 2, n_gens) {
        let mc = multinomial(d - 2, &gamma);
        for i in 0..n_gens {
            let mut e = gamma.clone();
            e[i] += 2;
            let pat = Pattern::new(e.clone(), e);
            out.add_term(pat, -&pref * &mc * rat_frac(1, 4));
        }
    }
    // J^(d-2) sum_i Re(b_i^2 conj(b_{i+1})^2); Re z = (z + conj z)/2
    for gamma in compositions(d as u8 - 2, n_gens) {
        let mc = multinomial(d - 2, &gamma);
        for i in 0..n_gens.saturating_sub(1) {
            let mut a = gamma.clone();
            let mut b = gamma.clone();
            a[i] += 2;
            b[i + 1] += 2;
            out.add_term(Pattern::new(a.clone(), b.clone()), &pref * &mc * rat_frac(1, 2));
            out.add_term(Pattern::new(b, a), &pref * &mc * rat_frac(1, 2));
        }
    }
    out.normalize();
    out
}

/// The removable gauge part `d! n^(d-1) J^d` as an exact polynomial.
pub fn gauge_poly(n_gens: usize, d: u32, n: i64) -> ToyPoly {
    let mut out = ToyPoly::new(n_gens, d);
    let pref = factorial(d) * pow_rat(n, d as i64 - 1);
    for gamma in compositions(d as u8, n_gens) {
        let mc = multinomial(d, &gamma);
        out.add_term(Pattern::new(gamma.clone(), gamma), &pref * &mc);
    }
    out.normalize();
    out
}

fn pow_rat(base: i64, exp: i64) -> Rat {
    if exp >= 0 {
        Rat::from_integer(int(base).pow(exp as u32))
    } else {
        Rat::new(int(1), int(base).pow((-exp) as u32))
    }
}

/// Polynomial in `n` with exact rational coefficients (index = power of n).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyInN(pub Vec<Rat>);

impl PolyInN {
    pub fn eval(&self, n: i64) -> Rat {
        let mut acc = Rat::zero();
        let nn = rat(n);
        for c in self.0.iter().rev() {
            acc = acc * &nn + c;
        }
        acc
    }

    pub fn coeff(&self, pow: usize) -> Rat {
        self.0.get(pow).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| !c.is_zero())
    }

    /// Exact interpolation through the given (n, value) points.
    pub fn interpolate(points: &[(i64, Rat)]) -> PolyInN {
        // Newton divided differences, then expansion to monomial coefficients.
        let k = points.len();
        let xs: Vec<Rat> = points.iter().map(|&(x, _)| rat(x)).collect();
        let mut dd: Vec<Rat> = points.iter().map(|(_, v)| v.clone()).collect();
        for j in 1..k {
            for i in (j..k).rev() {
                let num = &dd[i] - &dd[i - 1];
                let den = &xs[i] - &xs[i - j];
                dd[i] = num / den;
            }
        }
        // p(x) = dd[0] + dd[1](x-x0) + dd[2](x-x0)(x-x1) + ...
        let mut coeffs = vec![Rat::zero(); k];
        let mut basis = vec![Rat::zero(); k]; // coefficients of prod_{i<j} (x - x_i)
        basis[0] = Rat::one();
        let mut blen = 1usize;
        for (j, ddj) in dd.iter().enumerate() {
            for i in 0..blen {
                coeffs[i] += ddj * &basis[i];
            }
            if j + 1 < k {
                let mut next = vec![Rat::zero(); k];
                for (i, b) in basis.iter().enumerate().take(blen) {
                    next[i + 1] += b;
                    next[i] -= &xs[j] * b;
                }
                basis = next;
                blen += 1;
            }
        }
        let mut p = PolyInN(coeffs);
        p.truncate_zeros();
        p
    }

    fn truncate_zeros(&mut self) {
        while self.0.last().map_or(false, |c| c.is_zero()) {
            self.0.pop();
        }
    }
}

/// The coefficient polynomials `C_(a,b)(n)` of the restricted Hamiltonian,
/// indexed by patterns over a fixed window of generations.
#[derive(Clone, Debug, Default)]
pub struct ToyPolyInN {
    pub n_gens: usize,
    pub d: u32,
    pub terms: BTreeMap<Pattern, PolyInN>,
}

/// Serialization of an exact polynomial: coefficients as rational strings.
#[derive(Serialize, Deserialize)]
pub struct ToyPolyJson {
    pub n: usize,
    pub d: u32,
    pub terms: Vec<ToyTermJson>,
}

#[derive(Serialize, Deserialize)]
pub struct ToyTermJson {
    pub a: Vec<u8>,
    pub b: Vec<u8>,
    pub coef: String,
}

impl ToyPoly {
    pub fn to_json(&self) -> ToyPolyJson {
        ToyPolyJson {
            n: self.n_gens,
            d: self.d,
            terms: self
                .terms
                .iter()
                .map(|(p, c)| ToyTermJson { a: p.a.clone(), b: p.b.clone(), coef: c.to_string() })
                .collect(),
        }
    }

    pub fn from_json(j: &ToyPolyJson) -> Result<ToyPoly> {
        let mut out = ToyPoly::new(j.n, j.d);
        for t in &j.terms {
            let c: Rat = t
                .coef
                .parse()
                .map_err(|e| Error::Input(format!("bad rational {:?}: {e}", t.coef)))?;
            out.add_term(Pattern::new(t.a.clone(), t.b.clone()), c);
        }
        out.normalize();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(2, 3).len(), 6); // C(4,2)
        assert_eq!(compositions(0, 2), vec![vec![0, 0]]);
        assert_eq!(compositions(3, 1), vec![vec![3]]);
    }

    #[test]
    fn multinomials() {
        assert_eq!(multinomial(2, &[1, 1]), rat(2));
        assert_eq!(multinomial(3, &[2, 1]), rat(3));
        assert_eq!(multinomial(4, &[2, 2]), rat(6));
    }

    #[test]
    fn leading_order_n2_d2_matches_hand_expansion() {
        // 2n J^2 + 4(-1/4 (|b1|^4+|b2|^4) + Re(b1^2 conj(b2)^2)) at n=2
        let h = leading_order_poly(2, 2, 2);
        let c = |a: [u8; 2], b: [u8; 2]| h.terms.get(&Pattern::new(a.to_vec(), b.to_vec())).cloned();
        // |b1|^4: 2n - 1 = 3
        assert_eq!(c([2, 0], [2, 0]), Some(rat(3)));
        // |b1|^2 |b2|^2: 2n * 2 = 8
        assert_eq!(c([1, 1], [1, 1]), Some(rat(8)));
        // b1^2 conj(b2)^2: 2
        assert_eq!(c([2, 0], [0, 2]), Some(rat(2)));
        assert!(h.is_real());
        assert!(h.is_gauge_preserving());
        assert!(h.has_even_generation_degree());
    }

    #[test]
    fn interpolation_roundtrip() {
        // p(n) = 3 - n + 2 n^3
        let p = PolyInN(vec![rat(3), rat(-1), rat(0), rat(2)]);
        let pts: Vec<(i64, Rat)> = [2i64, 4, 8, 16, 32].iter().map(|&n| (n, p.eval(n))).collect();
        let q = PolyInN::interpolate(&pts);
        assert_eq!(q, p);
    }

    #[test]
    fn field_of_single_mode_rotates_phase() {
        // leading order (gauge part removed) at d=2, N=2, pattern level:
        // h = -1/4 sum |b_i|^4 + Re(b1^2 conj(b2)^2)
        let n = 2;
        let h = leading_order_poly(2, 2, n).sub(&gauge_poly(2, 2, n));
        let f = h.scale(&rat_frac(1, 4)); // time rescale n^0 * 2! * 2 * 1 = 4
        let cf = f.compile_field();
        let b = [C64::new(0.8, 0.3), C64::default()];
        let mut out = [C64::default(); 2];
        cf.eval(&b, &mut out);
        // db1 = 2i * (-1/2 |b1|^2 b1) = -i |b1|^2 b1 ; db2 = 0
        let expect = C64::new(0.0, -1.0) * b[0].norm_sqr() * b[0];
        assert!((out[0] - expect).norm() < 1e-14);
        assert_eq!(out[1], C64::default());
    }
}
