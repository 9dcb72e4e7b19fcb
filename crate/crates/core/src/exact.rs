//! Exact integer/rational plane geometry and certified root intervals.
//!
//! Everything in the combinatorial half of this crate runs on `BigInt`
//! lattice points. Fractional powers (Sobolev weights `|k|^{2s}` with
//! rational `s`) are evaluated as shrinking rational intervals so that
//! comparisons against thresholds can be decided exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Neg, Sub};

pub type Int = BigInt;
pub type Rat = BigRational;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

pub fn rat(v: i64) -> Rat {
    Rat::from_integer(int(v))
}

pub fn rat_frac(num: i64, den: i64) -> Rat {
    Rat::new(int(num), int(den))
}

/// Exact point of the integer lattice Z^2.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ZVec2 {
    pub x: Int,
    pub y: Int,
}

impl fmt::Debug for ZVec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl ZVec2 {
    pub fn new(x: impl Into<Int>, y: impl Into<Int>) -> Self {
        ZVec2 { x: x.into(), y: y.into() }
    }

    pub fn zero() -> Self {
        ZVec2 { x: Int::zero(), y: Int::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn dot(&self, other: &ZVec2) -> Int {
        &self.x * &other.x + &self.y * &other.y
    }

    pub fn norm2(&self) -> Int {
        self.dot(self)
    }

    pub fn scaled(&self, q: &Int) -> ZVec2 {
        ZVec2 { x: &self.x * q, y: &self.y * q }
    }

    /// 90-degree rotation `O = [[0,1],[-1,0]]` applied to `self`.
    pub fn rot90(&self) -> ZVec2 {
        ZVec2 { x: self.y.clone(), y: -self.x.clone() }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (big_to_f64(&self.x), big_to_f64(&self.y))
    }
}

impl Add for &ZVec2 {
    type Output = ZVec2;
    fn add(self, rhs: &ZVec2) -> ZVec2 {
        ZVec2 { x: &self.x + &rhs.x, y: &self.y + &rhs.y }
    }
}

impl Sub for &ZVec2 {
    type Output = ZVec2;
    fn sub(self, rhs: &ZVec2) -> ZVec2 {
        ZVec2 { x: &self.x - &rhs.x, y: &self.y - &rhs.y }
    }
}

impl Neg for &ZVec2 {
    type Output = ZVec2;
    fn neg(self) -> ZVec2 {
        ZVec2 { x: -&self.x, y: -&self.y }
    }
}

/// Exact point of Q^2; used transiently while children sit on circles with
/// rational coordinates before denominators are cleared.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct QVec2 {
    pub x: Rat,
    pub y: Rat,
}

impl QVec2 {
    pub fn from_z(p: &ZVec2) -> Self {
        QVec2 {
            x: Rat::from_integer(p.x.clone()),
            y: Rat::from_integer(p.y.clone()),
        }
    }

    pub fn add(&self, o: &QVec2) -> QVec2 {
        QVec2 { x: &self.x + &o.x, y: &self.y + &o.y }
    }

    pub fn sub(&self, o: &QVec2) -> QVec2 {
        QVec2 { x: &self.x - &o.x, y: &self.y - &o.y }
    }

    pub fn dot(&self, o: &QVec2) -> Rat {
        &self.x * &o.x + &self.y * &o.y
    }

    pub fn norm2(&self) -> Rat {
        self.dot(self)
    }

    pub fn scaled(&self, q: &Rat) -> QVec2 {
        QVec2 { x: &self.x * q, y: &self.y * q }
    }

    /// Least common multiple of the two coordinate denominators.
    pub fn denom_lcm(&self) -> Int {
        self.x.denom().lcm(self.y.denom())
    }

    /// Multiply by an integer and demand the result is integral.
    pub fn scale_to_z(&self, q: &Int) -> Option<ZVec2> {
        let x = &self.x * Rat::from_integer(q.clone());
        let y = &self.y * Rat::from_integer(q.clone());
        if x.is_integer() && y.is_integer() {
            Some(ZVec2 { x: x.to_integer(), y: y.to_integer() })
        } else {
            None
        }
    }
}

/// Lossy conversion for reporting; large integers saturate gracefully through
/// a mantissa/exponent split instead of overflowing to infinity one limb early.
pub fn big_to_f64(v: &Int) -> f64 {
    v.to_f64().unwrap_or(if v.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

pub fn rat_to_f64(v: &Rat) -> f64 {
    // num's BigRational::to_f64 handles magnitude splitting.
    v.to_f64().unwrap_or_else(|| {
        let bits = v.numer().bits() as i64 - v.denom().bits() as i64;
        if bits > 0 {
            if v.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY }
        } else {
            0.0
        }
    })
}

/// Exact conversion of a finite f64 into a rational.
pub fn f64_to_rat(v: f64) -> Rat {
    assert!(v.is_finite(), "cannot convert non-finite float to rational");
    Rat::from_float(v).expect("finite float")
}

/// A closed rational interval `[lo, hi]` certified to contain an exact value.
#[derive(Clone, Debug, PartialEq)]
pub struct RatInterval {
    pub lo: Rat,
    pub hi: Rat,
}

impl RatInterval {
    pub fn exact(v: Rat) -> Self {
        RatInterval { lo: v.clone(), hi: v }
    }

    pub fn add(&self, o: &RatInterval) -> RatInterval {
        RatInterval { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    /// Multiplication assuming both intervals are non-negative.
    pub fn mul_nonneg(&self, o: &RatInterval) -> RatInterval {
        debug_assert!(!self.lo.is_negative() && !o.lo.is_negative());
        RatInterval { lo: &self.lo * &o.lo, hi: &self.hi * &o.hi }
    }

    /// Division assuming both intervals are positive.
    pub fn div_pos(&self, o: &RatInterval) -> RatInterval {
        assert!(o.lo.is_positive(), "division by interval touching zero");
        RatInterval { lo: &self.lo / &o.hi, hi: &self.hi / &o.lo }
    }

    pub fn scale(&self, c: &Rat) -> RatInterval {
        if c.is_negative() {
            RatInterval { lo: &self.hi * c, hi: &self.lo * c }
        } else {
            RatInterval { lo: &self.lo * c, hi: &self.hi * c }
        }
    }

    /// Strict comparison against another interval: `Some(true)` if self > o
    /// certainly, `Some(false)` if self < o certainly, `None` if undecided.
    pub fn gt(&self, o: &RatInterval) -> Option<bool> {
        if self.lo > o.hi {
            Some(true)
        } else if self.hi < o.lo {
            Some(false)
        } else {
            None
        }
    }

    pub fn midpoint_f64(&self) -> f64 {
        rat_to_f64(&((&self.lo + &self.hi) / rat(2)))
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }
}

/// Floor of the integer square root.
pub fn isqrt(v: &Int) -> Int {
    assert!(!v.is_negative(), "isqrt of negative");
    v.sqrt()
}

/// Floor of the integer n-th root.
pub fn inth_root(v: &Int, n: u32) -> Int {
    assert!(!v.is_negative());
    v.nth_root(n)
}

/// Certified interval for `base^(num/den)` with `base >= 0` integer, `den >= 1`,
/// computed with `prec_bits` extra binary digits.
///
/// The value is `(base^num)^(1/den)`; `num` may be any non-negative integer.
pub fn int_pow_frac(base: &Int, num: u32, den: u32, prec_bits: u32) -> RatInterval {
    assert!(den >= 1);
    assert!(!base.is_negative());
    if base.is_zero() {
        return RatInterval::exact(Rat::zero());
    }
    let p = base.pow(num);
    if den == 1 {
        return RatInterval::exact(Rat::from_integer(p));
    }
    // root of p * 2^(den*prec_bits), floor-rooted, then divided by 2^prec_bits.
    let shifted = &p << (den as u64 * prec_bits as u64);
    let r = inth_root(&shifted, den);
    let denom = Int::one() << prec_bits;
    let lo = Rat::new(r.clone(), denom.clone());
    let hi = Rat::new(r + Int::one(), denom);
    RatInterval { lo, hi }
}

/// Certified interval for `v^s` where `v >= 0` is an exact integer and
/// `s = s_num/s_den > 0` is rational.
pub fn int_pow_rat(v: &Int, s_num: u32, s_den: u32, prec_bits: u32) -> RatInterval {
    int_pow_frac(v, s_num, s_den, prec_bits)
}

/// Certified interval for `2^e` with rational exponent `e = num/den >= 0`.
pub fn two_pow_rat(num: u32, den: u32, prec_bits: u32) -> RatInterval {
    int_pow_frac(&int(2), num, den, prec_bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rot90_is_orthogonal() {
        let v = ZVec2::new(3, -7);
        let r = v.rot90();
        assert!(v.dot(&r).is_zero());
        assert_eq!(v.norm2(), r.norm2());
    }

    #[test]
    fn isqrt_exact_and_floor() {
        assert_eq!(isqrt(&int(49)), int(7));
        assert_eq!(isqrt(&int(50)), int(7));
        assert_eq!(inth_root(&int(27), 3), int(3));
        assert_eq!(inth_root(&int(26), 3), int(2));
    }

    #[test]
    fn pow_frac_brackets_value() {
        // 5^(3/2) = 11.18033988749895...
        let iv = int_pow_frac(&int(5), 3, 2, 64);
        let mid = iv.midpoint_f64();
        assert!((mid - 5f64.powf(1.5)).abs() < 1e-12);
        assert!(iv.lo < iv.hi);
        assert!(rat_to_f64(&iv.width()) < 1e-15);
    }

    #[test]
    fn interval_comparison_decides() {
        let a = int_pow_frac(&int(2), 1, 2, 80); // sqrt(2)
        let b = RatInterval::exact(rat_frac(141421356, 100000000));
        assert_eq!(a.gt(&b), Some(true));
        let c = RatInterval::exact(rat_frac(141421357, 100000000));
        assert_eq!(a.gt(&c), Some(false));
    }

    #[test]
    fn qvec_denominator_clearing() {
        let p = QVec2 { x: rat_frac(3, 4), y: rat_frac(5, 6) };
        let l = p.denom_lcm();
        assert_eq!(l, int(12));
        let z = p.scale_to_z(&l).unwrap();
        assert_eq!(z, ZVec2::new(9, 10));
    }
}
