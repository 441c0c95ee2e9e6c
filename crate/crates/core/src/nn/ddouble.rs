//! Double-double floats: an unevaluated sum `hi + lo` carrying roughly 32
//! significant digits. Only used to evaluate losses when plain `f64`
//! roundoff would dominate a finite difference.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let v = s - a;
    (s, (a - (s - v)) + (b - v))
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    pub const ZERO: Self = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: Self = DoubleDouble { hi: 1.0, lo: 0.0 };
    const LN_2: Self = DoubleDouble {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    pub fn new(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = fast_two_sum(hi, lo);
        DoubleDouble { hi, lo }
    }

    fn scale_pow2(self, k: i32) -> Self {
        let f = 2f64.powi(k);
        DoubleDouble {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn exp(self) -> Self {
        if self.hi > 709.0 {
            return DoubleDouble::new(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return DoubleDouble::ZERO;
        }
        let k = (self.hi / std::f64::consts::LN_2).round();
        let r = (self - DoubleDouble::LN_2 * DoubleDouble::new(k)).scale_pow2(-10);
        let mut term = DoubleDouble::ONE;
        let mut sum = DoubleDouble::ONE;
        for n in 1..=14 {
            term = term * r / DoubleDouble::new(n as f64);
            sum = sum + term;
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.scale_pow2(k as i32)
    }

    /// Newton refinement of the `f64` logarithm.
    pub fn ln(self) -> Self {
        let y = DoubleDouble::new(self.hi.ln());
        y + self * (-y).exp() - DoubleDouble::ONE
    }

    pub fn tanh(self) -> Self {
        if self.hi < 0.0 {
            return -(-self).tanh();
        }
        if self.hi > 354.0 {
            return DoubleDouble::ONE;
        }
        DoubleDouble::ONE - DoubleDouble::new(2.0) / ((self + self).exp() + DoubleDouble::ONE)
    }

    pub fn sigmoid(self) -> Self {
        if self.hi < -709.0 {
            return DoubleDouble::ZERO;
        }
        DoubleDouble::ONE / (DoubleDouble::ONE + (-self).exp())
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble::new(x)
    }
}

impl Add for DoubleDouble {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = fast_two_sum(s, e + t);
        DoubleDouble::renorm(s, e + f)
    }
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for DoubleDouble {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + -o
    }
}

impl Mul for DoubleDouble {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        DoubleDouble::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for DoubleDouble {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self - o * DoubleDouble::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * DoubleDouble::new(q2);
        let q3 = r.hi / o.hi;
        DoubleDouble::renorm(q1, q2) + DoubleDouble::new(q3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dd(x: f64) -> DoubleDouble {
        DoubleDouble::new(x)
    }

    #[test]
    fn sum_keeps_what_f64_drops() {
        let s = dd(1.0) + dd(1e-20) - dd(1.0);
        assert_eq!(s.to_f64(), 1e-20);
    }

    #[test]
    fn division_inverts_multiplication() {
        let x = dd(1.0) / dd(3.0);
        let back = x * dd(3.0) - dd(1.0);
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn exp_and_ln_round_trip() {
        for i in 0..200 {
            let x = dd(-10.0 + 0.1 * i as f64) + dd(1e-19);
            let err = (x.exp() * (-x).exp() - dd(1.0)).to_f64().abs();
            assert!(err < 1e-28, "{x:?} {err:e}");
            assert!((x.exp().ln() - x).to_f64().abs() < 1e-28, "{x:?}");
        }
    }

    #[test]
    fn matches_f64_functions() {
        for x in [-3.0, -0.5, 0.0, 1e-8, 0.7, 4.0] {
            assert!((dd(x).exp().to_f64() - x.exp()).abs() <= 2.0 * f64::EPSILON * x.exp());
            assert!((dd(x).tanh().to_f64() - x.tanh()).abs() <= 2.0 * f64::EPSILON);
            assert!((dd(x).sigmoid().to_f64() - 1.0 / (1.0 + (-x).exp())).abs() <= 2.0 * f64::EPSILON);
        }
    }

    #[test]
    fn extremes_saturate() {
        assert_eq!(dd(800.0).exp().to_f64(), f64::INFINITY);
        assert_eq!(dd(-800.0).exp().to_f64(), 0.0);
        assert_eq!(dd(400.0).tanh().to_f64(), 1.0);
        assert_eq!(dd(-800.0).sigmoid().to_f64(), 0.0);
        assert_eq!(dd(800.0).sigmoid().to_f64(), 1.0);
    }
}
