//! Scalar types the modulation functionals are generic over.
//!
//! Besides `f64` we provide [`Jet2`], a second-order truncated power series
//! `a0 + a1 ε + a2 ε²`. Evaluating a functional at `v = ε u` with jet-valued
//! grid vectors yields its exact Taylor coefficients `f(0)`, `[f]^(1)(u)` and
//! `[f]^(2)(u)` in one pass.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    fn from_f64(x: f64) -> Self;
    /// The ε⁰ part.
    fn value(self) -> f64;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn value(self) -> f64 {
        self
    }
}

/// Truncated power series in ε up to second order.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet2 {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Jet2 {
    pub const fn new(a0: f64, a1: f64, a2: f64) -> Self {
        Jet2 { a0, a1, a2 }
    }

    /// Lift `base + ε·dir` entrywise.
    pub fn lift(base: &[f64], dir: &[f64]) -> Vec<Jet2> {
        base.iter().zip(dir).map(|(&b, &d)| Jet2::new(b, d, 0.0)).collect()
    }

    /// Lift `ε·dir` entrywise.
    pub fn direction(dir: &[f64]) -> Vec<Jet2> {
        dir.iter().map(|&d| Jet2::new(0.0, d, 0.0)).collect()
    }

    /// Sum of the series at ε = 1.
    pub fn sum(self) -> f64 {
        self.a0 + self.a1 + self.a2
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(self, o: Jet2) -> Jet2 {
        Jet2::new(self.a0 + o.a0, self.a1 + o.a1, self.a2 + o.a2)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2::new(self.a0 - o.a0, self.a1 - o.a1, self.a2 - o.a2)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2::new(
            self.a0 * o.a0,
            self.a0 * o.a1 + self.a1 * o.a0,
            self.a0 * o.a2 + self.a1 * o.a1 + self.a2 * o.a0,
        )
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, o: Jet2) -> Jet2 {
        let q0 = self.a0 / o.a0;
        let q1 = (self.a1 - q0 * o.a1) / o.a0;
        let q2 = (self.a2 - q0 * o.a2 - q1 * o.a1) / o.a0;
        Jet2::new(q0, q1, q2)
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    #[inline]
    fn neg(self) -> Jet2 {
        Jet2::new(-self.a0, -self.a1, -self.a2)
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn mul(self, s: f64) -> Jet2 {
        Jet2::new(self.a0 * s, self.a1 * s, self.a2 * s)
    }
}

impl AddAssign for Jet2 {
    #[inline]
    fn add_assign(&mut self, o: Jet2) {
        *self = *self + o;
    }
}

impl SubAssign for Jet2 {
    #[inline]
    fn sub_assign(&mut self, o: Jet2) {
        *self = *self - o;
    }
}

impl Scalar for Jet2 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Jet2::new(x, 0.0, 0.0)
    }
    #[inline]
    fn value(self) -> f64 {
        self.a0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(j: Jet2, e: f64) -> f64 {
        j.a0 + j.a1 * e + j.a2 * e * e
    }

    #[test]
    fn division_matches_series_of_quotient() {
        // (1 + 2ε) / (3 - ε) = 1/3 + 7/9 ε + 7/27 ε² + ...
        let q = Jet2::new(1.0, 2.0, 0.0) / Jet2::new(3.0, -1.0, 0.0);
        assert!((q.a0 - 1.0 / 3.0).abs() < 1e-15);
        assert!((q.a1 - 7.0 / 9.0).abs() < 1e-15);
        assert!((q.a2 - 7.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn product_truncates_at_second_order() {
        let a = Jet2::new(1.0, 1.0, 1.0);
        let p = a * a;
        assert_eq!(p, Jet2::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn rational_expression_error_is_cubic() {
        let f = |e: f64| (2.0 + e) * (1.0 - 3.0 * e) / (4.0 + e * e - e);
        let x = Jet2::new(0.0, 1.0, 0.0);
        let one = Jet2::from_f64(1.0);
        let j = (one * 2.0 + x) * (one - x * 3.0) / (one * 4.0 + x * x - x);
        let e1 = (f(2e-3) - eval(j, 2e-3)).abs();
        let e2 = (f(1e-3) - eval(j, 1e-3)).abs();
        let slope = (e1 / e2).log2();
        assert!(slope > 2.8, "slope {slope}");
    }
}
