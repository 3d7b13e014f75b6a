//! Double-double arithmetic for phases that outgrow binary64 resolution.
//!
//! Only the handful of operations the Riemann–Siegel phase needs are here.

use std::f64::consts::{FRAC_PI_8, LN_2};
use std::ops::{Add, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

pub(crate) const LN2: Dd = Dd { hi: LN_2, lo: 2.3190468138462996e-17 };
pub(crate) const LN_2PI: Dd = Dd { hi: 1.8378770664093456, lo: -7.756588316134483e-17 };
pub(crate) const PI_OVER_8: Dd = Dd { hi: FRAC_PI_8, lo: 1.5308084989341915e-17 };

#[inline(always)]
pub(crate) fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline(always)]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub fn mul_f64(self, x: f64) -> Self {
        let p = self.hi * x;
        let e = self.hi.mul_add(x, -p) + self.lo * x;
        Self::renorm(p, e)
    }

    fn div(self, d: Dd) -> Self {
        let q1 = self.hi / d.hi;
        let r = self - d.mul_f64(q1);
        let q2 = r.hi / d.hi;
        let r = r - d.mul_f64(q2);
        let q3 = r.hi / d.hi;
        Self::renorm(q1, q2) + Dd::new(q3)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        Dd::renorm(p, e)
    }
}

/// ln x for finite x > 0, to roughly 2^-100 relative.
pub(crate) fn ln(x: f64) -> Dd {
    debug_assert!(x.is_finite() && x > 0.0);
    // x = m 2^k with m in [1/√2, √2)
    let mut k = x.log2().round() as i32;
    let mut m = x / 2f64.powi(k);
    if m >= std::f64::consts::SQRT_2 {
        m *= 0.5;
        k += 1;
    } else if m < std::f64::consts::FRAC_1_SQRT_2 {
        m *= 2.0;
        k -= 1;
    }
    // ln m = 2 atanh(y), y = (m - 1)/(m + 1), |y| < 0.172
    let (den_hi, den_lo) = two_sum(m, 1.0);
    let y = Dd::new(m - 1.0).div(Dd { hi: den_hi, lo: den_lo });
    let y2 = y * y;
    let mut power = y;
    let mut sum = y;
    for j in 1..40 {
        power = power * y2;
        let term = power.div(Dd::new((2 * j + 1) as f64));
        sum = sum + term;
        if term.hi.abs() < 1e-34 * sum.hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    sum.mul_f64(2.0) + LN2.mul_f64(k as f64)
}
