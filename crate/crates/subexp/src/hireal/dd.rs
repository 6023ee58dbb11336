//! Double-double arithmetic: an unevaluated sum of two f64s giving ~31
//! significant digits. This is the floating fallback precision for every
//! numeric surface in the crate; exact cancellation happens upstream in
//! `ExpReal`, so double-double only ever sees well-conditioned residues.

use std::cmp::Ordering;
use std::fmt;

/// Relative rounding unit of a double-double, ~4.93e-32.
pub const DD_EPS: f64 = 4.93038065763132e-32;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };
    /// ln(2) to double-double precision.
    pub const LN2: DD = DD {
        hi: 0.6931471805599453,
        lo: 2.3190468138462996e-17,
    };

    #[inline]
    pub fn from_f64(x: f64) -> DD {
        DD { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn new(hi: f64, lo: f64) -> DD {
        let (s, e) = two_sum(hi, lo);
        DD { hi: s, lo: e }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    #[inline]
    pub fn abs(self) -> DD {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            self
        }
    }

    #[inline]
    pub fn neg(self) -> DD {
        DD {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn add(self, o: DD) -> DD {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let (t1, t2) = two_sum(self.lo, o.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (r1, r2) = quick_two_sum(s1, s2 + t2);
        DD { hi: r1, lo: r2 }
    }

    #[inline]
    pub fn sub(self, o: DD) -> DD {
        self.add(o.neg())
    }

    #[inline]
    pub fn mul(self, o: DD) -> DD {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (r1, r2) = quick_two_sum(p1, p2);
        DD { hi: r1, lo: r2 }
    }

    #[inline]
    pub fn mul_f64(self, o: f64) -> DD {
        let (p1, p2) = two_prod(self.hi, o);
        let (r1, r2) = quick_two_sum(p1, p2 + self.lo * o);
        DD { hi: r1, lo: r2 }
    }

    pub fn div(self, o: DD) -> DD {
        if o.hi == 0.0 {
            return DD::from_f64(self.hi / o.hi);
        }
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (s, e) = quick_two_sum(q1, q2);
        DD { hi: s, lo: e }.add(DD::from_f64(q3))
    }

    pub fn recip(self) -> DD {
        DD::ONE.div(self)
    }

    /// Scale by 2^k exactly.
    #[inline]
    pub fn ldexp(self, k: i32) -> DD {
        let f = pow2(k);
        DD {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn sqrt(self) -> DD {
        if self.hi <= 0.0 {
            return DD::ZERO;
        }
        // Newton on y = sqrt(a): one dd refinement from the f64 seed.
        let y0 = self.hi.sqrt();
        let y = DD::from_f64(y0);
        let y = y.add(self.div(y)).mul_f64(0.5);
        y.add(self.div(y)).mul_f64(0.5)
    }

    /// e^x with double-double accuracy; saturates to 0 / +inf outside range.
    pub fn exp(self) -> DD {
        let x = self;
        if x.hi >= 709.9 {
            return DD::from_f64(f64::INFINITY);
        }
        if x.hi <= -745.2 {
            return DD::ZERO;
        }
        if x.is_zero() {
            return DD::ONE;
        }
        // x = k ln2 + r, |r| <= ln2/2; e^r by scaled Taylor, then 2^k.
        let k = (x.hi / std::f64::consts::LN_2).round();
        let r = x.sub(DD::LN2.mul_f64(k));
        // r/2^9 then square 9 times: |r'| < 6.8e-4, 12 terms suffice.
        let rs = r.ldexp(-9);
        let mut term = rs;
        let mut sum = DD::ONE.add(rs);
        for i in 2..=14u32 {
            term = term.mul(rs).mul_f64(1.0 / i as f64);
            sum = sum.add(term);
            if term.hi.abs() < 1e-35 {
                break;
            }
        }
        for _ in 0..9 {
            sum = sum.mul(sum);
        }
        sum.ldexp(k as i32)
    }

    /// Natural log; requires self > 0.
    pub fn ln(self) -> DD {
        debug_assert!(self.hi > 0.0);
        // Newton: y' = y + x e^{-y} - 1, two steps from the f64 seed.
        let mut y = DD::from_f64(self.hi.ln());
        for _ in 0..2 {
            let e = y.neg().exp();
            y = y.add(self.mul(e)).sub(DD::ONE);
        }
        y
    }

    pub fn powi(self, n: i32) -> DD {
        if n == 0 {
            return DD::ONE;
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = DD::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(base);
            }
            base = base.mul(base);
            e >>= 1;
        }
        acc
    }

    pub fn cmp_dd(self, o: DD) -> Ordering {
        match self.hi.partial_cmp(&o.hi).unwrap() {
            Ordering::Equal => self.lo.partial_cmp(&o.lo).unwrap(),
            ord => ord,
        }
    }
}

fn pow2(k: i32) -> f64 {
    if (-1022..=1023).contains(&k) {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else if k > 1023 {
        f64::INFINITY
    } else {
        0.0
    }
}

impl fmt::Display for DD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_matches_f64_in_easy_range() {
        for &x in &[0.0, 1.0, -1.0, 4.0, 10.5, -30.25, 700.0, -700.0] {
            let got = DD::from_f64(x).exp().to_f64();
            let want = x.exp();
            assert!(
                (got - want).abs() <= want.abs() * 1e-14,
                "exp({x}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn exp_ln_round_trip() {
        for &x in &[1e-10, 0.5, 1.0, 3.7, 1e8, 1e300] {
            let d = DD::from_f64(x);
            let rt = d.ln().exp();
            let rel = (rt.sub(d)).abs().to_f64() / x;
            assert!(rel < 1e-29, "round trip {x}: rel {rel}");
        }
    }

    #[test]
    fn exp_precision_against_known_value() {
        // e^4 split into dd components (40-digit reference).
        let e4 = DD::from_f64(4.0).exp();
        assert_eq!(e4.hi, 54.598150033144236);
        assert!((e4.lo - 2.8741578015844115e-15).abs() < 1e-28, "lo = {:e}", e4.lo);
    }

    #[test]
    fn sqrt_square_round_trip() {
        for &x in &[2.0_f64, 3.0, 10.0, 1e10, 0.3] {
            let s = DD::from_f64(x).sqrt();
            let rel = s.mul(s).sub(DD::from_f64(x)).abs().to_f64() / x;
            assert!(rel < 1e-30, "sqrt({x}) rel {rel}");
        }
    }

    #[test]
    fn saturation_outside_range() {
        assert!(DD::from_f64(800.0).exp().hi.is_infinite());
        assert_eq!(DD::from_f64(-800.0).exp(), DD::ZERO);
    }
}
