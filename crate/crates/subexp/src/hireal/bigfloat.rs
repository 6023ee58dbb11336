//! Fixed-point big-integer evaluation at escalating precision.
//!
//! Only the sign decision of an `ExpReal` lands here, and only when the
//! dominance fast path cannot separate the terms. Values are scaled
//! integers `m / 2^prec`; all routines bound their rounding error by a few
//! ulps so the caller can demand a comfortable error margin before
//! trusting a sign.

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

#[derive(Clone, Debug)]
pub struct Fx {
    pub m: BigInt,
    pub prec: u32,
}

impl Fx {
    pub fn zero(prec: u32) -> Fx {
        Fx {
            m: BigInt::zero(),
            prec,
        }
    }

    pub fn from_rat(r: &BigRational, prec: u32) -> Fx {
        let m = (r.numer() << prec) / r.denom();
        Fx { m, prec }
    }

    pub fn from_u64(n: u64, prec: u32) -> Fx {
        Fx {
            m: BigInt::from(n) << prec,
            prec,
        }
    }

    pub fn add(&self, o: &Fx) -> Fx {
        debug_assert_eq!(self.prec, o.prec);
        Fx {
            m: &self.m + &o.m,
            prec: self.prec,
        }
    }

    pub fn sub(&self, o: &Fx) -> Fx {
        debug_assert_eq!(self.prec, o.prec);
        Fx {
            m: &self.m - &o.m,
            prec: self.prec,
        }
    }

    pub fn mul(&self, o: &Fx) -> Fx {
        debug_assert_eq!(self.prec, o.prec);
        Fx {
            m: (&self.m * &o.m) >> self.prec,
            prec: self.prec,
        }
    }

    /// sqrt of a non-negative value.
    pub fn sqrt(&self) -> Fx {
        debug_assert!(!self.m.is_negative());
        Fx {
            m: (&self.m << self.prec).sqrt(),
            prec: self.prec,
        }
    }

    /// Truncate value toward -inf to an i64; usable only for moderate values.
    fn floor_i64(&self) -> i64 {
        use num_traits::ToPrimitive;
        let f: BigInt = &self.m >> self.prec;
        f.to_i64().expect("bigfloat floor fits i64")
    }

    /// e^self for self <= 1 (larger arguments never reach this routine).
    /// Deeply negative arguments round to zero, which is within the
    /// caller's error allowance.
    pub fn exp(&self) -> Fx {
        let prec = self.prec;
        // e^x < 2^{-prec-64}: indistinguishable from zero at this precision.
        let cutoff = -((prec as i64 + 64) * 2 / 3 + 2);
        if self.m.is_negative() && self.floor_i64_saturating() < cutoff {
            return Fx::zero(prec);
        }
        let k = -self.floor_i64(); // x = -k + f, f in [0,1)
        debug_assert!(k >= -1);
        let f = self.add(&Fx {
            m: BigInt::from(k) << prec,
            prec,
        });
        let ef = exp_frac(&f);
        if k <= 0 {
            // x in [0,1] (k = 0) or [1,2) (k = -1): scale by e^|k| exactly once
            if k == 0 {
                return ef;
            }
            let e1 = exp_frac(&Fx::from_u64(1, prec));
            return ef.mul(&e1);
        }
        // divide by e^k computed at matching precision
        let e1 = exp_frac(&Fx::from_u64(1, prec));
        let ek = powi(&e1, k as u64);
        Fx {
            m: (&ef.m << prec) / &ek.m,
            prec,
        }
    }

    fn floor_i64_saturating(&self) -> i64 {
        use num_traits::ToPrimitive;
        let f: BigInt = &self.m >> self.prec;
        f.to_i64().unwrap_or(if f.is_negative() {
            i64::MIN
        } else {
            i64::MAX
        })
    }
}

/// e^f for f in [0,2) by the Taylor series.
fn exp_frac(f: &Fx) -> Fx {
    let prec = f.prec;
    let mut term = Fx::from_u64(1, prec);
    let mut sum = term.clone();
    let mut i = 1u64;
    loop {
        term = term.mul(f);
        term.m /= BigInt::from(i);
        if term.m.is_zero() {
            break;
        }
        sum = sum.add(&term);
        i += 1;
        if i > 100_000 {
            unreachable!("exp series did not converge");
        }
    }
    sum
}

fn powi(base: &Fx, mut e: u64) -> Fx {
    let mut acc = Fx::from_u64(1, base.prec);
    let mut b = base.clone();
    loop {
        if e & 1 == 1 {
            acc = acc.mul(&b);
        }
        e >>= 1;
        if e == 0 {
            return acc;
        }
        b = b.mul(&b);
    }
}

/// One fixed-precision evaluation pass over terms `coeff * e^{lin + sqrt(root)}`
/// relative to the reference exponent `lin_ref + sqrt(root_ref)`; i.e. computes
/// `sum_i coeff_i * e^{t_i - t_ref}` at `prec` bits together with a crude ulp
/// error allowance. Exponent differences must be <= ~1.
pub struct TermView<'a> {
    pub u: &'a BigRational,
    pub v: &'a BigRational,
    pub m: u64,
    pub lin: &'a BigRational,
    pub root: &'a BigRational,
}

pub fn eval_sum_relative(
    terms: &[TermView<'_>],
    lin_ref: &BigRational,
    root_ref: &BigRational,
    prec: u32,
) -> (Fx, BigInt) {
    let sref = Fx::from_rat(root_ref, prec).sqrt();
    let mut sum = Fx::zero(prec);
    // Error allowance: generous 2^40 ulps per term spans every rounding step
    // in the sqrt/exp/mul chain plus the coefficient magnitudes seen here.
    let mut err_ulps = BigInt::from(0);
    for t in terms {
        let dlin = Fx::from_rat(&(t.lin - lin_ref), prec);
        let s = Fx::from_rat(t.root, prec).sqrt();
        let z = dlin.add(&s).sub(&sref);
        let e = z.exp();
        let mut coeff = Fx::from_rat(t.u, prec);
        if !t.v.is_zero() {
            let rad = Fx::from_u64(t.m, prec).sqrt();
            coeff = coeff.add(&Fx::from_rat(t.v, prec).mul(&rad));
        }
        let contrib = coeff.mul(&e);
        sum = sum.add(&contrib);
        err_ulps += (coeff.m.abs() >> prec) + 1i64;
    }
    err_ulps = (err_ulps + terms.len()) << 40;
    (sum, err_ulps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn close(f: &Fx, want: f64, tol: f64) {
        let got = f.m.to_f64().unwrap() / 2f64.powi(f.prec as i32);
        assert!((got - want).abs() <= tol, "{got} vs {want}");
    }

    #[test]
    fn exp_small_args() {
        let p = 192;
        close(&Fx::from_rat(&BigRational::zero(), p).exp(), 1.0, 1e-15);
        close(
            &Fx::from_rat(&BigRational::new(BigInt::from(1), BigInt::from(2)), p).exp(),
            0.5f64.exp(),
            1e-15,
        );
        close(
            &Fx::from_rat(&BigRational::new(BigInt::from(-7), BigInt::from(2)), p).exp(),
            (-3.5f64).exp(),
            1e-15,
        );
        close(
            &Fx::from_rat(&BigRational::from_integer(BigInt::from(-40)), p).exp(),
            (-40f64).exp(),
            1e-30,
        );
    }

    #[test]
    fn sqrt_accuracy() {
        let p = 192;
        let two = Fx::from_u64(2, p);
        let s = two.sqrt();
        close(&s.mul(&s), 2.0, 1e-40);
    }

    #[test]
    fn deep_negative_rounds_to_zero() {
        let p = 128;
        let z = Fx::from_rat(&BigRational::from_integer(BigInt::from(-100_000)), p).exp();
        assert!(z.m.is_zero());
    }
}
