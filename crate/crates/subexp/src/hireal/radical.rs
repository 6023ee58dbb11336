//! Coefficients of the exponential-term algebra: exact rationals with an
//! optional square-root part, `u + v*sqrt(m)` with `m` square-free.
//!
//! The radical part is what keeps values like `2 - n^{-1/2}` exact: with
//! the default tail exponents every `n^{-k-1/2}` coefficient is a rational
//! multiple of `sqrt(n)`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::dd::DD;

pub type Rat = BigRational;

/// Split `n = s^2 * m` with `m` square-free; returns `(s, m)`.
pub fn square_free_split(n: u64) -> (u64, u64) {
    let mut m = n;
    let mut s = 1u64;
    let mut d = 2u64;
    while d * d <= m {
        while m % (d * d) == 0 {
            m /= d * d;
            s *= d;
        }
        d += 1;
    }
    (s, m)
}

/// Exact coefficient `u + v*sqrt(m)`.
///
/// Canonical form: `v == 0` implies `m == 1`; `m` is square-free and `m >= 2`
/// whenever `v != 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coeff {
    u: Rat,
    v: Rat,
    m: u64,
}

impl Coeff {
    pub fn zero() -> Coeff {
        Coeff {
            u: Rat::zero(),
            v: Rat::zero(),
            m: 1,
        }
    }

    pub fn one() -> Coeff {
        Coeff::from_rat(Rat::one())
    }

    pub fn from_rat(u: Rat) -> Coeff {
        Coeff {
            u,
            v: Rat::zero(),
            m: 1,
        }
    }

    pub fn from_int(n: i64) -> Coeff {
        Coeff::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    /// Build `u + v*sqrt(m)`, normalizing the square part of `m` into `v`.
    pub fn with_radical(u: Rat, v: Rat, m: u64) -> Coeff {
        if v.is_zero() || m == 0 {
            return Coeff::from_rat(u);
        }
        let (s, mf) = square_free_split(m);
        let v = v * Rat::from_integer(BigInt::from(s));
        if mf == 1 {
            Coeff::from_rat(u + v)
        } else {
            Coeff { u, v, m: mf }
        }
    }

    pub fn rational_part(&self) -> &Rat {
        &self.u
    }

    pub fn radical_part(&self) -> (&Rat, u64) {
        (&self.v, self.m)
    }

    pub fn is_zero(&self) -> bool {
        self.u.is_zero() && self.v.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.v.is_zero()
    }

    /// Exact sign. For mixed signs of `u` and `v*sqrt(m)` compares
    /// `u^2` against `v^2 m`.
    pub fn sign(&self) -> Ordering {
        if self.v.is_zero() {
            return rat_sign(&self.u);
        }
        if self.u.is_zero() {
            return rat_sign(&self.v);
        }
        let su = rat_sign(&self.u);
        let sv = rat_sign(&self.v);
        if su == sv {
            return su;
        }
        // sign(u + v sqrt(m)) with opposite-signed parts:
        // |u| vs |v| sqrt(m)  <=>  u^2 vs v^2 m.
        let u2 = &self.u * &self.u;
        let v2m = &self.v * &self.v * Rat::from_integer(BigInt::from(self.m));
        match u2.cmp(&v2m) {
            Ordering::Greater => su,
            Ordering::Less => sv,
            Ordering::Equal => Ordering::Equal,
        }
    }

    pub fn neg(&self) -> Coeff {
        Coeff {
            u: -self.u.clone(),
            v: -self.v.clone(),
            m: if self.v.is_zero() { 1 } else { self.m },
        }
    }

    /// Exact sum. Panics if both operands carry radical parts over
    /// different square-free bases: the coefficient field is closed over a
    /// single radical per value, which every construction here respects.
    pub fn add(&self, o: &Coeff) -> Coeff {
        let m = if self.v.is_zero() {
            o.m
        } else if o.v.is_zero() {
            self.m
        } else if self.m == o.m {
            self.m
        } else {
            panic!(
                "incompatible radical bases in coefficient sum: sqrt({}) + sqrt({})",
                self.m, o.m
            );
        };
        Coeff::with_radical(&self.u + &o.u, &self.v + &o.v, m)
    }

    pub fn sub(&self, o: &Coeff) -> Coeff {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Coeff) -> Coeff {
        // (u + v sqrt(m))(u' + v' sqrt(m')):
        //   uu' + v v' sqrt(m m') + (u v') sqrt(m') + (u' v) sqrt(m)
        // Representable when at most one distinct radical survives.
        if self.is_rational() {
            return Coeff::with_radical(&self.u * &o.u, &self.u * &o.v, o.m);
        }
        if o.is_rational() {
            return Coeff::with_radical(&self.u * &o.u, &self.v * &o.u, self.m);
        }
        if self.m == o.m {
            let mrat = Rat::from_integer(BigInt::from(self.m));
            let u = &self.u * &o.u + &self.v * &o.v * mrat;
            let v = &self.u * &o.v + &self.v * &o.u;
            return Coeff::with_radical(u, v, self.m);
        }
        panic!(
            "coefficient product leaves the u+v*sqrt(m) field: sqrt({}) * sqrt({})",
            self.m, o.m
        );
    }

    pub fn scale(&self, r: &Rat) -> Coeff {
        Coeff::with_radical(&self.u * r, &self.v * r, self.m)
    }

    pub fn to_dd(&self) -> DD {
        let u = rat_to_dd(&self.u);
        if self.v.is_zero() {
            return u;
        }
        let root = DD::from_f64(self.m as f64).sqrt();
        u.add(rat_to_dd(&self.v).mul(root))
    }

    /// ln|coeff| as f64 with ~1e-12 relative error, cancellation-safe:
    /// when `u` and `v*sqrt(m)` nearly cancel, uses
    /// |u + v sqrt(m)| = |u^2 - v^2 m| / |u - v sqrt(m)|.
    pub fn ln_abs(&self) -> f64 {
        debug_assert!(!self.is_zero());
        if self.v.is_zero() {
            return rat_ln_abs(&self.u);
        }
        if self.u.is_zero() {
            return rat_ln_abs(&self.v) + 0.5 * (self.m as f64).ln();
        }
        if rat_sign(&self.u) == rat_sign(&self.v) {
            return self.to_dd().abs().to_f64().ln();
        }
        let num = (&self.u * &self.u
            - &self.v * &self.v * Rat::from_integer(BigInt::from(self.m)))
        .abs();
        let conj = Coeff {
            u: self.u.clone(),
            v: -self.v.clone(),
            m: self.m,
        };
        rat_ln_abs(&num) - conj.to_dd().abs().to_f64().ln()
    }
}

pub fn rat_sign(r: &Rat) -> Ordering {
    if r.is_zero() {
        Ordering::Equal
    } else if r.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// BigInt -> DD keeping the top ~106 bits.
pub fn bigint_to_dd(n: &BigInt) -> DD {
    let bits = n.bits();
    if bits <= 1000 {
        let hi = bigint_to_f64(n);
        let rem = n - BigInt::from(hi as i128);
        // hi is integral and exactly representable for any BigInt magnitude
        // below 2^1000 path only when |hi| < 2^53 ... handle the general
        // case via a second split below.
        if hi.abs() < 9.007199254740992e15 {
            return DD::new(hi, bigint_to_f64(&rem));
        }
    }
    // General path: take the top 104 bits explicitly.
    let shift = bits.saturating_sub(104);
    let top: BigInt = n >> shift;
    let top_f = bigint_to_f64(&top);
    let approx = DD::from_f64(top_f).ldexp(shift as i32);
    // one correction round using the residual of the top split
    let back: BigInt = &top << shift;
    let resid = n - back;
    approx.add(DD::from_f64(bigint_to_f64(&resid)))
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    n.to_f64().unwrap_or(if n.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

pub fn rat_to_dd(r: &Rat) -> DD {
    bigint_to_dd(r.numer()).div(bigint_to_dd(r.denom()))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    rat_to_dd(r).to_f64()
}

/// ln|r| for a nonzero rational of any magnitude.
pub fn rat_ln_abs(r: &Rat) -> f64 {
    ln_abs_bigint(r.numer()) - ln_abs_bigint(r.denom())
}

fn ln_abs_bigint(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        let v = bigint_to_f64(n).abs();
        return v.ln();
    }
    let shift = bits - 64;
    let top: BigInt = n >> shift;
    bigint_to_f64(&top).abs().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact f64 -> Rat (every finite f64 is a dyadic rational).
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

/// Exact DD -> Rat.
pub fn rat_from_dd(x: DD) -> Rat {
    rat_from_f64(x.hi) + rat_from_f64(x.lo)
}

pub fn rat_of(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.v.is_zero() {
            write!(f, "{}", self.u)
        } else if self.u.is_zero() {
            write!(f, "{}*sqrt({})", self.v, self.m)
        } else {
            write!(f, "{}+{}*sqrt({})", self.u, self.v, self.m)
        }
    }
}

impl Coeff {
    /// Parse the serialization format: `p/q` or `p/q+r/s*sqrt(m)` or
    /// `r/s*sqrt(m)`.
    pub fn parse(s: &str) -> Result<Coeff, String> {
        let s = s.trim();
        if let Some(idx) = s.find("*sqrt(") {
            let close = s.rfind(')').ok_or_else(|| format!("unclosed sqrt in {s:?}"))?;
            let m: u64 = s[idx + 6..close]
                .parse()
                .map_err(|e| format!("bad radical base in {s:?}: {e}"))?;
            let head = &s[..idx];
            // split the radical multiplier from an optional rational part,
            // honouring a leading sign on either piece
            let (upart, vpart) = match head[1..].rfind(['+', '-']) {
                Some(p) => (&head[..p + 1], &head[p + 1..]),
                None => ("0", head),
            };
            let u: Rat = upart
                .parse()
                .map_err(|e| format!("bad rational part {upart:?}: {e}"))?;
            let v: Rat = if vpart == "-" {
                -Rat::one()
            } else if vpart.is_empty() || vpart == "+" {
                Rat::one()
            } else {
                vpart
                    .parse()
                    .map_err(|e| format!("bad radical multiplier {vpart:?}: {e}"))?
            };
            Ok(Coeff::with_radical(u, v, m))
        } else {
            let u: Rat = s.parse().map_err(|e| format!("bad rational {s:?}: {e}"))?;
            Ok(Coeff::from_rat(u))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_free() {
        assert_eq!(square_free_split(1), (1, 1));
        assert_eq!(square_free_split(4), (2, 1));
        assert_eq!(square_free_split(12), (2, 3));
        assert_eq!(square_free_split(36), (6, 1));
        assert_eq!(square_free_split(50), (5, 2));
    }

    #[test]
    fn radical_normalization() {
        // 2 + 3*sqrt(8) = 2 + 6*sqrt(2)
        let c = Coeff::with_radical(rat_int(2), rat_int(3), 8);
        assert_eq!(c.radical_part(), (&rat_int(6), 2));
        // sqrt(9) folds into the rational part
        let c = Coeff::with_radical(rat_int(1), rat_int(2), 9);
        assert!(c.is_rational());
        assert_eq!(c.rational_part(), &rat_int(7));
    }

    #[test]
    fn sign_with_cancellation() {
        // 7 - 5*sqrt(2) < 0 since 49 < 50
        let c = Coeff::with_radical(rat_int(7), rat_int(-5), 2);
        assert_eq!(c.sign(), Ordering::Less);
        // 8 - 5*sqrt(2) > 0 since 64 > 50
        let c = Coeff::with_radical(rat_int(8), rat_int(-5), 2);
        assert_eq!(c.sign(), Ordering::Greater);
        // 2 - sqrt(4) == 0
        let c = Coeff::with_radical(rat_int(2), rat_int(-1), 4);
        assert!(c.is_zero());
    }

    #[test]
    fn mul_same_base() {
        // (1 + sqrt(2))(3 - 2 sqrt(2)) = 3 - 4 + (3 - 2) sqrt(2) = -1 + sqrt(2)
        let a = Coeff::with_radical(rat_int(1), rat_int(1), 2);
        let b = Coeff::with_radical(rat_int(3), rat_int(-2), 2);
        let p = a.mul(&b);
        assert_eq!(p.rational_part(), &rat_int(-1));
        assert_eq!(p.radical_part(), (&rat_int(1), 2));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["3/4", "-7", "1/100+-1/16*sqrt(10)", "2+1*sqrt(3)", "-5/2*sqrt(7)"] {
            let c = Coeff::parse(s).unwrap();
            let rt = Coeff::parse(&c.to_string()).unwrap();
            assert_eq!(c, rt, "{s}");
        }
    }

    #[test]
    fn ln_abs_cancellation_safe() {
        // 665857/470832 is a convergent of sqrt(2): u - v sqrt(2) ~ 1.6e-12
        let c = Coeff::with_radical(
            Rat::new(BigInt::from(665857), BigInt::from(470832)),
            rat_int(-1),
            2,
        );
        let got = c.ln_abs();
        // |u - sqrt(2)| = |u^2-2| / (u + sqrt(2))
        let u = 665857.0 / 470832.0;
        let want = ((u * u - 2.0_f64).abs() / (u + 2.0_f64.sqrt())).ln();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn bigint_dd_conversion() {
        let n = BigInt::parse_bytes(b"123456789012345678901234567890123456789", 10).unwrap();
        let dd = bigint_to_dd(&n);
        // relative error below dd eps * small factor
        let back = rat_from_dd(dd);
        let err = (&back - Rat::from_integer(n.clone())).abs()
            / Rat::from_integer(n);
        assert!(rat_to_f64(&err.abs()) < 1e-30);
    }
}
