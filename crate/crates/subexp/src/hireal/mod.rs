//! Cancellation-safe exact reals of the form `sum_i c_i * e^{a_i + sqrt(b_i)}`
//! with rational `a_i`, non-negative rational `b_i`, and coefficients
//! `c_i = u + v*sqrt(m)`.
//!
//! This field closes over every breakpoint and plateau value appearing in
//! the gallery constructions: `e^n`, `e^{sqrt(n)}`, `e^{n^2}`, midpoints
//! like `(e^n + e^{n+1})/2`, and shifted combinations of all of these.
//! Addition and comparison are exact; only the final conversion to a
//! floating value rounds, after all structural cancellation has already
//! happened term-wise.

pub mod bigfloat;
pub mod dd;
pub mod radical;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

pub use dd::{DD, DD_EPS};
pub use radical::{
    rat_from_dd, rat_from_f64, rat_int, rat_ln_abs, rat_of, rat_sign, rat_to_dd, rat_to_f64,
    Coeff, Rat,
};

/// One exact term `coeff * e^{lin + sqrt(root)}`.
///
/// Canonical form: `coeff != 0`; `root >= 0`; if `sqrt(root)` is rational it
/// has been folded into `lin` (so stored `root` is never a nonzero perfect
/// square of a rational).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpTerm {
    pub coeff: Coeff,
    lin: Rat,
    root: Rat,
}

impl ExpTerm {
    pub fn new(coeff: Coeff, lin: Rat, root: Rat) -> ExpTerm {
        assert!(!root.is_negative(), "exponent root part must be >= 0");
        let (lin, root) = canonical_exponent(lin, root);
        ExpTerm { coeff, lin, root }
    }

    pub fn lin(&self) -> &Rat {
        &self.lin
    }

    pub fn root(&self) -> &Rat {
        &self.root
    }

    /// Exponent value `lin + sqrt(root)` in double-double.
    pub fn exponent_dd(&self) -> DD {
        rat_to_dd(&self.lin).add(rat_to_dd(&self.root).sqrt())
    }

    fn exponent_f64(&self) -> f64 {
        self.exponent_dd().to_f64()
    }
}

/// If `sqrt(root)` is rational, fold it into `lin`.
fn canonical_exponent(lin: Rat, root: Rat) -> (Rat, Rat) {
    if root.is_zero() {
        return (lin, root);
    }
    let (np, dp) = (root.numer(), root.denom());
    let ns = exact_sqrt(np);
    let ds = exact_sqrt(dp);
    match (ns, ds) {
        (Some(n), Some(d)) => (lin + Rat::new(n, d), Rat::zero()),
        _ => (lin, root),
    }
}

fn exact_sqrt(n: &BigInt) -> Option<BigInt> {
    use num_integer::Roots;
    if n.is_negative() {
        return None;
    }
    let s = n.sqrt();
    if &(&s * &s) == n {
        Some(s)
    } else {
        None
    }
}

/// Exact comparison of exponents `a1 + sqrt(b1)` vs `a2 + sqrt(b2)`.
pub fn cmp_exponent(a1: &Rat, b1: &Rat, a2: &Rat, b2: &Rat) -> Ordering {
    if b1 == b2 {
        return a1.cmp(a2);
    }
    // sign of d + sqrt(b1) - sqrt(b2), d = a1 - a2
    let d = a1 - a2;
    // L = d + sqrt(b1); if L <= 0 the whole thing is negative (b1 != b2
    // rules out the L = 0 = b2 coincidence after canonicalization).
    let l_sign = if !d.is_negative() {
        if d.is_zero() && b1.is_zero() {
            Ordering::Equal
        } else {
            Ordering::Greater
        }
    } else {
        // d < 0: L > 0 iff b1 > d^2
        b1.cmp(&(&d * &d))
    };
    match l_sign {
        Ordering::Less | Ordering::Equal => Ordering::Less,
        Ordering::Greater => {
            // compare L^2 = d^2 + b1 + 2 d sqrt(b1) against b2:
            // sign of R + s*sqrt(b1), R = d^2 + b1 - b2, s = 2d
            let r = &d * &d + b1 - b2;
            let s = &d + &d;
            match (rat_sign(&r), rat_sign(&s)) {
                (Ordering::Equal, Ordering::Equal) => Ordering::Equal,
                (Ordering::Equal, sgn) => {
                    if b1.is_zero() {
                        Ordering::Equal
                    } else {
                        sgn
                    }
                }
                (sgn, Ordering::Equal) => sgn,
                (Ordering::Greater, Ordering::Greater) => Ordering::Greater,
                (Ordering::Less, Ordering::Less) => Ordering::Less,
                (rs, _) => {
                    // opposite signs: compare R^2 vs s^2 b1
                    let r2 = &r * &r;
                    let s2b = &s * &s * b1;
                    match r2.cmp(&s2b) {
                        Ordering::Greater => rs,
                        Ordering::Less => rs.reverse(),
                        Ordering::Equal => Ordering::Equal,
                    }
                }
            }
        }
    }
}

/// Exact sum of exponential terms, ordered by strictly descending exponent.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExpReal {
    terms: Vec<ExpTerm>,
}

/// Result of converting an `ExpReal` to floating form.
#[derive(Clone, Copy, Debug)]
pub enum FloatEval {
    /// In-range value with a relative error bound.
    Value { value: DD, rel_err: f64 },
    /// Out of f64 range; the natural log of |x| and the sign are reported.
    LogScale { log_abs: f64, negative: bool },
}

impl ExpReal {
    pub fn zero() -> ExpReal {
        ExpReal { terms: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn term(coeff: Coeff, lin: Rat, root: Rat) -> ExpReal {
        if coeff.is_zero() {
            return ExpReal::zero();
        }
        ExpReal {
            terms: vec![ExpTerm::new(coeff, lin, root)],
        }
    }

    /// `c * e^{a}` with rational a.
    pub fn exp_lin(coeff: Rat, a: Rat) -> ExpReal {
        ExpReal::term(Coeff::from_rat(coeff), a, Rat::zero())
    }

    /// `c * e^{sqrt(b)}` with rational b >= 0.
    pub fn exp_root(coeff: Rat, b: Rat) -> ExpReal {
        ExpReal::term(Coeff::from_rat(coeff), Rat::zero(), b)
    }

    pub fn from_rat(r: Rat) -> ExpReal {
        ExpReal::exp_lin(r, Rat::zero())
    }

    pub fn from_int(n: i64) -> ExpReal {
        ExpReal::from_rat(rat_int(n))
    }

    /// Merge-sum; terms with equal exponents combine exactly, zeros drop.
    pub fn add(&self, o: &ExpReal) -> ExpReal {
        let mut out: Vec<ExpTerm> = Vec::with_capacity(self.terms.len() + o.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < o.terms.len() {
            let a = &self.terms[i];
            let b = &o.terms[j];
            match cmp_exponent(&a.lin, &a.root, &b.lin, &b.root) {
                Ordering::Greater => {
                    out.push(a.clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b.clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = a.coeff.add(&b.coeff);
                    if !c.is_zero() {
                        out.push(ExpTerm {
                            coeff: c,
                            lin: a.lin.clone(),
                            root: a.root.clone(),
                        });
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&o.terms[j..]);
        ExpReal { terms: out }
    }

    pub fn neg(&self) -> ExpReal {
        ExpReal {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    coeff: t.coeff.neg(),
                    lin: t.lin.clone(),
                    root: t.root.clone(),
                })
                .collect(),
        }
    }

    pub fn sub(&self, o: &ExpReal) -> ExpReal {
        self.add(&o.neg())
    }

    pub fn scale_rat(&self, r: &Rat) -> ExpReal {
        if r.is_zero() {
            return ExpReal::zero();
        }
        ExpReal {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    coeff: t.coeff.scale(r),
                    lin: t.lin.clone(),
                    root: t.root.clone(),
                })
                .collect(),
        }
    }

    pub fn scale_coeff(&self, c: &Coeff) -> ExpReal {
        if c.is_zero() {
            return ExpReal::zero();
        }
        ExpReal {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    coeff: t.coeff.mul(c),
                    lin: t.lin.clone(),
                    root: t.root.clone(),
                })
                .collect(),
        }
    }

    /// Shift by a rational constant.
    pub fn add_rat(&self, r: &Rat) -> ExpReal {
        self.add(&ExpReal::from_rat(r.clone()))
    }

    /// Exact sign via (in order): single-surviving-sign scan, log-space
    /// dominance with conservative margins, then escalating-precision
    /// big-integer evaluation. Equality holds exactly when the term list is
    /// empty: distinct exponents keep nonzero sums nonzero.
    pub fn sign(&self) -> Ordering {
        if self.terms.is_empty() {
            return Ordering::Equal;
        }
        let first = self.terms[0].coeff.sign();
        if self.terms.iter().all(|t| t.coeff.sign() == first) {
            return first;
        }
        if let Some(s) = self.sign_by_dominance() {
            return s;
        }
        self.sign_by_bigfloat()
    }

    /// Largest-term dominance in log space: decides when the top
    /// log-magnitude exceeds the sum bound of the rest by a safe margin.
    fn sign_by_dominance(&self) -> Option<Ordering> {
        let logs: Vec<f64> = self
            .terms
            .iter()
            .map(|t| t.coeff.ln_abs() + t.exponent_f64())
            .collect();
        let (imax, &lmax) = logs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
        let mut rest_bound = f64::NEG_INFINITY;
        for (i, &l) in logs.iter().enumerate() {
            if i != imax {
                rest_bound = rest_bound.max(l);
            }
        }
        let rest_total = rest_bound + ((self.terms.len() - 1) as f64).ln_1p();
        let margin = 1e-6 * (1.0 + lmax.abs().max(rest_total.abs()));
        if lmax - rest_total > margin + 1e-6 {
            Some(self.terms[imax].coeff.sign())
        } else {
            None
        }
    }

    fn sign_by_bigfloat(&self) -> Ordering {
        // reference exponent = max exponent (exact comparison)
        let tref = self
            .terms
            .iter()
            .max_by(|a, b| cmp_exponent(&a.lin, &a.root, &b.lin, &b.root))
            .unwrap();
        let (lref, rref) = (tref.lin.clone(), tref.root.clone());
        let views: Vec<bigfloat::TermView<'_>> = self
            .terms
            .iter()
            .map(|t| {
                let (v, m) = t.coeff.radical_part();
                bigfloat::TermView {
                    u: t.coeff.rational_part(),
                    v,
                    m,
                    lin: &t.lin,
                    root: &t.root,
                }
            })
            .collect();
        let mut prec = 128u32;
        while prec <= 16384 {
            let (sum, err) = bigfloat::eval_sum_relative(&views, &lref, &rref, prec);
            if sum.m.abs() > err {
                return if sum.m.is_negative() {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
            prec *= 2;
        }
        unreachable!(
            "sign undecided at 16384 bits; a nonzero ExpReal this small is outside the \
             value domain of the constructions"
        )
    }

    pub fn cmp(&self, o: &ExpReal) -> Ordering {
        self.sub(o).sign()
    }

    /// Sum of `coeff_i * e^{t_i - t_top}` in dd, where `t_top` is the
    /// largest exponent. All scaled terms are O(|coeff|), so nothing
    /// saturates regardless of the raw magnitude.
    fn relative_eval(&self) -> (DD, DD, DD) {
        let lmax = self.terms[0].exponent_dd();
        let mut sum = DD::ZERO;
        let mut abs_sum = DD::ZERO;
        for t in &self.terms {
            let v = t.coeff.to_dd().mul(t.exponent_dd().sub(lmax).exp());
            sum = sum.add(v);
            abs_sum = abs_sum.add(v.abs());
        }
        (sum, abs_sum, lmax)
    }

    /// Natural log of |x| as f64 (usable at any magnitude); None for zero.
    pub fn log_abs(&self) -> Option<f64> {
        if self.terms.is_empty() {
            return None;
        }
        let (sum, _, lmax) = self.relative_eval();
        if sum.is_zero() {
            // dominance lost below dd resolution: fall back to the top term
            return Some(lmax.to_f64() + self.terms[0].coeff.ln_abs());
        }
        Some(lmax.add(sum.abs().ln()).to_f64())
    }

    /// Compensated double-double evaluation with a reported relative error
    /// bound; signals out-of-range values with their log magnitude.
    pub fn to_float(&self) -> FloatEval {
        if self.terms.is_empty() {
            return FloatEval::Value {
                value: DD::ZERO,
                rel_err: 0.0,
            };
        }
        let (sum, abs_sum, lmax) = self.relative_eval();
        if sum.is_zero() {
            // full cancellation below dd resolution; the exact sign still
            // exists but the magnitude is unrepresentable here
            return FloatEval::LogScale {
                log_abs: lmax.to_f64() - 72.0,
                negative: self.sign() == Ordering::Less,
            };
        }
        let log_abs = lmax.add(sum.abs().ln());
        if log_abs.hi > 709.0 || log_abs.hi < -740.0 {
            return FloatEval::LogScale {
                log_abs: log_abs.to_f64(),
                negative: sum.hi < 0.0,
            };
        }
        let n = self.terms.len() as f64;
        let mut rel_err = (n + 4.0) * DD_EPS * (abs_sum.to_f64() / sum.to_f64().abs());
        let value = if lmax.hi.abs() < 690.0 {
            sum.mul(lmax.exp())
        } else {
            // re-exponentiate through the log; costs |log| * eps in accuracy
            rel_err += (log_abs.hi.abs() + 2.0) * DD_EPS * 4.0;
            let v = log_abs.exp();
            if sum.hi < 0.0 {
                v.neg()
            } else {
                v
            }
        };
        FloatEval::Value {
            value,
            rel_err: rel_err.max(2.0 * DD_EPS),
        }
    }

    /// Double-double value; saturates rather than signalling (0 for deep
    /// underflow, +/-inf for overflow).
    pub fn to_dd(&self) -> DD {
        match self.to_float() {
            FloatEval::Value { value, .. } => value,
            FloatEval::LogScale { log_abs, negative } => {
                let v = if log_abs < 0.0 { 0.0 } else { f64::INFINITY };
                DD::from_f64(if negative { -v } else { v })
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.to_dd().to_f64()
    }
}

impl fmt::Display for ExpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", t.coeff)?;
            if t.root.is_zero() {
                write!(f, "*e^({})", t.lin)?;
            } else if t.lin.is_zero() {
                write!(f, "*e^(sqrt({}))", t.root)?;
            } else {
                write!(f, "*e^({}+sqrt({}))", t.lin, t.root)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e_pow(n: i64) -> ExpReal {
        ExpReal::exp_lin(rat_int(1), rat_int(n))
    }

    #[test]
    fn exact_cancellation() {
        let x = e_pow(4);
        let y = x.neg();
        assert!(x.add(&y).is_zero());
    }

    #[test]
    fn midpoint_value() {
        // (e^4 + e^5)/2 + e^sqrt(4) = 108.894710666791...
        let half = rat_of(1, 2);
        let b4 = e_pow(4)
            .scale_rat(&half)
            .add(&e_pow(5).scale_rat(&half))
            .add(&ExpReal::exp_root(rat_int(1), rat_int(4)));
        match b4.to_float() {
            FloatEval::Value { value, rel_err } => {
                assert!((value.to_f64() - 108.89471066679108).abs() < 1e-12);
                assert!(rel_err < 1e-25);
            }
            _ => panic!("in range"),
        }
    }

    #[test]
    fn term_algebra_keeps_small_term() {
        // (e^16 + e^12) - e^16 = e^12 exactly
        let x = e_pow(16).add(&e_pow(12));
        let d = x.sub(&e_pow(16));
        assert_eq!(d, e_pow(12));
    }

    #[test]
    fn cmp_small_relative_gap() {
        // a_{n,1} < a_{n,5} at n = 36: difference is e^6(3+e), ~5e-13 relative
        let n = 36i64;
        let half = rat_of(1, 2);
        let a5 = e_pow(n)
            .scale_rat(&half)
            .add(&e_pow(n + 1).scale_rat(&half));
        let gap = ExpReal::exp_root(rat_int(3), rat_int(n))
            .add(&ExpReal::term(Coeff::one(), rat_int(1), rat_int(n)));
        let a1 = a5.sub(&gap);
        assert_eq!(a1.cmp(&a5), Ordering::Less);
        assert_eq!(a5.cmp(&a1), Ordering::Greater);
        assert_eq!(a1.cmp(&a1), Ordering::Equal);
    }

    #[test]
    fn perfect_square_root_folds() {
        // e^{sqrt(36)} == e^6
        let a = ExpReal::exp_root(rat_int(1), rat_int(36));
        assert_eq!(a, e_pow(6));
        // e^{sqrt(9/4)} == e^{3/2}
        let b = ExpReal::exp_root(rat_int(1), rat_of(9, 4));
        assert_eq!(b, ExpReal::exp_lin(rat_int(1), rat_of(3, 2)));
    }

    #[test]
    fn overflow_reports_log_scale() {
        // e^{900}
        let x = ExpReal::exp_lin(rat_int(1), rat_int(900));
        match x.to_float() {
            FloatEval::LogScale { log_abs, negative } => {
                assert!((log_abs - 900.0).abs() < 1e-9);
                assert!(!negative);
            }
            _ => panic!("overflow expected"),
        }
    }

    #[test]
    fn sign_needs_bigfloat() {
        // e^{1/10} - 2: top exponent term positive but value negative
        let x = ExpReal::exp_lin(rat_int(1), rat_of(1, 10)).add_rat(&rat_int(-2));
        assert_eq!(x.sign(), Ordering::Less);
        // e^{1/10} - 11/10 > 0 (e^0.1 = 1.105...)
        let y = ExpReal::exp_lin(rat_int(1), rat_of(1, 10)).add_rat(&rat_of(-11, 10));
        assert_eq!(y.sign(), Ordering::Greater);
    }

    #[test]
    fn sign_tiny_gap() {
        // e^{sqrt(2)} vs its 30-digit rational truncation: sign must resolve
        let approx: Rat = "4113250378782927517244633457437/1000000000000000000000000000000"
            .parse()
            .unwrap();
        let x = ExpReal::exp_root(rat_int(1), rat_int(2)).add_rat(&(-approx));
        // e^{sqrt 2} = 4.1132503787829275171735818151... > truncation
        assert_eq!(x.sign(), Ordering::Less);
    }

    #[test]
    fn log_abs_of_huge_value() {
        // e^{n^2} at n = 30
        let x = ExpReal::exp_lin(rat_int(1), rat_int(900));
        assert!((x.log_abs().unwrap() - 900.0).abs() < 1e-9);
    }
}
