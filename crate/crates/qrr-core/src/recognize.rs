//! Product recognition: turn a q-series back into an eta-like infinite
//! product.
//!
//! Any normalized series f (integer exponents, rational integer-free...
//! i.e. parameter-free coefficients, f = 1 + O(q)) factors formally as
//!
//! ```text
//!   f = prod_{n >= 1} (1 - q^n)^{e_n}
//! ```
//!
//! with uniquely determined rational e_n. Taking the logarithmic
//! derivative, `q f'/f = - sum_n e_n * n * q^n / (1 - q^n)`, so its k-th
//! coefficient is `b_k = - sum_{d | k} d * e_d`, which inverts to the
//! divisor recursion
//!
//! ```text
//!   e_k = -(b_k + sum_{d | k, d < k} d * e_d) / k .
//! ```
//!
//! [`prodmake`] runs this recursion exactly; non-integral e_k means the
//! series is not an integral product ([`Error::NonIntegerExponent`]).
//! [`detect_period`] finds the smallest period of the exponent sequence,
//! and [`recognize_product`] packages both into a [`PeriodicProduct`] that
//! can be rendered back into a [`ProductExpr`] and re-expanded for
//! confirmation at higher order.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::products::{eval_product, ProdFactor, ProductExpr, Subscript};
use crate::qfactors::{PochArg, QMono};
use crate::qseries::QSeries;
use crate::{Error, EvalCtx, Exp, Result};

/// Extract coefficient k of `f` as a plain big rational; errors when the
/// coefficient involves parameters or a nontrivial root of unity.
fn rational_coeff(f: &QSeries, k: i64) -> Result<BigRational> {
    let c = f.coeff(Exp::from_integer(k))?;
    if c.is_zero() {
        return Ok(BigRational::zero());
    }
    let s = c
        .as_scalar()
        .ok_or_else(|| Error::Unsupported(format!("coefficient of q^{k} involves parameters")))?;
    s.as_rational()
        .cloned()
        .ok_or_else(|| Error::Unsupported(format!("coefficient of q^{k} is irrational")))
}

/// Compute the product exponents e_1..e_len of f = prod (1-q^n)^{e_n}.
///
/// Requires f to have integer q-exponents, parameter-free rational
/// coefficients, f(0) = 1, and to be known at least to order len + 1.
pub fn prodmake(f: &QSeries, len: usize) -> Result<Vec<i64>> {
    let f = f.reduce_denom();
    if f.denom() != 1 {
        return Err(Error::NonIntegerExponent(
            "series has fractional q-exponents".into(),
        ));
    }
    match f.trunc_order() {
        Some(n) if n >= Exp::from_integer(len as i64 + 1) => {}
        Some(n) => {
            return Err(Error::Unsupported(format!(
                "series known only to order {n}, need {}",
                len + 1
            )))
        }
        None => {}
    }
    if !rational_coeff(&f, 0)?.is_one() {
        return Err(Error::Unsupported(
            "product recognition requires f = 1 + O(q)".into(),
        ));
    }
    // h = q f' / f, exact to order len + 1.
    let h = f
        .q_dlog_numerator()
        .mul(&f.inv_to(Exp::from_integer(len as i64 + 1))?);
    let mut e: Vec<i64> = Vec::with_capacity(len);
    let mut e_big: Vec<BigRational> = Vec::with_capacity(len);
    for k in 1..=len as i64 {
        let b = rational_coeff(&h, k)?;
        let mut acc = -b;
        for d in 1..k {
            if k % d == 0 {
                acc -= BigRational::from_integer(BigInt::from(d)) * &e_big[(d - 1) as usize];
            }
        }
        let ek = acc / BigRational::from_integer(BigInt::from(k));
        if !ek.is_integer() {
            return Err(Error::NonIntegerExponent(format!(
                "exponent e_{k} = {ek} is not an integer"
            )));
        }
        let v = ek.to_integer().to_i64().ok_or_else(|| {
            Error::Unsupported(format!("exponent e_{k} does not fit in i64"))
        })?;
        e_big.push(ek);
        e.push(v);
    }
    Ok(e)
}

/// Smallest period P <= max_period such that e_{n+P} = e_n for every n
/// with both indices inside the slice. The slice should be at least
/// 2 * max_period long for the answer to be meaningful.
pub fn detect_period(exps: &[i64], max_period: usize) -> Result<usize> {
    'outer: for p in 1..=max_period.min(exps.len()) {
        for n in 0..exps.len().saturating_sub(p) {
            if exps[n] != exps[n + p] {
                continue 'outer;
            }
        }
        return Ok(p);
    }
    Err(Error::PeriodNotFound(format!(
        "no period <= {max_period} in {} exponents",
        exps.len()
    )))
}

/// A purely periodic product prod_{n>=1} (1 - q^n)^{e_n} with e_n
/// depending only on n mod period.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicProduct {
    pub period: usize,
    /// pattern[r] is the exponent for n === r + 1 (mod period); the last
    /// entry is the exponent of the multiples of the period.
    pub pattern: Vec<i64>,
}

impl PeriodicProduct {
    /// Render as a quotient of infinite Pochhammer symbols:
    /// (1 - q^n)^{e} for n === r (mod P) is (q^r; q^P)_oo^{e}.
    pub fn to_expr(&self) -> ProductExpr {
        let p = self.period as i64;
        let factors = self
            .pattern
            .iter()
            .enumerate()
            .filter(|(_, e)| **e != 0)
            .map(|(r, e)| ProdFactor {
                arg: PochArg::new(
                    QMono::q_pow(Exp::from_integer(r as i64 + 1)),
                    Exp::from_integer(p),
                ),
                sub: Subscript::Inf,
                power: *e as i32,
            })
            .collect();
        ProductExpr { scalar: QMono::q_pow(Exp::zero()), factors }
    }

    pub fn eval(&self, ctx: &EvalCtx) -> Result<QSeries> {
        eval_product(&self.to_expr(), ctx)
    }

    /// Canonical text like "(q^2;q^5)^-1 (q^3;q^5)^-1" for deterministic
    /// reporting and dedup.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (r, e) in self.pattern.iter().enumerate() {
            if *e == 0 {
                continue;
            }
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&format!("(q^{};q^{})^{}", r + 1, self.period, e));
        }
        if out.is_empty() {
            out.push('1');
        }
        out
    }
}

/// Recognize `f` as a purely periodic product with period <= max_period.
/// `f` must be known to order at least W + 1 with W = max(2*max_period, 32)
/// so the detected period is supported by a full window of exponents.
pub fn recognize_product(f: &QSeries, max_period: usize) -> Result<PeriodicProduct> {
    let window = (2 * max_period).max(32);
    let exps = prodmake(f, window)?;
    let period = detect_period(&exps, max_period)?;
    Ok(PeriodicProduct { period, pattern: exps[..period].to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfactors::poch_inf_list;

    #[test]
    fn partition_series_recognized() {
        // 1/(q;q)_oo -> period 1, pattern (-1).
        let ctx = EvalCtx::to_order(40);
        let f = poch_inf_list(&[QMono::q_pow(Exp::from_integer(1))], Exp::from_integer(1), &ctx)
            .unwrap()
            .inv()
            .unwrap();
        let p = recognize_product(&f, 3).unwrap();
        assert_eq!(p.period, 1);
        assert_eq!(p.pattern, alloc::vec![-1]);
    }

    #[test]
    fn rogers_ramanujan_product_pattern() {
        let ctx = EvalCtx::to_order(80);
        let f = poch_inf_list(
            &[
                QMono::q_pow(Exp::from_integer(1)),
                QMono::q_pow(Exp::from_integer(4)),
            ],
            Exp::from_integer(5),
            &ctx,
        )
        .unwrap()
        .inv()
        .unwrap();
        let p = recognize_product(&f, 8).unwrap();
        assert_eq!(p.period, 5);
        assert_eq!(p.pattern, alloc::vec![-1, 0, 0, -1, 0]);
        // Round trip.
        let back = p.eval(&EvalCtx::to_order(40)).unwrap();
        back.expect_equal(&f.truncate(Exp::from_integer(40))).unwrap();
    }

    #[test]
    fn pentagonal_series_is_euler_product() {
        let ctx = EvalCtx::to_order(40);
        let f = poch_inf_list(&[QMono::q_pow(Exp::from_integer(1))], Exp::from_integer(1), &ctx)
            .unwrap();
        let p = recognize_product(&f, 4).unwrap();
        assert_eq!((p.period, p.pattern.clone()), (1, alloc::vec![1]));
        assert_eq!(p.render(), "(q^1;q^1)^1");
    }

    #[test]
    fn non_integral_series_rejected() {
        // 1 + q/2 has e_1 = -1/2: not an integral product.
        let f = QSeries::one()
            .add(&QSeries::monomial(
                crate::coef::Coef::scalar(crate::cyclo::CycloRat::from_ratio(1, 2)),
                Exp::from_integer(1),
            ))
            .truncate(Exp::from_integer(40));
        assert!(matches!(
            prodmake(&f, 10),
            Err(Error::NonIntegerExponent(_))
        ));
    }
}
