//! Structured product expressions and their evaluation.
//!
//! An identity's product side is a quotient of Pochhammer symbols with a
//! monomial prefactor:
//!
//! ```text
//!   c * q^e * prod_f (arg_f; q^{d_f})_{s_f}^{e_f},    s_f in Z or infinity
//! ```
//!
//! [`eval_product`] expands one such expression exactly to the context
//! order; [`eval_sum_of_products`] adds several (for sides like
//! theta-quotient combinations written as a difference of two products).
//!
//! Factors with negative valuation (arguments like q^{-1}) would eat into
//! the truncation order under the valuation-aware multiplication rule, so
//! every factor is expanded at a boosted internal order computed from the
//! exact factor valuations; the final result is truncated back to the
//! requested order and is exact there.

use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::qfactors::{poch_finite, poch_inf, poch_val, PochArg, PochVal, QMono};
use crate::qseries::QSeries;
use crate::{Error, EvalCtx, Exp, Result};

/// Pochhammer subscript: a fixed integer or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subscript {
    Int(i64),
    Inf,
}

/// One Pochhammer factor raised to an integer power.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProdFactor {
    pub arg: PochArg,
    pub sub: Subscript,
    pub power: i32,
}

/// A monomial times a product of Pochhammer factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductExpr {
    pub scalar: QMono,
    pub factors: Vec<ProdFactor>,
}

impl ProductExpr {
    pub fn one() -> Self {
        ProductExpr { scalar: QMono::scalar_q(crate::cyclo::CycloRat::one(), Exp::zero()), factors: Vec::new() }
    }
}

/// Exact valuation of (arg; q^d)_infinity: the sum of min(0, e + d*j)
/// over j >= 0, which is finite because d > 0.
fn poch_inf_val(arg: &PochArg) -> Result<Exp> {
    let d = arg.base;
    if !d.is_positive() {
        return Err(Error::NonTruncating(alloc::format!(
            "infinite product factor {arg} has non-positive base"
        )));
    }
    let e = arg.mono.q_exp;
    let mut v = Exp::zero();
    let mut j = 0i64;
    loop {
        let shift = e + d * Exp::from_integer(j);
        if shift >= Exp::zero() {
            break;
        }
        v += shift;
        j += 1;
    }
    Ok(v)
}

/// Exact valuation contribution of one factor, accounting for its power.
/// Vanishing factors in the numerator make the whole product zero; in the
/// denominator they are poles.
enum FactorVal {
    Zero,
    Val(Exp),
}

fn factor_val(f: &ProdFactor) -> Result<FactorVal> {
    let v = match f.sub {
        Subscript::Inf => {
            // (arg; q^d)_oo vanishes iff some factor 1 - arg*q^{dj} is
            // identically zero, i.e. arg is exactly q^{-dj} for some j>=0.
            if f.arg.mono.params.is_one()
                && f.arg.mono.scalar == crate::cyclo::CycloRat::one()
                && f.arg.mono.q_exp <= Exp::zero()
                && (f.arg.mono.q_exp / f.arg.base).is_integer()
            {
                if f.power >= 0 {
                    return Ok(FactorVal::Zero);
                }
                return Err(Error::PoleInDenominator(alloc::format!(
                    "infinite product factor {} vanishes identically",
                    f.arg
                )));
            }
            poch_inf_val(&f.arg)?
        }
        Subscript::Int(n) => match poch_val(&f.arg, n) {
            PochVal::Zero => {
                if f.power >= 0 {
                    return Ok(FactorVal::Zero);
                }
                return Err(Error::PoleInDenominator(alloc::format!(
                    "factor {} vanishes at subscript {n}",
                    f.arg
                )));
            }
            PochVal::Pole => {
                if f.power >= 0 {
                    return Err(Error::PoleInDenominator(alloc::format!(
                        "negative-index extension of {} hits a pole at {n}",
                        f.arg
                    )));
                }
                return Ok(FactorVal::Zero);
            }
            PochVal::Val(v) => v,
        },
    };
    Ok(FactorVal::Val(v * Exp::from_integer(f.power as i64)))
}

/// Expand a product expression exactly to `ctx.order`.
pub fn eval_product(p: &ProductExpr, ctx: &EvalCtx) -> Result<QSeries> {
    if p.scalar.is_zero() {
        return Ok(QSeries::zero_to(ctx.order));
    }
    // Exact valuations drive the internal order boost.
    let mut vals = Vec::with_capacity(p.factors.len());
    for f in &p.factors {
        match factor_val(f)? {
            FactorVal::Zero => return Ok(QSeries::zero_to(ctx.order)),
            FactorVal::Val(v) => vals.push(v),
        }
    }
    let mut slack = -p.scalar.q_exp.min(Exp::zero());
    for v in vals {
        slack += -v.min(Exp::zero());
    }
    let inner = EvalCtx::new(ctx.order + slack, ctx.cap);

    let mut acc = p.scalar.to_series();
    acc = acc.truncate(inner.order);
    for f in &p.factors {
        let base = match f.sub {
            Subscript::Inf => poch_inf(&f.arg, &inner)?,
            Subscript::Int(n) => poch_finite(&f.arg, n, &inner)?,
        };
        let value = if f.power >= 0 {
            base.pow_capped(f.power as i64, inner.cap)?
        } else {
            base.inv_to_capped(inner.order, inner.cap)
                .map_err(|e| match e {
                    Error::NotInvertible(s) => Error::NeedsSpecialization(s),
                    other => other,
                })?
                .pow_capped((-f.power) as i64, inner.cap)?
        };
        acc = acc.mul_capped(&value, inner.cap);
    }
    Ok(acc.truncate(ctx.order))
}

/// Expand a sum of product expressions.
pub fn eval_sum_of_products(terms: &[ProductExpr], ctx: &EvalCtx) -> Result<QSeries> {
    let mut acc = QSeries::zero_to(ctx.order);
    for t in terms {
        acc = acc.add(&eval_product(t, ctx)?);
    }
    Ok(acc.truncate(ctx.order))
}
