//! Replay of constant-term proofs.
//!
//! A sum side is proved by writing it as `CT[ F1 * F2 * ... * Fm ]` where
//! each factor has one of a few shapes whose z-expansion is finite at any
//! fixed q-order:
//!
//! - `EulerInv`: 1/(m z^s; q^d)_oo expanded by Euler's first identity
//!   sum_n (m z^s)^n / (q^d; q^d)_n (needs val(m) > 0 so the n-th
//!   coefficient climbs in q);
//! - `EulerProd`: (m z^s; q^d)_oo expanded by Euler's second identity
//!   sum_n (-1)^n q^{d n(n-1)/2} (m z^s)^n / (q^d; q^d)_n (always finite:
//!   the exponent is quadratic in n);
//! - `Kernel`: a bilateral theta sum_k c^k q^{d k(k-1)/2 + s k} z^{beta k};
//! - `ZMono`: a monomial m z^s;
//! - `Const`: a z-free product prefactor;
//! - `Geom`: a geometric factor 1/(1 - m z^s), handled out of band: after
//!   the remaining factors are multiplied into a series R with finite
//!   z-support, the geometric indices are enumerated exactly over the
//!   finitely many tuples whose combined z-power lands inside the support
//!   of R (all geometric z-powers must share a sign for this set to be
//!   finite).
//!
//! Every intermediate carries [`Window::All`], so the extracted constant
//! term is exact to the working order; a boosted internal order absorbs
//! negative-valuation monomials.

use alloc::format;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::products::{eval_product, ProductExpr};
use crate::qfactors::{poch_finite, theta_kernel, PochArg, QMono};
use crate::qseries::QSeries;
use crate::zqseries::{Window, ZQSeries};
use crate::{Error, EvalCtx, Exp, Result};

/// One factor of a constant-term integrand.
#[derive(Clone, Debug)]
pub enum CtFactor {
    /// 1/(mono * z^{z_pow}; q^{base})_oo.
    EulerInv { mono: QMono, z_pow: i64, base: Exp },
    /// (mono * z^{z_pow}; q^{base})_oo.
    EulerProd { mono: QMono, z_pow: i64, base: Exp },
    /// sum_{k in Z} c^k q^{base k(k-1)/2 + shift k} z^{z_pow k}.
    Kernel { c: crate::cyclo::CycloRat, base: Exp, shift: Exp, z_pow: i64 },
    /// mono * z^{z_pow}.
    ZMono { mono: QMono, z_pow: i64 },
    /// A z-free prefactor.
    Const(ProductExpr),
    /// 1/(1 - mono * z^{z_pow}).
    Geom { mono: QMono, z_pow: i64 },
}

/// Minimum q-valuation a factor's z-coefficients can reach (0 when they
/// cannot go negative); used to boost the internal working order.
fn factor_val_floor(f: &CtFactor) -> Exp {
    let quad_min = |d: Exp, e: Exp| -> Exp {
        // min over n >= 0 of d n(n-1)/2 + e n: scan around the real vertex.
        let two = Exp::from_integer(2);
        let vertex = (d / two - e) / d; // derivative d(n - 1/2) + e = 0
        let lo = vertex.floor().to_integer().max(0);
        let mut best = Exp::zero();
        for n in lo..=(lo + 1) {
            let v = d * Exp::new(n * (n - 1), 2) + e * Exp::from_integer(n);
            best = best.min(v);
        }
        best
    };
    match f {
        CtFactor::EulerInv { mono, .. } => {
            // val(m) > 0 is enforced at expansion; coefficients stay >= 0.
            mono.q_exp.min(Exp::zero())
        }
        CtFactor::EulerProd { mono, base, .. } => quad_min(*base, mono.q_exp),
        CtFactor::Kernel { base, shift, .. } => {
            // min over k in Z of d k(k-1)/2 + s k.
            let two = Exp::from_integer(2);
            let vertex = (*base / two - *shift) / *base;
            let lo = vertex.floor().to_integer();
            let mut best = Exp::zero();
            for k in lo..=(lo + 1) {
                let v = *base * Exp::new(k * (k - 1), 2) + *shift * Exp::from_integer(k);
                best = best.min(v);
            }
            best
        }
        CtFactor::ZMono { mono, .. } => mono.q_exp.min(Exp::zero()),
        CtFactor::Const(_) => Exp::zero(),
        CtFactor::Geom { mono, .. } => (mono.q_exp * Exp::from_integer(64)).min(Exp::zero()),
    }
}

/// Expand one non-geometric factor to a complete `ZQSeries` at `order`.
fn expand(f: &CtFactor, ctx: &EvalCtx) -> Result<ZQSeries> {
    let order = ctx.order;
    match f {
        CtFactor::EulerInv { mono, z_pow, base } => {
            if !mono.q_exp.is_positive() {
                return Err(Error::NonTruncating(format!(
                    "Euler inverse factor 1/({mono} z^{z_pow}; q^{base})_oo needs a \
                     positive q-power in the argument"
                )));
            }
            let mut terms = alloc::collections::BTreeMap::new();
            let mut n = 0i64;
            loop {
                let val = mono.q_exp * Exp::from_integer(n);
                if val >= order {
                    break;
                }
                let num = mono.pow(n)?;
                let den = poch_finite(
                    &PochArg::new(QMono::q_pow(*base), *base),
                    n,
                    ctx,
                )?;
                let coeff = num.to_series().mul_capped(&den.inv_to_capped(order, ctx.cap)?, ctx.cap);
                if !coeff.is_zero() {
                    terms.insert(z_pow * n, coeff.truncate(order));
                }
                n += 1;
            }
            Ok(ZQSeries::new(order, terms, Window::All))
        }
        CtFactor::EulerProd { mono, z_pow, base } => {
            if !base.is_positive() {
                return Err(Error::NonTruncating(format!(
                    "Euler product factor ({mono} z^{z_pow}; q^{base})_oo needs a \
                     positive base"
                )));
            }
            let mut terms = alloc::collections::BTreeMap::new();
            let mut n = 0i64;
            loop {
                let e = *base * Exp::new(n * (n - 1), 2) + mono.q_exp * Exp::from_integer(n);
                if e >= order {
                    // Quadratic exponent: once past the vertex it only grows.
                    let next =
                        *base * Exp::new((n + 1) * n, 2) + mono.q_exp * Exp::from_integer(n + 1);
                    if next >= e {
                        break;
                    }
                    n += 1;
                    continue;
                }
                let mut num = mono.pow(n)?;
                if n % 2 == 1 {
                    num = num.neg();
                }
                num.q_exp += *base * Exp::new(n * (n - 1), 2);
                let den = poch_finite(
                    &PochArg::new(QMono::q_pow(*base), *base),
                    n,
                    ctx,
                )?;
                let coeff = num.to_series().mul_capped(&den.inv_to_capped(order, ctx.cap)?, ctx.cap);
                if !coeff.is_zero() {
                    let w = z_pow * n;
                    let merged = match terms.get(&w) {
                        Some(prev) => QSeries::add(prev, &coeff),
                        None => coeff,
                    };
                    terms.insert(w, merged.truncate(order));
                }
                n += 1;
            }
            Ok(ZQSeries::new(order, terms, Window::All))
        }
        CtFactor::Kernel { c, base, shift, z_pow } => theta_kernel(*base, c, *shift, *z_pow, order),
        CtFactor::ZMono { mono, z_pow } => {
            Ok(ZQSeries::z_monomial(mono.coef(), mono.q_exp, *z_pow, order))
        }
        CtFactor::Const(p) => {
            let s = eval_product(p, ctx)?;
            Ok(ZQSeries::from_qseries(&s, order))
        }
        CtFactor::Geom { .. } => unreachable!("geometric factors are handled out of band"),
    }
}

/// Run a constant-term script: expand and multiply all factors, handle
/// geometric factors against the finite z-support of the rest, and
/// extract the coefficient of z^0, exact to `ctx.order`.
pub fn run_ct(factors: &[CtFactor], ctx: &EvalCtx) -> Result<QSeries> {
    // Boost the internal order so negative-valuation coefficients cannot
    // eat into the requested order during multiplication.
    let mut slack = Exp::zero();
    for f in factors {
        slack += -factor_val_floor(f).min(Exp::zero());
    }
    let inner = EvalCtx::new(ctx.order + slack, ctx.cap);

    let mut rest = ZQSeries::one(inner.order);
    let mut geoms: Vec<(&QMono, i64)> = Vec::new();
    for f in factors {
        if let CtFactor::Geom { mono, z_pow } = f {
            if *z_pow == 0 {
                return Err(Error::Unsupported(
                    "geometric factor needs a nonzero z-power".into(),
                ));
            }
            geoms.push((mono, *z_pow));
        } else {
            rest = rest.mul_capped(&expand(f, &inner)?, inner.cap);
        }
    }
    if geoms.is_empty() {
        return Ok(rest.ct()?.truncate(ctx.order));
    }
    // All geometric z-powers must share a sign so that only finitely many
    // index tuples can land back inside the support of `rest`.
    let all_pos = geoms.iter().all(|(_, s)| *s > 0);
    let all_neg = geoms.iter().all(|(_, s)| *s < 0);
    if !(all_pos || all_neg) {
        return Err(Error::Unsupported(
            "geometric factors with mixed z-power signs".into(),
        ));
    }
    let Some((lo, hi)) = rest.support() else {
        return Ok(QSeries::zero_to(ctx.order));
    };
    // CT[prod_i 1/(1 - m_i z^{s_i}) * R] =
    //   sum over n_i >= 0 with w = sum s_i n_i in [-hi, -lo] of
    //   (prod m_i^{n_i}) * [z^{-w... }] -- the tuple contributes the
    //   coefficient of z^{-sum s_i n_i} in R.
    let mut acc = QSeries::zero_to(inner.order);
    let mut stack: Vec<(usize, i64, QMono)> = alloc::vec![(0, 0, QMono::q_pow(Exp::zero()))];
    while let Some((idx, w, m)) = stack.pop() {
        if idx == geoms.len() {
            if (-hi..=-lo).contains(&w) {
                let coeff = rest.coeff_z(-w)?;
                acc = acc.add(&m.to_series().mul_capped(&coeff, inner.cap));
            }
            continue;
        }
        let (mono, s) = geoms[idx];
        let mut n = 0i64;
        loop {
            let w2 = w + s * n;
            // Once the partial z-power overshoots the reachable band on
            // the shared-sign side, no extension can return.
            if all_pos && w2 > -lo {
                break;
            }
            if all_neg && w2 < -hi {
                break;
            }
            let m2 = if n == 0 { m.clone() } else {
                let mut p = mono.pow(n)?;
                p.scalar = &p.scalar * &m.scalar;
                p.params = p.params.mul(&m.params);
                p.q_exp += m.q_exp;
                p
            };
            stack.push((idx + 1, w2, m2));
            n += 1;
        }
    }
    Ok(acc.truncate(ctx.order))
}
