//! The identity catalog: text format, parser, evaluator and verifier.
//!
//! # Text format
//!
//! The catalog is a plain-text file of records:
//!
//! ```text
//! [id rr-1]
//! note Rogers-Ramanujan, first identity
//! tags intro
//! side sum(n): q^(n^2) / (q;q)_n
//! side 1 / (q,q^4;q^5)_oo
//! proof 1/(q*z;q)_oo * theta(1; 2; 0; -1)
//! ```
//!
//! Directives:
//! - `[id NAME]` opens a record;
//! - `note`, `tags` are free-form metadata;
//! - `status proved|conjecture` (default `proved`);
//! - `order N` overrides the verification order for this record;
//! - `params poly M` verifies identities in formal parameters exactly per
//!   total parameter degree up to M;
//! - `spec a=-1, b=q^2` adds one monomial specialization (repeatable);
//! - `side EXPR` adds one side; a record needs at least two, and all
//!   sides must agree;
//! - `proof SCRIPT` attaches a constant-term replay script whose value
//!   must equal the record's sum side.
//!
//! # Expression grammar
//!
//! A side is a `+`/`-` combination of terms; a term multiplies and
//! divides factors. Factors are rationals, `q^(...)` monomials, single
//! letter formal parameters, Pochhammer symbols
//! `(arg1,arg2,...;q^d)_sub` (sub = integer, `oo`, or an affine form in
//! sum indices), and sums `sum(i,j): body`. Inside a sum body the
//! exponent of `q` may be any quadratic polynomial of the indices,
//! parameter and sign exponents (e.g. `(-1)^(i+j)`, `a^(2i+j)`) must be
//! affine, and Pochhammer subscripts must be affine.
//!
//! Proof scripts multiply factors of the shapes accepted by
//! [`crate::ctkit::run_ct`]: infinite Pochhammers whose argument contains
//! `z` (Euler product / inverse as written), z-free Pochhammers
//! (constant prefactors), monomials, `theta(c; d; s; beta)` for
//! `sum_k c^k q^{d k(k-1)/2 + s k} z^{beta k}`, and `geom(m)` for
//! `1/(1 - m)` with `m` containing `z`.

mod parse;

pub use parse::{parse_catalog, parse_proof, parse_side};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::coef::Param;
use crate::ctkit::{run_ct, CtFactor};
use crate::cyclo::CycloRat;
use crate::products::{eval_product, ProdFactor, ProductExpr};
use crate::qfactors::QMono;
use crate::qseries::QSeries;
use crate::summation::{eval_multisum, MultiSumSpec};
use crate::{Error, EvalCtx, Exp, Result};

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Proved,
    Conjecture,
}

/// One monomial specialization: substitute each parameter by a q-monomial.
#[derive(Clone, Debug)]
pub struct Specialization {
    pub subs: Vec<(Param, QMono)>,
}

#[derive(Clone, Debug)]
pub enum Strategy {
    /// No formal parameters (or none expected).
    None,
    /// Verify exactly per total parameter degree up to this cap.
    PolyDeg(u32),
    /// Verify after each of these specializations.
    Specializations(Vec<Specialization>),
}

/// One multiplicative factor of a side term.
#[derive(Clone, Debug)]
pub enum SideFactor {
    Poch(ProdFactor),
    Sum(MultiSumSpec),
}

/// A product of factors with a scalar and monomial prefactor.
#[derive(Clone, Debug)]
pub struct SideTerm {
    pub scalar: CycloRat,
    /// Parameter/q-power prefactor (its own scalar is 1).
    pub mono: QMono,
    pub factors: Vec<SideFactor>,
}

/// A side: a sum of terms.
#[derive(Clone, Debug)]
pub struct SideExpr {
    pub terms: Vec<SideTerm>,
}

#[derive(Clone, Debug)]
pub struct Record {
    pub id: String,
    pub note: String,
    pub tags: Vec<String>,
    pub status: Status,
    pub order: Option<i64>,
    pub strategy: Strategy,
    pub sides: Vec<SideExpr>,
    pub proof: Option<Vec<CtFactor>>,
}

impl Record {
    pub fn empty(id: String) -> Self {
        Record {
            id,
            note: String::new(),
            tags: Vec::new(),
            status: Status::Proved,
            order: None,
            strategy: Strategy::None,
            sides: Vec::new(),
            proof: None,
        }
    }

    /// All formal parameters appearing in any side.
    pub fn params(&self) -> Vec<Param> {
        let mut out: Vec<Param> = Vec::new();
        let mut push = |p: Param| {
            if !out.contains(&p) {
                out.push(p);
            }
        };
        for side in &self.sides {
            for term in &side.terms {
                for (p, _) in &term.mono.params.0 {
                    push(*p);
                }
                for f in &term.factors {
                    match f {
                        SideFactor::Poch(pf) => {
                            for (p, _) in &pf.arg.mono.params.0 {
                                push(*p);
                            }
                        }
                        SideFactor::Sum(s) => {
                            for p in s.param_list() {
                                push(p);
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// The shipped catalog text.
pub fn builtin_text() -> &'static str {
    include_str!("data.txt")
}

/// Parse the shipped catalog.
pub fn builtin() -> Result<Vec<Record>> {
    parse_catalog(builtin_text())
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

fn subst_qmono(m: &QMono, p: Param, value: &QMono) -> Result<QMono> {
    let (rest, k) = m.params.without(p);
    if k == 0 {
        return Ok(m.clone());
    }
    let vk = value.pow(k as i64)?;
    Ok(QMono::new(
        &m.scalar * &vk.scalar,
        rest.mul(&vk.params),
        m.q_exp + vk.q_exp,
    ))
}

fn subst_side(side: &SideExpr, spec: &Specialization) -> Result<SideExpr> {
    let mut out = side.clone();
    for (p, value) in &spec.subs {
        for term in &mut out.terms {
            let m = subst_qmono(&term.mono, *p, value)?;
            term.scalar = &term.scalar * &m.scalar;
            term.mono = QMono::new(CycloRat::one(), m.params, m.q_exp);
            for f in &mut term.factors {
                match f {
                    SideFactor::Poch(pf) => {
                        pf.arg.mono = subst_qmono(&pf.arg.mono, *p, value)?;
                    }
                    SideFactor::Sum(s) => {
                        *s = s.specialize(*p, &value.scalar, value.q_exp);
                        if value.has_params() {
                            return Err(Error::Unsupported(
                                "specialization values must be parameter-free".into(),
                            ));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluate one term at the given context, exact to `ctx.order`.
fn eval_term(term: &SideTerm, ctx: &EvalCtx) -> Result<QSeries> {
    // First pass at the requested order; if any factor has negative
    // valuation the product loses order, so re-evaluate with a boost.
    let eval_at = |inner: &EvalCtx| -> Result<(QSeries, Exp)> {
        let mut acc = QSeries::monomial(
            crate::coef::Coef::term(term.scalar.clone(), term.mono.params.clone()),
            term.mono.q_exp,
        )
        .truncate(inner.order);
        let mut neg_vals = -term.mono.q_exp.min(Exp::zero());
        let mut product = ProductExpr { scalar: QMono::q_pow(Exp::zero()), factors: Vec::new() };
        for f in &term.factors {
            match f {
                SideFactor::Poch(pf) => product.factors.push(pf.clone()),
                SideFactor::Sum(s) => {
                    let v = eval_multisum(s, inner)?;
                    if let Some(val) = v.val() {
                        neg_vals += -val.min(Exp::zero());
                    }
                    acc = acc.mul_capped(&v, inner.cap);
                }
            }
        }
        if !product.factors.is_empty() {
            let v = eval_product(&product, inner)?;
            if let Some(val) = v.val() {
                neg_vals += -val.min(Exp::zero());
            }
            acc = acc.mul_capped(&v, inner.cap);
        }
        Ok((acc, neg_vals))
    };
    let (first, slack) = eval_at(ctx)?;
    if slack.is_zero() {
        return Ok(first.truncate(ctx.order));
    }
    let boosted = EvalCtx::new(ctx.order + slack, ctx.cap);
    let (second, _) = eval_at(&boosted)?;
    Ok(second.truncate(ctx.order))
}

/// Evaluate a side, exact to `ctx.order`.
pub fn eval_side(side: &SideExpr, ctx: &EvalCtx) -> Result<QSeries> {
    let mut acc = QSeries::zero_to(ctx.order);
    for term in &side.terms {
        acc = acc.add(&eval_term(term, ctx)?);
    }
    match acc.trunc_order() {
        Some(n) if n < ctx.order => Err(Error::Unsupported(format!(
            "side evaluated only to order {n}, wanted {}",
            ctx.order
        ))),
        _ => Ok(acc.truncate(ctx.order)),
    }
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Default order for records without an override.
    pub order: i64,
    /// Total parameter degree for `params poly` records.
    pub param_degree: u32,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { order: 50, param_degree: 8 }
    }
}

/// Verify that all sides of the record agree. Exact: any coefficient
/// mismatch is an error carrying the first differing exponent.
pub fn verify_record(rec: &Record, opts: &VerifyOptions) -> Result<()> {
    if rec.sides.len() < 2 {
        return Err(Error::Parse(format!(
            "record '{}' has {} side(s), needs at least 2",
            rec.id,
            rec.sides.len()
        )));
    }
    let order = Exp::from_integer(rec.order.unwrap_or(opts.order));
    let params = rec.params();
    match (&rec.strategy, params.is_empty()) {
        (Strategy::None, true) => {
            let ctx = EvalCtx::new(order, None);
            compare_sides(&rec.sides, &ctx)
        }
        (Strategy::None, false) => Err(Error::NeedsSpecialization(format!(
            "record '{}' has parameters {:?} but no strategy",
            rec.id, params
        ))),
        (Strategy::PolyDeg(m), _) => {
            let cap = if *m == 0 { opts.param_degree } else { *m };
            let ctx = EvalCtx::new(order, Some(cap));
            compare_sides(&rec.sides, &ctx)
        }
        (Strategy::Specializations(list), _) => {
            let ctx = EvalCtx::new(order, None);
            for spec in list {
                let sides = rec
                    .sides
                    .iter()
                    .map(|s| subst_side(s, spec))
                    .collect::<Result<Vec<_>>>()?;
                compare_sides(&sides, &ctx)?;
            }
            Ok(())
        }
    }
}

fn compare_sides(sides: &[SideExpr], ctx: &EvalCtx) -> Result<()> {
    let base = eval_side(&sides[0], ctx)?;
    for side in &sides[1..] {
        let other = eval_side(side, ctx)?;
        base.expect_equal(&other)?;
    }
    Ok(())
}

/// Replay the record's constant-term proof at the given order and check
/// it against the record's sum side (the first side containing a sum).
pub fn check_proof(rec: &Record, order: i64) -> Result<()> {
    let factors = rec
        .proof
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("record '{}' has no proof", rec.id)))?;
    let ctx = EvalCtx::to_order(order);
    let ct = run_ct(factors, &ctx)?;
    let sum_side = rec
        .sides
        .iter()
        .find(|s| {
            s.terms
                .iter()
                .any(|t| t.factors.iter().any(|f| matches!(f, SideFactor::Sum(_))))
        })
        .ok_or_else(|| Error::Unsupported(format!("record '{}' has no sum side", rec.id)))?;
    let target = eval_side(sum_side, &ctx)?;
    ct.expect_equal(&target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_verify_rogers_ramanujan() {
        let text = "\
[id rr-1]
note first Rogers-Ramanujan identity
side sum(n): q^(n^2) / (q;q)_n
side 1 / (q,q^4;q^5)_oo
proof 1/(q*z;q)_oo * theta(1; 2; 0; -1)
";
        let records = parse_catalog(text).unwrap();
        assert_eq!(records.len(), 1);
        let opts = VerifyOptions { order: 40, param_degree: 8 };
        verify_record(&records[0], &opts).unwrap();
        check_proof(&records[0], 30).unwrap();
    }

    #[test]
    fn verify_detects_mutation() {
        let text = "\
[id broken]
side sum(n): q^(n^2+n) / (q;q)_n
side 1 / (q,q^4;q^5)_oo
";
        let records = parse_catalog(text).unwrap();
        let opts = VerifyOptions { order: 30, param_degree: 8 };
        match verify_record(&records[0], &opts) {
            Err(Error::Mismatch { exponent, .. }) => {
                assert_eq!(exponent, "1");
            }
            other => panic!("expected mismatch, got {other:?}"),
        }
    }

    #[test]
    fn poly_strategy_compares_with_parameters() {
        // Cauchy identity: sum_n a^n q^(n(n-1)/2) ... use the simple
        // q-binomial theorem instance (Euler):
        //   sum_n a^n q^(n(n-1)/2) / (q;q)_n = (-a;q)_oo  (a -> formal).
        let text = "\
[id euler-a]
params poly 6
side sum(n): a^n * q^(n*(n-1)/2) / (q;q)_n
side (a;q)_oo^-1
";
        // Wrong on purpose: (a;q)_oo^{-1} expands 1/(a;q)_oo which needs
        // a parameter inverse -> the record must fail cleanly, so instead
        // check the correct identity with (-a;q)_oo written as (-1*a;q)_oo.
        let bad = parse_catalog(text).unwrap();
        let opts = VerifyOptions { order: 25, param_degree: 6 };
        assert!(verify_record(&bad[0], &opts).is_err());

        let good = parse_catalog(
            "\
[id euler-b]
params poly 6
side sum(n): a^n * q^(n*(n-1)/2) / (q;q)_n
side (-a;q)_oo
",
        )
        .unwrap();
        verify_record(&good[0], &opts).unwrap();
    }

    #[test]
    fn specialization_strategy() {
        let text = "\
[id euler-spec]
spec a=q
spec a=-q^2
side sum(n): a^n * q^(n*(n-1)/2) / (q;q)_n
side (-a;q)_oo
";
        let records = parse_catalog(text).unwrap();
        let opts = VerifyOptions { order: 30, param_degree: 8 };
        verify_record(&records[0], &opts).unwrap();
    }

    #[test]
    fn multi_term_sides() {
        // (q;q)_oo + 1/(q;q)_oo - (q;q)_oo = 1/(q;q)_oo.
        let text = "\
[id combo]
side (q;q)_oo + (q;q)_oo^-1 - (q;q)_oo
side 1/(q;q)_oo
";
        let records = parse_catalog(text).unwrap();
        verify_record(&records[0], &VerifyOptions { order: 30, param_degree: 8 }).unwrap();
    }
}
