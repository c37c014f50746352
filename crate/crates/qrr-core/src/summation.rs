//! Multi-dimensional q-hypergeometric sums with certified enumeration
//! cutoffs.
//!
//! A [`MultiSumSpec`] describes a sum over lattice points i in N^k of
//! terms
//!
//! ```text
//!   (prod_s c_s^{S_s(i)}) * (prod_p p^{L_p(i)}) * q^{Q(i)}
//!       * prod_f (arg_f; q^{d_f})_{n_f(i)}^{e_f}
//! ```
//!
//! with Q a rational quadratic polynomial, S_s / L_p / n_f integer-valued
//! affine forms, c_s cyclotomic scalars (signs like (-1)^{i+j}), p formal
//! parameters, and each factor a finite Pochhammer symbol raised to an
//! integer power (denominators use e_f = -1). A factor may be marked
//! *strict*, in which case the whole term vanishes whenever its subscript
//! is negative (instead of using the negative-index extension).
//!
//! Evaluation is provably complete to the requested order: before any term
//! is expanded, [`cutoff_bounds`] certifies per-axis bounds B_j such that
//! every lattice point with i_j >= B_j has exact term valuation above the
//! order or parameter degree above the cap. Certificates use exact
//! rational arithmetic only: a parameter-degree argument, an orthant
//! monomial bound (when all quadratic cross coefficients are nonnegative),
//! or a convex relaxation over the half-space i_j >= B (when the quadratic
//! part is positive semidefinite). A watchdog turns certification failure
//! into [`Error::NonSummable`] instead of unbounded enumeration.
//!
//! Inside the certified box every point is filtered by its *exact*
//! valuation (computed symbolically from [`poch_val`], never by expanding
//! series), so enumeration cost tracks the true support.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::coef::{Coef, Monomial, Param};
use crate::cyclo::CycloRat;
use crate::qfactors::{poch_finite, poch_val, PochArg, PochVal};
use crate::qseries::QSeries;
use crate::{Error, EvalCtx, Exp, Result};

// ---------------------------------------------------------------------------
// Affine and quadratic forms on the index lattice
// ---------------------------------------------------------------------------

/// An affine form c . i + constant with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinForm {
    pub coeffs: Vec<Exp>,
    pub constant: Exp,
}

impl LinForm {
    pub fn zero(rank: usize) -> Self {
        LinForm { coeffs: vec![Exp::zero(); rank], constant: Exp::zero() }
    }

    pub fn constant(rank: usize, c: Exp) -> Self {
        LinForm { coeffs: vec![Exp::zero(); rank], constant: c }
    }

    pub fn axis(rank: usize, j: usize) -> Self {
        let mut f = Self::zero(rank);
        f.coeffs[j] = Exp::from_integer(1);
        f
    }

    pub fn eval(&self, point: &[i64]) -> Exp {
        let mut acc = self.constant;
        for (c, i) in self.coeffs.iter().zip(point) {
            acc += *c * Exp::from_integer(*i);
        }
        acc
    }

    /// Evaluate at an integer point expecting an integer value.
    pub fn eval_int(&self, point: &[i64]) -> Result<i64> {
        let v = self.eval(point);
        if v.is_integer() {
            Ok(v.to_integer())
        } else {
            Err(Error::Unsupported(format!(
                "affine form takes non-integer value {v} at {point:?}"
            )))
        }
    }

    /// Minimum over the nonnegative orthant, None when unbounded below.
    fn orthant_min(&self) -> Option<Exp> {
        if self.coeffs.iter().any(Signed::is_negative) {
            None
        } else {
            Some(self.constant)
        }
    }
}

/// A rational quadratic polynomial i^T A i + L . i + c with A symmetric.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadForm {
    /// Symmetric k x k matrix (entries A[a][b]).
    pub a: Vec<Vec<Exp>>,
    pub lin: LinForm,
}

impl QuadForm {
    pub fn zero(rank: usize) -> Self {
        QuadForm {
            a: vec![vec![Exp::zero(); rank]; rank],
            lin: LinForm::zero(rank),
        }
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    pub fn eval(&self, point: &[i64]) -> Exp {
        let mut acc = self.lin.eval(point);
        for (r, row) in self.a.iter().enumerate() {
            for (c, entry) in row.iter().enumerate() {
                if !entry.is_zero() {
                    acc += *entry * Exp::from_integer(point[r] * point[c]);
                }
            }
        }
        acc
    }

    /// Add t * i_a * i_b (splitting symmetric off-diagonal entries).
    pub fn add_cross(&mut self, a: usize, b: usize, t: Exp) {
        if a == b {
            self.a[a][a] += t;
        } else {
            let half = t / Exp::from_integer(2);
            self.a[a][b] += half;
            self.a[b][a] += half;
        }
    }
}

// ---------------------------------------------------------------------------
// The sum specification
// ---------------------------------------------------------------------------

/// A root-of-unity (or rational) scalar raised to an affine power, e.g.
/// (-1)^{i+j} or zeta_4^{i}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalarPower {
    pub base: CycloRat,
    pub exponent: LinForm,
}

/// A formal parameter raised to an affine power, e.g. a^{i+j}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamPower {
    pub param: Param,
    pub exponent: LinForm,
}

/// A finite Pochhammer factor with an affine subscript.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumFactor {
    pub arg: PochArg,
    pub subscript: LinForm,
    /// Integer power; -1 for a denominator factor.
    pub power: i32,
    /// When true, the term vanishes if the subscript is negative.
    pub strict: bool,
}

/// A multi-sum over N^k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiSumSpec {
    pub rank: usize,
    /// Index metadata (n_1..n_k): for the classical family these are the
    /// bases of the standard denominators (q^{n_j}; q^{n_j})_{i_j}. Kept
    /// for canonicalization; evaluation uses only `factors`.
    pub index: Vec<i64>,
    pub quad: QuadForm,
    pub signs: Vec<ScalarPower>,
    pub params: Vec<ParamPower>,
    pub factors: Vec<SumFactor>,
}

impl MultiSumSpec {
    /// A bare spec with the standard denominators 1/(q^{n_j}; q^{n_j})_{i_j}.
    pub fn standard(index: Vec<i64>, quad: QuadForm) -> Self {
        let rank = index.len();
        assert_eq!(quad.rank(), rank);
        let factors = index
            .iter()
            .enumerate()
            .map(|(j, n)| SumFactor {
                arg: PochArg::new(
                    crate::qfactors::QMono::q_pow(Exp::from_integer(*n)),
                    Exp::from_integer(*n),
                ),
                subscript: LinForm::axis(rank, j),
                power: -1,
                strict: false,
            })
            .collect();
        MultiSumSpec {
            rank,
            index,
            quad,
            signs: Vec::new(),
            params: Vec::new(),
            factors,
        }
    }

    /// Formal parameters appearing in the spec (exponent forms or factor
    /// arguments).
    pub fn param_list(&self) -> Vec<Param> {
        let mut out: Vec<Param> = Vec::new();
        let mut push = |p: Param| {
            if !out.contains(&p) {
                out.push(p);
            }
        };
        for pp in &self.params {
            push(pp.param);
        }
        for f in &self.factors {
            for (p, _) in &f.arg.mono.params.0 {
                push(*p);
            }
        }
        out
    }

    /// Check that every parameter-power exponent is nonnegative on the
    /// orthant (otherwise the sum is not a polynomial in its parameters and
    /// must be specialized first).
    fn check_param_nonneg(&self) -> Result<()> {
        for pp in &self.params {
            if pp.exponent.coeffs.iter().any(Signed::is_negative)
                || pp.exponent.constant.is_negative()
            {
                return Err(Error::NeedsSpecialization(format!(
                    "parameter {} appears with exponent form that can go negative",
                    pp.param
                )));
            }
        }
        Ok(())
    }

    /// Substitute a parameter by a q-monomial c * q^e throughout the spec:
    /// p^{L(i)} becomes c^{L(i)} * q^{e L(i)}, and occurrences inside
    /// factor arguments are replaced in the argument monomial.
    pub fn specialize(&self, p: Param, c: &CycloRat, e: Exp) -> MultiSumSpec {
        let mut out = self.clone();
        out.params.retain(|pp| pp.param != p);
        for pp in &self.params {
            if pp.param == p {
                out.signs.push(ScalarPower { base: c.clone(), exponent: pp.exponent.clone() });
                for (j, coef) in pp.exponent.coeffs.iter().enumerate() {
                    out.quad.lin.coeffs[j] += e * *coef;
                }
                out.quad.lin.constant += e * pp.exponent.constant;
            }
        }
        for f in &mut out.factors {
            let (rest, k) = f.arg.mono.params.without(p);
            if k > 0 {
                f.arg.mono.params = rest;
                f.arg.mono.scalar = &f.arg.mono.scalar * &c.pow(k as i64).expect("nonneg");
                f.arg.mono.q_exp += e * Exp::from_integer(k as i64);
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Exact term valuation
// ---------------------------------------------------------------------------

/// Exact valuation data for a single term.
pub enum TermVal {
    /// The term is identically zero (a vanishing numerator factor or a
    /// strict factor with a negative subscript).
    Zero,
    /// The term has this exact q-valuation and these exact parameter
    /// exponents (from the parameter powers; factor arguments can only add
    /// degree).
    Val { q_val: Exp, param_deg: i64 },
}

/// Compute the exact valuation of the term at `point` without expanding
/// any series.
pub fn term_val(spec: &MultiSumSpec, point: &[i64]) -> Result<TermVal> {
    let mut q_val = spec.quad.eval(point);
    for f in &spec.factors {
        let n = f.subscript.eval_int(point)?;
        if n < 0 && f.strict {
            return Ok(TermVal::Zero);
        }
        match poch_val(&f.arg, n) {
            PochVal::Zero => {
                if f.power >= 0 {
                    return Ok(TermVal::Zero);
                }
                return Err(Error::PoleInDenominator(format!(
                    "factor {} vanishes at subscript {n}",
                    f.arg
                )));
            }
            PochVal::Pole => {
                if f.power >= 0 {
                    return Err(Error::PoleInDenominator(format!(
                        "negative-index extension of {} hits a pole at {n}",
                        f.arg
                    )));
                }
                // A pole in a denominator position is a zero of the term.
                return Ok(TermVal::Zero);
            }
            PochVal::Val(v) => q_val += v * Exp::from_integer(f.power as i64),
        }
    }
    let mut param_deg: i64 = 0;
    for pp in &spec.params {
        let d = pp.exponent.eval_int(point)?;
        if d < 0 {
            return Err(Error::NeedsSpecialization(format!(
                "parameter {} has negative exponent {d} at {point:?}",
                pp.param
            )));
        }
        param_deg += d;
    }
    Ok(TermVal::Val { q_val, param_deg })
}

/// Expand the term at `point` as a series (used by `eval_multisum` and by
/// the CT kit's target comparisons). `cache` memoizes Pochhammer values
/// (keyed by factor position and subscript) across points.
pub fn term(
    spec: &MultiSumSpec,
    point: &[i64],
    ctx: &EvalCtx,
    cache: &mut BTreeMap<(usize, i64), QSeries>,
) -> Result<QSeries> {
    match term_val(spec, point)? {
        TermVal::Zero => return Ok(QSeries::zero()),
        TermVal::Val { .. } => {}
    }
    // Scalar prefactor.
    let mut scalar = CycloRat::one();
    for s in &spec.signs {
        scalar = &scalar * &s.base.pow(s.exponent.eval_int(point)?)?;
    }
    if scalar.is_zero() {
        return Ok(QSeries::zero());
    }
    // Parameter monomial.
    let mut mono = Monomial::one();
    for pp in &spec.params {
        let d = pp.exponent.eval_int(point)?;
        debug_assert!(d >= 0);
        mono = mono.mul(&Monomial::param_pow(pp.param, d as u32));
    }
    let mut acc = QSeries::monomial(Coef::term(scalar, mono), spec.quad.eval(point));
    for (fi, f) in spec.factors.iter().enumerate() {
        let n = f.subscript.eval_int(point)?;
        let key = (fi, n);
        let value = match cache.get(&key) {
            Some(v) => v.clone(),
            None => {
                let base = poch_finite(&f.arg, n, ctx)?;
                let v = match f.power {
                    1 => base,
                    -1 => base.inv_to_capped(ctx.order, ctx.cap).map_err(|e| match e {
                        Error::NotInvertible(_) => Error::PoleInDenominator(format!(
                            "factor {} is zero to the working order at subscript {n}",
                            f.arg
                        )),
                        other => other,
                    })?,
                    p if p >= 0 => base.pow_capped(p as i64, ctx.cap)?,
                    p => base
                        .inv_to_capped(ctx.order, ctx.cap)?
                        .pow_capped((-p) as i64, ctx.cap)?,
                };
                cache.insert(key, v.clone());
                v
            }
        };
        acc = acc.mul_capped(&value, ctx.cap);
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Certified cutoffs
// ---------------------------------------------------------------------------

/// How one axis bound was certified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundRoute {
    /// Parameter degree: i_j >= B forces deg >= `reaches` > cap.
    ParamDegree { param: Param, reaches: i64 },
    /// All quadratic cross coefficients are nonnegative; per-axis
    /// completed squares give q-valuation lower bound `lower` > order.
    OrthantMonomial { lower: Exp },
    /// PSD quadratic part; convex minimization over the half-space
    /// i_j >= B gives q-valuation lower bound `lower` > order.
    ConvexHalfspace { lower: Exp },
    /// PSD quadratic part with orthant-nonnegative linear part; the SOS
    /// squares with nonnegative vectors give lower bound `lower` > order.
    OrthantSos { lower: Exp },
    /// PSD quadratic part; exact convex minimization over the cone
    /// {i >= 0, i_j >= B} by active-set enumeration gives `lower` > order.
    OrthantConvex { lower: Exp },
}

/// A certified per-axis bound: every point with i_j >= bound is irrelevant
/// at the requested (order, cap).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxisBound {
    pub axis: usize,
    pub bound: i64,
    pub route: BoundRoute,
}

/// The full cutoff certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutoffCertificate {
    pub bounds: Vec<AxisBound>,
    /// Constant lower bound on the total factor valuation contribution
    /// (exact, from per-factor minimization over achievable subscripts).
    pub factor_floor: Exp,
}

/// Constant lower bound for a factor's valuation contribution
/// power * val((arg; q^d)_n) over every achievable subscript value n.
/// `n_lo` is a lower bound for the subscript over the orthant (None when
/// unbounded below).
fn factor_floor(f: &SumFactor, n_lo: Option<i64>) -> Result<Exp> {
    let e = f.arg.mono.q_exp;
    let d = f.arg.base;
    if !d.is_positive() {
        return Err(Error::NonTruncating(format!(
            "factor {} has non-positive base",
            f.arg
        )));
    }
    if f.arg.mono.is_zero() {
        return Ok(Exp::zero());
    }
    // Saturation index: smallest j >= 0 with e + d*j >= 0; beyond it the
    // per-factor valuation is constant in the positive direction.
    let j_sat = if e >= Exp::zero() {
        0
    } else {
        // ceil(-e / d)
        let r = -e / d;
        let mut j = r.to_integer();
        if Exp::from_integer(j) < r {
            j += 1;
        }
        j.max(0)
    };
    let scan_lo = match n_lo {
        Some(lo) => {
            if f.strict {
                lo.max(0)
            } else {
                lo
            }
        }
        None => {
            if f.strict {
                0
            } else if f.power < 0 {
                // 1/(a;q)_n with n -> -infinity has valuation -> -infinity:
                // no constant floor exists.
                return Err(Error::NonSummable(format!(
                    "denominator factor {} has a subscript unbounded below",
                    f.arg
                )));
            } else {
                // Numerator factors with n < 0 have nonnegative valuation
                // contribution, so scanning n in [-1 .. j_sat + 1] together
                // with the 0 floor below covers all n.
                -1
            }
        }
    };
    let scan_hi = (j_sat + 1).max(scan_lo);
    // For n beyond j_sat the positive-direction value is constant, and in
    // the unbounded-numerator case contributions below scan_lo are >= 0,
    // so starting the floor at 0 and scanning the window below is exact.
    let mut floor = Exp::zero();
    for n in scan_lo..=scan_hi {
        if f.strict && n < 0 {
            continue;
        }
        match poch_val(&f.arg, n) {
            PochVal::Zero | PochVal::Pole => continue, // vanishing terms are irrelevant
            PochVal::Val(v) => {
                let contrib = v * Exp::from_integer(f.power as i64);
                if contrib < floor {
                    floor = contrib;
                }
            }
        }
    }
    Ok(floor)
}

/// Gaussian elimination utilities over Exp for the convex route (k <= 4,
/// small entries; i64 rationals are ample).
mod lin {
    use super::Exp;
    use alloc::vec::Vec;
    use num_traits::Zero;

    /// Solve M x = b; returns (particular solution, null-space basis) or
    /// None when inconsistent.
    pub fn solve(m: &[Vec<Exp>], b: &[Exp]) -> Option<(Vec<Exp>, Vec<Vec<Exp>>)> {
        let rows = m.len();
        let cols = if rows == 0 { 0 } else { m[0].len() };
        let mut aug: Vec<Vec<Exp>> = m
            .iter()
            .zip(b)
            .map(|(r, bb)| {
                let mut row = r.clone();
                row.push(*bb);
                row
            })
            .collect();
        let mut pivot_col: Vec<Option<usize>> = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            let mut pr = None;
            for rr in r..rows {
                if !aug[rr][c].is_zero() {
                    pr = Some(rr);
                    break;
                }
            }
            let Some(pr) = pr else {
                continue;
            };
            aug.swap(r, pr);
            let piv = aug[r][c];
            for x in aug[r].iter_mut() {
                *x /= piv;
            }
            for rr in 0..rows {
                if rr != r && !aug[rr][c].is_zero() {
                    let factor = aug[rr][c];
                    for cc in 0..=cols {
                        let sub = factor * aug[r][cc];
                        aug[rr][cc] -= sub;
                    }
                }
            }
            pivot_col.push(Some(c));
            r += 1;
            if r == rows {
                break;
            }
        }
        // Consistency: zero rows must have zero rhs.
        for rr in r..rows {
            if !aug[rr][cols].is_zero() {
                return None;
            }
        }
        let pivots: Vec<usize> = pivot_col.into_iter().flatten().collect();
        let mut x = alloc::vec![Exp::zero(); cols];
        for (ri, &c) in pivots.iter().enumerate() {
            x[c] = aug[ri][cols];
        }
        let mut null = Vec::new();
        for free in 0..cols {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = alloc::vec![Exp::zero(); cols];
            v[free] = Exp::from_integer(1);
            for (ri, &c) in pivots.iter().enumerate() {
                v[c] = -aug[ri][free];
            }
            null.push(v);
        }
        Some((x, null))
    }
}

/// Lower bound of x^T A x + L.x over the half-space {x_j >= B} (x
/// otherwise free), for PSD A. Returns None when the relaxation is
/// unbounded below.
fn halfspace_min(a: &[Vec<Exp>], l: &[Exp], j: usize, bound: Exp) -> Option<Exp> {
    let k = a.len();
    // Unconstrained stationary set: 2 A x = -L.
    let two_a: Vec<Vec<Exp>> = a
        .iter()
        .map(|row| row.iter().map(|v| *v * Exp::from_integer(2)).collect())
        .collect();
    let neg_l: Vec<Exp> = l.iter().map(|v| -*v).collect();
    match lin::solve(&two_a, &neg_l) {
        None => None, // linear part escapes the range: -infinity
        Some((x0, null)) => {
            let value_at = |x: &[Exp]| -> Exp {
                // f(x*) = (1/2) L . x* at a stationary point.
                let mut acc = Exp::zero();
                for (la, xa) in l.iter().zip(x) {
                    acc += *la * *xa;
                }
                acc / Exp::from_integer(2)
            };
            // Can the stationary set reach x_j >= B?
            let reachable = x0[j] >= bound || null.iter().any(|v| !v[j].is_zero());
            if reachable {
                return Some(value_at(&x0));
            }
            // Otherwise the minimum over the half-space sits on x_j = B.
            // Substitute and recurse on the reduced quadratic.
            if k == 1 {
                return Some(a[0][0] * bound * bound + l[0] * bound);
            }
            let mut ra: Vec<Vec<Exp>> = Vec::with_capacity(k - 1);
            let mut rl: Vec<Exp> = Vec::with_capacity(k - 1);
            for r in 0..k {
                if r == j {
                    continue;
                }
                let mut row = Vec::with_capacity(k - 1);
                for c in 0..k {
                    if c == j {
                        continue;
                    }
                    row.push(a[r][c]);
                }
                ra.push(row);
                rl.push(l[r] + Exp::from_integer(2) * a[r][j] * bound);
            }
            let c0 = a[j][j] * bound * bound + l[j] * bound;
            // Reduced problem is unconstrained (PSD restriction of a PSD
            // matrix): stationary value or -infinity.
            let two_ra: Vec<Vec<Exp>> = ra
                .iter()
                .map(|row| row.iter().map(|v| *v * Exp::from_integer(2)).collect())
                .collect();
            let neg_rl: Vec<Exp> = rl.iter().map(|v| -*v).collect();
            match lin::solve(&two_ra, &neg_rl) {
                None => None,
                Some((x, _)) => {
                    let mut acc = Exp::zero();
                    for (la, xa) in rl.iter().zip(&x) {
                        acc += *la * *xa;
                    }
                    Some(c0 + acc / Exp::from_integer(2))
                }
            }
        }
    }
}

/// Exact minimum of x^T A x + L.x over the cone {x >= 0, x_j >= B} for
/// PSD A, by active-set enumeration: the minimum (when attained) sits in
/// the relative interior of some face, where it is a stationary point of
/// the restriction to the face's affine span; every span-stationary value
/// is itself a lower bound over that span. Returns None when the problem
/// may be unbounded below (recession descent direction not excluded).
fn orthant_convex_min(a: &[Vec<Exp>], l: &[Exp], j: usize, bound: Exp) -> Option<Exp> {
    let k = a.len();
    if k > 8 {
        return None;
    }
    // Recession check: f is unbounded below on the cone iff there is a
    // d >= 0 with A d = 0 and L.d < 0 (A PSD). The cone's recession cone
    // is {d >= 0}; faces only shrink it.
    let zero_rhs = alloc::vec![Exp::zero(); k];
    let (_, null) = lin::solve(a, &zero_rhs)?;
    match null.len() {
        0 => {}
        1 => {
            let v = &null[0];
            let lv: Exp = l.iter().zip(v).map(|(la, va)| *la * *va).sum();
            let all_nonneg = v.iter().all(|x| !x.is_negative());
            let all_nonpos = v.iter().all(|x| !x.is_positive());
            if (all_nonneg && lv.is_negative()) || (all_nonpos && lv.is_positive()) {
                return None;
            }
        }
        _ => {
            // Only certify when L is orthogonal to the whole null space
            // (then L.d = 0 along every flat direction).
            for v in &null {
                let lv: Exp = l.iter().zip(v).map(|(la, va)| *la * *va).sum();
                if !lv.is_zero() {
                    return None;
                }
            }
        }
    }
    let lows: Vec<Exp> = (0..k)
        .map(|x| if x == j { bound } else { Exp::zero() })
        .collect();
    let value_at = |x: &[Exp]| -> Exp {
        let mut acc = Exp::zero();
        for r in 0..k {
            acc += l[r] * x[r];
            for c in 0..k {
                acc += x[r] * a[r][c] * x[c];
            }
        }
        acc
    };
    // The minimum (attained, by the recession check) sits in the relative
    // interior of some face, where it is a *feasible* stationary point of
    // the restriction to the face's span. Enumerate faces; keep only
    // stationary values whose stationary set meets the face.
    let mut best: Option<Exp> = None;
    for mask in 0u32..(1u32 << k) {
        let fixed = |x: usize| mask & (1 << x) != 0;
        let free: Vec<usize> = (0..k).filter(|&x| !fixed(x)).collect();
        let mut x = lows.clone();
        if !free.is_empty() {
            // Stationary point of the restriction: 2 A_ff x_f = -(L_f +
            // 2 A_fc x_c).
            let mut sys: Vec<Vec<Exp>> = Vec::with_capacity(free.len());
            let mut rhs: Vec<Exp> = Vec::with_capacity(free.len());
            for &r in &free {
                let row: Vec<Exp> = free
                    .iter()
                    .map(|&c| Exp::from_integer(2) * a[r][c])
                    .collect();
                let mut b = -l[r];
                for c in 0..k {
                    if fixed(c) {
                        b -= Exp::from_integer(2) * a[r][c] * lows[c];
                    }
                }
                sys.push(row);
                rhs.push(b);
            }
            let Some((xf, null_f)) = lin::solve(&sys, &rhs) else {
                // No stationary point on this span: the face's infimum
                // sits on its boundary, covered by larger masks.
                continue;
            };
            let feasible = |xf: &[Exp]| -> bool {
                free.iter().zip(xf).all(|(&r, v)| *v >= lows[r])
            };
            if !feasible(&xf) {
                // All stationary points share one value, so feasibility of
                // any point of the stationary set suffices.
                match null_f.len() {
                    0 => continue,
                    1 => {
                        // x = xf + t v: intersect the per-coordinate t
                        // ranges.
                        let v = &null_f[0];
                        let mut t_lo: Option<Exp> = None;
                        let mut t_hi: Option<Exp> = None;
                        let mut empty = false;
                        for (idx, &r) in free.iter().enumerate() {
                            let gap = lows[r] - xf[idx];
                            let vr = v[idx];
                            if vr.is_zero() {
                                if gap.is_positive() {
                                    empty = true;
                                    break;
                                }
                            } else if vr.is_positive() {
                                let t = gap / vr;
                                t_lo = Some(t_lo.map_or(t, |c: Exp| c.max(t)));
                            } else {
                                let t = gap / vr;
                                t_hi = Some(t_hi.map_or(t, |c: Exp| c.min(t)));
                            }
                        }
                        if empty
                            || matches!((t_lo, t_hi), (Some(lo), Some(hi)) if lo > hi)
                        {
                            continue;
                        }
                    }
                    // Cannot decide feasibility exactly: refuse to certify
                    // rather than risk dropping the minimizing face.
                    _ => return None,
                }
            }
            for (&r, v) in free.iter().zip(&xf) {
                x[r] = *v;
            }
        }
        let v = value_at(&x);
        best = Some(match best {
            Some(b) if b <= v => b,
            _ => v,
        });
    }
    best
}

/// Pivoted symmetric (LDL-style) decomposition: when A is positive
/// semidefinite, returns weights and vectors with A = sum_r lam_r w_r
/// w_r^T, lam_r > 0; returns None when A is not PSD.
fn ldl(a: &[Vec<Exp>]) -> Option<Vec<(Exp, Vec<Exp>)>> {
    let k = a.len();
    let mut m: Vec<Vec<Exp>> = a.to_vec();
    let mut done = vec![false; k];
    let mut out: Vec<(Exp, Vec<Exp>)> = Vec::new();
    loop {
        // Find a positive diagonal pivot among unfinished rows.
        let mut pivot = None;
        let mut all_zero = true;
        for r in 0..k {
            if done[r] {
                continue;
            }
            if m[r][r].is_positive() {
                pivot = Some(r);
            }
            if m[r][r].is_negative() {
                return None;
            }
            for c in 0..k {
                if !done[c] && !m[r][c].is_zero() {
                    all_zero = false;
                }
            }
        }
        if all_zero {
            return Some(out);
        }
        let Some(p) = pivot else {
            // All remaining diagonals are zero but some entry is not:
            // a PSD matrix with a zero diagonal entry has a zero row.
            return None;
        };
        let piv = m[p][p];
        let w: Vec<Exp> = m[p].iter().map(|v| *v / piv).collect();
        for r in 0..k {
            if done[r] || r == p {
                continue;
            }
            let factor = m[r][p];
            for c in 0..k {
                if done[c] {
                    continue;
                }
                let sub = factor * w[c];
                m[r][c] -= sub;
            }
        }
        for c in 0..k {
            m[p][c] = Exp::zero();
            m[c][p] = Exp::zero();
        }
        done[p] = true;
        out.push((piv, w));
    }
}

/// Certify per-axis cutoff bounds for (order, cap). See the module docs.
pub fn cutoff_bounds(spec: &MultiSumSpec, ctx: &EvalCtx) -> Result<CutoffCertificate> {
    spec.check_param_nonneg()?;
    let k = spec.rank;
    // Constant floor over all factors.
    let mut floor = Exp::zero();
    for f in &spec.factors {
        let n_lo = f
            .subscript
            .orthant_min()
            .map(|v| v.floor().to_integer());
        floor += factor_floor(f, n_lo)?;
    }
    let a = &spec.quad.a;
    let l = &spec.quad.lin.coeffs;
    let c0 = spec.quad.lin.constant + floor;
    let order = ctx.order;

    let crosses_nonneg = (0..k).all(|r| (0..k).all(|c| r == c || !a[r][c].is_negative()));
    let sos = ldl(a);

    // Per-axis 1-D minimum of A_aa x^2 + L_a x over x >= lo (reals).
    let one_d_min = |aa: Exp, la: Exp, lo: Exp| -> Option<Exp> {
        if aa.is_zero() {
            if la.is_negative() {
                None
            } else {
                Some(la * lo)
            }
        } else {
            let vertex = -la / (Exp::from_integer(2) * aa);
            let at = |x: Exp| aa * x * x + la * x;
            if vertex >= lo {
                Some(at(vertex))
            } else {
                Some(at(lo))
            }
        }
    };

    let mut bounds = Vec::with_capacity(k);
    'axes: for j in 0..k {
        // Route (a): a parameter cap bound.
        if let Some(cap) = ctx.cap {
            for pp in &spec.params {
                let cj = pp.exponent.coeffs[j];
                if cj.is_positive()
                    && pp.exponent.coeffs.iter().all(|c| !c.is_negative())
                    && !pp.exponent.constant.is_negative()
                {
                    // deg >= cj * B once i_j >= B; need cj * B > cap.
                    let b = (Exp::from_integer(cap as i64 + 1) / cj).ceil().to_integer().max(1);
                    bounds.push(AxisBound {
                        axis: j,
                        bound: b,
                        route: BoundRoute::ParamDegree {
                            param: pp.param,
                            reaches: (cj * Exp::from_integer(b)).floor().to_integer(),
                        },
                    });
                    continue 'axes;
                }
            }
        }
        // Routes (b) and (c): grow B geometrically, then refine.
        let certify = |b: i64| -> Option<BoundRoute> {
            if crosses_nonneg {
                let mut total = c0;
                let mut ok = true;
                for x in 0..k {
                    let lo = if x == j { Exp::from_integer(b) } else { Exp::zero() };
                    match one_d_min(a[x][x], l[x], lo) {
                        Some(v) => total += v,
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok && total >= order {
                    return Some(BoundRoute::OrthantMonomial { lower: total });
                }
            }
            if let Some(sos) = &sos {
                if let Some(v) = halfspace_min(a, l, j, Exp::from_integer(b)) {
                    let total = v + c0;
                    if total >= order {
                        return Some(BoundRoute::ConvexHalfspace { lower: total });
                    }
                }
                // Orthant SOS: with A = sum lam w w^T (PSD) and all linear
                // coefficients nonnegative, on {i >= 0, i_j >= B} each
                // square with w >= 0 satisfies (w.i) >= w_j B and the
                // linear part satisfies L.i >= L_j B.
                if l.iter().all(|c| !c.is_negative()) {
                    let bb = Exp::from_integer(b);
                    let mut total = c0 + l[j] * bb;
                    for (lam, w) in sos {
                        if w.iter().all(|x| !x.is_negative()) && w[j].is_positive() {
                            let t = w[j] * bb;
                            total += *lam * t * t;
                        }
                    }
                    if total >= order {
                        return Some(BoundRoute::OrthantSos { lower: total });
                    }
                }
                if let Some(v) = orthant_convex_min(a, l, j, Exp::from_integer(b)) {
                    let total = v + c0;
                    if total >= order {
                        return Some(BoundRoute::OrthantConvex { lower: total });
                    }
                }
            }
            None
        };
        let mut b = 1i64;
        let watchdog = 1 << 22;
        let found = loop {
            if let Some(route) = certify(b) {
                break Some((b, route));
            }
            if b > watchdog {
                break None;
            }
            b *= 2;
        };
        let Some((mut hi, _)) = found else {
            return Err(Error::NonSummable(format!(
                "no certificate for axis {j}: valuation and parameter degree \
                 stay bounded along it (order {order}, cap {:?})",
                ctx.cap
            )));
        };
        // Binary refine to the smallest certified bound.
        let mut lo = hi / 2;
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if certify(mid).is_some() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let route = certify(hi).expect("certified above");
        bounds.push(AxisBound { axis: j, bound: hi, route });
    }
    Ok(CutoffCertificate { bounds, factor_floor: floor })
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluate the multi-sum to `ctx.order` (with the parameter-degree cap of
/// the context), with certified completeness.
pub fn eval_multisum(spec: &MultiSumSpec, ctx: &EvalCtx) -> Result<QSeries> {
    let cert = cutoff_bounds(spec, ctx)?;
    let box_hi: Vec<i64> = cert.bounds.iter().map(|b| b.bound).collect();

    // Pass 1: collect relevant points and the worst (most negative)
    // quadratic value among them, to size the internal working order.
    let mut points: Vec<Vec<i64>> = Vec::new();
    let mut quad_min = Exp::zero();
    let mut cursor = vec![0i64; spec.rank];
    loop {
        match term_val(spec, &cursor)? {
            TermVal::Zero => {}
            TermVal::Val { q_val, param_deg } => {
                let deg_ok = match ctx.cap {
                    Some(cap) => param_deg <= cap as i64,
                    None => true,
                };
                if deg_ok && q_val < ctx.order {
                    quad_min = quad_min.min(spec.quad.eval(&cursor));
                    points.push(cursor.clone());
                }
            }
        }
        // Odometer increment over the box.
        let mut axis = 0;
        loop {
            if axis == spec.rank {
                break;
            }
            cursor[axis] += 1;
            if cursor[axis] < box_hi[axis] {
                break;
            }
            cursor[axis] = 0;
            axis += 1;
        }
        if axis == spec.rank {
            break;
        }
    }

    // Slack: factors and the quadratic prefactor can sit at negative
    // valuations, which the multiplication rule converts into lost order;
    // evaluate everything at a boosted internal order to compensate.
    let mut slack = -quad_min.min(Exp::zero());
    for f in &spec.factors {
        let n_lo = f.subscript.orthant_min().map(|v| v.floor().to_integer());
        let fl = factor_floor(f, n_lo)?;
        slack += -fl.min(Exp::zero());
    }
    let inner = EvalCtx::new(ctx.order + slack, ctx.cap);

    let mut cache: BTreeMap<(usize, i64), QSeries> = BTreeMap::new();
    let mut acc = QSeries::zero_to(ctx.order);
    for p in &points {
        acc = acc.add(&term(spec, p, &inner, &mut cache)?);
    }
    Ok(acc.truncate(ctx.order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfactors::{poch_inf_list, QMono};

    fn rr_spec(shift: i64) -> MultiSumSpec {
        // sum_n q^{n^2 + shift*n} / (q;q)_n
        let mut quad = QuadForm::zero(1);
        quad.a[0][0] = Exp::from_integer(1);
        quad.lin.coeffs[0] = Exp::from_integer(shift);
        MultiSumSpec::standard(vec![1], quad)
    }

    #[test]
    fn rogers_ramanujan_first_sum() {
        // sum q^{n^2}/(q;q)_n = 1/((q;q^5)(q^4;q^5))_oo to order 30
        let ctx = EvalCtx::to_order(30);
        let lhs = eval_multisum(&rr_spec(0), &ctx).unwrap();
        let rhs = poch_inf_list(
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
        lhs.expect_equal(&rhs).unwrap();
    }

    #[test]
    fn cutoff_certificate_is_tightish() {
        let ctx = EvalCtx::to_order(30);
        let cert = cutoff_bounds(&rr_spec(0), &ctx).unwrap();
        assert_eq!(cert.bounds.len(), 1);
        // n^2 >= 30 for n >= 6; the certified bound must cover at least
        // that and should not be wildly loose.
        assert!(cert.bounds[0].bound >= 6 && cert.bounds[0].bound <= 12);
    }

    #[test]
    fn double_sum_with_cross_terms() {
        // Cauchy-type check: sum_{i,j} q^{i^2 + 2ij + j^2 + i + j} /
        // ((q;q)_i (q;q)_j) is symmetric and equals its own transpose;
        // also spot-check low coefficients against a direct expansion.
        let mut quad = QuadForm::zero(2);
        quad.a[0][0] = Exp::from_integer(1);
        quad.a[1][1] = Exp::from_integer(1);
        quad.add_cross(0, 1, Exp::from_integer(2));
        quad.lin.coeffs[0] = Exp::from_integer(1);
        quad.lin.coeffs[1] = Exp::from_integer(1);
        let spec = MultiSumSpec::standard(vec![1, 1], quad);
        let ctx = EvalCtx::to_order(20);
        let f = eval_multisum(&spec, &ctx).unwrap();
        // (i,j) = (0,0) -> 1; (1,0),(0,1) -> 2 q^2/(1-q); ...
        assert_eq!(f.coeff(Exp::from_integer(0)).unwrap(), Coef::from_i64(1));
        assert_eq!(f.coeff(Exp::from_integer(1)).unwrap(), Coef::from_i64(0));
        assert_eq!(f.coeff(Exp::from_integer(2)).unwrap(), Coef::from_i64(2));
    }

    #[test]
    fn parameterized_sum_needs_cap() {
        // sum q^{(i-j)^2} a^{i+j} / ((q;q)_i (q;q)_j): the quadratic part
        // is flat along the diagonal; only the parameter cap bounds it.
        let mut quad = QuadForm::zero(2);
        quad.a[0][0] = Exp::from_integer(1);
        quad.a[1][1] = Exp::from_integer(1);
        quad.add_cross(0, 1, Exp::from_integer(-2));
        let mut spec = MultiSumSpec::standard(vec![1, 1], quad);
        spec.params.push(ParamPower {
            param: Param('a'),
            exponent: LinForm {
                coeffs: vec![Exp::from_integer(1), Exp::from_integer(1)],
                constant: Exp::zero(),
            },
        });
        // Without a cap: NonSummable.
        assert!(matches!(
            eval_multisum(&spec, &EvalCtx::to_order(10)),
            Err(Error::NonSummable(_))
        ));
        // With a cap: fine.
        let ctx = EvalCtx::new(Exp::from_integer(10), Some(4));
        let f = eval_multisum(&spec, &ctx).unwrap();
        assert_eq!(f.coeff(Exp::from_integer(0)).unwrap().max_degree(), 4);
    }

    #[test]
    fn strict_flag_kills_negative_subscripts() {
        // g_1(q) = sum_n q^{n^2}/((q;q)_n (q;q)_{n-1}) with the strict
        // convention: the n = 0 term vanishes.
        let mut quad = QuadForm::zero(1);
        quad.a[0][0] = Exp::from_integer(1);
        let mut spec = MultiSumSpec::standard(vec![1], quad);
        spec.factors.push(SumFactor {
            arg: PochArg::new(QMono::q_pow(Exp::from_integer(1)), Exp::from_integer(1)),
            subscript: LinForm {
                coeffs: vec![Exp::from_integer(1)],
                constant: Exp::from_integer(-1),
            },
            power: -1,
            strict: true,
        });
        let f = eval_multisum(&spec, &EvalCtx::to_order(10)).unwrap();
        // Lowest term comes from n = 1: q^{1}/((q;q)_1 (q;q)_0) = q + ...
        assert_eq!(f.coeff(Exp::from_integer(0)).unwrap(), Coef::zero());
        assert_eq!(f.coeff(Exp::from_integer(1)).unwrap(), Coef::from_i64(1));
    }

    #[test]
    fn indefinite_but_orthant_positive_triple_sum() {
        // A = [[2,1,3],[1,2,3],[3,3,9/2]] is indefinite but has
        // nonnegative entries: the orthant route must certify it.
        let mut quad = QuadForm::zero(3);
        quad.a[0][0] = Exp::from_integer(2);
        quad.a[1][1] = Exp::from_integer(2);
        quad.a[2][2] = Exp::new(9, 2);
        quad.add_cross(0, 1, Exp::from_integer(2));
        quad.add_cross(0, 2, Exp::from_integer(6));
        quad.add_cross(1, 2, Exp::from_integer(6));
        let spec = MultiSumSpec::standard(vec![1, 1, 3], quad);
        let cert = cutoff_bounds(&spec, &EvalCtx::to_order(12)).unwrap();
        for b in &cert.bounds {
            assert!(matches!(b.route, BoundRoute::OrthantMonomial { .. }));
        }
        // Evaluation completes.
        eval_multisum(&spec, &EvalCtx::to_order(12)).unwrap();
    }

    #[test]
    fn psd_with_negative_cross_uses_convex_route() {
        // Q = i^2 - 3ij + 3j^2 + j (the conjecture's form): PSD with a
        // negative cross coefficient.
        let mut quad = QuadForm::zero(2);
        quad.a[0][0] = Exp::from_integer(1);
        quad.a[1][1] = Exp::from_integer(3);
        quad.add_cross(0, 1, Exp::from_integer(-3));
        quad.lin.coeffs[1] = Exp::from_integer(1);
        let spec = MultiSumSpec::standard(vec![1, 3], quad);
        let cert = cutoff_bounds(&spec, &EvalCtx::to_order(25)).unwrap();
        for b in &cert.bounds {
            assert!(
                matches!(b.route, BoundRoute::ConvexHalfspace { .. }),
                "route {:?}",
                b.route
            );
        }
        eval_multisum(&spec, &EvalCtx::to_order(25)).unwrap();
    }

    #[test]
    fn singular_psd_with_offrange_linear_uses_orthant_convex() {
        // Q = (i-j)^2 + 2j: PSD-singular, L not in range(A), negative
        // cross; only the full orthant-constrained minimization certifies.
        // sum q^{i^2-2ij+j^2+2j} / ((q^4;q^4)_i (q^4;q^4)_j) = 1/(q;q^2)_oo.
        let mut quad = QuadForm::zero(2);
        quad.a[0][0] = Exp::from_integer(1);
        quad.a[1][1] = Exp::from_integer(1);
        quad.add_cross(0, 1, Exp::from_integer(-2));
        quad.lin.coeffs[1] = Exp::from_integer(2);
        let spec = MultiSumSpec::standard(vec![4, 4], quad);
        let ctx = EvalCtx::to_order(24);
        let cert = cutoff_bounds(&spec, &ctx).unwrap();
        assert!(
            matches!(cert.bounds[0].route, BoundRoute::OrthantConvex { .. }),
            "route {:?}",
            cert.bounds[0].route
        );
        let lhs = eval_multisum(&spec, &ctx).unwrap();
        let rhs = crate::qfactors::poch_inf(
            &PochArg::new(QMono::q_pow(Exp::from_integer(1)), Exp::from_integer(2)),
            &ctx,
        )
        .unwrap()
        .inv_to(Exp::from_integer(24))
        .unwrap();
        lhs.expect_equal(&rhs).unwrap();
    }
}
