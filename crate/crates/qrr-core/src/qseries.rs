//! Truncated Puiseux series in q over the coefficient ring [`Coef`].
//!
//! A [`QSeries`] stores f(q) = sum_e c_e * q^e with exponents e in
//! (1/D) * Z (negative exponents allowed), as a sparse map from *scaled*
//! exponents e*D to coefficients, together with a truncation order.
//!
//! Invariants:
//! - `d >= 1`; all stored keys are scaled exponents (integer e*D);
//! - coefficients are exact for every exponent `< trunc`; nothing is known
//!   at or beyond `trunc`;
//! - no stored coefficient is zero; no stored key is `>= trunc`;
//! - exact values (polynomials, monomials) carry `Trunc::Inf`.
//!
//! Truncation propagation follows the valuation-aware rule: for addition
//! the result order is min(N1, N2); for multiplication it is
//! min(N1 + v2, N2 + v1, N1 + N2) where v_i is the valuation of the other
//! factor. Values are immutable: every operation returns a new series.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::coef::{Coef, Param};
use crate::cyclo::CycloRat;
use crate::{Error, Exp, Result};

/// Truncation order of a series: exact below `Finite(n)` (a scaled
/// exponent), or exact everywhere (`Inf`).
///
/// The derived `Ord` places every `Finite` below `Inf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Trunc {
    Finite(i64),
    Inf,
}

impl Trunc {
    fn add_val(self, v: Option<i64>) -> Trunc {
        match (self, v) {
            (Trunc::Finite(n), Some(v)) => Trunc::Finite(n + v),
            _ => Trunc::Inf,
        }
    }

    fn add(self, other: Trunc) -> Trunc {
        match (self, other) {
            (Trunc::Finite(a), Trunc::Finite(b)) => Trunc::Finite(a + b),
            _ => Trunc::Inf,
        }
    }
}

/// A truncated Puiseux series in q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    /// Global exponent denominator D.
    d: i64,
    /// Scaled exponent (e*D) -> nonzero coefficient.
    terms: BTreeMap<i64, Coef>,
    /// Scaled truncation order.
    trunc: Trunc,
}

impl QSeries {
    // -- constructors -------------------------------------------------------

    /// The exact zero series.
    pub fn zero() -> Self {
        QSeries { d: 1, terms: BTreeMap::new(), trunc: Trunc::Inf }
    }

    /// The exact constant 1.
    pub fn one() -> Self {
        QSeries::constant(Coef::one())
    }

    /// An exact constant.
    pub fn constant(c: Coef) -> Self {
        QSeries::monomial(c, Exp::zero())
    }

    /// An exact monomial c * q^e.
    pub fn monomial(c: Coef, e: Exp) -> Self {
        let d = *e.denom();
        debug_assert!(d >= 1);
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(*e.numer(), c);
        }
        QSeries { d, terms, trunc: Trunc::Inf }
    }

    /// Zero known only up to order `n` (an unknown tail).
    pub fn zero_to(n: Exp) -> Self {
        QSeries {
            d: *n.denom(),
            terms: BTreeMap::new(),
            trunc: Trunc::Finite(*n.numer()),
        }
    }

    /// Build from scaled parts. Internal, enforces invariants.
    pub(crate) fn from_scaled(d: i64, mut terms: BTreeMap<i64, Coef>, trunc: Trunc) -> Self {
        debug_assert!(d >= 1);
        terms.retain(|k, c| !c.is_zero() && Trunc::Finite(*k) < trunc);
        QSeries { d, terms, trunc }
    }

    // -- accessors ----------------------------------------------------------

    /// The global exponent denominator D.
    pub fn denom(&self) -> i64 {
        self.d
    }

    /// The truncation order as a rational exponent (None = exact).
    pub fn trunc_order(&self) -> Option<Exp> {
        match self.trunc {
            Trunc::Finite(n) => Some(Exp::new(n, self.d)),
            Trunc::Inf => None,
        }
    }

    /// The valuation (lowest exponent with nonzero coefficient), None for
    /// the (known-prefix-)zero series.
    pub fn val(&self) -> Option<Exp> {
        self.terms.keys().next().map(|k| Exp::new(*k, self.d))
    }

    fn val_scaled(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    /// True when no nonzero coefficient is known. (For a finite truncation
    /// this means "zero to the known order".)
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of q^e; zero when absent. Errors when `e` is at or
    /// beyond the truncation order (the coefficient is unknown).
    pub fn coeff(&self, e: Exp) -> Result<Coef> {
        let scaled = self.scale_exp(e)?;
        match self.trunc {
            Trunc::Finite(n) if scaled >= n => Err(Error::Unsupported(format!(
                "coefficient of q^({e}) requested beyond truncation order"
            ))),
            _ => Ok(self.terms.get(&scaled).cloned().unwrap_or_else(Coef::zero)),
        }
    }

    /// Coefficient of q^e, zero when absent or off the exponent lattice.
    /// Does not check truncation; for use after an explicit order check.
    pub fn coeff_or_zero(&self, e: Exp) -> Coef {
        match self.scale_exp(e) {
            Ok(s) => self.terms.get(&s).cloned().unwrap_or_else(Coef::zero),
            Err(_) => Coef::zero(),
        }
    }

    fn scale_exp(&self, e: Exp) -> Result<i64> {
        let scaled = e * Exp::from_integer(self.d);
        if !scaled.is_integer() {
            return Err(Error::Unsupported(format!(
                "exponent {e} is off the 1/{} lattice",
                self.d
            )));
        }
        Ok(scaled.to_integer())
    }

    /// Iterate (exponent, coefficient) in ascending exponent order.
    pub fn iter(&self) -> impl Iterator<Item = (Exp, &Coef)> {
        let d = self.d;
        self.terms.iter().map(move |(k, c)| (Exp::new(*k, d), c))
    }

    /// Largest total parameter degree across all known coefficients.
    pub fn max_param_degree(&self) -> u32 {
        self.terms.values().map(Coef::max_degree).max().unwrap_or(0)
    }

    // -- denominator management ---------------------------------------------

    /// Re-express on the 1/target lattice (current d must divide target).
    pub(crate) fn with_denom(&self, target: i64) -> QSeries {
        debug_assert!(target % self.d == 0);
        if target == self.d {
            return self.clone();
        }
        let f = target / self.d;
        QSeries {
            d: target,
            terms: self.terms.iter().map(|(k, c)| (k * f, c.clone())).collect(),
            trunc: match self.trunc {
                Trunc::Finite(n) => Trunc::Finite(n * f),
                Trunc::Inf => Trunc::Inf,
            },
        }
    }

    fn common_denom(&self, other: &QSeries) -> i64 {
        self.d.lcm(&other.d)
    }

    /// Reduce D to the smallest denominator that represents all exponents
    /// and the truncation order exactly.
    pub fn reduce_denom(&self) -> QSeries {
        let mut g = 0i64;
        for k in self.terms.keys() {
            g = g.gcd(k);
        }
        if let Trunc::Finite(n) = self.trunc {
            g = g.gcd(&n);
        }
        g = g.gcd(&self.d);
        if g <= 1 {
            return self.clone();
        }
        QSeries {
            d: self.d / g,
            terms: self.terms.iter().map(|(k, c)| (k / g, c.clone())).collect(),
            trunc: match self.trunc {
                Trunc::Finite(n) => Trunc::Finite(n / g),
                Trunc::Inf => Trunc::Inf,
            },
        }
    }

    // -- truncation ---------------------------------------------------------

    /// Forget everything at or above order `n` (never raises the order).
    pub fn truncate(&self, n: Exp) -> QSeries {
        let d = self.d.lcm(n.denom());
        let s = self.with_denom(d);
        let cut = Trunc::Finite(*n.numer() * (d / n.denom()));
        let trunc = s.trunc.min(cut);
        QSeries::from_scaled(d, s.terms, trunc)
    }

    // -- arithmetic ---------------------------------------------------------

    pub fn neg(&self) -> QSeries {
        QSeries {
            d: self.d,
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
            trunc: self.trunc,
        }
    }

    pub fn add(&self, other: &QSeries) -> QSeries {
        let d = self.common_denom(other);
        let a = self.with_denom(d);
        let b = other.with_denom(d);
        let trunc = a.trunc.min(b.trunc);
        let mut terms = a.terms;
        for (k, c) in b.terms {
            match terms.get_mut(&k) {
                Some(existing) => {
                    let sum = &*existing + &c;
                    if sum.is_zero() {
                        terms.remove(&k);
                    } else {
                        *existing = sum;
                    }
                }
                None => {
                    terms.insert(k, c);
                }
            }
        }
        QSeries::from_scaled(d, terms, trunc)
    }

    pub fn sub(&self, other: &QSeries) -> QSeries {
        self.add(&other.neg())
    }

    /// Multiply with the valuation-aware truncation rule, optionally
    /// dropping coefficient terms above a total parameter degree cap.
    pub fn mul_capped(&self, other: &QSeries, cap: Option<u32>) -> QSeries {
        let d = self.common_denom(other);
        let a = self.with_denom(d);
        let b = other.with_denom(d);
        let trunc = a.trunc.add_val(b.val_scaled())
            .min(b.trunc.add_val(a.val_scaled()))
            .min(a.trunc.add(b.trunc));
        let mut terms: BTreeMap<i64, Coef> = BTreeMap::new();
        for (ka, ca) in &a.terms {
            for (kb, cb) in &b.terms {
                let k = ka + kb;
                if Trunc::Finite(k) >= trunc {
                    break; // b iterates ascending; later kb only larger
                }
                let prod = ca.mul_capped(cb, cap);
                if prod.is_zero() {
                    continue;
                }
                match terms.get_mut(&k) {
                    Some(existing) => *existing = &*existing + &prod,
                    None => {
                        terms.insert(k, prod);
                    }
                }
            }
        }
        QSeries::from_scaled(d, terms, trunc)
    }

    pub fn mul(&self, other: &QSeries) -> QSeries {
        self.mul_capped(other, None)
    }

    /// Multiply by an exact monomial c * q^e.
    pub fn mul_monomial(&self, c: &Coef, e: Exp) -> QSeries {
        self.mul(&QSeries::monomial(c.clone(), e))
    }

    /// Scale every coefficient.
    pub fn scalar_mul(&self, c: &Coef) -> QSeries {
        self.mul(&QSeries::constant(c.clone()))
    }

    /// Multiplicative inverse. Requires a finite truncation order (use
    /// [`QSeries::inv_to`] for exact polynomials) and an invertible
    /// (nonzero parameter-free) leading coefficient.
    ///
    /// For input known to order N with valuation v the result is known to
    /// order N - 2v, so that f * f^{-1} == 1 holds to the min-rule order.
    pub fn inv(&self) -> Result<QSeries> {
        self.inv_capped(None)
    }

    pub fn inv_capped(&self, cap: Option<u32>) -> Result<QSeries> {
        let n = match self.trunc {
            Trunc::Finite(n) => n,
            Trunc::Inf => {
                return Err(Error::Unsupported(String::from(
                    "inverse of an exact series needs a target order; use inv_to",
                )))
            }
        };
        let v = match self.val_scaled() {
            Some(v) => v,
            None => {
                return Err(Error::NotInvertible(String::from(
                    "series is zero to its truncation order",
                )))
            }
        };
        let lead = &self.terms[&v];
        let lead_inv = Coef::scalar(
            lead.as_scalar()
                .ok_or_else(|| {
                    Error::NotInvertible(format!(
                        "leading coefficient {lead} is not a scalar"
                    ))
                })?
                .inv()?,
        );
        // f = lead * q^v * (1 + g), with g known for scaled exponents < n - v.
        let rel = n - v; // relative precision
        if rel <= 0 {
            return Ok(QSeries::zero_to(Exp::new(n - 2 * v, self.d)));
        }
        let g: BTreeMap<i64, Coef> = self
            .terms
            .iter()
            .filter(|(k, _)| **k > v)
            .map(|(k, c)| (k - v, c.mul_capped(&lead_inv, cap)))
            .collect();
        // (1+g)(1+h) = 1  =>  h_m = -g_m - sum_{0<k<m} g_k h_{m-k}
        let mut h: Vec<Coef> = Vec::with_capacity(rel as usize);
        h.push(Coef::one()); // h_0 = 1 for the (1 + h) part, stored inclusive
        for m in 1..rel {
            let mut acc = Coef::zero();
            for (k, gk) in g.range(1..=m) {
                let prev = &h[(m - k) as usize];
                if prev.is_zero() {
                    continue;
                }
                acc = &acc + &gk.mul_capped(prev, cap);
            }
            h.push(-&acc);
        }
        let mut terms: BTreeMap<i64, Coef> = BTreeMap::new();
        for (m, hm) in h.into_iter().enumerate() {
            if hm.is_zero() {
                continue;
            }
            let c = hm.mul_capped(&lead_inv, cap);
            if !c.is_zero() {
                terms.insert(m as i64 - v, c);
            }
        }
        Ok(QSeries::from_scaled(
            self.d,
            terms,
            Trunc::Finite(n - 2 * v),
        ))
    }

    /// Inverse computed to order `n`, valid also for exact inputs.
    pub fn inv_to(&self, n: Exp) -> Result<QSeries> {
        self.inv_to_capped(n, None)
    }

    pub fn inv_to_capped(&self, n: Exp, cap: Option<u32>) -> Result<QSeries> {
        let v = self.val().unwrap_or_else(Exp::zero);
        let need = n + v + v; // truncate input to n + 2v so inv lands at n
        let cut = match self.trunc_order() {
            Some(t) => t.min(need),
            None => need,
        };
        self.truncate(cut).inv_capped(cap)
    }

    /// Integer power; negative powers require invertibility and a finite
    /// truncation order.
    pub fn pow(&self, e: i64) -> Result<QSeries> {
        self.pow_capped(e, None)
    }

    pub fn pow_capped(&self, e: i64, cap: Option<u32>) -> Result<QSeries> {
        if e < 0 {
            return self.inv_capped(cap)?.pow_capped(-e, cap);
        }
        let mut acc = QSeries::one();
        for _ in 0..e {
            acc = acc.mul_capped(self, cap);
        }
        // Preserve the input's truncation knowledge for e = 0 (1 is exact,
        // but an unknown tail in self cannot improve; exactness of q^0 * 1
        // is genuine), and for e >= 1 the mul rule already handled it.
        Ok(acc)
    }

    // -- substitutions ------------------------------------------------------

    /// q -> q^r for a positive rational r (exponent rescaling).
    pub fn rescale_q(&self, r: Exp) -> QSeries {
        assert!(r.is_positive(), "rescale exponent must be positive");
        // New exponent of stored key k: (k/d) * r; new lattice denominator:
        // lcm of (d * r.denom) / gcds — just use d * r.denom and reduce.
        // New exponent of stored key k is (k/d)*(num/den); on the
        // 1/(d*den) lattice that is the integer k*num.
        let new_d = self.d * r.denom();
        let num = *r.numer();
        let map_key = |k: i64| -> i64 { k * num };
        QSeries {
            d: new_d,
            terms: self.terms.iter().map(|(k, c)| (map_key(*k), c.clone())).collect(),
            trunc: match self.trunc {
                Trunc::Finite(n) => Trunc::Finite(map_key(n)),
                Trunc::Inf => Trunc::Inf,
            },
        }
        .reduce_denom()
    }

    /// q -> -q. Precondition: D = 1 (integer exponent lattice).
    pub fn subst_q_neg(&self) -> Result<QSeries> {
        if self.d != 1 {
            return Err(Error::Unsupported(format!(
                "q -> -q needs an integer exponent lattice, found D = {}",
                self.d
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| {
                let c = if k.rem_euclid(2) == 1 { -c } else { c.clone() };
                (*k, c)
            })
            .collect();
        Ok(QSeries { d: 1, terms, trunc: self.trunc })
    }

    /// Substitute parameter p -> c * q^e.
    ///
    /// `deg_bound` must bound the degree of `p` in the *full* series
    /// (including the unknown tail); when e < 0, substituted tail terms can
    /// drop below the old truncation order by as much as e * deg_bound, and
    /// the result's order is lowered accordingly.
    pub fn param_subst(&self, p: Param, c: &CycloRat, e: Exp, deg_bound: u32) -> QSeries {
        let d = self.d.lcm(e.denom());
        let s = self.with_denom(d);
        let e_scaled = *e.numer() * (d / e.denom());
        let mut terms: BTreeMap<i64, Coef> = BTreeMap::new();
        let mut max_deg_seen: u32 = 0;
        for (k, coef) in &s.terms {
            for (deg, part) in coef.split_by_degree(p) {
                max_deg_seen = max_deg_seen.max(deg);
                let scaled = part.scalar_mul(&c.pow(deg as i64).expect("nonneg power"));
                if scaled.is_zero() {
                    continue;
                }
                let key = k + e_scaled * deg as i64;
                match terms.get_mut(&key) {
                    Some(existing) => {
                        let sum = &*existing + &scaled;
                        if sum.is_zero() {
                            terms.remove(&key);
                        } else {
                            *existing = sum;
                        }
                    }
                    None => {
                        terms.insert(key, scaled);
                    }
                }
            }
        }
        debug_assert!(
            max_deg_seen <= deg_bound,
            "deg_bound {deg_bound} below an observed degree {max_deg_seen}"
        );
        let trunc = match s.trunc {
            Trunc::Inf => Trunc::Inf,
            Trunc::Finite(n) => {
                if e_scaled >= 0 {
                    Trunc::Finite(n)
                } else {
                    Trunc::Finite(n + e_scaled * deg_bound as i64)
                }
            }
        };
        QSeries::from_scaled(d, terms, trunc)
    }

    /// q * f'(q): each term c * q^e becomes (e*c) * q^e. Exact on exponents
    /// (rational scaling of coefficients); requires scalar-friendly use by
    /// the caller (the coefficient ring is multiplied by the rational e).
    pub fn q_dlog_numerator(&self) -> QSeries {
        let terms = self
            .terms
            .iter()
            .filter_map(|(k, c)| {
                let e = Exp::new(*k, self.d);
                let scaled = c.scalar_mul(&CycloRat::from_ratio(*e.numer(), *e.denom()));
                if scaled.is_zero() {
                    None
                } else {
                    Some((*k, scaled))
                }
            })
            .collect();
        QSeries { d: self.d, terms, trunc: self.trunc }
    }

    // -- comparison ---------------------------------------------------------

    /// First disagreement up to the smaller truncation order, if any.
    /// Returns None when the two series agree on the comparable range.
    pub fn first_mismatch(&self, other: &QSeries) -> Option<(Exp, Coef, Coef)> {
        let d = self.common_denom(other);
        let a = self.with_denom(d);
        let b = other.with_denom(d);
        let limit = a.trunc.min(b.trunc);
        let mut keys: Vec<i64> = a.terms.keys().chain(b.terms.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        for k in keys {
            if Trunc::Finite(k) >= limit {
                break;
            }
            let ca = a.terms.get(&k).cloned().unwrap_or_else(Coef::zero);
            let cb = b.terms.get(&k).cloned().unwrap_or_else(Coef::zero);
            if ca != cb {
                return Some((Exp::new(k, d), ca, cb));
            }
        }
        None
    }

    /// Equality up to the smaller truncation order, as a Result carrying
    /// the first mismatch.
    pub fn expect_equal(&self, other: &QSeries) -> Result<()> {
        match self.first_mismatch(other) {
            None => Ok(()),
            Some((e, ca, cb)) => Err(Error::Mismatch {
                exponent: format!("{e}"),
                lhs: ca.to_string(),
                rhs: cb.to_string(),
            }),
        }
    }

    // -- text format ----------------------------------------------------------

    /// Render in the line-oriented text format:
    ///
    /// ```text
    /// order 50/1            (or "order exact")
    /// 0/1 : 1
    /// 3/2 : -1/2*a
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        match self.trunc {
            Trunc::Finite(n) => {
                let e = Exp::new(n, self.d);
                out.push_str(&format!("order {}/{}\n", e.numer(), e.denom()));
            }
            Trunc::Inf => out.push_str("order exact\n"),
        }
        for (e, c) in self.iter() {
            out.push_str(&format!("{}/{} : {}\n", e.numer(), e.denom(), c));
        }
        out
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if e.is_zero() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*q^({e})")?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        match self.trunc {
            Trunc::Finite(n) => write!(f, " + O(q^({}))", Exp::new(n, self.d)),
            Trunc::Inf => Ok(()),
        }
    }
}

/// Total order on truncations expressed as rational exponents (None is
/// "exact", i.e. larger than every finite order).
pub fn cmp_trunc(a: Option<Exp>, b: Option<Exp>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(&y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QSeries {
        QSeries::monomial(Coef::one(), Exp::from_integer(1))
    }

    #[test]
    fn add_and_mul_truncation_rule() {
        // f = 1 + q + O(q^5), g = q^2 + O(q^7)
        let f = QSeries::one().add(&q()).truncate(Exp::from_integer(5));
        let g = QSeries::monomial(Coef::one(), Exp::from_integer(2))
            .truncate(Exp::from_integer(7));
        assert_eq!(f.add(&g).trunc_order(), Some(Exp::from_integer(5)));
        // mul: min(5 + 2, 7 + 0, 5 + 7) = 7
        let fg = f.mul(&g);
        assert_eq!(fg.trunc_order(), Some(Exp::from_integer(7)));
        assert_eq!(fg.coeff(Exp::from_integer(2)).unwrap(), Coef::one());
        assert_eq!(fg.coeff(Exp::from_integer(3)).unwrap(), Coef::one());
    }

    #[test]
    fn inverse_of_one_minus_q() {
        // (1 - q)^{-1} = 1 + q + q^2 + ... to order 10
        let f = QSeries::one().sub(&q());
        let inv = f.inv_to(Exp::from_integer(10)).unwrap();
        for k in 0..10 {
            assert_eq!(inv.coeff(Exp::from_integer(k)).unwrap(), Coef::one());
        }
        let prod = f.mul(&inv);
        assert!(prod.expect_equal(&QSeries::one()).is_ok());
    }

    #[test]
    fn inverse_with_valuation_loses_order() {
        // f = q - q^2 + O(q^9): v = 1, so f^{-1} known to 9 - 2 = 7.
        let f = q()
            .sub(&QSeries::monomial(Coef::one(), Exp::from_integer(2)))
            .truncate(Exp::from_integer(9));
        let inv = f.inv().unwrap();
        assert_eq!(inv.trunc_order(), Some(Exp::from_integer(7)));
        assert_eq!(inv.val(), Some(Exp::from_integer(-1)));
        f.mul(&inv).expect_equal(&QSeries::one()).unwrap();
    }

    #[test]
    fn rational_lattice_mixing() {
        // q^{1/2} * q^{1/3} = q^{5/6}
        let a = QSeries::monomial(Coef::one(), Exp::new(1, 2));
        let b = QSeries::monomial(Coef::one(), Exp::new(1, 3));
        let c = a.mul(&b);
        assert_eq!(c.coeff(Exp::new(5, 6)).unwrap(), Coef::one());
    }

    #[test]
    fn subst_q_neg_flips_odd_exponents() {
        // (1 + q + q^2) |-> 1 - q + q^2
        let f = QSeries::one()
            .add(&q())
            .add(&QSeries::monomial(Coef::one(), Exp::from_integer(2)));
        let g = f.subst_q_neg().unwrap();
        assert_eq!(g.coeff_or_zero(Exp::from_integer(1)), Coef::from_i64(-1));
        assert_eq!(g.coeff_or_zero(Exp::from_integer(2)), Coef::one());
    }

    #[test]
    fn param_subst_negative_exponent_lowers_order() {
        // f = a*q + O(q^5), a -> -q^{-1}: result -1 + O(q^4) with bound 1.
        let f = QSeries::monomial(Coef::param(Param('a')), Exp::from_integer(1))
            .truncate(Exp::from_integer(5));
        let g = f.param_subst(Param('a'), &CycloRat::from_i64(-1), Exp::from_integer(-1), 1);
        assert_eq!(g.coeff(Exp::from_integer(0)).unwrap(), Coef::from_i64(-1));
        assert_eq!(g.trunc_order(), Some(Exp::from_integer(4)));
    }

    #[test]
    fn text_roundtrip_shape() {
        let f = QSeries::one().sub(&q()).truncate(Exp::from_integer(3));
        let text = f.to_text();
        assert_eq!(text, "order 3/1\n0/1 : 1\n1/1 : -1\n");
    }
}
