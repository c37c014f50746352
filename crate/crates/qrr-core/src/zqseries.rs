//! Laurent series in an auxiliary variable z whose coefficients are
//! q-series, used for constant-term extraction.
//!
//! A [`ZQSeries`] stores finitely many z-coefficients, each a [`QSeries`]
//! exact below a uniform q-order, together with a *completeness window*:
//! the set of z-exponents whose coefficients are fully known at that
//! order. Factors built from Euler or Jacobi expansions have finite
//! z-support at any fixed q-order and are complete everywhere
//! ([`Window::All`]); deliberately truncated expansions carry a
//! [`Window::Range`].
//!
//! Window algebra under multiplication is exact, not heuristic:
//! - All * All = All (outside the stored supports both factors are known
//!   to be zero at this order);
//! - Range(l,h) * All with support [a,b] is complete exactly on
//!   [l+b, h+a]: a product coefficient is known iff every split that
//!   could touch the unknown part of the Range factor is annihilated by a
//!   known zero of the All factor;
//! - Range * Range leaves nothing provably complete (Empty).
//!
//! The q-order of a product follows the same valuation-aware rule as
//! `QSeries` multiplication, with valuations taken as the minimum over all
//! stored z-coefficients.

use alloc::collections::BTreeMap;
use alloc::format;
use core::fmt;

use num_traits::Zero;

use crate::coef::Coef;
use crate::qseries::QSeries;
use crate::{Error, Exp, Result};

/// The set of z-exponents whose coefficients are complete at the series'
/// q-order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Window {
    /// Complete for every z-exponent (zero outside the stored support).
    All,
    /// Complete exactly for z-exponents in [lo, hi].
    Range(i64, i64),
    /// Nothing is provably complete.
    Empty,
}

impl Window {
    pub fn contains(&self, w: i64) -> bool {
        match self {
            Window::All => true,
            Window::Range(lo, hi) => *lo <= w && w <= *hi,
            Window::Empty => false,
        }
    }

    fn normalize(self) -> Window {
        match self {
            Window::Range(lo, hi) if lo > hi => Window::Empty,
            w => w,
        }
    }

    fn intersect(self, other: Window) -> Window {
        match (self, other) {
            (Window::All, w) | (w, Window::All) => w,
            (Window::Empty, _) | (_, Window::Empty) => Window::Empty,
            (Window::Range(a, b), Window::Range(c, d)) => {
                Window::Range(a.max(c), b.min(d)).normalize()
            }
        }
    }
}

/// A Laurent series in z with q-series coefficients.
#[derive(Clone, Debug)]
pub struct ZQSeries {
    /// Every in-window coefficient is exact for q-exponents below this.
    order: Exp,
    /// z-exponent -> nonzero coefficient (truncated to `order`).
    terms: BTreeMap<i64, QSeries>,
    /// Completeness region.
    window: Window,
}

impl ZQSeries {
    /// Build from parts, truncating coefficients to `order`, dropping
    /// zero coefficients and anything stored outside the window.
    pub fn new(order: Exp, terms: BTreeMap<i64, QSeries>, window: Window) -> Self {
        let terms = terms
            .into_iter()
            .filter(|(w, _)| window.contains(*w))
            .map(|(w, s)| (w, s.truncate(order)))
            .filter(|(_, s)| !s.is_zero())
            .collect();
        ZQSeries { order, terms, window }
    }

    pub fn zero(order: Exp) -> Self {
        ZQSeries { order, terms: BTreeMap::new(), window: Window::All }
    }

    pub fn one(order: Exp) -> Self {
        Self::z_monomial(Coef::one(), Exp::zero(), 0, order)
    }

    /// c * q^e * z^w, known to `order`.
    pub fn z_monomial(c: Coef, e: Exp, w: i64, order: Exp) -> Self {
        let mut terms = BTreeMap::new();
        let s = QSeries::monomial(c, e).truncate(order);
        if !s.is_zero() {
            terms.insert(w, s);
        }
        ZQSeries { order, terms, window: Window::All }
    }

    /// A z-free factor.
    pub fn from_qseries(s: &QSeries, order: Exp) -> Self {
        let mut terms = BTreeMap::new();
        let s = s.truncate(order);
        if !s.is_zero() {
            terms.insert(0, s);
        }
        ZQSeries { order, terms, window: Window::All }
    }

    pub fn order(&self) -> Exp {
        self.order
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Stored support range (min, max z-exponent), None when empty.
    pub fn support(&self) -> Option<(i64, i64)> {
        let lo = self.terms.keys().next()?;
        let hi = self.terms.keys().next_back()?;
        Some((*lo, *hi))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&i64, &QSeries)> {
        self.terms.iter()
    }

    /// The coefficient of z^w; errors when w is outside the completeness
    /// window.
    pub fn coeff_z(&self, w: i64) -> Result<QSeries> {
        if !self.window.contains(w) {
            return Err(Error::WindowMiss(format!(
                "z^{w} is outside the completeness window {:?}",
                self.window
            )));
        }
        Ok(self
            .terms
            .get(&w)
            .cloned()
            .unwrap_or_else(|| QSeries::zero_to(self.order)))
    }

    /// Constant-term extraction: the coefficient of z^0.
    pub fn ct(&self) -> Result<QSeries> {
        self.coeff_z(0)
    }

    /// Minimum q-valuation over stored coefficients (None when empty,
    /// meaning +infinity).
    fn min_val(&self) -> Option<Exp> {
        self.terms.values().filter_map(QSeries::val).min()
    }

    pub fn add(&self, other: &ZQSeries) -> ZQSeries {
        let order = self.order.min(other.order);
        let window = self.window.intersect(other.window);
        let mut terms = self.terms.clone();
        for (w, s) in &other.terms {
            let merged = match terms.get(w) {
                Some(existing) => existing.add(s),
                None => s.clone(),
            };
            if merged.is_zero() {
                terms.remove(w);
            } else {
                terms.insert(*w, merged);
            }
        }
        ZQSeries::new(order, terms, window)
    }

    pub fn neg(&self) -> ZQSeries {
        ZQSeries {
            order: self.order,
            terms: self.terms.iter().map(|(w, s)| (*w, s.neg())).collect(),
            window: self.window,
        }
    }

    /// Multiply, with exact window algebra and valuation-aware q-order.
    pub fn mul(&self, other: &ZQSeries) -> ZQSeries {
        self.mul_capped(other, None)
    }

    pub fn mul_capped(&self, other: &ZQSeries, cap: Option<u32>) -> ZQSeries {
        // q-order of the product: min(Na + vb, Nb + va, Na + Nb), where a
        // missing valuation (zero factor) removes its candidate.
        let mut order = self.order + other.order;
        if let Some(vb) = other.min_val() {
            order = order.min(self.order + vb);
        }
        if let Some(va) = self.min_val() {
            order = order.min(other.order + va);
        }
        // Window of the product.
        let window = match (self.window, other.window) {
            (Window::Empty, _) | (_, Window::Empty) => Window::Empty,
            (Window::All, Window::All) => Window::All,
            (Window::Range(l, h), Window::All) => match other.support() {
                Some((a, b)) => Window::Range(l + b, h + a).normalize(),
                None => Window::All, // other is identically zero at this order
            },
            (Window::All, Window::Range(l, h)) => match self.support() {
                Some((a, b)) => Window::Range(l + b, h + a).normalize(),
                None => Window::All,
            },
            (Window::Range(..), Window::Range(..)) => Window::Empty,
        };
        let mut terms: BTreeMap<i64, QSeries> = BTreeMap::new();
        for (wa, sa) in &self.terms {
            for (wb, sb) in &other.terms {
                let w = wa + wb;
                if !window.contains(w) {
                    continue;
                }
                let prod = sa.mul_capped(sb, cap);
                if prod.is_zero() {
                    continue;
                }
                match terms.get_mut(&w) {
                    Some(existing) => *existing = existing.add(&prod),
                    None => {
                        terms.insert(w, prod);
                    }
                }
            }
        }
        ZQSeries::new(order, terms, window)
    }

    /// z -> z^beta for a nonzero integer beta. Coefficients move from z^w
    /// to z^{beta*w}; the window is mapped conservatively to the spanned
    /// range (still containing 0 iff it did before).
    pub fn subst_z_pow(&self, beta: i64) -> ZQSeries {
        assert!(beta != 0, "z-power substitution requires beta != 0");
        let terms = self
            .terms
            .iter()
            .map(|(w, s)| (w * beta, s.clone()))
            .collect();
        let window = match self.window {
            Window::All => Window::All,
            Window::Empty => Window::Empty,
            Window::Range(l, h) => {
                let (a, b) = (l * beta, h * beta);
                Window::Range(a.min(b), a.max(b))
            }
        };
        ZQSeries { order: self.order, terms, window }
    }

    /// Multiply by c * q^e * z^w.
    pub fn mul_z_monomial(&self, c: &Coef, e: Exp, w: i64) -> ZQSeries {
        self.mul(&ZQSeries::z_monomial(c.clone(), e, w, self.order))
    }
}

impl fmt::Display for ZQSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        let mut first = true;
        for (w, s) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "z^{w}*[{s}]")?;
        }
        write!(f, "  (window {:?}, order {})", self.window, self.order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coef::Coef;

    fn ord(n: i64) -> Exp {
        Exp::from_integer(n)
    }

    #[test]
    fn ct_of_product_of_monomials() {
        // (q * z) * (q^2 * z^{-1}) has CT q^3.
        let a = ZQSeries::z_monomial(Coef::one(), ord(1), 1, ord(10));
        let b = ZQSeries::z_monomial(Coef::one(), ord(2), -1, ord(10));
        let ct = a.mul(&b).ct().unwrap();
        assert_eq!(ct.coeff(ord(3)).unwrap(), Coef::one());
    }

    #[test]
    fn range_window_times_all_window() {
        // f complete only on [0, 2]; g = z^{-1} + z (All).
        let mut fterms = BTreeMap::new();
        fterms.insert(0, QSeries::one().truncate(ord(10)));
        let f = ZQSeries::new(ord(10), fterms, Window::Range(0, 2));
        let mut gterms = BTreeMap::new();
        gterms.insert(-1, QSeries::one().truncate(ord(10)));
        gterms.insert(1, QSeries::one().truncate(ord(10)));
        let g = ZQSeries::new(ord(10), gterms, Window::All);
        let p = f.mul(&g);
        // Complete exactly on [0+1, 2-1] = [1, 1].
        assert_eq!(p.window(), Window::Range(1, 1));
        assert!(p.ct().is_err());
        assert_eq!(
            p.coeff_z(1).unwrap().coeff(ord(0)).unwrap(),
            Coef::one()
        );
    }

    #[test]
    fn z_power_substitution_keeps_ct() {
        let a = ZQSeries::z_monomial(Coef::one(), ord(1), 1, ord(10));
        let b = ZQSeries::z_monomial(Coef::one(), ord(2), -1, ord(10));
        let prod = a.mul(&b);
        let ct0 = prod.ct().unwrap();
        let ct1 = prod.subst_z_pow(3).ct().unwrap();
        assert!(ct0.expect_equal(&ct1).is_ok());
    }
}
