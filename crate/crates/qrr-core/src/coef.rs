//! Series coefficients: sparse multivariate polynomials in named formal
//! parameters over cyclotomic rationals.
//!
//! Parameterized identities are verified as polynomial identities in their
//! parameters, so every q-series coefficient is a [`Coef`]: a finite sum of
//! terms `scalar * a^e1 * b^e2 * ...` with nonnegative integer exponents.
//!
//! Invariants:
//! - no term has a zero scalar (enforced on every operation);
//! - no monomial stores a zero exponent;
//! - the empty monomial is the scalar term.
//!
//! Parameter exponents are nonnegative by construction. Substituting a
//! parameter by a monomial `c * q^e` is a series-level operation (the
//! q-shift leaves the coefficient ring); [`Coef::split_by_degree`] provides
//! the grouped view that substitution needs.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use crate::cyclo::CycloRat;
use crate::{Error, Result};

/// A named formal parameter (`a`, `b`, `u`, `v`, `w`, `t`, ...).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Param(pub char);

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A power product of parameters with positive integer exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Monomial(pub BTreeMap<Param, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn param(p: Param) -> Self {
        Self::param_pow(p, 1)
    }

    pub fn param_pow(p: Param, e: u32) -> Self {
        let mut m = BTreeMap::new();
        if e > 0 {
            m.insert(p, e);
        }
        Monomial(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn degree_of(&self, p: Param) -> u32 {
        self.0.get(&p).copied().unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (p, e) in &other.0 {
            *out.entry(*p).or_insert(0) += e;
        }
        Monomial(out)
    }

    /// The monomial with parameter `p` removed, and the removed exponent.
    pub fn without(&self, p: Param) -> (Monomial, u32) {
        let mut out = self.0.clone();
        let e = out.remove(&p).unwrap_or(0);
        (Monomial(out), e)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (p, e) in &self.0 {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if *e == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{e}")?;
            }
        }
        Ok(())
    }
}

/// A q-series coefficient: a polynomial in the formal parameters over
/// cyclotomic rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coef {
    terms: BTreeMap<Monomial, CycloRat>,
}

impl Coef {
    pub fn zero() -> Self {
        Coef { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Coef::scalar(CycloRat::one())
    }

    pub fn scalar(c: CycloRat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Coef { terms }
    }

    pub fn from_i64(n: i64) -> Self {
        Coef::scalar(CycloRat::from_i64(n))
    }

    pub fn param(p: Param) -> Self {
        Coef::term(CycloRat::one(), Monomial::param(p))
    }

    pub fn term(c: CycloRat, m: Monomial) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Coef { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .get(&Monomial::one())
                .is_some_and(CycloRat::is_one)
    }

    /// Some(&scalar) if this coefficient is parameter-free.
    pub fn as_scalar(&self) -> Option<&CycloRat> {
        if self.terms.is_empty() {
            // Zero is a scalar, but we cannot return a reference into self;
            // callers use is_zero() first.
            return None;
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.is_one() {
                return Some(c);
            }
        }
        None
    }

    pub fn is_scalar(&self) -> bool {
        self.is_zero() || self.as_scalar().is_some()
    }

    /// Largest total parameter degree across terms (0 for scalars and zero).
    pub fn max_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total_degree).max().unwrap_or(0)
    }

    /// Largest conductor appearing in any term's scalar.
    pub fn conductor(&self) -> u32 {
        self.terms.values().map(CycloRat::conductor).fold(1, |a, b| {
            // lcm of small conductors
            let g = {
                let (mut x, mut y) = (a, b);
                while y != 0 {
                    let t = x % y;
                    x = y;
                    y = t;
                }
                x
            };
            a / g * b
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &CycloRat)> {
        self.terms.iter()
    }

    fn insert_add(&mut self, m: Monomial, c: CycloRat) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = &*existing + &c;
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    /// Multiply, dropping product terms whose total parameter degree
    /// exceeds `cap` (used when verifying to a fixed parameter degree).
    pub fn mul_capped(&self, other: &Coef, cap: Option<u32>) -> Coef {
        let mut out = Coef::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some(cap) = cap {
                    if ma.total_degree() + mb.total_degree() > cap {
                        continue;
                    }
                }
                out.insert_add(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn scalar_mul(&self, s: &CycloRat) -> Coef {
        if s.is_zero() {
            return Coef::zero();
        }
        Coef {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * s))
                .collect(),
        }
    }

    /// Drop terms with total parameter degree above `cap`.
    pub fn prune_above(&self, cap: u32) -> Coef {
        Coef {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.total_degree() <= cap)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Inverse; only parameter-free nonzero coefficients are invertible in
    /// the coefficient ring.
    pub fn inv(&self) -> Result<Coef> {
        match self.as_scalar() {
            Some(s) => Ok(Coef::scalar(s.inv()?)),
            None => Err(Error::NotInvertible(format!(
                "coefficient {self} is not a nonzero scalar"
            ))),
        }
    }

    pub fn pow(&self, e: u32) -> Coef {
        let mut acc = Coef::one();
        for _ in 0..e {
            acc = acc.mul_capped(self, None);
        }
        acc
    }

    /// Group terms by the exponent of parameter `p`: degree -> (coefficient
    /// with `p` removed). Used by parameter substitution.
    pub fn split_by_degree(&self, p: Param) -> BTreeMap<u32, Coef> {
        let mut out: BTreeMap<u32, Coef> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (rest, e) = m.without(p);
            out.entry(e).or_insert_with(Coef::zero).insert_add(rest, c.clone());
        }
        out.retain(|_, c| !c.is_zero());
        out
    }
}

impl Add for &Coef {
    type Output = Coef;
    fn add(self, rhs: &Coef) -> Coef {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_add(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Coef {
    type Output = Coef;
    fn sub(self, rhs: &Coef) -> Coef {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.insert_add(m.clone(), -c);
        }
        out
    }
}

impl Neg for &Coef {
    type Output = Coef;
    fn neg(self) -> Coef {
        Coef {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Mul for &Coef {
    type Output = Coef;
    fn mul(self, rhs: &Coef) -> Coef {
        self.mul_capped(rhs, None)
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut pieces: Vec<String> = Vec::new();
        for (m, c) in &self.terms {
            let cs = c.to_string();
            // Parenthesize scalars that are genuine field-extension sums.
            let needs_parens = !m.is_one()
                && (cs[1..].contains('+') || cs[1..].contains('-'));
            let piece = if m.is_one() {
                cs
            } else if c.is_one() {
                m.to_string()
            } else if (-c).is_one() {
                format!("-{m}")
            } else if needs_parens {
                format!("({cs})*{m}")
            } else {
                format!("{cs}*{m}")
            };
            pieces.push(piece);
        }
        let mut s = pieces[0].clone();
        for p in &pieces[1..] {
            if let Some(stripped) = p.strip_prefix('-') {
                s.push('-');
                s.push_str(stripped);
            } else {
                s.push('+');
                s.push_str(p);
            }
        }
        write!(f, "{s}")
    }
}
