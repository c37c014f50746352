//! Exact arithmetic in cyclotomic fields Q(zeta_m).
//!
//! A [`CycloRat`] is either a plain big rational (the overwhelmingly common
//! case) or an element of Q(zeta_m) stored in the power basis
//! 1, zeta, ..., zeta^{phi(m)-1} of Q[x]/Phi_m(x).
//!
//! Invariants:
//! - `Ext` values always have `m >= 3` and coordinate length `phi(m)`;
//! - `Ext` values are demoted to `Rat` whenever all higher coordinates
//!   vanish (so a rational value is always represented as `Rat`);
//! - equality is mathematical equality: values of different conductors are
//!   compared after promotion into the compositum.
//!
//! Only small conductors occur in practice (1, 3, 4 for the identities this
//! crate ships), so multiplication carries dedicated fast paths for m = 3
//! and m = 4 and falls back to generic reduction mod Phi_m otherwise.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// An element of a cyclotomic field with exact rational coordinates.
#[derive(Clone, Debug)]
pub enum CycloRat {
    /// An element of Q.
    Rat(BigRational),
    /// An element of Q(zeta_m), m >= 3, in the power basis of zeta_m.
    /// `coords.len() == phi(m)`.
    Ext { m: u32, coords: Vec<BigRational> },
}

/// Euler's totient for small arguments.
pub fn phi(m: u32) -> u32 {
    let mut n = m;
    let mut result = m;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

// ---------------------------------------------------------------------------
// Dense rational polynomial helpers (little-endian coefficient vectors)
// ---------------------------------------------------------------------------

fn poly_trim(p: &mut Vec<BigRational>) {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            out[i + j] += ai * bj;
        }
    }
    poly_trim(&mut out);
    out
}

/// Remainder of `a` modulo a *monic* polynomial `m`.
fn poly_rem(mut a: Vec<BigRational>, m: &[BigRational]) -> Vec<BigRational> {
    debug_assert!(m.last().is_some_and(One::is_one), "modulus must be monic");
    let deg_m = m.len() - 1;
    while a.len() > deg_m {
        let lead = a.pop().unwrap();
        if lead.is_zero() {
            continue;
        }
        let k = a.len() - deg_m; // x^k * m has the degree of the removed term
        for (j, mj) in m.iter().take(deg_m).enumerate() {
            if !mj.is_zero() {
                a[k + j] -= &lead * mj;
            }
        }
    }
    poly_trim(&mut a);
    a
}

/// Quotient and remainder of `a` by a monic polynomial `m`.
fn poly_divrem(mut a: Vec<BigRational>, m: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let deg_m = m.len() - 1;
    if a.len() <= deg_m {
        return (Vec::new(), a);
    }
    let mut quot = vec![BigRational::zero(); a.len() - deg_m];
    while a.len() > deg_m {
        let lead = a.pop().unwrap();
        if lead.is_zero() {
            continue;
        }
        let k = a.len() - deg_m;
        quot[k] = lead.clone();
        for (j, mj) in m.iter().take(deg_m).enumerate() {
            if !mj.is_zero() {
                a[k + j] -= &lead * mj;
            }
        }
    }
    poly_trim(&mut a);
    poly_trim(&mut quot);
    (quot, a)
}

/// The m-th cyclotomic polynomial Phi_m as a monic rational polynomial.
///
/// Computed by dividing x^m - 1 by the product of Phi_d over proper
/// divisors d | m. Conductors here are tiny, so no memoization is needed.
pub fn cyclotomic_poly(m: u32) -> Vec<BigRational> {
    assert!(m >= 1);
    // x^m - 1
    let mut num = vec![BigRational::zero(); m as usize + 1];
    num[0] = -BigRational::one();
    num[m as usize] = BigRational::one();
    let mut den = vec![BigRational::one()];
    for d in 1..m {
        if m % d == 0 {
            den = poly_mul(&den, &cyclotomic_poly(d));
        }
    }
    // den is monic (product of monic polynomials), so exact division works.
    let (quot, rem) = poly_divrem(num, &den);
    debug_assert!(rem.is_empty(), "cyclotomic division must be exact");
    quot
}

/// Extended Euclid in Q[x]: returns (g, u) with u*a = g (mod m) and g the
/// gcd of a and m. With m = Phi_m irreducible and a != 0 mod m, g is a
/// nonzero constant and u/g is the inverse of a.
fn poly_half_ext_gcd(a: Vec<BigRational>, m: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    // Invariants: r0 = u0 * a (mod m), r1 = u1 * a (mod m).
    let mut r0 = m.to_vec();
    let mut r1 = a;
    let mut u0: Vec<BigRational> = Vec::new();
    let mut u1: Vec<BigRational> = vec![BigRational::one()];
    while !r1.is_empty() {
        // Make r1 monic for division.
        let lead = r1.last().unwrap().clone();
        let monic: Vec<BigRational> = r1.iter().map(|c| c / &lead).collect();
        let (q, rem) = poly_divrem(r0.clone(), &monic);
        // r0 - (q/lead)*r1 = rem
        let q_scaled: Vec<BigRational> = q.iter().map(|c| c / &lead).collect();
        let mut new_u = u0.clone();
        let qu = poly_mul(&q_scaled, &u1);
        if new_u.len() < qu.len() {
            new_u.resize(qu.len(), BigRational::zero());
        }
        for (i, c) in qu.iter().enumerate() {
            new_u[i] -= c;
        }
        poly_trim(&mut new_u);
        r0 = r1;
        u0 = u1;
        r1 = rem;
        u1 = new_u;
    }
    (r0, u0)
}

// ---------------------------------------------------------------------------
// CycloRat
// ---------------------------------------------------------------------------

impl CycloRat {
    pub fn zero() -> Self {
        CycloRat::Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        CycloRat::Rat(BigRational::one())
    }

    pub fn from_i64(n: i64) -> Self {
        CycloRat::Rat(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0);
        CycloRat::Rat(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(r: BigRational) -> Self {
        CycloRat::Rat(r)
    }

    /// zeta_m^k, stored at the minimal conductor.
    pub fn root_of_unity(m: u32, k: i64) -> Self {
        assert!(m >= 1);
        let k = k.rem_euclid(m as i64) as u32;
        // Reduce zeta_m^k to primitive form zeta_{m/g}^{k/g}.
        let g = if k == 0 { m } else { gcd_u32(m, k) };
        let (m, k) = (m / g, k / g);
        if m == 1 {
            return CycloRat::one();
        }
        if m == 2 {
            return CycloRat::from_i64(-1);
        }
        let ph = phi(m) as usize;
        let mut poly = vec![BigRational::zero(); k as usize + 1];
        poly[k as usize] = BigRational::one();
        let reduced = poly_rem(poly, &cyclotomic_poly(m));
        let mut coords = vec![BigRational::zero(); ph];
        for (i, c) in reduced.into_iter().enumerate() {
            coords[i] = c;
        }
        CycloRat::Ext { m, coords }.normalized()
    }

    /// The conductor of the stored representation (1 for rationals).
    pub fn conductor(&self) -> u32 {
        match self {
            CycloRat::Rat(_) => 1,
            CycloRat::Ext { m, .. } => *m,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            CycloRat::Rat(r) => r.is_zero(),
            CycloRat::Ext { coords, .. } => coords.iter().all(Zero::is_zero),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, CycloRat::Rat(r) if r.is_one())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            CycloRat::Rat(r) => Some(r),
            CycloRat::Ext { .. } => None,
        }
    }

    /// Demote `Ext` values that are actually rational.
    fn normalized(self) -> Self {
        match self {
            CycloRat::Ext { m: _, ref coords } if coords[1..].iter().all(Zero::is_zero) => {
                CycloRat::Rat(coords[0].clone())
            }
            other => other,
        }
    }

    /// Re-express this value in Q(zeta_n); `n` must be a multiple of the
    /// current conductor.
    pub fn promote(&self, n: u32) -> Vec<BigRational> {
        let ph_n = phi(n) as usize;
        match self {
            CycloRat::Rat(r) => {
                let mut coords = vec![BigRational::zero(); ph_n];
                coords[0] = r.clone();
                coords
            }
            CycloRat::Ext { m, coords } => {
                assert!(n % m == 0, "promotion target must be a multiple of the conductor");
                if n == *m {
                    return coords.clone();
                }
                let step = (n / m) as usize;
                let mut poly = vec![BigRational::zero(); (coords.len() - 1) * step + 1];
                for (i, c) in coords.iter().enumerate() {
                    poly[i * step] = c.clone();
                }
                let reduced = poly_rem(poly, &cyclotomic_poly(n));
                let mut out = vec![BigRational::zero(); ph_n];
                for (i, c) in reduced.into_iter().enumerate() {
                    out[i] = c;
                }
                out
            }
        }
    }

    /// Multiplicative inverse.
    pub fn inv(&self) -> Result<CycloRat> {
        match self {
            CycloRat::Rat(r) => {
                if r.is_zero() {
                    Err(Error::NotInvertible(String::from("division by zero")))
                } else {
                    Ok(CycloRat::Rat(r.recip()))
                }
            }
            CycloRat::Ext { m: 4, coords } => {
                // (a + b*i)^{-1} = (a - b*i) / (a^2 + b^2)
                let (a, b) = (&coords[0], &coords[1]);
                let norm = a * a + b * b;
                if norm.is_zero() {
                    return Err(Error::NotInvertible(String::from("division by zero")));
                }
                Ok(CycloRat::Ext {
                    m: 4,
                    coords: vec![a / &norm, -(b / &norm)],
                }
                .normalized())
            }
            CycloRat::Ext { m: 3, coords } => {
                // (a + b*w)^{-1} = (a + b*w^2)/N = ((a - b) - b*w)/N,
                // N = a^2 - a*b + b^2.
                let (a, b) = (&coords[0], &coords[1]);
                let norm = a * a - a * b + b * b;
                if norm.is_zero() {
                    return Err(Error::NotInvertible(String::from("division by zero")));
                }
                Ok(CycloRat::Ext {
                    m: 3,
                    coords: vec![(a - b) / &norm, -(b / &norm)],
                }
                .normalized())
            }
            CycloRat::Ext { m, coords } => {
                if self.is_zero() {
                    return Err(Error::NotInvertible(String::from("division by zero")));
                }
                let mut a = coords.clone();
                poly_trim(&mut a);
                let modulus = cyclotomic_poly(*m);
                let (g, u) = poly_half_ext_gcd(a, &modulus);
                // Phi_m is irreducible, so g is a nonzero constant.
                debug_assert_eq!(g.len(), 1, "gcd with irreducible Phi_m must be constant");
                let ginv = g[0].recip();
                let scaled: Vec<BigRational> = u.iter().map(|c| c * &ginv).collect();
                let reduced = poly_rem(scaled, &modulus);
                let mut out = vec![BigRational::zero(); phi(*m) as usize];
                for (i, c) in reduced.into_iter().enumerate() {
                    out[i] = c;
                }
                Ok(CycloRat::Ext { m: *m, coords: out }.normalized())
            }
        }
    }

    /// Integer power (negative exponents via `inv`).
    pub fn pow(&self, e: i64) -> Result<CycloRat> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        let mut acc = CycloRat::one();
        let mut base = self.clone();
        let mut e = e as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Absolute value of the rational part, used only for display ordering;
    /// not meaningful for genuine extension elements.
    pub fn rational_abs(&self) -> Option<BigRational> {
        self.as_rational().map(Signed::abs)
    }
}

fn gcd_u32(a: u32, b: u32) -> u32 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm_u32(a: u32, b: u32) -> u32 {
    a / gcd_u32(a, b) * b
}

impl PartialEq for CycloRat {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (CycloRat::Rat(a), CycloRat::Rat(b)) => a == b,
            _ => {
                let n = lcm_u32(self.conductor(), other.conductor());
                self.promote(n) == other.promote(n)
            }
        }
    }
}

impl Eq for CycloRat {}

impl Neg for &CycloRat {
    type Output = CycloRat;
    fn neg(self) -> CycloRat {
        match self {
            CycloRat::Rat(r) => CycloRat::Rat(-r),
            CycloRat::Ext { m, coords } => CycloRat::Ext {
                m: *m,
                coords: coords.iter().map(|c| -c).collect(),
            },
        }
    }
}

impl Add for &CycloRat {
    type Output = CycloRat;
    fn add(self, rhs: &CycloRat) -> CycloRat {
        match (self, rhs) {
            (CycloRat::Rat(a), CycloRat::Rat(b)) => CycloRat::Rat(a + b),
            _ => {
                let n = lcm_u32(self.conductor(), rhs.conductor());
                let mut a = self.promote(n);
                let b = rhs.promote(n);
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                CycloRat::Ext { m: n, coords: a }.normalized()
            }
        }
    }
}

impl Sub for &CycloRat {
    type Output = CycloRat;
    fn sub(self, rhs: &CycloRat) -> CycloRat {
        self + &(-rhs)
    }
}

impl Mul for &CycloRat {
    type Output = CycloRat;
    fn mul(self, rhs: &CycloRat) -> CycloRat {
        match (self, rhs) {
            (CycloRat::Rat(a), CycloRat::Rat(b)) => {
                if a.is_zero() || b.is_zero() {
                    return CycloRat::zero();
                }
                CycloRat::Rat(a * b)
            }
            (CycloRat::Rat(a), CycloRat::Ext { m, coords })
            | (CycloRat::Ext { m, coords }, CycloRat::Rat(a)) => {
                if a.is_zero() {
                    return CycloRat::zero();
                }
                CycloRat::Ext {
                    m: *m,
                    coords: coords.iter().map(|c| c * a).collect(),
                }
                .normalized()
            }
            (CycloRat::Ext { m: 4, coords: x }, CycloRat::Ext { m: 4, coords: y }) => {
                // (a+bi)(c+di) = (ac - bd) + (ad + bc) i
                let (a, b, c, d) = (&x[0], &x[1], &y[0], &y[1]);
                CycloRat::Ext {
                    m: 4,
                    coords: vec![a * c - b * d, a * d + b * c],
                }
                .normalized()
            }
            (CycloRat::Ext { m: 3, coords: x }, CycloRat::Ext { m: 3, coords: y }) => {
                // (a+bw)(c+dw) with w^2 = -1 - w:
                // = (ac - bd) + (ad + bc - bd) w
                let (a, b, c, d) = (&x[0], &x[1], &y[0], &y[1]);
                let bd = b * d;
                CycloRat::Ext {
                    m: 3,
                    coords: vec![a * c - &bd, a * d + b * c - &bd],
                }
                .normalized()
            }
            _ => {
                let n = lcm_u32(self.conductor(), rhs.conductor());
                let a = self.promote(n);
                let b = rhs.promote(n);
                let prod = poly_mul(&a, &b);
                let reduced = poly_rem(prod, &cyclotomic_poly(n));
                let mut out = vec![BigRational::zero(); phi(n) as usize];
                for (i, c) in reduced.into_iter().enumerate() {
                    out[i] = c;
                }
                CycloRat::Ext { m: n, coords: out }.normalized()
            }
        }
    }
}

impl fmt::Display for CycloRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycloRat::Rat(r) => write!(f, "{r}"),
            CycloRat::Ext { m, coords } => {
                let mut parts: Vec<String> = Vec::new();
                for (i, c) in coords.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let var = if i == 0 {
                        String::new()
                    } else if i == 1 {
                        format!("z{m}")
                    } else {
                        format!("z{m}^{i}")
                    };
                    let piece = if i == 0 {
                        format!("{c}")
                    } else if c.is_one() {
                        var
                    } else if (-c).is_one() {
                        format!("-{var}")
                    } else {
                        format!("{c}*{var}")
                    };
                    parts.push(piece);
                }
                if parts.is_empty() {
                    return write!(f, "0");
                }
                let mut s = parts[0].clone();
                for p in &parts[1..] {
                    if let Some(stripped) = p.strip_prefix('-') {
                        s.push_str("-");
                        s.push_str(stripped);
                    } else {
                        s.push('+');
                        s.push_str(p);
                    }
                }
                write!(f, "{s}")
            }
        }
    }
}
