//! Tokenizer and recursive-descent parser for the catalog text format.
//!
//! See the module docs in `catalog` for the grammar. Everything here
//! parses into the evaluation-ready structures of `summation`, `products`
//! and `ctkit`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::coef::{Monomial, Param};
use crate::ctkit::CtFactor;
use crate::cyclo::CycloRat;
use crate::products::{ProdFactor, ProductExpr, Subscript};
use crate::qfactors::{PochArg, QMono};
use crate::summation::{LinForm, MultiSumSpec, ParamPower, QuadForm, ScalarPower, SumFactor};
use crate::{Error, Exp, Result};

use super::{Record, SideExpr, SideFactor, SideTerm, Specialization, Status, Strategy};

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Num(i64),
    Ident(String),
    Caret,
    LParen,
    RParen,
    Underscore,
    Semi,
    Comma,
    Star,
    Slash,
    Plus,
    Minus,
    Colon,
    Eq,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '_' => {
                out.push(Tok::Underscore);
                i += 1;
            }
            ';' => {
                out.push(Tok::Semi);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            ':' => {
                out.push(Tok::Colon);
                i += 1;
            }
            '=' => {
                out.push(Tok::Eq);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < b.len() && (b[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let n: i64 = s[start..i]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number in '{s}'")))?;
                out.push(Tok::Num(n));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < b.len()
                    && ((b[i] as char).is_ascii_alphanumeric())
                {
                    i += 1;
                }
                out.push(Tok::Ident(s[start..i].to_string()));
            }
            _ => return Err(Error::Parse(format!("unexpected character '{c}' in '{s}'"))),
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Polynomials in the sum indices (exponent expressions)
// ---------------------------------------------------------------------------

/// Sparse polynomial in the index variables with rational coefficients;
/// the key is the per-variable exponent vector.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u8>, Exp>,
}

impl Poly {
    fn constant(nvars: usize, c: Exp) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; nvars], c);
        }
        Poly { nvars, terms }
    }

    fn var(nvars: usize, v: usize) -> Self {
        let mut key = vec![0u8; nvars];
        key[v] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(key, Exp::from_integer(1));
        Poly { nvars, terms }
    }

    fn add(&self, o: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        for (k, v) in &o.terms {
            let merged = terms.get(k).copied().unwrap_or_else(Exp::zero) + *v;
            if merged.is_zero() {
                terms.remove(k);
            } else {
                terms.insert(k.clone(), merged);
            }
        }
        Poly { nvars: self.nvars, terms }
    }

    fn neg(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), -*v)).collect(),
        }
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut terms: BTreeMap<Vec<u8>, Exp> = BTreeMap::new();
        for (ka, va) in &self.terms {
            for (kb, vb) in &o.terms {
                let key: Vec<u8> = ka.iter().zip(kb).map(|(a, b)| a + b).collect();
                let merged = terms.get(&key).copied().unwrap_or_else(Exp::zero) + *va * *vb;
                if merged.is_zero() {
                    terms.remove(&key);
                } else {
                    terms.insert(key, merged);
                }
            }
        }
        Poly { nvars: self.nvars, terms }
    }

    fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::constant(self.nvars, Exp::from_integer(1));
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    fn degree(&self) -> u8 {
        self.terms
            .keys()
            .map(|k| k.iter().sum::<u8>())
            .max()
            .unwrap_or(0)
    }

    fn to_quad(&self) -> Result<QuadForm> {
        if self.degree() > 2 {
            return Err(Error::Parse("q-exponent has degree > 2 in the indices".into()));
        }
        let mut quad = QuadForm::zero(self.nvars);
        for (k, v) in &self.terms {
            let vars: Vec<usize> = k
                .iter()
                .enumerate()
                .flat_map(|(i, e)| core::iter::repeat(i).take(*e as usize))
                .collect();
            match vars.len() {
                0 => quad.lin.constant += *v,
                1 => quad.lin.coeffs[vars[0]] += *v,
                2 => quad.add_cross(vars[0], vars[1], *v),
                _ => unreachable!(),
            }
        }
        Ok(quad)
    }

    fn to_lin(&self) -> Result<LinForm> {
        if self.degree() > 1 {
            return Err(Error::Parse("exponent must be affine in the indices".into()));
        }
        let q = self.to_quad()?;
        Ok(q.lin)
    }
}

// ---------------------------------------------------------------------------
// Parser state
// ---------------------------------------------------------------------------

struct P<'a> {
    toks: &'a [Tok],
    pos: usize,
    /// Names of the sum indices in scope (empty outside a sum body).
    indices: Vec<String>,
    /// When true, `z` is a legal symbol (proof scripts).
    allow_z: bool,
    src: &'a str,
}

/// A parsed multiplicative atom inside a sum body or a proof script: a
/// monomial in q/params/z with polynomial exponents.
#[derive(Clone, Debug)]
struct MonoPoly {
    scalar: CycloRat,
    /// root-of-unity or rational scalars raised to affine powers.
    sign_pows: Vec<(CycloRat, Poly)>,
    /// parameter -> affine exponent polynomial.
    params: Vec<(Param, Poly)>,
    q_exp: Poly,
    z_exp: i64,
}

impl MonoPoly {
    fn one(nvars: usize) -> Self {
        MonoPoly {
            scalar: CycloRat::one(),
            sign_pows: Vec::new(),
            params: Vec::new(),
            q_exp: Poly::constant(nvars, Exp::zero()),
            z_exp: 0,
        }
    }

    fn mul(mut self, o: MonoPoly) -> MonoPoly {
        self.scalar = &self.scalar * &o.scalar;
        self.sign_pows.extend(o.sign_pows);
        self.params.extend(o.params);
        self.q_exp = self.q_exp.add(&o.q_exp);
        self.z_exp += o.z_exp;
        self
    }

    /// Convert to a constant QMono (no index variables, no z).
    fn to_qmono(&self) -> Result<QMono> {
        if self.z_exp != 0 {
            return Err(Error::Parse("z is not allowed here".into()));
        }
        let mut scalar = self.scalar.clone();
        let mut params = Monomial::one();
        for (c, p) in &self.sign_pows {
            let e = p.to_lin()?;
            if !e.coeffs.iter().all(Zero::is_zero) {
                return Err(Error::Parse("index variable outside a sum body".into()));
            }
            if !e.constant.is_integer() {
                return Err(Error::Parse("non-integer scalar power".into()));
            }
            scalar = &scalar * &c.pow(e.constant.to_integer())?;
        }
        for (p, e) in &self.params {
            let l = e.to_lin()?;
            if !l.coeffs.iter().all(Zero::is_zero) {
                return Err(Error::Parse("index variable outside a sum body".into()));
            }
            if !l.constant.is_integer() || l.constant.is_negative() {
                return Err(Error::Parse(format!(
                    "parameter {p} needs a nonnegative integer power here"
                )));
            }
            params = params.mul(&Monomial::param_pow(*p, l.constant.to_integer() as u32));
        }
        let q = self.q_exp.to_lin()?;
        if !q.coeffs.iter().all(Zero::is_zero) {
            return Err(Error::Parse("index variable outside a sum body".into()));
        }
        Ok(QMono::new(scalar, params, q.constant))
    }

    /// Convert to a QMono plus a z-power (proof scripts).
    fn to_qmono_z(&self) -> Result<(QMono, i64)> {
        let flat = MonoPoly { z_exp: 0, ..self.clone() };
        Ok((flat.to_qmono()?, self.z_exp))
    }
}

impl<'a> P<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Parse(format!("{msg} (at token {} in '{}')", self.pos, self.src)))
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(ref got) if *got == t => Ok(()),
            got => self.err(&format!("expected {t:?}, got {got:?}")),
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nvars(&self) -> usize {
        self.indices.len()
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.indices.iter().position(|s| s == name)
    }

    // -- exponent polynomials ------------------------------------------------

    /// Parse an exponent after '^': either a single (signed) number, a
    /// single index variable, or a parenthesized polynomial expression.
    fn exponent(&mut self) -> Result<Poly> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.expect(Tok::LParen)?;
                let p = self.poly_expr()?;
                self.expect(Tok::RParen)?;
                Ok(p)
            }
            Some(Tok::Minus) => {
                self.next();
                let p = self.exponent()?;
                Ok(p.neg())
            }
            Some(Tok::Num(_)) => {
                let r = self.rational()?;
                Ok(Poly::constant(self.nvars(), r))
            }
            Some(Tok::Ident(name)) => {
                if let Some(v) = self.index_of(&name) {
                    self.next();
                    Ok(Poly::var(self.nvars(), v))
                } else {
                    self.err(&format!("unknown exponent symbol '{name}'"))
                }
            }
            other => self.err(&format!("bad exponent start {other:?}")),
        }
    }

    /// number or number/number
    fn rational(&mut self) -> Result<Exp> {
        let n = match self.next() {
            Some(Tok::Num(n)) => n,
            other => return self.err(&format!("expected number, got {other:?}")),
        };
        if self.peek() == Some(&Tok::Slash) {
            // Only treat as a fraction when followed directly by a number.
            if let Some(Tok::Num(d)) = self.toks.get(self.pos + 1) {
                let d = *d;
                self.pos += 2;
                if d == 0 {
                    return self.err("division by zero");
                }
                return Ok(Exp::new(n, d));
            }
        }
        Ok(Exp::from_integer(n))
    }

    fn poly_expr(&mut self) -> Result<Poly> {
        let mut acc = if self.eat(&Tok::Minus) {
            self.poly_term()?.neg()
        } else {
            self.poly_term()?
        };
        loop {
            if self.eat(&Tok::Plus) {
                let t = self.poly_term()?;
                acc = acc.add(&t);
            } else if self.eat(&Tok::Minus) {
                let t = self.poly_term()?;
                acc = acc.add(&t.neg());
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn poly_term(&mut self) -> Result<Poly> {
        let mut acc = self.poly_factor()?;
        loop {
            if self.eat(&Tok::Star) {
                let f = self.poly_factor()?;
                acc = acc.mul(&f);
            } else if self.eat(&Tok::Slash) {
                // division by a nonzero rational only
                let r = self.rational()?;
                if r.is_zero() {
                    return self.err("division by zero");
                }
                acc = acc.mul(&Poly::constant(self.nvars(), Exp::from_integer(1) / r));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn poly_factor(&mut self) -> Result<Poly> {
        let base = match self.peek().cloned() {
            Some(Tok::Num(_)) => {
                let r = self.rational()?;
                Poly::constant(self.nvars(), r)
            }
            Some(Tok::Ident(name)) => {
                if let Some(v) = self.index_of(&name) {
                    self.next();
                    Poly::var(self.nvars(), v)
                } else {
                    return self.err(&format!("unknown symbol '{name}' in exponent"));
                }
            }
            Some(Tok::LParen) => {
                self.next();
                let p = self.poly_expr()?;
                self.expect(Tok::RParen)?;
                p
            }
            other => return self.err(&format!("bad exponent factor {other:?}")),
        };
        if self.eat(&Tok::Caret) {
            let e = match self.next() {
                Some(Tok::Num(n)) if (0..=4).contains(&n) => n as u32,
                other => return self.err(&format!("bad power {other:?} in exponent")),
            };
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }

    // -- monomials ------------------------------------------------------------

    /// Parse one multiplicative monomial atom: rational, q[^e], param[^e],
    /// z[^k], z3/z4/z6 root-of-unity symbols [^e], or a parenthesized
    /// signed monomial like (-1)[^e].
    fn mono_atom(&mut self) -> Result<MonoPoly> {
        let nv = self.nvars();
        let mut m = MonoPoly::one(nv);
        match self.peek().cloned() {
            Some(Tok::Num(_)) => {
                let r = self.rational()?;
                m.scalar = CycloRat::from_ratio(*r.numer(), *r.denom());
            }
            Some(Tok::Minus) => {
                self.next();
                let inner = self.mono_atom()?;
                m = inner;
                m.scalar = -&m.scalar;
            }
            Some(Tok::LParen) => {
                // A parenthesized signed scalar, e.g. (-1)^(i+j).
                self.next();
                let inner = self.signed_scalar()?;
                self.expect(Tok::RParen)?;
                if self.eat(&Tok::Caret) {
                    let e = self.exponent()?;
                    m.sign_pows.push((inner, e));
                } else {
                    m.scalar = inner;
                }
            }
            Some(Tok::Ident(name)) => {
                self.next();
                match name.as_str() {
                    "q" => {
                        if self.eat(&Tok::Caret) {
                            m.q_exp = self.exponent()?;
                        } else {
                            m.q_exp = Poly::constant(nv, Exp::from_integer(1));
                        }
                    }
                    "z" if self.allow_z => {
                        if self.eat(&Tok::Caret) {
                            let p = self.exponent()?;
                            let l = p.to_lin()?;
                            if !l.coeffs.iter().all(Zero::is_zero) || !l.constant.is_integer() {
                                return self.err("z power must be a fixed integer");
                            }
                            m.z_exp = l.constant.to_integer();
                        } else {
                            m.z_exp = 1;
                        }
                    }
                    "z3" | "z4" | "z6" | "z8" => {
                        let order: u32 = name[1..].parse().unwrap();
                        let zeta = CycloRat::root_of_unity(order, 1);
                        if self.eat(&Tok::Caret) {
                            let e = self.exponent()?;
                            m.sign_pows.push((zeta, e));
                        } else {
                            m.scalar = &m.scalar * &zeta;
                        }
                    }
                    _ if name.len() == 1 => {
                        let p = Param(name.as_bytes()[0] as char);
                        if self.eat(&Tok::Caret) {
                            let e = self.exponent()?;
                            m.params.push((p, e));
                        } else {
                            m.params.push((p, Poly::constant(nv, Exp::from_integer(1))));
                        }
                    }
                    _ => return self.err(&format!("unknown symbol '{name}'")),
                }
            }
            other => return self.err(&format!("bad monomial start {other:?}")),
        }
        Ok(m)
    }

    /// A signed rational or root-of-unity scalar (inside parens).
    fn signed_scalar(&mut self) -> Result<CycloRat> {
        let neg = self.eat(&Tok::Minus);
        let c = match self.peek().cloned() {
            Some(Tok::Num(_)) => {
                let r = self.rational()?;
                CycloRat::from_ratio(*r.numer(), *r.denom())
            }
            Some(Tok::Ident(name)) if matches!(name.as_str(), "z3" | "z4" | "z6" | "z8") => {
                self.next();
                let order: u32 = name[1..].parse().unwrap();
                CycloRat::root_of_unity(order, 1)
            }
            other => return self.err(&format!("bad scalar {other:?}")),
        };
        Ok(if neg { -&c } else { c })
    }

    /// A product of monomial atoms joined by '*' (no '/').
    fn mono_product(&mut self) -> Result<MonoPoly> {
        let mut m = self.mono_atom()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            // Only continue if the next atom is monomial-like; otherwise
            // leave the '*' for the caller (e.g. a Pochhammer follows).
            let save = self.pos;
            self.next();
            match self.mono_atom() {
                Ok(o) => m = m.mul(o),
                Err(_) => {
                    self.pos = save;
                    break;
                }
            }
        }
        // Division inside an argument: e.g. -q/z or u*v/q.
        while matches!(self.peek(), Some(Tok::Slash)) {
            // Peek past to ensure the divisor is a monomial atom; '/' here
            // divides the argument monomial.
            let save = self.pos;
            self.next();
            match self.mono_atom() {
                Ok(o) => {
                    // Invert: scalar, q-exp, z-exp, params with negated
                    // exponents; parameters in denominators are rejected
                    // later when converting (they would need negative
                    // exponents, which QMono does not carry) -- except we
                    // fold them as negative affine powers for sums.
                    let inv = MonoPoly {
                        scalar: o.scalar.inv()?,
                        sign_pows: o
                            .sign_pows
                            .into_iter()
                            .map(|(c, p)| (c, p.neg()))
                            .collect(),
                        params: o.params.into_iter().map(|(p, e)| (p, e.neg())).collect(),
                        q_exp: o.q_exp.neg(),
                        z_exp: -o.z_exp,
                    };
                    m = m.mul(inv);
                }
                Err(_) => {
                    self.pos = save;
                    break;
                }
            }
        }
        Ok(m)
    }

    // -- Pochhammer -----------------------------------------------------------

    /// Parse the inside of a Pochhammer starting after '(' and consume
    /// through the subscript. Returns (args, base, subscript-poly-or-oo).
    fn poch_tail(&mut self) -> Result<(Vec<MonoPoly>, Exp, Option<Poly>)> {
        let mut args = vec![self.mono_product()?];
        while self.eat(&Tok::Comma) {
            args.push(self.mono_product()?);
        }
        self.expect(Tok::Semi)?;
        // base: q or q^k with k a positive rational
        match self.next() {
            Some(Tok::Ident(ref s)) if s == "q" => {}
            other => return self.err(&format!("expected q in Pochhammer base, got {other:?}")),
        }
        let base = if self.eat(&Tok::Caret) {
            let p = self.exponent()?;
            let l = p.to_lin()?;
            if !l.coeffs.iter().all(Zero::is_zero) {
                return self.err("Pochhammer base must be index-free");
            }
            l.constant
        } else {
            Exp::from_integer(1)
        };
        self.expect(Tok::RParen)?;
        self.expect(Tok::Underscore)?;
        let sub = match self.peek().cloned() {
            Some(Tok::Ident(ref s)) if s == "oo" => {
                self.next();
                None
            }
            Some(Tok::Ident(name)) => {
                if let Some(v) = self.index_of(&name) {
                    self.next();
                    Some(Poly::var(self.nvars(), v))
                } else {
                    return self.err(&format!("unknown subscript '{name}'"));
                }
            }
            Some(Tok::Num(n)) => {
                self.next();
                Some(Poly::constant(self.nvars(), Exp::from_integer(n)))
            }
            Some(Tok::Minus) => {
                self.next();
                match self.next() {
                    Some(Tok::Num(n)) => {
                        Some(Poly::constant(self.nvars(), Exp::from_integer(-n)))
                    }
                    other => return self.err(&format!("bad subscript {other:?}")),
                }
            }
            Some(Tok::LParen) => {
                self.next();
                let p = self.poly_expr()?;
                self.expect(Tok::RParen)?;
                Some(p)
            }
            other => return self.err(&format!("bad subscript {other:?}")),
        };
        Ok((args, base, sub))
    }

    /// Check whether the '(' at the current position opens a Pochhammer
    /// (a ';' occurs at depth 1 before the matching ')').
    fn paren_is_poch(&self) -> bool {
        let mut depth = 0usize;
        for t in &self.toks[self.pos..] {
            match t {
                Tok::LParen => depth += 1,
                Tok::RParen => {
                    if depth == 1 {
                        return false;
                    }
                    depth -= 1;
                }
                Tok::Semi if depth == 1 => return true,
                _ => {}
            }
        }
        false
    }

    // -- sum bodies -------------------------------------------------------

    /// Parse a full sum expression after `sum(`.
    fn sum_expr(&mut self) -> Result<MultiSumSpec> {
        // index list
        let mut names = Vec::new();
        loop {
            match self.next() {
                Some(Tok::Ident(n)) => names.push(n),
                other => return self.err(&format!("bad sum index {other:?}")),
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::Colon)?;
        let outer_indices = core::mem::replace(&mut self.indices, names);
        let spec = self.sum_body();
        self.indices = outer_indices;
        spec
    }

    fn sum_body(&mut self) -> Result<MultiSumSpec> {
        let nv = self.nvars();
        let mut quad = QuadForm::zero(nv);
        let mut signs: Vec<ScalarPower> = Vec::new();
        let mut params: Vec<(Param, Poly)> = Vec::new();
        let mut factors: Vec<SumFactor> = Vec::new();
        let mut scalar = CycloRat::one();
        let mut invert = false;
        // Inversion context of enclosing factor groups, e.g. the
        // denominator group in `q^(...) / ((q;q)_i * (q;q)_j)`.
        let mut inv_stack: Vec<bool> = Vec::new();

        loop {
            // Open factor groups; the current inversion distributes over
            // every factor inside.
            while matches!(self.peek(), Some(Tok::LParen))
                && !self.paren_is_poch()
                && self.paren_is_group()
            {
                self.next();
                inv_stack.push(invert);
            }
            // One multiplicative factor: poch or monomial.
            if matches!(self.peek(), Some(Tok::LParen)) && self.paren_is_poch() {
                self.next();
                let (args, base, sub) = self.poch_tail()?;
                let power_base = if invert { -1 } else { 1 };
                let power = if self.eat(&Tok::Caret) {
                    let p = self.exponent()?;
                    let l = p.to_lin()?;
                    if !l.coeffs.iter().all(Zero::is_zero) || !l.constant.is_integer() {
                        return self.err("Pochhammer power must be a fixed integer");
                    }
                    power_base * l.constant.to_integer() as i32
                } else {
                    power_base
                };
                let sub = match sub {
                    Some(p) => p.to_lin()?,
                    None => return self.err("infinite Pochhammer inside a sum body"),
                };
                for arg in args {
                    let (mono, z) = arg.to_qmono_z()?;
                    if z != 0 {
                        return self.err("z inside a sum body");
                    }
                    if !arg.sign_pows.is_empty() || arg.params.iter().any(|(_, e)| e.degree() > 0)
                    {
                        return self.err("Pochhammer argument must be index-free");
                    }
                    factors.push(SumFactor {
                        arg: PochArg::new(mono, base),
                        subscript: sub.clone(),
                        power,
                        strict: false,
                    });
                }
            } else {
                let m = self.mono_product()?;
                if m.z_exp != 0 {
                    return self.err("z inside a sum body");
                }
                let mut mq = m.q_exp;
                let mut msigns = m.sign_pows;
                let mut mparams = m.params;
                let mut mscalar = m.scalar;
                if invert {
                    mq = mq.neg();
                    msigns = msigns.into_iter().map(|(c, p)| (c, p.neg())).collect();
                    mparams = mparams.into_iter().map(|(p, e)| (p, e.neg())).collect();
                    mscalar = mscalar.inv()?;
                }
                scalar = &scalar * &mscalar;
                quad = add_quad(quad, &mq.to_quad()?);
                for (c, p) in msigns {
                    signs.push(ScalarPower { base: c, exponent: p.to_lin()? });
                }
                for (p, e) in mparams {
                    merge_param(&mut params, p, e);
                }
            }
            while matches!(self.peek(), Some(Tok::RParen)) && !inv_stack.is_empty() {
                self.next();
                inv_stack.pop();
            }
            let base = inv_stack.last().copied().unwrap_or(false);
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    invert = base;
                }
                Some(Tok::Slash) => {
                    self.next();
                    invert = !base;
                }
                _ => {
                    if !inv_stack.is_empty() {
                        return self.err("unbalanced factor group");
                    }
                    break;
                }
            }
        }
        if !scalar.is_one() {
            signs.push(ScalarPower {
                base: scalar,
                exponent: LinForm::constant(nv, Exp::from_integer(1)),
            });
        }
        // Index metadata: for each axis find a denominator (q^d;q^d)_{i_j}.
        let mut index = vec![1i64; nv];
        for (j, slot) in index.iter_mut().enumerate() {
            for f in &factors {
                let is_axis = f.power == -1
                    && f.subscript.constant.is_zero()
                    && f.subscript
                        .coeffs
                        .iter()
                        .enumerate()
                        .all(|(a, c)| (a == j) == (*c == Exp::from_integer(1)) && (a == j || c.is_zero()));
                if is_axis
                    && f.arg.mono.params.is_one()
                    && f.arg.mono.scalar == CycloRat::one()
                    && f.arg.mono.q_exp == f.arg.base
                    && f.arg.base.is_integer()
                {
                    *slot = f.arg.base.to_integer();
                    break;
                }
            }
        }
        let param_powers = params
            .into_iter()
            .map(|(p, e)| {
                Ok(ParamPower { param: p, exponent: e.to_lin()? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiSumSpec { rank: nv, index, quad, signs, params: param_powers, factors })
    }

    // -- sides -----------------------------------------------------------

    /// side := term ((+|-) term)*
    fn side(&mut self) -> Result<SideExpr> {
        let mut terms = Vec::new();
        let mut neg = self.eat(&Tok::Minus);
        loop {
            let mut t = self.side_term()?;
            if neg {
                t.scalar = -&t.scalar;
            }
            terms.push(t);
            if self.eat(&Tok::Plus) {
                neg = false;
            } else if self.eat(&Tok::Minus) {
                neg = true;
            } else {
                break;
            }
        }
        if self.peek().is_some() {
            return self.err("trailing input after side expression");
        }
        Ok(SideExpr { terms })
    }

    /// True when the '(' at the cursor opens a multiplicative group of
    /// factors, e.g. ((q;q)_oo * (-q;q^2)_oo), rather than a Pochhammer
    /// or a parenthesized scalar. Detected by a nested '(' or a '*'/'/'
    /// at depth 1 before the matching ')'.
    fn paren_is_group(&self) -> bool {
        let mut depth = 0usize;
        for t in &self.toks[self.pos..] {
            match t {
                Tok::LParen => {
                    depth += 1;
                    if depth >= 2 {
                        return true;
                    }
                }
                Tok::RParen => {
                    if depth <= 1 {
                        return false;
                    }
                    depth -= 1;
                }
                Tok::Star | Tok::Slash if depth == 1 => return true,
                _ => {}
            }
        }
        false
    }

    /// term := factor (('*'|'/') factor)*
    fn side_term(&mut self) -> Result<SideTerm> {
        self.side_term_until(false)
    }

    fn side_term_until(&mut self, until_rparen: bool) -> Result<SideTerm> {
        let mut factors: Vec<SideFactor> = Vec::new();
        let mut scalar = CycloRat::one();
        let mut mono_acc = QMono::q_pow(Exp::zero());
        let mut invert = false;
        loop {
            // sum?
            if let Some(Tok::Ident(name)) = self.peek() {
                if name == "sum" {
                    self.next();
                    self.expect(Tok::LParen)?;
                    let spec = self.sum_expr()?;
                    if invert {
                        return self.err("cannot divide by a sum");
                    }
                    factors.push(SideFactor::Sum(spec));
                    if !self.step_mul(&mut invert) {
                        break;
                    }
                    continue;
                }
            }
            if matches!(self.peek(), Some(Tok::LParen)) && self.paren_is_poch() {
                self.next();
                let (args, base, sub) = self.poch_tail()?;
                let power_base = if invert { -1 } else { 1 };
                let power = if self.eat(&Tok::Caret) {
                    let p = self.exponent()?;
                    let l = p.to_lin()?;
                    if !l.constant.is_integer() {
                        return self.err("Pochhammer power must be an integer");
                    }
                    power_base * l.constant.to_integer() as i32
                } else {
                    power_base
                };
                let sub = match sub {
                    None => Subscript::Inf,
                    Some(p) => {
                        let l = p.to_lin()?;
                        if !l.constant.is_integer() {
                            return self.err("finite subscript must be an integer");
                        }
                        Subscript::Int(l.constant.to_integer())
                    }
                };
                for arg in args {
                    let mono = arg.to_qmono()?;
                    factors.push(SideFactor::Poch(ProdFactor {
                        arg: PochArg::new(mono, base),
                        sub,
                        power,
                    }));
                }
            } else if matches!(self.peek(), Some(Tok::LParen)) && self.paren_is_group() {
                self.next();
                let inner = self.side_term_until(true)?;
                if invert {
                    scalar = &scalar * &inner.scalar.inv()?;
                    if !inner.mono.params.is_one() {
                        return self.err("cannot divide by a parameter monomial");
                    }
                    mono_acc.q_exp -= inner.mono.q_exp;
                    for f in inner.factors {
                        match f {
                            SideFactor::Poch(mut p) => {
                                p.power = -p.power;
                                factors.push(SideFactor::Poch(p));
                            }
                            SideFactor::Sum(_) => {
                                return self.err("cannot divide by a sum");
                            }
                        }
                    }
                } else {
                    scalar = &scalar * &inner.scalar;
                    mono_acc.params = mono_acc.params.mul(&inner.mono.params);
                    mono_acc.q_exp += inner.mono.q_exp;
                    factors.extend(inner.factors);
                }
            } else {
                let m = self.mono_product()?;
                let mono = m.to_qmono()?;
                if invert {
                    if mono.has_params() {
                        return self.err("cannot divide by a parameter monomial");
                    }
                    scalar = &scalar * &mono.scalar.inv()?;
                    mono_acc.q_exp -= mono.q_exp;
                } else {
                    scalar = &scalar * &mono.scalar;
                    mono_acc.params = mono_acc.params.mul(&mono.params);
                    mono_acc.q_exp += mono.q_exp;
                }
            }
            if !self.step_mul(&mut invert) {
                break;
            }
        }
        if until_rparen {
            self.expect(Tok::RParen)?;
        }
        mono_acc.scalar = CycloRat::one();
        Ok(SideTerm { scalar, mono: mono_acc, factors })
    }

    fn step_mul(&mut self, invert: &mut bool) -> bool {
        match self.peek() {
            Some(Tok::Star) => {
                self.pos += 1;
                *invert = false;
                true
            }
            Some(Tok::Slash) => {
                self.pos += 1;
                *invert = true;
                true
            }
            _ => false,
        }
    }

    // -- proof scripts ------------------------------------------------------

    /// proof := ctfactor ('*' ctfactor)* with '/' before a factor meaning
    /// its inverse (EulerInv for infinite Pochhammers with z).
    fn proof(&mut self) -> Result<Vec<CtFactor>> {
        let mut out = Vec::new();
        let mut invert = false;
        loop {
            if let Some(Tok::Ident(name)) = self.peek().cloned() {
                match name.as_str() {
                    "theta" => {
                        self.next();
                        self.expect(Tok::LParen)?;
                        let c = self.signed_scalar()?;
                        self.expect(Tok::Semi)?;
                        let base = {
                            let neg = self.eat(&Tok::Minus);
                            let r = self.rational()?;
                            if neg {
                                -r
                            } else {
                                r
                            }
                        };
                        self.expect(Tok::Semi)?;
                        let shift = {
                            let neg = self.eat(&Tok::Minus);
                            let r = self.rational()?;
                            if neg {
                                -r
                            } else {
                                r
                            }
                        };
                        self.expect(Tok::Semi)?;
                        let z_pow = {
                            let neg = self.eat(&Tok::Minus);
                            let n = match self.next() {
                                Some(Tok::Num(n)) => n,
                                other => return self.err(&format!("bad theta z-power {other:?}")),
                            };
                            if neg {
                                -n
                            } else {
                                n
                            }
                        };
                        self.expect(Tok::RParen)?;
                        if invert {
                            return self.err("cannot invert a theta kernel");
                        }
                        out.push(CtFactor::Kernel { c, base, shift, z_pow });
                        if !self.step_mul(&mut invert) {
                            break;
                        }
                        continue;
                    }
                    "geom" => {
                        self.next();
                        self.expect(Tok::LParen)?;
                        let m = self.mono_product()?;
                        self.expect(Tok::RParen)?;
                        let (mono, z_pow) = m.to_qmono_z()?;
                        out.push(CtFactor::Geom { mono, z_pow });
                        if !self.step_mul(&mut invert) {
                            break;
                        }
                        continue;
                    }
                    _ => {}
                }
            }
            if matches!(self.peek(), Some(Tok::LParen)) && self.paren_is_poch() {
                self.next();
                let (args, base, sub) = self.poch_tail()?;
                if sub.is_some() {
                    return self.err("proof Pochhammers must be infinite");
                }
                for arg in args {
                    let (mono, z_pow) = arg.to_qmono_z()?;
                    if z_pow == 0 {
                        // z-free: a constant prefactor.
                        out.push(CtFactor::Const(ProductExpr {
                            scalar: QMono::q_pow(Exp::zero()),
                            factors: vec![ProdFactor {
                                arg: PochArg::new(mono, base),
                                sub: Subscript::Inf,
                                power: if invert { -1 } else { 1 },
                            }],
                        }));
                    } else if invert {
                        out.push(CtFactor::EulerInv { mono, z_pow, base });
                    } else {
                        out.push(CtFactor::EulerProd { mono, z_pow, base });
                    }
                }
            } else {
                let m = self.mono_product()?;
                let (mut mono, z_pow) = m.to_qmono_z()?;
                let mut z_pow = z_pow;
                if invert {
                    mono = QMono::new(mono.scalar.inv()?, Monomial::one(), -mono.q_exp);
                    z_pow = -z_pow;
                }
                out.push(CtFactor::ZMono { mono, z_pow });
            }
            if !self.step_mul(&mut invert) {
                break;
            }
        }
        if self.peek().is_some() {
            return self.err("trailing input after proof script");
        }
        Ok(out)
    }
}

fn add_quad(mut a: QuadForm, b: &QuadForm) -> QuadForm {
    for r in 0..a.rank() {
        for c in 0..a.rank() {
            let v = b.a[r][c];
            a.a[r][c] += v;
        }
        let v = b.lin.coeffs[r];
        a.lin.coeffs[r] += v;
    }
    a.lin.constant += b.lin.constant;
    a
}

fn merge_param(params: &mut Vec<(Param, Poly)>, p: Param, e: Poly) {
    for (q, acc) in params.iter_mut() {
        if *q == p {
            *acc = acc.add(&e);
            return;
        }
    }
    params.push((p, e));
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

fn parse_with<T>(
    src: &str,
    allow_z: bool,
    f: impl for<'a> FnOnce(&mut P<'a>) -> Result<T>,
) -> Result<T> {
    let toks = tokenize(src)?;
    let mut p = P { toks: &toks, pos: 0, indices: Vec::new(), allow_z, src };
    f(&mut p)
}

/// Parse one side expression.
pub fn parse_side(src: &str) -> Result<SideExpr> {
    parse_with(src, false, |p| p.side())
}

/// Parse one proof (constant-term) script.
pub fn parse_proof(src: &str) -> Result<Vec<CtFactor>> {
    parse_with(src, true, |p| p.proof())
}

/// Parse a specialization list "a=-1, b=q^2".
fn parse_spec_line(src: &str) -> Result<Specialization> {
    let toks = tokenize(src)?;
    let mut p = P { toks: &toks, pos: 0, indices: Vec::new(), allow_z: false, src };
    let mut subs = Vec::new();
    loop {
        let param = match p.next() {
            Some(Tok::Ident(n)) if n.len() == 1 => Param(n.as_bytes()[0] as char),
            other => return p.err(&format!("bad specialization parameter {other:?}")),
        };
        p.expect(Tok::Eq)?;
        let m = p.mono_product()?;
        let mono = m.to_qmono()?;
        if mono.has_params() {
            return p.err("specialization values must be parameter-free");
        }
        subs.push((param, mono));
        if !p.eat(&Tok::Comma) {
            break;
        }
    }
    if p.peek().is_some() {
        return p.err("trailing input after specialization");
    }
    Ok(Specialization { subs })
}

/// Parse a whole catalog file.
pub fn parse_catalog(text: &str) -> Result<Vec<Record>> {
    let mut records: Vec<Record> = Vec::new();
    let mut current: Option<Record> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: &str| Error::Parse(format!("line {}: {msg}", lineno + 1));
        if let Some(rest) = line.strip_prefix('[') {
            let rest = rest
                .strip_suffix(']')
                .ok_or_else(|| at("missing closing ']'"))?;
            let id = rest
                .strip_prefix("id ")
                .ok_or_else(|| at("expected [id ...]"))?
                .trim()
                .to_string();
            if let Some(r) = current.take() {
                records.push(r);
            }
            current = Some(Record::empty(id));
            continue;
        }
        let rec = current
            .as_mut()
            .ok_or_else(|| at("directive before the first [id ...] block"))?;
        let (key, value) = match line.split_once(' ') {
            Some((k, v)) => (k, v.trim()),
            None => (line, ""),
        };
        match key {
            "note" => rec.note = value.to_string(),
            "tags" => {
                rec.tags = value.split_whitespace().map(ToString::to_string).collect()
            }
            "status" => {
                rec.status = match value {
                    "proved" => Status::Proved,
                    "conjecture" => Status::Conjecture,
                    other => return Err(at(&format!("unknown status '{other}'"))),
                }
            }
            "order" => {
                rec.order = Some(
                    value
                        .parse::<i64>()
                        .map_err(|_| at("order must be an integer"))?,
                )
            }
            "params" => {
                let mut it = value.split_whitespace();
                match it.next() {
                    Some("poly") => {
                        let deg = it
                            .next()
                            .and_then(|s| s.parse::<u32>().ok())
                            .ok_or_else(|| at("params poly needs a degree"))?;
                        rec.strategy = Strategy::PolyDeg(deg);
                    }
                    other => {
                        return Err(at(&format!("unknown params strategy {other:?}")))
                    }
                }
            }
            "spec" => {
                let s = parse_spec_line(value).map_err(|e| at(&format!("{e}")))?;
                match &mut rec.strategy {
                    Strategy::Specializations(v) => v.push(s),
                    Strategy::None => rec.strategy = Strategy::Specializations(vec![s]),
                    Strategy::PolyDeg(_) => {
                        return Err(at("cannot mix 'params poly' and 'spec'"))
                    }
                }
            }
            "side" => {
                let s = parse_side(value).map_err(|e| at(&format!("{e}")))?;
                rec.sides.push(s);
            }
            "proof" => {
                let f = parse_proof(value).map_err(|e| at(&format!("{e}")))?;
                rec.proof = Some(f);
            }
            other => return Err(at(&format!("unknown directive '{other}'"))),
        }
    }
    if let Some(r) = current.take() {
        records.push(r);
    }
    // Unique ids.
    for (i, r) in records.iter().enumerate() {
        for s in &records[..i] {
            if s.id == r.id {
                return Err(Error::Parse(format!("duplicate record id '{}'", r.id)));
            }
        }
    }
    Ok(records)
}
