//! Exact q-series engine for Rogers-Ramanujan type identities.
//!
//! The crate provides, bottom up:
//!
//! - [`cyclo`]: exact arithmetic in cyclotomic fields Q(zeta_m);
//! - [`coef`]: sparse multivariate polynomials in named formal parameters
//!   over cyclotomic rationals (the coefficient ring of every series);
//! - [`qseries`]: truncated Puiseux series in `q` with exponents in
//!   (1/D) * Z and explicit truncation-order tracking;
//! - [`zqseries`]: Laurent series in an auxiliary variable `z` whose
//!   coefficients are q-series, with completeness windows for exact
//!   constant-term extraction;
//! - [`qfactors`]: q-Pochhammer symbols, Gaussian binomials, Rogers-Szego
//!   polynomials and theta kernels;
//! - [`summation`]: multi-dimensional q-hypergeometric sums with certified
//!   enumeration cutoffs;
//! - [`products`]: structured infinite-product expressions and their
//!   evaluation;
//! - [`ctkit`]: replay of constant-term proofs;
//! - [`recognize`]: conversion of a series back into an infinite product
//!   (logarithmic-derivative divisor recursion + period detection);
//! - [`catalog`]: the identity catalog (text format, parser, verifier);
//! - [`search`]: deterministic rediscovery of identities over a candidate
//!   grid.
//!
//! Everything is exact: coefficients are big rationals (optionally with a
//! root of unity adjoined), exponents are rationals with a per-series
//! global denominator, and every series carries the order to which it is
//! known. There are no floating-point comparisons and no tolerances.
//!
//! The crate is `no_std` + `alloc`; all file IO lives in the companion
//! `qrr` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

pub mod cyclo;
pub mod coef;
pub mod qseries;
pub mod zqseries;
pub mod qfactors;
pub mod summation;
pub mod products;
pub mod ctkit;
pub mod recognize;
pub mod catalog;
pub mod search;

use alloc::string::String;
use core::fmt;

/// Exact rational exponent (numerator/denominator in machine integers).
///
/// Exponent arithmetic never outgrows i64 at the orders this crate
/// targets; coefficient arithmetic, which does grow, uses big rationals.
pub type Exp = num_rational::Ratio<i64>;

/// Evaluation context threaded through every series-producing routine:
/// the target truncation order in q and an optional cap on total
/// parameter degree (identities in parameters are verified per degree, so
/// coefficient terms above the cap may be dropped during evaluation).
#[derive(Clone, Copy, Debug)]
pub struct EvalCtx {
    pub order: Exp,
    pub cap: Option<u32>,
}

impl EvalCtx {
    pub fn new(order: Exp, cap: Option<u32>) -> Self {
        EvalCtx { order, cap }
    }

    /// Integer order, no parameter cap.
    pub fn to_order(n: i64) -> Self {
        EvalCtx { order: Exp::from_integer(n), cap: None }
    }
}

/// Errors shared across the crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Error {
    /// A series inverse or coefficient inverse was requested for a value
    /// whose leading coefficient is not an invertible scalar.
    NotInvertible(String),
    /// An infinite construction (product factor or sum) would contribute
    /// infinitely many terms below the requested truncation order.
    NonTruncating(String),
    /// The cutoff watchdog could not certify finiteness of the set of
    /// lattice points contributing to the requested order.
    NonSummable(String),
    /// A z-coefficient was requested outside the completeness window of a
    /// `ZQSeries`.
    WindowMiss(String),
    /// Product recognition produced a non-integer divisor-sum value; the
    /// series is not an integral eta-like product.
    NonIntegerExponent(String),
    /// Product recognition found no period `<= max_period` in the exponent
    /// sequence.
    PeriodNotFound(String),
    /// A Pochhammer factor in a denominator vanishes identically.
    PoleInDenominator(String),
    /// An operation required a parameter-free (or conductor-1, or D = 1)
    /// value and got something richer.
    Unsupported(String),
    /// A record needs monomial specializations (its parameter exponents
    /// are not uniformly nonnegative) but none were supplied.
    NeedsSpecialization(String),
    /// Catalog / expression text could not be parsed.
    Parse(String),
    /// Two sides of an identity disagree. Carries the first mismatching
    /// exponent (as a string "num/den") and the two coefficient values.
    Mismatch {
        exponent: String,
        lhs: String,
        rhs: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotInvertible(s) => write!(f, "not invertible: {s}"),
            Error::NonTruncating(s) => write!(f, "non-truncating construction: {s}"),
            Error::NonSummable(s) => write!(f, "non-summable: {s}"),
            Error::WindowMiss(s) => write!(f, "z-window miss: {s}"),
            Error::NonIntegerExponent(s) => write!(f, "non-integer product exponent: {s}"),
            Error::PeriodNotFound(s) => write!(f, "no period found: {s}"),
            Error::PoleInDenominator(s) => write!(f, "pole in denominator: {s}"),
            Error::Unsupported(s) => write!(f, "unsupported operation: {s}"),
            Error::NeedsSpecialization(s) => write!(f, "needs specialization: {s}"),
            Error::Parse(s) => write!(f, "parse error: {s}"),
            Error::Mismatch { exponent, lhs, rhs } => {
                write!(f, "mismatch at q^({exponent}): lhs = {lhs}, rhs = {rhs}")
            }
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
