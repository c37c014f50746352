//! Deterministic rediscovery of sum-to-product identities over a small
//! candidate grid.
//!
//! The grid enumerates rank-1 sums
//!
//! ```text
//!   f(a, b, d) = sum_{n >= 0} q^{a n^2 + b n} / (q^d; q^d)_n
//! ```
//!
//! over configured denominators d, quadratic coefficients 1 <= a <=
//! max_quad and shifts b in [shift_min, shift_max]. Each candidate is
//! expanded exactly to a first order, screened (normalized leading term,
//! nonnegative coefficients), pushed through product recognition, and the
//! recognized product is re-expanded and compared at a strictly higher
//! second order. Survivors are emitted as canonical text lines.
//!
//! Everything is exact integer/rational arithmetic over ordered maps, so
//! the output is byte-deterministic. Sharding splits the enumeration by
//! the candidate counter modulo the shard count; the union of all shards
//! equals the unsharded run by construction.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Signed;

use crate::recognize::recognize_product;
use crate::summation::{eval_multisum, MultiSumSpec, QuadForm};
use crate::{EvalCtx, Exp, Result};

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Denominator bases d for (q^d; q^d)_n.
    pub indices: Vec<i64>,
    /// Quadratic coefficient a ranges over 1..=max_quad.
    pub max_quad: i64,
    /// Linear coefficient b ranges over shift_min..=shift_max.
    pub shift_min: i64,
    pub shift_max: i64,
    /// First (screening) order; raised internally to fit the recognition
    /// window if needed.
    pub order1: i64,
    /// Confirmation order (must exceed the first).
    pub order2: i64,
    /// Maximum product period to accept.
    pub max_period: usize,
    /// Shard count (>= 1) and this shard's id (0-based).
    pub shards: u32,
    pub shard: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            indices: alloc::vec![1, 2, 4],
            max_quad: 2,
            shift_min: -1,
            shift_max: 2,
            order1: 60,
            order2: 100,
            max_period: 12,
            shards: 1,
            shard: 0,
        }
    }
}

/// One confirmed identity.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Candidate {
    /// Canonical dedup/sort key "d a b".
    pub key: String,
    /// Human-readable identity line.
    pub line: String,
}

fn candidate_spec(d: i64, a: i64, b: i64) -> MultiSumSpec {
    let mut quad = QuadForm::zero(1);
    quad.a[0][0] = Exp::from_integer(a);
    quad.lin.coeffs[0] = Exp::from_integer(b);
    MultiSumSpec::standard(alloc::vec![d], quad)
}

/// Run the grid search. Returns confirmed candidates sorted by key.
pub fn run_search(cfg: &SearchConfig) -> Result<Vec<Candidate>> {
    assert!(cfg.shards >= 1 && cfg.shard < cfg.shards, "bad shard split");
    assert!(cfg.order2 > cfg.order1, "confirmation order must exceed screening order");
    let window = (2 * cfg.max_period).max(32) as i64;
    let n1 = cfg.order1.max(window + 2).max(4 * cfg.max_period as i64);
    let n2 = cfg.order2.max(n1 + 1);
    let ctx1 = EvalCtx::to_order(n1);
    let ctx2 = EvalCtx::to_order(n2);

    let mut out: Vec<Candidate> = Vec::new();
    let mut counter: u32 = 0;
    for &d in &cfg.indices {
        for a in 1..=cfg.max_quad {
            for b in cfg.shift_min..=cfg.shift_max {
                let mine = counter % cfg.shards == cfg.shard;
                counter += 1;
                if !mine {
                    continue;
                }
                let spec = candidate_spec(d, a, b);
                let Ok(f) = eval_multisum(&spec, &ctx1) else {
                    continue;
                };
                // Screen: normalized (f = 1 + O(q)) with nonnegative
                // integer-free... nonnegative rational coefficients.
                let screened = f.iter().all(|(_, c)| {
                    c.as_scalar()
                        .and_then(|s| s.as_rational())
                        .is_some_and(|r| !r.is_negative())
                });
                if !screened {
                    continue;
                }
                let Ok(prod) = recognize_product(&f, cfg.max_period) else {
                    continue;
                };
                // Confirm at the higher order.
                let Ok(lhs) = eval_multisum(&spec, &ctx2) else {
                    continue;
                };
                let Ok(rhs) = prod.eval(&ctx2) else {
                    continue;
                };
                if lhs.expect_equal(&rhs).is_err() {
                    continue;
                }
                let key = format!("d={d} a={a} b={b}");
                let line = format!(
                    "sum(n): q^({a}*n^2{}{}*n) / (q^{d};q^{d})_n  =  {}",
                    if b >= 0 { "+" } else { "" },
                    b,
                    prod.render()
                );
                out.push(Candidate { key, line });
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}
