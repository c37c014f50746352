//! q-Pochhammer symbols, Gaussian binomials, Rogers-Szego polynomials and
//! the Jacobi triple-product kernel.
//!
//! A Pochhammer argument is a *q-monomial* `scalar * params * q^e` (the
//! scalar may live in a cyclotomic field, the parameter part is a power
//! product of formal parameters), together with a positive rational base
//! exponent d, representing (arg; q^d)_n:
//!
//! - finite n >= 0: the exact product prod_{j=0}^{n-1} (1 - arg*q^{d j});
//! - finite n < 0: the standard extension
//!   (arg; q^d)_n = 1 / prod_{j=1}^{-n} (1 - arg*q^{-d j});
//! - infinite: prod_{j>=0} (1 - arg*q^{d j}), truncated at the context
//!   order. Since d > 0, only factors with val(arg) + d*j below the order
//!   can touch known coefficients, so the product always truncates.
//!
//! The exact q-valuation of a finite Pochhammer value (as a function of
//! its subscript) is also computed here; the summation module's certified
//! cutoffs rely on it.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::coef::{Coef, Monomial};
use crate::cyclo::CycloRat;
use crate::qseries::QSeries;
use crate::zqseries::{Window, ZQSeries};
use crate::{Error, EvalCtx, Exp, Result};

/// A monomial `scalar * params * q^{q_exp}` (the admissible argument of a
/// Pochhammer symbol or a kernel substitution).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMono {
    pub scalar: CycloRat,
    pub params: Monomial,
    pub q_exp: Exp,
}

impl QMono {
    pub fn new(scalar: CycloRat, params: Monomial, q_exp: Exp) -> Self {
        QMono { scalar, params, q_exp }
    }

    /// c * q^e with no parameter part.
    pub fn scalar_q(scalar: CycloRat, q_exp: Exp) -> Self {
        QMono { scalar, params: Monomial::one(), q_exp }
    }

    /// Plain q^e.
    pub fn q_pow(q_exp: Exp) -> Self {
        Self::scalar_q(CycloRat::one(), q_exp)
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.is_zero()
    }

    pub fn has_params(&self) -> bool {
        !self.params.is_one()
    }

    /// The coefficient part (scalar * params), without the q-power.
    pub fn coef(&self) -> Coef {
        Coef::term(self.scalar.clone(), self.params.clone())
    }

    /// As an exact one-term series.
    pub fn to_series(&self) -> QSeries {
        QSeries::monomial(self.coef(), self.q_exp)
    }

    /// The monomial shifted by a further power of q.
    pub fn shift_q(&self, e: Exp) -> QMono {
        QMono { scalar: self.scalar.clone(), params: self.params.clone(), q_exp: self.q_exp + e }
    }

    pub fn neg(&self) -> QMono {
        QMono { scalar: -&self.scalar, params: self.params.clone(), q_exp: self.q_exp }
    }

    /// n-th power (n may be negative when the scalar is invertible and the
    /// parameter part is trivial).
    pub fn pow(&self, n: i64) -> Result<QMono> {
        let params = if n >= 0 {
            let mut m = Monomial::one();
            for _ in 0..n {
                m = m.mul(&self.params);
            }
            m
        } else if self.params.is_one() {
            Monomial::one()
        } else {
            return Err(Error::Unsupported(format!(
                "negative power of a parameterized monomial {self}"
            )));
        };
        Ok(QMono {
            scalar: self.scalar.pow(n)?,
            params,
            q_exp: self.q_exp * Exp::from_integer(n),
        })
    }
}

impl fmt::Display for QMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coef())?;
        if !self.q_exp.is_zero() {
            write!(f, "*q^({})", self.q_exp)?;
        }
        Ok(())
    }
}

/// The argument of a Pochhammer symbol: (mono; q^base).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PochArg {
    pub mono: QMono,
    /// Base exponent d in (arg; q^d); must be positive.
    pub base: Exp,
}

impl PochArg {
    pub fn new(mono: QMono, base: Exp) -> Self {
        PochArg { mono, base }
    }

    fn check_base(&self) -> Result<()> {
        if self.base.is_positive() {
            Ok(())
        } else {
            Err(Error::NonTruncating(format!(
                "Pochhammer base exponent {} is not positive",
                self.base
            )))
        }
    }
}

impl fmt::Display for PochArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}; q^({}))", self.mono, self.base)
    }
}

/// Exact q-valuation of a finite Pochhammer value as a function of its
/// subscript.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PochVal {
    /// The product contains an exactly-zero factor (only possible for
    /// n > 0 with arg = 1 * q^0).
    Zero,
    /// The extension hits a zero factor in a denominator position.
    Pole,
    /// Ordinary value with this valuation.
    Val(Exp),
}

/// Valuation of (arg; q^d)_n for any integer n, without expanding the
/// series. For factors (1 - arg*q^{d j}) the valuation is min(0, e + d*j)
/// except in the degenerate case e + d*j = 0, arg scalar exactly 1 with no
/// parameters, where the factor vanishes.
pub fn poch_val(arg: &PochArg, n: i64) -> PochVal {
    let e = arg.mono.q_exp;
    let d = arg.base;
    if arg.mono.is_zero() {
        return PochVal::Val(Exp::zero());
    }
    let factor_val = |j: i64, inverted: bool| -> PochVal {
        let fe = e + d * Exp::from_integer(j);
        if fe.is_zero() && !arg.mono.has_params() && arg.mono.scalar.is_one() {
            return if inverted { PochVal::Pole } else { PochVal::Zero };
        }
        let v = fe.min(Exp::zero());
        PochVal::Val(if inverted { -v } else { v })
    };
    let mut total = Exp::zero();
    if n >= 0 {
        for j in 0..n {
            match factor_val(j, false) {
                PochVal::Zero => return PochVal::Zero,
                PochVal::Pole => unreachable!(),
                PochVal::Val(v) => total += v,
            }
        }
    } else {
        for j in 1..=(-n) {
            match factor_val(-j, true) {
                PochVal::Zero => unreachable!(),
                PochVal::Pole => return PochVal::Pole,
                PochVal::Val(v) => total += v,
            }
        }
    }
    PochVal::Val(total)
}

/// Finite Pochhammer symbol (arg; q^d)_n, truncated at the context order.
pub fn poch_finite(arg: &PochArg, n: i64, ctx: &EvalCtx) -> Result<QSeries> {
    arg.check_base()?;
    if arg.mono.is_zero() {
        return Ok(QSeries::one().truncate(ctx.order));
    }
    let one = QSeries::one();
    if n >= 0 {
        let mut acc = one.truncate(ctx.order);
        for j in 0..n {
            let shift = arg.mono.q_exp + arg.base * Exp::from_integer(j);
            if shift >= ctx.order && shift >= Exp::zero() {
                // Factor is 1 + O(q^order): invisible at this order.
                continue;
            }
            let factor = one.sub(&QSeries::monomial(arg.mono.coef(), shift));
            acc = acc.mul_capped(&factor, ctx.cap).truncate(ctx.order);
            if acc.is_zero() && acc.trunc_order().is_none() {
                return Ok(acc); // exact zero: a vanishing factor
            }
        }
        Ok(acc)
    } else {
        // (arg; q^d)_{-k} = 1 / prod_{j=1}^{k} (1 - arg*q^{-d j})
        let mut denom = one.clone();
        for j in 1..=(-n) {
            let shift = arg.mono.q_exp - arg.base * Exp::from_integer(j);
            let factor = one.sub(&QSeries::monomial(arg.mono.coef(), shift));
            denom = denom.mul_capped(&factor, ctx.cap);
        }
        if denom.is_zero() {
            return Err(Error::PoleInDenominator(format!(
                "({arg})_{n} hits a vanishing factor"
            )));
        }
        denom.inv_to_capped(ctx.order, ctx.cap)
    }
}

/// Infinite Pochhammer symbol (arg; q^d)_oo, truncated at the context
/// order.
pub fn poch_inf(arg: &PochArg, ctx: &EvalCtx) -> Result<QSeries> {
    arg.check_base()?;
    if arg.mono.is_zero() {
        return Ok(QSeries::one().truncate(ctx.order));
    }
    let one = QSeries::one();
    let mut acc = one.truncate(ctx.order);
    let mut j: i64 = 0;
    loop {
        let shift = arg.mono.q_exp + arg.base * Exp::from_integer(j);
        // Factors are 1 - c*q^{shift}; once shift >= max(order, 0) the
        // factor can no longer touch any known coefficient. (shift >= 0 is
        // needed because a factor with negative shift always matters.)
        if shift >= ctx.order && shift >= Exp::zero() {
            break;
        }
        let factor = one.sub(&QSeries::monomial(arg.mono.coef(), shift));
        acc = acc.mul_capped(&factor, ctx.cap).truncate(ctx.order);
        j += 1;
    }
    Ok(acc)
}

/// Gaussian binomial coefficient [n choose m]_{q^d} as an exact
/// polynomial, via the Pascal recurrence
/// [n m] = [n-1 m-1] + q^{d m} [n-1 m].
pub fn qbinom(n: i64, m: i64, base: Exp) -> QSeries {
    if m < 0 || m > n || n < 0 {
        return QSeries::zero();
    }
    // row[k] = [i choose k]_{q^d} for the current i, kept only for k <= m.
    let mut row: Vec<QSeries> = alloc::vec![QSeries::one()];
    for i in 1..=n {
        let width = (i.min(m) + 1) as usize;
        let mut next: Vec<QSeries> = Vec::with_capacity(width);
        for k in 0..width {
            let diag = if k >= 1 {
                row.get(k - 1).cloned().unwrap_or_else(QSeries::zero)
            } else {
                QSeries::zero()
            };
            let up = row
                .get(k)
                .cloned()
                .unwrap_or_else(QSeries::zero)
                .mul(&QSeries::monomial(
                    Coef::one(),
                    base * Exp::from_integer(k as i64),
                ));
            next.push(diag.add(&up));
        }
        row = next;
    }
    row.get(m as usize).cloned().unwrap_or_else(QSeries::zero)
}

/// Rogers-Szego polynomial H_n(t; q^d) = sum_j [n choose j]_{q^d} t^j,
/// evaluated at a q-monomial t.
pub fn rogers_szego(n: i64, t: &QMono, base: Exp) -> Result<QSeries> {
    let mut acc = QSeries::zero();
    for j in 0..=n {
        let tj = t.pow(j)?;
        acc = acc.add(&qbinom(n, j, base).mul(&tj.to_series()));
    }
    Ok(acc)
}

/// Theta kernel sum_{n in Z} c^n q^{d n(n-1)/2 + s n} z^{beta n}, truncated
/// at `order`. With d > 0 the exponent grows quadratically in both
/// directions, so the support is finite and the kernel is complete for
/// every z-exponent.
pub fn theta_kernel(
    base: Exp,
    c: &CycloRat,
    q_shift: Exp,
    z_pow: i64,
    order: Exp,
) -> Result<ZQSeries> {
    if !base.is_positive() {
        return Err(Error::NonTruncating(format!(
            "theta kernel base exponent {base} is not positive"
        )));
    }
    if z_pow == 0 {
        return Err(Error::Unsupported(
            alloc::string::String::from("theta kernel needs a nonzero z-power"),
        ));
    }
    let exponent = |n: i64| -> Exp {
        base * Exp::new(n * (n - 1), 2) + q_shift * Exp::from_integer(n)
    };
    let mut terms = alloc::collections::BTreeMap::new();
    for sign in [1i64, -1] {
        let mut n = if sign == 1 { 0 } else { -1 };
        // The exponent is quadratic in n with positive leading part, so
        // once it passes the order while moving away from the vertex it
        // never returns. Walk outward until past both the order and the
        // vertex.
        loop {
            let e = exponent(n);
            if e < order {
                let coef = Coef::scalar(c.pow(n)?);
                if !coef.is_zero() {
                    let s = QSeries::monomial(coef, e).truncate(order);
                    if !s.is_zero() {
                        terms.insert(z_pow * n, s);
                    }
                }
            } else {
                // Past the vertex of the parabola? The derivative in n is
                // d*(n - 1/2) + s; stop once the next step moves further up.
                let next = exponent(n + sign);
                if next >= e {
                    break;
                }
            }
            n += sign;
        }
    }
    Ok(ZQSeries::new(order, terms, Window::All))
}

/// The Jacobi triple-product kernel sum_{n in Z} (-1)^n q^{n(n-1)/2} z^n.
pub fn jtp_kernel(order: Exp) -> ZQSeries {
    theta_kernel(
        Exp::from_integer(1),
        &CycloRat::from_i64(-1),
        Exp::zero(),
        1,
        order,
    )
    .expect("fixed positive base")
}

/// Convenience: the product (a1, a2, ..., ak; q^d)_oo.
pub fn poch_inf_list(args: &[QMono], base: Exp, ctx: &EvalCtx) -> Result<QSeries> {
    let mut acc = QSeries::one().truncate(ctx.order);
    for mono in args {
        let p = poch_inf(&PochArg::new(mono.clone(), base), ctx)?;
        acc = acc.mul_capped(&p, ctx.cap);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coef::Param;

    fn ctx(n: i64) -> EvalCtx {
        EvalCtx::to_order(n)
    }

    fn qq_inf(n: i64) -> QSeries {
        poch_inf(
            &PochArg::new(QMono::q_pow(Exp::from_integer(1)), Exp::from_integer(1)),
            &ctx(n),
        )
        .unwrap()
    }

    #[test]
    fn euler_pentagonal_numbers() {
        // (q;q)_oo = 1 - q - q^2 + q^5 + q^7 - q^12 - q^15 + ...
        let f = qq_inf(20);
        let expect = [
            (0, 1),
            (1, -1),
            (2, -1),
            (5, 1),
            (7, 1),
            (12, -1),
            (15, -1),
        ];
        for (e, c) in expect {
            assert_eq!(
                f.coeff(Exp::from_integer(e)).unwrap(),
                Coef::from_i64(c),
                "coefficient of q^{e}"
            );
        }
        assert_eq!(f.coeff(Exp::from_integer(3)).unwrap(), Coef::zero());
    }

    #[test]
    fn partition_generating_function() {
        // 1/(q;q)_oo has the partition numbers as coefficients.
        let f = qq_inf(12).inv().unwrap();
        let p = [1, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56];
        for (e, c) in p.iter().enumerate() {
            assert_eq!(
                f.coeff(Exp::from_integer(e as i64)).unwrap(),
                Coef::from_i64(*c),
                "p({e})"
            );
        }
    }

    #[test]
    fn finite_poch_negative_index_extension() {
        // (a; q)_{-n} = 1/((a q^{-n}; q)_n) as exact series identities;
        // check (q^3; q)_{-2} = 1/((1 - q^2)(1 - q)).
        let arg = PochArg::new(QMono::q_pow(Exp::from_integer(3)), Exp::from_integer(1));
        let lhs = poch_finite(&arg, -2, &ctx(15)).unwrap();
        let rhs = QSeries::one()
            .sub(&QSeries::monomial(Coef::one(), Exp::from_integer(1)))
            .mul(
                &QSeries::one().sub(&QSeries::monomial(Coef::one(), Exp::from_integer(2))),
            )
            .inv_to(Exp::from_integer(15))
            .unwrap();
        lhs.expect_equal(&rhs).unwrap();
    }

    #[test]
    fn poch_val_matches_series_valuation() {
        // (-q^{-1}; q^2)_n has valuation -1 for n >= 1.
        let arg = PochArg::new(
            QMono::scalar_q(CycloRat::from_i64(-1), Exp::from_integer(-1)),
            Exp::from_integer(2),
        );
        for n in 0..5 {
            let s = poch_finite(&arg, n, &ctx(10)).unwrap();
            match poch_val(&arg, n) {
                PochVal::Val(v) => assert_eq!(s.val(), Some(v), "n = {n}"),
                other => panic!("unexpected {other:?}"),
            }
        }
        // Negative index: (-q; q^2)_{-1} = 1/(1 + q^{-1}) = q - q^2 + ...
        let arg2 = PochArg::new(
            QMono::scalar_q(CycloRat::from_i64(-1), Exp::from_integer(1)),
            Exp::from_integer(2),
        );
        let s = poch_finite(&arg2, -1, &ctx(8)).unwrap();
        assert_eq!(s.val(), Some(Exp::from_integer(1)));
        match poch_val(&arg2, -1) {
            PochVal::Val(v) => assert_eq!(v, Exp::from_integer(1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn qbinom_small_values() {
        // [4 2]_q = 1 + q + 2q^2 + q^3 + q^4
        let b = qbinom(4, 2, Exp::from_integer(1));
        let expect = [(0, 1), (1, 1), (2, 2), (3, 1), (4, 1)];
        for (e, c) in expect {
            assert_eq!(b.coeff_or_zero(Exp::from_integer(e)), Coef::from_i64(c));
        }
        // Symmetry [5 2] = [5 3]
        assert_eq!(
            qbinom(5, 2, Exp::from_integer(1)),
            qbinom(5, 3, Exp::from_integer(1))
        );
    }

    #[test]
    fn rogers_szego_specialization() {
        // H_n(q^2; q^4) = (-q^2; q^2)_n for small n.
        for n in 0..8 {
            let h = rogers_szego(
                n,
                &QMono::q_pow(Exp::from_integer(2)),
                Exp::from_integer(4),
            )
            .unwrap();
            let rhs = poch_finite(
                &PochArg::new(
                    QMono::scalar_q(CycloRat::from_i64(-1), Exp::from_integer(2)),
                    Exp::from_integer(2),
                ),
                n,
                &ctx(200),
            )
            .unwrap();
            h.truncate(Exp::from_integer(200)).expect_equal(&rhs).unwrap();
        }
    }

    #[test]
    fn jtp_kernel_against_product() {
        // CT-free check: sum_n (-1)^n q^{n(n-1)/2} z^n at z = q^e equals
        // (q, q^e, q^{1-e}; q)_oo for e = 1/2 (both sides on the half lattice).
        let order = Exp::from_integer(20);
        let kernel = jtp_kernel(order);
        let e = Exp::new(1, 2);
        // Evaluate the kernel at z = q^{1/2}: collect q^{n(n-1)/2 + n/2}.
        let mut lhs = QSeries::zero_to(order);
        for (w, s) in kernel.iter() {
            lhs = lhs.add(&s.mul(&QSeries::monomial(Coef::one(), e * Exp::from_integer(*w))));
        }
        let c = EvalCtx::new(order, None);
        let rhs = poch_inf_list(
            &[
                QMono::q_pow(Exp::from_integer(1)),
                QMono::q_pow(e),
                QMono::q_pow(Exp::from_integer(1) - e),
            ],
            Exp::from_integer(1),
            &c,
        )
        .unwrap();
        lhs.expect_equal(&rhs).unwrap();
    }

    #[test]
    fn finite_euler_form_is_polynomial_in_param() {
        // (-z; q)_n = sum_k [n k]_q q^{k(k-1)/2} z^k with z a parameter.
        let z = Param('z');
        let big = EvalCtx::new(Exp::from_integer(5000), None);
        for n in 0..10 {
            let lhs = poch_finite(
                &PochArg::new(
                    QMono::new(CycloRat::from_i64(-1), Monomial::param(z), Exp::zero()),
                    Exp::from_integer(1),
                ),
                n,
                &big,
            )
            .unwrap();
            let mut rhs = QSeries::zero();
            for k in 0..=n {
                let term = qbinom(n, k, Exp::from_integer(1))
                    .mul(&QSeries::monomial(
                        Coef::term(CycloRat::one(), Monomial::param_pow(z, k as u32)),
                        Exp::new(k * (k - 1), 2),
                    ));
                rhs = rhs.add(&term);
            }
            lhs.expect_equal(&rhs.truncate(big.order)).unwrap();
        }
    }
}
