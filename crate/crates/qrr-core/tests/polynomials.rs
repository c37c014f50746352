//! Exact polynomial-identity suites: the q-binomial ledger behind the
//! u-id coefficient identity, the Rogers-Szego specialization, the finite
//! Euler form, per-degree coefficient slices, and the g_m family.

use num_rational::Ratio;
use qrr_core::coef::{Coef, Monomial, Param};
use qrr_core::cyclo::CycloRat;
use qrr_core::qfactors::{qbinom, rogers_szego, PochArg, QMono};
use qrr_core::qseries::QSeries;
use qrr_core::{EvalCtx, Exp};

fn e(n: i64) -> Exp {
    Exp::from_integer(n)
}

fn q_mono(k: i64) -> QSeries {
    QSeries::monomial(Coef::one(), e(k))
}

/// L_n(q) = q^{n^2+n} sum_{i=0}^n [n i]_{q^4} q^{4i^2-(4n+2)i}.
fn l_poly(n: i64) -> QSeries {
    let mut acc = QSeries::zero();
    for i in 0..=n {
        acc = acc.add(&qbinom(n, i, e(4)).mul(&q_mono(4 * i * i - (4 * n + 2) * i)));
    }
    acc.mul(&q_mono(n * n + n))
}

/// R_n(q) = (-q^2; q^2)_n as an exact polynomial.
fn r_poly(n: i64) -> QSeries {
    let mut acc = QSeries::one();
    for k in 1..=n {
        acc = acc.mul(&QSeries::one().add(&q_mono(2 * k)));
    }
    acc
}

#[test]
fn ln_equals_rn_up_to_30() {
    for n in 0..=30 {
        l_poly(n)
            .expect_equal(&r_poly(n))
            .unwrap_or_else(|err| panic!("L_{n} != R_{n}: {err}"));
    }
}

#[test]
fn both_sides_satisfy_shared_recurrence() {
    for n in 1..=30 {
        let step = QSeries::one().add(&q_mono(2 * n));
        l_poly(n)
            .expect_equal(&l_poly(n - 1).mul(&step))
            .unwrap_or_else(|err| panic!("L recurrence fails at n = {n}: {err}"));
        r_poly(n)
            .expect_equal(&r_poly(n - 1).mul(&step))
            .unwrap_or_else(|err| panic!("R recurrence fails at n = {n}: {err}"));
    }
}

#[test]
fn rogers_szego_specialization_up_to_30() {
    // H_n(q^2; q^4) = (-q^2; q^2)_n.
    for n in 0..=30 {
        let h = rogers_szego(n, &QMono::q_pow(e(2)), e(4)).unwrap();
        h.expect_equal(&r_poly(n))
            .unwrap_or_else(|err| panic!("H_{n}(q^2;q^4) != (-q^2;q^2)_{n}: {err}"));
    }
}

#[test]
fn finite_euler_form_up_to_20() {
    // (-z;q)_n = sum_k [n k] z^k q^{k(k-1)/2}, z a formal parameter.
    let z = Param('z');
    for n in 0..=20 {
        let mut lhs = QSeries::one();
        for m in 0..n {
            lhs = lhs.mul(&QSeries::one().add(&QSeries::monomial(Coef::param(z), e(m))));
        }
        let mut rhs = QSeries::zero();
        for k in 0..=n {
            let zk = Coef::term(CycloRat::one(), Monomial::param_pow(z, k as u32));
            rhs = rhs.add(&qbinom(n, k, e(1)).mul(&QSeries::monomial(zk, e(k * (k - 1) / 2))));
        }
        lhs.expect_equal(&rhs)
            .unwrap_or_else(|err| panic!("finite Euler form fails at n = {n}: {err}"));
    }
}

/// (q^d; q^d)_k as an exact polynomial.
fn poch_qd(d: i64, k: i64) -> QSeries {
    let mut acc = QSeries::one();
    for m in 1..=k {
        acc = acc.add(&acc.mul(&q_mono(d * m)).neg());
    }
    acc
}

#[test]
fn coefficient_slices_up_to_25() {
    // sum_{i+j=n} q^{i^2-2ij+j^2+j-i} / ((q^4;q^4)_i (q^4;q^4)_j)
    //   = 1 / (q^2;q^2)_n, as series to order 40.
    let order = e(40);
    for n in 0..=25 {
        let mut lhs = QSeries::zero_to(order);
        for i in 0..=n {
            let j = n - i;
            let t = i - j;
            let term = q_mono(t * t - t)
                .mul(&poch_qd(4, i).inv_to(order).unwrap())
                .truncate(order)
                .mul(&poch_qd(4, j).inv_to(order).unwrap())
                .truncate(order);
            lhs = lhs.add(&term);
        }
        let rhs = poch_qd(2, n).inv_to(order).unwrap();
        lhs.truncate(order)
            .expect_equal(&rhs)
            .unwrap_or_else(|err| panic!("coefficient slice fails at n = {n}: {err}"));
    }
}

/// g_m(q) = sum_{n >= max(0, m)} q^{n(n-m+1)} / ((q;q)_n (q;q)_{n-m}),
/// exact to `order` (the standard convention kills n < m).
fn g_m(m: i64, order: i64, ctx: &EvalCtx) -> QSeries {
    let arg = PochArg::new(QMono::q_pow(e(1)), e(1));
    let mut acc = QSeries::zero_to(e(order));
    let mut n = m.max(0);
    while n * (n - m + 1) <= order {
        let num = q_mono(n * (n - m + 1));
        let d1 = qrr_core::qfactors::poch_finite(&arg, n, ctx)
            .unwrap()
            .inv_to(e(order))
            .unwrap();
        let d2 = qrr_core::qfactors::poch_finite(&arg, n - m, ctx)
            .unwrap()
            .inv_to(e(order))
            .unwrap();
        acc = acc.add(&num.mul(&d1).truncate(e(order)).mul(&d2).truncate(e(order)));
        n += 1;
    }
    acc.truncate(e(order))
}

#[test]
fn gm_recurrence_and_closed_form() {
    // Work at a boosted internal order: the recurrence multiplies by
    // q^{1-m} and the closed form's theta terms dip as low as q^{-36}
    // over |m| <= 8, and each shift eats into the known window.
    let check = 40i64;
    let inner = check + 40;
    let ctx = EvalCtx::to_order(inner);
    let arg = PochArg::new(QMono::q_pow(e(1)), e(1));
    let euler_inv = qrr_core::qfactors::poch_inf(&arg, &ctx)
        .unwrap()
        .inv_to(e(inner))
        .unwrap();
    for m in -8..=8 {
        // Recurrence: g_m + q^{1-m} g_{m-1} = 1/(q;q)_oo.
        let lhs = g_m(m, inner, &ctx)
            .add(&g_m(m - 1, inner, &ctx).mul(&q_mono(1 - m)))
            .truncate(e(check));
        lhs.expect_equal(&euler_inv.truncate(e(check)))
            .unwrap_or_else(|err| panic!("g recurrence fails at m = {m}: {err}"));

        // Closed form: g_m (q;q)_oo = sum_n (-1)^n q^{binom(n+1,2)+(n+1)m}.
        let mut theta = QSeries::zero_to(e(inner));
        let mut n = 0i64;
        loop {
            let expo = n * (n + 1) / 2 + (n + 1) * m;
            if n * (n + 1) / 2 + (n + 1) * m.min(0) > inner {
                break;
            }
            if expo <= inner {
                let sign = if n % 2 == 0 { Coef::one() } else { Coef::from_i64(-1) };
                theta = theta.add(&QSeries::monomial(sign, Ratio::from_integer(expo)));
            }
            n += 1;
        }
        let closed = euler_inv.mul(&theta).truncate(e(check));
        g_m(m, inner, &ctx)
            .truncate(e(check))
            .expect_equal(&closed)
            .unwrap_or_else(|err| panic!("g closed form fails at m = {m}: {err}"));
    }
}
