//! Integer-shape cases checked against exact rational arithmetic.

use bfbin_core::numerics::log_binom_coeff;
use bfbin_core::oc::parameter_grid;
use bfbin_core::predictive::{pred_indep, pred_leq, pred_plus, pred_point_null};
use bfbin_core::prelude::*;
use bfbin_core::priors::{trunc_const_leq, trunc_const_minus, trunc_const_plus};
use bfbin_core::region::order_integrals;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

type Q = BigRational;

fn fact(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn choose(n: u64, k: u64) -> Q {
    Q::new(fact(n), fact(k) * fact(n - k))
}

/// `B(a, b)` for positive integers.
fn beta(a: u64, b: u64) -> Q {
    Q::new(fact(a - 1) * fact(b - 1), fact(a + b - 1))
}

/// `P(p2 > p1)` for `p1 ~ Beta(a1, b1)`, `p2 ~ Beta(a2, b2)`, using
/// `I_x(a, b) = Σ_{j=a}^{a+b−1} C(m, j) x^j (1−x)^{m−j}`.
fn exact_c(a1: u64, b1: u64, a2: u64, b2: u64) -> Q {
    let m = a1 + b1 - 1;
    let mut s = Q::zero();
    for j in a1..=m {
        s += choose(m, j) * beta(a2 + j, b2 + m - j);
    }
    s / beta(a2, b2)
}

/// `∫∫_{p2 < p1} p1^{a1−1}(1−p1)^{b1−1} p2^{a2−1}(1−p2)^{b2−1}`.
fn exact_lower(a1: u64, b1: u64, a2: u64, b2: u64) -> Q {
    let m = a2 + b2 - 1;
    let mut s = Q::zero();
    for j in a2..=m {
        s += choose(m, j) * beta(a1 + j, b1 + m - j);
    }
    s * beta(a2, b2)
}

fn exact_pred_leq(n1: u64, y1: u64, n2: u64, y2: u64, p: (u64, u64, u64, u64)) -> Q {
    let (a1, b1, a2, b2) = p;
    let c0 = Q::one() - exact_c(a1, b1, a2, b2);
    choose(n1, y1) * choose(n2, y2) * exact_lower(a1 + y1, b1 + n1 - y1, a2 + y2, b2 + n2 - y2)
        / (beta(a1, b1) * beta(a2, b2) * c0)
}

fn exact_pred_plus(n1: u64, y1: u64, n2: u64, y2: u64, p: (u64, u64, u64, u64)) -> Q {
    let (a1, b1, a2, b2) = p;
    let (u1, v1, u2, v2) = (a1 + y1, b1 + n1 - y1, a2 + y2, b2 + n2 - y2);
    let upper = beta(u1, v1) * beta(u2, v2) - exact_lower(u1, v1, u2, v2);
    choose(n1, y1) * choose(n2, y2) * upper / (beta(a1, b1) * beta(a2, b2) * exact_c(a1, b1, a2, b2))
}

fn f(x: &Q) -> f64 {
    x.to_f64().unwrap()
}

fn q() -> QuadratureSettings {
    QuadratureSettings::default()
}

fn bp(a: f64, b: f64) -> BetaPrior {
    BetaPrior::new(a, b).unwrap()
}

#[test]
fn independent_predictive_matches_rationals() {
    let layout = TrialLayout::new(2, 3).unwrap();
    let mut total = Q::zero();
    for y1 in 0..=2u64 {
        for y2 in 0..=3u64 {
            let exact = choose(2, y1) * beta(2 + y1, 3 + 2 - y1) / beta(2, 3) * choose(3, y2) * beta(1 + y2, 4 + 3 - y2)
                / beta(1, 4);
            total += exact.clone();
            let got = pred_indep(y1 as u32, y2 as u32, layout, bp(2.0, 3.0), bp(1.0, 4.0)).unwrap();
            assert!((got / f(&exact) - 1.0).abs() < 1e-12, "({y1},{y2}): {got} vs {exact}");
        }
    }
    assert_eq!(total, Q::one());
}

#[test]
fn truncation_constants_match_rationals() {
    for (a1, b1, a2, b2) in [(2, 5, 3, 4), (1, 2, 2, 1), (3, 3, 3, 3), (1, 1, 1, 1), (7, 2, 1, 9)] {
        let c = exact_c(a1, b1, a2, b2);
        let (p, m) = (bp(a1 as f64, b1 as f64), bp(a2 as f64, b2 as f64));
        let got = trunc_const_plus(p, m, &q()).unwrap();
        assert!((got - f(&c)).abs() < 1e-13, "C{:?}: {got} vs {}", (a1, b1, a2, b2), f(&c));
        let minus = trunc_const_minus(p, m, &q()).unwrap();
        assert!((minus - f(&(Q::one() - c.clone()))).abs() < 1e-13);
        let leq = trunc_const_leq(p, m, &q()).unwrap();
        assert!((leq - f(&(Q::one() - c))).abs() < 1e-13);
    }
    // (1,2) vs (2,1): p2 > p1 is likely.
    assert_eq!(exact_c(1, 2, 2, 1), Q::new(BigInt::from(5), BigInt::from(6)));
}

#[test]
fn lower_integrals_match_rationals() {
    for a1 in 1..=5u64 {
        for b1 in 1..=5u64 {
            for (a2, b2) in [(1, 1), (2, 3), (4, 1), (5, 5)] {
                let exact = f(&exact_lower(a1, b1, a2, b2));
                let got = order_integrals(
                    a1 as f64,
                    b1 as f64,
                    a2 as f64,
                    b2 as f64,
                    KernelMethod::Auto,
                    &q(),
                )
                .unwrap();
                assert!((got.ln_lower.exp() / exact - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn composite_null_predictive_matches_rationals() {
    let layout = TrialLayout::new(2, 2).unwrap();
    let shapes = (2, 1, 1, 2);
    let mut total = Q::zero();
    for y1 in 0..=2u64 {
        for y2 in 0..=2u64 {
            let exact = exact_pred_leq(2, y1, 2, y2, shapes);
            total += exact.clone();
            let got = pred_leq(y1 as u32, y2 as u32, layout, bp(2.0, 1.0), bp(1.0, 2.0), &q()).unwrap();
            assert!((got / f(&exact) - 1.0).abs() < 1e-12, "({y1},{y2}): {got} vs {}", f(&exact));
        }
    }
    assert_eq!(total, Q::one());
}

#[test]
fn one_patient_per_arm_predictives() {
    let layout = TrialLayout::new(1, 1).unwrap();
    let flat = (1, 1, 1, 1);
    assert_eq!(exact_pred_plus(1, 0, 1, 1, flat), Q::new(5.into(), 12.into()));
    assert_eq!(exact_pred_plus(1, 1, 1, 0, flat), Q::new(1.into(), 12.into()));
    let f1 = BetaPrior::flat();
    assert!((pred_plus(0, 1, layout, f1, f1, &q()).unwrap() - 5.0 / 12.0).abs() < 1e-13);
    assert!((pred_plus(1, 0, layout, f1, f1, &q()).unwrap() - 1.0 / 12.0).abs() < 1e-13);
    assert!((pred_point_null(0, 1, layout, f1).unwrap() - 1.0 / 6.0).abs() < 1e-13);
    assert!((pred_leq(0, 1, layout, f1, f1, &q()).unwrap() - 1.0 / 12.0).abs() < 1e-13);
}

#[test]
fn plus_predictive_matches_rationals_for_informative_priors() {
    let layout = TrialLayout::new(3, 4).unwrap();
    let shapes = (1, 2, 2, 1);
    for y1 in 0..=3u64 {
        for y2 in 0..=4u64 {
            let exact = f(&exact_pred_plus(3, y1, 4, y2, shapes));
            let got = pred_plus(y1 as u32, y2 as u32, layout, bp(1.0, 2.0), bp(2.0, 1.0), &q()).unwrap();
            assert!((got / exact - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn large_binomial_coefficient() {
    let exact = f(&choose(200, 100));
    let got = log_binom_coeff(200, 100).unwrap();
    assert!((got - exact.ln()).abs() < 1e-12 * exact.ln());
}

/// Two-sided flat `BF01` on the 5×5 lattice as an exact rational.
fn exact_two_sided(y1: u64, y2: u64) -> Q {
    let s = y1 + y2;
    beta(1 + s, 1 + 10 - s) / (beta(1 + y1, 1 + 5 - y1) * beta(1 + y2, 1 + 5 - y2))
}

#[test]
fn two_sided_five_by_five() {
    let layout = TrialLayout::new(5, 5).unwrap();
    let analysis = HypothesisSpec::flat(TestKind::TwoSided, PriorRole::Analysis);
    let bf = BfMatrix::new(layout, &analysis, KernelMethod::Auto, &q()).unwrap();
    let k = Q::new(1.into(), 3.into());
    let rej = RejectionSet::from_bf(&bf, 1.0 / 3.0).unwrap();
    let mut members = Vec::new();
    for y1 in 0..=5u64 {
        for y2 in 0..=5u64 {
            let e = exact_two_sided(y1, y2);
            assert!((bf.bf01(y1 as u32, y2 as u32) / f(&e) - 1.0).abs() < 1e-13);
            if e < k {
                members.push((y1 as u32, y2 as u32));
            }
        }
    }
    assert_eq!(exact_two_sided(0, 0), Q::new(36.into(), 11.into()));
    assert_eq!(exact_two_sided(0, 1), Q::new(18.into(), 11.into()));
    assert_eq!(rej.members(), members);

    // Supremum over the diagonal grid p = i/200 of the exact rejection
    // probability.
    let binom = |n: u64, y: u64, p: &Q| {
        let mut v = choose(n, y);
        for _ in 0..y {
            v *= p.clone();
        }
        for _ in 0..n - y {
            v *= Q::one() - p.clone();
        }
        v
    };
    let mut best = Q::zero();
    for i in 0..=200u64 {
        let p = Q::new(BigInt::from(i), BigInt::from(200));
        let mut r = Q::zero();
        for &(y1, y2) in &members {
            r += binom(5, y1 as u64, &p) * binom(5, y2 as u64, &p);
        }
        if r > best {
            best = r;
        }
    }
    let got = rej.freq_t1e_sup(0.005).unwrap();
    assert!((got.sup - f(&best)).abs() < 1e-14, "{} vs {}", got.sup, f(&best));
    assert_eq!(parameter_grid(0.005).unwrap().len(), 201);
}
