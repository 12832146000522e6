//! Integrals of a product of two Beta kernels over the order-restricted halves
//! of the unit square.
//!
//! For shapes `(a1, b1, a2, b2)` define the kernel
//! `k(p1, p2) = p1^(a1-1) (1-p1)^(b1-1) p2^(a2-1) (1-p2)^(b2-1)`. The two
//! quantities every directional test needs are
//!
//! - `upper = ∫∫_{p1 < p2} k`, and
//! - `lower = ∫∫_{p2 < p1} k = B(a2, b2) · ∫ p1^(a1-1)(1-p1)^(b1-1) I_{p1}(a2, b2) dp1`,
//!
//! with `upper + lower = B(a1, b1) B(a2, b2)`.
//!
//! Each half has two positive finite Beta-function expansions, one per integer
//! shape that can be expanded:
//!
//! | quantity | needs integer | terms                                                        |
//! |----------|---------------|--------------------------------------------------------------|
//! | upper    | `a2`          | `B(a2,b2) Σ_{j<a2} (b2)_j/j! · B(a1+j, b1+b2)`               |
//! | upper    | `b1`          | `B(a1,b1) Σ_{j<b1} (a1)_j/j! · B(a1+a2, b2+j)`               |
//! | lower    | `b2`          | `B(a2,b2) Σ_{j<b2} (a2)_j/j! · B(a1+a2, b1+j)`               |
//! | lower    | `a1`          | `B(a1,b1) Σ_{j<a1} (b1)_j/j! · B(a2+j, b1+b2)`               |
//!
//! All terms are positive, so when an expansion exists for a half it is used
//! directly. A half with no expansion is taken as the complement of the other
//! when that is numerically safe, and by quadrature otherwise.

use std::collections::HashMap;
use std::sync::OnceLock;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    as_positive_integer, integrate_01_with_breaks, ln_beta, ln_hypergeometric_sum, ln_sub_exp,
    reg_inc_beta_unchecked, QuadratureSettings,
};

/// How order-restricted integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum KernelMethod {
    /// Finite sums where the shapes allow them, quadrature elsewhere.
    #[default]
    Auto,
    /// Finite sums only; fails when neither half has an integer expansion.
    FiniteSum,
    /// Quadrature for both halves regardless of the shapes.
    Quadrature,
}

/// Logarithms of the two order-restricted integrals of one Beta kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderIntegrals {
    /// `ln ∫∫_{p1 < p2} k`.
    pub ln_upper: f64,
    /// `ln ∫∫_{p2 < p1} k`.
    pub ln_lower: f64,
    /// `ln B(a1, b1) + ln B(a2, b2)`.
    pub ln_total: f64,
}

impl OrderIntegrals {
    /// Fraction of the kernel mass on `{p1 < p2}`.
    pub fn upper_fraction(&self) -> f64 {
        (self.ln_upper - self.ln_total).exp()
    }

    /// Fraction of the kernel mass on `{p2 < p1}`.
    pub fn lower_fraction(&self) -> f64 {
        (self.ln_lower - self.ln_total).exp()
    }
}

// Complement-derived halves below this fraction of the total lose too many
// digits to cancellation and are recomputed by quadrature instead.
const COMPLEMENT_FLOOR: f64 = 1e-6;

fn upper_sum(a1: f64, b1: f64, a2: f64, b2: f64) -> Option<f64> {
    let by_a2 = as_positive_integer(a2).map(|m| (m, 0));
    let by_b1 = as_positive_integer(b1).map(|m| (m, 1));
    let pick = match (by_a2, by_b1) {
        (Some(x), Some(y)) => Some(if y.0 < x.0 { y } else { x }),
        (x, y) => x.or(y),
    }?;
    Some(match pick {
        (m, 0) => {
            ln_beta(a2, b2) + ln_hypergeometric_sum(ln_beta(a1, b1 + b2), b2, a1, a1 + b1 + b2, m)
        }
        (m, _) => {
            ln_beta(a1, b1) + ln_hypergeometric_sum(ln_beta(a1 + a2, b2), a1, b2, a1 + a2 + b2, m)
        }
    })
}

fn lower_sum(a1: f64, b1: f64, a2: f64, b2: f64) -> Option<f64> {
    let by_b2 = as_positive_integer(b2).map(|m| (m, 0));
    let by_a1 = as_positive_integer(a1).map(|m| (m, 1));
    let pick = match (by_b2, by_a1) {
        (Some(x), Some(y)) => Some(if y.0 < x.0 { y } else { x }),
        (x, y) => x.or(y),
    }?;
    Some(match pick {
        (m, 0) => {
            ln_beta(a2, b2) + ln_hypergeometric_sum(ln_beta(a1 + a2, b1), a2, b1, a1 + a2 + b1, m)
        }
        (m, _) => {
            ln_beta(a1, b1) + ln_hypergeometric_sum(ln_beta(a2, b1 + b2), b1, a2, a2 + b1 + b2, m)
        }
    })
}

fn beta_breaks(a: f64, b: f64, out: &mut Vec<f64>) {
    let mean = a / (a + b);
    let sd = (a * b / ((a + b).powi(2) * (a + b + 1.0))).sqrt();
    for k in [-6.0, -3.0, 0.0, 3.0, 6.0] {
        out.push(mean + k * sd);
    }
}

/// `ln` of the upper (`upper = true`) or lower half by quadrature over `p1`.
///
/// The `p1` range is split at 1/2 and the right piece is integrated in
/// `q = 1 − p1`, so both endpoint singularities of the Beta density sit at
/// zero where floating-point resolution is fine.
fn half_by_quadrature(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    upper: bool,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let lb1 = ln_beta(a1, b1);
    // Density of Beta(s, r) at x, with the normalizer of Beta(a1, b1).
    let dens = move |x: f64, s: f64, r: f64| ((s - 1.0) * x.ln() + (r - 1.0) * (-x).ln_1p() - lb1).exp();
    // P(p2 > p1) and P(p2 < p1) given p1 = p, with q = 1 − p passed alongside.
    let cond = move |p: f64, q: f64| {
        if upper {
            reg_inc_beta_unchecked(q, b2, a2)
        } else {
            reg_inc_beta_unchecked(p, a2, b2)
        }
    };
    let mut breaks = Vec::with_capacity(10);
    beta_breaks(a1, b1, &mut breaks);
    beta_breaks(a2, b2, &mut breaks);
    let left_breaks: Vec<f64> = breaks.iter().map(|b| 2.0 * b).collect();
    let right_breaks: Vec<f64> = breaks.iter().map(|b| 2.0 * (1.0 - b)).collect();
    // t in (0, 1) maps to p = t/2 on the left and q = t/2 on the right.
    let left = integrate_01_with_breaks(
        |t| {
            let p = 0.5 * t;
            0.5 * dens(p, a1, b1) * cond(p, 1.0 - p)
        },
        &left_breaks,
        settings,
    )?;
    let right = integrate_01_with_breaks(
        |t| {
            let q = 0.5 * t;
            0.5 * dens(q, b1, a1) * cond(1.0 - q, q)
        },
        &right_breaks,
        settings,
    )?;
    let prob = left + right;
    let total = lb1 + ln_beta(a2, b2);
    Ok(if prob > 0.0 {
        total + prob.min(1.0).ln()
    } else {
        f64::NEG_INFINITY
    })
}

fn compute(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<OrderIntegrals> {
    let ln_total = ln_beta(a1, b1) + ln_beta(a2, b2);
    let floor = ln_total + COMPLEMENT_FLOOR.ln();
    let (ln_upper, ln_lower) = match method {
        KernelMethod::Quadrature => (
            half_by_quadrature(a1, b1, a2, b2, true, settings)?,
            half_by_quadrature(a1, b1, a2, b2, false, settings)?,
        ),
        KernelMethod::FiniteSum | KernelMethod::Auto => {
            let up = upper_sum(a1, b1, a2, b2);
            let lo = lower_sum(a1, b1, a2, b2);
            let finite_only = method == KernelMethod::FiniteSum;
            match (up, lo) {
                (Some(u), Some(l)) => (u, l),
                (Some(u), None) => {
                    let l = ln_sub_exp(ln_total, u);
                    if l < floor && !finite_only {
                        (u, half_by_quadrature(a1, b1, a2, b2, false, settings)?)
                    } else {
                        (u, l)
                    }
                }
                (None, Some(l)) => {
                    let u = ln_sub_exp(ln_total, l);
                    if u < floor && !finite_only {
                        (half_by_quadrature(a1, b1, a2, b2, true, settings)?, l)
                    } else {
                        (u, l)
                    }
                }
                (None, None) if finite_only => {
                    return Err(Error::config(format!(
                        "no finite-sum expansion for shapes ({a1}, {b1}, {a2}, {b2}): \
                         at least one of a1, b1, a2, b2 must be an integer"
                    )))
                }
                (None, None) => (
                    half_by_quadrature(a1, b1, a2, b2, true, settings)?,
                    half_by_quadrature(a1, b1, a2, b2, false, settings)?,
                ),
            }
        }
    };
    Ok(OrderIntegrals {
        ln_upper,
        ln_lower,
        ln_total,
    })
}

/// Order-restricted integrals of the Beta kernel with shapes `(a1, b1, a2, b2)`.
pub fn order_integrals(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<OrderIntegrals> {
    for (name, v) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
        }
    }
    compute(a1, b1, a2, b2, method, settings)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    shapes: [u64; 4],
    method: KernelMethod,
    settings: [u64; 3],
}

type Cache = RwLock<HashMap<CacheKey, OrderIntegrals>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Memoized [`order_integrals`] for prior-level shapes, which recur across
/// every candidate sample size of a design search.
pub(crate) fn order_integrals_cached(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<OrderIntegrals> {
    let key = CacheKey {
        shapes: [a1.to_bits(), b1.to_bits(), a2.to_bits(), b2.to_bits()],
        method,
        settings: [
            settings.abs_tol.to_bits(),
            settings.rel_tol.to_bits(),
            settings.max_subdivisions as u64,
        ],
    };
    if let Some(v) = cache().read().get(&key) {
        return Ok(*v);
    }
    let v = order_integrals(a1, b1, a2, b2, method, settings)?;
    // Concurrent writers compute identical values, so last-write-wins is fine.
    cache().write().insert(key, v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    #[test]
    fn flat_kernel_splits_evenly() {
        let r = order_integrals(1.0, 1.0, 1.0, 1.0, KernelMethod::Auto, &s()).unwrap();
        assert_relative_eq!(r.upper_fraction(), 0.5, epsilon = 1e-14);
        assert_relative_eq!(r.lower_fraction(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn halves_add_to_total() {
        for &(a1, b1, a2, b2) in &[(2.0, 5.0, 3.0, 4.0), (7.0, 3.0, 1.0, 12.0), (40.0, 21.0, 33.0, 28.0)] {
            let r = order_integrals(a1, b1, a2, b2, KernelMethod::Auto, &s()).unwrap();
            assert_relative_eq!(r.upper_fraction() + r.lower_fraction(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn each_expansion_agrees_with_quadrature() {
        // Exactly one integer shape at a time exercises each expansion alone.
        let cases = [
            (1.7, 2.3, 3.0, 1.4),  // upper via a2, lower by complement
            (2.6, 4.0, 1.5, 2.5),  // upper via b1
            (1.3, 2.2, 2.7, 5.0),  // lower via b2
            (3.0, 1.8, 2.4, 0.9),  // lower via a1
        ];
        for &(a1, b1, a2, b2) in &cases {
            let f = order_integrals(a1, b1, a2, b2, KernelMethod::Auto, &s()).unwrap();
            let q = order_integrals(a1, b1, a2, b2, KernelMethod::Quadrature, &s()).unwrap();
            assert!((f.upper_fraction() - q.upper_fraction()).abs() < 1e-9, "{a1} {b1} {a2} {b2}");
            assert!((f.lower_fraction() - q.lower_fraction()).abs() < 1e-9, "{a1} {b1} {a2} {b2}");
        }
    }

    #[test]
    fn finite_sum_only_rejects_fully_fractional_shapes() {
        assert!(matches!(
            order_integrals(1.5, 2.5, 0.7, 3.3, KernelMethod::FiniteSum, &s()),
            Err(Error::Config(_))
        ));
        assert!(order_integrals(1.5, 2.5, 0.7, 3.3, KernelMethod::Auto, &s()).is_ok());
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(order_integrals(0.0, 1.0, 1.0, 1.0, KernelMethod::Auto, &s()).is_err());
        assert!(order_integrals(1.0, 1.0, f64::INFINITY, 1.0, KernelMethod::Auto, &s()).is_err());
    }

    #[test]
    fn extreme_separation_keeps_relative_precision() {
        // Mass on {p2 < p1} is astronomically small; the direct sum keeps it finite.
        let r = order_integrals(1.0, 200.0, 200.0, 1.0, KernelMethod::Auto, &s()).unwrap();
        assert!(r.ln_lower.is_finite());
        assert!(r.ln_lower - r.ln_total < -200.0);
    }

    #[test]
    fn cached_matches_uncached() {
        let a = order_integrals(2.0, 5.0, 3.0, 4.0, KernelMethod::Auto, &s()).unwrap();
        let b = order_integrals_cached(2.0, 5.0, 3.0, 4.0, KernelMethod::Auto, &s()).unwrap();
        let c = order_integrals_cached(2.0, 5.0, 3.0, 4.0, KernelMethod::Auto, &s()).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }
}
