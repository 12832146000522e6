//! Special functions and one-dimensional quadrature on the unit interval.
//!
//! Everything that multiplies Beta functions or binomial coefficients works in
//! log space; callers exponentiate only at the very end.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use statrs::function::{beta as sbeta, gamma};

use crate::error::{Error, Result};

/// Tolerances and budget for [`integrate_01`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSettings {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let s = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::domain("abs_tol must be strictly positive"));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::domain("rel_tol must be strictly positive"));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::domain("max_subdivisions must be at least 1"));
        }
        Ok(())
    }
}

fn check_shape(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be a positive finite number, got {v}")))
    }
}

/// `ln B(a, b)` computed from log-gamma values.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    check_shape("a", a)?;
    check_shape("b", b)?;
    Ok(ln_beta(a, b))
}

/// Unchecked `ln B(a, b)` for hot loops whose shapes are already validated.
#[inline]
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    gamma::ln_gamma(a) + gamma::ln_gamma(b) - gamma::ln_gamma(a + b)
}

#[inline]
pub(crate) fn ln_gamma(x: f64) -> f64 {
    gamma::ln_gamma(x)
}

/// Regularized incomplete Beta function `I_x(a, b)`.
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_shape("a", a)?;
    check_shape("b", b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x must lie in [0, 1], got {x}")));
    }
    Ok(reg_inc_beta_unchecked(x, a, b))
}

#[inline]
pub(crate) fn reg_inc_beta_unchecked(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    sbeta::beta_reg(a, b, x).clamp(0.0, 1.0)
}

/// `ln C(n, y)`.
pub fn log_binom_coeff(n: u64, y: u64) -> Result<f64> {
    if y > n {
        return Err(Error::domain(format!("count {y} exceeds n = {n}")));
    }
    Ok(ln_binom(n, y))
}

#[inline]
pub(crate) fn ln_binom(n: u64, y: u64) -> f64 {
    if y == 0 || y == n {
        return 0.0;
    }
    let n = n as f64;
    let y = y as f64;
    ln_gamma(n + 1.0) - ln_gamma(y + 1.0) - ln_gamma(n - y + 1.0)
}

/// Binomial pmf `P(Y = y)` for `Y ~ Bin(n, p)`, exact at `p = 0` and `p = 1`.
pub(crate) fn binom_pmf_vec(n: u32, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; n as usize + 1];
    if p <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    if p >= 1.0 {
        out[n as usize] = 1.0;
        return out;
    }
    let lp = p.ln();
    let lq = (-p).ln_1p();
    for (y, slot) in out.iter_mut().enumerate() {
        let y64 = y as u64;
        *slot = (ln_binom(n as u64, y64) + y as f64 * lp + (n as f64 - y as f64) * lq).exp();
    }
    out
}

/// Returns `Some(k)` when `x` is within `1e-9` of a positive integer `k`.
pub fn as_positive_integer(x: f64) -> Option<u64> {
    let r = x.round();
    if r >= 1.0 && (x - r).abs() < 1e-9 && r < 1e15 {
        Some(r as u64)
    } else {
        None
    }
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; returns `-inf` when the difference vanishes.
#[inline]
pub fn ln_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + ln_1m_exp(b - a)
}

/// `ln(1 - e^x)` for `x < 0`, accurate on both sides of `-ln 2`.
#[inline]
pub fn ln_1m_exp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NEG_INFINITY
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// `ln Σ e^{x_i}` in a fixed left-to-right order.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + s.ln()
}

/// Logarithm of `Σ_{j<terms} t_j` where `ln t_0 = ln_first` and
/// `t_{j+1} / t_j = (u + j)(v + j) / ((j + 1)(w + j))`.
///
/// Every finite Beta-function expansion of an order-restricted integral has
/// this hypergeometric shape. The running term is carried in linear space
/// relative to a moving scale so that no term overflows.
pub(crate) fn ln_hypergeometric_sum(ln_first: f64, u: f64, v: f64, w: f64, terms: u64) -> f64 {
    if terms == 0 {
        return f64::NEG_INFINITY;
    }
    const RESCALE: f64 = 1e200;
    let mut scale = ln_first;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for j in 0..terms - 1 {
        let jf = j as f64;
        term *= (u + jf) * (v + jf) / ((jf + 1.0) * (w + jf));
        if term == 0.0 {
            break;
        }
        sum += term;
        if sum > RESCALE {
            scale += sum.ln();
            term /= sum;
            sum = 1.0;
        }
    }
    scale + sum.ln()
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

// On segments near floating-point resolution a node can round onto 0 or 1.
#[inline]
fn interior(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, 1.0f64.next_down())
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(interior(center - dx));
        let f2 = f(interior(center + dx));
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment {
        lo,
        hi,
        value,
        error,
    }
}

/// Integrates `f` over `(0, 1)` with globally adaptive Gauss-Kronrod 7/15.
///
/// The integrand is evaluated only at interior points, so Beta-type endpoint
/// singularities are admissible. Mass within about 1e-16 of `x = 1` cannot be
/// sampled; an integrand singular there should be reflected to `1 − x` first.
pub fn integrate_01<F: Fn(f64) -> f64>(f: F, settings: &QuadratureSettings) -> Result<f64> {
    integrate_01_with_breaks(f, &[], settings)
}

/// As [`integrate_01`], starting from the partition induced by `breaks`
/// (points outside `(0, 1)` are ignored).
pub(crate) fn integrate_01_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    settings: &QuadratureSettings,
) -> Result<f64> {
    settings.validate()?;
    let mut cuts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && *b < 1.0 && b.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(0.0);
    edges.extend(cuts);
    edges.push(1.0);

    let mut heap = BinaryHeap::new();
    for w in edges.windows(2) {
        heap.push(kronrod15(&f, w[0], w[1]));
    }
    let mut subdivisions = heap.len();
    loop {
        let (total, err) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
        if !total.is_finite() {
            return Err(Error::NoConvergence {
                estimate: total,
                error_estimate: err,
                subdivisions,
            });
        }
        let tol = settings.abs_tol.max(settings.rel_tol * total.abs());
        if err <= tol {
            return Ok(ordered_sum(&heap));
        }
        if subdivisions >= settings.max_subdivisions {
            return Err(Error::NoConvergence {
                estimate: total,
                error_estimate: err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval is at floating-point resolution; freeze it.
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        heap.push(kronrod15(&f, worst.lo, mid));
        heap.push(kronrod15(&f, mid, worst.hi));
        subdivisions += 1;
    }
}

// Sum segment values left to right so the result does not depend on heap layout.
fn ordered_sum(heap: &BinaryHeap<Segment>) -> f64 {
    let mut segs: Vec<&Segment> = heap.iter().collect();
    segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    segs.iter().map(|s| s.value).sum()
}
