//! Rejection sets and operating characteristics at fixed arm sizes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayesfactor::BfMatrix;
use crate::error::{Error, Result};
use crate::numerics::{binom_pmf_vec, QuadratureSettings};
use crate::predictive::{MatrixCache, PredictiveMatrix, TrialLayout};
use crate::priors::{HypothesisSpec, PriorRole, TestKind, TrialModel};
use crate::region::KernelMethod;

pub const DEFAULT_GRID_STEP: f64 = 0.005;

/// Evidence thresholds: reject the null when `BF01 < k`; compelling evidence
/// for the null when `BF01 > k_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub k: f64,
    pub k_f: f64,
}

impl Thresholds {
    pub fn new(k: f64, k_f: f64) -> Result<Self> {
        let t = Self { k, k_f };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k < 1.0) {
            return Err(Error::config(format!("k must lie in (0, 1), got {}", self.k)));
        }
        if !(self.k_f > 1.0 && self.k_f.is_finite()) {
            return Err(Error::config(format!("k_f must exceed 1, got {}", self.k_f)));
        }
        Ok(())
    }
}

/// Lattice points where `BF01 < k` strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionSet {
    pub layout: TrialLayout,
    pub test: TestKind,
    pub k: f64,
    mask: Vec<bool>,
}

impl RejectionSet {
    pub fn from_bf(bf: &BfMatrix, k: f64) -> Result<Self> {
        if k.is_nan() || k <= 0.0 {
            return Err(Error::config(format!("k must be positive, got {k}")));
        }
        let ln_k = k.ln();
        Ok(Self {
            layout: bf.layout,
            test: bf.test,
            k,
            mask: bf.ln_values().iter().map(|v| *v < ln_k).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|m| *m)
    }

    pub fn contains(&self, y1: u32, y2: u32) -> bool {
        y1 <= self.layout.n1 && y2 <= self.layout.n2 && self.mask[self.layout.index(y1, y2)]
    }

    /// Members in row-major order.
    pub fn members(&self) -> Vec<(u32, u32)> {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, m)| **m)
            .map(|(i, _)| self.layout.point(i))
            .collect()
    }

    /// Predictive mass of the set under `pmf`.
    pub fn mass(&self, pmf: &PredictiveMatrix) -> Result<f64> {
        if pmf.layout != self.layout {
            return Err(Error::config("predictive and rejection set have different layouts"));
        }
        Ok(probability(pmf.mass_where(|i| self.mask[i])))
    }

    /// Rejected `y2` values for each `y1`.
    fn rows(&self) -> Vec<Vec<usize>> {
        let w = self.layout.n2 as usize + 1;
        self.mask
            .chunks(w)
            .map(|row| row.iter().enumerate().filter(|(_, m)| **m).map(|(y2, _)| y2).collect())
            .collect()
    }

    /// `Σ_{y2 ∈ R(y1)} Bin(y2; n2, p2)` for every `y1`.
    fn row_masses(rows: &[Vec<usize>], b2: &[f64]) -> Vec<f64> {
        rows.iter().map(|r| r.iter().map(|&y2| b2[y2]).sum()).collect()
    }

    /// Exact `P(reject)` when `y1 ~ Bin(n1, p1)`, `y2 ~ Bin(n2, p2)`.
    pub fn rejection_probability(&self, p1: f64, p2: f64) -> Result<f64> {
        check_probability("p1", p1)?;
        check_probability("p2", p2)?;
        let b1 = binom_pmf_vec(self.layout.n1, p1);
        let s = Self::row_masses(&self.rows(), &binom_pmf_vec(self.layout.n2, p2));
        Ok(probability(dot(&b1, &s)))
    }

    /// Grid maximum of the rejection probability over the null parameter set:
    /// the diagonal `p1 = p2` for point nulls, the triangle `p2 ≤ p1` for the
    /// composite null.
    pub fn freq_t1e_sup(&self, grid_step: f64) -> Result<FreqT1e> {
        let grid = parameter_grid(grid_step)?;
        let rows = self.rows();
        let s: Vec<Vec<f64>> = grid
            .par_iter()
            .map(|&p2| Self::row_masses(&rows, &binom_pmf_vec(self.layout.n2, p2)))
            .collect();
        let composite = self.test == TestKind::PlusVsMinus;
        let n1 = self.layout.n1;
        // Best point per p1 row, then a sequential reduction in grid order.
        let per_row: Vec<(f64, usize, usize)> = grid
            .par_iter()
            .enumerate()
            .map(|(i, &p1)| {
                let b1 = binom_pmf_vec(n1, p1);
                let js = if composite { 0..i + 1 } else { i..i + 1 };
                let mut best = (f64::NEG_INFINITY, i, i);
                for j in js {
                    let v = dot(&b1, &s[j]);
                    if v > best.0 {
                        best = (v, i, j);
                    }
                }
                best
            })
            .collect();
        let mut best = per_row[0];
        for r in &per_row[1..] {
            if r.0 > best.0 {
                best = *r;
            }
        }
        Ok(FreqT1e {
            sup: probability(best.0),
            p1: grid[best.1],
            p2: grid[best.2],
        })
    }
}

// Float sums start from -0.0, so an empty set would otherwise print as "-0".
fn probability(x: f64) -> f64 {
    (x + 0.0).clamp(0.0, 1.0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in [0, 1], got {p}")))
    }
}

/// `{0, step, 2·step, …}` up to and including 1.
pub fn parameter_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::config(format!("grid step must lie in (0, 0.1], got {step}")));
    }
    let mut grid = Vec::new();
    let mut i = 0u32;
    loop {
        let p = i as f64 * step;
        if p >= 1.0 - 1e-9 {
            break;
        }
        grid.push(p);
        i += 1;
    }
    grid.push(1.0);
    Ok(grid)
}

/// Grid-maximal frequentist type-I error and where it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqT1e {
    pub sup: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcOptions {
    pub freq_t1e: bool,
    pub grid_step: f64,
    pub freq_power_point: Option<(f64, f64)>,
    pub method: KernelMethod,
}

impl Default for OcOptions {
    fn default() -> Self {
        Self {
            freq_t1e: false,
            grid_step: DEFAULT_GRID_STEP,
            freq_power_point: None,
            method: KernelMethod::Auto,
        }
    }
}

impl OcOptions {
    pub fn validate(&self) -> Result<()> {
        parameter_grid(self.grid_step)?;
        if let Some((p1, p2)) = self.freq_power_point {
            check_probability("p1", p1)?;
            check_probability("p2", p2)?;
        }
        Ok(())
    }
}

/// Operating characteristics of one layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcResult {
    pub bayes_power: f64,
    pub bayes_t1e: f64,
    pub pce_null: f64,
    pub freq_t1e: Option<FreqT1e>,
    pub freq_power: Option<f64>,
    pub rejection_size: usize,
}

fn require_role(spec: &HypothesisSpec, role: PriorRole) -> Result<()> {
    if spec.role != role {
        return Err(Error::config(format!("expected {role:?} priors, got {:?}", spec.role)));
    }
    spec.validate()
}

pub fn rejection_set(
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    k: f64,
    settings: &QuadratureSettings,
) -> Result<RejectionSet> {
    let bf = BfMatrix::new(layout, analysis, KernelMethod::Auto, settings)?;
    RejectionSet::from_bf(&bf, k)
}

/// Mass of the rejection set under the alternative's design predictive.
pub fn bayes_power(rejset: &RejectionSet, design: &HypothesisSpec, settings: &QuadratureSettings) -> Result<f64> {
    require_role(design, PriorRole::Design)?;
    let m = PredictiveMatrix::new(design.alt_model(), rejset.layout, KernelMethod::Auto, settings)?;
    rejset.mass(&m)
}

/// Mass of the rejection set under the null's design predictive.
pub fn bayes_t1e(rejset: &RejectionSet, design: &HypothesisSpec, settings: &QuadratureSettings) -> Result<f64> {
    require_role(design, PriorRole::Design)?;
    let m = PredictiveMatrix::new(design.null_model(), rejset.layout, KernelMethod::Auto, settings)?;
    rejset.mass(&m)
}

/// Null-side design mass of `{BF01 > k_f}`.
pub fn pce_null(
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    design: &HypothesisSpec,
    k_f: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    require_role(design, PriorRole::Design)?;
    let mut cache = MatrixCache::new(layout, KernelMethod::Auto, settings);
    let bf = BfMatrix::from_cache(&mut cache, analysis)?;
    let null = cache.matrix(design.null_model())?;
    Ok(compelling_mass(&bf, &null, k_f))
}

fn compelling_mass(bf: &BfMatrix, null: &PredictiveMatrix, k_f: f64) -> f64 {
    let ln_kf = k_f.ln();
    let v = bf.ln_values();
    probability(null.mass_where(|i| v[i] > ln_kf))
}

pub fn freq_t1e_sup(
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    k: f64,
    grid_step: f64,
    settings: &QuadratureSettings,
) -> Result<FreqT1e> {
    rejection_set(layout, analysis, k, settings)?.freq_t1e_sup(grid_step)
}

pub fn freq_power(
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    k: f64,
    p1: f64,
    p2: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    rejection_set(layout, analysis, k, settings)?.rejection_probability(p1, p2)
}

/// All operating characteristics of `layout`, sharing one Bayes factor
/// matrix and reusing predictives wherever design and analysis coincide.
pub fn evaluate(
    layout: TrialLayout,
    model: &TrialModel,
    thresholds: Thresholds,
    opts: &OcOptions,
    settings: &QuadratureSettings,
) -> Result<OcResult> {
    thresholds.validate()?;
    opts.validate()?;
    require_role(&model.design, PriorRole::Design)?;
    let mut cache = MatrixCache::new(layout, opts.method, settings);
    let bf = BfMatrix::from_cache(&mut cache, &model.analysis)?;
    let rej = RejectionSet::from_bf(&bf, thresholds.k)?;
    let alt = cache.matrix(model.design.alt_model())?;
    let null = cache.matrix(model.design.null_model())?;
    let freq_t1e = if opts.freq_t1e {
        Some(rej.freq_t1e_sup(opts.grid_step)?)
    } else {
        None
    };
    let freq_power = opts
        .freq_power_point
        .map(|(p1, p2)| rej.rejection_probability(p1, p2))
        .transpose()?;
    Ok(OcResult {
        bayes_power: rej.mass(&alt)?,
        bayes_t1e: rej.mass(&null)?,
        pce_null: compelling_mass(&bf, &null, thresholds.k_f),
        freq_t1e,
        freq_power,
        rejection_size: rej.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn s() -> QuadratureSettings {
        QuadratureSettings::default()
    }

    fn lay(n1: u32, n2: u32) -> TrialLayout {
        TrialLayout::new(n1, n2).unwrap()
    }

    #[test]
    fn two_sided_five_by_five() {
        let a = HypothesisSpec::flat(TestKind::TwoSided, PriorRole::Analysis);
        let d = HypothesisSpec::flat(TestKind::TwoSided, PriorRole::Design);
        let rej = rejection_set(lay(5, 5), &a, 1.0 / 3.0, &s()).unwrap();
        let expected = vec![
            (0, 3), (0, 4), (0, 5), (1, 4), (1, 5), (2, 5),
            (3, 0), (4, 0), (4, 1), (5, 0), (5, 1), (5, 2),
        ];
        assert_eq!(rej.members(), expected);
        assert_relative_eq!(bayes_power(&rej, &d, &s()).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn extreme_thresholds() {
        let a = HypothesisSpec::flat(TestKind::PlusVsPoint, PriorRole::Analysis);
        let d = HypothesisSpec::flat(TestKind::PlusVsPoint, PriorRole::Design);
        let l = lay(4, 4);
        let tiny = rejection_set(l, &a, 1e-12, &s()).unwrap();
        assert!(tiny.is_empty());
        assert_eq!(bayes_power(&tiny, &d, &s()).unwrap(), 0.0);
        assert_eq!(tiny.rejection_probability(0.3, 0.7).unwrap(), 0.0);
        let all = rejection_set(l, &a, 1e12, &s()).unwrap();
        assert_eq!(all.len(), 25);
        assert_relative_eq!(bayes_t1e(&all, &d, &s()).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(pce_null(l, &a, &d, 1e12, &s()).unwrap(), 0.0);
        assert_relative_eq!(pce_null(l, &a, &d, 1e-12, &s()).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_includes_endpoints() {
        let g = parameter_grid(0.005).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(parameter_grid(0.0).is_err());
        assert!(parameter_grid(0.2).is_err());
        assert_eq!(parameter_grid(0.03).unwrap().last().copied(), Some(1.0));
    }

    #[test]
    fn freq_power_on_diagonal_matches_grid() {
        let a = HypothesisSpec::flat(TestKind::PlusVsPoint, PriorRole::Analysis);
        let rej = rejection_set(lay(12, 11), &a, 1.0 / 3.0, &s()).unwrap();
        let sup = rej.freq_t1e_sup(0.05).unwrap();
        assert_eq!(sup.p1, sup.p2);
        for &p in &parameter_grid(0.05).unwrap() {
            assert!(rej.rejection_probability(p, p).unwrap() <= sup.sup);
        }
        assert_relative_eq!(rej.rejection_probability(sup.p1, sup.p2).unwrap(), sup.sup, epsilon = 1e-15);
    }

    #[test]
    fn composite_supremum_stays_in_triangle() {
        let a = HypothesisSpec::flat(TestKind::PlusVsMinus, PriorRole::Analysis);
        let rej = rejection_set(lay(8, 8), &a, 1.0 / 3.0, &s()).unwrap();
        let sup = rej.freq_t1e_sup(0.01).unwrap();
        assert!(sup.p2 <= sup.p1);
    }

    #[test]
    fn evaluate_matches_individual_operations() {
        let model = TrialModel::flat(TestKind::MinusVsPoint);
        let l = lay(9, 7);
        let t = Thresholds::new(1.0 / 3.0, 3.0).unwrap();
        let opts = OcOptions {
            freq_t1e: true,
            grid_step: 0.02,
            freq_power_point: Some((0.6, 0.3)),
            ..OcOptions::default()
        };
        let r = evaluate(l, &model, t, &opts, &s()).unwrap();
        let rej = rejection_set(l, &model.analysis, t.k, &s()).unwrap();
        assert_eq!(r.bayes_power, bayes_power(&rej, &model.design, &s()).unwrap());
        assert_eq!(r.bayes_t1e, bayes_t1e(&rej, &model.design, &s()).unwrap());
        assert_eq!(r.pce_null, pce_null(l, &model.analysis, &model.design, t.k_f, &s()).unwrap());
        assert_eq!(r.freq_power.unwrap(), freq_power(l, &model.analysis, t.k, 0.6, 0.3, &s()).unwrap());
        assert_eq!(r.freq_t1e.unwrap(), freq_t1e_sup(l, &model.analysis, t.k, 0.02, &s()).unwrap());
    }

    #[test]
    fn threshold_validation() {
        assert!(Thresholds::new(1.0, 3.0).is_err());
        assert!(Thresholds::new(0.3, 1.0).is_err());
        assert!(Thresholds::new(0.1, 10.0).is_ok());
    }
}
