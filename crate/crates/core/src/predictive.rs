//! Prior-predictive pmfs of `(y1, y2)` under each hypothesis.
//!
//! Every pmf carries the factor `C(n1, y1) C(n2, y2)` times a ratio of Beta
//! integrals. Values are held as logarithms and exponentiated only when
//! summed into probabilities.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_1m_exp, ln_beta, ln_binom, QuadratureSettings};
use crate::priors::{ln_trunc_consts, ArmPriors, BetaPrior, HypothesisSpec, PriorRole, TestKind};
use crate::region::{order_integrals, KernelMethod, OrderIntegrals};

/// Per-arm sample sizes: `n1` control, `n2` treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialLayout {
    pub n1: u32,
    pub n2: u32,
}

impl TrialLayout {
    pub fn new(n1: u32, n2: u32) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::domain(format!(
                "both arms need at least one patient, got n1 = {n1}, n2 = {n2}"
            )));
        }
        Ok(Self { n1, n2 })
    }

    pub fn total(&self) -> u32 {
        self.n1 + self.n2
    }

    /// Number of `(y1, y2)` lattice points, `(n1 + 1)(n2 + 1)`.
    pub fn lattice_len(&self) -> usize {
        (self.n1 as usize + 1) * (self.n2 as usize + 1)
    }

    /// Row-major index of `(y1, y2)`.
    #[inline]
    pub fn index(&self, y1: u32, y2: u32) -> usize {
        y1 as usize * (self.n2 as usize + 1) + y2 as usize
    }

    /// Inverse of [`TrialLayout::index`].
    #[inline]
    pub fn point(&self, idx: usize) -> (u32, u32) {
        let w = self.n2 as usize + 1;
        ((idx / w) as u32, (idx % w) as u32)
    }

    pub fn check(&self, y1: u32, y2: u32) -> Result<()> {
        if y1 > self.n1 || y2 > self.n2 {
            Err(Error::domain(format!(
                "counts ({y1}, {y2}) outside the lattice for n1 = {}, n2 = {}",
                self.n1, self.n2
            )))
        } else {
            Ok(())
        }
    }

    /// Same trial with the arms relabeled.
    pub fn swapped(&self) -> Self {
        Self {
            n1: self.n2,
            n2: self.n1,
        }
    }
}

/// Posterior shapes after observing `(y1, y2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdatedShapes {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl UpdatedShapes {
    pub fn new(layout: TrialLayout, y1: u32, y2: u32, priors: &ArmPriors) -> Self {
        Self {
            a1: y1 as f64 + priors.arm1.a,
            b1: (layout.n1 - y1) as f64 + priors.arm1.b,
            a2: y2 as f64 + priors.arm2.a,
            b2: (layout.n2 - y2) as f64 + priors.arm2.b,
        }
    }
}

/// A prior-predictive distribution on the outcome lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "priors")]
pub enum PredictiveModel {
    /// `p1 = p2 = p` with `p ~ null_prior`.
    PointNull(BetaPrior),
    /// Independent arm priors, untruncated.
    Indep(ArmPriors),
    /// Arm priors truncated to `{p2 > p1}`.
    Plus(ArmPriors),
    /// Arm priors truncated to `{p2 < p1}`.
    Minus(ArmPriors),
    /// Arm priors truncated to `{p2 ≤ p1}`, normalized by `1 − P(p2 > p1)`.
    Leq(ArmPriors),
}

impl PredictiveModel {
    fn is_truncated(&self) -> bool {
        matches!(self, Self::Plus(_) | Self::Minus(_) | Self::Leq(_))
    }

    fn arms(&self) -> Option<ArmPriors> {
        match *self {
            Self::PointNull(_) => None,
            Self::Indep(a) | Self::Plus(a) | Self::Minus(a) | Self::Leq(a) => Some(a),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::PointNull(p) => p.validate(),
            Self::Indep(a) | Self::Plus(a) | Self::Minus(a) | Self::Leq(a) => {
                a.arm1.validate()?;
                a.arm2.validate()
            }
        }
    }
}

impl HypothesisSpec {
    /// Predictive of the null side. A two-sided analysis uses the common-`p`
    /// prior implied by its arm priors rather than `null_prior`.
    pub fn null_model(&self) -> PredictiveModel {
        match self.test {
            TestKind::TwoSided if self.role == PriorRole::Analysis => {
                PredictiveModel::PointNull(self.two_sided_implied_null())
            }
            TestKind::TwoSided | TestKind::PlusVsPoint | TestKind::MinusVsPoint => {
                PredictiveModel::PointNull(self.null_prior)
            }
            TestKind::PlusVsMinus => PredictiveModel::Leq(self.null_side_or_alt()),
        }
    }

    /// Predictive of the alternative side.
    pub fn alt_model(&self) -> PredictiveModel {
        match self.test {
            TestKind::TwoSided => PredictiveModel::Indep(self.alt),
            TestKind::PlusVsPoint | TestKind::PlusVsMinus => PredictiveModel::Plus(self.alt),
            TestKind::MinusVsPoint => PredictiveModel::Minus(self.alt),
        }
    }
}

/// Per-model constants: the log prior normalizer, including the truncation
/// constant where there is one.
fn ln_normalizer(model: &PredictiveModel, method: KernelMethod, settings: &QuadratureSettings) -> Result<f64> {
    Ok(match *model {
        PredictiveModel::PointNull(p) => p.ln_beta(),
        PredictiveModel::Indep(a) => a.arm1.ln_beta() + a.arm2.ln_beta(),
        PredictiveModel::Plus(a) => {
            a.arm1.ln_beta() + a.arm2.ln_beta() + ln_trunc_consts(a.arm1, a.arm2, method, settings)?.0
        }
        PredictiveModel::Minus(a) => {
            a.arm1.ln_beta() + a.arm2.ln_beta() + ln_trunc_consts(a.arm1, a.arm2, method, settings)?.1
        }
        PredictiveModel::Leq(a) => {
            a.arm1.ln_beta()
                + a.arm2.ln_beta()
                + ln_1m_exp(ln_trunc_consts(a.arm1, a.arm2, method, settings)?.0)
        }
    })
}

fn ln_kernel(
    model: &PredictiveModel,
    layout: TrialLayout,
    y1: u32,
    y2: u32,
    region: Option<&OrderIntegrals>,
) -> f64 {
    let (n1, n2) = (layout.n1 as f64, layout.n2 as f64);
    match *model {
        PredictiveModel::PointNull(p) => {
            let s = (y1 + y2) as f64;
            ln_beta(p.a + s, p.b + n1 + n2 - s)
        }
        PredictiveModel::Indep(a) => {
            let u = UpdatedShapes::new(layout, y1, y2, &a);
            ln_beta(u.a1, u.b1) + ln_beta(u.a2, u.b2)
        }
        PredictiveModel::Plus(_) => region.expect("truncated model needs its region").ln_upper,
        PredictiveModel::Minus(_) | PredictiveModel::Leq(_) => {
            region.expect("truncated model needs its region").ln_lower
        }
    }
}

#[inline]
fn ln_binoms(layout: TrialLayout, y1: u32, y2: u32) -> f64 {
    ln_binom(layout.n1 as u64, y1 as u64) + ln_binom(layout.n2 as u64, y2 as u64)
}

fn point_region(
    layout: TrialLayout,
    y1: u32,
    y2: u32,
    arms: &ArmPriors,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<OrderIntegrals> {
    let u = UpdatedShapes::new(layout, y1, y2, arms);
    order_integrals(u.a1, u.b1, u.a2, u.b2, method, settings)
}

/// `ln P(y1, y2)` under `model`.
pub fn ln_pmf(
    model: &PredictiveModel,
    layout: TrialLayout,
    y1: u32,
    y2: u32,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<f64> {
    model.validate()?;
    layout.check(y1, y2)?;
    let region = match model.arms() {
        Some(a) if model.is_truncated() => Some(point_region(layout, y1, y2, &a, method, settings)?),
        _ => None,
    };
    Ok(ln_binoms(layout, y1, y2) + ln_kernel(model, layout, y1, y2, region.as_ref())
        - ln_normalizer(model, method, settings)?)
}

/// Point-null predictive, `C(n1,y1) C(n2,y2) B(a0 + y, b0 + n − y) / B(a0, b0)`.
pub fn pred_point_null(y1: u32, y2: u32, layout: TrialLayout, null_prior: BetaPrior) -> Result<f64> {
    let s = QuadratureSettings::default();
    ln_pmf(&PredictiveModel::PointNull(null_prior), layout, y1, y2, KernelMethod::Auto, &s).map(f64::exp)
}

/// Product of two independent beta-binomial pmfs.
pub fn pred_indep(y1: u32, y2: u32, layout: TrialLayout, arm1: BetaPrior, arm2: BetaPrior) -> Result<f64> {
    let s = QuadratureSettings::default();
    let m = PredictiveModel::Indep(ArmPriors::new(arm1, arm2));
    ln_pmf(&m, layout, y1, y2, KernelMethod::Auto, &s).map(f64::exp)
}

/// Predictive under arm priors truncated to `{p2 > p1}`.
pub fn pred_plus(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    arm1: BetaPrior,
    arm2: BetaPrior,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let m = PredictiveModel::Plus(ArmPriors::new(arm1, arm2));
    ln_pmf(&m, layout, y1, y2, KernelMethod::Auto, settings).map(f64::exp)
}

/// Predictive under arm priors truncated to `{p2 < p1}`.
pub fn pred_minus(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    arm1: BetaPrior,
    arm2: BetaPrior,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let m = PredictiveModel::Minus(ArmPriors::new(arm1, arm2));
    ln_pmf(&m, layout, y1, y2, KernelMethod::Auto, settings).map(f64::exp)
}

/// Predictive under arm priors truncated to `{p2 ≤ p1}`.
pub fn pred_leq(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    arm1: BetaPrior,
    arm2: BetaPrior,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let m = PredictiveModel::Leq(ArmPriors::new(arm1, arm2));
    ln_pmf(&m, layout, y1, y2, KernelMethod::Auto, settings).map(f64::exp)
}

/// Log-pmf over the whole lattice, row-major in `(y1, y2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveMatrix {
    pub layout: TrialLayout,
    pub model: PredictiveModel,
    ln_pmf: Vec<f64>,
}

/// Order-restricted integrals at every lattice point for one pair of arm
/// priors. Shared by the `Plus`, `Minus` and `Leq` matrices.
#[derive(Debug, Clone)]
pub struct RegionLattice {
    layout: TrialLayout,
    arms: ArmPriors,
    cells: Vec<OrderIntegrals>,
}

impl RegionLattice {
    pub fn new(
        layout: TrialLayout,
        arms: ArmPriors,
        method: KernelMethod,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        arms.arm1.validate()?;
        arms.arm2.validate()?;
        let cells = (0..layout.lattice_len())
            .into_par_iter()
            .map(|idx| {
                let (y1, y2) = layout.point(idx);
                point_region(layout, y1, y2, &arms, method, settings)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layout, arms, cells })
    }

    pub fn arms(&self) -> ArmPriors {
        self.arms
    }
}

impl PredictiveMatrix {
    /// Evaluates `model` at every lattice point. Truncated models compute
    /// their region integrals internally; see [`PredictiveMatrix::with_regions`]
    /// to share them.
    pub fn new(
        model: PredictiveModel,
        layout: TrialLayout,
        method: KernelMethod,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        model.validate()?;
        match model.arms() {
            Some(arms) if model.is_truncated() => {
                let regions = RegionLattice::new(layout, arms, method, settings)?;
                Self::with_regions(model, &regions, method, settings)
            }
            _ => {
                let norm = ln_normalizer(&model, method, settings)?;
                let ln_pmf = (0..layout.lattice_len())
                    .into_par_iter()
                    .map(|idx| {
                        let (y1, y2) = layout.point(idx);
                        ln_binoms(layout, y1, y2) + ln_kernel(&model, layout, y1, y2, None) - norm
                    })
                    .collect();
                Ok(Self { layout, model, ln_pmf })
            }
        }
    }

    /// Builds a truncated-model matrix from precomputed region integrals.
    pub fn with_regions(
        model: PredictiveModel,
        regions: &RegionLattice,
        method: KernelMethod,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        if model.arms() != Some(regions.arms) || !model.is_truncated() {
            return Err(Error::config(
                "region integrals were computed for different arm priors",
            ));
        }
        let layout = regions.layout;
        let norm = ln_normalizer(&model, method, settings)?;
        let ln_pmf = regions
            .cells
            .iter()
            .enumerate()
            .map(|(idx, r)| {
                let (y1, y2) = layout.point(idx);
                ln_binoms(layout, y1, y2) + ln_kernel(&model, layout, y1, y2, Some(r)) - norm
            })
            .collect();
        Ok(Self { layout, model, ln_pmf })
    }

    #[inline]
    pub fn ln_pmf(&self, y1: u32, y2: u32) -> f64 {
        self.ln_pmf[self.layout.index(y1, y2)]
    }

    #[inline]
    pub fn pmf(&self, y1: u32, y2: u32) -> f64 {
        self.ln_pmf(y1, y2).exp()
    }

    /// Log-pmf in row-major order.
    pub fn ln_values(&self) -> &[f64] {
        &self.ln_pmf
    }

    /// Total mass, summed in row-major order.
    pub fn total(&self) -> f64 {
        self.ln_pmf.iter().map(|v| v.exp()).sum()
    }

    /// Mass of the lattice points where `keep(index)` holds, summed in
    /// row-major order.
    pub fn mass_where(&self, mut keep: impl FnMut(usize) -> bool) -> f64 {
        self.ln_pmf
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, v)| v.exp())
            .sum()
    }
}

/// Lattice matrices for one layout, built on first use and shared between
/// design and analysis models that coincide.
pub struct MatrixCache<'a> {
    layout: TrialLayout,
    method: KernelMethod,
    settings: &'a QuadratureSettings,
    regions: Vec<Arc<RegionLattice>>,
    matrices: Vec<Arc<PredictiveMatrix>>,
}

impl<'a> MatrixCache<'a> {
    pub fn new(layout: TrialLayout, method: KernelMethod, settings: &'a QuadratureSettings) -> Self {
        Self {
            layout,
            method,
            settings,
            regions: Vec::new(),
            matrices: Vec::new(),
        }
    }

    pub fn layout(&self) -> TrialLayout {
        self.layout
    }

    pub fn matrix(&mut self, model: PredictiveModel) -> Result<Arc<PredictiveMatrix>> {
        if let Some(m) = self.matrices.iter().find(|m| m.model == model) {
            return Ok(Arc::clone(m));
        }
        let mat = match model.arms() {
            Some(arms) if model.is_truncated() => {
                let regions = match self.regions.iter().find(|r| r.arms == arms) {
                    Some(r) => Arc::clone(r),
                    None => {
                        let r = Arc::new(RegionLattice::new(self.layout, arms, self.method, self.settings)?);
                        self.regions.push(Arc::clone(&r));
                        r
                    }
                };
                PredictiveMatrix::with_regions(model, &regions, self.method, self.settings)?
            }
            _ => PredictiveMatrix::new(model, self.layout, self.method, self.settings)?,
        };
        let mat = Arc::new(mat);
        self.matrices.push(Arc::clone(&mat));
        Ok(mat)
    }
}
