//! Bayes factors for the four tests, evaluated with analysis priors.
//!
//! Every Bayes factor is the ratio of two analysis-prior predictives, so the
//! binomial coefficients cancel. Values are carried as logarithms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_beta, QuadratureSettings};
use crate::predictive::{ln_pmf, MatrixCache, TrialLayout};
use crate::priors::{BetaPrior, HypothesisSpec, PriorRole, TestKind};
use crate::region::KernelMethod;

/// Which marginal likelihood sits in the numerator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BfOrientation {
    /// `BF01`: null over alternative, for any test.
    NullOverAlt,
    /// `BF10` of the two-sided test.
    AltOverNull,
    /// `BF+0`.
    PlusOverNull,
    /// `BF−0`.
    MinusOverNull,
    /// `BF+−`.
    PlusOverMinus,
}

impl BfOrientation {
    /// The orientation a test reports by default.
    pub fn natural(test: TestKind) -> Self {
        match test {
            TestKind::TwoSided => BfOrientation::NullOverAlt,
            TestKind::PlusVsPoint => BfOrientation::PlusOverNull,
            TestKind::MinusVsPoint => BfOrientation::MinusOverNull,
            TestKind::PlusVsMinus => BfOrientation::PlusOverMinus,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BfOrientation::NullOverAlt => "BF01",
            BfOrientation::AltOverNull => "BF10",
            BfOrientation::PlusOverNull => "BF+0",
            BfOrientation::MinusOverNull => "BF-0",
            BfOrientation::PlusOverMinus => "BF+-",
        }
    }

    fn is_null_over_alt(self) -> bool {
        self == BfOrientation::NullOverAlt
    }
}

impl fmt::Display for BfOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Jeffreys' evidence categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceLabel {
    Anecdotal,
    Moderate,
    Strong,
    VeryStrong,
    Extreme,
}

impl EvidenceLabel {
    /// Category of a Bayes factor `bf ≥ 1` (smaller values are inverted first).
    pub fn classify(bf: f64) -> Self {
        let v = if bf < 1.0 { 1.0 / bf } else { bf };
        match v {
            v if v < 3.0 => EvidenceLabel::Anecdotal,
            v if v < 10.0 => EvidenceLabel::Moderate,
            v if v < 30.0 => EvidenceLabel::Strong,
            v if v < 100.0 => EvidenceLabel::VeryStrong,
            _ => EvidenceLabel::Extreme,
        }
    }
}

impl fmt::Display for EvidenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvidenceLabel::Anecdotal => "anecdotal",
            EvidenceLabel::Moderate => "moderate",
            EvidenceLabel::Strong => "strong",
            EvidenceLabel::VeryStrong => "very strong",
            EvidenceLabel::Extreme => "extreme",
        })
    }
}

/// A Bayes factor for one test in a stated orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BayesFactor {
    pub test: TestKind,
    pub orientation: BfOrientation,
    pub ln_value: f64,
}

impl BayesFactor {
    fn from_ln_bf01(test: TestKind, ln_bf01: f64) -> Self {
        Self {
            test,
            orientation: BfOrientation::NullOverAlt,
            ln_value: ln_bf01,
        }
    }

    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }

    /// The same evidence with numerator and denominator exchanged.
    pub fn reciprocal(&self) -> Self {
        let orientation = if self.orientation.is_null_over_alt() {
            match self.test {
                TestKind::TwoSided => BfOrientation::AltOverNull,
                t => BfOrientation::natural(t),
            }
        } else {
            BfOrientation::NullOverAlt
        };
        Self {
            test: self.test,
            orientation,
            ln_value: -self.ln_value,
        }
    }

    /// `ln BF01` regardless of the stored orientation.
    pub fn ln_bf01(&self) -> f64 {
        if self.orientation.is_null_over_alt() {
            self.ln_value
        } else {
            -self.ln_value
        }
    }

    /// Re-expressed in the test's natural orientation.
    pub fn natural(&self) -> Self {
        if self.orientation == BfOrientation::natural(self.test) {
            *self
        } else {
            self.reciprocal()
        }
    }

    pub fn label(&self) -> EvidenceLabel {
        EvidenceLabel::classify(self.value())
    }

    /// True when the data favor the alternative (`BF01 < 1`).
    pub fn favors_alternative(&self) -> bool {
        self.ln_bf01() < 0.0
    }
}

fn require_test(spec: &HypothesisSpec, test: TestKind) -> Result<()> {
    if spec.test != test {
        return Err(Error::config(format!(
            "expected priors for the '{test}' test, got '{}'",
            spec.test
        )));
    }
    if spec.role != PriorRole::Analysis {
        return Err(Error::config("Bayes factors take analysis priors"));
    }
    spec.validate()
}

fn ln_bf01_ratio(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let m = KernelMethod::Auto;
    let null = ln_pmf(&analysis.null_model(), layout, y1, y2, m, settings)?;
    let alt = ln_pmf(&analysis.alt_model(), layout, y1, y2, m, settings)?;
    Ok(null - alt)
}

/// Bayes factor of `analysis.test` at `(y1, y2)`, in the test's natural
/// orientation.
pub fn bayes_factor(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    settings: &QuadratureSettings,
) -> Result<BayesFactor> {
    require_test(analysis, analysis.test)?;
    let ln01 = ln_bf01_ratio(y1, y2, layout, analysis, settings)?;
    Ok(BayesFactor::from_ln_bf01(analysis.test, ln01).natural())
}

/// Two-sided `BF01` through the predictive ratio.
pub fn bf01_two_sided(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    settings: &QuadratureSettings,
) -> Result<BayesFactor> {
    require_test(analysis, TestKind::TwoSided)?;
    bayes_factor(y1, y2, layout, analysis, settings)
}

/// Two-sided `BF01` from its Savage-Dickey closed form,
/// `B(a1+a2−1+y, b1+b2−1+n−y) B(a1,b1) B(a2,b2) / (B(a1+a2−1, b1+b2−1) B(A1,B1) B(A2,B2))`.
pub fn two_sided_closed_form(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    arm1: BetaPrior,
    arm2: BetaPrior,
) -> Result<BayesFactor> {
    arm1.validate()?;
    arm2.validate()?;
    layout.check(y1, y2)?;
    let (a0, b0) = (arm1.a + arm2.a - 1.0, arm1.b + arm2.b - 1.0);
    if a0 <= 0.0 || b0 <= 0.0 {
        return Err(Error::config(format!(
            "two-sided Bayes factor needs a1 + a2 > 1 and b1 + b2 > 1, got {arm1} and {arm2}"
        )));
    }
    let (n1, n2) = (layout.n1 as f64, layout.n2 as f64);
    let (y1f, y2f) = (y1 as f64, y2 as f64);
    let s = y1f + y2f;
    let ln = ln_beta(a0 + s, b0 + n1 + n2 - s) + arm1.ln_beta() + arm2.ln_beta()
        - ln_beta(a0, b0)
        - ln_beta(arm1.a + y1f, arm1.b + n1 - y1f)
        - ln_beta(arm2.a + y2f, arm2.b + n2 - y2f);
    Ok(BayesFactor::from_ln_bf01(TestKind::TwoSided, ln))
}

/// `BF+0`.
pub fn bf_plus_over_null(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    settings: &QuadratureSettings,
) -> Result<BayesFactor> {
    require_test(analysis, TestKind::PlusVsPoint)?;
    bayes_factor(y1, y2, layout, analysis, settings)
}

/// `BF−0`.
pub fn bf_minus_over_null(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    settings: &QuadratureSettings,
) -> Result<BayesFactor> {
    require_test(analysis, TestKind::MinusVsPoint)?;
    bayes_factor(y1, y2, layout, analysis, settings)
}

/// `BF+−`.
pub fn bf_plus_over_minus(
    y1: u32,
    y2: u32,
    layout: TrialLayout,
    analysis: &HypothesisSpec,
    settings: &QuadratureSettings,
) -> Result<BayesFactor> {
    require_test(analysis, TestKind::PlusVsMinus)?;
    bayes_factor(y1, y2, layout, analysis, settings)
}

/// `ln BF01` at every lattice point, row-major in `(y1, y2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BfMatrix {
    pub layout: TrialLayout,
    pub test: TestKind,
    ln_bf01: Vec<f64>,
}

impl BfMatrix {
    pub fn new(
        layout: TrialLayout,
        analysis: &HypothesisSpec,
        method: KernelMethod,
        settings: &QuadratureSettings,
    ) -> Result<Self> {
        let mut cache = MatrixCache::new(layout, method, settings);
        Self::from_cache(&mut cache, analysis)
    }

    /// Builds the matrix from (and leaves its predictives in) `cache`.
    pub fn from_cache(cache: &mut MatrixCache<'_>, analysis: &HypothesisSpec) -> Result<Self> {
        require_test(analysis, analysis.test)?;
        let null = cache.matrix(analysis.null_model())?;
        let alt = cache.matrix(analysis.alt_model())?;
        let ln_bf01 = null
            .ln_values()
            .iter()
            .zip(alt.ln_values())
            .map(|(n, a)| n - a)
            .collect();
        Ok(Self {
            layout: cache.layout(),
            test: analysis.test,
            ln_bf01,
        })
    }

    #[inline]
    pub fn ln_bf01(&self, y1: u32, y2: u32) -> f64 {
        self.ln_bf01[self.layout.index(y1, y2)]
    }

    pub fn bf01(&self, y1: u32, y2: u32) -> f64 {
        self.ln_bf01(y1, y2).exp()
    }

    pub fn get(&self, y1: u32, y2: u32) -> BayesFactor {
        BayesFactor::from_ln_bf01(self.test, self.ln_bf01(y1, y2))
    }

    /// `ln BF01` in row-major order.
    pub fn ln_values(&self) -> &[f64] {
        &self.ln_bf01
    }
}
