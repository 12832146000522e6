//! Beta priors for the two arms, the four hypothesis tests, and the
//! normalizing constants of order-truncated priors.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ln_beta, QuadratureSettings};
use crate::region::{order_integrals_cached, KernelMethod};

/// A `Beta(a, b)` prior on a success probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub a: f64,
    pub b: f64,
}

impl BetaPrior {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = Self { a, b };
        p.validate()?;
        Ok(p)
    }

    /// The uniform `Beta(1, 1)` prior.
    pub const fn flat() -> Self {
        Self { a: 1.0, b: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.a > 0.0 && self.a.is_finite() && self.b > 0.0 && self.b.is_finite() {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "Beta shapes must be positive and finite, got ({}, {})",
                self.a, self.b
            )))
        }
    }

    pub fn ln_beta(&self) -> f64 {
        ln_beta(self.a, self.b)
    }

    /// Density at `p`, zero outside `(0, 1)`.
    pub fn density(&self, p: f64) -> f64 {
        if p <= 0.0 || p >= 1.0 {
            return 0.0;
        }
        ((self.a - 1.0) * p.ln() + (self.b - 1.0) * (-p).ln_1p() - self.ln_beta()).exp()
    }
}

impl Default for BetaPrior {
    fn default() -> Self {
        Self::flat()
    }
}

impl fmt::Display for BetaPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Beta({}, {})", self.a, self.b)
    }
}

/// Independent priors for the control arm (`arm1`) and treatment arm (`arm2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ArmPriors {
    pub arm1: BetaPrior,
    pub arm2: BetaPrior,
}

impl ArmPriors {
    pub fn new(arm1: BetaPrior, arm2: BetaPrior) -> Self {
        Self { arm1, arm2 }
    }

    pub fn flat() -> Self {
        Self::default()
    }
}

/// The four tests on the difference `η = p2 − p1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// `H0: η = 0` versus `H1: η ≠ 0`.
    TwoSided,
    /// `H0: η = 0` versus `H+: η > 0`.
    PlusVsPoint,
    /// `H0: η = 0` versus `H−: η < 0`.
    MinusVsPoint,
    /// `H−: η ≤ 0` versus `H+: η > 0`.
    PlusVsMinus,
}

impl TestKind {
    pub fn has_point_null(self) -> bool {
        !matches!(self, TestKind::PlusVsMinus)
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            TestKind::TwoSided => "two-sided",
            TestKind::PlusVsPoint => "plus0",
            TestKind::MinusVsPoint => "minus0",
            TestKind::PlusVsMinus => "plusminus",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl std::str::FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" => Ok(TestKind::TwoSided),
            "plus0" => Ok(TestKind::PlusVsPoint),
            "minus0" => Ok(TestKind::MinusVsPoint),
            "plusminus" => Ok(TestKind::PlusVsMinus),
            other => Err(Error::config(format!(
                "unknown test '{other}' (expected two-sided, plus0, minus0 or plusminus)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorRole {
    Design,
    Analysis,
}

/// Priors for one role (design or analysis) of one test.
///
/// `null_prior` is the common-`p` prior of a point null. `alt` holds the arm
/// priors of the alternative; for [`TestKind::PlusVsPoint`] and
/// [`TestKind::MinusVsPoint`] they are truncated to the alternative's region.
/// `null_side` holds the arm priors truncated to `{p2 ≤ p1}` and is present
/// exactly for [`TestKind::PlusVsMinus`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSpec {
    pub test: TestKind,
    pub role: PriorRole,
    pub null_prior: BetaPrior,
    pub alt: ArmPriors,
    pub null_side: Option<ArmPriors>,
}

impl HypothesisSpec {
    pub fn new(
        test: TestKind,
        role: PriorRole,
        null_prior: BetaPrior,
        alt: ArmPriors,
        null_side: Option<ArmPriors>,
    ) -> Result<Self> {
        let spec = Self {
            test,
            role,
            null_prior,
            alt,
            null_side,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Flat `Beta(1, 1)` priors everywhere.
    pub fn flat(test: TestKind, role: PriorRole) -> Self {
        Self {
            test,
            role,
            null_prior: BetaPrior::flat(),
            alt: ArmPriors::flat(),
            null_side: (test == TestKind::PlusVsMinus).then(ArmPriors::flat),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.null_prior.validate()?;
        self.alt.arm1.validate()?;
        self.alt.arm2.validate()?;
        match (self.test, self.null_side) {
            (TestKind::PlusVsMinus, Some(ns)) => {
                ns.arm1.validate()?;
                ns.arm2.validate()?;
            }
            (TestKind::PlusVsMinus, None) => {
                return Err(Error::config(
                    "the plus-vs-minus test needs priors for the null side {p2 <= p1}",
                ))
            }
            (_, Some(_)) => {
                return Err(Error::config(
                    "null-side arm priors only apply to the plus-vs-minus test",
                ))
            }
            (_, None) => {}
        }
        if self.test == TestKind::TwoSided && self.role == PriorRole::Analysis {
            let (p, q) = (self.alt.arm1, self.alt.arm2);
            if p.a + q.a <= 1.0 || p.b + q.b <= 1.0 {
                return Err(Error::config(format!(
                    "two-sided analysis priors need a1 + a2 > 1 and b1 + b2 > 1, got {p} and {q}"
                )));
            }
        }
        Ok(())
    }

    /// Null-side arm priors; falls back to the alternative's arm priors for
    /// tests without a composite null.
    pub fn null_side_or_alt(&self) -> ArmPriors {
        self.null_side.unwrap_or(self.alt)
    }

    /// Common-`p` prior implied under a two-sided point null by the
    /// Savage-Dickey construction: `Beta(a1 + a2 − 1, b1 + b2 − 1)`.
    pub fn two_sided_implied_null(&self) -> BetaPrior {
        BetaPrior {
            a: self.alt.arm1.a + self.alt.arm2.a - 1.0,
            b: self.alt.arm1.b + self.alt.arm2.b - 1.0,
        }
    }
}

/// Design priors (averaging operating characteristics) paired with analysis
/// priors (inside the Bayes factor) for one test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialModel {
    pub design: HypothesisSpec,
    pub analysis: HypothesisSpec,
}

impl TrialModel {
    pub fn new(design: HypothesisSpec, analysis: HypothesisSpec) -> Result<Self> {
        if design.test != analysis.test {
            return Err(Error::config(format!(
                "design priors are for '{}' but analysis priors are for '{}'",
                design.test, analysis.test
            )));
        }
        if design.role != PriorRole::Design || analysis.role != PriorRole::Analysis {
            return Err(Error::config("design and analysis roles are swapped"));
        }
        design.validate()?;
        analysis.validate()?;
        Ok(Self { design, analysis })
    }

    /// Flat design and analysis priors.
    pub fn flat(test: TestKind) -> Self {
        Self {
            design: HypothesisSpec::flat(test, PriorRole::Design),
            analysis: HypothesisSpec::flat(test, PriorRole::Analysis),
        }
    }

    pub fn test(&self) -> TestKind {
        self.analysis.test
    }
}

/// `C = P(p2 > p1)` under independent `arm1`, `arm2` priors.
pub fn trunc_const_plus(arm1: BetaPrior, arm2: BetaPrior, settings: &QuadratureSettings) -> Result<f64> {
    trunc_const_plus_with(arm1, arm2, KernelMethod::Auto, settings)
}

/// `C− = P(p2 < p1)` under independent `arm1`, `arm2` priors.
pub fn trunc_const_minus(arm1: BetaPrior, arm2: BetaPrior, settings: &QuadratureSettings) -> Result<f64> {
    trunc_const_minus_with(arm1, arm2, KernelMethod::Auto, settings)
}

/// `C0 = P(p2 ≤ p1) = 1 − C`.
pub fn trunc_const_leq(arm1: BetaPrior, arm2: BetaPrior, settings: &QuadratureSettings) -> Result<f64> {
    trunc_const_leq_with(arm1, arm2, KernelMethod::Auto, settings)
}

pub fn trunc_const_plus_with(
    arm1: BetaPrior,
    arm2: BetaPrior,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<f64> {
    Ok(ln_trunc_consts(arm1, arm2, method, settings)?.0.exp())
}

pub fn trunc_const_minus_with(
    arm1: BetaPrior,
    arm2: BetaPrior,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<f64> {
    Ok(ln_trunc_consts(arm1, arm2, method, settings)?.1.exp())
}

pub fn trunc_const_leq_with(
    arm1: BetaPrior,
    arm2: BetaPrior,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<f64> {
    Ok(1.0 - trunc_const_plus_with(arm1, arm2, method, settings)?)
}

/// `(ln C, ln C−)`, memoized per shape tuple.
pub(crate) fn ln_trunc_consts(
    arm1: BetaPrior,
    arm2: BetaPrior,
    method: KernelMethod,
    settings: &QuadratureSettings,
) -> Result<(f64, f64)> {
    arm1.validate()?;
    arm2.validate()?;
    let r = order_integrals_cached(arm1.a, arm1.b, arm2.a, arm2.b, method, settings)?;
    Ok((r.ln_upper - r.ln_total, r.ln_lower - r.ln_total))
}
