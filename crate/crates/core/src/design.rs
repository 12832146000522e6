//! Smallest-sample-size calibration over total `n`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::QuadratureSettings;
use crate::oc::{evaluate, FreqT1e, OcOptions, OcResult, Thresholds, DEFAULT_GRID_STEP};
use crate::predictive::TrialLayout;
use crate::priors::TrialModel;
use crate::region::KernelMethod;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationTargets {
    /// `1 − β`: required Bayesian (and frequentist) power.
    pub power_target: f64,
    /// `α`: admissible Bayesian type-I error.
    pub alpha_target: f64,
    /// `1 − β_f`: required probability of compelling evidence for the null.
    pub pce_target: f64,
    pub thresholds: Thresholds,
    /// `(p1, p2)` at which frequentist power is evaluated.
    pub freq_power_point: Option<(f64, f64)>,
    pub compute_freq_t1e: bool,
    pub grid_step: f64,
}

impl Default for CalibrationTargets {
    fn default() -> Self {
        Self {
            power_target: 0.8,
            alpha_target: 0.05,
            pce_target: 0.8,
            thresholds: Thresholds {
                k: 1.0 / 3.0,
                k_f: 3.0,
            },
            freq_power_point: None,
            compute_freq_t1e: false,
            grid_step: DEFAULT_GRID_STEP,
        }
    }
}

impl CalibrationTargets {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("power target", self.power_target),
            ("alpha target", self.alpha_target),
            ("pce target", self.pce_target),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        self.thresholds.validate()?;
        self.oc_options(KernelMethod::Auto).validate()
    }

    fn oc_options(&self, method: KernelMethod) -> OcOptions {
        OcOptions {
            freq_t1e: self.compute_freq_t1e,
            grid_step: self.grid_step,
            freq_power_point: self.freq_power_point,
            method,
        }
    }
}

/// Candidate totals `n_min, n_min + n_step, …, ≤ n_max`, split by allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchRange {
    pub n_min: u32,
    pub n_max: u32,
    pub n_step: u32,
    pub alloc1: f64,
    pub alloc2: f64,
    /// Successive candidates that must also meet a criterion.
    pub lookahead: u32,
}

impl SearchRange {
    pub fn new(n_min: u32, n_max: u32) -> Self {
        Self {
            n_min,
            n_max,
            n_step: 1,
            alloc1: 0.5,
            alloc2: 0.5,
            lookahead: 10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min < 2 {
            return Err(Error::config(format!(
                "n_min must be at least 2 so both arms get a patient, got {}",
                self.n_min
            )));
        }
        if self.n_min > self.n_max {
            return Err(Error::config(format!(
                "empty search range: n_min = {} exceeds n_max = {}",
                self.n_min, self.n_max
            )));
        }
        if self.n_step == 0 {
            return Err(Error::config("n_step must be positive"));
        }
        check_alloc(self.alloc1, self.alloc2)
    }

    pub fn candidates(&self) -> Vec<u32> {
        (self.n_min..=self.n_max).step_by(self.n_step as usize).collect()
    }
}

fn check_alloc(alloc1: f64, alloc2: f64) -> Result<()> {
    if !(alloc1 > 0.0 && alloc1 < 1.0 && alloc2 > 0.0 && alloc2 < 1.0) {
        return Err(Error::config(format!(
            "allocation fractions must lie in (0, 1), got {alloc1} and {alloc2}"
        )));
    }
    if (alloc1 + alloc2 - 1.0).abs() > 1e-12 {
        return Err(Error::config(format!(
            "allocation fractions must sum to 1, got {alloc1} + {alloc2}"
        )));
    }
    Ok(())
}

/// Splits `n_total` into `(n1, n2)` with `n1 = round(alloc1 · n_total)`
/// (ties to even), clamped to `[1, n_total − 1]`.
pub fn allocate(n_total: u32, alloc1: f64, alloc2: f64) -> Result<(u32, u32)> {
    if n_total < 2 {
        return Err(Error::domain(format!(
            "a two-arm trial needs at least 2 patients, got {n_total}"
        )));
    }
    check_alloc(alloc1, alloc2)?;
    let n1 = (alloc1 * n_total as f64).round_ties_even() as u32;
    let n1 = n1.clamp(1, n_total - 1);
    Ok((n1, n_total - n1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n_total: u32,
    pub n1: u32,
    pub n2: u32,
    pub oc: OcResult,
}

/// Smallest calibrated totals, one per criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Crossings {
    pub n_power: Option<u32>,
    pub n_alpha: Option<u32>,
    pub n_pce: Option<u32>,
    pub n_freq_power: Option<u32>,
}

/// Largest grid-maximal frequentist type-I error along the curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqT1ePeak {
    pub n_total: u32,
    pub n1: u32,
    pub n2: u32,
    pub t1e: FreqT1e,
}

/// Everything that determines a calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignConfig {
    pub model: TrialModel,
    pub targets: CalibrationTargets,
    pub range: SearchRange,
    pub quadrature: QuadratureSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    /// Smallest totals under the lookahead rule.
    pub calibrated: Crossings,
    /// Smallest totals at which each criterion first holds (lookahead 0).
    pub first_crossing: Crossings,
    pub freq_t1e_peak: Option<FreqT1ePeak>,
    pub curves: Vec<CurveRow>,
    pub config: DesignConfig,
}

impl DesignResult {
    pub fn n_power(&self) -> Option<u32> {
        self.calibrated.n_power
    }

    pub fn n_alpha(&self) -> Option<u32> {
        self.calibrated.n_alpha
    }

    pub fn n_pce(&self) -> Option<u32> {
        self.calibrated.n_pce
    }

    pub fn n_freq_power(&self) -> Option<u32> {
        self.calibrated.n_freq_power
    }

    /// Curve row for total `n`.
    pub fn row(&self, n_total: u32) -> Option<&CurveRow> {
        self.curves.iter().find(|r| r.n_total == n_total)
    }
}

/// One curve row per candidate total, evaluated in parallel and returned in
/// candidate order.
pub fn oc_curve(
    model: &TrialModel,
    targets: &CalibrationTargets,
    range: &SearchRange,
    settings: &QuadratureSettings,
) -> Result<Vec<CurveRow>> {
    targets.validate()?;
    range.validate()?;
    settings.validate()?;
    let opts = targets.oc_options(KernelMethod::Auto);
    range
        .candidates()
        .into_par_iter()
        .map(|n_total| {
            let (n1, n2) = allocate(n_total, range.alloc1, range.alloc2)?;
            let layout = TrialLayout::new(n1, n2)?;
            let oc = evaluate(layout, model, targets.thresholds, &opts, settings)?;
            Ok(CurveRow { n_total, n1, n2, oc })
        })
        .collect()
}

/// Index of the first `true` in `ok` followed by `lookahead` further `true`s,
/// counting only entries that exist.
fn first_stable(ok: &[bool], lookahead: usize) -> Option<usize> {
    (0..ok.len()).find(|&i| {
        let end = (i + lookahead).min(ok.len() - 1);
        ok[i..=end].iter().all(|b| *b)
    })
}

fn crossings(curves: &[CurveRow], targets: &CalibrationTargets, lookahead: usize) -> Crossings {
    let pick = |pred: &dyn Fn(&OcResult) -> Option<bool>| -> Option<u32> {
        let ok: Vec<bool> = curves
            .iter()
            .map(|r| pred(&r.oc))
            .collect::<Option<Vec<_>>>()?;
        first_stable(&ok, lookahead).map(|i| curves[i].n_total)
    };
    Crossings {
        n_power: pick(&|o| Some(o.bayes_power >= targets.power_target)),
        n_alpha: pick(&|o| Some(o.bayes_t1e <= targets.alpha_target)),
        n_pce: pick(&|o| Some(o.pce_null >= targets.pce_target)),
        n_freq_power: pick(&|o| o.freq_power.map(|p| p >= targets.power_target)),
    }
}

/// Smallest total per criterion such that the criterion holds there and at
/// each of the next `lookahead` candidates in range.
pub fn calibrate(
    model: &TrialModel,
    targets: &CalibrationTargets,
    range: &SearchRange,
    settings: &QuadratureSettings,
) -> Result<DesignResult> {
    let curves = oc_curve(model, targets, range, settings)?;
    let calibrated = crossings(&curves, targets, range.lookahead as usize);
    let first_crossing = crossings(&curves, targets, 0);
    let mut freq_t1e_peak: Option<FreqT1ePeak> = None;
    for r in &curves {
        if let Some(t) = r.oc.freq_t1e {
            if freq_t1e_peak.is_none_or(|p| t.sup > p.t1e.sup) {
                freq_t1e_peak = Some(FreqT1ePeak {
                    n_total: r.n_total,
                    n1: r.n1,
                    n2: r.n2,
                    t1e: t,
                });
            }
        }
    }
    Ok(DesignResult {
        calibrated,
        first_crossing,
        freq_t1e_peak,
        curves,
        config: DesignConfig {
            model: *model,
            targets: *targets,
            range: *range,
            quadrature: *settings,
        },
    })
}
