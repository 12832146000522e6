//! Simulation-free Bayes factor design for two-arm binomial trials.
//!
//! The crate enumerates the `(y1, y2)` outcome lattice exactly: prior
//! predictives under each hypothesis, Bayes factors with analysis priors,
//! rejection sets, and operating characteristics averaged over design priors
//! or evaluated at fixed parameters. [`design::calibrate`] searches for the
//! smallest total sample size meeting each criterion.
//!
//! ```
//! use bfbin_core::prelude::*;
//!
//! let layout = TrialLayout::new(60, 59).unwrap();
//! let analysis = HypothesisSpec::flat(TestKind::PlusVsPoint, PriorRole::Analysis);
//! let bf = bayes_factor(38, 48, layout, &analysis, &QuadratureSettings::default()).unwrap();
//! assert!((bf.value() - 4.32).abs() < 0.01);
//! ```

pub mod bayesfactor;
pub mod design;
pub mod error;
pub mod numerics;
pub mod oc;
pub mod oracle;
pub mod predictive;
pub mod priors;
pub mod region;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::bayesfactor::{
        bayes_factor, bf01_two_sided, bf_minus_over_null, bf_plus_over_minus, bf_plus_over_null,
        two_sided_closed_form, BayesFactor, BfMatrix, BfOrientation, EvidenceLabel,
    };
    pub use crate::design::{
        allocate, calibrate, oc_curve, CalibrationTargets, CurveRow, DesignResult, SearchRange,
    };
    pub use crate::error::{Error, Result};
    pub use crate::numerics::QuadratureSettings;
    pub use crate::oc::{
        bayes_power, bayes_t1e, evaluate, freq_power, freq_t1e_sup, pce_null, rejection_set,
        FreqT1e, OcOptions, OcResult, RejectionSet, Thresholds,
    };
    pub use crate::predictive::{PredictiveMatrix, PredictiveModel, TrialLayout};
    pub use crate::priors::{ArmPriors, BetaPrior, HypothesisSpec, PriorRole, TestKind, TrialModel};
    pub use crate::region::KernelMethod;
}
