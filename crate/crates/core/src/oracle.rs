//! Monte Carlo estimates of the Bayesian operating characteristics, used to
//! cross-check the exact lattice sums.
//!
//! Parameters are drawn from the design priors (truncated ones by rejection),
//! outcomes from the binomial model, and each outcome is scored with the exact
//! Bayes factor. Simulations run in fixed-size chunks, each on its own ChaCha
//! stream, so results do not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayesfactor::BfMatrix;
use crate::error::{Error, Result};
use crate::numerics::QuadratureSettings;
use crate::oc::Thresholds;
use crate::predictive::{PredictiveModel, TrialLayout};
use crate::priors::{BetaPrior, TrialModel};
use crate::region::KernelMethod;

const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    pub n_sims: u64,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            n_sims: 100_000,
            seed: 0,
        }
    }
}

impl McSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_sims < 1000 {
            return Err(Error::config(format!(
                "at least 1000 simulations are needed, got {}",
                self.n_sims
            )));
        }
        Ok(())
    }
}

/// A simulated proportion and its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    fn from_count(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            estimate: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
        }
    }

    /// `(estimate − exact) / SE`, or 0 when both agree exactly with zero SE.
    pub fn z_score(&self, exact: f64) -> f64 {
        let d = self.estimate - exact;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d.abs() < 1e-12 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub bayes_power: McEstimate,
    pub bayes_t1e: McEstimate,
    pub pce_null: McEstimate,
    pub n_sims: u64,
}

/// Parameter sampler for one design predictive.
#[derive(Debug, Clone, Copy)]
enum Sampler {
    Point(Beta<f64>),
    Arms {
        arm1: Beta<f64>,
        arm2: Beta<f64>,
        keep: fn(f64, f64) -> bool,
    },
}

fn beta(p: BetaPrior) -> Result<Beta<f64>> {
    Beta::new(p.a, p.b).map_err(|e| Error::domain(format!("invalid Beta prior {p}: {e}")))
}

impl Sampler {
    fn new(model: PredictiveModel) -> Result<Self> {
        let arms = |a: crate::priors::ArmPriors, keep: fn(f64, f64) -> bool| -> Result<Self> {
            Ok(Sampler::Arms {
                arm1: beta(a.arm1)?,
                arm2: beta(a.arm2)?,
                keep,
            })
        };
        match model {
            PredictiveModel::PointNull(p) => Ok(Sampler::Point(beta(p)?)),
            PredictiveModel::Indep(a) => arms(a, |_, _| true),
            PredictiveModel::Plus(a) => arms(a, |p1, p2| p2 > p1),
            PredictiveModel::Minus(a) => arms(a, |p1, p2| p2 < p1),
            PredictiveModel::Leq(a) => arms(a, |p1, p2| p2 <= p1),
        }
    }

    /// Draws `(p1, p2)`, spending proposals from `budget`.
    fn draw<R: Rng>(&self, rng: &mut R, budget: &mut u64) -> Option<(f64, f64)> {
        match self {
            Sampler::Point(b) => {
                let p = b.sample(rng);
                Some((p, p))
            }
            Sampler::Arms { arm1, arm2, keep } => loop {
                if *budget == 0 {
                    return None;
                }
                *budget -= 1;
                let (p1, p2) = (arm1.sample(rng), arm2.sample(rng));
                if keep(p1, p2) {
                    return Some((p1, p2));
                }
            },
        }
    }
}

fn binomial<R: Rng>(rng: &mut R, n: u32, p: f64) -> Result<u32> {
    let d = Binomial::new(n as u64, p.clamp(0.0, 1.0))
        .map_err(|e| Error::domain(format!("invalid binomial parameter {p}: {e}")))?;
    Ok(d.sample(rng) as u32)
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    power: u64,
    t1e: u64,
    pce: u64,
}

/// Monte Carlo estimates of Bayesian power, type-I error and probability of
/// compelling evidence for `model` at `layout`.
pub fn mc_operating_characteristics(
    model: &TrialModel,
    layout: TrialLayout,
    thresholds: Thresholds,
    mc: &McSettings,
    settings: &QuadratureSettings,
) -> Result<McResult> {
    mc.validate()?;
    thresholds.validate()?;
    let bf = BfMatrix::new(layout, &model.analysis, KernelMethod::Auto, settings)?;
    let alt = Sampler::new(model.design.alt_model())?;
    let null = Sampler::new(model.design.null_model())?;
    let (ln_k, ln_kf) = (thresholds.k.ln(), thresholds.k_f.ln());
    let n_chunks = mc.n_sims.div_ceil(CHUNK);

    let tallies = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(c);
            let len = CHUNK.min(mc.n_sims - c * CHUNK);
            let max_proposals = 10 * len;
            let (mut alt_budget, mut null_budget) = (max_proposals, max_proposals);
            let mut t = Tally::default();
            for _ in 0..len {
                let (p1, p2) = alt
                    .draw(&mut rng, &mut alt_budget)
                    .ok_or(Error::SamplingBudget { max_proposals })?;
                let y1 = binomial(&mut rng, layout.n1, p1)?;
                let y2 = binomial(&mut rng, layout.n2, p2)?;
                if bf.ln_bf01(y1, y2) < ln_k {
                    t.power += 1;
                }
                let (q1, q2) = null
                    .draw(&mut rng, &mut null_budget)
                    .ok_or(Error::SamplingBudget { max_proposals })?;
                let y1 = binomial(&mut rng, layout.n1, q1)?;
                let y2 = binomial(&mut rng, layout.n2, q2)?;
                let v = bf.ln_bf01(y1, y2);
                if v < ln_k {
                    t.t1e += 1;
                }
                if v > ln_kf {
                    t.pce += 1;
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<Tally>>>()?;

    let total = tallies.iter().fold(Tally::default(), |a, t| Tally {
        power: a.power + t.power,
        t1e: a.t1e + t.t1e,
        pce: a.pce + t.pce,
    });
    Ok(McResult {
        bayes_power: McEstimate::from_count(total.power, mc.n_sims),
        bayes_t1e: McEstimate::from_count(total.t1e, mc.n_sims),
        pce_null: McEstimate::from_count(total.pce, mc.n_sims),
        n_sims: mc.n_sims,
    })
}
