use std::path::PathBuf;

use bfbin_core::prelude::*;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Result;

#[derive(Parser, Debug)]
#[command(name = "bfbin", version, about = "Bayes factor design for two-arm binomial trials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads, 0 for all cores. BFBIN_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Human)]
    pub output: OutputFormat,

    /// Write the report here instead of stdout. Required for `svg`; the
    /// curve CSV is written next to it.
    #[arg(long, global = true)]
    pub out_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bayes factor for observed data.
    Bf(BfArgs),
    /// Operating characteristics at fixed arm sizes.
    Oc(OcArgs),
    /// Smallest total sample size per criterion, with full curves.
    Calibrate(CalibrateArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
    Svg,
    Human,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TestArg {
    #[value(name = "two-sided")]
    TwoSided,
    Plus0,
    Minus0,
    Plusminus,
}

impl From<TestArg> for TestKind {
    fn from(t: TestArg) -> Self {
        match t {
            TestArg::TwoSided => TestKind::TwoSided,
            TestArg::Plus0 => TestKind::PlusVsPoint,
            TestArg::Minus0 => TestKind::MinusVsPoint,
            TestArg::Plusminus => TestKind::PlusVsMinus,
        }
    }
}

/// Parses `0.1`, `3` or an exact fraction such as `1/10`.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("bad numerator in '{s}': {e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("bad denominator in '{s}': {e}"))?;
            if den == 0.0 {
                return Err(format!("zero denominator in '{s}'"));
            }
            num / den
        }
        None => s.parse().map_err(|e| format!("bad number '{s}': {e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

/// Analysis priors. The `-minus` set applies to the null side of the
/// plus-vs-minus test.
#[derive(Args, Debug, Clone)]
pub struct AnalysisPriors {
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub a1a: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub b1a: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub a2a: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub b2a: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub a0a: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub b0a: f64,
    #[arg(long = "a1a-minus", default_value = "1", value_parser = parse_number)]
    pub a1a_minus: f64,
    #[arg(long = "b1a-minus", default_value = "1", value_parser = parse_number)]
    pub b1a_minus: f64,
    #[arg(long = "a2a-minus", default_value = "1", value_parser = parse_number)]
    pub a2a_minus: f64,
    #[arg(long = "b2a-minus", default_value = "1", value_parser = parse_number)]
    pub b2a_minus: f64,
}

/// Design priors, laid out like the analysis set.
#[derive(Args, Debug, Clone)]
pub struct DesignPriors {
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub a1d: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub b1d: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub a2d: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub b2d: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub a0d: f64,
    #[arg(long, default_value = "1", value_parser = parse_number)]
    pub b0d: f64,
    #[arg(long = "a1d-minus", default_value = "1", value_parser = parse_number)]
    pub a1d_minus: f64,
    #[arg(long = "b1d-minus", default_value = "1", value_parser = parse_number)]
    pub b1d_minus: f64,
    #[arg(long = "a2d-minus", default_value = "1", value_parser = parse_number)]
    pub a2d_minus: f64,
    #[arg(long = "b2d-minus", default_value = "1", value_parser = parse_number)]
    pub b2d_minus: f64,
}

#[allow(clippy::too_many_arguments)]
fn spec(
    test: TestKind,
    role: PriorRole,
    alt: [f64; 4],
    null: [f64; 2],
    minus: [f64; 4],
) -> Result<HypothesisSpec> {
    let arms = |v: [f64; 4]| -> Result<ArmPriors> {
        Ok(ArmPriors::new(BetaPrior::new(v[0], v[1])?, BetaPrior::new(v[2], v[3])?))
    };
    let null_side = if test == TestKind::PlusVsMinus {
        Some(arms(minus)?)
    } else {
        None
    };
    Ok(HypothesisSpec::new(
        test,
        role,
        BetaPrior::new(null[0], null[1])?,
        arms(alt)?,
        null_side,
    )?)
}

impl AnalysisPriors {
    pub fn resolve(&self, test: TestKind) -> Result<HypothesisSpec> {
        spec(
            test,
            PriorRole::Analysis,
            [self.a1a, self.b1a, self.a2a, self.b2a],
            [self.a0a, self.b0a],
            [self.a1a_minus, self.b1a_minus, self.a2a_minus, self.b2a_minus],
        )
    }
}

impl DesignPriors {
    pub fn resolve(&self, test: TestKind) -> Result<HypothesisSpec> {
        spec(
            test,
            PriorRole::Design,
            [self.a1d, self.b1d, self.a2d, self.b2d],
            [self.a0d, self.b0d],
            [self.a1d_minus, self.b1d_minus, self.a2d_minus, self.b2d_minus],
        )
    }
}

#[derive(Args, Debug)]
pub struct BfArgs {
    #[arg(long, value_enum)]
    pub test: TestArg,
    #[arg(long)]
    pub n1: u32,
    #[arg(long)]
    pub y1: u32,
    #[arg(long)]
    pub n2: u32,
    #[arg(long)]
    pub y2: u32,
    #[command(flatten)]
    pub analysis: AnalysisPriors,
}

/// Thresholds and frequentist options shared by `oc` and `calibrate`.
#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub test: TestArg,
    /// Evidence threshold: reject the null when its Bayes factor is below k.
    #[arg(long, default_value = "1/3", value_parser = parse_number)]
    pub k: f64,
    /// Compelling evidence for the null: its Bayes factor exceeds kf.
    #[arg(long, default_value = "3", value_parser = parse_number)]
    pub kf: f64,
    /// Control-arm rate for frequentist power (with --p2).
    #[arg(long, requires = "p2", value_parser = parse_number)]
    pub p1: Option<f64>,
    /// Treatment-arm rate for frequentist power (with --p1).
    #[arg(long, requires = "p1", value_parser = parse_number)]
    pub p2: Option<f64>,
    /// Report the frequentist type-I error supremum over the null grid.
    #[arg(long)]
    pub freq_t1e: bool,
    #[arg(long, default_value = "0.005", value_parser = parse_number)]
    pub grid_step: f64,
    #[command(flatten)]
    pub design: DesignPriors,
    #[command(flatten)]
    pub analysis: AnalysisPriors,
}

impl EvalArgs {
    pub fn model(&self) -> Result<TrialModel> {
        let test = TestKind::from(self.test);
        Ok(TrialModel::new(
            self.design.resolve(test)?,
            self.analysis.resolve(test)?,
        )?)
    }

    pub fn thresholds(&self) -> Result<Thresholds> {
        Ok(Thresholds::new(self.k, self.kf)?)
    }

    pub fn freq_point(&self) -> Option<(f64, f64)> {
        self.p1.zip(self.p2)
    }
}

#[derive(Args, Debug)]
pub struct OcArgs {
    #[arg(long)]
    pub n1: u32,
    #[arg(long)]
    pub n2: u32,
    #[command(flatten)]
    pub eval: EvalArgs,
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub eval: EvalArgs,
    #[arg(long, default_value = "0.8", value_parser = parse_number)]
    pub power: f64,
    #[arg(long, default_value = "0.05", value_parser = parse_number)]
    pub alpha: f64,
    #[arg(long, default_value = "0.8", value_parser = parse_number)]
    pub pce: f64,
    /// Smallest total sample size searched.
    #[arg(long, default_value_t = 10)]
    pub nmin: u32,
    /// Largest total sample size searched.
    #[arg(long, default_value_t = 100)]
    pub nmax: u32,
    #[arg(long, default_value_t = 1)]
    pub step: u32,
    #[arg(long, default_value = "0.5", value_parser = parse_number)]
    pub alloc1: f64,
    #[arg(long, default_value = "0.5", value_parser = parse_number)]
    pub alloc2: f64,
    /// Further candidates at which a criterion must keep holding.
    #[arg(long, default_value_t = 10)]
    pub lookahead: u32,
}

impl CalibrateArgs {
    pub fn targets(&self) -> Result<CalibrationTargets> {
        let t = CalibrationTargets {
            power_target: self.power,
            alpha_target: self.alpha,
            pce_target: self.pce,
            thresholds: self.eval.thresholds()?,
            freq_power_point: self.eval.freq_point(),
            compute_freq_t1e: self.eval.freq_t1e,
            grid_step: self.eval.grid_step,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn range(&self) -> Result<SearchRange> {
        let r = SearchRange {
            n_min: self.nmin,
            n_max: self.nmax,
            n_step: self.step,
            alloc1: self.alloc1,
            alloc2: self.alloc2,
            lookahead: self.lookahead,
        };
        r.validate()?;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_decimals() {
        assert_eq!(parse_number("1/10").unwrap(), 0.1);
        assert_eq!(parse_number("1/3").unwrap(), 1.0 / 3.0);
        assert_eq!(parse_number(" 30 ").unwrap(), 30.0);
        assert_eq!(parse_number("0.05").unwrap(), 0.05);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("abc").is_err());
        assert!(parse_number("inf").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
