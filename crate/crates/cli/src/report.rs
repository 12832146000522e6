use std::fmt::Write as _;
use std::io::Write;

use bfbin_core::design::{Crossings, FreqT1ePeak};
use bfbin_core::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Column order of curve rows, in JSON and CSV alike.
pub const CURVE_COLUMNS: [&str; 8] = [
    "n_total",
    "n1",
    "n2",
    "bayes_power",
    "bayes_t1e",
    "pce_null",
    "freq_t1e",
    "freq_power",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRecord {
    pub n_total: u32,
    pub n1: u32,
    pub n2: u32,
    pub bayes_power: f64,
    pub bayes_t1e: f64,
    pub pce_null: f64,
    pub freq_t1e: Option<f64>,
    pub freq_power: Option<f64>,
}

impl CurveRecord {
    pub fn new(n1: u32, n2: u32, oc: &OcResult) -> Self {
        Self {
            n_total: n1 + n2,
            n1,
            n2,
            bayes_power: oc.bayes_power,
            bayes_t1e: oc.bayes_t1e,
            pce_null: oc.pce_null,
            freq_t1e: oc.freq_t1e.map(|t| t.sup),
            freq_power: oc.freq_power,
        }
    }

    fn csv_fields(&self) -> [String; 8] {
        let opt = |v: Option<f64>| v.map(sig10).unwrap_or_default();
        [
            self.n_total.to_string(),
            self.n1.to_string(),
            self.n2.to_string(),
            sig10(self.bayes_power),
            sig10(self.bayes_t1e),
            sig10(self.pce_null),
            opt(self.freq_t1e),
            opt(self.freq_power),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub version: String,
    pub runtime_ms: u64,
}

impl Meta {
    pub fn new(runtime: std::time::Duration) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            runtime_ms: runtime.as_millis() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<C, R> {
    pub config: C,
    pub result: R,
    pub meta: Meta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfConfig {
    pub test: String,
    pub n1: u32,
    pub y1: u32,
    pub n2: u32,
    pub y2: u32,
    pub analysis: HypothesisSpec,
    pub quadrature: QuadratureSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfResult {
    pub orientation: String,
    pub bf: f64,
    pub ln_bf: f64,
    pub bf01: f64,
    pub label: String,
    pub favors: String,
}

impl BfResult {
    pub fn new(bf: &BayesFactor) -> Self {
        let (alt, null) = hypothesis_names(bf.test);
        Self {
            orientation: bf.orientation.symbol().to_string(),
            bf: bf.value(),
            ln_bf: bf.ln_value,
            bf01: bf.ln_bf01().exp(),
            label: bf.label().to_string(),
            favors: if bf.favors_alternative() { alt } else { null }.to_string(),
        }
    }
}

fn hypothesis_names(test: TestKind) -> (&'static str, &'static str) {
    match test {
        TestKind::TwoSided => ("H1: p1 != p2", "H0: p1 = p2"),
        TestKind::PlusVsPoint => ("H+: p2 > p1", "H0: p1 = p2"),
        TestKind::MinusVsPoint => ("H-: p2 < p1", "H0: p1 = p2"),
        TestKind::PlusVsMinus => ("H+: p2 > p1", "H-: p2 <= p1"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub test: String,
    pub model: TrialModel,
    pub k: f64,
    pub kf: f64,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub freq_t1e: bool,
    pub grid_step: f64,
    pub quadrature: QuadratureSettings,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcConfig {
    pub n1: u32,
    pub n2: u32,
    #[serde(flatten)]
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcReportResult {
    #[serde(flatten)]
    pub row: CurveRecord,
    pub freq_t1e_at: Option<(f64, f64)>,
    pub rejection_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateConfig {
    #[serde(flatten)]
    pub eval: EvalConfig,
    pub power: f64,
    pub alpha: f64,
    pub pce: f64,
    pub nmin: u32,
    pub nmax: u32,
    pub step: u32,
    pub alloc1: f64,
    pub alloc2: f64,
    pub lookahead: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateResult {
    pub n_power: Option<u32>,
    pub n_alpha: Option<u32>,
    pub n_pce: Option<u32>,
    pub n_freq_power: Option<u32>,
    pub curves: Vec<CurveRecord>,
    /// Sizes at which each criterion is first met, ignoring the lookahead.
    pub first_crossing: Crossings,
    pub freq_t1e_peak: Option<FreqT1ePeak>,
}

impl CalibrateResult {
    pub fn new(res: &DesignResult) -> Self {
        Self {
            n_power: res.calibrated.n_power,
            n_alpha: res.calibrated.n_alpha,
            n_pce: res.calibrated.n_pce,
            n_freq_power: res.calibrated.n_freq_power,
            curves: res.curves.iter().map(|r| CurveRecord::new(r.n1, r.n2, &r.oc)).collect(),
            first_crossing: res.first_crossing,
            freq_t1e_peak: res.freq_t1e_peak,
        }
    }
}

/// `x` with ten significant digits, positional where that stays readable.
pub fn sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        let decimals = (9 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.9e}")
    }
}

pub fn write_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_curve_csv(out: &mut dyn Write, rows: &[CurveRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_COLUMNS)?;
    for r in rows {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bf_csv(out: &mut dyn Write, cfg: &BfConfig, res: &BfResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["test", "n1", "y1", "n2", "y2", "orientation", "bf", "ln_bf", "label"])?;
    w.write_record([
        cfg.test.clone(),
        cfg.n1.to_string(),
        cfg.y1.to_string(),
        cfg.n2.to_string(),
        cfg.y2.to_string(),
        res.orientation.clone(),
        sig10(res.bf),
        sig10(res.ln_bf),
        res.label.clone(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Up to six decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

fn fmt_n(v: Option<u32>) -> String {
    v.map_or("not reached".into(), |n| n.to_string())
}

fn priors_block(s: &mut String, label: &str, spec: &HypothesisSpec) {
    let _ = writeln!(s, "  {label} priors:");
    let (alt, null) = hypothesis_names(spec.test);
    let _ = writeln!(s, "    {alt:<14} arm 1 {}, arm 2 {}", spec.alt.arm1, spec.alt.arm2);
    match (spec.test, spec.null_side) {
        (TestKind::PlusVsMinus, Some(ns)) => {
            let _ = writeln!(s, "    {null:<14} arm 1 {}, arm 2 {}", ns.arm1, ns.arm2);
        }
        (TestKind::TwoSided, _) if spec.role == PriorRole::Analysis => {
            let _ = writeln!(s, "    {null:<14} common p {} (implied)", spec.two_sided_implied_null());
        }
        _ => {
            let _ = writeln!(s, "    {null:<14} common p {}", spec.null_prior);
        }
    }
}

pub fn human_bf(cfg: &BfConfig, res: &BfResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "test: {}  data: y1={}/{} y2={}/{}", cfg.test, cfg.y1, cfg.n1, cfg.y2, cfg.n2);
    priors_block(&mut s, "analysis", &cfg.analysis);
    let _ = writeln!(s, "{:<6} = {:.4}", res.orientation, res.bf);
    let _ = writeln!(s, "ln {:<3} = {:.6}", res.orientation, res.ln_bf);
    let _ = writeln!(s, "evidence: {} for {}", res.label, res.favors);
    s
}

fn eval_header(s: &mut String, cfg: &EvalConfig) {
    let _ = writeln!(s, "test: {}  k = {}  kf = {}", cfg.test, short(cfg.k), short(cfg.kf));
    priors_block(s, "design", &cfg.model.design);
    priors_block(s, "analysis", &cfg.model.analysis);
}

pub fn human_oc(cfg: &OcConfig, res: &OcReportResult) -> String {
    let mut s = String::new();
    eval_header(&mut s, &cfg.eval);
    let r = &res.row;
    let _ = writeln!(s, "n1 = {}, n2 = {}", r.n1, r.n2);
    let _ = writeln!(s, "rejection set size      {}", res.rejection_size);
    let _ = writeln!(s, "Bayesian power          {:.4}", r.bayes_power);
    let _ = writeln!(s, "Bayesian type-I error   {:.4}", r.bayes_t1e);
    let _ = writeln!(s, "P(compelling | null)    {:.4}", r.pce_null);
    if let (Some(t), Some((p1, p2))) = (r.freq_t1e, res.freq_t1e_at) {
        let _ = writeln!(s, "frequentist T1E sup     {t:.4} at p1={p1:.3}, p2={p2:.3}");
    }
    if let (Some(p), Some(p1), Some(p2)) = (r.freq_power, cfg.eval.p1, cfg.eval.p2) {
        let _ = writeln!(s, "frequentist power       {p:.4} at p1={p1}, p2={p2}");
    }
    s
}

pub fn human_calibrate(cfg: &CalibrateConfig, res: &CalibrateResult) -> String {
    let mut s = String::new();
    eval_header(&mut s, &cfg.eval);
    let _ = writeln!(
        s,
        "search n = {}..{} step {}, allocation {}:{}, lookahead {}",
        cfg.nmin,
        cfg.nmax,
        cfg.step,
        short(cfg.alloc1),
        short(cfg.alloc2),
        cfg.lookahead
    );
    let _ = writeln!(s, "{:<34} {:>12} {:>14}", "criterion", "calibrated", "first reached");
    let f = &res.first_crossing;
    let mut line = |name: String, cal: Option<u32>, first: Option<u32>| {
        let _ = writeln!(s, "{name:<34} {:>12} {:>14}", fmt_n(cal), fmt_n(first));
    };
    line(format!("Bayesian power >= {}", cfg.power), res.n_power, f.n_power);
    line(format!("Bayesian type-I error <= {}", cfg.alpha), res.n_alpha, f.n_alpha);
    line(format!("P(compelling | null) >= {}", cfg.pce), res.n_pce, f.n_pce);
    if cfg.eval.p1.is_some() {
        line(format!("frequentist power >= {}", cfg.power), res.n_freq_power, f.n_freq_power);
    }
    if let Some(p) = res.freq_t1e_peak {
        let _ = writeln!(
            s,
            "peak frequentist type-I error {:.4} at n = {} ({}/{})",
            p.t1e.sup, p.n_total, p.n1, p.n2
        );
    }
    let _ = writeln!(
        s,
        "\n{:>7} {:>4} {:>4} {:>8} {:>8} {:>8} {:>8} {:>8}",
        "n_total", "n1", "n2", "power", "t1e", "pce", "freq_t1e", "freq_pow"
    );
    for r in &res.curves {
        let _ = writeln!(
            s,
            "{:>7} {:>4} {:>4} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>8}",
            r.n_total,
            r.n1,
            r.n2,
            r.bayes_power,
            r.bayes_t1e,
            r.pce_null,
            fmt_opt(r.freq_t1e),
            fmt_opt(r.freq_power)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_significant_digits() {
        assert_eq!(sig10(0.7104512345678), "0.7104512346");
        assert_eq!(sig10(0.0123456789012), "0.01234567890");
        assert_eq!(sig10(3702.6512345678), "3702.651235");
        assert_eq!(sig10(1.0), "1.000000000");
        assert_eq!(sig10(0.0), "0");
        assert_eq!(sig10(1.5e-9), "1.500000000e-9");
    }

    #[test]
    fn curve_csv_header_matches_columns() {
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), CURVE_COLUMNS.join(","));
    }
}
