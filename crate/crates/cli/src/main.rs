use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use bfbin_core::prelude::*;
use clap::Parser;

mod args;
mod error;
mod plot;
mod report;

use args::{BfArgs, CalibrateArgs, Cli, Command, EvalArgs, OcArgs, OutputFormat};
use error::{CliError, Result};
use report::*;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bfbin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn thread_count(flag: usize) -> Result<usize> {
    match std::env::var("BFBIN_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("BFBIN_THREADS must be a non-negative integer, got '{v}'"))),
        _ => Ok(flag),
    }
}

fn run(cli: &Cli) -> Result<()> {
    let threads = thread_count(cli.threads)?;
    if cli.output == OutputFormat::Svg && !matches!(cli.command, Command::Calibrate(_)) {
        return Err(CliError::Usage("svg output is only available for calibrate".into()));
    }
    if cli.output == OutputFormat::Svg && cli.out_file.is_none() {
        return Err(CliError::Usage("svg output needs --out-file".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| match &cli.command {
        Command::Bf(a) => cmd_bf(cli, a),
        Command::Oc(a) => cmd_oc(cli, a, threads),
        Command::Calibrate(a) => cmd_calibrate(cli, a, threads),
    })
}

fn with_output(cli: &Cli, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &cli.out_file {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            f(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_bf(cli: &Cli, a: &BfArgs) -> Result<()> {
    let start = Instant::now();
    let test = TestKind::from(a.test);
    let analysis = a.analysis.resolve(test)?;
    let layout = TrialLayout::new(a.n1, a.n2)?;
    let quadrature = QuadratureSettings::default();
    let bf = bayes_factor(a.y1, a.y2, layout, &analysis, &quadrature)?;
    let config = BfConfig {
        test: test.cli_name().to_string(),
        n1: a.n1,
        y1: a.y1,
        n2: a.n2,
        y2: a.y2,
        analysis,
        quadrature,
    };
    let result = BfResult::new(&bf);
    with_output(cli, |w| match cli.output {
        OutputFormat::Json => write_json(
            w,
            &Report {
                config: config.clone(),
                result: result.clone(),
                meta: Meta::new(start.elapsed()),
            },
        ),
        OutputFormat::Csv => write_bf_csv(w, &config, &result),
        _ => Ok(write!(w, "{}", human_bf(&config, &result))?),
    })
}

fn eval_config(e: &EvalArgs, model: TrialModel, threads: usize) -> EvalConfig {
    EvalConfig {
        test: model.test().cli_name().to_string(),
        model,
        k: e.k,
        kf: e.kf,
        p1: e.p1,
        p2: e.p2,
        freq_t1e: e.freq_t1e,
        grid_step: e.grid_step,
        quadrature: QuadratureSettings::default(),
        threads,
    }
}

fn cmd_oc(cli: &Cli, a: &OcArgs, threads: usize) -> Result<()> {
    let start = Instant::now();
    let model = a.eval.model()?;
    let layout = TrialLayout::new(a.n1, a.n2)?;
    let opts = OcOptions {
        freq_t1e: a.eval.freq_t1e,
        grid_step: a.eval.grid_step,
        freq_power_point: a.eval.freq_point(),
        ..OcOptions::default()
    };
    let config = OcConfig {
        n1: a.n1,
        n2: a.n2,
        eval: eval_config(&a.eval, model, threads),
    };
    let oc = evaluate(layout, &model, a.eval.thresholds()?, &opts, &config.eval.quadrature)?;
    let result = OcReportResult {
        row: CurveRecord::new(a.n1, a.n2, &oc),
        freq_t1e_at: oc.freq_t1e.map(|t| (t.p1, t.p2)),
        rejection_size: oc.rejection_size,
    };
    with_output(cli, |w| match cli.output {
        OutputFormat::Json => write_json(
            w,
            &Report {
                config: config.clone(),
                result: result.clone(),
                meta: Meta::new(start.elapsed()),
            },
        ),
        OutputFormat::Csv => write_curve_csv(w, &[result.row]),
        _ => Ok(write!(w, "{}", human_oc(&config, &result))?),
    })
}

fn cmd_calibrate(cli: &Cli, a: &CalibrateArgs, threads: usize) -> Result<()> {
    let start = Instant::now();
    let model = a.eval.model()?;
    let targets = a.targets()?;
    let range = a.range()?;
    let config = CalibrateConfig {
        eval: eval_config(&a.eval, model, threads),
        power: a.power,
        alpha: a.alpha,
        pce: a.pce,
        nmin: a.nmin,
        nmax: a.nmax,
        step: a.step,
        alloc1: a.alloc1,
        alloc2: a.alloc2,
        lookahead: a.lookahead,
    };
    let design = calibrate(&model, &targets, &range, &config.eval.quadrature)?;
    let result = CalibrateResult::new(&design);
    let report = Report {
        config,
        result,
        meta: Meta::new(start.elapsed()),
    };
    match cli.output {
        OutputFormat::Svg => {
            let path = cli.out_file.as_deref().expect("checked above");
            plot::render(path, &report.config, &report.result)?;
            let csv_path = path.with_extension("csv");
            let mut w = BufWriter::new(File::create(&csv_path)?);
            write_curve_csv(&mut w, &report.result.curves)?;
            w.flush()?;
            print_written(&[path, &csv_path]);
            Ok(())
        }
        OutputFormat::Json => with_output(cli, |w| write_json(w, &report)),
        OutputFormat::Csv => with_output(cli, |w| write_curve_csv(w, &report.result.curves)),
        OutputFormat::Human => with_output(cli, |w| {
            Ok(write!(w, "{}", human_calibrate(&report.config, &report.result))?)
        }),
    }
}

fn print_written(paths: &[&Path]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}
