use std::path::Path;

use bfbin_core::prelude::*;
use plotters::prelude::*;

use crate::error::{CliError, Result};
use crate::report::{CalibrateConfig, CalibrateResult};

const WIDTH: u32 = 900;
const HEIGHT: u32 = 1200;
// Densities with shapes below one diverge at the edges.
const DENSITY_CAP: f64 = 4.0;

type Series<'a> = (&'a str, Vec<(f64, f64)>, RGBColor);

fn err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Plot(e.to_string())
}

fn density_points(prior: BetaPrior) -> Vec<(f64, f64)> {
    (1..400)
        .map(|i| {
            let p = i as f64 / 400.0;
            (p, prior.density(p).min(DENSITY_CAP))
        })
        .collect()
}

fn legend(color: RGBColor) -> impl Fn((i32, i32)) -> PathElement<(i32, i32)> {
    move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
}

/// Priors, power and type-I error curves, and the compelling-evidence
/// curve, stacked top to bottom.
pub fn render(path: &Path, cfg: &CalibrateConfig, res: &CalibrateResult) -> Result<()> {
    let root = SVGBackend::new(path, (WIDTH, HEIGHT)).into_drawing_area();
    root.fill(&WHITE).map_err(err)?;
    let panels = root.split_evenly((3, 1));
    let design = &cfg.eval.model.design;

    let mut priors = vec![
        ("H1 arm 1", design.alt.arm1, BLUE),
        ("H1 arm 2", design.alt.arm2, RED),
    ];
    match design.null_side {
        Some(ns) => {
            priors.push(("H- arm 1", ns.arm1, CYAN));
            priors.push(("H- arm 2", ns.arm2, MAGENTA));
        }
        None => priors.push(("H0 common p", design.null_prior, BLACK)),
    }
    let ymax = priors
        .iter()
        .flat_map(|(_, p, _)| density_points(*p))
        .fold(1.0f64, |m, (_, d)| m.max(d))
        * 1.05;
    let mut chart = ChartBuilder::on(&panels[0])
        .caption("Design priors", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(35)
        .y_label_area_size(45)
        .build_cartesian_2d(0f64..1f64, 0f64..ymax)
        .map_err(err)?;
    chart.configure_mesh().x_desc("p").y_desc("density").draw().map_err(err)?;
    for (name, prior, color) in priors {
        chart
            .draw_series(LineSeries::new(density_points(prior), color.stroke_width(2)))
            .map_err(err)?
            .label(format!("{name}: {prior}"))
            .legend(legend(color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(err)?;

    let x_range = (cfg.nmin as f64)..(cfg.nmax.max(cfg.nmin + 1) as f64);
    let curve = |f: &dyn Fn(&crate::report::CurveRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        res.curves
            .iter()
            .filter_map(|r| f(r).map(|v| (r.n_total as f64, v)))
            .collect()
    };
    let vline = |n: u32| vec![(n as f64, 0.0), (n as f64, 1.0)];
    let hline = |y: f64| vec![(x_range.start, y), (x_range.end, y)];

    let mut chart = ChartBuilder::on(&panels[1])
        .caption("Power and type-I error", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(35)
        .y_label_area_size(45)
        .build_cartesian_2d(x_range.clone(), 0f64..1f64)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc("total sample size n")
        .y_desc("probability")
        .draw()
        .map_err(err)?;
    let mut series: Vec<Series> = vec![
        ("Bayesian power", curve(&|r| Some(r.bayes_power)), BLUE),
        ("Bayesian type-I error", curve(&|r| Some(r.bayes_t1e)), RED),
    ];
    if cfg.eval.p1.is_some() {
        series.push(("frequentist power", curve(&|r| r.freq_power), CYAN));
    }
    if cfg.eval.freq_t1e {
        series.push(("frequentist type-I error", curve(&|r| r.freq_t1e), MAGENTA));
    }
    for (name, pts, color) in series {
        chart
            .draw_series(LineSeries::new(pts, color.stroke_width(2)))
            .map_err(err)?
            .label(name)
            .legend(legend(color));
    }
    for (y, color) in [(cfg.power, BLUE), (cfg.alpha, RED)] {
        chart
            .draw_series(LineSeries::new(hline(y), color.mix(0.5).stroke_width(1)))
            .map_err(err)?;
    }
    for (n, color) in [(res.n_power, BLUE), (res.n_alpha, RED), (res.n_freq_power, CYAN)] {
        if let Some(n) = n {
            chart
                .draw_series(LineSeries::new(vline(n), color.mix(0.5).stroke_width(1)))
                .map_err(err)?;
        }
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::MiddleRight)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(err)?;

    let mut chart = ChartBuilder::on(&panels[2])
        .caption("Probability of compelling evidence under the null", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(35)
        .y_label_area_size(45)
        .build_cartesian_2d(x_range.clone(), 0f64..1f64)
        .map_err(err)?;
    chart
        .configure_mesh()
        .x_desc("total sample size n")
        .y_desc("probability")
        .draw()
        .map_err(err)?;
    chart
        .draw_series(LineSeries::new(curve(&|r| Some(r.pce_null)), GREEN.stroke_width(2)))
        .map_err(err)?
        .label(format!("P(BF01 > {})", cfg.eval.kf))
        .legend(legend(GREEN));
    chart
        .draw_series(LineSeries::new(hline(cfg.pce), GREEN.mix(0.5).stroke_width(1)))
        .map_err(err)?;
    if let Some(n) = res.n_pce {
        chart
            .draw_series(LineSeries::new(vline(n), GREEN.mix(0.5).stroke_width(1)))
            .map_err(err)?;
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(err)?;

    root.present().map_err(err)?;
    Ok(())
}
