use std::path::PathBuf;

use clap::Args;
use impactreg_core::oracle::{linear_approximation, CovariateLaw, Quadratic};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{emit, load_config, to_csv, to_json, Format, SCHEMA_VERSION};
use crate::parse::{parse_dist, parse_g, parse_grid};

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// normal(mu,sigma) or exp(rate).
    #[arg(long, allow_hyphen_values = true)]
    pub dist: Option<String>,
    /// quadratic:c0,c1,c2
    #[arg(long, allow_hyphen_values = true)]
    pub g: Option<String>,
    /// lo:hi:steps
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// csv (plot data only) or json (data plus configuration).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    dist: Option<String>,
    g: Option<String>,
    grid: Option<String>,
    out: Option<String>,
    format: Option<Format>,
}

#[derive(Debug, Serialize)]
pub struct FigureConfig {
    pub dist: CovariateLaw,
    pub g: Quadratic,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Debug, Serialize)]
pub struct Point {
    pub x: f64,
    pub g: f64,
    pub linear: f64,
    pub density: f64,
}

#[derive(Debug, Serialize)]
pub struct FigureReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: FigureConfig,
    pub theta0: f64,
    pub theta1: f64,
    pub points: Vec<Point>,
}

fn default_grid(law: &CovariateLaw) -> (f64, f64, usize) {
    match *law {
        CovariateLaw::Normal { mean, sd } => (mean - 3.0 * sd, mean + 3.0 * sd, 121),
        CovariateLaw::Exponential { rate } => (0.0, 5.0 / rate, 121),
    }
}

pub fn run(args: FigureArgs) -> CliResult<()> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let dist = parse_dist(
        &args
            .dist
            .or(file.dist)
            .ok_or_else(|| CliError::data("missing --dist"))?,
    )?;
    let g = parse_g(&args.g.or(file.g).unwrap_or_else(|| "quadratic:1,1,1".into()))?;
    let (lo, hi, steps) = match args.grid.or(file.grid) {
        Some(s) => parse_grid(&s)?,
        None => default_grid(&dist),
    };
    let out = args.out.or(file.out);
    let format = args.format.or(file.format).unwrap_or(Format::Csv);

    let (theta0, theta1) = linear_approximation(&g, &dist);
    let points: Vec<Point> = (0..steps)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (steps - 1) as f64;
            Point {
                x,
                g: g.eval(x),
                linear: theta0 + theta1 * x,
                density: dist.density(x),
            }
        })
        .collect();
    let report = FigureReport {
        schema_version: SCHEMA_VERSION,
        command: "figure",
        config: FigureConfig { dist, g, lo, hi, steps },
        theta0,
        theta1,
        points,
    };
    let bytes = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .points
                .iter()
                .map(|p| {
                    [p.x, p.g, p.linear, p.density]
                        .iter()
                        .map(f64::to_string)
                        .collect()
                })
                .collect();
            to_csv(&["x", "g", "linear", "density"], &rows)?
        }
    };
    emit(out.as_deref(), &bytes)
}
