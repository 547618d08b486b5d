use std::path::PathBuf;

use clap::{Args, ValueEnum};
use impactreg_core::simulation::preset_beta;
use impactreg_core::{run_study, SimConfig, SimReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{emit, load_config, opt_f64, to_csv, to_json, Format, SCHEMA_VERSION};
use crate::parse::{parse_flavor, parse_reference};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Null setting, θ1 = 0.
    Table1,
    /// Alternative, θ1 = 0.4 (0.5 with interactions).
    Table2,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Number of covariates.
    #[arg(long)]
    pub m: Option<usize>,
    /// Number of confounders of x1; defaults to m − 1.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub theta1: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub include_bivariate: bool,
    #[arg(long)]
    pub flavor: Option<String>,
    #[arg(long)]
    pub reference: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "IMPACTREG_THREADS")]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<Preset>,
    m: Option<usize>,
    k: Option<usize>,
    n: Option<usize>,
    beta: Option<f64>,
    gamma: Option<f64>,
    theta1: Option<f64>,
    alpha: Option<f64>,
    reps: Option<usize>,
    seed: Option<u64>,
    include_bivariate: Option<bool>,
    flavor: Option<String>,
    reference: Option<String>,
    threads: Option<usize>,
    out: Option<String>,
    format: Option<Format>,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub preset: Option<Preset>,
    #[serde(flatten)]
    pub report: SimReport,
}

struct Resolved {
    preset: Option<Preset>,
    config: SimConfig,
    threads: Option<usize>,
    out: Option<String>,
    format: Format,
}

fn resolve(args: SimulateArgs) -> CliResult<Resolved> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let preset = args.preset.or(file.preset);
    let m = args.m.or(file.m).unwrap_or(5);
    if m < 2 {
        return Err(CliError::data(format!("m must be at least 2, got {m}")));
    }
    let k = args.k.or(file.k).unwrap_or(m - 1);
    let n = args.n.or(file.n).unwrap_or(500);
    let gamma = args.gamma.or(file.gamma).unwrap_or(0.0);
    let mut config = match preset {
        Some(Preset::Table2) => SimConfig::table2(m, k, n, gamma),
        _ => SimConfig::table1(m, k, n, gamma),
    };
    config.beta = match args.beta.or(file.beta).or_else(|| preset_beta(m)) {
        Some(b) => b,
        None => {
            return Err(CliError::data(format!(
                "no preset beta for m = {m}; pass --beta"
            )))
        }
    };
    if let Some(t) = args.theta1.or(file.theta1) {
        config.theta1 = t;
    }
    if let Some(a) = args.alpha.or(file.alpha) {
        config.alpha = a;
    }
    if let Some(r) = args.reps.or(file.reps) {
        config.replications = r;
    }
    if let Some(s) = args.seed.or(file.seed) {
        config.seed = s;
    }
    config.include_bivariate = args.include_bivariate || file.include_bivariate.unwrap_or(false);
    if let Some(f) = args.flavor.or(file.flavor) {
        config.flavor = parse_flavor(&f)?;
    }
    if let Some(r) = args.reference.or(file.reference) {
        config.reference = parse_reference(&r)?;
    }
    config.validate()?;
    Ok(Resolved {
        preset,
        config,
        threads: args.threads.or(file.threads),
        out: args.out.or(file.out),
        format: args.format.or(file.format).unwrap_or_default(),
    })
}

pub fn run(args: SimulateArgs) -> CliResult<()> {
    let r = resolve(args)?;
    if r.threads == Some(0) {
        return Err(CliError::data("threads must be at least 1"));
    }
    let report = run_study(&r.config, r.threads)?;
    let wrapped = SimulateReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        preset: r.preset,
        report,
    };
    let bytes = match r.format {
        Format::Json => to_json(&wrapped)?,
        Format::Csv => csv_row(&wrapped)?,
    };
    emit(r.out.as_deref(), &bytes)
}

pub const CSV_HEADER: [&str; 31] = [
    "preset",
    "m",
    "k",
    "beta",
    "gamma",
    "theta1",
    "n",
    "replications",
    "alpha",
    "seed",
    "include_bivariate",
    "flavor",
    "reference",
    "r2_x",
    "replications_ok",
    "replications_failed",
    "type1_hierarchical",
    "any_rejection_hier",
    "type1_full",
    "mean_confounders_hier",
    "mean_confounders_full",
    "reject_final_hier",
    "reject_final_full",
    "se_type1_hierarchical",
    "se_any_rejection_hier",
    "se_type1_full",
    "se_mean_confounders_hier",
    "se_mean_confounders_full",
    "se_reject_final_hier",
    "se_reject_final_full",
    "schema_version",
];

fn csv_row(w: &SimulateReport) -> CliResult<Vec<u8>> {
    let (r, c, se) = (&w.report, &w.report.config, &w.report.mc_stderr);
    let preset = match w.preset {
        Some(Preset::Table1) => "table1",
        Some(Preset::Table2) => "table2",
        None => "",
    };
    let enum_str = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
    let row = vec![
        preset.to_string(),
        c.m.to_string(),
        c.k.to_string(),
        c.beta.to_string(),
        c.gamma.to_string(),
        c.theta1.to_string(),
        c.n.to_string(),
        c.replications.to_string(),
        c.alpha.to_string(),
        c.seed.to_string(),
        c.include_bivariate.to_string(),
        enum_str(serde_json::to_value(c.flavor).unwrap_or_default()),
        enum_str(serde_json::to_value(c.reference).unwrap_or_default()),
        r.r2_x.to_string(),
        r.replications_ok.to_string(),
        r.replications_failed.to_string(),
        opt_f64(r.type1_hierarchical),
        r.any_rejection_hier.to_string(),
        r.type1_full.to_string(),
        r.mean_confounders_hier.to_string(),
        r.mean_confounders_full.to_string(),
        r.reject_final_hier.to_string(),
        r.reject_final_full.to_string(),
        opt_f64(se.type1_hierarchical),
        se.any_rejection_hier.to_string(),
        se.type1_full.to_string(),
        se.mean_confounders_hier.to_string(),
        se.mean_confounders_full.to_string(),
        se.reject_final_hier.to_string(),
        se.reject_final_full.to_string(),
        SCHEMA_VERSION.to_string(),
    ];
    to_csv(&CSV_HEADER, &[row])
}
