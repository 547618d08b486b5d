use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use impactreg_core::oracle::{
    confounding_example_joint, confounding_example_value, exact_linear_impact, Atom,
};
use impactreg_core::{
    constrained_sup_check, exact_mean_impact, population_params, DiscreteJoint, PopulationParams,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{emit, load_config, to_json, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Example {
    /// X uniform on {−1, 0, 1}, Y = X².
    StrictGap,
    /// Two-point version of the exponential confounding model.
    Confounding,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON file with `atoms` ([{"y": .., "x": [..]}]), `probs` and optional `covariate_names`.
    #[arg(long, conflicts_with = "example")]
    pub joint: Option<String>,
    #[arg(long, value_enum)]
    pub example: Option<Example>,
    /// Correlation for the confounding example.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub n_cap: Option<u64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    joint: Option<String>,
    example: Option<Example>,
    rho: Option<f64>,
    n_cap: Option<u64>,
    out: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    atoms: Vec<Atom>,
    probs: Vec<f64>,
    covariate_names: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct OracleConfig {
    pub joint: Option<String>,
    pub example: Option<Example>,
    pub rho: Option<f64>,
    pub n_cap: u64,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: OracleConfig,
    pub sd_y: f64,
    /// Linear and non-linear mean impact of each covariate on its own.
    pub marginal_linear_impact: BTreeMap<String, Option<f64>>,
    pub marginal_mean_impact: BTreeMap<String, f64>,
    pub params: Option<PopulationParams>,
    pub constrained_sup: f64,
    pub closed_form: Option<f64>,
    pub bounds_hold: bool,
}

fn load_joint(path: &str) -> CliResult<DiscreteJoint> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{path}: {e}")))?;
    let raw: JointFile =
        serde_json::from_str(&text).map_err(|e| CliError::data(format!("{path}: {e}")))?;
    let joint = DiscreteJoint::new(raw.atoms, raw.probs).map_err(|e| CliError::core(path, e))?;
    match raw.covariate_names {
        Some(names) => joint.with_names(names).map_err(|e| CliError::core(path, e)),
        None => Ok(joint),
    }
}

pub fn run(args: OracleArgs) -> CliResult<()> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let joint_path = args.joint.or(file.joint);
    let example = if joint_path.is_some() {
        None
    } else {
        args.example.or(file.example)
    };
    let rho = match example {
        Some(Example::Confounding) => Some(args.rho.or(file.rho).unwrap_or(0.9)),
        _ => None,
    };
    let config = OracleConfig {
        joint: joint_path,
        example,
        rho,
        n_cap: args.n_cap.or(file.n_cap).unwrap_or(1_000_000),
    };
    let out = args.out.or(file.out);

    let (joint, closed_form) = match (&config.joint, config.example) {
        (Some(path), _) => (load_joint(path)?, None),
        (None, Some(Example::StrictGap)) => {
            let support: Vec<(Vec<f64>, f64)> =
                [-1.0, 0.0, 1.0].iter().map(|&x| (vec![x], 1.0 / 3.0)).collect();
            (
                DiscreteJoint::deterministic(&support, |x| x[0] * x[0])?,
                Some((2.0f64 / 9.0).sqrt()),
            )
        }
        (None, Some(Example::Confounding)) => {
            let rho = config.rho.unwrap_or(0.9);
            (confounding_example_joint(rho)?, Some(confounding_example_value(rho)?))
        }
        (None, None) => return Err(CliError::data("pass --joint or --example")),
    };

    let ys: Vec<f64> = joint.atoms().iter().map(|a| a.y).collect();
    let ey: f64 = ys.iter().zip(joint.probs()).map(|(y, p)| y * p).sum();
    let sd_y = ys
        .iter()
        .zip(joint.probs())
        .map(|(y, p)| p * (y - ey).powi(2))
        .sum::<f64>()
        .sqrt();

    let mut marginal_linear_impact = BTreeMap::new();
    let mut marginal_mean_impact = BTreeMap::new();
    let mut bounds_hold = true;
    for (j, name) in joint.covariate_names().iter().enumerate() {
        let iota = exact_mean_impact(&joint, &[j])?;
        let lin = exact_linear_impact(&joint, j).ok();
        if let Some(l) = lin {
            bounds_hold &= l <= iota + 1e-12;
        }
        bounds_hold &= iota <= sd_y + 1e-12;
        marginal_linear_impact.insert(name.clone(), lin);
        marginal_mean_impact.insert(name.clone(), iota);
    }
    let params = population_params(&joint).ok();
    let (constrained_sup, iota_all) = constrained_sup_check(&joint, config.n_cap)?;
    bounds_hold &= constrained_sup <= iota_all + 1e-12 && iota_all <= sd_y + 1e-12;

    let report = OracleReport {
        schema_version: SCHEMA_VERSION,
        command: "oracle-check",
        config,
        sd_y,
        marginal_linear_impact,
        marginal_mean_impact,
        params,
        constrained_sup,
        closed_form,
        bounds_hold,
    };
    emit(out.as_deref(), &to_json(&report)?)
}
