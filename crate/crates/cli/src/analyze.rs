use std::path::PathBuf;

use clap::Args;
use impactreg_core::data_io::{apply_transforms, read_csv_path, ProvenanceEntry, TransformSpec};
use impactreg_core::{
    run_hierarchy, HierarchyOptions, HierarchyResult, ImpactEstimate, Inference, SandwichFlavor,
    TestReference,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::output::{emit, load_config, opt_f64, to_csv, to_json, Format, SCHEMA_VERSION};
use crate::parse::{parse_flavor, parse_reference};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON file with defaults for any of the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<String>,
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long)]
    pub focus: Option<String>,
    /// Adjustment covariates; in hierarchy mode, the candidates to order.
    #[arg(long, value_delimiter = ',')]
    pub adjust: Option<Vec<String>>,
    /// Run the hierarchical adjustment sequence.
    #[arg(long)]
    pub hierarchy: bool,
    #[arg(long, value_delimiter = ',', requires = "hierarchy")]
    pub prespecified_order: Option<Vec<String>>,
    /// Test the unadjusted association first.
    #[arg(long, requires = "hierarchy")]
    pub include_bivariate: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// JSON transform spec applied after loading.
    #[arg(long)]
    pub transforms: Option<String>,
    /// hc0 or hc1.
    #[arg(long)]
    pub flavor: Option<String>,
    /// t or normal.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data: Option<String>,
    response: Option<String>,
    focus: Option<String>,
    adjust: Option<Vec<String>>,
    hierarchy: Option<bool>,
    prespecified_order: Option<Vec<String>>,
    include_bivariate: Option<bool>,
    alpha: Option<f64>,
    transforms: Option<String>,
    flavor: Option<String>,
    reference: Option<String>,
    out: Option<String>,
    format: Option<Format>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeConfig {
    pub data: String,
    pub response: String,
    pub focus: String,
    pub adjust: Vec<String>,
    pub hierarchy: bool,
    pub prespecified_order: Option<Vec<String>>,
    pub include_bivariate: bool,
    pub alpha: f64,
    pub transforms: Option<String>,
    pub flavor: SandwichFlavor,
    pub reference: TestReference,
    pub format: Format,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: AnalyzeConfig,
    pub n_rows: usize,
    pub provenance: Vec<ProvenanceEntry>,
    pub estimates: Vec<ImpactEstimate>,
    pub hierarchy: Option<HierarchyResult>,
}

fn required(v: Option<String>, flag: &str) -> CliResult<String> {
    v.ok_or_else(|| CliError::data(format!("missing --{flag}")))
}

fn resolve(args: AnalyzeArgs) -> CliResult<(AnalyzeConfig, Option<String>)> {
    let file: FileConfig = load_config(args.config.as_deref())?;
    let flavor = match args.flavor.or(file.flavor) {
        Some(s) => parse_flavor(&s)?,
        None => SandwichFlavor::default(),
    };
    let reference = match args.reference.or(file.reference) {
        Some(s) => parse_reference(&s)?,
        None => TestReference::default(),
    };
    let alpha = args.alpha.or(file.alpha).unwrap_or(0.05);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CliError::data(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let config = AnalyzeConfig {
        data: required(args.data.or(file.data), "data")?,
        response: required(args.response.or(file.response), "response")?,
        focus: required(args.focus.or(file.focus), "focus")?,
        adjust: args.adjust.or(file.adjust).unwrap_or_default(),
        hierarchy: args.hierarchy || file.hierarchy.unwrap_or(false),
        prespecified_order: args.prespecified_order.or(file.prespecified_order),
        include_bivariate: args.include_bivariate || file.include_bivariate.unwrap_or(false),
        alpha,
        transforms: args.transforms.or(file.transforms),
        flavor,
        reference,
        format: args.format.or(file.format).unwrap_or_default(),
    };
    Ok((config, args.out.or(file.out)))
}

pub fn run(args: AnalyzeArgs) -> CliResult<()> {
    let (config, out) = resolve(args)?;
    let mut data =
        read_csv_path(&config.data, None).map_err(|e| CliError::core(&config.data, e))?;
    let mut provenance = Vec::new();
    if let Some(path) = &config.transforms {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{path}: {e}")))?;
        let spec = TransformSpec::from_json(&text).map_err(|e| CliError::core(path, e))?;
        let (next, log) = apply_transforms(&data, &spec).map_err(|e| CliError::core(path, e))?;
        data = next;
        provenance = log;
    }
    for name in [&config.response, &config.focus] {
        data.column(name)?;
    }

    let inference = Inference {
        flavor: config.flavor,
        reference: config.reference,
    };
    let y = data.column(&config.response)?;
    let x = data.column(&config.focus)?;
    let mut estimates = Vec::new();
    let mut hierarchy = None;

    let labelled = |mut e: ImpactEstimate| {
        e.target = config.response.clone();
        e.focus = config.focus.clone();
        e
    };

    if config.hierarchy {
        let candidates: Vec<String> = if config.adjust.is_empty() {
            data.names()
                .iter()
                .filter(|n| **n != config.response && **n != config.focus)
                .cloned()
                .collect()
        } else {
            config.adjust.clone()
        };
        let options = HierarchyOptions {
            alpha: config.alpha,
            include_bivariate: config.include_bivariate,
            inference,
        };
        let result = run_hierarchy(
            &config.response,
            &config.focus,
            &candidates,
            &data,
            &options,
            config.prespecified_order.as_deref(),
        )?;
        estimates.push(labelled(inference.linear_mean_impact(y, x)?));
        estimates.push(labelled(inference.linear_mean_slope(y, x, true)?));
        if result.confounders_adjusted > 0 {
            let adjusted = &result.ordering[..result.confounders_adjusted];
            estimates.push(inference.partial_linear_mean_impact(
                &config.response,
                &config.focus,
                adjusted,
                &data,
            )?);
        }
        hierarchy = Some(result);
    } else if config.adjust.is_empty() {
        estimates.push(labelled(inference.linear_mean_impact(y, x)?));
        estimates.push(labelled(inference.linear_mean_slope(y, x, true)?));
        estimates.push(labelled(inference.mod_r2(y, x)?));
    } else {
        let adj = &config.adjust;
        let (r, f) = (&config.response, &config.focus);
        estimates.push(inference.partial_linear_mean_impact(r, f, adj, &data)?);
        estimates.push(inference.partial_linear_mean_slope(r, f, adj, &data, true)?);
    }

    let report = AnalyzeReport {
        schema_version: SCHEMA_VERSION,
        command: "analyze",
        n_rows: data.n_rows(),
        config,
        provenance,
        estimates,
        hierarchy,
    };
    let bytes = match report.config.format {
        Format::Json => to_json(&report)?,
        Format::Csv => csv_rows(&report)?,
    };
    emit(out.as_deref(), &bytes)
}

const CSV_HEADER: [&str; 9] = [
    "record",
    "kind",
    "target",
    "focus",
    "adjusted_for",
    "value",
    "std_error",
    "statistic",
    "p_value",
];

fn csv_rows(report: &AnalyzeReport) -> CliResult<Vec<u8>> {
    let mut rows = Vec::new();
    for e in &report.estimates {
        let kind = serde_json::to_value(e.kind)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        rows.push(vec![
            "estimate".into(),
            kind,
            e.target.clone(),
            e.focus.clone(),
            e.adjusted_for.join(" "),
            e.value.to_string(),
            opt_f64(e.test.as_ref().map(|t| t.std_error)),
            opt_f64(e.test.as_ref().map(|t| t.statistic)),
            opt_f64(e.test.as_ref().map(|t| t.p_value)),
        ]);
    }
    if let Some(h) = &report.hierarchy {
        for (i, p) in h.step_pvalues.iter().enumerate() {
            rows.push(vec![
                "hierarchy_step".into(),
                if i < h.confounders_adjusted { "rejected" } else { "retained" }.into(),
                report.config.response.clone(),
                h.focus.clone(),
                h.ordering[..=i].join(" "),
                String::new(),
                String::new(),
                String::new(),
                opt_f64(*p),
            ]);
        }
    }
    to_csv(&CSV_HEADER, &rows)
}
