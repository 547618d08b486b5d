//! Mean-impact analysis: linear and partial linear mean impacts with robust
//! inference, an exact population oracle on finite distributions, a
//! hierarchical confounder-adjustment test and a seeded simulation harness.

pub mod data_io;
pub mod dataset;
pub mod error;
pub mod hierarchy;
pub mod impact;
pub mod oracle;
pub mod regression;
pub mod simulation;
pub mod stats;

pub use data_io::{apply_transforms, read_csv, read_csv_path, write_csv, TransformSpec, TransformStep};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use hierarchy::{
    fixed_sequence_test, order_covariates, run_hierarchy, CovariateOrdering, HierarchyOptions,
    HierarchyResult,
};
pub use impact::{
    linear_mean_impact, linear_mean_slope, mod_r2, partial_linear_mean_impact,
    partial_linear_mean_slope, ImpactEstimate, ImpactKind, Inference,
};
pub use oracle::{
    constrained_sup_check, exact_linear_impact, exact_mean_impact, exact_partial_linear_impact,
    population_params, quadratic_slope_closed_form, DiscreteJoint, PopulationParams,
};
pub use regression::{
    coefficient_test, fit_ols, fit_ols_with, residualize, sandwich_covariance, CoefficientTest,
    Design, FitResult, SandwichFlavor, TestReference,
};
pub use simulation::{run_study, slope_identity_check, SimConfig, SimReport, SlopeCheck, SlopeModel};
