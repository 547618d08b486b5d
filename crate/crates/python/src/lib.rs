//! Python bindings: `import impactreg`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use impactreg_core as core;
use impactreg_core::{Dataset, Inference, SandwichFlavor, TestReference};

fn to_py(err: core::Error) -> PyErr {
    if err.is_numerical() {
        PyArithmeticError::new_err(err.to_string())
    } else {
        PyValueError::new_err(err.to_string())
    }
}

fn dataset(columns: &Bound<'_, PyDict>) -> PyResult<Dataset> {
    let mut cols = Vec::with_capacity(columns.len());
    for (k, v) in columns.iter() {
        cols.push((k.extract::<String>()?, v.extract::<Vec<f64>>()?));
    }
    Dataset::from_columns(cols).map_err(to_py)
}

fn inference(flavor: &str, reference: &str) -> PyResult<Inference> {
    let flavor = match flavor.to_ascii_lowercase().as_str() {
        "hc0" => SandwichFlavor::HC0,
        "hc1" => SandwichFlavor::HC1,
        _ => return Err(PyValueError::new_err(format!("unknown flavor `{flavor}`"))),
    };
    let reference = match reference.to_ascii_lowercase().as_str() {
        "t" | "student_t" => TestReference::StudentT,
        "normal" | "z" => TestReference::Normal,
        _ => return Err(PyValueError::new_err(format!("unknown reference `{reference}`"))),
    };
    Ok(Inference { flavor, reference })
}

/// One impact estimate with its robust coefficient test.
#[pyclass(frozen, get_all, skip_from_py_object, module = "impactreg")]
#[derive(Clone)]
pub struct ImpactEstimate {
    pub kind: String,
    pub value: f64,
    pub target: String,
    pub focus: String,
    pub adjusted_for: Vec<String>,
    pub estimate: Option<f64>,
    pub std_error: Option<f64>,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
}

impl From<core::ImpactEstimate> for ImpactEstimate {
    fn from(e: core::ImpactEstimate) -> Self {
        let kind = match e.kind {
            core::ImpactKind::LinearImpact => "linear_impact",
            core::ImpactKind::LinearSlope => "linear_slope",
            core::ImpactKind::PartialLinearImpact => "partial_linear_impact",
            core::ImpactKind::PartialLinearSlope => "partial_linear_slope",
            core::ImpactKind::ModR2 => "mod_r2",
        };
        Self {
            kind: kind.into(),
            value: e.value,
            target: e.target,
            focus: e.focus,
            adjusted_for: e.adjusted_for,
            estimate: e.test.as_ref().map(|t| t.estimate),
            std_error: e.test.as_ref().map(|t| t.std_error),
            statistic: e.test.as_ref().map(|t| t.statistic),
            p_value: e.test.as_ref().map(|t| t.p_value),
        }
    }
}

#[pymethods]
impl ImpactEstimate {
    fn __repr__(&self) -> String {
        let p = self.p_value.map_or("None".to_string(), |v| v.to_string());
        format!("ImpactEstimate(kind='{}', value={}, p_value={p})", self.kind, self.value)
    }
}

#[pyfunction]
#[pyo3(signature = (y, x, flavor = "hc0", reference = "t"))]
fn linear_mean_impact(y: Vec<f64>, x: Vec<f64>, flavor: &str, reference: &str) -> PyResult<ImpactEstimate> {
    let inf = inference(flavor, reference)?;
    inf.linear_mean_impact(&y, &x).map(Into::into).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (y, x, signed = false, flavor = "hc0", reference = "t"))]
fn linear_mean_slope(
    y: Vec<f64>,
    x: Vec<f64>,
    signed: bool,
    flavor: &str,
    reference: &str,
) -> PyResult<ImpactEstimate> {
    let inf = inference(flavor, reference)?;
    inf.linear_mean_slope(&y, &x, signed).map(Into::into).map_err(to_py)
}

#[pyfunction]
fn mod_r2(y: Vec<f64>, x: Vec<f64>) -> PyResult<ImpactEstimate> {
    core::mod_r2(&y, &x).map(Into::into).map_err(to_py)
}

/// `data` maps column names to equal-length lists of floats.
#[pyfunction]
#[pyo3(signature = (data, response, focus, adjust, flavor = "hc0", reference = "t"))]
fn partial_linear_mean_impact(
    data: &Bound<'_, PyDict>,
    response: &str,
    focus: &str,
    adjust: Vec<String>,
    flavor: &str,
    reference: &str,
) -> PyResult<ImpactEstimate> {
    let d = dataset(data)?;
    inference(flavor, reference)?
        .partial_linear_mean_impact(response, focus, &adjust, &d)
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (data, response, focus, adjust, signed = false, flavor = "hc0", reference = "t"))]
fn partial_linear_mean_slope(
    data: &Bound<'_, PyDict>,
    response: &str,
    focus: &str,
    adjust: Vec<String>,
    signed: bool,
    flavor: &str,
    reference: &str,
) -> PyResult<ImpactEstimate> {
    let d = dataset(data)?;
    inference(flavor, reference)?
        .partial_linear_mean_slope(response, focus, &adjust, &d, signed)
        .map(Into::into)
        .map_err(to_py)
}

/// Least-squares fit with intercept and sandwich standard errors.
#[pyclass(frozen, get_all, module = "impactreg")]
pub struct OlsFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    pub dof: usize,
}

#[pyfunction]
#[pyo3(signature = (data, response, covariates, flavor = "hc0"))]
fn fit_ols(
    data: &Bound<'_, PyDict>,
    response: &str,
    covariates: Vec<String>,
    flavor: &str,
) -> PyResult<OlsFit> {
    let d = dataset(data)?;
    let inf = inference(flavor, "t")?;
    let design = core::Design::from_dataset(&d, &covariates).map_err(to_py)?;
    let y = d.column(response).map_err(to_py)?;
    let fit = core::fit_ols_with(y, &design, inf.flavor).map_err(to_py)?;
    let p = fit.n_params();
    Ok(OlsFit {
        std_errors: (0..p).map(|i| fit.sandwich_cov[(i, i)].max(0.0).sqrt()).collect(),
        names: fit.column_names,
        coefficients: fit.coefficients,
        residuals: fit.residuals,
        dof: fit.dof,
    })
}

#[pyclass(frozen, get_all, module = "impactreg")]
pub struct HierarchyResult {
    pub focus: String,
    pub ordering: Vec<String>,
    pub step_pvalues: Vec<Option<f64>>,
    pub bivariate_p_value: Option<f64>,
    pub rejected_prefix: usize,
    pub confounders_adjusted: usize,
    pub rejects_final: bool,
}

/// Data-driven ordering of `candidates` for `focus`.
#[pyfunction]
fn order_covariates(data: &Bound<'_, PyDict>, focus: &str, candidates: Vec<String>) -> PyResult<Vec<String>> {
    let d = dataset(data)?;
    core::order_covariates(focus, &candidates, &d)
        .map(|o| o.order)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (data, response, focus, candidates, alpha = 0.05, include_bivariate = false, prespecified = None))]
fn run_hierarchy(
    data: &Bound<'_, PyDict>,
    response: &str,
    focus: &str,
    candidates: Vec<String>,
    alpha: f64,
    include_bivariate: bool,
    prespecified: Option<Vec<String>>,
) -> PyResult<HierarchyResult> {
    let d = dataset(data)?;
    let options = core::HierarchyOptions {
        alpha,
        include_bivariate,
        inference: Inference::default(),
    };
    let r = core::run_hierarchy(response, focus, &candidates, &d, &options, prespecified.as_deref())
        .map_err(to_py)?;
    Ok(HierarchyResult {
        rejects_final: r.rejects_final(),
        focus: r.focus,
        ordering: r.ordering,
        step_pvalues: r.step_pvalues,
        bivariate_p_value: r.bivariate_p_value,
        rejected_prefix: r.rejected_prefix,
        confounders_adjusted: r.confounders_adjusted,
    })
}

#[pyclass(get_all, set_all, skip_from_py_object, module = "impactreg")]
#[derive(Clone)]
pub struct SimConfig {
    pub m: usize,
    pub k: usize,
    pub beta: f64,
    pub gamma: f64,
    pub theta1: f64,
    pub n: usize,
    pub replications: usize,
    pub alpha: f64,
    pub seed: u64,
    pub include_bivariate: bool,
}

impl From<core::SimConfig> for SimConfig {
    fn from(c: core::SimConfig) -> Self {
        Self {
            m: c.m,
            k: c.k,
            beta: c.beta,
            gamma: c.gamma,
            theta1: c.theta1,
            n: c.n,
            replications: c.replications,
            alpha: c.alpha,
            seed: c.seed,
            include_bivariate: c.include_bivariate,
        }
    }
}

impl SimConfig {
    fn to_core(&self) -> core::SimConfig {
        core::SimConfig {
            m: self.m,
            k: self.k,
            beta: self.beta,
            gamma: self.gamma,
            theta1: self.theta1,
            n: self.n,
            replications: self.replications,
            alpha: self.alpha,
            seed: self.seed,
            include_bivariate: self.include_bivariate,
            flavor: SandwichFlavor::HC0,
            reference: TestReference::StudentT,
        }
    }
}

#[pymethods]
impl SimConfig {
    /// Null setting (θ1 = 0) with the preset β for `m`.
    #[staticmethod]
    #[pyo3(signature = (m = 5, k = 4, n = 500, gamma = 0.0))]
    fn table1(m: usize, k: usize, n: usize, gamma: f64) -> Self {
        core::SimConfig::table1(m, k, n, gamma).into()
    }

    #[staticmethod]
    #[pyo3(signature = (m = 5, k = 4, n = 500, gamma = 0.0))]
    fn table2(m: usize, k: usize, n: usize, gamma: f64) -> Self {
        core::SimConfig::table2(m, k, n, gamma).into()
    }

    fn validate(&self) -> PyResult<()> {
        self.to_core().validate().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "SimConfig(m={}, k={}, n={}, theta1={}, gamma={}, replications={}, seed={})",
            self.m, self.k, self.n, self.theta1, self.gamma, self.replications, self.seed
        )
    }
}

#[pyclass(frozen, get_all, module = "impactreg")]
pub struct SimReport {
    pub type1_hierarchical: Option<f64>,
    pub any_rejection_hier: f64,
    pub type1_full: f64,
    pub mean_confounders_hier: f64,
    pub mean_confounders_full: f64,
    pub reject_final_hier: f64,
    pub reject_final_full: f64,
    pub replications_ok: usize,
    pub replications_failed: usize,
    pub elapsed_seconds: f64,
    json: String,
}

#[pymethods]
impl SimReport {
    /// Full report, including configuration and Monte Carlo standard errors.
    fn to_json(&self) -> String {
        self.json.clone()
    }
}

#[pyfunction]
#[pyo3(signature = (config, threads = None))]
fn run_study(py: Python<'_>, config: &SimConfig, threads: Option<usize>) -> PyResult<SimReport> {
    let cfg = config.to_core();
    let r = py.detach(|| core::run_study(&cfg, threads)).map_err(to_py)?;
    let json = serde_json::to_string(&r).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(SimReport {
        type1_hierarchical: r.type1_hierarchical,
        any_rejection_hier: r.any_rejection_hier,
        type1_full: r.type1_full,
        mean_confounders_hier: r.mean_confounders_hier,
        mean_confounders_full: r.mean_confounders_full,
        reject_final_hier: r.reject_final_hier,
        reject_final_full: r.reject_final_full,
        replications_ok: r.replications_ok,
        replications_failed: r.replications_failed,
        elapsed_seconds: r.elapsed.as_secs_f64(),
        json,
    })
}

/// Finite joint law of `(y, x)`; exact population quantities.
#[pyclass(frozen, module = "impactreg")]
pub struct DiscreteJoint {
    inner: core::DiscreteJoint,
}

#[pymethods]
impl DiscreteJoint {
    /// `atoms` is a list of `(y, [x1, ...], probability)` triples.
    #[new]
    fn new(atoms: Vec<(f64, Vec<f64>, f64)>) -> PyResult<Self> {
        core::DiscreteJoint::from_triples(atoms)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn confounding_example(rho: f64) -> PyResult<Self> {
        core::oracle::confounding_example_joint(rho)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn n_covariates(&self) -> usize {
        self.inner.n_covariates()
    }

    /// `SD[E(Y | X_S)]`; all covariates when `subset` is omitted.
    #[pyo3(signature = (subset = None))]
    fn mean_impact(&self, subset: Option<Vec<usize>>) -> PyResult<f64> {
        let s = subset.unwrap_or_else(|| (0..self.inner.n_covariates()).collect());
        core::exact_mean_impact(&self.inner, &s).map_err(to_py)
    }

    fn linear_impact(&self, covariate: usize) -> PyResult<f64> {
        core::exact_linear_impact(&self.inner, covariate).map_err(to_py)
    }

    fn partial_linear_impact(&self, covariate: usize) -> PyResult<f64> {
        core::exact_partial_linear_impact(&self.inner, covariate).map_err(to_py)
    }

    fn partial_impact(&self, covariate: usize) -> PyResult<f64> {
        core::oracle::exact_partial_impact(&self.inner, covariate).map_err(to_py)
    }

    fn theta(&self) -> PyResult<Vec<f64>> {
        core::oracle::population_theta(&self.inner).map_err(to_py)
    }

    /// `(sup over constrained disturbances, ι)`.
    #[pyo3(signature = (n_cap = 1_000_000))]
    fn constrained_sup_check(&self, n_cap: u64) -> PyResult<(f64, f64)> {
        core::constrained_sup_check(&self.inner, n_cap).map_err(to_py)
    }
}

/// `2ρ√(1−ρ²)(ρ−√(1−ρ²))`.
#[pyfunction]
fn confounding_example_value(rho: f64) -> PyResult<f64> {
    core::oracle::confounding_example_value(rho).map_err(to_py)
}

/// Population slope `ϑ1 + ϑ2(2E X + E(X−EX)³/Var X)`.
#[pyfunction]
fn quadratic_slope_closed_form(theta1: f64, theta2: f64, mean: f64, variance: f64, central3: f64) -> f64 {
    core::quadratic_slope_closed_form(
        theta1,
        theta2,
        &core::oracle::Moments {
            mean,
            variance,
            central3,
        },
    )
}

#[pymodule]
fn impactreg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ImpactEstimate>()?;
    m.add_class::<OlsFit>()?;
    m.add_class::<HierarchyResult>()?;
    m.add_class::<SimConfig>()?;
    m.add_class::<SimReport>()?;
    m.add_class::<DiscreteJoint>()?;
    m.add_function(wrap_pyfunction!(linear_mean_impact, m)?)?;
    m.add_function(wrap_pyfunction!(linear_mean_slope, m)?)?;
    m.add_function(wrap_pyfunction!(mod_r2, m)?)?;
    m.add_function(wrap_pyfunction!(partial_linear_mean_impact, m)?)?;
    m.add_function(wrap_pyfunction!(partial_linear_mean_slope, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ols, m)?)?;
    m.add_function(wrap_pyfunction!(order_covariates, m)?)?;
    m.add_function(wrap_pyfunction!(run_hierarchy, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    m.add_function(wrap_pyfunction!(confounding_example_value, m)?)?;
    m.add_function(wrap_pyfunction!(quadratic_slope_closed_form, m)?)?;
    Ok(())
}
