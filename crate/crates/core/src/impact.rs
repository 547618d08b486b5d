//! Sample estimators of linear mean impacts, mean slopes and the measure of
//! determination.
//!
//! All moments use 1/n normalization. Inference for an impact reuses the
//! robust test of the corresponding regression coefficient; no separate
//! standard error is produced for the impact itself.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::regression::{
    coefficient_test, fit_ols_with, residualize, CoefficientTest, Design, SandwichFlavor,
    TestReference,
};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactKind {
    LinearImpact,
    LinearSlope,
    PartialLinearImpact,
    PartialLinearSlope,
    ModR2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactEstimate {
    pub kind: ImpactKind,
    pub value: f64,
    pub target: String,
    pub focus: String,
    pub adjusted_for: Vec<String>,
    /// Robust test of the focus coefficient; absent for `mod_r2` and for
    /// exact fits where the sandwich standard error vanishes.
    pub test: Option<CoefficientTest>,
}

/// Inference settings shared by the estimators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inference {
    pub flavor: SandwichFlavor,
    pub reference: TestReference,
}

fn check_spread(name: &str, x: &[f64]) -> Result<f64> {
    let sd = stats::std_dev(x);
    if !(sd >= 1e-12 * stats::mean(x).abs() + 1e-300) {
        return Err(Error::DegenerateCovariate(name.to_string()));
    }
    Ok(sd)
}

fn check_pair(y: &[f64], x: &[f64]) -> Result<()> {
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "response vs covariate".into(),
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidDataset("need at least 2 observations".into()));
    }
    if y.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "estimator input".into(),
        });
    }
    Ok(())
}

/// Runs the robust test; a vanishing standard error means no test, not failure.
fn optional_test(
    y: &[f64],
    design: &Design,
    index: usize,
    inference: Inference,
) -> Result<(f64, Option<CoefficientTest>)> {
    let fit = fit_ols_with(y, design, inference.flavor)?;
    let coef = fit.coefficients[index];
    match coefficient_test(&fit, index, inference.reference) {
        Ok(t) => Ok((coef, Some(t))),
        Err(Error::ZeroStdError { .. }) => Ok((coef, None)),
        Err(e) => Err(e),
    }
}

impl Inference {
    pub fn linear_mean_impact(&self, y: &[f64], x: &[f64]) -> Result<ImpactEstimate> {
        check_pair(y, x)?;
        let sd = check_spread("x", x)?;
        let value = stats::covariance(y, x).abs() / sd;
        let design = Design::with_intercept(&[x], &["x"])?;
        let (_, test) = optional_test(y, &design, 1, *self)?;
        Ok(ImpactEstimate {
            kind: ImpactKind::LinearImpact,
            value,
            target: "y".into(),
            focus: "x".into(),
            adjusted_for: vec![],
            test,
        })
    }

    pub fn linear_mean_slope(&self, y: &[f64], x: &[f64], signed: bool) -> Result<ImpactEstimate> {
        check_pair(y, x)?;
        let sd = check_spread("x", x)?;
        let slope = stats::covariance(y, x) / (sd * sd);
        let design = Design::with_intercept(&[x], &["x"])?;
        let (_, test) = optional_test(y, &design, 1, *self)?;
        Ok(ImpactEstimate {
            kind: ImpactKind::LinearSlope,
            value: if signed { slope } else { slope.abs() },
            target: "y".into(),
            focus: "x".into(),
            adjusted_for: vec![],
            test,
        })
    }

    /// Partial linear mean impact of `focus` on `y_col` adjusting for `adjust`.
    ///
    /// Computed as the linear mean impact of the residualized focus; the
    /// attached test is the robust test of the focus coefficient in the
    /// multiple regression, whose absolute value times the residual SD
    /// reproduces the same number.
    pub fn partial_linear_mean_impact<S: AsRef<str>>(
        &self,
        y_col: &str,
        focus: &str,
        adjust: &[S],
        data: &Dataset,
    ) -> Result<ImpactEstimate> {
        let partial = self.partial(y_col, focus, adjust, data)?;
        Ok(ImpactEstimate {
            kind: ImpactKind::PartialLinearImpact,
            value: partial.impact,
            target: y_col.into(),
            focus: focus.into(),
            adjusted_for: adjust.iter().map(|s| s.as_ref().to_string()).collect(),
            test: partial.test,
        })
    }

    pub fn partial_linear_mean_slope<S: AsRef<str>>(
        &self,
        y_col: &str,
        focus: &str,
        adjust: &[S],
        data: &Dataset,
        signed: bool,
    ) -> Result<ImpactEstimate> {
        let partial = self.partial(y_col, focus, adjust, data)?;
        Ok(ImpactEstimate {
            kind: ImpactKind::PartialLinearSlope,
            value: if signed {
                partial.coefficient
            } else {
                partial.coefficient.abs()
            },
            target: y_col.into(),
            focus: focus.into(),
            adjusted_for: adjust.iter().map(|s| s.as_ref().to_string()).collect(),
            test: partial.test,
        })
    }

    fn partial<S: AsRef<str>>(
        &self,
        y_col: &str,
        focus: &str,
        adjust: &[S],
        data: &Dataset,
    ) -> Result<Partial> {
        let y = data.column(y_col)?;
        let x = data.column(focus)?;
        check_spread(focus, x)?;
        let resid = residualize(focus, adjust, data)?;
        let resid_sd = stats::std_dev(&resid);
        if !(resid_sd > 1e-10 * stats::std_dev(x)) {
            return Err(Error::DegenerateCovariate(focus.to_string()));
        }
        let impact = stats::covariance(y, &resid).abs() / resid_sd;

        let mut columns = Vec::with_capacity(adjust.len() + 1);
        columns.push(focus);
        columns.extend(adjust.iter().map(|s| s.as_ref()));
        let design = Design::from_dataset(data, &columns)?;
        let (coefficient, test) = optional_test(y, &design, 1, *self)?;
        debug_assert!(
            (coefficient.abs() * resid_sd - impact).abs() <= 1e-6 * (impact.abs() + 1.0),
            "coefficient and residualization routes disagree"
        );
        Ok(Partial {
            impact,
            coefficient,
            test,
        })
    }

    pub fn mod_r2(&self, y: &[f64], x: &[f64]) -> Result<ImpactEstimate> {
        check_pair(y, x)?;
        check_spread("x", x)?;
        check_spread("y", y)?;
        let r = stats::correlation(y, x);
        Ok(ImpactEstimate {
            kind: ImpactKind::ModR2,
            value: (r * r).clamp(0.0, 1.0),
            target: "y".into(),
            focus: "x".into(),
            adjusted_for: vec![],
            test: None,
        })
    }
}

struct Partial {
    impact: f64,
    coefficient: f64,
    test: Option<CoefficientTest>,
}

/// `|Cov(y,x)| / SD(x)` with the bivariate robust slope test.
pub fn linear_mean_impact(y: &[f64], x: &[f64]) -> Result<ImpactEstimate> {
    Inference::default().linear_mean_impact(y, x)
}

pub fn linear_mean_slope(y: &[f64], x: &[f64], signed: bool) -> Result<ImpactEstimate> {
    Inference::default().linear_mean_slope(y, x, signed)
}

pub fn partial_linear_mean_impact<S: AsRef<str>>(
    y_col: &str,
    focus: &str,
    adjust: &[S],
    data: &Dataset,
) -> Result<ImpactEstimate> {
    Inference::default().partial_linear_mean_impact(y_col, focus, adjust, data)
}

pub fn partial_linear_mean_slope<S: AsRef<str>>(
    y_col: &str,
    focus: &str,
    adjust: &[S],
    data: &Dataset,
    signed: bool,
) -> Result<ImpactEstimate> {
    Inference::default().partial_linear_mean_slope(y_col, focus, adjust, data, signed)
}

/// Squared empirical correlation, the conservative estimate of the
/// measure of determination.
pub fn mod_r2(y: &[f64], x: &[f64]) -> Result<ImpactEstimate> {
    Inference::default().mod_r2(y, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bivariate_examples() {
        let x = [0.0, 1.0, 2.0];
        assert_abs_diff_eq!(
            linear_mean_impact(&[0.0, 1.0, 0.0], &x).unwrap().value,
            0.0,
            epsilon = 1e-15
        );
        let line = linear_mean_impact(&[0.0, 1.0, 2.0], &x).unwrap();
        assert_abs_diff_eq!(line.value, (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert!(line.test.is_none());
        assert_abs_diff_eq!(
            linear_mean_impact(&[4.0, 4.0, 4.0], &x).unwrap().value,
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            linear_mean_slope(&[0.0, 1.0, 2.0], &x, false).unwrap().value,
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            linear_mean_slope(&[0.0, 2.0, 4.0], &x, true).unwrap().value,
            2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            linear_mean_slope(&[4.0, 2.0, 0.0], &x, true).unwrap().value,
            -2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn tent_has_zero_test_statistic() {
        let est = linear_mean_impact(&[0.0, 1.0, 0.0], &[0.0, 1.0, 2.0]).unwrap();
        let t = est.test.unwrap();
        assert_abs_diff_eq!(t.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_value, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn mod_r2_examples() {
        let x = [0.0, 1.0, 2.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0).collect();
        assert_abs_diff_eq!(mod_r2(&y, &x).unwrap().value, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            mod_r2(&[0.0, 1.0, 0.0], &[0.0, 1.0, 2.0]).unwrap().value,
            0.0,
            epsilon = 1e-15
        );
        assert!(mod_r2(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn degenerate_covariate() {
        assert_eq!(
            linear_mean_impact(&[1.0, 2.0, 3.0], &[7.0, 7.0, 7.0]).unwrap_err(),
            Error::DegenerateCovariate("x".into())
        );
    }

    #[test]
    fn partial_with_no_adjustment_equals_bivariate() {
        let data = Dataset::from_columns(vec![
            ("y", vec![1.0, 3.0, 2.0, 5.0, 4.0]),
            ("x1", vec![0.5, 1.0, 2.5, 3.0, 4.5]),
        ])
        .unwrap();
        let p = partial_linear_mean_impact::<&str>("y", "x1", &[], &data).unwrap();
        let b = linear_mean_impact(data.column("y").unwrap(), data.column("x1").unwrap()).unwrap();
        assert_abs_diff_eq!(p.value, b.value, epsilon = 1e-14);
        assert_abs_diff_eq!(
            p.test.unwrap().p_value,
            b.test.unwrap().p_value,
            epsilon = 1e-12
        );
        let slope =
            partial_linear_mean_slope::<&str>("x1", "x1", &[], &data, false).unwrap();
        assert_abs_diff_eq!(slope.value, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn partial_fails_when_focus_is_determined() {
        let data = Dataset::from_columns(vec![
            ("y", vec![1.0, 3.0, 2.0, 5.0]),
            ("x1", vec![1.0, 2.0, 3.0, 4.0]),
            ("x2", vec![2.0, 4.0, 6.0, 8.0]),
        ])
        .unwrap();
        let err = partial_linear_mean_impact("y", "x1", &["x2"], &data).unwrap_err();
        assert!(err.is_numerical(), "{err:?}");
    }
}
