//! Fixed-sequence hierarchical testing of nested adjustment models and the
//! data-dependent covariate ordering that feeds it.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::impact::Inference;
use crate::regression::{coefficient_test, fit_ols_with, residualize_slices, Design};
use crate::stats;

/// Absolute correlations closer than this are ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateOrdering {
    pub order: Vec<String>,
    /// Position at which residualization collapsed; entries from here on are
    /// in column order rather than chosen by correlation.
    pub collapsed_at: Option<usize>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn non_degenerate<'a>(data: &'a Dataset, name: &str) -> Result<&'a [f64]> {
    let col = data.column(name)?;
    if !(stats::std_dev(col) >= 1e-12 * stats::mean(col).abs() + 1e-300) {
        return Err(Error::DegenerateCovariate(name.to_string()));
    }
    Ok(col)
}

/// Orders `candidates` so that each next covariate is the one least
/// correlated (in absolute value) with the residual of `focus` on the
/// covariates already chosen. Ties go to the smallest column position.
///
/// Only covariate columns are read; the response plays no part.
pub fn order_covariates<S: AsRef<str>>(
    focus: &str,
    candidates: &[S],
    data: &Dataset,
) -> Result<CovariateOrdering> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("no candidate covariates to order".into()));
    }
    let x1 = non_degenerate(data, focus)?;
    let sd_x1 = stats::std_dev(x1);
    let mut remaining = Vec::with_capacity(candidates.len());
    for c in candidates {
        let name = c.as_ref();
        if name == focus {
            return Err(Error::InvalidConfig(format!(
                "focus `{focus}` listed among its own candidates"
            )));
        }
        let col = non_degenerate(data, name)?;
        let pos = data.position(name).expect("column exists");
        remaining.push((pos, name.to_string(), col));
    }
    remaining.sort_by_key(|(pos, _, _)| *pos);
    remaining.dedup_by_key(|(pos, _, _)| *pos);

    let mut order: Vec<String> = Vec::with_capacity(remaining.len());
    let mut chosen: Vec<&[f64]> = Vec::with_capacity(remaining.len());
    let mut current = x1.to_vec();
    let mut collapsed_at = None;

    while !remaining.is_empty() {
        let mut best = 0;
        let mut best_corr = f64::INFINITY;
        for (i, (_, _, col)) in remaining.iter().enumerate() {
            let r = stats::correlation(&current, col).abs();
            if r < best_corr - TIE_TOLERANCE {
                best = i;
                best_corr = r;
            }
        }
        let (_, name, col) = remaining.remove(best);
        order.push(name);
        chosen.push(col);
        if remaining.is_empty() {
            break;
        }
        let names: Vec<&str> = order.iter().map(String::as_str).collect();
        match residualize_slices(x1, &chosen, &names) {
            Ok(res) if stats::std_dev(&res) > 1e-10 * sd_x1 => current = res,
            Ok(_) | Err(Error::RankDeficient { .. }) => {
                collapsed_at = Some(order.len());
                order.extend(remaining.drain(..).map(|(_, n, _)| n));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(CovariateOrdering {
        order,
        collapsed_at,
    })
}

/// Length of the longest prefix of `p_values` at or below `alpha`.
pub fn fixed_sequence_test(p_values: &[f64], alpha: f64) -> usize {
    p_values.iter().take_while(|&&p| p <= alpha).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchyOptions {
    pub alpha: f64,
    /// Test the unadjusted association before any adjustment step.
    pub include_bivariate: bool,
    pub inference: Inference,
}

impl Default for HierarchyOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            include_bivariate: false,
            inference: Inference::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyResult {
    pub focus: String,
    pub ordering: Vec<String>,
    pub ordering_collapsed_at: Option<usize>,
    /// p-value of the unadjusted step, when requested and evaluated.
    pub bivariate_p_value: Option<f64>,
    /// `step_pvalues[i]` tests the focus adjusted for `ordering[..=i]`;
    /// `None` marks steps never evaluated.
    pub step_pvalues: Vec<Option<f64>>,
    pub rejected_prefix: usize,
    pub confounders_adjusted: usize,
    pub alpha: f64,
    pub include_bivariate: bool,
}

impl HierarchyResult {
    /// Rejection of the step adjusting for every candidate.
    pub fn rejects_final(&self) -> bool {
        if self.ordering.is_empty() {
            self.rejected_prefix > 0
        } else {
            self.confounders_adjusted == self.ordering.len()
        }
    }
}

/// p-value of the robust test of the focus coefficient in `y ~ focus + adjust`.
pub fn focus_p_value(
    y: &[f64],
    focus: &[f64],
    adjust: &[&[f64]],
    inference: Inference,
) -> Result<f64> {
    let mut cols: Vec<&[f64]> = Vec::with_capacity(adjust.len() + 1);
    cols.push(focus);
    cols.extend_from_slice(adjust);
    let names: Vec<String> = (0..cols.len()).map(|i| format!("c{i}")).collect();
    let design = Design::with_intercept(&cols, &names)?;
    let fit = fit_ols_with(y, &design, inference.flavor)?;
    Ok(coefficient_test(&fit, 1, inference.reference)?.p_value)
}

/// Runs the hierarchical sequence for `focus`, ordering `candidates` by
/// [`order_covariates`] unless `prespecified` is given.
pub fn run_hierarchy<S: AsRef<str>>(
    y_col: &str,
    focus: &str,
    candidates: &[S],
    data: &Dataset,
    options: &HierarchyOptions,
    prespecified: Option<&[String]>,
) -> Result<HierarchyResult> {
    check_alpha(options.alpha)?;
    let y = data.column(y_col)?;
    let x1 = data.column(focus)?;

    let (ordering, collapsed_at) = match prespecified {
        Some(order) => {
            if !candidates.is_empty() {
                let mut a: Vec<&str> = candidates.iter().map(|s| s.as_ref()).collect();
                let mut b: Vec<&str> = order.iter().map(String::as_str).collect();
                a.sort_unstable();
                b.sort_unstable();
                if a != b {
                    return Err(Error::InvalidConfig(
                        "pre-specified ordering must list exactly the candidates".into(),
                    ));
                }
            }
            for name in order {
                data.column(name)?;
            }
            (order.to_vec(), None)
        }
        None if candidates.is_empty() => (Vec::new(), None),
        None => {
            let o = order_covariates(focus, candidates, data)?;
            (o.order, o.collapsed_at)
        }
    };
    if ordering.is_empty() && !options.include_bivariate {
        return Err(Error::InvalidConfig(
            "no hypotheses to test: give candidates or include the bivariate step".into(),
        ));
    }
    let cols = ordering
        .iter()
        .map(|c| data.column(c))
        .collect::<Result<Vec<_>>>()?;

    let mut rejected_prefix = 0;
    let mut stopped = false;
    let mut bivariate_p_value = None;
    if options.include_bivariate {
        let p = focus_p_value(y, x1, &[], options.inference)?;
        bivariate_p_value = Some(p);
        if p <= options.alpha {
            rejected_prefix += 1;
        } else {
            stopped = true;
        }
    }
    let mut step_pvalues = vec![None; ordering.len()];
    let mut rejected_steps = 0;
    for k in 0..ordering.len() {
        if stopped {
            break;
        }
        let p = focus_p_value(y, x1, &cols[..=k], options.inference)?;
        step_pvalues[k] = Some(p);
        if p <= options.alpha {
            rejected_prefix += 1;
            rejected_steps += 1;
        } else {
            stopped = true;
        }
    }
    Ok(HierarchyResult {
        focus: focus.to_string(),
        ordering,
        ordering_collapsed_at: collapsed_at,
        bivariate_p_value,
        step_pvalues,
        rejected_prefix,
        confounders_adjusted: rejected_steps,
        alpha: options.alpha,
        include_bivariate: options.include_bivariate,
    })
}
