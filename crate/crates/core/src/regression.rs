//! Least-squares fitting with classical and Huber-White sandwich covariance.
//!
//! Fits are computed with a column-pivoted Householder QR factorization; the
//! normal equations are never formed. A pivot `R[j,j]` counts as zero when
//! `|R[j,j]| < 1e-10 * |R[0,0]|`, in which case the fit fails with
//! [`Error::RankDeficient`] naming the offending regressor.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const INTERCEPT: &str = "(intercept)";

/// Relative pivot tolerance for rank detection.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Standard errors below this are treated as a degenerate fit.
pub const MIN_STD_ERROR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SandwichFlavor {
    /// White's estimator without small-sample correction.
    #[default]
    HC0,
    /// HC0 scaled by n/(n-p).
    HC1,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestReference {
    #[default]
    StudentT,
    Normal,
}

/// Design matrix whose column 0 is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    matrix: DMatrix<f64>,
    names: Vec<String>,
}

impl Design {
    /// Builds `[1, columns...]`; `names` labels the non-intercept columns.
    pub fn with_intercept<S: AsRef<str>>(columns: &[&[f64]], names: &[S]) -> Result<Self> {
        if columns.len() != names.len() {
            return Err(Error::DimensionMismatch {
                context: "design column names".into(),
                expected: columns.len(),
                found: names.len(),
            });
        }
        let n = match columns.first() {
            Some(c) => c.len(),
            None => {
                return Err(Error::InvalidDataset(
                    "intercept-only design needs an explicit row count".into(),
                ))
            }
        };
        Self::with_intercept_rows(n, columns, names)
    }

    /// Like [`Design::with_intercept`] but accepts an empty column list.
    pub fn with_intercept_rows<S: AsRef<str>>(
        n: usize,
        columns: &[&[f64]],
        names: &[S],
    ) -> Result<Self> {
        let p = columns.len() + 1;
        let mut matrix = DMatrix::from_element(n, p, 1.0);
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    context: format!("regressor `{}`", names[j].as_ref()),
                    expected: n,
                    found: col.len(),
                });
            }
            matrix.column_mut(j + 1).copy_from_slice(col);
        }
        let mut all = Vec::with_capacity(p);
        all.push(INTERCEPT.to_string());
        all.extend(names.iter().map(|s| s.as_ref().to_string()));
        Self::from_matrix(matrix, all)
    }

    /// Wraps an existing matrix; column 0 must be all ones.
    pub fn from_matrix(matrix: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if names.len() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                context: "design column names".into(),
                expected: matrix.ncols(),
                found: names.len(),
            });
        }
        if matrix.ncols() == 0 || matrix.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidDataset(
                "column 0 of the design must be the intercept".into(),
            ));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "design matrix".into(),
            });
        }
        Ok(Self { matrix, names })
    }

    /// Intercept plus the named dataset columns, in the given order.
    pub fn from_dataset<S: AsRef<str>>(data: &Dataset, columns: &[S]) -> Result<Self> {
        let cols = columns
            .iter()
            .map(|c| data.column(c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::with_intercept_rows(data.n_rows(), &cols, columns)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Householder QR with column pivoting, stored LAPACK-style.
struct PivotedQr {
    qr: DMatrix<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    fn factor(a: &DMatrix<f64>, names: &[String]) -> Result<Self> {
        let (n, p) = a.shape();
        let mut qr = a.clone();
        let mut tau = vec![0.0; p];
        let mut perm: Vec<usize> = (0..p).collect();
        let mut r00 = 0.0;

        for j in 0..p {
            let mut best = j;
            let mut best_norm = -1.0;
            for k in j..p {
                let norm: f64 = qr.view((j, k), (n - j, 1)).norm_squared();
                if norm > best_norm {
                    best = k;
                    best_norm = norm;
                }
            }
            if best != j {
                qr.swap_columns(j, best);
                perm.swap(j, best);
            }

            let norm = best_norm.sqrt();
            let x0 = qr[(j, j)];
            let beta = if x0 >= 0.0 { -norm } else { norm };
            if j == 0 {
                r00 = norm;
            }
            if norm == 0.0 || norm < RANK_TOLERANCE * r00 {
                return Err(Error::RankDeficient {
                    column: names[perm[j]].clone(),
                });
            }
            let t = (beta - x0) / beta;
            let scale = 1.0 / (x0 - beta);
            for i in j + 1..n {
                qr[(i, j)] *= scale;
            }
            qr[(j, j)] = beta;
            tau[j] = t;

            for k in j + 1..p {
                let mut w = qr[(j, k)];
                for i in j + 1..n {
                    w += qr[(i, j)] * qr[(i, k)];
                }
                w *= t;
                qr[(j, k)] -= w;
                for i in j + 1..n {
                    qr[(i, k)] -= w * qr[(i, j)];
                }
            }
        }
        Ok(Self { qr, tau, perm })
    }

    fn solve(&self, y: &[f64]) -> Vec<f64> {
        let (n, p) = self.qr.shape();
        let mut qty = y.to_vec();
        for j in 0..p {
            let mut w = qty[j];
            for i in j + 1..n {
                w += self.qr[(i, j)] * qty[i];
            }
            w *= self.tau[j];
            qty[j] -= w;
            for i in j + 1..n {
                qty[i] -= w * self.qr[(i, j)];
            }
        }
        let mut z = vec![0.0; p];
        for j in (0..p).rev() {
            let mut s = qty[j];
            for k in j + 1..p {
                s -= self.qr[(j, k)] * z[k];
            }
            z[j] = s / self.qr[(j, j)];
        }
        let mut coef = vec![0.0; p];
        for (j, &orig) in self.perm.iter().enumerate() {
            coef[orig] = z[j];
        }
        coef
    }

    /// (XᵀX)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ in the original column order.
    fn inverse_gram(&self) -> DMatrix<f64> {
        let p = self.qr.ncols();
        let mut rinv = DMatrix::zeros(p, p);
        for j in 0..p {
            rinv[(j, j)] = 1.0 / self.qr[(j, j)];
            for i in (0..j).rev() {
                let mut s = 0.0;
                for k in i + 1..=j {
                    s += self.qr[(i, k)] * rinv[(k, j)];
                }
                rinv[(i, j)] = -s / self.qr[(i, i)];
            }
        }
        let permuted = &rinv * rinv.transpose();
        let mut out = DMatrix::zeros(p, p);
        for a in 0..p {
            for b in 0..p {
                out[(self.perm[a], self.perm[b])] = permuted[(a, b)];
            }
        }
        out
    }
}

fn check_response(y: &[f64], design: &Design) -> Result<()> {
    let (n, p) = (design.n_rows(), design.n_params());
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            context: "response length".into(),
            expected: n,
            found: y.len(),
        });
    }
    if n <= p {
        return Err(Error::DimensionMismatch {
            context: "observations must exceed parameters".into(),
            expected: p + 1,
            found: n,
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "response".into(),
        });
    }
    Ok(())
}

fn residuals_of(y: &[f64], x: &DMatrix<f64>, coef: &[f64]) -> Vec<f64> {
    let mut res = y.to_vec();
    for (j, c) in coef.iter().enumerate() {
        for (r, xv) in res.iter_mut().zip(x.column(j).iter()) {
            *r -= c * xv;
        }
    }
    res
}

/// Least-squares coefficients and residuals without any covariance work.
pub fn least_squares(y: &[f64], design: &Design) -> Result<(Vec<f64>, Vec<f64>)> {
    check_response(y, design)?;
    let qr = PivotedQr::factor(design.matrix(), design.names())?;
    let coef = qr.solve(y);
    let res = residuals_of(y, design.matrix(), &coef);
    Ok((coef, res))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub residuals: Vec<f64>,
    pub classical_cov: DMatrix<f64>,
    pub sandwich_cov: DMatrix<f64>,
    pub flavor: SandwichFlavor,
    /// (XᵀX)⁻¹, the bread of the sandwich.
    pub xtx_inv: DMatrix<f64>,
    pub dof: usize,
    pub n: usize,
    pub column_names: Vec<String>,
}

impl FitResult {
    pub fn n_params(&self) -> usize {
        self.coefficients.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn rss(&self) -> f64 {
        self.residuals.iter().map(|e| e * e).sum()
    }
}

/// OLS fit with HC0 sandwich covariance.
pub fn fit_ols(y: &[f64], design: &Design) -> Result<FitResult> {
    fit_ols_with(y, design, SandwichFlavor::HC0)
}

pub fn fit_ols_with(y: &[f64], design: &Design, flavor: SandwichFlavor) -> Result<FitResult> {
    check_response(y, design)?;
    let x = design.matrix();
    let (n, p) = x.shape();
    let qr = PivotedQr::factor(x, design.names())?;
    let coefficients = qr.solve(y);
    let residuals = residuals_of(y, x, &coefficients);
    let xtx_inv = qr.inverse_gram();
    let dof = n - p;
    let sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / dof as f64;
    let classical_cov = &xtx_inv * sigma2;
    let sandwich_cov = sandwich_from_parts(x, &residuals, &xtx_inv, flavor);
    Ok(FitResult {
        coefficients,
        residuals,
        classical_cov,
        sandwich_cov,
        flavor,
        xtx_inv,
        dof,
        n,
        column_names: design.names().to_vec(),
    })
}

fn sandwich_from_parts(
    x: &DMatrix<f64>,
    residuals: &[f64],
    bread: &DMatrix<f64>,
    flavor: SandwichFlavor,
) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let mut meat = DMatrix::zeros(p, p);
    for i in 0..n {
        let e2 = residuals[i] * residuals[i];
        if e2 == 0.0 {
            continue;
        }
        for a in 0..p {
            let xa = x[(i, a)] * e2;
            for b in a..p {
                meat[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            meat[(a, b)] = meat[(b, a)];
        }
    }
    let mut cov = bread * meat * bread;
    if flavor == SandwichFlavor::HC1 {
        cov *= n as f64 / (n - p) as f64;
    }
    // exact symmetry
    let t = cov.transpose();
    (cov + t) * 0.5
}

/// Huber-White covariance `(XᵀX)⁻¹ Xᵀ diag(e²) X (XᵀX)⁻¹` of `fit`.
pub fn sandwich_covariance(
    fit: &FitResult,
    design: &Design,
    flavor: SandwichFlavor,
) -> Result<DMatrix<f64>> {
    let (n, p) = design.matrix().shape();
    if n != fit.residuals.len() {
        return Err(Error::DimensionMismatch {
            context: "sandwich design rows".into(),
            expected: fit.residuals.len(),
            found: n,
        });
    }
    if p != fit.n_params() {
        return Err(Error::DimensionMismatch {
            context: "sandwich design columns".into(),
            expected: fit.n_params(),
            found: p,
        });
    }
    Ok(sandwich_from_parts(
        design.matrix(),
        &fit.residuals,
        &fit.xtx_inv,
        flavor,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTest {
    pub estimate: f64,
    pub std_error: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub reference: TestReference,
    pub dof: usize,
}

/// Two-sided p-value of `statistic` under the chosen reference law.
pub fn two_sided_p_value(statistic: f64, reference: TestReference, dof: usize) -> f64 {
    let a = statistic.abs();
    let tail = match reference {
        TestReference::StudentT => StudentsT::new(0.0, 1.0, dof as f64)
            .expect("dof is positive")
            .sf(a),
        TestReference::Normal => Normal::standard().sf(a),
    };
    (2.0 * tail).clamp(0.0, 1.0)
}

/// Robust Wald test of `coefficients[index] = 0` using the fit's sandwich covariance.
pub fn coefficient_test(
    fit: &FitResult,
    index: usize,
    reference: TestReference,
) -> Result<CoefficientTest> {
    if index >= fit.n_params() {
        return Err(Error::DimensionMismatch {
            context: "coefficient index".into(),
            expected: fit.n_params(),
            found: index,
        });
    }
    let estimate = fit.coefficients[index];
    let std_error = fit.sandwich_cov[(index, index)].max(0.0).sqrt();
    if !(std_error >= MIN_STD_ERROR) {
        return Err(Error::ZeroStdError { index });
    }
    let statistic = estimate / std_error;
    Ok(CoefficientTest {
        estimate,
        std_error,
        statistic,
        p_value: two_sided_p_value(statistic, reference, fit.dof),
        reference,
        dof: fit.dof,
    })
}

/// Residual of `target` after least-squares projection on `on` plus an intercept.
pub fn residualize_slices<S: AsRef<str>>(
    target: &[f64],
    on: &[&[f64]],
    names: &[S],
) -> Result<Vec<f64>> {
    let design = Design::with_intercept_rows(target.len(), on, names)?;
    least_squares(target, &design).map(|(_, res)| res)
}

/// Empirical residual of column `target` on `on_columns` (intercept always included).
pub fn residualize<S: AsRef<str>>(
    target: &str,
    on_columns: &[S],
    data: &Dataset,
) -> Result<Vec<f64>> {
    let y = data.column(target)?;
    let design = Design::from_dataset(data, on_columns)?;
    least_squares(y, &design).map(|(_, res)| res)
}
