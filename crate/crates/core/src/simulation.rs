//! Seeded Monte Carlo harness for the hierarchical confounder-adjustment
//! procedure and the full-model comparator.
//!
//! Data follow
//!
//! ```text
//! Y  = θ1·X̃1 + Σ_{j=2..m} Xj + Σ_{j=2..m} Xj² + γ·Σ_{2≤j<l≤k+1} Xj·Xl + ε
//! X1 = X̃1 + β·Σ_{j=2..k+1} Xj
//! ```
//!
//! with `X̃1, X2..Xm, ε` i.i.d. standard normal; `X2..X(k+1)` are the `k`
//! confounders of `X1`. Only `(Y, X1..Xm)` are observed.
//!
//! Every replication draws from its own ChaCha stream `(seed, index)`, and
//! results are aggregated in index order, so reports do not depend on the
//! number of worker threads.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hierarchy::{focus_p_value, run_hierarchy, HierarchyOptions};
use crate::impact::Inference;
use crate::regression::{coefficient_test, fit_ols, Design, SandwichFlavor, TestReference};

/// β per number of covariates, chosen so that R²ₓ ≈ 0.8 when k = m − 1.
pub const BETA_PRESETS: [(usize, f64); 5] = [(5, 1.00), (8, 0.75), (10, 0.65), (20, 0.45), (50, 0.30)];

pub fn preset_beta(m: usize) -> Option<f64> {
    BETA_PRESETS.iter().find(|(mm, _)| *mm == m).map(|(_, b)| *b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
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
    pub flavor: SandwichFlavor,
    pub reference: TestReference,
}

impl SimConfig {
    /// Type-I error setting: θ1 = 0.
    pub fn table1(m: usize, k: usize, n: usize, gamma: f64) -> Self {
        Self {
            m,
            k,
            beta: preset_beta(m).unwrap_or(1.0),
            gamma,
            theta1: 0.0,
            n,
            replications: 10_000,
            alpha: 0.05,
            seed: 1,
            include_bivariate: false,
            flavor: SandwichFlavor::HC0,
            reference: TestReference::StudentT,
        }
    }

    /// Alternative setting: θ1 = 0.4 without interactions, 0.5 with.
    pub fn table2(m: usize, k: usize, n: usize, gamma: f64) -> Self {
        Self {
            theta1: if gamma == 0.0 { 0.4 } else { 0.5 },
            ..Self::table1(m, k, n, gamma)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m < 2 {
            return fail(format!("m must be at least 2, got {}", self.m));
        }
        if self.k < 1 || self.k > self.m - 1 {
            return fail(format!("k must lie in [1, {}], got {}", self.m - 1, self.k));
        }
        if self.n <= self.m + 1 {
            return fail(format!("n must exceed m + 1 = {}, got {}", self.m + 1, self.n));
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if ![self.beta, self.gamma, self.theta1].iter().all(|v| v.is_finite()) {
            return fail("beta, gamma and theta1 must be finite".into());
        }
        Ok(())
    }

    /// Fraction of Var(X1) explained by the confounders, β²k/(1+β²k).
    pub fn r2_x(&self) -> f64 {
        let b = self.beta * self.beta * self.k as f64;
        b / (1.0 + b)
    }

    fn hierarchy_options(&self) -> HierarchyOptions {
        HierarchyOptions {
            alpha: self.alpha,
            include_bivariate: self.include_bivariate,
            inference: Inference {
                flavor: self.flavor,
                reference: self.reference,
            },
        }
    }
}

pub fn covariate_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("x{j}")).collect()
}

/// Random stream of replication `index` under `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws one dataset with columns `y, x1, …, xm`.
pub fn generate_dataset(config: &SimConfig, replication_index: u64) -> Result<Dataset> {
    config.validate()?;
    let mut rng = replication_rng(config.seed, replication_index);
    let (m, k, n) = (config.m, config.k, config.n);
    let mut y = Vec::with_capacity(n);
    let mut xs = vec![Vec::with_capacity(n); m];
    let mut others = vec![0.0; m - 1];
    for _ in 0..n {
        let latent: f64 = StandardNormal.sample(&mut rng);
        for v in others.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let eps: f64 = StandardNormal.sample(&mut rng);

        let confounders = &others[..k];
        let x1 = latent + config.beta * confounders.iter().sum::<f64>();
        let mut yi = config.theta1 * latent + eps;
        for v in &others {
            yi += v + v * v;
        }
        if config.gamma != 0.0 {
            let mut inter = 0.0;
            for a in 0..k {
                for b in a + 1..k {
                    inter += confounders[a] * confounders[b];
                }
            }
            yi += config.gamma * inter;
        }
        y.push(yi);
        xs[0].push(x1);
        for (col, v) in xs[1..].iter_mut().zip(&others) {
            col.push(*v);
        }
    }
    let mut columns = Vec::with_capacity(m + 1);
    columns.push(("y".to_string(), y));
    columns.extend(covariate_names(m).into_iter().zip(xs));
    Dataset::from_columns(columns)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Outcome {
    any_reject: bool,
    true_null_reject: bool,
    final_hier: bool,
    confounders: usize,
    full_reject: bool,
}

fn run_replication(config: &SimConfig, index: u64) -> Result<Outcome> {
    let data = generate_dataset(config, index)?;
    let names = covariate_names(config.m);
    let candidates = &names[1..];
    let opts = config.hierarchy_options();
    let h = run_hierarchy("y", "x1", candidates, &data, &opts, None)?;

    let y = data.column("y")?;
    let x1 = data.column("x1")?;
    let adjust: Vec<&[f64]> = candidates
        .iter()
        .map(|c| data.column(c))
        .collect::<Result<_>>()?;
    let full_p = focus_p_value(y, x1, &adjust, opts.inference)?;

    // first step whose adjustment set covers every confounder x2..x(k+1)
    let confounders = &names[1..=config.k];
    let mut covered = 0;
    let mut first_true_null = h.ordering.len();
    for (i, name) in h.ordering.iter().enumerate() {
        if confounders.contains(name) {
            covered += 1;
        }
        if covered == confounders.len() {
            first_true_null = i;
            break;
        }
    }
    Ok(Outcome {
        any_reject: h.rejected_prefix > 0,
        true_null_reject: h.confounders_adjusted > first_true_null,
        final_hier: h.rejects_final(),
        confounders: h.confounders_adjusted,
        full_reject: full_p <= config.alpha,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McStderr {
    pub type1_hierarchical: Option<f64>,
    pub any_rejection_hier: f64,
    pub type1_full: f64,
    pub mean_confounders_hier: f64,
    pub mean_confounders_full: f64,
    pub reject_final_hier: f64,
    pub reject_final_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub r2_x: f64,
    pub replications_ok: usize,
    pub replications_failed: usize,
    /// Probability of rejecting a true null hypothesis; only defined for θ1 = 0.
    pub type1_hierarchical: Option<f64>,
    /// Probability of rejecting at least the first hypothesis in the sequence.
    pub any_rejection_hier: f64,
    /// Rejection rate of the full-model test (type I error when θ1 = 0).
    pub type1_full: f64,
    pub mean_confounders_hier: f64,
    pub mean_confounders_full: f64,
    pub reject_final_hier: f64,
    pub reject_final_full: f64,
    pub mc_stderr: McStderr,
    #[serde(skip)]
    pub elapsed: Duration,
}

fn rate(hits: usize, total: usize) -> (f64, f64) {
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}

fn aggregate(config: &SimConfig, outcomes: &[Result<Outcome>], elapsed: Duration) -> Result<SimReport> {
    let ok: Vec<&Outcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let total = ok.len();
    if total == 0 {
        return Err(outcomes
            .iter()
            .find_map(|o| o.as_ref().err().cloned())
            .unwrap_or_else(|| Error::InvalidConfig("no replications".into())));
    }
    let count = |f: fn(&Outcome) -> bool| ok.iter().filter(|o| f(o)).count();
    let (any, any_se) = rate(count(|o| o.any_reject), total);
    let (t1h, t1h_se) = rate(count(|o| o.true_null_reject), total);
    let (full, full_se) = rate(count(|o| o.full_reject), total);
    let (fin, fin_se) = rate(count(|o| o.final_hier), total);

    let conf: Vec<f64> = ok.iter().map(|o| o.confounders as f64).collect();
    let mean_conf = conf.iter().sum::<f64>() / total as f64;
    let var_conf = conf.iter().map(|c| (c - mean_conf).powi(2)).sum::<f64>() / total as f64;
    let adjustable = (config.m - 1) as f64;

    let null = config.theta1 == 0.0;
    Ok(SimReport {
        config: config.clone(),
        r2_x: config.r2_x(),
        replications_ok: total,
        replications_failed: outcomes.len() - total,
        type1_hierarchical: null.then_some(t1h),
        any_rejection_hier: any,
        type1_full: full,
        mean_confounders_hier: mean_conf,
        mean_confounders_full: adjustable * full,
        reject_final_hier: fin,
        reject_final_full: full,
        mc_stderr: McStderr {
            type1_hierarchical: null.then_some(t1h_se),
            any_rejection_hier: any_se,
            type1_full: full_se,
            mean_confounders_hier: (var_conf / total as f64).sqrt(),
            mean_confounders_full: adjustable * full_se,
            reject_final_hier: fin_se,
            reject_final_full: full_se,
        },
        elapsed,
    })
}

/// Runs all replications of `config`, using `threads` workers (rayon's
/// default when `None`).
pub fn run_study(config: &SimConfig, threads: Option<usize>) -> Result<SimReport> {
    config.validate()?;
    let start = Instant::now();
    let reps = config.replications as u64;
    let work = || -> Vec<Result<Outcome>> {
        (0..reps)
            .into_par_iter()
            .map(|i| run_replication(config, i))
            .collect()
    };
    let outcomes = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    aggregate(config, &outcomes, start.elapsed())
}

/// Mean-structure families whose multiple-regression slope has a closed form.
///
/// In all of them `X̃1 ~ N(0,1)` is independent of `X2`, `X1 = β0 + β2·X2 + X̃1`
/// and `ε ~ N(0,1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SlopeModel {
    /// `Y = ϑ0 + ϑ1·X1 + X2² + ε`, `X2 ~ N(0,1)`; slope target `ϑ1`.
    SemiLinear {
        theta0: f64,
        theta1: f64,
        beta0: f64,
        beta2: f64,
    },
    /// `Y = ϑ1·X1 + ϑ2·X2²·X1 + X2² + ε`, `X2 ~ N(0,1)`; target `ϑ1 + ϑ2`.
    Interaction { theta1: f64, theta2: f64, beta2: f64 },
    /// `Y = ϑ1·X1 + ϑ2·X1² + X2² + ε`, `X2 ~ N(mean2, 1)`; target
    /// `ϑ1 + 2ϑ2·E(X1)` since `E X̃1³ = 0`.
    SemiQuadratic {
        theta1: f64,
        theta2: f64,
        beta0: f64,
        beta2: f64,
        mean2: f64,
    },
}

impl SlopeModel {
    pub fn target(&self) -> f64 {
        match *self {
            SlopeModel::SemiLinear { theta1, .. } => theta1,
            SlopeModel::Interaction { theta1, theta2, .. } => theta1 + theta2,
            SlopeModel::SemiQuadratic {
                theta1,
                theta2,
                beta0,
                beta2,
                mean2,
            } => theta1 + 2.0 * theta2 * (beta0 + beta2 * mean2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeCheck {
    pub estimate: f64,
    /// Robust (HC0) standard error of the estimate.
    pub std_error: f64,
    pub target: f64,
}

/// Simulates `model`, regresses `Y` on `(X1, X2)` and returns the `X1`
/// coefficient next to its closed-form limit.
pub fn slope_identity_check(model: &SlopeModel, n: usize, seed: u64) -> Result<SlopeCheck> {
    if n < 4 {
        return Err(Error::InvalidConfig(format!("n must be at least 4, got {n}")));
    }
    let mut rng = replication_rng(seed, 0);
    let mut y = Vec::with_capacity(n);
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    for _ in 0..n {
        let latent: f64 = StandardNormal.sample(&mut rng);
        let z: f64 = StandardNormal.sample(&mut rng);
        let eps: f64 = StandardNormal.sample(&mut rng);
        let (yi, x1i, x2i) = match *model {
            SlopeModel::SemiLinear {
                theta0,
                theta1,
                beta0,
                beta2,
            } => {
                let x1 = beta0 + beta2 * z + latent;
                (theta0 + theta1 * x1 + z * z + eps, x1, z)
            }
            SlopeModel::Interaction {
                theta1,
                theta2,
                beta2,
            } => {
                let x1 = beta2 * z + latent;
                (theta1 * x1 + theta2 * z * z * x1 + z * z + eps, x1, z)
            }
            SlopeModel::SemiQuadratic {
                theta1,
                theta2,
                beta0,
                beta2,
                mean2,
            } => {
                let x2 = mean2 + z;
                let x1 = beta0 + beta2 * x2 + latent;
                (theta1 * x1 + theta2 * x1 * x1 + x2 * x2 + eps, x1, x2)
            }
        };
        y.push(yi);
        x1.push(x1i);
        x2.push(x2i);
    }
    let design = Design::with_intercept(&[&x1, &x2], &["x1", "x2"])?;
    let fit = fit_ols(&y, &design)?;
    let test = coefficient_test(&fit, 1, TestReference::Normal)?;
    Ok(SlopeCheck {
        estimate: test.estimate,
        std_error: test.std_error,
        target: model.target(),
    })
}

/// Sample from the exponential confounding example: `X1 ~ Exp(1)`,
/// `X2 = ρ(X1 − 1) + √(1−ρ²)(V − 1)` with independent `V ~ Exp(1)`, and
/// `Y = X2² + ε`. Columns are `y, x1, x2`.
pub fn confounding_example_sample(rho: f64, n: usize, seed: u64) -> Result<Dataset> {
    crate::oracle::confounding_example_value(rho)?;
    let s = (1.0 - rho * rho).sqrt();
    let mut rng = replication_rng(seed, 0);
    let mut y = Vec::with_capacity(n);
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = Exp1.sample(&mut rng);
        let v: f64 = Exp1.sample(&mut rng);
        let eps: f64 = StandardNormal.sample(&mut rng);
        let b = rho * (a - 1.0) + s * (v - 1.0);
        y.push(b * b + eps);
        x1.push(a);
        x2.push(b);
    }
    Dataset::from_columns(vec![("y", y), ("x1", x1), ("x2", x2)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    fn small(theta1: f64) -> SimConfig {
        SimConfig {
            replications: 20,
            ..SimConfig::table1(5, 4, 60, 0.0)
        }
        .with_theta(theta1)
    }

    impl SimConfig {
        fn with_theta(mut self, theta1: f64) -> Self {
            self.theta1 = theta1;
            self
        }
    }

    #[test]
    fn config_validation() {
        let good = SimConfig::table1(5, 4, 500, 0.0);
        assert!(good.validate().is_ok());
        assert!((good.r2_x() - 0.8).abs() < 1e-12);
        for bad in [
            SimConfig { k: 0, ..good.clone() },
            SimConfig { k: 5, ..good.clone() },
            SimConfig { n: 6, ..good.clone() },
            SimConfig { replications: 0, ..good.clone() },
            SimConfig { alpha: 1.0, ..good.clone() },
            SimConfig { m: 1, k: 1, ..good.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))), "{bad:?}");
        }
    }

    #[test]
    fn presets() {
        assert_eq!(preset_beta(10), Some(0.65));
        assert_eq!(preset_beta(7), None);
        assert_eq!(SimConfig::table2(5, 4, 500, 0.0).theta1, 0.4);
        assert_eq!(SimConfig::table2(5, 4, 500, 1.0).theta1, 0.5);
    }

    #[test]
    fn dataset_shape_and_determinism() {
        let cfg = small(0.0);
        let a = generate_dataset(&cfg, 3).unwrap();
        let b = generate_dataset(&cfg, 3).unwrap();
        let c = generate_dataset(&cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.names(), &["y", "x1", "x2", "x3", "x4", "x5"]);
        assert_eq!(a.n_rows(), 60);
    }

    #[test]
    fn beta_zero_leaves_focus_standard() {
        let cfg = SimConfig {
            beta: 0.0,
            n: 100_000,
            ..SimConfig::table1(5, 4, 500, 0.0)
        };
        let d = generate_dataset(&cfg, 0).unwrap();
        let v = stats::variance(d.column("x1").unwrap());
        // SE of a sample variance of N(0,1) is √(2/n)
        assert!((v - 1.0).abs() < 3.0 * (2.0f64 / 1e5).sqrt(), "{v}");
    }

    #[test]
    fn response_mean_under_null() {
        let cfg = SimConfig {
            n: 100_000,
            ..SimConfig::table1(5, 4, 500, 0.0)
        };
        let d = generate_dataset(&cfg, 0).unwrap();
        let y = d.column("y").unwrap();
        // Var(Y) = 4 (linear) + 8 (squares) + 1 (noise) = 13
        let se = (13.0f64 / 1e5).sqrt();
        assert!((stats::mean(y) - 4.0).abs() < 3.0 * se);
    }

    #[test]
    fn study_is_thread_count_invariant() {
        let cfg = small(0.4);
        let one = run_study(&cfg, Some(1)).unwrap();
        let four = run_study(&cfg, Some(4)).unwrap();
        assert_eq!(
            serde_json::to_string(&one).unwrap(),
            serde_json::to_string(&four).unwrap()
        );
        assert!(one.type1_hierarchical.is_none());
        assert_eq!(one.mean_confounders_full, 4.0 * one.reject_final_full);
    }

    #[test]
    fn single_replication_rates_are_degenerate() {
        let cfg = SimConfig {
            replications: 1,
            ..small(0.0)
        };
        let r = run_study(&cfg, Some(1)).unwrap();
        for rate in [
            r.type1_hierarchical.unwrap(),
            r.any_rejection_hier,
            r.type1_full,
            r.reject_final_hier,
        ] {
            assert!(rate == 0.0 || rate == 1.0);
        }
    }

    #[test]
    fn slope_targets() {
        let m = SlopeModel::SemiQuadratic {
            theta1: 1.0,
            theta2: 1.0,
            beta0: 0.5,
            beta2: 1.0,
            mean2: 0.25,
        };
        assert_eq!(m.target(), 1.0 + 2.0 * 0.75);
        let m = SlopeModel::Interaction {
            theta1: 1.0,
            theta2: 1.0,
            beta2: 0.5,
        };
        assert_eq!(m.target(), 2.0);
    }
}
