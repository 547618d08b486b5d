//! Exact population parameters on finite discrete joint distributions, plus
//! the closed forms used for quadratic mean structures and the exponential
//! confounding example.

use std::collections::{BTreeMap, HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal as NormalDist};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const PROB_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub y: f64,
    pub x: Vec<f64>,
}

/// Finite-support joint law of a response `y` and covariates `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJoint {
    atoms: Vec<Atom>,
    probs: Vec<f64>,
    covariate_names: Vec<String>,
}

fn key(values: impl Iterator<Item = f64>) -> Vec<u64> {
    // -0.0 and 0.0 are the same support point
    values.map(|v| (v + 0.0).to_bits()).collect()
}

impl DiscreteJoint {
    pub fn new(atoms: Vec<Atom>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySupport);
        }
        if atoms.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                context: "atoms vs probabilities".into(),
                expected: atoms.len(),
                found: probs.len(),
            });
        }
        let m = atoms[0].x.len();
        if m == 0 {
            return Err(Error::InvalidJoint("no covariates".into()));
        }
        let mut seen = HashSet::new();
        for atom in &atoms {
            if atom.x.len() != m {
                return Err(Error::InvalidJoint("atoms differ in covariate count".into()));
            }
            if !atom.y.is_finite() || atom.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: "joint support".into(),
                });
            }
            if !seen.insert(key(std::iter::once(atom.y).chain(atom.x.iter().copied()))) {
                return Err(Error::InvalidJoint("duplicate atom".into()));
            }
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidJoint("probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(Error::InvalidJoint(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let covariate_names = (1..=m).map(|j| format!("x{j}")).collect();
        Ok(Self {
            atoms,
            probs,
            covariate_names,
        })
    }

    /// Builds from `(y, x, p)` triples.
    pub fn from_triples(triples: Vec<(f64, Vec<f64>, f64)>) -> Result<Self> {
        let (atoms, probs) = triples
            .into_iter()
            .map(|(y, x, p)| (Atom { y, x }, p))
            .unzip();
        Self::new(atoms, probs)
    }

    /// `Y = g(X)` on the given covariate support.
    pub fn deterministic(support: &[(Vec<f64>, f64)], g: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::additive(support, g, &[(0.0, 1.0)])
    }

    /// `Y = g(X) + U` with `U` independent of `X`, as a product table.
    pub fn additive(
        support: &[(Vec<f64>, f64)],
        g: impl Fn(&[f64]) -> f64,
        noise: &[(f64, f64)],
    ) -> Result<Self> {
        let mut triples = Vec::with_capacity(support.len() * noise.len());
        for (x, px) in support {
            let gx = g(x);
            for (u, pu) in noise {
                triples.push((gx + u, x.clone(), px * pu));
            }
        }
        Self::from_triples(triples)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_covariates() {
            return Err(Error::DimensionMismatch {
                context: "covariate names".into(),
                expected: self.n_covariates(),
                found: names.len(),
            });
        }
        self.covariate_names = names;
        Ok(self)
    }

    pub fn n_covariates(&self) -> usize {
        self.atoms[0].x.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    fn expect(&self, values: impl Iterator<Item = f64>) -> f64 {
        values.zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(|a| a.y)
    }

    fn xs(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.atoms.iter().map(move |a| a.x[j])
    }

    fn sd_of(&self, v: &[f64]) -> f64 {
        let m = self.expect(v.iter().copied());
        self.expect(v.iter().map(|a| (a - m) * (a - m))).max(0.0).sqrt()
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.n_covariates() {
            return Err(Error::OutOfRange {
                name: "covariate index".into(),
                value: j as f64,
                range: format!("[0, {})", self.n_covariates()),
            });
        }
        Ok(())
    }

    /// `E(Y | X_S)` evaluated at every atom.
    fn conditional_mean(&self, conditioning: &[usize]) -> Vec<f64> {
        let mut groups: HashMap<Vec<u64>, (f64, f64)> = HashMap::new();
        let keys: Vec<Vec<u64>> = self
            .atoms
            .iter()
            .map(|a| key(conditioning.iter().map(|&j| a.x[j])))
            .collect();
        for ((k, a), p) in keys.iter().zip(&self.atoms).zip(&self.probs) {
            let e = groups.entry(k.clone()).or_insert((0.0, 0.0));
            e.0 += p;
            e.1 += p * a.y;
        }
        let ey = self.expect(self.ys());
        keys.iter()
            .map(|k| {
                let (pg, sy) = groups[k];
                if pg > 0.0 {
                    sy / pg
                } else {
                    ey
                }
            })
            .collect()
    }

    /// Residual of `target` after weighted projection on `{1} ∪ {X_j : j ∈ on}`.
    fn project_out(&self, target: &[f64], on: &[usize]) -> Result<Vec<f64>> {
        let p = on.len() + 1;
        let row = |a: &Atom| -> Vec<f64> {
            std::iter::once(1.0)
                .chain(on.iter().map(|&j| a.x[j]))
                .collect()
        };
        let mut gram = DMatrix::zeros(p, p);
        let mut rhs = DVector::zeros(p);
        for ((a, w), t) in self.atoms.iter().zip(&self.probs).zip(target) {
            let z = row(a);
            for r in 0..p {
                rhs[r] += w * z[r] * t;
                for c in 0..p {
                    gram[(r, c)] += w * z[r] * z[c];
                }
            }
        }
        let coef = solve_moments(gram, rhs)?;
        Ok(self
            .atoms
            .iter()
            .zip(target)
            .map(|(a, t)| {
                let z = row(a);
                t - z.iter().zip(coef.iter()).map(|(u, v)| u * v).sum::<f64>()
            })
            .collect())
    }
}

fn solve_moments(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= 1e-12 * max {
        return Err(Error::SingularMoments);
    }
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or(Error::SingularMoments)
}

/// Population parameters of a [`DiscreteJoint`], keyed by covariate name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    /// `SD[E(Y|X)]` over all covariates.
    pub mean_impact: f64,
    /// Linear mean impact of the whole covariate vector, `SD(Xθ)`.
    pub linear_impact: f64,
    pub partial_impact: BTreeMap<String, f64>,
    pub partial_linear_impact: BTreeMap<String, f64>,
    /// `mean_impact² / Var(Y)`.
    pub mod_value: f64,
    pub theta: Vec<f64>,
}

/// `SD[E(Y | X_S)]`; the empty set gives 0.
pub fn exact_mean_impact(joint: &DiscreteJoint, conditioning: &[usize]) -> Result<f64> {
    for &j in conditioning {
        joint.check_index(j)?;
    }
    let cm = joint.conditional_mean(conditioning);
    Ok(joint.sd_of(&cm))
}

/// `|Cov(Y, X_j)| / SD(X_j)`.
pub fn exact_linear_impact(joint: &DiscreteJoint, covariate: usize) -> Result<f64> {
    joint.check_index(covariate)?;
    let x: Vec<f64> = joint.xs(covariate).collect();
    let sd = joint.sd_of(&x);
    let mx = joint.expect(x.iter().copied());
    if !(sd > 1e-12 * (mx.abs() + 1.0)) {
        return Err(Error::DegenerateCovariate(
            joint.covariate_names[covariate].clone(),
        ));
    }
    let cov = joint.expect(joint.ys().zip(&x).map(|(y, xv)| y * (xv - mx)));
    Ok(cov.abs() / sd)
}

/// Population least-squares coefficients `(θ0, θ1, …, θm)`.
pub fn population_theta(joint: &DiscreteJoint) -> Result<Vec<f64>> {
    let p = joint.n_covariates() + 1;
    let mut gram = DMatrix::zeros(p, p);
    let mut rhs = DVector::zeros(p);
    for (a, w) in joint.atoms.iter().zip(&joint.probs) {
        let z: Vec<f64> = std::iter::once(1.0).chain(a.x.iter().copied()).collect();
        for r in 0..p {
            rhs[r] += w * z[r] * a.y;
            for c in 0..p {
                gram[(r, c)] += w * z[r] * z[c];
            }
        }
    }
    Ok(solve_moments(gram, rhs)?.iter().copied().collect())
}

fn others(joint: &DiscreteJoint, k: usize) -> Vec<usize> {
    (0..joint.n_covariates()).filter(|&j| j != k).collect()
}

/// Partial linear mean impact of `X_k` given the other covariates:
/// `|E[Y X̃_k]| / SD(X̃_k)` with `X̃_k` the population residual of `X_k`.
pub fn exact_partial_linear_impact(joint: &DiscreteJoint, k: usize) -> Result<f64> {
    joint.check_index(k)?;
    let xk: Vec<f64> = joint.xs(k).collect();
    let resid = joint.project_out(&xk, &others(joint, k))?;
    let sd = joint.sd_of(&resid);
    if !(sd > 1e-12 * (joint.sd_of(&xk) + 1e-300)) {
        return Err(Error::DegenerateCovariate(joint.covariate_names[k].clone()));
    }
    let num = joint.expect(joint.ys().zip(&resid).map(|(y, r)| y * r));
    Ok(num.abs() / sd)
}

/// Partial (non-linear) mean impact of `X_k`: the SD of `E(Y|X)` after
/// projecting out `{1, X_j : j ≠ k}`.
pub fn exact_partial_impact(joint: &DiscreteJoint, k: usize) -> Result<f64> {
    joint.check_index(k)?;
    let all: Vec<usize> = (0..joint.n_covariates()).collect();
    let cm = joint.conditional_mean(&all);
    let z = joint.project_out(&cm, &others(joint, k))?;
    Ok(joint.expect(z.iter().map(|v| v * v)).max(0.0).sqrt())
}

pub fn population_params(joint: &DiscreteJoint) -> Result<PopulationParams> {
    let m = joint.n_covariates();
    let all: Vec<usize> = (0..m).collect();
    let mean_impact = exact_mean_impact(joint, &all)?;
    let theta = population_theta(joint)?;
    let fitted: Vec<f64> = joint
        .atoms
        .iter()
        .map(|a| theta[0] + a.x.iter().zip(&theta[1..]).map(|(x, t)| x * t).sum::<f64>())
        .collect();
    let linear_impact = joint.sd_of(&fitted);
    let mut partial_impact = BTreeMap::new();
    let mut partial_linear_impact = BTreeMap::new();
    for k in 0..m {
        let name = joint.covariate_names[k].clone();
        partial_impact.insert(name.clone(), exact_partial_impact(joint, k)?);
        partial_linear_impact.insert(name, exact_partial_linear_impact(joint, k)?);
    }
    let y: Vec<f64> = joint.ys().collect();
    let sd_y = joint.sd_of(&y);
    let mod_value = if sd_y > 0.0 {
        ((mean_impact / sd_y).powi(2)).min(1.0)
    } else {
        0.0
    };
    Ok(PopulationParams {
        mean_impact,
        linear_impact,
        partial_impact,
        partial_linear_impact,
        mod_value,
        theta,
    })
}

/// Best ratio `E[Y δ_n] / SD(δ_n)` over the bounded disturbances
/// `δ_n = (η_n δ̂⁺ − min(δ̂⁻, n)) / n`, `n = 1..=n_cap`, where
/// `δ̂ = E(Y|X) − E(Y)`. Returns `(sup_constrained, ι_X(Y))`.
///
/// Every `δ_n` is checked to satisfy `δ_n ≥ −1`. Once `n` exceeds the largest
/// negative part, `δ_n` is proportional to `δ̂` and the ratio no longer
/// changes, so iteration stops there.
pub fn constrained_sup_check(joint: &DiscreteJoint, n_cap: u64) -> Result<(f64, f64)> {
    if n_cap == 0 {
        return Err(Error::OutOfRange {
            name: "n_cap".into(),
            value: 0.0,
            range: "[1, inf)".into(),
        });
    }
    let all: Vec<usize> = (0..joint.n_covariates()).collect();
    let cm = joint.conditional_mean(&all);
    let ey = joint.expect(joint.ys());
    let delta: Vec<f64> = cm.iter().map(|m| m - ey).collect();
    let iota = joint.sd_of(&cm);
    let scale = joint.ys().fold(0.0f64, |acc, y| acc.max(y.abs())) + 1.0;
    if iota <= 1e-14 * scale {
        return Ok((0.0, 0.0));
    }

    let pos: Vec<f64> = delta.iter().map(|d| d.max(0.0)).collect();
    let neg: Vec<f64> = delta.iter().map(|d| (-d).max(0.0)).collect();
    let e_pos = joint.expect(pos.iter().copied());
    let max_neg = neg.iter().cloned().fold(0.0f64, f64::max);
    let last = n_cap.min((max_neg.ceil() as u64).max(1));

    let mut best = f64::NEG_INFINITY;
    let mut dn = vec![0.0; delta.len()];
    for n in 1..=last {
        let cap = n as f64;
        let e_neg_capped = joint.expect(neg.iter().map(|v| v.min(cap)));
        let eta = if e_pos != 0.0 { e_neg_capped / e_pos } else { 1.0 };
        for ((d, p), q) in dn.iter_mut().zip(&pos).zip(&neg) {
            *d = (eta * p - q.min(cap)) / cap;
        }
        for (d, w) in dn.iter().zip(&joint.probs) {
            if *w > 0.0 && *d < -1.0 - 1e-12 {
                return Err(Error::ConstraintViolated { step: n, value: *d });
            }
        }
        let sd = joint.sd_of(&dn);
        if sd <= 0.0 {
            continue;
        }
        let ratio = joint.expect(joint.ys().zip(&dn).map(|(y, d)| y * d)) / sd;
        best = best.max(ratio);
    }
    debug_assert!(best <= iota * (1.0 + 1e-9) + 1e-12);
    Ok((best.max(0.0), iota))
}

/// Mean, variance and third central moment of a covariate law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub central3: f64,
}

/// Signed population slope of the linear approximation of
/// `ϑ0 + ϑ1 X + ϑ2 X²`: `ϑ1 + ϑ2 (2 E X + E[(X − EX)³] / Var X)`.
pub fn quadratic_slope_closed_form(theta1: f64, theta2: f64, moments: &Moments) -> f64 {
    debug_assert!(moments.variance > 0.0);
    theta1 + theta2 * (2.0 * moments.mean + moments.central3 / moments.variance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CovariateLaw {
    Normal { mean: f64, sd: f64 },
    Exponential { rate: f64 },
}

impl CovariateLaw {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CovariateLaw::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            CovariateLaw::Exponential { rate } => rate.is_finite() && rate > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid covariate law {self:?}")))
        }
    }

    pub fn moments(&self) -> Moments {
        match *self {
            CovariateLaw::Normal { mean, sd } => Moments {
                mean,
                variance: sd * sd,
                central3: 0.0,
            },
            CovariateLaw::Exponential { rate } => Moments {
                mean: 1.0 / rate,
                variance: 1.0 / (rate * rate),
                central3: 2.0 / rate.powi(3),
            },
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            CovariateLaw::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
            }
            CovariateLaw::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CovariateLaw::Normal { mean, sd } => NormalDist::new(mean, sd)
                .expect("validated normal law")
                .sample(rng),
            CovariateLaw::Exponential { rate } => {
                Exp::new(rate).expect("validated rate").sample(rng)
            }
        }
    }
}

/// `c0 + c1 x + c2 x²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Quadratic {
    pub fn eval(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x + self.c2 * x * x
    }

    pub fn mean_under(&self, m: &Moments) -> f64 {
        self.c0 + self.c1 * m.mean + self.c2 * (m.variance + m.mean * m.mean)
    }
}

/// Population least-squares line `(θ0, θ1)` approximating `g(X)`.
pub fn linear_approximation(g: &Quadratic, law: &CovariateLaw) -> (f64, f64) {
    let m = law.moments();
    let theta1 = quadratic_slope_closed_form(g.c1, g.c2, &m);
    (g.mean_under(&m) - theta1 * m.mean, theta1)
}

/// Partial linear impact of `X1` given `X2` in the exponential confounding
/// example: `2ρ√(1−ρ²)(ρ−√(1−ρ²))`, for `ρ ∈ [√0.5, 1]`.
pub fn confounding_example_value(rho: f64) -> Result<f64> {
    let lo = 0.5f64.sqrt();
    if !(rho >= lo - 1e-12 && rho <= 1.0) {
        return Err(Error::OutOfRange {
            name: "rho".into(),
            value: rho,
            range: "[sqrt(0.5), 1]".into(),
        });
    }
    let s = (1.0 - rho * rho).max(0.0).sqrt();
    Ok(2.0 * rho * s * (rho - s))
}

/// Discrete version of the exponential confounding example.
///
/// `X1 − 1` and `V − 1` are i.i.d. on the two points `1 ± √2`, which share
/// the first three moments of a centred Exp(1) (mean 0, variance 1, third
/// moment 2). `X2 = ρ(X1 − 1) + √(1−ρ²)(V − 1)` and `Y = X2²`.
pub fn confounding_example_joint(rho: f64) -> Result<DiscreteJoint> {
    confounding_example_value(rho)?;
    let s = (1.0 - rho * rho).sqrt();
    let r2 = 2.0f64.sqrt();
    let (lo, hi) = (1.0 - r2, 1.0 + r2);
    let p_hi = (r2 - 1.0) / (2.0 * r2);
    let law = [(lo, 1.0 - p_hi), (hi, p_hi)];
    let mut triples = Vec::with_capacity(4);
    for &(a, pa) in &law {
        for &(b, pb) in &law {
            let x2 = rho * a + s * b;
            triples.push((x2 * x2, vec![a + 1.0, x2], pa * pb));
        }
    }
    DiscreteJoint::from_triples(triples)
}
