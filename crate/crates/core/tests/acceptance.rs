//! Acceptance criteria, one test per criterion.

use std::time::{Duration, Instant};

use impactreg_core::oracle::{
    confounding_example_value, linear_approximation, quadratic_slope_closed_form, CovariateLaw,
    Quadratic,
};
use impactreg_core::regression::residualize;
use impactreg_core::simulation::confounding_example_sample;
use impactreg_core::stats;
use impactreg_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn report(id: u32, name: &str, pass: bool, detail: String, elapsed: Duration) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} [{status}] {name}: {detail} ({elapsed:.2?})");
    assert!(pass, "criterion {id} failed: {detail}");
}

fn random_dataset(rng: &mut ChaCha8Rng) -> (Dataset, Vec<String>) {
    let n = rng.random_range(20..=200);
    let m = rng.random_range(2..=6);
    let mut cols: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    // correlate the focus with the rest
    for i in 0..n {
        let mix: f64 = cols[1..].iter().map(|c| c[i]).sum::<f64>() * rng.random_range(-1.0..1.0);
        cols[0][i] += mix;
    }
    let slope: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let lin: f64 = cols.iter().zip(&slope).map(|(c, b)| b * c[i]).sum();
            lin + cols[m - 1][i].powi(2) + rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let names: Vec<String> = (1..=m).map(|j| format!("x{j}")).collect();
    let mut all = vec![("y".to_string(), y)];
    all.extend(names.iter().cloned().zip(cols));
    (Dataset::from_columns(all).unwrap(), names)
}

#[test]
fn criterion_01_partial_identity_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let (data, names) = random_dataset(&mut rng);
        let adjust = &names[1..];
        let design = Design::from_dataset(&data, &names).unwrap();
        let fit = fit_ols(data.column("y").unwrap(), &design).unwrap();
        let resid = residualize("x1", adjust, &data).unwrap();
        let via_coef = fit.coefficients[1].abs() * stats::std_dev(&resid);
        let est = partial_linear_mean_impact("y", "x1", adjust, &data).unwrap().value;
        worst = worst.max((via_coef - est).abs() / est.abs().max(1e-300));
    }
    let elapsed = start.elapsed();
    report(
        1,
        "partial linear impact = |coef|·SD(residual)",
        worst <= 1e-10 && elapsed < Duration::from_secs(5),
        format!("max relative gap {worst:.2e} over 200 datasets"),
        elapsed,
    );
}

fn random_joint(rng: &mut ChaCha8Rng, m: usize) -> DiscreteJoint {
    let atoms = rng.random_range(3..=14);
    let mut triples = Vec::with_capacity(atoms);
    for _ in 0..atoms {
        let x: Vec<f64> = (0..m).map(|_| rng.random_range(-2..=2) as f64).collect();
        let y = rng.sample::<f64, _>(StandardNormal) + x.iter().map(|v| v * v).sum::<f64>();
        triples.push((y, x, rng.random_range(0.05..1.0)));
    }
    let total: f64 = triples.iter().map(|t| t.2).sum();
    for t in &mut triples {
        t.2 /= total;
    }
    let drift: f64 = 1.0 - triples.iter().map(|t| t.2).sum::<f64>();
    triples[0].2 += drift;
    DiscreteJoint::from_triples(triples).unwrap()
}

fn sd_y(joint: &DiscreteJoint) -> f64 {
    let ys: Vec<f64> = joint.atoms().iter().map(|a| a.y).collect();
    let mean: f64 = ys.iter().zip(joint.probs()).map(|(y, p)| y * p).sum();
    ys.iter()
        .zip(joint.probs())
        .map(|(y, p)| p * (y - mean).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn has_spread(joint: &DiscreteJoint, j: usize) -> bool {
    let first = joint.atoms()[0].x[j];
    joint.atoms().iter().any(|a| a.x[j] != first)
}

#[test]
fn criterion_02_oracle_bounds() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let slack = 1e-12;
    let mut checked = 0;
    let mut ok = true;
    while checked < 200 {
        let m = rng.random_range(1..=3);
        let joint = random_joint(&mut rng, m);
        let sd = sd_y(&joint);
        let all: Vec<usize> = (0..m).collect();
        let iota_all = exact_mean_impact(&joint, &all).unwrap();
        ok &= iota_all <= sd + slack;
        for j in 0..m {
            if !has_spread(&joint, j) {
                continue;
            }
            let lin = exact_linear_impact(&joint, j).unwrap();
            let iota = exact_mean_impact(&joint, &[j]).unwrap();
            ok &= -slack <= lin && lin <= iota + slack && iota <= iota_all + slack;
        }
        checked += 1;
    }
    let support: Vec<(Vec<f64>, f64)> = [-1.0, 0.0, 1.0].iter().map(|&x| (vec![x], 1.0 / 3.0)).collect();
    let witness = DiscreteJoint::deterministic(&support, |x| x[0] * x[0]).unwrap();
    let lin = exact_linear_impact(&witness, 0).unwrap();
    let iota = exact_mean_impact(&witness, &[0]).unwrap();
    let gap_ok = lin.abs() <= slack && (iota - (2.0f64 / 9.0).sqrt()).abs() <= slack;
    let elapsed = start.elapsed();
    report(
        2,
        "0 ≤ ι_lin ≤ ι ≤ SD(Y)",
        ok && gap_ok && elapsed < Duration::from_secs(1),
        format!("200 joints; witness ι_lin = {lin:.1e}, ι = {iota:.15}"),
        elapsed,
    );
}

#[test]
fn criterion_03_constrained_supremum() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..50 {
        let m = rng.random_range(1..=3);
        let joint = random_joint(&mut rng, m);
        // an error here means some δ_n fell below −1
        let (sup, iota) = constrained_sup_check(&joint, 1_000_000).unwrap();
        ok &= sup <= iota + 1e-12;
        worst = worst.max(iota - sup);
    }
    let elapsed = start.elapsed();
    report(
        3,
        "constrained supremum reaches ι",
        ok && worst <= 1e-3 && elapsed < Duration::from_secs(5),
        format!("max ι − sup = {worst:.2e} over 50 joints"),
        elapsed,
    );
}

#[test]
fn criterion_04_confounding_value() {
    let start = Instant::now();
    let data = confounding_example_sample(0.9, 1_000_000, 404).unwrap();
    let est = partial_linear_mean_impact("y", "x1", &["x2"], &data).unwrap().value;
    let closed = confounding_example_value(0.9).unwrap();
    let target = 0.36423;
    let elapsed = start.elapsed();
    report(
        4,
        "partial linear impact in the exponential confounding model",
        (est - target).abs() <= 0.01 && elapsed < Duration::from_secs(10),
        format!("estimate {est:.5}, target {target}, closed form {closed:.6}"),
        elapsed,
    );
}

#[test]
fn criterion_05_linear_approximation_coefficients() {
    let start = Instant::now();
    let g = Quadratic {
        c0: 1.0,
        c1: 1.0,
        c2: 1.0,
    };
    let cases = [
        (CovariateLaw::Normal { mean: 0.0, sd: 1.0 }, 1.0, 2.0),
        (CovariateLaw::Normal { mean: -1.0, sd: 1.0 }, -1.0, 1.0),
        (CovariateLaw::Exponential { rate: 0.9 }, 1.0 + 4.0 / 0.9, f64::NAN),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, (law, t1, t0)) in cases.iter().enumerate() {
        let closed = quadratic_slope_closed_form(g.c1, g.c2, &law.moments());
        let (theta0, theta1) = linear_approximation(&g, law);
        ok &= (closed - t1).abs() <= 1e-12 && (theta1 - t1).abs() <= 1e-12;
        if t0.is_finite() {
            ok &= (theta0 - t0).abs() <= 1e-12;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
        let x: Vec<f64> = (0..1_000_000).map(|_| law.sample(&mut rng)).collect();
        let y: Vec<f64> = x.iter().map(|v| g.eval(*v)).collect();
        let slope = linear_mean_slope(&y, &x, true).unwrap().value;
        ok &= (slope - t1).abs() <= 0.05;
        detail.push(format!("θ1 {closed:.4}/{slope:.4}"));
    }
    let elapsed = start.elapsed();
    report(
        5,
        "closed-form and simulated θ1",
        ok && elapsed < Duration::from_secs(10),
        detail.join(", "),
        elapsed,
    );
}

#[test]
fn criterion_06_type_one_error() {
    let start = Instant::now();
    let big = run_study(&SimConfig::table1(5, 4, 500, 0.0), None).unwrap();
    let small = run_study(&SimConfig::table1(5, 4, 50, 0.0), None).unwrap();
    let h500 = big.type1_hierarchical.unwrap();
    let h50 = small.type1_hierarchical.unwrap();
    let pass = (h500 - 0.050).abs() <= 0.007
        && h50 <= 0.05
        && small.type1_full >= 0.07
        && (big.type1_full - 0.052).abs() <= 0.007;
    let elapsed = start.elapsed();
    report(
        6,
        "type I error, m=5 k=4 γ=0",
        pass && elapsed < Duration::from_secs(180),
        format!(
            "hier n=500 {h500:.4}, n=50 {h50:.4}; full n=50 {:.4}, n=500 {:.4}",
            small.type1_full, big.type1_full
        ),
        elapsed,
    );
}

#[test]
fn criterion_07_power_and_confounder_counts() {
    let start = Instant::now();
    let five = run_study(&SimConfig::table2(5, 4, 500, 0.0), None).unwrap();
    let ten = run_study(&SimConfig::table2(10, 9, 500, 0.0), None).unwrap();
    let pass = (five.reject_final_hier - 0.85).abs() <= 0.02
        && (five.mean_confounders_hier - 3.85).abs() <= 0.10
        && (five.mean_confounders_full - 3.41).abs() <= 0.10
        && (ten.mean_confounders_hier - 8.54).abs() <= 0.15
        && (ten.mean_confounders_full - 4.90).abs() <= 0.15;
    let elapsed = start.elapsed();
    report(
        7,
        "final-step rejection and confounders adjusted, θ1=0.4",
        pass && elapsed < Duration::from_secs(600),
        format!(
            "m=5: final {:.4}, hier {:.3}, full {:.3}; m=10: hier {:.3}, full {:.3}",
            five.reject_final_hier,
            five.mean_confounders_hier,
            five.mean_confounders_full,
            ten.mean_confounders_hier,
            ten.mean_confounders_full
        ),
        elapsed,
    );
}

#[test]
fn criterion_08_slope_identities() {
    let start = Instant::now();
    let models = [
        SlopeModel::SemiLinear {
            theta0: 0.5,
            theta1: 1.0,
            beta0: 0.3,
            beta2: 0.8,
        },
        SlopeModel::Interaction {
            theta1: 1.0,
            theta2: 0.5,
            beta2: 0.8,
        },
        SlopeModel::SemiQuadratic {
            theta1: 1.0,
            theta2: 0.5,
            beta0: 0.3,
            beta2: 0.8,
            mean2: 0.5,
        },
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (i, model) in models.iter().enumerate() {
        let c = slope_identity_check(model, 1_000_000, 800 + i as u64).unwrap();
        let z = (c.estimate - c.target) / c.std_error;
        ok &= z.abs() <= 3.0;
        detail.push(format!("{:.4} vs {:.4} (z={z:.2})", c.estimate, c.target));
    }
    let elapsed = start.elapsed();
    report(
        8,
        "slope identities within 3 MC standard errors",
        ok && elapsed < Duration::from_secs(30),
        detail.join("; "),
        elapsed,
    );
}

#[test]
fn criterion_09_determinism_across_threads() {
    let start = Instant::now();
    let mut cfg = SimConfig::table2(5, 4, 200, 1.0);
    cfg.replications = 400;
    cfg.seed = 909;
    let one = serde_json::to_vec(&run_study(&cfg, Some(1)).unwrap()).unwrap();
    let three = serde_json::to_vec(&run_study(&cfg, Some(3)).unwrap()).unwrap();
    let again = serde_json::to_vec(&run_study(&cfg, Some(8)).unwrap()).unwrap();
    let elapsed = start.elapsed();
    report(
        9,
        "byte-identical reports across thread counts",
        one == three && three == again,
        format!("{} bytes", one.len()),
        elapsed,
    );
}
