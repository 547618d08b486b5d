use impactreg_core::data_io::{write_csv, ProvenanceEntry};
use impactreg_core::oracle::{confounding_example_joint, confounding_example_value};
use impactreg_core::simulation::generate_dataset;
use impactreg_core::*;

#[test]
fn csv_transform_estimate_round_trip() {
    let text = "y,x1,x2,x3\n\
                2.1,1.0,0.5,1\n\
                3.9,2.0,1.5,2\n\
                6.2,3.0,0.7,3\n\
                7.8,4.0,2.5,1\n\
                10.1,5.0,1.1,2\n\
                99.0,6.0,3.0,3\n";
    let data = read_csv(text.as_bytes(), None).unwrap();
    let spec = TransformSpec::from_json(
        r#"[
            {"op": "exclude_rows", "column": "y", "comparator": "gt", "threshold": 50},
            {"op": "log", "column": "x2"},
            {"op": "dichotomize", "column": "x3", "rule": {"by_level": 2}},
            {"op": "augment_quadratic", "columns": ["x2"]}
        ]"#,
    )
    .unwrap();
    let (out, log) = apply_transforms(&data, &spec).unwrap();
    assert_eq!(out.n_rows(), 5);
    assert_eq!(out.names(), &["y", "x1", "x2", "x3", "x2^2"]);
    assert_eq!(out.column("x3").unwrap(), &[0.0, 1.0, 0.0, 0.0, 1.0]);
    assert_eq!(
        log[0],
        ProvenanceEntry {
            step: log[0].step.clone(),
            rows_before: 6,
            rows_after: 5,
            created: vec![],
        }
    );

    let mut buf = Vec::new();
    write_csv(&out, &mut buf).unwrap();
    let back = read_csv(buf.as_slice(), Some(out.names())).unwrap();
    assert_eq!(back, out);

    let est = partial_linear_mean_impact("y", "x1", &["x2", "x3"], &back).unwrap();
    assert_eq!(est.kind, ImpactKind::PartialLinearImpact);
    assert!(est.value > 0.0);
}

#[test]
fn hierarchy_uses_data_driven_order() {
    let mut cfg = SimConfig::table2(6, 5, 300, 0.0);
    cfg.seed = 17;
    let data = generate_dataset(&cfg, 0).unwrap();
    let cands = ["x2", "x3", "x4", "x5", "x6"];
    let ord = order_covariates("x1", &cands, &data).unwrap();
    let res = run_hierarchy("y", "x1", &cands, &data, &HierarchyOptions::default(), None).unwrap();
    assert_eq!(res.ordering, ord.order);
    assert_eq!(res.step_pvalues.len(), cands.len());
    let evaluated = res.step_pvalues.iter().take_while(|p| p.is_some()).count();
    assert!(evaluated >= res.confounders_adjusted);
    assert!(res.step_pvalues[evaluated..].iter().all(Option::is_none));
}

#[test]
fn prespecified_order_is_respected() {
    let cfg = SimConfig::table2(5, 4, 200, 0.0);
    let data = generate_dataset(&cfg, 1).unwrap();
    let order: Vec<String> = ["x5", "x4", "x3", "x2"].iter().map(|s| s.to_string()).collect();
    let cands = ["x2", "x3", "x4", "x5"];
    let opts = HierarchyOptions::default();
    let res = run_hierarchy("y", "x1", &cands, &data, &opts, Some(&order)).unwrap();
    assert_eq!(res.ordering, order);
    let bad: Vec<String> = vec!["x5".into(), "x4".into()];
    assert!(matches!(
        run_hierarchy("y", "x1", &cands, &data, &opts, Some(&bad)),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn discrete_confounding_table_matches_closed_form() {
    for rho in [0.75, 0.8, 0.9, 0.95] {
        let joint = confounding_example_joint(rho).unwrap();
        let exact = exact_partial_linear_impact(&joint, 0).unwrap();
        assert!((exact - confounding_example_value(rho).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn sample_estimates_approach_oracle() {
    // y = x² + u on a three-point grid, replicated exactly in the sample
    let support = [(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)];
    let joint = DiscreteJoint::additive(
        &support.iter().map(|(x, p)| (vec![*x], *p)).collect::<Vec<_>>(),
        |x| 2.0 * x[0] + x[0] * x[0],
        &[(-0.5, 0.5), (0.5, 0.5)],
    )
    .unwrap();
    let mut y = Vec::new();
    let mut x = Vec::new();
    for (xv, p) in support {
        for u in [-0.5, 0.5] {
            for _ in 0..(p * 8.0) as usize {
                y.push(2.0 * xv + xv * xv + u);
                x.push(xv);
            }
        }
    }
    let est = linear_mean_impact(&y, &x).unwrap().value;
    let exact = exact_linear_impact(&joint, 0).unwrap();
    assert!((est - exact).abs() < 1e-12, "{est} vs {exact}");
}
