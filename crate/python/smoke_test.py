"""Smoke test for the impactreg extension module.

    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/impactreg-*.whl
    python python/smoke_test.py
"""

import json
import math
import random

import impactreg


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol * (1.0 + abs(b))


def main():
    x = [0.0, 1.0, 2.0]
    assert close(impactreg.linear_mean_impact([0.0, 1.0, 2.0], x).value, math.sqrt(2 / 3))
    assert close(impactreg.linear_mean_slope([0.0, 2.0, 4.0], x, signed=True).value, 2.0)
    assert close(impactreg.mod_r2([0.0, 1.0, 0.0], x).value, 0.0)

    rng = random.Random(3)
    n = 400
    x2 = [rng.gauss(0, 1) for _ in range(n)]
    x3 = [rng.gauss(0, 1) for _ in range(n)]
    x1 = [a + 0.5 * b + rng.gauss(0, 1) for a, b in zip(x2, x3)]
    y = [0.7 * a + b * b + rng.gauss(0, 1) for a, b in zip(x1, x2)]
    data = {"y": y, "x1": x1, "x2": x2, "x3": x3}

    est = impactreg.partial_linear_mean_impact(data, "y", "x1", ["x2", "x3"])
    fit = impactreg.fit_ols(data, "y", ["x1", "x2", "x3"])
    slope = impactreg.partial_linear_mean_slope(data, "y", "x1", ["x2", "x3"], signed=True)
    assert close(slope.value, fit.coefficients[1])
    assert est.p_value is not None and est.p_value < 1e-6
    print(est)

    order = impactreg.order_covariates(data, "x1", ["x2", "x3"])
    h = impactreg.run_hierarchy(data, "y", "x1", ["x2", "x3"])
    assert h.ordering == order
    print("ordering", h.ordering, "p", h.step_pvalues)

    joint = impactreg.DiscreteJoint([(1.0, [-1.0], 1 / 3), (0.0, [0.0], 1 / 3), (1.0, [1.0], 1 / 3)])
    assert abs(joint.linear_impact(0)) < 1e-12
    assert close(joint.mean_impact(), math.sqrt(2 / 9))
    sup, iota = joint.constrained_sup_check()
    assert sup <= iota + 1e-12

    conf = impactreg.DiscreteJoint.confounding_example(0.9)
    assert close(conf.partial_linear_impact(0), impactreg.confounding_example_value(0.9))
    assert close(impactreg.quadratic_slope_closed_form(1, 1, 1 / 0.9, 1 / 0.81, 2 / 0.729), 1 + 4 / 0.9)

    cfg = impactreg.SimConfig.table1(n=100)
    cfg.replications = 50
    cfg.seed = 11
    a = impactreg.run_study(cfg, threads=1)
    b = impactreg.run_study(cfg, threads=2)
    assert a.to_json() == b.to_json()
    assert json.loads(a.to_json())["config"]["seed"] == 11
    print("type1 (50 reps)", a.type1_hierarchical, a.type1_full)

    try:
        impactreg.linear_mean_impact([1.0, 2.0, 3.0], [1.0, 1.0, 1.0])
    except ArithmeticError:
        pass
    else:
        raise AssertionError("constant covariate accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
