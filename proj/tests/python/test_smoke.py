import math

import numpy as np
import pytest

import frobenius as fb


def test_metric_and_curvature():
    c = fb.Chart(2, 1.0, 0.5)
    g, gi = fb.metric_at(c, np.zeros(2))
    assert np.allclose(g, np.eye(2))
    assert np.allclose(g @ gi, np.eye(2))
    op = fb.riemann_at(c, np.zeros(2))
    # R(e_0, e_1) e_1 = κ e_0 at the origin.
    assert op[0, 1, 0, 1] == pytest.approx(1.0)


def test_chart_rejects_bad_dimension():
    with pytest.raises(fb.FrobeniusError):
        fb.Chart(1, 1.0, 0.5)


def test_seed_and_field():
    c = fb.Chart(2, 1.0, 0.45)
    star = fb.solve_seed_algebra(c, 1)
    assert star.shape == (2, 2, 2)
    assert np.allclose(star, star.transpose(1, 0, 2))
    v = fb.validate_seed(c, star)
    assert v["passed"] and v["associator"] < 1e-10
    assert fb.classify_point(c, star) == "hessian"
    f = fb.construct_field(c, star, 21, 0.3)
    assert f.star.shape == (441, 2, 2, 2)
    assert f.points.shape == (441, 2)
    r = fb.verify_hmf_field(f)
    assert r["commutativity"]["max"] == 0.0
    assert r["hmf"]["max"] < 1200 * f.spacing**2
    assert fb.classify_field(f) == "hessian"


def test_radial_field_is_skew():
    c = fb.Chart(2, 1.0, 1.9)
    f = fb.radial_skew_field(c, 11, 0.25, np.array([1.5, 0.0]))
    assert fb.classify_field(f) == "skew_hessian"


def test_bridge_reports_coefficient():
    c = fb.Chart(3, 1.0, 0.27)
    star = fb.solve_seed_algebra(c, 1)
    rep = fb.bridge_report(fb.construct_field(c, star, 9, 0.15))
    names = {e["name"] for e in rep["checks"]}
    assert {"sis_alg", "better_form", "sis_diff_ds"} <= names
    assert rep["sis_diff_discrepancy"]
    assert math.isfinite(rep["fitted_ds_coefficient"])


def test_scenario_round_trip():
    doc = {"schema": 1, "mode": "classify",
           "chart": {"dimension": 2, "kappa": 0.0, "domain_radius": 1.0},
           "seed": {"kind": "zero"}}
    rep, code = fb.run(doc)
    assert code == 0
    assert rep["label"] == "manin_frobenius"
    a, _ = fb._frobenius.run_scenario(__import__("json").dumps(doc))
    assert __import__("json").loads(fb.diff_reports(a, a))["deltas"] == []
    with pytest.raises(ValueError):
        fb.run({"schema": 1, "mode": "classify", "chart": {"dimension": 2}})
