import json

import numpy as np
import pytest

from finsler_product import metrics
from finsler_product.classify import (
    PRODUCT_CHECKS,
    PROPERTIES,
    _verdicts,
    classify,
    classify_frames,
    contraction_pairs,
    verify_product,
)
from finsler_product.product import eps_sqrt, minkowski_product, pnorm, product_quantities, sum_function
from finsler_product.sampling import SamplePoint, SamplerConfig, sample_points
from finsler_product.tensors import compute_frame

S30 = SamplerConfig(count=30, seed=1)


def test_euclidean_all_hold():
    rep = classify(metrics.euclidean(3), S30)
    for prop in PROPERTIES:
        assert rep.holds(prop)
        assert rep.verdicts[prop]["max_residual"] == 0.0


def test_sphere_is_berwald():
    rep = classify(metrics.round_sphere(), S30)
    assert rep.holds("berwald")
    assert rep.verdicts["berwald"]["max_residual"] <= 1e-10


def test_randers_is_not_berwald(sin_randers):
    rep = classify(sin_randers, S30)
    assert not rep.holds("berwald")
    assert not rep.holds("weakly_berwald")
    assert rep.verdicts["weakly_berwald"]["max_residual"] > 1e-3


def test_mroot_all_hold():
    rep = classify(metrics.mroot(2, 4), S30)
    assert all(rep.holds(p) for p in PROPERTIES)


def test_classify_rejects_sphere_mode():
    with pytest.raises(ValueError):
        classify(metrics.euclidean(2), SamplerConfig(count=2, y_mode="sphere"))


def test_determinism(sin_randers):
    a = classify(sin_randers, S30).as_dict()
    b = classify(sin_randers, S30).as_dict()
    assert json.dumps(a) == json.dumps(b)


@pytest.mark.parametrize("metric", ["sin_randers", "sphere"])
def test_scale_robustness(metric, request):
    m = request.getfixturevalue(metric)
    points = sample_points(m, SamplerConfig(count=8, seed=3))
    at_one = [compute_frame(m, p) for p in points]
    at_three = [compute_frame(m, p.scaled(3.0)) for p in points]
    a = classify_frames(m.name, at_one, 1e-6)
    b = classify_frames(m.name, at_three, 1e-6, scales=[3.0] * len(points))
    for prop in PROPERTIES:
        assert a.holds(prop) == b.holds(prop)
        ra, rb = a.verdicts[prop]["max_residual"], b.verdicts[prop]["max_residual"]
        assert rb == pytest.approx(ra, rel=1e-9, abs=1e-14)


def test_implications_enforced():
    pts = [SamplePoint((0,), (1,))]
    res = {
        "berwald": np.array([1e-9]),
        "weakly_berwald": np.array([1e-3]),
        "landsberg": np.array([1e-3]),
        "weakly_landsberg": np.array([1e-3]),
    }
    v = _verdicts(res, pts, 1e-6)
    assert all(v[p]["holds"] for p in PROPERTIES)
    assert v["weakly_berwald"]["implied_by"] == "berwald"
    assert v["weakly_landsberg"]["implied_by"] == "landsberg"
    res["berwald"] = np.array([1.0])
    res["landsberg"] = np.array([0.0])
    v = _verdicts(res, pts, 1e-6)
    assert not v["berwald"]["holds"] and not v["weakly_berwald"]["holds"]
    assert v["weakly_landsberg"]["holds"]


@pytest.mark.parametrize("metric", ["sin_randers", "sphere"])
def test_reports_never_contradict_lattice(metric, request):
    v = classify(request.getfixturevalue(metric), S30).verdicts
    if v["berwald"]["holds"]:
        assert v["weakly_berwald"]["holds"] and v["landsberg"]["holds"]
    if v["landsberg"]["holds"]:
        assert v["weakly_landsberg"]["holds"]


# --- product verification ---------------------------------------------------------

def test_euclid_mroot_eps_sqrt():
    pm = minkowski_product(metrics.euclidean(2), metrics.mroot(2, 4), eps_sqrt(0.5), S30)
    rep = verify_product(pm, S30)
    assert rep.passed
    for c in rep.checks[:-1]:
        assert c["max_residual"] <= 1e-7, c
    assert rep.classification["product"]["berwald"]["holds"]


def test_randers_euclid_sum_not_weakly_berwald(sin_randers):
    pm = minkowski_product(sin_randers, metrics.euclidean(2), sum_function(), S30)
    rep = verify_product(pm, S30)
    assert rep.passed
    assert not rep.classification["factor1"]["weakly_berwald"]["holds"]
    assert not rep.classification["product"]["weakly_berwald"]["holds"]
    assert rep.check("theorem_consistency")["max_residual"] == 0


def test_sphere_sphere_pnorm_spray_blocks(sphere):
    pm = minkowski_product(sphere, sphere, pnorm(2), S30)
    rep = verify_product(pm, S30)
    assert rep.check("spray_blocks")["max_residual"] <= 1e-8
    assert rep.passed


def test_report_layout(sphere):
    pm = minkowski_product(sphere, metrics.euclidean(2), eps_sqrt(0.5), S30)
    rep = verify_product(pm, SamplerConfig(count=5))
    assert [c["id"] for c in rep.checks] == [c.id for c in PRODUCT_CHECKS]
    assert len(rep.rows) == 5 * (len(PRODUCT_CHECKS) - 1) + 1
    json.dumps(rep.as_dict())


def test_tolerance_override_and_unknown_names(sphere):
    pm = minkowski_product(sphere, metrics.euclidean(2), eps_sqrt(0.5), S30)
    s = SamplerConfig(count=3)
    rep = verify_product(pm, s, tolerances={"hessian_blocks": 1e-30})
    c = rep.check("hessian_blocks")
    assert c["tolerance"] == 1e-30
    assert c["passed"] == (c["max_residual"] <= 1e-30)
    assert rep.passed == all(x["passed"] for x in rep.checks)
    with pytest.raises(KeyError):
        verify_product(pm, s, tolerances={"nope": 1.0})


def test_verify_needs_product():
    with pytest.raises(TypeError):
        verify_product(metrics.euclidean(2), SamplerConfig(count=2))


def test_third_contraction_coefficient(sphere, sin_randers):
    """Only the -1/Delta coefficient reproduces G^{ih'} H_{h'j'}; -2/Delta is off by a factor of two."""
    pm = minkowski_product(sphere, sin_randers, eps_sqrt(0.5), S30)
    for p in sample_points(pm, SamplerConfig(count=10)):
        fr = compute_frame(pm, p)
        q = product_quantities(pm, p)
        lhs, rhs = contraction_pairs(q, fr.G_upper, pm.m)[2]
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)
        _, doubled = contraction_pairs(q, fr.G_upper, pm.m, mixed_hessian_coeff=-2.0)[2]
        np.testing.assert_allclose(doubled, 2 * lhs, atol=1e-12)
