import math
import os
import pathlib

import numpy as np
import pytest

import clipsgd

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_cosh_objective_matches_closed_form():
    f = clipsgd.cosh(1.0, 1.0)
    assert f.dimension == 1
    assert f.value([0.5]) == pytest.approx(math.cosh(0.5))
    assert f.gradient([0.5])[0] == pytest.approx(math.sinh(0.5))
    assert f.gap([0.0]) == 0.0


def test_quartic_gradient_against_numpy():
    a = np.array(clipsgd.harmonic_diagonal(5))
    f = clipsgd.quartic_synthetic(a.tolist(), certify_samples=200)
    x = np.linspace(-1.0, 1.0, 5)
    s = float(np.sum((a * x) ** 2))
    np.testing.assert_allclose(f.value(x), s**2, rtol=1e-12)
    np.testing.assert_allclose(f.gradient(x), 4.0 * s * a**2 * x, rtol=1e-12)


def test_clip_factor_and_threshold():
    assert clipsgd.clip_factor(4.0, 2.0) == pytest.approx(0.5)
    assert clipsgd.clip_factor(1.0, 2.0) == 1.0
    c = clipsgd.threshold("standard", 1.0, 2.0, 0.0, 100)
    assert c == pytest.approx(5.0)
    eta, alpha = clipsgd.step_scale("standard", 10.0, 1.0, 2.0, 0.0, 100)
    assert alpha == pytest.approx(0.5)
    assert eta == pytest.approx(1.0 / (16 * 11))


def test_run_deterministic_and_reproducible():
    f = clipsgd.cosh()
    a = clipsgd.run(f, [3.0], 2000, variant="conservative", record_every=100)
    b = clipsgd.run(f, [3.0], 2000, variant="conservative", record_every=100)
    assert a["final_gap"] == b["final_gap"]
    assert a["T1_size"] + a["T2_size"] == 2000
    assert a["oracle_calls"] == 4000
    assert a["records"]["t"][0] == 0
    assert a["final_gap"] < f.gap([3.0])


def test_ensemble_with_noise():
    f = clipsgd.quartic_synthetic(clipsgd.harmonic_diagonal(4), certify_samples=500)
    s = clipsgd.run_ensemble(f, [1.0] * 4, 200, list(range(8)), noise="sub_gaussian", sigma=1.0,
                             record_every=50, workers=2)
    assert len(s["final_gaps"]) == 8
    assert s["failures"] == 0
    assert s["checkpoints"]["oracle_calls"][-1] == 400


def test_unknown_variant_raises():
    with pytest.raises(ValueError):
        clipsgd.run(clipsgd.cosh(), [1.0], 10, variant="nope")


def test_verification_check_runs():
    names = [c["name"] for c in clipsgd.list_checks()]
    assert "martingale" in names
    reports = clipsgd.run_check("hierarchy")
    assert reports[0]["status"] == "pass"


def test_experiment_bundle(tmp_path):
    out = tmp_path / "bundle"
    res = clipsgd.run_experiment(str(ROOT / "experiments" / "cosh_deterministic.json"), str(out))
    assert not res["any_failed_method"]
    for name in ["manifest.json", "summary.csv", "finals.csv", "convergence.svg", "checks.csv"]:
        assert (out / name).exists()


def test_ingest(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,y\n1,x,2\n2,y,3\n3,x,5\n4,,1\n")
    d = clipsgd.ingest_csv(str(p), "y", shuffle=False)
    X = np.asarray(d["X"])
    assert X.shape == (4, 4)
    np.testing.assert_allclose(X[:, 0], 1.0)
    np.testing.assert_allclose(X[:, 1].mean(), 0.0, atol=1e-12)
    np.testing.assert_allclose(X[:, 2:].sum(axis=1), 1.0)
