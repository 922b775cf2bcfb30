import json
import math

import numpy as np
import pytest

import gcmm


def two_blobs(n=120, seed=0):
    rng = np.random.default_rng(seed)
    half = n // 2
    a = rng.normal(0.0, 0.5, size=(half, 2))
    b = rng.normal(6.0, 0.5, size=(n - half, 2))
    return np.vstack([a, b])


def test_fit_returns_model_and_trace():
    data = two_blobs()
    out = gcmm.fit(data, k=2, seed=3, tol=1e-6, max_iters=60)
    assert set(out) >= {"model", "converged", "iterations", "log_likelihoods"}
    assert out["iterations"] > 0
    assert out["log_likelihoods"][-1] >= out["log_likelihoods"][0]
    doc = json.loads(out["model"])
    assert doc["schema"] == "gcmm-v1"
    assert len(doc["weights"]) == 2


def test_fit_is_deterministic():
    data = two_blobs(seed=1)
    a = gcmm.fit(data, k=2, seed=9, max_iters=40)
    b = gcmm.fit(data, k=2, seed=9, max_iters=40)
    assert a["model"] == b["model"]
    assert a["log_likelihoods"] == b["log_likelihoods"]


def test_sample_and_log_density():
    data = two_blobs(seed=2)
    model = gcmm.fit(data, k=2, seed=1, max_iters=60)["model"]
    draws = gcmm.sample(model, n=500, seed=4)
    assert draws.shape == (500, 2)
    assert np.isfinite(draws).all()
    again = gcmm.sample(model, n=500, seed=4)
    assert np.array_equal(draws, again)

    dens = gcmm.log_density(model, draws[:50])
    assert dens.shape == (50,)
    assert np.isfinite(dens).all()


def test_unsync_pool_changes_the_fit():
    data = two_blobs(seed=5)
    base = gcmm.fit(data, k=2, seed=2, max_iters=40)
    pooled = gcmm.fit(
        data, k=2, seed=2, max_iters=40, unsync=[[9.0, 10.0, 11.0, 12.0], []]
    )
    assert base["model"] != pooled["model"]


def test_fit_gmm():
    data = two_blobs(seed=3)
    out = gcmm.fit_gmm(data, k=2, seed=1, max_iters=80)
    doc = json.loads(out["model"])
    assert doc["schema"] == "gmm-v1"
    draws = gcmm.sample(out["model"], n=200, seed=8)
    assert draws.shape == (200, 2)
    dens = gcmm.log_density(out["model"], data[:10])
    assert np.isfinite(dens).all()


def test_ks_two_sample():
    rng = np.random.default_rng(7)
    a = rng.normal(size=400)
    b = rng.normal(size=400)
    same = gcmm.ks_two_sample(a.tolist(), b.tolist())
    assert 0.0 <= same["statistic"] <= 1.0
    assert same["p_value"] > 0.01

    shifted = gcmm.ks_two_sample(a.tolist(), (b + 3.0).tolist())
    assert shifted["p_value"] < 1e-6
    assert shifted["n1"] == 400


def test_aic_counts():
    out = gcmm.aic(-10.0, k=1, d=2, kind="gmm")
    assert out["param_count"] == 5.0
    assert out["aic"] == 30.0
    assert gcmm.aic(0.0, k=3, d=2, kind="gcmm")["param_count"] == 5.0


def test_select_k_small():
    data = two_blobs(n=80, seed=4)
    report = gcmm.select_k(data, k_min=1, k_max=2, seed=3, tol=1e-4, max_iters=25)
    assert report["best_k"] in (1, 2)
    assert len(report["rows"]) == 2
    assert all(row["ok"] for row in report["rows"])


def test_error_mapping():
    with pytest.raises(ValueError):
        gcmm.fit(np.zeros((1, 2)), k=1)  # too few rows
    with pytest.raises(ValueError):
        gcmm.ks_two_sample([1.0, 2.0], [3.0, 4.0])  # below the length floor
    with pytest.raises(ValueError):
        gcmm.aic(0.0, k=1, d=1, kind="elsewhere")


def test_ground_truth_and_benchmark():
    spec = gcmm.default_benchmark_spec()
    assert json.loads(spec)["schema"] == "gcmm-bench-spec-v1"
    truth = gcmm.make_ground_truth(spec)
    draws = gcmm.sample(truth, n=200, seed=1)
    assert draws.shape == (200, 2)
    assert (draws > 0).all()  # lognormal margins

    report = json.loads(
        gcmm.run_benchmark(
            n=140,
            holdout_n=140,
            resample_n=140,
            keep_fraction=0.8,
            seeds=[1],
            fixed_k=2,
            tol=1e-4,
            max_iters=20,
        )
    )
    assert report["schema"] == "gcmm-bench-report-v1"
    assert len(report["seeds"]) == 1
    assert report["seeds"][0]["ok"]
    assert math.isfinite(report["median_p"]["gcmm"])
