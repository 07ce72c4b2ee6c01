import math

import numpy as np
import pytest

from molbbo.gp import (DOT_PRODUCT, RBF, KernelSpec, Prediction,
                       expected_improvement, fit, kernel_eval, predict)
from molbbo.gp import _DotLml, _generic_lml, _make_kernel_fn


def dense_oracle(spec, X, y, Xq):
    """Posterior by direct dense inversion, the slow textbook way."""
    n = len(X)
    K = np.array([[kernel_eval(spec, X[i], X[j]) for j in range(n)]
                  for i in range(n)])
    K += spec.noise_variance * np.eye(n)
    Kinv = np.linalg.inv(K)
    mean_y = float(np.mean(y))
    yc = y - mean_y
    out = []
    for q in Xq:
        k = np.array([kernel_eval(spec, x, q) for x in X])
        mu = mean_y + k @ Kinv @ yc
        var = kernel_eval(spec, q, q) - k @ Kinv @ k
        out.append((float(mu), math.sqrt(max(var, 0.0))))
    return out


def random_spec(rng, family):
    return KernelSpec(family=family,
                      signal_variance=float(rng.uniform(0.3, 3.0)),
                      length_scale=float(rng.uniform(0.5, 2.0)),
                      offset=float(rng.uniform(0.2, 2.0)),
                      noise_variance=float(rng.uniform(1e-4, 1e-2)))


def test_posterior_matches_dense_inversion():
    rng = np.random.default_rng(0)
    for family in (RBF, DOT_PRODUCT):
        for _ in range(6):
            d = int(rng.integers(3, 9))
            X = rng.normal(size=(5, d))
            y = rng.normal(size=5)
            spec = random_spec(rng, family)
            model = fit(X, y, spec, optimize=False)
            Xq = rng.normal(size=(4, d))
            oracle = dense_oracle(spec, X, y, Xq)
            for q, (mu, sd) in zip(Xq, oracle):
                p = predict(model, q)
                assert abs(p.mean - mu) < 1e-8
                assert abs(p.stddev - sd) < 1e-8


def test_interpolates_training_data_at_low_noise():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(6, 4))
    y = rng.normal(size=6)
    spec = KernelSpec(family=RBF, noise_variance=1e-10)
    model = fit(X, y, spec, optimize=False)
    for x, target in zip(X, y):
        p = predict(model, x)
        assert abs(p.mean - target) < 1e-4
        assert p.stddev < 1e-3


def test_single_point_prediction_centering():
    spec = KernelSpec(family=DOT_PRODUCT, noise_variance=1e-8)
    model = fit(np.array([[1.0, 0.0]]), np.array([2.0]), spec, optimize=False)
    p = predict(model, np.array([1.0, 0.0]))
    assert abs(p.mean - 2.0) < 1e-6
    assert p.stddev < 1e-3


def test_prediction_far_from_data_reverts_to_mean():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(5, 3))
    y = np.array([1.0, 3.0, 2.0, 4.0, 5.0])
    spec = KernelSpec(family=RBF, signal_variance=1.5, length_scale=1.0)
    model = fit(X, y, spec, optimize=False)
    p = predict(model, np.full(3, 100.0))
    assert abs(p.mean - np.mean(y)) < 1e-6
    assert abs(p.stddev - math.sqrt(1.5)) < 1e-6


def test_expected_improvement_closed_forms():
    # zero stddev degenerates to the hinge
    assert expected_improvement(Prediction(2.0, 0.0), 1.0, 0.0) == 1.0
    assert expected_improvement(Prediction(0.5, 0.0), 1.0, 0.0) == 0.0
    # at Z = 0 the value is stddev * phi(0)
    ei = expected_improvement(Prediction(1.0, 2.0), 1.0, 0.0)
    assert abs(ei - 2.0 * 0.3989422804014327) < 1e-12
    # xi shifts the improvement threshold
    assert (expected_improvement(Prediction(1.0, 1.0), 0.0, 0.5)
            < expected_improvement(Prediction(1.0, 1.0), 0.0, 0.0))
    # never negative even far below the incumbent
    assert expected_improvement(Prediction(-50.0, 0.1), 0.0, 0.0) >= 0.0


def test_expected_improvement_monte_carlo_small():
    rng = np.random.default_rng(3)
    for _ in range(5):
        mu = float(rng.normal())
        sd = float(rng.uniform(0.1, 2.0))
        fmax = float(rng.normal())
        xi = float(rng.uniform(0.0, 0.5))
        draws = rng.normal(mu, sd, size=200_000)
        sample = np.maximum(draws - fmax - xi, 0.0)
        mc = float(np.mean(sample))
        se = float(np.std(sample) / math.sqrt(len(sample)))
        ei = expected_improvement(Prediction(mu, sd), fmax, xi)
        assert abs(ei - mc) < 4 * se + 1e-12


def test_fit_improves_log_marginal_likelihood():
    rng = np.random.default_rng(4)
    for family in (RBF, DOT_PRODUCT):
        X = rng.normal(size=(12, 3))
        y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=12)
        model = fit(X, y, KernelSpec(family=family), rng=np.random.default_rng(5))
        info = model.fit_info
        assert info["lml"] >= max(info["start_lmls"]) - 1e-9


def test_dot_lml_matches_generic():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(10, 4))
    y = rng.normal(size=10)
    yc = y - y.mean()
    fast = _DotLml(X, yc)
    for _ in range(20):
        spec = random_spec(rng, DOT_PRODUCT)
        k_of = _make_kernel_fn(spec, X)
        slow = _generic_lml(k_of, yc,
                            {"signal_variance": spec.signal_variance,
                             "offset": spec.offset,
                             "noise_variance": spec.noise_variance})
        quick = fast(spec.signal_variance, spec.offset, spec.noise_variance)
        assert abs(slow - quick) < 1e-7 * max(1.0, abs(slow))


def test_fixed_bounds_pin_parameter():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(8, 3))
    y = rng.normal(size=8)
    spec = KernelSpec(family=RBF, length_scale=1.25,
                      length_scale_bounds=(1.25, 1.25))
    model = fit(X, y, spec, rng=np.random.default_rng(8))
    assert model.spec.length_scale == 1.25


def test_noise_bounds_default_scales_with_variance():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(8, 3))
    y = 100.0 * rng.normal(size=8)
    model = fit(X, y, KernelSpec(family=RBF), rng=np.random.default_rng(10))
    lo, hi = model.fit_info["noise_bounds"]
    var = float(np.var(y))
    assert abs(lo - 1e-8 * var) < 1e-12 * var
    assert abs(hi - 1e-1 * var) < 1e-12 * var
    assert lo <= model.spec.noise_variance <= hi


def test_kernel_eval_formulas():
    x = np.array([1.0, 2.0])
    z = np.array([0.5, -1.0])
    rbf = KernelSpec(family=RBF, signal_variance=2.0, length_scale=1.5)
    expect = 2.0 * math.exp(-float(np.sum((x - z) ** 2)) / (2 * 1.5 ** 2))
    assert abs(kernel_eval(rbf, x, z) - expect) < 1e-12
    dot = KernelSpec(family=DOT_PRODUCT, signal_variance=0.7, offset=1.3)
    assert abs(kernel_eval(dot, x, z) - 0.7 * (1.3 + float(x @ z))) < 1e-12


def test_stddev_floored_at_zero():
    rng = np.random.default_rng(11)
    X = np.repeat(rng.normal(size=(1, 3)), 6, axis=0)  # duplicated rows
    y = np.full(6, 2.5)
    model = fit(X, y, KernelSpec(family=RBF, noise_variance=1e-9),
                optimize=False)
    p = predict(model, X[0])
    assert p.stddev >= 0.0
