import numpy as np
import pytest

import oracles
from latentis.classic_lvm import GmmModel, fit_gmm, gmm_loglik, gmm_responsibilities
from latentis.errors import RankError
from latentis.synth import GmmSpec, gen_gmm


def test_single_component_is_closed_form():
    X = np.random.default_rng(1).standard_normal((200, 3)) @ np.diag([1, 2, 3]) + 5
    model = fit_gmm(X, 1)
    assert model.weights[0] == pytest.approx(1.0)
    assert np.allclose(model.means[0], X.mean(axis=0), atol=1e-12)
    Xc = X - X.mean(axis=0)
    assert np.allclose(model.covariances[0], Xc.T @ Xc / len(X), atol=1e-12)
    assert np.all(gmm_responsibilities(model, X) == 1.0)


def test_separated_components_recovered():
    spec = GmmSpec(np.array([0.5, 0.5]), np.array([[0.0, 0.0], [10.0, 10.0]]),
                   np.array([np.eye(2)] * 2), 1000, seed=2)
    X, _ = gen_gmm(spec)
    model = fit_gmm(X, 2)
    order = np.argsort(model.means[:, 0])
    assert np.abs(model.means[order] - spec.means).max() < 0.2
    assert np.abs(model.weights - 0.5).max() < 0.05
    trace = model.loglik_trace
    assert np.all(np.diff(trace) >= -1e-8 * np.abs(trace[:-1]))
    assert abs(model.weights.sum() - 1) < 1e-12
    for C in model.covariances:
        assert np.allclose(C, C.T) and np.all(np.linalg.eigvalsh(C) > 0)


def _fixed_model():
    return GmmModel(
        weights=np.array([0.2, 0.5, 0.3]),
        means=np.array([[0.0, 0.0], [5.0, 1.0], [-3.0, 4.0]]),
        covariances=np.array([np.eye(2), [[2.0, 0.3], [0.3, 1.0]], 0.5 * np.eye(2)]),
        loglik_trace=np.zeros(1),
    )


def test_loglik_matches_naive_sum():
    model = _fixed_model()
    X = np.random.default_rng(3).standard_normal((20, 2)) * 3
    naive = oracles.gmm_loglik_naive(X, model.weights, model.means, model.covariances)
    assert abs(gmm_loglik(model, X) - naive) < 1e-10


def test_point_at_mean_far_apart():
    model = _fixed_model()
    far = GmmModel(model.weights, model.means * 100, model.covariances, model.loglik_trace)
    r = gmm_responsibilities(far, far.means[0])
    assert r[0] > 0.999 and abs(r.sum() - 1) < 1e-12


def test_errors():
    with pytest.raises(RankError):
        fit_gmm(np.ones((2, 2)), 3)
