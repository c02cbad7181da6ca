import numpy as np
import pytest

import oracles
from latentis.classic_lvm import fit_pls, pls_predict
from latentis.dataio import load_model, save_model
from latentis.deep_pls import (
    DplsModel,
    MappingSpec,
    covariance_profile,
    dpls_predict,
    encode_targets,
    fit_dpls,
    fit_gdpls,
    gdpls_predict,
    nonlinear_map,
)
from latentis.errors import DimensionError, RankError


def _regression(seed=1, n=120, m=8, d=2):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    return X, np.tanh(X @ rng.standard_normal((m, d))) + 0.1 * rng.standard_normal((n, d))


def test_single_layer_equals_pls():
    X, Y = _regression()
    a = dpls_predict(fit_dpls(X, Y, 1, [3]), X)
    b = pls_predict(fit_pls(X, Y, 3), X)
    assert np.abs(a - b).max() < 1e-10


def test_exact_linear_recovery():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((100, 6))
    Y = X @ rng.standard_normal((6, 2)) + 3.0
    model = fit_dpls(X, Y, 3, [6, 6, 6])
    assert np.abs(dpls_predict(model, X) - Y).max() < 1e-6


def test_covariance_profile_never_decreases():
    rng = np.random.default_rng(3)
    for _ in range(20):
        X = rng.standard_normal((200, 10))
        Y = X @ rng.standard_normal((10, 2)) + rng.standard_normal((200, 2))
        model = fit_dpls(X, Y, 3, [4, 3, 2])
        prof = covariance_profile(model, X, Y)
        assert len(prof.values) == 3 and prof.is_non_decreasing(1e-9)


def test_profile_single_layer_is_lambda_over_n():
    X, Y = _regression(4)
    model = fit_dpls(X, Y, 1, [2])
    lam = oracles.power_top_singular((X - X.mean(0)).T @ (Y - Y.mean(0)))
    assert covariance_profile(model, X, Y).values[0] == pytest.approx(lam / len(X), rel=1e-10)


def test_duplicated_layer_does_not_decrease():
    X, Y = _regression(5)
    model = fit_dpls(X, Y, 2, [3, 3])
    v = covariance_profile(model, X, Y).values
    assert v[1] >= v[0] - 1e-9


def test_identity_gdpls_is_bitwise_dpls():
    X, Y = _regression(6)
    a = dpls_predict(fit_dpls(X, Y, 3, [5, 4, 2]), X)
    b = gdpls_predict(fit_gdpls(X, Y, 3, [MappingSpec()] * 3, [5, 4, 2]), X)
    assert np.array_equal(a, b)


def test_row_order_invariance_and_forward_only():
    X, Y = _regression(7)
    model = fit_dpls(X, Y, 2, [4, 2])
    Xt = np.random.default_rng(0).standard_normal((15, 8))
    expected = dpls_predict(model, Xt)
    del X, Y
    perm = np.arange(15)[::-1]
    assert np.allclose(dpls_predict(model, Xt[perm]), expected[perm], atol=1e-13)
    assert np.allclose(dpls_predict(model, Xt[3]), expected[3], atol=1e-13)


def test_null_head_predicts_means():
    X, Y = _regression(8)
    model = fit_dpls(X, Y, 1, [2])
    null = DplsModel(model.layers, np.zeros_like(model.head), model.y_mean)
    assert np.allclose(dpls_predict(null, X[:5]), Y.mean(axis=0))


def _clusters(seed=9):
    rng = np.random.default_rng(seed)
    centers = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    c = np.repeat(np.arange(4), 60)
    return centers[c] + 0.2 * rng.standard_normal((240, 2)), np.array([0, 0, 1, 1])[c]


def test_xor_needs_nonlinear_mapping():
    X, y = _clusters()
    poly = fit_gdpls(X, y, 2, [MappingSpec("polynomial2")] * 2, [5, 3], task="classification")
    lin = fit_gdpls(X, y, 2, [MappingSpec()] * 2, [2, 2], task="classification")
    assert np.mean(gdpls_predict(poly, X) == y) == 1.0
    assert np.mean(gdpls_predict(lin, X) == y) <= 0.75


def test_classification_labels_and_scaling_invariance():
    X, y = _clusters(10)
    labels = np.where(y == 1, 7, 3)
    model = fit_gdpls(X, labels, 1, [MappingSpec("polynomial2")], [5], task="classification")
    pred = gdpls_predict(model, X)
    assert set(np.unique(pred)) <= {3, 7}
    onehot, _ = encode_targets(labels, "classification")
    scaled = fit_gdpls(X, 5.0 * onehot, 1, [MappingSpec("polynomial2")], [5], task="classification")
    assert np.array_equal(np.array([3, 7])[gdpls_predict(scaled, X)], pred)
    raw = dpls_predict(model, X, raw=True)
    assert raw.shape == (len(X), 2)


def test_single_class_truth():
    onehot, labels = encode_targets(np.full(5, 4), "classification")
    assert labels.tolist() == [4] and onehot.shape == (5, 1)


class TestMappings:
    X = np.random.default_rng(12).standard_normal((30, 3))

    def test_identity(self):
        assert np.array_equal(nonlinear_map(MappingSpec(), self.X), self.X)

    def test_polynomial_width(self):
        assert nonlinear_map(MappingSpec("polynomial2"), self.X[:, :2]).shape == (30, 5)
        assert nonlinear_map(MappingSpec("polynomial2"), self.X).shape == (30, 9)

    @pytest.mark.parametrize("kind", ["tanh_expand", "random_fourier"])
    def test_random_kinds_are_seeded(self, kind):
        a = nonlinear_map(MappingSpec(kind, 40, seed=3), self.X)
        b = nonlinear_map(MappingSpec(kind, 40, seed=3), self.X)
        c = nonlinear_map(MappingSpec(kind, 40, seed=4), self.X)
        assert a.shape == (30, 40) and np.array_equal(a, b) and not np.array_equal(a, c)

    @pytest.mark.parametrize("kw", [dict(kind="cubic"), dict(kind="tanh_expand"),
                                    dict(kind="random_fourier", output_dim=5, gamma=0.0)])
    def test_invalid_spec(self, kw):
        with pytest.raises(ValueError):
            MappingSpec(**kw)

    def test_non_finite_input(self):
        with pytest.raises(ValueError):
            nonlinear_map(MappingSpec(), np.array([[np.nan]]))


def test_determinism_and_round_trip(tmp_path):
    X, Y = _regression(13)
    maps = [MappingSpec("random_fourier", 30, seed=1), MappingSpec("tanh_expand", 10, seed=2)]
    a = fit_gdpls(X, Y, 2, maps, [4, 3])
    b = fit_gdpls(X, Y, 2, maps, [4, 3])
    assert gdpls_predict(a, X).tobytes() == gdpls_predict(b, X).tobytes()
    save_model(a, tmp_path / "g.json")
    assert gdpls_predict(load_model(tmp_path / "g.json"), X).tobytes() == gdpls_predict(a, X).tobytes()


def test_errors():
    X, Y = _regression(14)
    with pytest.raises(RankError, match="achievable depth"):
        fit_dpls(X, Y, 2, [3, 4])
    with pytest.raises(ValueError):
        fit_dpls(X, Y, 2, [3])
    with pytest.raises(DimensionError):
        fit_dpls(X, Y[:-1], 1, [2])
    with pytest.raises(ValueError):
        fit_gdpls(X, Y, 2, [MappingSpec()], [2, 2])
    with pytest.raises(DimensionError):
        dpls_predict(fit_dpls(X, Y, 1, [2]), np.ones((2, 3)))
