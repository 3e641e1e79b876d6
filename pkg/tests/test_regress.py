import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import gpr_dense, natural_gradient_fd, ngboost_replay
from pecsurrogate import nn
from pecsurrogate.converter import generate_dataset
from pecsurrogate.dataset import DomainError
from pecsurrogate.metrics import probabilistic_metrics
from pecsurrogate.regress import gaussian, gpr, mcdropout, ngboost, surrogate, tree


# ---- Gaussian helpers -----------------------------------------------------


@pytest.mark.parametrize("y,mu,sigma,expected", [(0.0, 1.0, 1.0, (1.0, 0.0)), (2.0, 2.0, 3.0, (0.0, 0.5)),
                                                 (1.0, 0.0, 1.0, (-1.0, 0.0))])
def test_natural_gradient_examples(y, mu, sigma, expected):
    g = gaussian.natural_gradient_gaussian(y, mu, math.log(sigma))
    assert g == pytest.approx(expected, abs=1e-15)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-3, 3))
def test_natural_gradient_matches_fisher_fd(y, mu, ls):
    fd = natural_gradient_fd(y, mu, ls)
    g = gaussian.natural_gradient_gaussian(y, mu, ls)
    scale = 1.0 + ((y - mu) * math.exp(-ls)) ** 2
    assert abs(g[0] - fd[0]) < 1e-5 * scale * max(1.0, math.exp(2 * ls))
    assert abs(g[1] - fd[1]) < 1e-5 * scale


def test_natural_gradient_is_inverse_fisher_times_gradient(rng):
    y, mu, ls = rng.normal(size=3)
    gm, gl = gaussian.nll_gradient(y, mu, ls)
    fm, fl = gaussian.fisher_diag(ls)
    nm, nl = gaussian.natural_gradient_gaussian(y, mu, ls)
    assert nm == pytest.approx(gm / fm, rel=1e-12)
    assert nl == pytest.approx(gl / fl, rel=1e-12)


def test_prediction_interval():
    lo, hi = gaussian.prediction_interval(gaussian.GaussianPrediction(0.0, 1.0))
    assert (lo, hi) == pytest.approx((-1.959964, 1.959964), abs=1e-6)
    lo, hi = gaussian.prediction_interval(gaussian.GaussianPrediction(3.0, 0.0))
    assert lo == hi == 3.0
    lo, hi = gaussian.prediction_interval(gaussian.GaussianPrediction(np.zeros(3), np.array([1.0, 2.0, 4.0])))
    np.testing.assert_allclose(hi - lo, 2 * 1.959963984540054 * np.array([1.0, 2.0, 4.0]))


def test_gaussian_prediction_validation():
    with pytest.raises(ValueError):
        gaussian.GaussianPrediction(0.0, -1.0)


# ---- trees ------------------------------------------------------------------


def test_tree_depth_and_leaf_size(rng):
    X = rng.normal(size=(400, 3))
    g = np.sin(X[:, 0]) + X[:, 1] ** 2
    for extra in (True, False):
        t = tree.fit_tree(X, g, max_depth=4, min_leaf=5, rng=rng, extra=extra)
        assert t.max_used_depth() <= 4
        leaf_of = {}
        pred = t.predict(X)
        assert np.isfinite(pred).all()
        for v in np.unique(pred):
            leaf_of[v] = int((pred == v).sum())
        assert min(leaf_of.values()) >= 5


def test_exhaustive_tree_finds_step(rng):
    X = rng.random((200, 2))
    g = np.where(X[:, 1] > 0.6, 1.0, -1.0)
    t = tree.fit_tree(X, g, max_depth=1, min_leaf=1, rng=rng, extra=False)
    assert t.feature[0] == 1
    np.testing.assert_allclose(t.predict(X), g)


# ---- NGBoost ----------------------------------------------------------------


@pytest.fixture(scope="module")
def toy():
    r = np.random.default_rng(0)
    x = r.uniform(-1, 1, (2000, 1))
    y = x[:, 0] + r.normal(0, 0.1, 2000)
    xt = r.uniform(-1, 1, (1000, 1))
    yt = xt[:, 0] + r.normal(0, 0.1, 1000)
    return x, y, xt, yt


@pytest.fixture(scope="module")
def toy_model(toy):
    x, y, _, _ = toy
    return ngboost.fit_ngboost(x, y, ngboost.NGBoostConfig(iters=300, seed=1))


def test_ngboost_toy_accuracy_and_coverage(toy, toy_model):
    _, _, xt, yt = toy
    p = toy_model.predict(xt)
    assert np.sqrt(np.mean((p.mean - yt) ** 2)) <= 0.15
    picp = probabilistic_metrics(p.mean, p.std, yt)["picp"]
    assert 0.90 <= picp <= 0.98


def test_ngboost_train_nll_non_increasing(toy_model):
    assert np.max(np.diff(toy_model.train_nll)) <= 1e-6


def test_ngboost_replay_oracle(toy_model):
    x = np.array([0.5])
    mu, sd = ngboost_replay(toy_model, x)
    p = toy_model.predict(x[None, :])
    assert p.mean[0] == pytest.approx(mu, abs=1e-10)
    assert p.std[0] == pytest.approx(sd, rel=1e-10)


def test_ngboost_zero_stages_is_marginal_mle(rng):
    y = rng.normal(3.0, 2.0, 100)
    m = ngboost.fit_ngboost(rng.normal(size=(100, 2)), y, ngboost.NGBoostConfig(iters=0))
    p = m.predict(rng.normal(size=(5, 2)))
    np.testing.assert_allclose(p.mean, y.mean())
    np.testing.assert_allclose(p.std, y.std())


def test_ngboost_constant_target(rng):
    X = rng.normal(size=(50, 3))
    m = ngboost.fit_ngboost(X, np.full(50, 4.2), ngboost.NGBoostConfig(iters=20))
    p = m.predict(X)
    np.testing.assert_allclose(p.mean, 4.2)
    assert np.all(p.std <= gaussian.SIGMA_FLOOR * 10)
    assert np.all(p.std >= gaussian.SIGMA_FLOOR)


def test_ngboost_needs_rows():
    with pytest.raises(DomainError):
        ngboost.fit_ngboost(np.ones((5, 2)), np.ones(5))


def test_ngboost_early_stopping_truncates(toy):
    x, y, xt, yt = toy
    cfg = ngboost.NGBoostConfig(iters=400, lr=0.5, early_stopping_rounds=5, seed=2)
    m = ngboost.fit_ngboost(x[:300], y[:300], cfg, xt[:200], yt[:200])
    assert m.n_stages < 400
    assert m.n_stages == int(np.argmin(m.val_nll)) + 1


def test_ngboost_blob_round_trip(tmp_path, toy_model, toy):
    ngboost.save_ngboost(tmp_path / "m.bin", toy_model)
    back = ngboost.load_ngboost(tmp_path / "m.bin")
    xt = toy[2]
    assert toy_model.predict(xt).mean.tobytes() == back.predict(xt).mean.tobytes()


# ---- GPR --------------------------------------------------------------------


def test_gpr_matches_dense_inverse(rng):
    for _ in range(5):
        X = rng.normal(size=(50, 3))
        y = np.sin(X).sum(1) + 0.1 * rng.normal(size=50)
        Xs = rng.normal(size=(20, 3))
        k = gpr.KernelParams(1.3, 1.1, 0.05)
        m = gpr.fit_gpr(X, y, k)
        mean, var = gpr.gpr_posterior(m, Xs)
        dm, dv = gpr_dense(X, y, Xs, 1.3, 1.1, 0.05)
        np.testing.assert_allclose(mean, dm, atol=1e-8)
        np.testing.assert_allclose(var, np.maximum(dv, 0), atol=1e-8)
        K = gpr.rbf(X, X, k) + 0.05 * np.eye(50)
        assert np.max(np.abs(K @ m.alpha - y)) < 1e-8


def test_gpr_interpolates_single_point():
    k = gpr.KernelParams(1.0, 1.0, 1e-8)
    m = gpr.fit_gpr(np.array([[0.3, -0.2]]), np.array([1.7]), k)
    p = gpr.gpr_predict(m, np.array([[0.3, -0.2]]))
    assert p.mean[0] == pytest.approx(1.7, abs=1e-6)
    assert p.std[0] ** 2 < 1e-6


def test_gpr_reverts_to_prior_far_away(rng):
    k = gpr.KernelParams(2.0, 0.5, 1e-2)
    m = gpr.fit_gpr(rng.normal(size=(30, 2)), rng.normal(size=30), k)
    mean, var = gpr.gpr_posterior(m, np.array([[100.0, 100.0]]))
    assert abs(mean[0]) < 1e-12
    assert var[0] == pytest.approx(2.0)


def test_gpr_variance_bounds(rng):
    k = gpr.KernelParams(1.5, 0.7, 1e-3)
    X = rng.normal(size=(80, 2))
    m = gpr.fit_gpr(X, rng.normal(size=80), k)
    p = gpr.gpr_predict(m, np.vstack([X, rng.normal(size=(200, 2)) * 3]), include_noise=True)
    assert np.all(p.std >= 0)
    assert np.all(p.std**2 <= 1.5 + 1e-3 + 1e-12)


def test_gpr_jitter_escalation_and_failure():
    X = np.zeros((5, 1))  # duplicated inputs make K singular
    m = gpr.fit_gpr(X, np.ones(5), gpr.KernelParams(1.0, 1.0, 0.0))
    assert m.jitter > 0
    with pytest.raises(gpr.NumericalError):
        gpr.fit_gpr(np.zeros((5, 1)), np.ones(5), gpr.KernelParams(1.0, 1.0, -1.0))


def test_gpr_subsample_and_grid(rng):
    X = rng.normal(size=(300, 2))
    y = X[:, 0] + 0.05 * rng.normal(size=300)
    cfg = gpr.GPRConfig(cap=100, seed=3)
    m = gpr.fit_gpr(X, y, None, cfg)
    assert m.X.shape == (100, 2)
    assert m.kernel.lengthscale in cfg.lengthscales and m.kernel.noise_var in cfg.noise_vars


# ---- MC dropout -------------------------------------------------------------


def _dropout_net(p, seed=0):
    return nn.Network.init(nn.NetworkSpec.mlp(3, (16, 8), 2, output_activation="identity", dropout=p,
                                              loss="mse"), seed)


def test_mc_no_dropout_is_deterministic(rng):
    net = _dropout_net(0.0)
    X = rng.normal(size=(4, 3))
    p = mcdropout.mc_predict(net, X, passes=10)
    np.testing.assert_array_equal(p.mean, nn.forward(net, X))
    assert np.all(p.std == 0)


def test_mc_fixed_seed_reproducible(rng):
    net = _dropout_net(0.2)
    X = rng.normal(size=(4, 3))
    a = mcdropout.mc_predict(net, X, passes=50, seed=9)
    b = mcdropout.mc_predict(net, X, passes=50, seed=9)
    assert a.mean.tobytes() == b.mean.tobytes() and a.std.tobytes() == b.std.tobytes()


def test_mc_converges_with_passes():
    net = _dropout_net(0.2, 4)
    x = np.array([0.5, -0.3, 1.0])
    a = mcdropout.mc_predict(net, x, passes=10_000, seed=1)
    b = mcdropout.mc_predict(net, x, passes=100_000, seed=2)
    np.testing.assert_allclose(a.std, b.std, rtol=0.05)


def test_mc_rejects_single_pass():
    with pytest.raises(DomainError):
        mcdropout.mc_predict(_dropout_net(0.1), np.zeros(3), passes=1)


# ---- surrogate wrapper ------------------------------------------------------


@pytest.fixture(scope="module")
def small_data():
    return generate_dataset(1500, seed=8)


@pytest.mark.parametrize("kind", ["ngboost", "gpr", "mcdropout"])
def test_surrogate_kinds_round_trip(kind, small_data, tmp_path):
    cfg = surrogate.RegressorConfig(kind, ngboost.NGBoostConfig(iters=30), gpr.GPRConfig(cap=300),
                                    mcdropout.MCDropoutConfig(epochs=5, passes=20))
    model = surrogate.train_surrogate(small_data, cfg)
    X = small_data.X[:20]
    mu, sd = model.predict(X)
    assert mu.shape == (20, 2) and sd.shape == (20, 2)
    assert np.all(sd >= 0) and np.all(np.isfinite(mu))
    surrogate.save_surrogate(tmp_path / "s.bin", model)
    back = surrogate.load_surrogate(tmp_path / "s.bin")
    mu2, sd2 = back.predict(X)
    assert mu.tobytes() == mu2.tobytes() and sd.tobytes() == sd2.tobytes()


def test_surrogate_uses_feasible_rows_only(small_data):
    cfg = surrogate.RegressorConfig("ngboost", ngboost.NGBoostConfig(iters=1))
    model = surrogate.train_surrogate(small_data, cfg)
    feas = small_data.feasible_only()
    np.testing.assert_allclose(model.y_scaler.mean, feas.y.mean(0))


def test_surrogate_rejects_unknown_kind(small_data):
    with pytest.raises(DomainError):
        surrogate.train_surrogate(small_data, surrogate.RegressorConfig("forest"))
