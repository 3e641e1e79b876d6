"""Natural gradient boosting for a univariate Gaussian, with extra-trees base learners."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..dataset import DomainError
from .. import serialize
from .gaussian import LOG_SIGMA_FLOOR, SIGMA_FLOOR, GaussianPrediction, natural_gradient_gaussian, nll
from .tree import fit_tree, predict_heap


@dataclass(frozen=True)
class NGBoostConfig:
    iters: int = 500
    lr: float = 0.05
    max_depth: int = 4
    min_leaf: int = 5
    minibatch_frac: float = 0.5
    seed: int = 0
    early_stopping_rounds: int | None = None


@dataclass
class NgboostModel:
    init: np.ndarray  # (mu0, log_sigma0)
    feature: np.ndarray  # (S, 2, 2**D - 1)
    threshold: np.ndarray  # (S, 2, 2**D - 1)
    value: np.ndarray  # (S, 2, 2**D)
    scale: np.ndarray  # (S,)
    lr: float
    depth: int
    train_nll: list = field(default_factory=list)
    val_nll: list = field(default_factory=list)

    @property
    def n_stages(self) -> int:
        return self.scale.shape[0]

    def params(self, X) -> tuple[np.ndarray, np.ndarray]:
        """(mu, log_sigma) before the sigma floor."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        n = X.shape[0]
        mu = np.full(n, self.init[0])
        ls = np.full(n, self.init[1])
        S = self.n_stages
        if S:
            I = self.feature.shape[-1]
            out = predict_heap(self.feature.reshape(2 * S, I), self.threshold.reshape(2 * S, I),
                               self.value.reshape(2 * S, -1), X, self.depth).reshape(S, 2, n)
            step = np.tensordot(self.lr * self.scale, out, axes=(0, 0))
            mu = mu - step[0]
            ls = ls - step[1]
        return mu, ls

    def predict(self, X) -> GaussianPrediction:
        mu, ls = self.params(X)
        return GaussianPrediction(mu, np.maximum(np.exp(ls), SIGMA_FLOOR))


def _mean_nll(y, mu, ls):
    return float(np.mean(nll(y, mu, np.maximum(ls, LOG_SIGMA_FLOOR))))


def line_search(y, mu, ls, d_mu, d_ls, max_scale: float = 256.0, min_scale: float = 2.0**-10) -> float:
    """Largest power-of-two step along ``-(d_mu, d_ls)`` that lowers the mean NLL.

    Starts at 1, doubles while the loss keeps improving (up to ``max_scale``),
    then halves until the loss is below its starting value. Returns 0 if no
    tried step improves.
    """
    base = _mean_nll(y, mu, ls)

    def loss(s):
        return _mean_nll(y, mu - s * d_mu, ls - s * d_ls)

    scale = 1.0
    cur = loss(scale)
    if np.isfinite(cur) and cur < base:
        while scale < max_scale:
            nxt = loss(2.0 * scale)
            if not (np.isfinite(nxt) and nxt < cur):
                break
            scale, cur = 2.0 * scale, nxt
        return scale
    while scale > min_scale:
        scale *= 0.5
        cur = loss(scale)
        if np.isfinite(cur) and cur < base:
            return scale
    return 0.0


def fit_ngboost(X, y, config: NGBoostConfig = NGBoostConfig(), X_val=None, y_val=None) -> NgboostModel:
    """Stagewise natural-gradient boosting of (mu, log sigma).

    Each stage fits one tree per parameter to the per-sample natural
    gradients on a row subsample, line-searches a step scale on the full
    training set and applies ``theta -= lr * scale * tree(x)``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    n = y.size
    if n < 10:
        raise DomainError("NGBoost needs at least 10 training rows")
    rng = np.random.default_rng(config.seed)
    init = np.array([y.mean(), max(math.log(max(y.std(), SIGMA_FLOOR)), LOG_SIGMA_FLOOR)])
    mu = np.full(n, init[0])
    ls = np.full(n, init[1])
    if X_val is not None:
        X_val = np.asarray(X_val, dtype=np.float64)
        y_val = np.asarray(y_val, dtype=np.float64).ravel()
        mu_v = np.full(y_val.size, init[0])
        ls_v = np.full(y_val.size, init[1])
    m = max(int(round(config.minibatch_frac * n)), min(n, 2 * config.min_leaf))
    feats, thrs, vals, scales = [], [], [], []
    train_curve, val_curve = [], []
    best_val, best_iter = np.inf, -1
    for it in range(config.iters):
        g_mu, g_ls = natural_gradient_gaussian(y, mu, ls)
        sub = np.sort(rng.permutation(n)[:m])
        trees = [fit_tree(X[sub], g[sub], max_depth=config.max_depth, min_leaf=config.min_leaf, rng=rng)
                 for g in (g_mu, g_ls)]
        f_mu, f_ls = (t.predict(X) for t in trees)
        s = line_search(y, mu, ls, f_mu, f_ls)
        mu = mu - config.lr * s * f_mu
        ls = np.maximum(ls - config.lr * s * f_ls, LOG_SIGMA_FLOOR)
        feats.append([t.feature for t in trees])
        thrs.append([t.threshold for t in trees])
        vals.append([t.value for t in trees])
        scales.append(s)
        train_curve.append(_mean_nll(y, mu, ls))
        if X_val is not None:
            mu_v = mu_v - config.lr * s * trees[0].predict(X_val)
            ls_v = np.maximum(ls_v - config.lr * s * trees[1].predict(X_val), LOG_SIGMA_FLOOR)
            v = _mean_nll(y_val, mu_v, ls_v)
            val_curve.append(v)
            if v < best_val - 1e-12:
                best_val, best_iter = v, it
            elif config.early_stopping_rounds and it - best_iter >= config.early_stopping_rounds:
                keep = best_iter + 1
                feats, thrs, vals, scales = feats[:keep], thrs[:keep], vals[:keep], scales[:keep]
                break
    D = config.max_depth
    return NgboostModel(
        init=init,
        feature=np.array(feats, dtype=np.int64).reshape(-1, 2, 2**D - 1),
        threshold=np.array(thrs, dtype=np.float64).reshape(-1, 2, 2**D - 1),
        value=np.array(vals, dtype=np.float64).reshape(-1, 2, 2**D),
        scale=np.array(scales, dtype=np.float64),
        lr=config.lr,
        depth=D,
        train_nll=train_curve,
        val_nll=val_curve,
    )


def ngboost_predict(model: NgboostModel, X) -> GaussianPrediction:
    return model.predict(X)


def ngboost_to_blob(model: NgboostModel):
    meta = {"lr": model.lr, "depth": model.depth}
    return meta, [model.init, model.feature, model.threshold, model.value, model.scale]


def ngboost_from_blob(meta, arrays) -> NgboostModel:
    init, feature, threshold, value, scale = arrays
    return NgboostModel(init, feature, threshold, value, scale, float(meta["lr"]), int(meta["depth"]))


def save_ngboost(path, model: NgboostModel) -> None:
    meta, arrays = ngboost_to_blob(model)
    serialize.write_blob(path, "ngboost", 1, meta, arrays)


def load_ngboost(path) -> NgboostModel:
    _, _, meta, arrays = serialize.read_blob(path, expect_kind="ngboost")
    return ngboost_from_blob(meta, arrays)
