"""Exact Gaussian-process regression with an isotropic RBF kernel."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .. import serialize
from .gaussian import GaussianPrediction


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class KernelParams:
    signal_var: float = 1.0
    lengthscale: float = 1.0
    noise_var: float = 1e-2


@dataclass(frozen=True)
class GPRConfig:
    cap: int = 2000
    seed: int = 0
    lengthscales: tuple = (0.5, 1.0, 2.0, 4.0)
    signal_vars: tuple = (0.5, 1.0, 2.0)
    noise_vars: tuple = (1e-4, 1e-3, 1e-2, 1e-1)
    jitter_start: float = 1e-8
    jitter_max: float = 1e-4


@dataclass
class GprModel:
    X: np.ndarray
    L: np.ndarray  # lower Cholesky factor of K + (noise + jitter) I
    alpha: np.ndarray
    kernel: KernelParams
    jitter: float


def rbf(A, B, kernel: KernelParams) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    d2 = np.sum(A * A, 1)[:, None] + np.sum(B * B, 1)[None, :] - 2.0 * A @ B.T
    return kernel.signal_var * np.exp(-0.5 * np.maximum(d2, 0.0) / kernel.lengthscale**2)


def _cholesky(K, noise, jitter_start, jitter_max):
    jitter = 0.0
    eye = np.eye(K.shape[0])
    while True:
        try:
            return np.linalg.cholesky(K + (noise + jitter) * eye), jitter
        except np.linalg.LinAlgError:
            jitter = jitter_start if jitter == 0.0 else jitter * 10.0
            if jitter > jitter_max * (1 + 1e-9):
                raise NumericalError("Cholesky failed even with maximal jitter") from None


def log_marginal_likelihood(X, y, kernel: KernelParams, config: GPRConfig = GPRConfig()) -> float:
    K = rbf(X, X, kernel)
    L, _ = _cholesky(K, kernel.noise_var, config.jitter_start, config.jitter_max)
    alpha = cho_solve((L, True), y)
    return float(-0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * len(y) * math.log(2 * math.pi))


def select_kernel(X, y, config: GPRConfig = GPRConfig()) -> KernelParams:
    """Grid search maximizing the log marginal likelihood."""
    best, best_lml = None, -np.inf
    for ell, sf, sn in itertools.product(config.lengthscales, config.signal_vars, config.noise_vars):
        k = KernelParams(sf, ell, sn)
        try:
            lml = log_marginal_likelihood(X, y, k, config)
        except NumericalError:
            continue
        if lml > best_lml:
            best, best_lml = k, lml
    if best is None:
        raise NumericalError("no kernel on the grid admits a Cholesky factorization")
    return best


def subsample(X, y, cap, seed):
    if X.shape[0] <= cap:
        return X, y
    idx = np.sort(np.random.default_rng(seed).permutation(X.shape[0])[:cap])
    return X[idx], y[idx]


def fit_gpr(X, y, kernel: KernelParams | None = None, config: GPRConfig = GPRConfig()) -> GprModel:
    """Condition a zero-mean GP on (X, y); rows beyond ``config.cap`` are subsampled with ``config.seed``.

    When ``kernel`` is None it is chosen by :func:`select_kernel` on the same subsample.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    X, y = subsample(X, y, config.cap, config.seed)
    if kernel is None:
        kernel = select_kernel(X, y, config)
    L, jitter = _cholesky(rbf(X, X, kernel), kernel.noise_var, config.jitter_start, config.jitter_max)
    alpha = cho_solve((L, True), y)
    return GprModel(X, L, alpha, kernel, jitter)


def gpr_posterior(model: GprModel, Xs):
    """Latent posterior mean and variance (variance clamped at 0)."""
    Ks = rbf(model.X, Xs, model.kernel)
    mean = Ks.T @ model.alpha
    v = solve_triangular(model.L, Ks, lower=True)
    var = model.kernel.signal_var - np.sum(v * v, axis=0)
    return mean, np.maximum(var, 0.0)


def gpr_predict(model: GprModel, Xs, include_noise: bool = False) -> GaussianPrediction:
    mean, var = gpr_posterior(model, np.atleast_2d(Xs))
    if include_noise:
        var = var + model.kernel.noise_var
    return GaussianPrediction(mean, np.sqrt(var))


def gpr_to_blob(model: GprModel):
    k = model.kernel
    meta = {"signal_var": k.signal_var, "lengthscale": k.lengthscale, "noise_var": k.noise_var,
            "jitter": model.jitter}
    return meta, [model.X, model.L, model.alpha]


def gpr_from_blob(meta, arrays) -> GprModel:
    k = KernelParams(meta["signal_var"], meta["lengthscale"], meta["noise_var"])
    return GprModel(arrays[0], arrays[1], arrays[2], k, meta["jitter"])


def save_gpr(path, model: GprModel) -> None:
    meta, arrays = gpr_to_blob(model)
    serialize.write_blob(path, "gpr", 1, meta, arrays)


def load_gpr(path) -> GprModel:
    _, _, meta, arrays = serialize.read_blob(path, expect_kind="gpr")
    return gpr_from_blob(meta, arrays)
