"""Univariate Gaussian predictive distributions in (mu, log sigma) coordinates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..metrics import z_value

SIGMA_FLOOR = 1e-6
LOG_SIGMA_FLOOR = math.log(SIGMA_FLOOR)


@dataclass(frozen=True)
class GaussianPrediction:
    """Per-target predictive mean and standard deviation (arrays broadcast together)."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        if np.any(std < 0) or not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))):
            raise ValueError("GaussianPrediction needs finite mean and non-negative finite std")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


def prediction_interval(pred: GaussianPrediction, level: float = 0.95):
    """Symmetric central interval ``mean -/+ z(level) * std``."""
    z = z_value(level)
    return pred.mean - z * pred.std, pred.mean + z * pred.std


def nll(y, mu, log_sigma) -> np.ndarray:
    """Negative log density of N(mu, exp(log_sigma)^2) at y."""
    return 0.5 * math.log(2.0 * math.pi) + log_sigma + 0.5 * ((y - mu) * np.exp(-log_sigma)) ** 2


def nll_gradient(y, mu, log_sigma):
    """Ordinary gradient of the NLL w.r.t. (mu, log sigma)."""
    inv_var = np.exp(-2.0 * log_sigma)
    r = y - mu
    return (mu - y) * inv_var, 1.0 - r * r * inv_var


def fisher_diag(log_sigma):
    """Diagonal Fisher information of N(mu, sigma) in (mu, log sigma): (1/sigma^2, 2)."""
    return np.exp(-2.0 * log_sigma), 2.0 * np.ones_like(np.asarray(log_sigma, dtype=float))


def natural_gradient_gaussian(y, mu, log_sigma):
    """Inverse-Fisher-preconditioned NLL gradient: (mu - y, (1 - (y - mu)^2 / sigma^2) / 2)."""
    r = y - mu
    return mu - y, 0.5 * (1.0 - r * r * np.exp(-2.0 * log_sigma))
