"""Monte Carlo dropout regressor: dropout stays active at prediction time."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import nn
from ..dataset import DomainError
from .gaussian import GaussianPrediction


@dataclass(frozen=True)
class MCDropoutConfig:
    hidden: tuple = (64, 32)
    dropout: float = 0.1
    epochs: int = 100
    lr: float = 1e-3
    batch_size: int = 128
    passes: int = 100
    seed: int = 0


def fit_mc_dropout(Z, Y, config: MCDropoutConfig = MCDropoutConfig()) -> tuple[nn.Network, nn.TrainHistory]:
    """Train a ReLU MLP with hidden-layer dropout on squared error; ``Y`` is (n, n_targets)."""
    Z = np.asarray(Z, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64).reshape(Z.shape[0], -1)
    spec = nn.NetworkSpec.mlp(Z.shape[1], config.hidden, Y.shape[1], output_activation="identity",
                              dropout=config.dropout, loss="mse")
    net = nn.Network.init(spec, [config.seed, 11])
    hist = nn.train(net, Z, Y, epochs=config.epochs, lr=config.lr, batch_size=config.batch_size,
                    seed=[config.seed, 12])
    return net, hist


def mc_predict(net: nn.Network, X, passes: int = 100, seed=0) -> GaussianPrediction:
    """Mean and (population) std over ``passes`` stochastic forward passes.

    Returns arrays shaped (n, n_outputs), or (n_outputs,) for a single input row.
    """
    if passes < 2:
        raise DomainError("mc_predict needs at least 2 passes")
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if not any(net.spec.dropout):
        out = nn.forward(net, X)
        return GaussianPrediction(out[0] if single else out, np.zeros(out.shape[1:] if single else out.shape))
    n = X.shape[0]
    per_chunk = max(1, 200_000 // max(n, 1))  # bounds memory of the replicated batch

    def sweep(fn):
        # replays the same dropout masks on every call
        rng = np.random.default_rng(seed)
        done = 0
        while done < passes:
            k = min(per_chunk, passes - done)
            fn(nn.forward(net, np.tile(X, (k, 1)), "mc", rng).reshape(k, n, -1))
            done += k

    acc = np.zeros((n, net.spec.sizes[-1]))

    def add(out):
        acc[...] += out.sum(axis=0)

    sweep(add)
    mean = acc / passes
    acc[...] = 0.0

    def add_sq(out):
        acc[...] += ((out - mean) ** 2).sum(axis=0)

    sweep(add_sq)
    var = acc / passes
    std = np.sqrt(var)
    if single:
        return GaussianPrediction(mean[0], std[0])
    return GaussianPrediction(mean, std)
