"""Feasibility classifiers over physical-unit designs.

Label 1 means *feasible*. A false positive is an infeasible design predicted
feasible. Each trained classifier carries the feature scaler it was fitted
with, so callers always pass physical units.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn, serialize
from .dataset import (
    Dataset,
    DomainError,
    ScalerParams,
    apply_standardizer,
    fit_standardizer,
    kfold,
)
from .metrics import binary_cross_entropy


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    epochs: int = 150
    lr: float = 1e-3
    batch_size: int = 128
    hidden: tuple = (64, 32)
    seed: int = 0
    # logistic baseline: full-batch gradient descent
    logistic_lr: float = 0.5
    logistic_steps: int = 2000


@dataclass
class FeasibilityClassifier:
    kind: str  # "ann" | "logistic"
    scaler: ScalerParams
    network: nn.Network | None = None
    coef: np.ndarray | None = None
    intercept: float = 0.0
    metadata: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)

    def logit_or_proba(self, Z):
        if self.kind == "ann":
            return nn.forward(self.network, Z)[:, 0]
        z = Z @ self.coef + self.intercept
        return 1.0 / (1.0 + np.exp(-z))

    def predict_proba(self, X) -> np.ndarray:
        """P(feasible) for designs in physical units; (n, 9) array or a single 9-vector/DesignPoint."""
        if hasattr(X, "to_array"):
            X = X.to_array()
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != 9:
            raise DomainError(f"expected 9 design parameters, got {X.shape[1]}")
        if np.isnan(X).any():
            raise DomainError("NaN in classifier input")
        p = np.clip(self.logit_or_proba(apply_standardizer(X, self.scaler)), 0.0, 1.0)
        return float(p[0]) if single else p

    def predict(self, X, threshold: float = 0.5):
        return np.asarray(self.predict_proba(X)) >= threshold


def predict_proba(model: FeasibilityClassifier, design) -> float | np.ndarray:
    return model.predict_proba(design)


def _check_labels(y):
    if y.min() == y.max():
        raise TrainingError("training data contains a single class")


def train_classifier(train: Dataset, config: ClassifierConfig = ClassifierConfig(), val: Dataset | None = None
                     ) -> FeasibilityClassifier:
    """Train the 9-64-32-1 ReLU/sigmoid network with Adam on BCE."""
    y = train.feasible.astype(np.float64)
    _check_labels(y)
    scaler = fit_standardizer(train.X)
    Z = apply_standardizer(train.X, scaler)
    spec = nn.NetworkSpec.mlp(9, config.hidden, 1, loss="bce")
    net = nn.Network.init(spec, [config.seed, 1])
    kw = {}
    if val is not None:
        kw = {"X_val": apply_standardizer(val.X, scaler), "y_val": val.feasible.astype(np.float64)}
    hist = nn.train(net, Z, y, epochs=config.epochs, lr=config.lr, batch_size=config.batch_size,
                    seed=[config.seed, 2], **kw)
    return FeasibilityClassifier(
        kind="ann", scaler=scaler, network=net,
        metadata={"epochs": config.epochs, "lr": config.lr, "seed": config.seed,
                  "batch_size": config.batch_size, "hidden": list(config.hidden)},
        history=asdict(hist),
    )


def logistic_gradient(Z, y, coef, intercept):
    p = 1.0 / (1.0 + np.exp(-(Z @ coef + intercept)))
    r = (p - y) / len(y)
    return Z.T @ r, float(r.sum())


def train_logistic_baseline(train: Dataset, config: ClassifierConfig = ClassifierConfig(),
                            val: Dataset | None = None, steps: int | None = None) -> FeasibilityClassifier:
    """Logistic regression by full-batch gradient descent on BCE from zero weights."""
    y = train.feasible.astype(np.float64)
    _check_labels(y)
    scaler = fit_standardizer(train.X)
    Z = apply_standardizer(train.X, scaler)
    coef = np.zeros(Z.shape[1])
    b = 0.0
    steps = config.logistic_steps if steps is None else steps
    losses = []
    for _ in range(steps):
        gw, gb = logistic_gradient(Z, y, coef, b)
        coef = coef - config.logistic_lr * gw
        b = b - config.logistic_lr * gb
    model = FeasibilityClassifier(kind="logistic", scaler=scaler, coef=coef, intercept=b,
                                  metadata={"lr": config.logistic_lr, "steps": steps})
    losses.append(binary_cross_entropy(model.predict_proba(train.X), y))
    model.history = {"train_loss": losses}
    return model


@dataclass
class CVReport:
    folds: list  # dicts: fold, bce, accuracy
    mean_bce: float
    mean_accuracy: float
    best_bce: float
    best_accuracy: float

    def rows(self) -> list:
        """Per-fold rows followed by the 'Avg.' and 'Best' summary rows."""
        out = [dict(r) for r in self.folds]
        out.append({"fold": "Avg.", "bce": self.mean_bce, "accuracy": self.mean_accuracy})
        out.append({"fold": "Best", "bce": self.best_bce, "accuracy": self.best_accuracy})
        return out

    def to_dict(self) -> dict:
        return {"rows": self.rows()}


def cross_validate(data: Dataset, k: int = 5, config: ClassifierConfig = ClassifierConfig(),
                   trainer=train_classifier) -> CVReport:
    if k < 2:
        raise DomainError("k must be at least 2")
    folds = kfold(len(data), k, config.seed)
    rows = []
    for i, test_idx in enumerate(folds, start=1):
        train_idx = np.sort(np.concatenate([f for j, f in enumerate(folds, start=1) if j != i]))
        model = trainer(data.take(train_idx), config)
        test = data.take(test_idx)
        p = model.predict_proba(test.X)
        y = test.feasible.astype(np.float64)
        rows.append({"fold": i, "bce": binary_cross_entropy(p, y),
                     "accuracy": float(np.mean((p >= 0.5) == test.feasible))})
    bces = [r["bce"] for r in rows]
    accs = [r["accuracy"] for r in rows]
    return CVReport(rows, float(np.mean(bces)), float(np.mean(accs)), float(min(bces)), float(max(accs)))


# --------------------------------------------------------------------------
# persistence: network blob plus the scaler block


def save_classifier(path, model: FeasibilityClassifier) -> None:
    meta = {"kind": model.kind, "metadata": model.metadata}
    arrays = [model.scaler.mean, model.scaler.std]
    if model.kind == "ann":
        net_meta, net_arrays = nn.network_to_blob(model.network)
        meta["network"] = net_meta
        arrays += net_arrays
    else:
        arrays += [model.coef, np.array([model.intercept])]
    serialize.write_blob(path, "classifier", 1, meta, arrays)


def load_classifier(path) -> FeasibilityClassifier:
    _, _, meta, arrays = serialize.read_blob(path, expect_kind="classifier")
    scaler = ScalerParams(arrays[0], arrays[1])
    if meta["kind"] == "ann":
        net = nn.network_from_blob(meta["network"], arrays[2:])
        return FeasibilityClassifier("ann", scaler, network=net, metadata=meta["metadata"])
    return FeasibilityClassifier("logistic", scaler, coef=arrays[2], intercept=float(arrays[3][0]),
                                 metadata=meta["metadata"])
