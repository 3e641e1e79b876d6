"""Two-target surrogate: efficiency and temperature regressors behind one predict call.

Regressors are fitted in standardized feature and target space on feasible
rows only; :meth:`SurrogateRegressor.predict` maps back to physical units
(mean through the inverse affine map, std scaled by the target std).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import nn, serialize
from ..dataset import Dataset, DomainError, ScalerParams, apply_standardizer, fit_standardizer
from . import gpr as gpr_mod
from . import ngboost as ngb_mod
from .mcdropout import MCDropoutConfig, fit_mc_dropout, mc_predict

KINDS = ("ngboost", "gpr", "mcdropout")
TARGETS = ("efficiency", "temperature")


@dataclass
class SurrogateRegressor:
    kind: str
    x_scaler: ScalerParams
    y_scaler: ScalerParams
    models: list  # per target (ngboost/gpr); single network for mcdropout
    options: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)

    def predict_standardized(self, Z):
        Z = np.atleast_2d(Z)
        if self.kind == "ngboost":
            preds = [m.predict(Z) for m in self.models]
            return np.column_stack([p.mean for p in preds]), np.column_stack([p.std for p in preds])
        if self.kind == "gpr":
            preds = [gpr_mod.gpr_predict(m, Z, include_noise=True) for m in self.models]
            return np.column_stack([p.mean for p in preds]), np.column_stack([p.std for p in preds])
        p = mc_predict(self.models[0], Z, passes=self.options.get("passes", 100), seed=self.options.get("seed", 0))
        return p.mean, p.std

    def predict(self, X):
        """``(mean, std)`` arrays of shape (n, 2) in physical units: columns efficiency, temperature."""
        if hasattr(X, "to_array"):
            X = X.to_array()
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != 9:
            raise DomainError("expected 9 design parameters")
        mu_z, sd_z = self.predict_standardized(apply_standardizer(X, self.x_scaler))
        return mu_z * self.y_scaler.std + self.y_scaler.mean, sd_z * self.y_scaler.std


@dataclass(frozen=True)
class RegressorConfig:
    kind: str = "ngboost"
    ngboost: ngb_mod.NGBoostConfig = ngb_mod.NGBoostConfig()
    gpr: gpr_mod.GPRConfig = gpr_mod.GPRConfig()
    mcdropout: MCDropoutConfig = MCDropoutConfig()


def train_surrogate(train: Dataset, config: RegressorConfig = RegressorConfig(), val: Dataset | None = None
                    ) -> SurrogateRegressor:
    """Fit the configured regressor on the feasible rows of ``train``."""
    if config.kind not in KINDS:
        raise DomainError(f"regressor kind must be one of {KINDS}")
    train = train.feasible_only()
    if len(train) < 10:
        raise DomainError("need at least 10 feasible training rows")
    xs = fit_standardizer(train.X)
    ys = fit_standardizer(train.y)
    Z = apply_standardizer(train.X, xs)
    Y = apply_standardizer(train.y, ys)
    if val is not None:
        val = val.feasible_only()
        Zv, Yv = apply_standardizer(val.X, xs), apply_standardizer(val.y, ys)
    curves = {}
    if config.kind == "ngboost":
        models = []
        for j, name in enumerate(TARGETS):
            kw = {"X_val": Zv, "y_val": Yv[:, j]} if val is not None and len(val) else {}
            m = ngb_mod.fit_ngboost(Z, Y[:, j], config.ngboost, **kw)
            models.append(m)
            curves[name] = {"train_nll": m.train_nll, "val_nll": m.val_nll}
        return SurrogateRegressor("ngboost", xs, ys, models, curves=curves)
    if config.kind == "gpr":
        models = [gpr_mod.fit_gpr(Z, Y[:, j], None, config.gpr) for j in range(2)]
        return SurrogateRegressor("gpr", xs, ys, models)
    net, hist = fit_mc_dropout(Z, Y, config.mcdropout)
    curves["mse"] = {"train_loss": hist.train_loss}
    return SurrogateRegressor("mcdropout", xs, ys, [net],
                              options={"passes": config.mcdropout.passes, "seed": config.mcdropout.seed},
                              curves=curves)


def save_surrogate(path, model: SurrogateRegressor) -> None:
    meta = {"kind": model.kind, "options": model.options, "parts": []}
    arrays = [model.x_scaler.mean, model.x_scaler.std, model.y_scaler.mean, model.y_scaler.std]
    for m in model.models:
        if model.kind == "ngboost":
            pm, pa = ngb_mod.ngboost_to_blob(m)
        elif model.kind == "gpr":
            pm, pa = gpr_mod.gpr_to_blob(m)
        else:
            pm, pa = nn.network_to_blob(m)
        meta["parts"].append({"meta": pm, "n_arrays": len(pa)})
        arrays += pa
    serialize.write_blob(path, "surrogate", 1, meta, arrays)


def load_surrogate(path) -> SurrogateRegressor:
    _, _, meta, arrays = serialize.read_blob(path, expect_kind="surrogate")
    xs = ScalerParams(arrays[0], arrays[1])
    ys = ScalerParams(arrays[2], arrays[3])
    pos = 4
    models = []
    loader = {"ngboost": ngb_mod.ngboost_from_blob, "gpr": gpr_mod.gpr_from_blob,
              "mcdropout": nn.network_from_blob}[meta["kind"]]
    for part in meta["parts"]:
        k = part["n_arrays"]
        models.append(loader(part["meta"], arrays[pos:pos + k]))
        pos += k
    return SurrogateRegressor(meta["kind"], xs, ys, models, options=meta["options"])
