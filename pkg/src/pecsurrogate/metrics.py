"""Classification, pointwise and probabilistic evaluation metrics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .dataset import DomainError

PROB_CLIP = 1e-12
INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


def _pair(a, b, min_len=1):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DomainError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < min_len:
        raise DomainError(f"need at least {min_len} samples")
    return a, b


def z_value(level: float) -> float:
    """Two-sided standard normal quantile, e.g. 1.959964 for 0.95."""
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    return float(ndtri(0.5 + level / 2.0))


def _safe_div(num, den):
    return num / den if den else 0.0


# --------------------------------------------------------------------------
# classification


@dataclass
class ClassificationReport:
    bce: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc_pr: float
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self) -> dict:
        return asdict(self)


def binary_cross_entropy(p, y) -> float:
    p, y = _pair(p, y)
    p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def confusion_counts(p, y, threshold=0.5):
    pred = np.asarray(p) >= threshold
    y = np.asarray(y).astype(bool)
    tp = int(np.sum(pred & y))
    fp = int(np.sum(pred & ~y))
    tn = int(np.sum(~pred & ~y))
    fn = int(np.sum(~pred & y))
    return tp, fp, tn, fn


def scores_from_counts(tp, fp, tn, fn) -> dict:
    n = tp + fp + tn + fn
    return {
        "accuracy": _safe_div(tp + tn, n),
        "precision": _safe_div(tp, tp + fp),
        "recall": _safe_div(tp, tp + fn),
        "f1": _safe_div(tp, tp + 0.5 * (fp + fn)),
    }


def precision_recall_curve(p, y):
    """Precision/recall at every distinct score threshold (predict positive iff p >= t).

    Points run from the highest threshold down, with the anchor
    (recall 0, precision 1) prepended.
    """
    p, y = _pair(p, y)
    order = np.argsort(-p, kind="mergesort")
    ps, ys = p[order], y[order]
    tps = np.cumsum(ys)
    fps = np.cumsum(1.0 - ys)
    last = np.r_[np.flatnonzero(np.diff(ps)), ps.size - 1]  # end of each tie block
    tp, fp = tps[last], fps[last]
    total_pos = ys.sum()
    recall = tp / total_pos if total_pos else np.zeros_like(tp)
    precision = tp / (tp + fp)
    return np.r_[0.0, recall], np.r_[1.0, precision], ps[last]


def auc_pr(p, y) -> float:
    """Trapezoidal area under the threshold-swept precision/recall curve (0 if no positives)."""
    _, yy = _pair(p, y)
    if yy.sum() == 0:
        return 0.0
    r, pr, _ = precision_recall_curve(p, y)
    return float(np.sum(np.diff(r) * (pr[1:] + pr[:-1]) / 2.0))


def classification_metrics(probabilities, labels, threshold: float = 0.5) -> ClassificationReport:
    p, y = _pair(probabilities, labels)
    if np.any((p < 0) | (p > 1)):
        raise DomainError("probabilities must lie in [0, 1]")
    tp, fp, tn, fn = confusion_counts(p, y, threshold)
    s = scores_from_counts(tp, fp, tn, fn)
    return ClassificationReport(bce=binary_cross_entropy(p, y), auc_pr=auc_pr(p, y),
                                tp=tp, fp=fp, tn=tn, fn=fn, **s)


# --------------------------------------------------------------------------
# pointwise regression


def pointwise_metrics(y_true, y_pred) -> dict:
    """RMSE, MAE, MAPE (percent) and R^2.

    MAPE skips samples with |y_true| < 1e-9 and reports how many were skipped.
    R^2 is 1 for a perfect fit of a constant target and 0 otherwise when the
    target has no variance.
    """
    y, yh = _pair(y_true, y_pred, min_len=2)
    err = y - yh
    rmse = float(np.sqrt(np.mean(err**2)))
    mae = float(np.mean(np.abs(err)))
    keep = np.abs(y) >= 1e-9
    mape = float(np.mean(np.abs(err[keep] / y[keep])) * 100.0) if keep.any() else float("nan")
    ss_res = float(np.sum(err**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return {"rmse": rmse, "mae": mae, "mape": mape, "r2": r2, "mape_skipped": int((~keep).sum())}


# --------------------------------------------------------------------------
# probabilistic regression


def gaussian_crps(mu, sigma, y) -> np.ndarray:
    """Closed-form CRPS of N(mu, sigma^2) at y; |y - mu| when sigma == 0."""
    mu, sigma, y = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (mu, sigma, y)))
    shape = mu.shape
    out = np.array(np.abs(y - mu), dtype=np.float64, ndmin=1)
    mu, sigma, y = (np.atleast_1d(a) for a in (mu, sigma, y))
    pos = sigma > 0
    z = (y[pos] - mu[pos]) / sigma[pos]
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    out[pos] = sigma[pos] * (z * (2.0 * ndtr(z) - 1.0) + 2.0 * pdf - INV_SQRT_PI)
    return out.reshape(shape) if shape else out[0]


def gaussian_nll(mu, sigma, y) -> np.ndarray:
    """Per-sample negative log density; +inf where sigma == 0 and y != mu."""
    mu, sigma, y = np.broadcast_arrays(*(np.asarray(a, dtype=np.float64) for a in (mu, sigma, y)))
    s = np.maximum(sigma, PROB_CLIP)
    out = 0.5 * np.log(2.0 * math.pi) + np.log(s) + 0.5 * ((y - mu) / s) ** 2
    return np.where((sigma == 0) & (y != mu), np.inf, out)


def interval(mu, sigma, level=0.95):
    z = z_value(level)
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    return mu - z * sigma, mu + z * sigma


def probabilistic_metrics(mu, sigma, y_true, level: float = 0.95) -> dict:
    mu, y = _pair(mu, y_true)
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    if sigma.shape != mu.shape:
        raise DomainError("sigma length mismatch")
    if np.any(sigma < 0):
        raise DomainError("standard deviations must be non-negative")
    lo, hi = interval(mu, sigma, level)
    return {
        "picp": float(np.mean((lo <= y) & (y <= hi))),
        "mpiw": float(np.mean(hi - lo)),
        "crps": float(np.mean(gaussian_crps(mu, sigma, y))),
        "nll": float(np.mean(gaussian_nll(mu, sigma, y))),
    }


@dataclass
class RegressionReport:
    rmse: float
    mae: float
    mape: float
    r2: float
    picp: float
    mpiw: float
    crps: float
    nll: float

    def to_dict(self) -> dict:
        return asdict(self)


def regression_report(mu, sigma, y_true, level=0.95) -> RegressionReport:
    pw = pointwise_metrics(y_true, mu)
    pr = probabilistic_metrics(mu, sigma, y_true, level)
    return RegressionReport(pw["rmse"], pw["mae"], pw["mape"], pw["r2"], **pr)


@dataclass
class CalibrationCurve:
    nominal: np.ndarray
    observed: np.ndarray

    def rows(self):
        return [{"nominal": float(a), "observed": float(b)} for a, b in zip(self.nominal, self.observed)]


def calibration_curve(mu, sigma, y_true, grid) -> CalibrationCurve:
    grid = np.asarray(grid, dtype=np.float64).ravel()
    if grid.size == 0:
        raise DomainError("calibration grid is empty")
    if np.any((grid <= 0) | (grid >= 1)) or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be strictly increasing inside (0, 1)")
    mu, y = _pair(mu, y_true)
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    observed = []
    for level in grid:
        lo, hi = interval(mu, sigma, level)
        observed.append(np.mean((lo <= y) & (y <= hi)))
    return CalibrationCurve(grid, np.array(observed))


def interval_width_histogram(sigma, level=0.95, bins=20):
    """Histogram ``(counts, edges)`` of prediction-interval widths at ``level``."""
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    if sigma.size == 0:
        raise DomainError("no predictions")
    widths = 2.0 * z_value(level) * sigma
    return np.histogram(widths, bins=bins)


# --------------------------------------------------------------------------
# report serialization


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    return v


def dump_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_rows_csv(path, rows, columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])
