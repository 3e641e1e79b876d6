"""Labeled design datasets: feasibility labels, Z-standardization, splits and CSV I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

N_FEATURES = 9
FEATURE_COLUMNS = tuple(f"x{i}" for i in range(1, N_FEATURES + 1))
TARGET_COLUMNS = ("y1", "y2")
CSV_HEADER = FEATURE_COLUMNS + TARGET_COLUMNS + ("feasible",)

MAX_JUNCTION_TEMP = 125.0


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class CSVParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def label_feasibility(y1, y2):
    """True iff efficiency lies in [0, 1] and temperature does not exceed 125 degC.

    Works elementwise on arrays; returns a plain bool for scalar input.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    if np.isnan(y1).any() or np.isnan(y2).any():
        raise DomainError("feasibility label undefined for NaN efficiency/temperature")
    out = (y1 >= 0.0) & (y1 <= 1.0) & (y2 <= MAX_JUNCTION_TEMP)
    if out.ndim == 0:
        return bool(out)
    return out


@dataclass(frozen=True)
class LabeledSample:
    x: np.ndarray
    y1: float
    y2: float
    feasible: bool


@dataclass(frozen=True)
class Dataset:
    """Column-oriented container: ``X`` (n, 9), ``y`` (n, 2) and boolean ``feasible`` (n,)."""

    X: np.ndarray
    y: np.ndarray
    feasible: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        feasible = np.ascontiguousarray(self.feasible, dtype=bool)
        if X.ndim != 2 or X.shape[1] != N_FEATURES:
            raise DomainError(f"X must have shape (n, {N_FEATURES}), got {X.shape}")
        if y.shape != (X.shape[0], 2) or feasible.shape != (X.shape[0],):
            raise DomainError("X, y and feasible disagree in row count")
        for arr in (X, y, feasible):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feasible", feasible)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i: int) -> LabeledSample:
        return LabeledSample(self.X[i].copy(), float(self.y[i, 0]), float(self.y[i, 1]), bool(self.feasible[i]))

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], self.feasible[idx])

    def feasible_only(self) -> "Dataset":
        return self.take(np.flatnonzero(self.feasible))

    @property
    def infeasible_fraction(self) -> float:
        return float(1.0 - self.feasible.mean()) if len(self) else 0.0


# --------------------------------------------------------------------------
# Z-standardization


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray

    @property
    def zero_std(self) -> np.ndarray:
        return self.std == 0.0


def fit_standardizer(data) -> ScalerParams:
    """Per-column mean and population (1/N) standard deviation."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] == 0:
        raise DomainError("cannot fit a standardizer on an empty dataset")
    if arr.shape[0] < 2:
        raise DomainError("standardizer needs at least 2 rows")
    return ScalerParams(arr.mean(axis=0), arr.std(axis=0))


def apply_standardizer(data, params: ScalerParams) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    safe = np.where(params.zero_std, 1.0, params.std)
    out = (arr - params.mean) / safe
    return np.where(params.zero_std, 0.0, out)


def invert_standardizer(data, params: ScalerParams) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    return arr * params.std + params.mean


# --------------------------------------------------------------------------
# splits


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    k: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise DomainError("test_fraction must lie in (0, 1)")
        if self.k < 2:
            raise DomainError("k must be at least 2")


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    perm = np.random.default_rng(seed).permutation(n)
    n_test = int(round(n * test_fraction))
    n_test = min(max(n_test, 1), n - 1)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def split(data: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Shuffled train/test split, deterministic in ``spec.seed``."""
    if len(data) < 2:
        raise DomainError("need at least 2 rows to split")
    train_idx, test_idx = split_indices(len(data), spec.test_fraction, spec.seed)
    return data.take(train_idx), data.take(test_idx)


def kfold(n_rows: int, k: int, seed: int) -> list[np.ndarray]:
    """k disjoint, sorted index sets covering ``range(n_rows)``; sizes differ by at most one."""
    if k < 2:
        raise DomainError("k must be at least 2")
    if k > n_rows:
        raise DomainError(f"k={k} exceeds the row count {n_rows}")
    perm = np.random.default_rng(seed).permutation(n_rows)
    return [np.sort(part) for part in np.array_split(perm, k)]


# --------------------------------------------------------------------------
# CSV persistence


def save_csv(path, data: Dataset) -> None:
    path = Path(path)
    lines = [",".join(CSV_HEADER)]
    for x, y, f in zip(data.X.tolist(), data.y.tolist(), data.feasible.tolist()):
        lines.append(",".join([*map(repr, x), *map(repr, y), "1" if f else "0"]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_csv(path) -> Dataset:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    rows = text.splitlines()
    if not rows or tuple(c.strip() for c in rows[0].split(",")) != CSV_HEADER:
        raise CSVParseError(path, 1, f"header must be exactly {','.join(CSV_HEADER)}")
    X, y, feas = [], [], []
    ncol = len(CSV_HEADER)
    for lineno, row in enumerate(rows[1:], start=2):
        if not row.strip():
            continue
        cells = row.split(",")
        if len(cells) != ncol:
            raise CSVParseError(path, lineno, f"expected {ncol} columns, found {len(cells)}")
        try:
            vals = [float(c) for c in cells[:-1]]
        except ValueError as exc:
            raise CSVParseError(path, lineno, f"non-numeric cell ({exc})") from None
        if not all(math.isfinite(v) for v in vals):
            raise CSVParseError(path, lineno, "non-finite value")
        flag = cells[-1].strip()
        if flag not in ("0", "1"):
            raise CSVParseError(path, lineno, f"feasible must be 0 or 1, got {flag!r}")
        X.append(vals[:N_FEATURES])
        y.append(vals[N_FEATURES:])
        feas.append(flag == "1")
    if not X:
        return Dataset(np.empty((0, N_FEATURES)), np.empty((0, 2)), np.empty(0, dtype=bool))
    return Dataset(np.array(X), np.array(y), np.array(feas))
