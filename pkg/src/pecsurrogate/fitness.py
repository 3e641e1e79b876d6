"""Soft-penalty multi-objective fitness built from a feasibility classifier and a surrogate.

For a candidate design::

    P        = 1 - P(feasible)                  classifier confidence in infeasibility
    (mu, s)  = surrogate prediction per target  physical units
    [L, U]   = mu -/+ z(level) * s              95% by default
    Y1, Y2   = uniform draws in [L, U]          (mu in deterministic mode)
    Y1      <- clip(100 * Y1, 0, 100)
    F        = (100 - Y1)^2 + (t - Y2)^2 + PF * P

Stochastic draws come from a stream keyed by ``(seed, hash(candidate))`` so a
candidate re-evaluated within a run always gets the same value.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .converter import DEFAULT_BOUNDS, ParameterBounds
from .dataset import DomainError
from .metrics import z_value

MODES = ("stochastic", "deterministic")
PENALTIES = ("soft", "hard")
OBJECTIVES = ("multi", "efficiency", "temperature")


class Classifier(Protocol):
    def predict_proba(self, X) -> np.ndarray: ...


class Regressor(Protocol):
    def predict(self, X) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class FitnessContext:
    classifier: Classifier
    regressor: Regressor
    goal_temp: float = 28.0
    penalty_factor: float = 5.0
    level: float = 0.95
    mode: str = "stochastic"
    seed: int = 0
    penalty: str = "soft"
    objective: str = "multi"
    bounds: ParameterBounds = DEFAULT_BOUNDS

    def __post_init__(self):
        if self.penalty_factor < 0:
            raise DomainError("penalty factor must be non-negative")
        if not 0.0 < self.level < 1.0:
            raise DomainError("level must lie in (0, 1)")
        if not 0.0 <= self.goal_temp <= 125.0:
            raise DomainError("goal temperature must lie in [0, 125] degC")
        if self.mode not in MODES or self.penalty not in PENALTIES or self.objective not in OBJECTIVES:
            raise DomainError("unknown mode/penalty/objective")


@dataclass(frozen=True)
class FitnessValue:
    total: float
    efficiency_term: float
    temperature_term: float
    penalty_term: float
    y1: float  # sampled efficiency, percent
    y2: float  # sampled temperature, degC
    p_infeasible: float
    eff_mu: float
    eff_std: float
    temp_mu: float
    temp_std: float


def candidate_key(x) -> int:
    """64-bit content hash of a candidate's float64 bytes."""
    b = np.ascontiguousarray(np.asarray(x, dtype=np.float64)).tobytes()
    return int.from_bytes(hashlib.blake2b(b, digest_size=8).digest(), "little")


def candidate_rng(seed: int, x) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, candidate_key(x)])


def _terms(ctx: FitnessContext, mu, sd, p_inf, u):
    """Fitness pieces for one candidate; ``u`` holds two uniforms or None (deterministic)."""
    z = z_value(ctx.level)
    if u is None:
        y1, y2 = mu[0], mu[1]
    else:
        lo1, hi1 = mu[0] - z * sd[0], mu[0] + z * sd[0]
        lo2, hi2 = mu[1] - z * sd[1], mu[1] + z * sd[1]
        y1 = lo1 + u[0] * (hi1 - lo1)
        y2 = lo2 + u[1] * (hi2 - lo2)
    y1 = min(max(100.0 * y1, 0.0), 100.0)
    eff_term = (100.0 - y1) ** 2 if ctx.objective != "temperature" else 0.0
    temp_term = (ctx.goal_temp - y2) ** 2 if ctx.objective != "efficiency" else 0.0
    if ctx.penalty == "soft":
        pen = ctx.penalty_factor * p_inf
    else:
        pen = ctx.penalty_factor if p_inf > 0.5 else 0.0
    total = eff_term + temp_term + pen
    return FitnessValue(float(total), float(eff_term), float(temp_term), float(pen), float(y1), float(y2),
                        float(p_inf), float(mu[0]), float(sd[0]), float(mu[1]), float(sd[1]))


def _check(ctx, X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != 9:
        raise DomainError("candidates need 9 design parameters")
    if not np.all(ctx.bounds.contains(X)):
        raise DomainError("candidate outside the parameter bounds; clamp before evaluating")
    return X


def evaluate_fitness_batch(ctx: FitnessContext, candidates, rng: np.random.Generator | None = None) -> list:
    """Evaluate rows of ``candidates``; predictions are batched, draws are per candidate.

    Without ``rng`` each candidate draws from its own keyed stream. Passing
    an explicit generator makes all candidates share it, in row order.
    """
    X = _check(ctx, candidates)
    p_inf = 1.0 - np.asarray(ctx.classifier.predict_proba(X), dtype=np.float64).reshape(-1)
    mu, sd = ctx.regressor.predict(X)
    mu = np.asarray(mu, dtype=np.float64).reshape(-1, 2)
    sd = np.asarray(sd, dtype=np.float64).reshape(-1, 2)
    out = []
    for i, x in enumerate(X):
        u = None
        if ctx.mode == "stochastic":
            g = rng if rng is not None else candidate_rng(ctx.seed, x)
            u = g.random(2)
        out.append(_terms(ctx, mu[i], sd[i], p_inf[i], u))
    return out


def evaluate_fitness(ctx: FitnessContext, candidate, rng: np.random.Generator | None = None) -> FitnessValue:
    if hasattr(candidate, "to_array"):
        candidate = candidate.to_array()
    return evaluate_fitness_batch(ctx, np.asarray(candidate, dtype=np.float64)[None, :], rng)[0]


class FitnessObjective:
    """Callable adapter for optimizers: ``objective(X) -> fitness array`` with a per-run cache."""

    def __init__(self, ctx: FitnessContext):
        self.ctx = ctx
        self.cache: dict[bytes, FitnessValue] = {}
        self.requested = 0

    def values(self, X) -> list:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        self.requested += X.shape[0]
        keys = [x.tobytes() for x in X]
        missing = [i for i, k in enumerate(keys) if k not in self.cache]
        # a batch may contain duplicates; evaluate each distinct row once
        todo = {}
        for i in missing:
            todo.setdefault(keys[i], i)
        if todo:
            idx = list(todo.values())
            for i, v in zip(idx, evaluate_fitness_batch(self.ctx, X[idx])):
                self.cache[keys[i]] = v
        return [self.cache[k] for k in keys]

    def __call__(self, X) -> np.ndarray:
        return np.array([v.total for v in self.values(X)])

    def details(self, x) -> tuple[float, float]:
        v = self.values(np.asarray(x)[None, :])[0]
        self.requested -= 1  # bookkeeping lookups are not search evaluations
        return v.eff_mu, v.temp_mu
