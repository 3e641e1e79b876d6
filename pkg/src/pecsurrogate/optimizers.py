"""Metaheuristics over box-bounded real vectors: GA, PSO, SA, tabu search, stochastic hill climbing.

All optimizers minimize ``objective(X) -> f`` where ``X`` is (k, d) and ``f`` is (k,).
Every run spends the same number of objective evaluations (2000 with the
defaults) and records one trace entry per iteration:

    GA     20 individuals x 100 generations (the initial population is generation 1)
    PSO    20 particles x 100 iterations (iteration 1 evaluates the initial swarm)
    SA     100 temperature stages x 20 single moves (the start point is the first move)
    TS     20 random starts, then 99 iterations x 20 neighbours
    SHC    100 iterations x 20 single moves (the start point is the first move)
    random 100 batches x 20 uniform samples
"""

from __future__ import annotations

import csv
import math
import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .converter import ParameterBounds

Objective = Callable[[np.ndarray], np.ndarray]
ALGORITHMS = ("ga", "pso", "sa", "ts", "shc")


class ConfigError(ValueError):
    pass


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class GAConfig:
    pop: int = 20
    crossover: float = 0.4
    mutation: float = 0.3
    generations: int = 100
    alpha: float = 0.05  # mutation step as a fraction of each gene's range
    eps: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        _require(self.pop >= 2 and self.generations >= 1, "GA needs pop >= 2 and generations >= 1")
        _require(0 <= self.crossover <= 1 and 0 <= self.mutation <= 1, "GA rates must lie in [0, 1]")


@dataclass(frozen=True)
class PSOConfig:
    swarm: int = 20
    w: float = 0.1
    c1: float = 1.0
    c2: float = 0.2
    iters: int = 100
    seed: int = 0

    def __post_init__(self):
        _require(self.swarm >= 2 and self.iters >= 1, "PSO needs swarm >= 2 and iters >= 1")


@dataclass(frozen=True)
class SAConfig:
    t0: float = 100.0
    cooling: float = 0.9
    iters: int = 100
    moves_per_iter: int = 20
    step: float = 0.1
    seed: int = 0

    def __post_init__(self):
        _require(self.t0 > 0 and 0 < self.cooling < 1, "SA needs t0 > 0 and cooling in (0, 1)")
        _require(self.iters >= 1 and self.moves_per_iter >= 1, "SA budgets must be >= 1")


@dataclass(frozen=True)
class TabuConfig:
    tabu_len: int = 20
    neighborhood: int = 20
    iters: int = 100
    radius: float = 0.05  # in coordinates normalized to [0, 1]
    step: float = 0.1
    seed: int = 0

    def __post_init__(self):
        _require(self.tabu_len >= 1 and self.neighborhood >= 1 and self.iters >= 1, "tabu budgets must be >= 1")


@dataclass(frozen=True)
class SHCConfig:
    iters: int = 100
    moves_per_iter: int = 20
    step: float = 0.1
    p_worse: float = 0.05
    seed: int = 0

    def __post_init__(self):
        _require(self.iters >= 1 and self.moves_per_iter >= 1, "SHC budgets must be >= 1")
        _require(0 <= self.p_worse <= 1, "p_worse must lie in [0, 1]")


@dataclass(frozen=True)
class RandomSearchConfig:
    iters: int = 100
    batch: int = 20
    seed: int = 0

    def __post_init__(self):
        _require(self.iters >= 1 and self.batch >= 1, "random search budgets must be >= 1")


@dataclass
class OptimizationResult:
    algorithm: str
    best_x: np.ndarray
    best_f: float
    trace_f: np.ndarray  # best-so-far fitness per iteration
    trace_x: np.ndarray  # best-so-far design per iteration
    trace_eff: np.ndarray
    trace_temp: np.ndarray
    evaluations: int
    wall_time: float
    seed: int
    extra: dict = field(default_factory=dict)

    def trace_rows(self) -> list:
        rows = []
        for i in range(len(self.trace_f)):
            row = {"iteration": i + 1, "best_fitness": float(self.trace_f[i]),
                   "best_eff_mu": float(self.trace_eff[i]), "best_temp_mu": float(self.trace_temp[i])}
            row.update({f"x{j + 1}": float(v) for j, v in enumerate(self.trace_x[i])})
            rows.append(row)
        return rows


TRACE_COLUMNS = ["iteration", "best_fitness", "best_eff_mu", "best_temp_mu"] + [f"x{j}" for j in range(1, 10)]


def write_trace_csv(path, result: OptimizationResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in result.trace_rows():
            w.writerow([row["iteration"]] + [repr(row[c]) for c in TRACE_COLUMNS[1:]])


# ---- operators ------------------------------------------------------------


def clamp(genes, bounds: ParameterBounds) -> np.ndarray:
    return np.clip(np.asarray(genes, dtype=np.float64), bounds.lo, bounds.hi)


def roulette_weights(f, eps: float = 1e-9) -> np.ndarray:
    """Selection probabilities inversely proportional to fitness (minimization).

    If any fitness is non-positive the values are shifted to start at 1
    first. Non-finite fitness gets zero weight.
    """
    f = np.asarray(f, dtype=np.float64)
    ok = np.isfinite(f)
    if not ok.any():
        return np.full(f.size, 1.0 / f.size)
    g = np.where(ok, f, 0.0)
    fmin = g[ok].min()
    if fmin <= 0:
        g = g - fmin + 1.0
    w = np.where(ok, 1.0 / (g + eps), 0.0)
    return w / w.sum()


def single_point_crossover(a, b, k: int):
    a = np.asarray(a)
    b = np.asarray(b)
    return np.concatenate([a[:k], b[k:]]), np.concatenate([b[:k], a[k:]])


def mutate(x, mask, sign, alpha) -> np.ndarray:
    """Shift the masked genes by ``alpha`` (per gene) in direction ``sign``."""
    return np.asarray(x) + np.where(mask, sign * alpha, 0.0)


def pso_velocity(v, x, pbest, gbest, w, c1, c2, r1, r2):
    return w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)


def sa_accept_probability(delta: float, temperature: float) -> float:
    if delta <= 0:
        return 1.0
    if temperature <= 0:
        return 0.0
    return math.exp(-delta / temperature)


def select_tabu_move(f, tabu_mask, best_f: float) -> tuple[int, bool]:
    """Index of the chosen neighbour and whether the tabu status had to be overridden.

    Allowed moves are non-tabu neighbours plus tabu neighbours that beat the
    global best (aspiration). If nothing is allowed the best neighbour is
    taken anyway and the override is reported.
    """
    f = np.asarray(f, dtype=np.float64)
    tabu_mask = np.asarray(tabu_mask, dtype=bool)
    allowed = ~tabu_mask | (f < best_f)
    if allowed.any():
        return int(np.flatnonzero(allowed)[np.argmin(f[allowed])]), False
    return int(np.argmin(f)), True


def is_tabu(Z, memory, radius: float) -> np.ndarray:
    """Rows of normalized ``Z`` lying strictly within ``radius`` of any memory entry."""
    if not memory:
        return np.zeros(Z.shape[0], dtype=bool)
    M = np.asarray(memory)
    d = np.sqrt(((Z[:, None, :] - M[None, :, :]) ** 2).sum(-1))
    return (d < radius).any(axis=1)


# ---- bookkeeping ----------------------------------------------------------


class _Run:
    """Counts evaluations and keeps the best-so-far point and per-iteration traces."""

    def __init__(self, objective: Objective, bounds: ParameterBounds):
        self.objective = objective
        self.bounds = bounds
        self.evals = 0
        self.best_x = None
        self.best_f = np.inf
        self.tf, self.tx, self.te, self.tt = [], [], [], []
        self.t0 = time.perf_counter()

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        f = np.asarray(self.objective(X), dtype=np.float64).reshape(-1)
        self.evals += X.shape[0]
        i = int(np.argmin(np.where(np.isnan(f), np.inf, f)))
        if f[i] < self.best_f or self.best_x is None:
            self.best_f, self.best_x = float(f[i]), X[i].copy()
        return f

    def record(self):
        self.tf.append(self.best_f)
        self.tx.append(self.best_x.copy())
        details = getattr(self.objective, "details", None)
        e, t = details(self.best_x) if details else (np.nan, np.nan)
        self.te.append(e)
        self.tt.append(t)

    def result(self, name, seed, **extra) -> OptimizationResult:
        return OptimizationResult(name, self.best_x.copy(), self.best_f, np.array(self.tf), np.array(self.tx),
                                  np.array(self.te, dtype=np.float64), np.array(self.tt, dtype=np.float64),
                                  self.evals, time.perf_counter() - self.t0, seed, extra)


def _uniform(rng, bounds, k):
    return rng.uniform(bounds.lo, bounds.hi, size=(k, bounds.lo.size))


# ---- algorithms -----------------------------------------------------------


def ga(objective: Objective, bounds: ParameterBounds, config: GAConfig = GAConfig()) -> OptimizationResult:
    rng = np.random.default_rng(config.seed)
    run = _Run(objective, bounds)
    n, d = config.pop, bounds.lo.size
    alpha = config.alpha * bounds.span
    pop = _uniform(rng, bounds, n)
    f = run(pop)
    run.record()
    for _ in range(config.generations - 1):
        parents = pop[rng.choice(n, size=n, p=roulette_weights(f, config.eps))]
        children = parents.copy()
        for i in range(0, n - 1, 2):
            if rng.random() < config.crossover:
                k = int(rng.integers(1, d))
                children[i], children[i + 1] = single_point_crossover(parents[i], parents[i + 1], k)
        mask = rng.random((n, d)) < config.mutation
        sign = rng.choice((-1.0, 1.0), size=(n, d))
        children = clamp(mutate(children, mask, sign, alpha), bounds)
        children[rng.integers(n)] = run.best_x  # elitism
        pop = children
        f = run(pop)
        run.record()
    return run.result("ga", config.seed)


def pso(objective: Objective, bounds: ParameterBounds, config: PSOConfig = PSOConfig()) -> OptimizationResult:
    rng = np.random.default_rng(config.seed)
    run = _Run(objective, bounds)
    x = _uniform(rng, bounds, config.swarm)
    v = np.zeros_like(x)
    f = run(x)
    pbest, pbest_f = x.copy(), f.copy()
    run.record()
    for _ in range(config.iters - 1):
        r1 = rng.random(x.shape)
        r2 = rng.random(x.shape)
        v = pso_velocity(v, x, pbest, run.best_x, config.w, config.c1, config.c2, r1, r2)
        x = clamp(x + v, bounds)
        f = run(x)
        better = f < pbest_f
        pbest[better], pbest_f[better] = x[better], f[better]
        run.record()
    return run.result("pso", config.seed)


def sa(objective: Objective, bounds: ParameterBounds, config: SAConfig = SAConfig()) -> OptimizationResult:
    rng = np.random.default_rng(config.seed)
    run = _Run(objective, bounds)
    scale = config.step * bounds.span
    x = _uniform(rng, bounds, 1)[0]
    fx = run(x)[0]
    temp = config.t0
    accepted = 0
    for it in range(config.iters):
        for m in range(config.moves_per_iter):
            if it == 0 and m == 0:
                continue  # the start point used this move
            y = clamp(x + rng.normal(0.0, scale), bounds)
            fy = run(y)[0]
            p = sa_accept_probability(fy - fx, temp)
            if p >= 1.0 or rng.random() < p:
                x, fx = y, fy
                accepted += 1
        run.record()
        temp *= config.cooling
    return run.result("sa", config.seed, accepted=accepted, final_temperature=temp)


def tabu(objective: Objective, bounds: ParameterBounds, config: TabuConfig = TabuConfig()) -> OptimizationResult:
    rng = np.random.default_rng(config.seed)
    run = _Run(objective, bounds)
    scale = config.step * bounds.span
    starts = _uniform(rng, bounds, config.neighborhood)
    f = run(starts)
    x = starts[int(np.argmin(f))]
    memory = deque([(x - bounds.lo) / bounds.span], maxlen=config.tabu_len)
    run.record()
    overrides = 0
    for _ in range(config.iters - 1):
        nb = clamp(x + rng.normal(0.0, 1.0, (config.neighborhood, x.size)) * scale, bounds)
        best_before = run.best_f
        f = run(nb)
        mask = is_tabu((nb - bounds.lo) / bounds.span, memory, config.radius)
        i, forced = select_tabu_move(f, mask, best_before)
        overrides += forced
        x = nb[i]
        memory.append((x - bounds.lo) / bounds.span)
        run.record()
    return run.result("ts", config.seed, tabu_overrides=overrides)


def shc(objective: Objective, bounds: ParameterBounds, config: SHCConfig = SHCConfig()) -> OptimizationResult:
    rng = np.random.default_rng(config.seed)
    run = _Run(objective, bounds)
    scale = config.step * bounds.span
    x = _uniform(rng, bounds, 1)[0]
    fx = run(x)[0]
    for it in range(config.iters):
        for m in range(config.moves_per_iter):
            if it == 0 and m == 0:
                continue
            y = clamp(x + rng.normal(0.0, scale), bounds)
            fy = run(y)[0]
            if fy <= fx or rng.random() < config.p_worse:
                x, fx = y, fy
        run.record()
    return run.result("shc", config.seed)


def random_search(objective: Objective, bounds: ParameterBounds,
                  config: RandomSearchConfig = RandomSearchConfig()) -> OptimizationResult:
    rng = np.random.default_rng(config.seed)
    run = _Run(objective, bounds)
    for _ in range(config.iters):
        run(_uniform(rng, bounds, config.batch))
        run.record()
    return run.result("random", config.seed)


RUNNERS = {"ga": ga, "pso": pso, "sa": sa, "ts": tabu, "shc": shc, "random": random_search}
DEFAULT_CONFIGS = {"ga": GAConfig(), "pso": PSOConfig(), "sa": SAConfig(), "ts": TabuConfig(), "shc": SHCConfig(),
                   "random": RandomSearchConfig()}


def run_algorithm(name: str, objective: Objective, bounds: ParameterBounds, config=None, seed: int | None = None):
    if name not in RUNNERS:
        raise ConfigError(f"unknown algorithm {name!r}")
    config = DEFAULT_CONFIGS[name] if config is None else config
    if seed is not None:
        config = replace(config, seed=seed)
    return RUNNERS[name](objective, bounds, config)


@dataclass
class Comparison:
    rows: list
    runs: dict  # algorithm -> list of OptimizationResult, one per seed


def run_comparison(objective_factory: Callable[[int], Objective], bounds: ParameterBounds, seeds,
                   algorithms=ALGORITHMS, configs: dict | None = None) -> Comparison:
    """Run each algorithm once per seed; ``objective_factory(seed)`` supplies a fresh objective per run.

    Each row aggregates over seeds: median and best final fitness, the best
    run's predicted efficiency and temperature, evaluation count and median
    wall time.
    """
    seeds = list(seeds)
    if not seeds:
        raise ConfigError("run_comparison needs at least one seed")
    configs = configs or {}
    runs, rows = {}, []
    for name in algorithms:
        res = [run_algorithm(name, objective_factory(s), bounds, configs.get(name), seed=s) for s in seeds]
        runs[name] = res
        fs = np.array([r.best_f for r in res])
        b = res[int(np.argmin(fs))]
        rows.append({
            "algorithm": name,
            "median_best_fitness": float(np.median(fs)),
            "best_fitness": float(fs.min()),
            "best_eff_mu": float(b.trace_eff[-1]),
            "best_temp_mu": float(b.trace_temp[-1]),
            "median_eff_mu": float(np.median([r.trace_eff[-1] for r in res])),
            "median_temp_mu": float(np.median([r.trace_temp[-1] for r in res])),
            "best_x": [float(v) for v in b.best_x],
            "evaluations": int(b.evaluations),
            "wall_time": float(np.median([r.wall_time for r in res])),
        })
    return Comparison(rows, runs)
