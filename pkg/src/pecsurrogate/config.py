"""Pipeline configuration: nested frozen dataclasses loaded from a versioned JSON file.

Unknown keys are rejected so typos fail loudly. A master ``seed`` can be
applied with :meth:`PipelineConfig.with_seed`, which rewrites every
component seed from it.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields, is_dataclass, replace
from pathlib import Path

from .classifier import ClassifierConfig
from .converter import DEFAULT_BOUNDS
from .dataset import SplitSpec
from .fitness import MODES, OBJECTIVES, PENALTIES
from .optimizers import ALGORITHMS, GAConfig, PSOConfig, RandomSearchConfig, SAConfig, SHCConfig, TabuConfig
from .regress.gpr import GPRConfig
from .regress.mcdropout import MCDropoutConfig
from .regress.ngboost import NGBoostConfig
from .regress.surrogate import KINDS

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DataConfig:
    n: int = 30000
    seed: int = 0
    bounds: tuple = tuple(tuple(p) for p in DEFAULT_BOUNDS.to_pairs())

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("data.n must be at least 1")
        if len(self.bounds) != 9:
            raise ConfigError("data.bounds needs 9 (lower, upper) pairs")


@dataclass(frozen=True)
class RegressorSection:
    kind: str = "ngboost"
    ngboost: NGBoostConfig = NGBoostConfig()
    gpr: GPRConfig = GPRConfig()
    mcdropout: MCDropoutConfig = MCDropoutConfig()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"regressor.kind must be one of {KINDS}")


@dataclass(frozen=True)
class FitnessSection:
    goal_temp: float = 28.0
    penalty_factor: float = 5.0
    level: float = 0.95
    mode: str = "stochastic"
    penalty: str = "soft"
    objective: str = "multi"

    def __post_init__(self):
        if self.mode not in MODES or self.penalty not in PENALTIES or self.objective not in OBJECTIVES:
            raise ConfigError("fitness.mode/penalty/objective has an unknown value")
        if self.penalty_factor < 0 or not 0 < self.level < 1 or not 0 <= self.goal_temp <= 125:
            raise ConfigError("fitness values out of range")


@dataclass(frozen=True)
class OptimizeSection:
    algorithms: tuple = ALGORITHMS
    seeds: tuple = tuple(range(10))
    baseline: bool = True  # also run random search at the same budget
    ga: GAConfig = GAConfig()
    pso: PSOConfig = PSOConfig()
    sa: SAConfig = SAConfig()
    ts: TabuConfig = TabuConfig()
    shc: SHCConfig = SHCConfig()
    random: RandomSearchConfig = RandomSearchConfig()

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("optimize.seeds must not be empty")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad:
            raise ConfigError(f"unknown algorithms {sorted(bad)}")

    def configs(self) -> dict:
        return {"ga": self.ga, "pso": self.pso, "sa": self.sa, "ts": self.ts, "shc": self.shc,
                "random": self.random}


@dataclass(frozen=True)
class PipelineConfig:
    schema_version: int = SCHEMA_VERSION
    out: str = "runs/default"
    data: DataConfig = DataConfig()
    split: SplitSpec = SplitSpec()
    classifier: ClassifierConfig = ClassifierConfig()
    regressor: RegressorSection = RegressorSection()
    fitness: FitnessSection = FitnessSection()
    optimize: OptimizeSection = OptimizeSection()
    calibration_grid: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99)
    hiw_bins: int = 20
    fitness_seed: int = 0

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}; expected {SCHEMA_VERSION}")

    def with_seed(self, seed: int) -> "PipelineConfig":
        """Derive every component seed from one master seed."""
        s = int(seed)
        r = self.regressor
        return replace(
            self,
            data=replace(self.data, seed=s),
            split=replace(self.split, seed=s + 1),
            classifier=replace(self.classifier, seed=s + 2),
            regressor=replace(r, ngboost=replace(r.ngboost, seed=s + 3), gpr=replace(r.gpr, seed=s + 3),
                              mcdropout=replace(r.mcdropout, seed=s + 3)),
            fitness_seed=s + 4,
            optimize=replace(self.optimize, seeds=tuple(s + 100 + i for i in range(len(self.optimize.seeds)))),
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data, where="config"):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    defaults = cls()
    kw = {}
    for name, value in data.items():
        current = getattr(defaults, name)
        if is_dataclass(current):
            kw[name] = _build(type(current), value, f"{where}.{name}")
        elif isinstance(current, tuple):
            kw[name] = _freeze(value)
        else:
            kw[name] = value
    try:
        return cls(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


def _freeze(v):
    if isinstance(v, (list, tuple)):
        return tuple(_freeze(x) for x in v)
    return v


def config_from_dict(data: dict) -> PipelineConfig:
    return _build(PipelineConfig, data)


def load_config(path) -> PipelineConfig:
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {p}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from None
    return config_from_dict(raw)


def save_config(path, config: PipelineConfig) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
