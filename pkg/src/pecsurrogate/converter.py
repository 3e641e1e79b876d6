"""Steady-state electro-thermal model of a half-bridge converter.

The model is closed form apart from the junction temperature, which couples
back into the on-state resistance and is solved by damped fixed-point
iteration. It serves as the ground truth for dataset generation and for
re-checking optimized designs.

Loss model (whole half-bridge, sinusoidal output current of amplitude Io)::

    P_cond = Vce0 * 2*Io/pi + r_on(T) * Io**2 / 2
    r_on(T) = r_on25 * (1 + alpha * (T - 25))
    P_sw   = k_sw * f_sw * Vdc * Io * (1 + k_g * R_g)

At any instant the load current flows through exactly one device of the
leg, so conduction loss uses the mean absolute and RMS load current and
does not depend on modulation index or power factor at fixed current.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .dataset import DomainError, Dataset, label_feasibility

PARAM_NAMES = (
    "vdc",
    "mod_index",
    "i_out_amp",
    "power_factor",
    "f_sw",
    "r_gate",
    "t_ambient",
    "rth_ha",
    "rth_hc",
)


@dataclass(frozen=True)
class DesignPoint:
    vdc: float
    mod_index: float
    i_out_amp: float
    power_factor: float
    f_sw: float
    r_gate: float
    t_ambient: float
    rth_ha: float
    rth_hc: float

    def __post_init__(self):
        vals = astuple(self)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("design fields must be finite")
        if self.vdc <= 0 or self.f_sw <= 0 or self.r_gate <= 0:
            raise DomainError("vdc, f_sw and r_gate must be positive")
        if not (0 < self.mod_index <= 1 and 0 < self.power_factor <= 1):
            raise DomainError("mod_index and power_factor must lie in (0, 1]")
        if self.rth_ha <= 0 or self.rth_hc <= 0:
            raise DomainError("thermal resistances must be positive")

    def to_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=np.float64)

    @classmethod
    def from_array(cls, x) -> "DesignPoint":
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.shape != (9,):
            raise DomainError(f"expected 9 design parameters, got {x.shape}")
        return cls(*map(float, x))

    def replace(self, **changes) -> "DesignPoint":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return DesignPoint(**d)


@dataclass(frozen=True)
class ParameterBounds:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != (9,) or hi.shape != (9,):
            raise DomainError("bounds need nine (lower, upper) pairs")
        if not np.all(lo < hi):
            raise DomainError("every lower bound must be below its upper bound")
        object.__setattr__(self, "lower", tuple(map(float, lo)))
        object.__setattr__(self, "upper", tuple(map(float, hi)))

    @property
    def lo(self) -> np.ndarray:
        return np.array(self.lower)

    @property
    def hi(self) -> np.ndarray:
        return np.array(self.upper)

    @property
    def span(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x, atol: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.all((x >= self.lo - atol) & (x <= self.hi + atol), axis=-1)

    @classmethod
    def from_pairs(cls, pairs) -> "ParameterBounds":
        lo, hi = zip(*pairs)
        return cls(lo, hi)

    def to_pairs(self) -> list:
        return [[a, b] for a, b in zip(self.lower, self.upper)]


DEFAULT_BOUNDS = ParameterBounds(
    lower=(200.0, 0.1, 1.0, 0.3, 1e3, 1.0, 0.0, 0.1, 0.01),
    upper=(800.0, 1.0, 50.0, 1.0, 100e3, 50.0, 50.0, 2.0, 0.5),
)


@dataclass(frozen=True)
class ConverterConstants:
    vce0: float = 0.8  # V, on-state threshold voltage
    r_on25: float = 0.010  # ohm at 25 degC
    alpha_ron: float = 0.006  # 1/K
    k_sw: float = 2.5e-8  # J/(V*A) per switching period, both edges, sine-averaged
    k_g: float = 0.04  # 1/ohm
    rth_jc: float = 0.15  # K/W
    damping: float = 0.5
    tol: float = 1e-6  # K
    max_iter: int = 200
    t_ceiling: float = 250.0  # degC


DEFAULT_CONSTANTS = ConverterConstants()


@dataclass(frozen=True)
class SimulationResult:
    efficiency: float
    temperature: float
    loss_conduction: float
    loss_switching: float
    p_out: float
    converged: bool

    @property
    def total_loss(self) -> float:
        return self.loss_conduction + self.loss_switching


def output_currents(design: DesignPoint, r_load: float, p: float | None = None) -> dict:
    """Load-side currents of the half-bridge for a resistive-equivalent load ``r_load``.

    ``i_in`` is only reported when the active power ``p`` is given.
    """
    if not r_load > 0:
        raise DomainError("r_load must be positive")
    if not design.power_factor > 0 or not design.vdc > 0:
        raise DomainError("power_factor and vdc must be positive")
    m, vdc, kpf = design.mod_index, design.vdc, design.power_factor
    out = {
        "i_o": m * vdc / (2.0 * r_load),
        "i_or": m * vdc / (2.0 * math.sqrt(2.0) * r_load),
        "i_orf": m * vdc * kpf / (2.0 * math.sqrt(2.0) * r_load),
    }
    if p is not None:
        out["i_in"] = p / (vdc * kpf)
    return out


def _losses(X: np.ndarray, t_junction, c: ConverterConstants):
    vdc, m, io, kpf, fsw, rg = (X[..., i] for i in range(6))
    r_on = np.maximum(c.r_on25 * (1.0 + c.alpha_ron * (t_junction - 25.0)), 0.0)
    p_cond = c.vce0 * 2.0 * io / math.pi + r_on * io**2 / 2.0
    p_sw = c.k_sw * fsw * vdc * io * (1.0 + c.k_g * rg)
    p_out = m * vdc * io * kpf / 4.0
    return p_cond, p_sw, p_out


def loss_model(design: DesignPoint, t_junction: float, constants: ConverterConstants = DEFAULT_CONSTANTS) -> dict:
    if not math.isfinite(t_junction):
        raise DomainError("t_junction must be finite")
    p_cond, p_sw, p_out = _losses(design.to_array(), t_junction, constants)
    return {"loss_conduction": float(p_cond), "loss_switching": float(p_sw), "p_out": float(p_out)}


def thermal_resistance(X, constants: ConverterConstants = DEFAULT_CONSTANTS):
    X = np.asarray(X, dtype=float)
    return constants.rth_jc + X[..., 8] + X[..., 7]


def simulate(X, constants: ConverterConstants = DEFAULT_CONSTANTS) -> dict:
    """Vectorized electro-thermal solve for designs stacked in rows of ``X`` (n, 9).

    Damped Picard iteration on T = Ta + P_loss(T) * Rth. A row stops as soon as
    its fixed-point residual drops below ``constants.tol``. Rows that exceed the
    iteration cap or the runaway ceiling are reported at the ceiling
    temperature with the efficiency of their last iterate.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    c = constants
    ta = X[:, 6]
    rth = thermal_resistance(X, c)
    n = X.shape[0]
    T = ta.copy()
    done = np.zeros(n, dtype=bool)
    runaway = np.zeros(n, dtype=bool)
    for _ in range(c.max_iter):
        active = ~done
        if not active.any():
            break
        pc, ps, _ = _losses(X[active], T[active], c)
        resid = ta[active] + (pc + ps) * rth[active] - T[active]
        ok = np.abs(resid) < c.tol
        t_next = T[active] + c.damping * resid
        hot = ~ok & (t_next > c.t_ceiling)
        idx = np.flatnonzero(active)
        T[idx[~ok]] = t_next[~ok]
        done[idx[ok | hot]] = True
        runaway[idx[hot]] = True

    converged = done & ~runaway
    pc, ps, pout = _losses(X, T, c)
    eff = np.where(pout + pc + ps > 0, pout / np.maximum(pout + pc + ps, 1e-300), 1.0)
    temp = np.where(converged, T, c.t_ceiling)
    return {
        "efficiency": eff,
        "temperature": temp,
        "loss_conduction": pc,
        "loss_switching": ps,
        "p_out": pout,
        "converged": converged,
    }


def evaluate_design(
    design: DesignPoint,
    constants: ConverterConstants = DEFAULT_CONSTANTS,
    bounds: ParameterBounds | None = DEFAULT_BOUNDS,
) -> SimulationResult:
    x = design.to_array()
    if bounds is not None and not bounds.contains(x):
        raise DomainError("design lies outside the parameter bounds")
    r = simulate(x[None, :], constants)
    return SimulationResult(
        efficiency=float(r["efficiency"][0]),
        temperature=float(r["temperature"][0]),
        loss_conduction=float(r["loss_conduction"][0]),
        loss_switching=float(r["loss_switching"][0]),
        p_out=float(r["p_out"][0]),
        converged=bool(r["converged"][0]),
    )


def sample_designs(n: int, bounds: ParameterBounds, rng: np.random.Generator) -> np.ndarray:
    return bounds.lo + bounds.span * rng.random((n, 9))


def generate_dataset(
    n: int,
    bounds: ParameterBounds = DEFAULT_BOUNDS,
    seed: int = 0,
    constants: ConverterConstants = DEFAULT_CONSTANTS,
) -> Dataset:
    """Uniformly sample ``n`` designs within ``bounds`` and label them with the simulator."""
    if n < 1:
        raise DomainError("n must be at least 1")
    X = sample_designs(n, bounds, np.random.default_rng(seed))
    r = simulate(X, constants)
    y = np.column_stack([r["efficiency"], r["temperature"]])
    return Dataset(X, y, label_feasibility(y[:, 0], y[:, 1]))
