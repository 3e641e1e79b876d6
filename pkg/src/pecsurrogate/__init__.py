"""Surrogate-assisted design of a power converter: simulator, learned models and metaheuristics."""

from .converter import DEFAULT_BOUNDS, DesignPoint, ParameterBounds, evaluate_design, generate_dataset, simulate
from .dataset import Dataset, DomainError, load_csv, save_csv

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_BOUNDS",
    "Dataset",
    "DesignPoint",
    "DomainError",
    "ParameterBounds",
    "evaluate_design",
    "generate_dataset",
    "load_csv",
    "save_csv",
    "simulate",
]
