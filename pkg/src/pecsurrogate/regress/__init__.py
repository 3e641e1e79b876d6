"""Probabilistic regressors returning Gaussian predictive distributions."""

from .gaussian import GaussianPrediction, natural_gradient_gaussian, prediction_interval
from .gpr import GprModel, GPRConfig, KernelParams, fit_gpr, gpr_predict
from .mcdropout import MCDropoutConfig, fit_mc_dropout, mc_predict
from .ngboost import NGBoostConfig, NgboostModel, fit_ngboost, ngboost_predict
from .surrogate import RegressorConfig, SurrogateRegressor, load_surrogate, save_surrogate, train_surrogate
from .tree import RegressionTree, fit_tree

__all__ = [
    "GaussianPrediction", "natural_gradient_gaussian", "prediction_interval",
    "GprModel", "GPRConfig", "KernelParams", "fit_gpr", "gpr_predict",
    "MCDropoutConfig", "fit_mc_dropout", "mc_predict",
    "NGBoostConfig", "NgboostModel", "fit_ngboost", "ngboost_predict",
    "RegressorConfig", "SurrogateRegressor", "load_surrogate", "save_surrogate", "train_surrogate",
    "RegressionTree", "fit_tree",
]
