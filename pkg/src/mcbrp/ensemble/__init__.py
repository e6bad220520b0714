from ._backend import BACKEND
from .gbr import (
    DEFAULT_PARAMS,
    GbrModel,
    ModelError,
    RegressionTree,
    fit_gbr,
    r_squared,
)

__all__ = [
    "BACKEND",
    "DEFAULT_PARAMS",
    "GbrModel",
    "ModelError",
    "RegressionTree",
    "fit_gbr",
    "r_squared",
]
