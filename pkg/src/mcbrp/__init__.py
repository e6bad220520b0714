"""Contrastive explanations for large regression errors.

Train a tree-ensemble regressor, flag predictions whose absolute error
exceeds a Tukey-fence threshold, and explain each one with per-feature
reasonable ranges and trends estimated by Monte Carlo perturbation.
"""

from .core import (
    ErrorTaxonomy,
    Explanation,
    FeatureFences,
    InsufficientStratumError,
    SimulationResult,
    UnexplainableInstanceError,
    classify_errors,
    compute_bounds,
    compute_trend,
    explain,
    feature_fences,
    quantile,
    simulate,
    tukey_fences,
)
from .dataset import (
    Dataset,
    DatasetError,
    SplitDataset,
    SyntheticSpec,
    count_outlier_rows,
    generate_synthetic,
    load_csv,
    split_by_column_threshold,
    write_csv,
)
from .ensemble import BACKEND, GbrModel, ModelError, fit_gbr, r_squared
from .predictor import FunctionPredictor
from .surrogate import ImportanceRanking, SurrogateError, local_importance, rank_frequency

__version__ = "0.1.0"
