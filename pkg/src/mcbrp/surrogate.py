"""Local feature importance via a proximity-weighted linear surrogate.

For one instance x we sample Gaussian perturbations around x (per-feature
scale taken from a background dataset), weight each sample by a Gaussian
proximity kernel in standardized coordinates, fit weighted least squares to
the black box's predictions, and rank features by |coefficient * background
std| so the ranking is invariant to feature units.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .rng import stream


class SurrogateError(ValueError):
    pass


DEFAULT_NUM_SAMPLES = 5000
_RIDGE = 1e-8


def default_kernel_width(n_features: int) -> float:
    return 0.75 * np.sqrt(n_features)


@dataclass
class ImportanceRanking:
    instance_id: object
    ranked_features: list[tuple[int, float]]  # (feature index, signed weight), |weight| desc
    n: int
    surrogate_fit_quality: float  # weighted R^2 of the local linear fit
    excluded_features: list[int] = field(default_factory=list)  # constant in background
    regularized: bool = False  # ridge term was needed

    @property
    def feature_indices(self) -> list[int]:
        return [j for j, _ in self.ranked_features]


def local_importance(f, x, background: Dataset, n: int,
                     num_samples: int = DEFAULT_NUM_SAMPLES,
                     kernel_width: float | None = None,
                     seed: int = 0,
                     instance_id=None) -> ImportanceRanking:
    """Top-n features for f's prediction at x.

    Deterministic in (seed, instance_id): the sampling stream is keyed by
    both, so explaining many instances in parallel reproduces serial runs.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if background.n_rows == 0:
        raise SurrogateError("background dataset is empty")
    if background.n_features != d:
        raise SurrogateError("instance width does not match background")
    if not 1 <= n <= d:
        raise SurrogateError(f"n must be in [1, {d}]")
    if num_samples < 10 * d:
        raise SurrogateError(f"num_samples must be >= {10 * d}")
    if kernel_width is None:
        kernel_width = default_kernel_width(d)

    sigma = np.std(background.rows, axis=0, ddof=1)
    included = np.flatnonzero(sigma > 0)
    excluded = [int(j) for j in np.flatnonzero(sigma == 0)]
    if included.size == 0:
        raise SurrogateError("all background features are constant")
    if n > included.size:
        raise SurrogateError(f"n={n} exceeds the {included.size} non-constant features")

    rng = stream(seed, "surrogate", instance_id if instance_id is not None else "anon")
    noise = rng.standard_normal((num_samples, included.size))
    samples = np.tile(x, (num_samples, 1))
    samples[:, included] = x[included] + noise * sigma[included]

    preds = np.asarray(f.predict_batch(samples), dtype=float)
    dist_sq = np.sum(noise**2, axis=1)
    weights = np.exp(-dist_sq / kernel_width**2)

    # weighted least squares with intercept on the included columns
    A = np.column_stack([np.ones(num_samples), samples[:, included]])
    sw = np.sqrt(weights)
    lhs = (A * sw[:, None]).T @ (A * sw[:, None])
    rhs = (A * sw[:, None]).T @ (preds * sw)
    regularized = False
    try:
        beta = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        regularized = True
        beta = np.linalg.solve(lhs + _RIDGE * np.eye(lhs.shape[0]), rhs)
    coefs = np.zeros(d)
    coefs[included] = beta[1:]

    fitted = A @ beta
    w_mean = np.average(preds, weights=weights)
    ss_tot = float(np.sum(weights * (preds - w_mean) ** 2))
    ss_res = float(np.sum(weights * (preds - fitted) ** 2))
    quality = 0.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)

    score = np.abs(coefs) * sigma
    score[excluded] = -np.inf
    order = sorted(range(d), key=lambda j: (-score[j], j))
    top = [(int(j), float(coefs[j] * sigma[j])) for j in order[:n]]
    return ImportanceRanking(
        instance_id=instance_id,
        ranked_features=top,
        n=n,
        surrogate_fit_quality=quality,
        excluded_features=excluded,
        regularized=regularized,
    )


def rank_frequency(rankings: list[ImportanceRanking], feature_names: list[str]
                   ) -> list[tuple[str, float]]:
    """Fraction of instances where each feature lands in the top n.

    These are per-instance membership fractions (each instance contributes
    1/len(rankings) to every feature in its top n), not normalized weights.
    Sorted by descending fraction, ties by feature order.
    """
    if not rankings:
        raise SurrogateError("no rankings given")
    counts = np.zeros(len(feature_names))
    for r in rankings:
        for j in r.feature_indices:
            counts[j] += 1
    fractions = counts / len(rankings)
    order = sorted(range(len(feature_names)), key=lambda j: (-fractions[j], j))
    return [(feature_names[j], float(fractions[j])) for j in order]
