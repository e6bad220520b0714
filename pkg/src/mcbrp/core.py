"""Core method: classify large errors, perturb them, and explain them.

Pipeline for one flagged instance l with actual target t:

1. Errors on the test set are |t - t_hat|; a prediction is a *large error*
   when its error exceeds Q3 + 1.5*(Q3 - Q1) of the error distribution.
   This splits the test set into R (reasonable) and L (large).
2. The top-n features of l come from the local surrogate.
3. For each such feature we draw m values uniformly inside that feature's
   Tukey fences (computed over R), substitute them into l one at a time,
   and keep perturbations whose new prediction lands within the large-error
   threshold of t.
4. Per feature, the accepted stratum yields reasonable bounds
   [mean - std, mean + std] and a trend (Pearson correlation between the
   sampled values and the resulting predictions).

Statistics for feature j use only the stratum where j was the perturbed
coordinate; pooling across strata would freeze j at its observed (usually
outlying) value in every other stratum and wash out both bounds and trend.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .rng import stream
from .surrogate import DEFAULT_NUM_SAMPLES, ImportanceRanking, local_importance

DEFAULT_N = 5
DEFAULT_M = 10000
DEFAULT_MIN_STRATUM = 30

TREND_UP = "As input increases, prediction increases"
TREND_DOWN = "As input increases, prediction decreases"
TREND_NONE = "No detectable trend"


class CoreError(ValueError):
    pass


class InsufficientStratumError(CoreError):
    """Too few accepted perturbations to estimate bounds for a feature."""


class UnexplainableInstanceError(CoreError):
    """Every feature stratum fell below min_stratum."""


def quantile(values, q: float) -> float:
    """Linear interpolation at rank q*(len-1) over the sorted values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise CoreError("quantile of empty vector")
    if not np.all(np.isfinite(values)):
        raise CoreError("non-finite values")
    if not 0.0 <= q <= 1.0:
        raise CoreError(f"q={q} outside [0, 1]")
    s = np.sort(values)
    pos = q * (s.size - 1)
    lo = int(np.floor(pos))
    hi = int(np.ceil(pos))
    return float(s[lo] + (pos - lo) * (s[hi] - s[lo]))


def tukey_fences(values) -> tuple[float, float]:
    q1 = quantile(values, 0.25)
    q3 = quantile(values, 0.75)
    iqr = q3 - q1
    return q1 - 1.5 * iqr, q3 + 1.5 * iqr


@dataclass
class ErrorTaxonomy:
    errors: np.ndarray  # |t - t_hat| per test row
    q1: float
    q3: float
    epsilon_large: float
    row_ids: list
    large_mask: np.ndarray  # bool per test row

    @property
    def reasonable_idx(self) -> np.ndarray:
        return np.flatnonzero(~self.large_mask)

    @property
    def large_idx(self) -> np.ndarray:
        return np.flatnonzero(self.large_mask)

    @property
    def reasonable_ids(self) -> set:
        return {self.row_ids[i] for i in self.reasonable_idx}

    @property
    def large_ids(self) -> set:
        return {self.row_ids[i] for i in self.large_idx}


def classify_errors(actual, predicted, row_ids=None) -> ErrorTaxonomy:
    """Partition test rows into reasonable and large-error sets."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    if actual.size == 0:
        raise CoreError("empty inputs")
    if actual.shape != predicted.shape:
        raise CoreError("actual/predicted length mismatch")
    if row_ids is None:
        row_ids = list(range(actual.size))
    errors = np.abs(actual - predicted)
    q1 = quantile(errors, 0.25)
    q3 = quantile(errors, 0.75)
    eps = q3 + 1.5 * (q3 - q1)
    return ErrorTaxonomy(
        errors=errors,
        q1=q1,
        q3=q3,
        epsilon_large=eps,
        row_ids=list(row_ids),
        large_mask=errors > eps,
    )


@dataclass(frozen=True)
class FeatureFences:
    feature: int
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower


def feature_fences(test: Dataset, taxonomy: ErrorTaxonomy, feature: int) -> FeatureFences:
    """Tukey fences of the feature over the reasonable-prediction rows."""
    if not 0 <= feature < test.n_features:
        raise CoreError(f"feature index {feature} out of range")
    ridx = taxonomy.reasonable_idx
    if ridx.size == 0:
        raise CoreError("no reasonable-prediction rows to compute fences from")
    lower, upper = tukey_fences(test.rows[ridx, feature])
    return FeatureFences(feature=feature, lower=lower, upper=upper)


@dataclass
class FeatureStratum:
    feature: int
    values: np.ndarray  # sampled feature values, length m (0 if fence zero-width)
    predictions: np.ndarray
    accepted: np.ndarray  # bool

    @property
    def accepted_count(self) -> int:
        return int(self.accepted.sum())

    @property
    def accepted_values(self) -> np.ndarray:
        return self.values[self.accepted]

    @property
    def accepted_predictions(self) -> np.ndarray:
        return self.predictions[self.accepted]


@dataclass
class SimulationResult:
    instance_id: object
    strata: list[FeatureStratum]
    epsilon_large: float

    @property
    def accepted_counts(self) -> dict[int, int]:
        return {s.feature: s.accepted_count for s in self.strata}


def simulate(f, l, t: float, phi: ImportanceRanking, taxonomy: ErrorTaxonomy,
             fences: dict[int, FeatureFences], m: int, seed: int) -> SimulationResult:
    """Monte Carlo perturbation of l, one feature at a time.

    Each of the m*n simulated rows differs from l in exactly one coordinate,
    sampled uniformly inside that feature's fences; a row is accepted when
    its new prediction is within epsilon_large of t.  Zero-width fences skip
    the feature (empty stratum).
    """
    l = np.asarray(l, dtype=float)
    if m < 1:
        raise CoreError("m must be >= 1")
    strata = []
    for j in phi.feature_indices:
        fence = fences[j]
        if fence.width <= 0:
            strata.append(FeatureStratum(j, np.zeros(0), np.zeros(0), np.zeros(0, dtype=bool)))
            continue
        rng = stream(seed, "sim", phi.instance_id, j)
        values = rng.uniform(fence.lower, fence.upper, size=m)
        rows = np.tile(l, (m, 1))
        rows[:, j] = values
        preds = np.asarray(f.predict_batch(rows), dtype=float)
        accepted = np.abs(preds - t) < taxonomy.epsilon_large
        strata.append(FeatureStratum(j, values, preds, accepted))
    return SimulationResult(instance_id=phi.instance_id, strata=strata,
                            epsilon_large=taxonomy.epsilon_large)


def compute_bounds(values, min_stratum: int = DEFAULT_MIN_STRATUM) -> tuple[float, float]:
    """[mean - std, mean + std] of the accepted values, sample std (n-1)."""
    values = np.asarray(values, dtype=float)
    if min_stratum < 2:
        raise CoreError("min_stratum must be >= 2")
    if values.size < min_stratum:
        raise InsufficientStratumError(
            f"stratum has {values.size} accepted samples, need {min_stratum}"
        )
    mu = float(np.mean(values))
    sd = float(np.std(values, ddof=1))
    return mu - sd, mu + sd


def compute_trend(values, predictions) -> float | None:
    """Pearson correlation, or None when either side has zero variance."""
    values = np.asarray(values, dtype=float)
    predictions = np.asarray(predictions, dtype=float)
    if values.size < 2:
        raise CoreError("trend needs at least 2 points")
    dv = values - values.mean()
    dp = predictions - predictions.mean()
    denom = np.sqrt(np.sum(dv * dv) * np.sum(dp * dp))
    if denom == 0:
        return None
    return float(np.clip(np.sum(dv * dp) / denom, -1.0, 1.0))


def trend_text(rho: float | None) -> str:
    if rho is None or rho == 0:
        return TREND_NONE
    return TREND_UP if rho > 0 else TREND_DOWN


@dataclass
class ExplanationRow:
    feature: int
    feature_name: str
    observed: float
    stratum_size: int
    reasonable_low: float | None = None
    reasonable_high: float | None = None
    trend: float | None = None
    trend_text: str = TREND_NONE
    out_of_range: bool | None = None  # None when evidence was insufficient
    zero_width: bool = False
    insufficient: bool = False


@dataclass
class Explanation:
    instance_id: object
    actual: float
    predicted: float
    error: float
    epsilon_large: float
    n: int
    rows: list[ExplanationRow]
    surrogate_fit_quality: float

    def out_of_range_count(self) -> int:
        return sum(1 for r in self.rows if r.out_of_range)

    def to_json_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "actual": self.actual,
            "predicted": self.predicted,
            "error": self.error,
            "epsilon_large": self.epsilon_large,
            "n": self.n,
            "surrogate_fit_quality": self.surrogate_fit_quality,
            "rows": [
                {
                    "feature": r.feature,
                    "feature_name": r.feature_name,
                    "observed": r.observed,
                    "stratum_size": r.stratum_size,
                    "reasonable_low": r.reasonable_low,
                    "reasonable_high": r.reasonable_high,
                    "trend": r.trend,
                    "trend_text": r.trend_text,
                    "out_of_range": r.out_of_range,
                    "zero_width": r.zero_width,
                    "insufficient": r.insufficient,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def to_text_table(self) -> str:
        """Aligned table with the Input/Definition/Trend/Value/Reasonable range columns."""
        header = ["Input", "Definition", "Trend", "Value", "Reasonable range"]
        body = []
        for i, r in enumerate(self.rows):
            label = chr(ord("A") + i) if i < 26 else str(i)
            if r.insufficient:
                rng_txt = "insufficient evidence"
            else:
                rng_txt = f"[{r.reasonable_low:.2f}, {r.reasonable_high:.2f}]"
                if r.zero_width:
                    rng_txt += " (zero width)"
            body.append([label, r.feature_name, r.trend_text, f"{r.observed:.2f}", rng_txt])
        widths = [max(len(row[c]) for row in [header] + body) for c in range(5)]
        lines = []
        for row in [header] + body:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        lines.insert(1, "-" * len(lines[0]))
        meta = (
            f"instance {self.instance_id}: actual {self.actual:.2f}, "
            f"predicted {self.predicted:.2f}, error {self.error:.2f} "
            f"(large-error threshold {self.epsilon_large:.2f})"
        )
        return meta + "\n" + "\n".join(lines) + "\n"


def explain(f, l, t: float, test: Dataset, taxonomy: ErrorTaxonomy,
            n: int = DEFAULT_N, m: int = DEFAULT_M, seed: int = 0,
            min_stratum: int = DEFAULT_MIN_STRATUM,
            num_samples: int = DEFAULT_NUM_SAMPLES,
            kernel_width: float | None = None,
            instance_id=None) -> Explanation:
    """Full per-instance pipeline: importance -> fences -> simulate -> table."""
    l = np.asarray(l, dtype=float)
    phi = local_importance(f, l, test, n, num_samples=num_samples,
                           kernel_width=kernel_width, seed=seed,
                           instance_id=instance_id)
    fences = {j: feature_fences(test, taxonomy, j) for j in phi.feature_indices}
    sim = simulate(f, l, t, phi, taxonomy, fences, m, seed)

    rows = []
    for s in sim.strata:
        row = ExplanationRow(
            feature=s.feature,
            feature_name=test.feature_names[s.feature],
            observed=float(l[s.feature]),
            stratum_size=s.accepted_count,
        )
        try:
            a, b = compute_bounds(s.accepted_values, min_stratum)
        except InsufficientStratumError:
            row.insufficient = True
            rows.append(row)
            continue
        rho = compute_trend(s.accepted_values, s.accepted_predictions)
        row.reasonable_low = a
        row.reasonable_high = b
        row.trend = rho
        row.trend_text = trend_text(rho)
        row.zero_width = a == b
        row.out_of_range = not a <= row.observed <= b
        rows.append(row)

    if all(r.insufficient for r in rows):
        raise UnexplainableInstanceError(
            f"instance {instance_id}: no feature reached {min_stratum} accepted samples"
        )
    predicted = f.predict(l)
    return Explanation(
        instance_id=instance_id,
        actual=float(t),
        predicted=predicted,
        error=abs(float(t) - predicted),
        epsilon_large=taxonomy.epsilon_large,
        n=n,
        rows=rows,
        surrogate_fit_quality=phi.surrogate_fit_quality,
    )
