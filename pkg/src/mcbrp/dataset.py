"""Tabular regression datasets: CSV IO, splitting, and a synthetic generator.

A Dataset is an immutable bundle of named numeric feature columns, a target
vector, and per-row ids.  Rows with missing or non-numeric cells are either
rejected or dropped at load time, never imputed.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import stream


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    feature_names: list[str]
    rows: np.ndarray  # (n_rows, n_features) float64
    target: np.ndarray  # (n_rows,) float64
    row_ids: list  # opaque, one per row

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        target = np.asarray(self.target, dtype=float)
        if rows.ndim != 2:
            raise DatasetError("rows must be a 2-d matrix")
        if rows.shape[0] != target.shape[0]:
            raise DatasetError("row count does not match target length")
        if rows.shape[1] != len(self.feature_names):
            raise DatasetError("column count does not match feature_names")
        if len(self.row_ids) != rows.shape[0]:
            raise DatasetError("row_ids length does not match row count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DatasetError("feature names must be unique")
        if any(not name for name in self.feature_names):
            raise DatasetError("feature names must be non-empty")
        if not np.all(np.isfinite(rows)) or not np.all(np.isfinite(target)):
            raise DatasetError("non-finite values in dataset")
        rows.flags.writeable = False
        target.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "target", target)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_features(self) -> int:
        return self.rows.shape[1]

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DatasetError(f"unknown feature: {name}") from None

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=int)
        return Dataset(
            feature_names=list(self.feature_names),
            rows=self.rows[indices].copy(),
            target=self.target[indices].copy(),
            row_ids=[self.row_ids[i] for i in indices],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and self.row_ids == other.row_ids
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.target, other.target)
        )


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    test: Dataset

    def __post_init__(self):
        if self.train.feature_names != self.test.feature_names:
            raise DatasetError("train/test feature names differ")
        if set(self.train.row_ids) & set(self.test.row_ids):
            raise DatasetError("train/test row ids overlap")


def load_csv(path, target_column: str, drop_policy: str = "drop-row",
             id_column: str | None = None) -> Dataset:
    """Load a comma-separated UTF-8 file with a header row.

    All non-target, non-id columns become features in header order.  Cells
    that fail to parse as floats (or are blank) trigger either a DatasetError
    (``reject``) or removal of the offending row (``drop-row``).
    """
    if drop_policy not in ("reject", "drop-row"):
        raise DatasetError(f"unknown drop_policy: {drop_policy}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if target_column not in header:
            raise DatasetError(f"{path}: target column {target_column!r} not in header")
        if id_column is not None and id_column not in header:
            raise DatasetError(f"{path}: id column {id_column!r} not in header")
        target_pos = header.index(target_column)
        id_pos = header.index(id_column) if id_column is not None else None
        feature_pos = [i for i in range(len(header)) if i not in (target_pos, id_pos)]

        rows, target, row_ids = [], [], []
        for lineno, record in enumerate(reader):
            if len(record) != len(header):
                raise DatasetError(f"{path}: row {lineno} has {len(record)} cells, expected {len(header)}")
            try:
                values = [float(record[i]) for i in feature_pos]
                t = float(record[target_pos])
                if not all(math.isfinite(v) for v in values) or not math.isfinite(t):
                    raise ValueError("non-finite value")
            except ValueError:
                if drop_policy == "reject":
                    raise DatasetError(f"{path}: unparseable cell in row {lineno}") from None
                continue
            rows.append(values)
            target.append(t)
            row_ids.append(record[id_pos] if id_pos is not None else lineno)
    if not rows:
        raise DatasetError(f"{path}: no usable rows")
    return Dataset(
        feature_names=[header[i] for i in feature_pos],
        rows=np.array(rows, dtype=float),
        target=np.array(target, dtype=float),
        row_ids=row_ids,
    )


def write_csv(ds: Dataset, path, target_column: str = "target") -> None:
    """Write a Dataset back out in the format load_csv reads."""
    if target_column in ds.feature_names:
        raise DatasetError(f"target column name {target_column!r} collides with a feature")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.feature_names + [target_column])
        for i in range(ds.n_rows):
            writer.writerow([repr(float(v)) for v in ds.rows[i]] + [repr(float(ds.target[i]))])


def split_by_column_threshold(ds: Dataset, column: str, threshold: float,
                              keep_column: bool = True) -> SplitDataset:
    """Deterministic split: rows with column < threshold train, >= threshold test."""
    j = ds.feature_index(column)
    train_idx = np.flatnonzero(ds.rows[:, j] < threshold)
    test_idx = np.flatnonzero(ds.rows[:, j] >= threshold)
    if train_idx.size == 0:
        raise DatasetError(f"empty train split: no {column} < {threshold}")
    if test_idx.size == 0:
        raise DatasetError(f"empty test split: no {column} >= {threshold}")
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    if not keep_column:
        keep = [k for k in range(ds.n_features) if k != j]
        names = [ds.feature_names[k] for k in keep]
        train = Dataset(names, train.rows[:, keep], train.target, train.row_ids)
        test = Dataset(names, test.rows[:, keep], test.target, test.row_ids)
    return SplitDataset(train=train, test=test)


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of the synthetic sales-like generator.

    Feature 0 is ``period``, an integer 0..9 usable as a time-based split
    column.  Features 1..d-1 are Gaussian.  The target is a sum of smooth
    monotone-increasing per-feature terms plus one pairwise interaction plus
    Gaussian noise; the per-feature terms make every ground-truth trend
    positive, which the trend tests rely on.

    An outlier_fraction of rows get one feature value corrupted far outside
    the bulk (>= 6 bulk IQRs from the column median) *after* the target is
    computed, so the actual target stays consistent with the uncorrupted
    row.  A model trained on the bulk then mispredicts exactly those rows,
    and a reasonable prediction is recoverable by moving the corrupted
    feature back in range.
    """
    n_features: int = 10
    n_rows: int = 5000
    outlier_fraction: float = 0.05
    noise_sigma: float = 1.0

    def __post_init__(self):
        if self.n_features < 2:
            raise DatasetError("n_features must be >= 2")
        if self.n_rows < 100:
            raise DatasetError("n_rows must be >= 100")
        if not 0.0 <= self.outlier_fraction <= 0.2:
            raise DatasetError("outlier_fraction must be in [0, 0.2]")
        if self.noise_sigma < 0:
            raise DatasetError("noise_sigma must be >= 0")


# Fixed generator constants: feature j >= 1 is N(10j, s_j) with s_j below,
# and contributes w_j*(x-mu) + a_j*s_j*tanh((x-mu)/s_j) to the target.
_BASE_TARGET = 50.0
_INTERACTION = 0.8
_PERIOD_WEIGHT = 0.3


def _feature_params(d: int):
    j = np.arange(1, d)
    mu = 10.0 * j
    sigma = 1.0 + 0.3 * j
    # Keep w*sigma roughly flat so no single feature dominates the target.
    w = 2.0 / sigma
    a = 0.6 / sigma
    return mu, sigma, w, a


def _target_from_features(X: np.ndarray) -> np.ndarray:
    d = X.shape[1]
    mu, sigma, w, a = _feature_params(d)
    z = (X[:, 1:] - mu) / sigma
    t = _BASE_TARGET + _PERIOD_WEIGHT * X[:, 0]
    t = t + np.sum(w * sigma * z + a * sigma * np.tanh(z), axis=1)
    if d >= 3:
        t = t + _INTERACTION * z[:, 0] * z[:, 1]
    return t


def generate_synthetic(spec: SyntheticSpec, seed: int) -> Dataset:
    """Pure function of (spec, seed); see SyntheticSpec for the construction."""
    d, n = spec.n_features, spec.n_rows
    mu, sigma, _, _ = _feature_params(d)
    rng = stream(seed, "synthetic")

    X = np.empty((n, d))
    X[:, 0] = rng.integers(0, 10, size=n)
    X[:, 1:] = mu + sigma * rng.standard_normal((n, d - 1))

    # Clip the bulk to 3.5 empirical IQRs so no bulk row trips the 4-IQR
    # outlier scan; planted outliers sit at >= 6 IQRs.
    med = np.median(X[:, 1:], axis=0)
    q1 = np.quantile(X[:, 1:], 0.25, axis=0)
    q3 = np.quantile(X[:, 1:], 0.75, axis=0)
    iqr = q3 - q1
    X[:, 1:] = np.clip(X[:, 1:], med - 3.5 * iqr, med + 3.5 * iqr)

    target = _target_from_features(X)
    if spec.noise_sigma > 0:
        target = target + spec.noise_sigma * rng.standard_normal(n)

    n_outliers = int(spec.outlier_fraction * n)
    if n_outliers:
        out_rows = rng.choice(n, size=n_outliers, replace=False)
        out_cols = rng.integers(1, d, size=n_outliers)
        offsets = rng.uniform(6.0, 9.0, size=n_outliers)
        # Alternate corruption signs so column quantiles stay centered.
        signs = np.where(np.arange(n_outliers) % 2 == 0, 1.0, -1.0)
        X[out_rows, out_cols] = med[out_cols - 1] + signs * offsets * iqr[out_cols - 1]

    return Dataset(
        feature_names=["period"] + [f"f{j}" for j in range(1, d)],
        rows=X,
        target=target,
        row_ids=list(range(n)),
    )


def count_outlier_rows(ds: Dataset) -> int:
    """Rows with any feature more than 4 IQRs from its column median."""
    med = np.median(ds.rows, axis=0)
    q1 = np.quantile(ds.rows, 0.25, axis=0)
    q3 = np.quantile(ds.rows, 0.75, axis=0)
    band = 4.0 * (q3 - q1)
    flagged = np.abs(ds.rows - med) > band
    return int(np.any(flagged, axis=1).sum())
