"""From-scratch gradient-boosted regression trees.

Stagewise least-squares boosting: the model starts at the training-target
mean and each tree fits the residuals of the current model with greedy
axis-aligned splits minimizing sum of squared errors.  Split thresholds are
midpoints between consecutive distinct sorted values; ties are broken by
lowest feature index, then lowest threshold, so fitting is deterministic.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset
from ._backend import BACKEND, predict_packed

MODEL_FORMAT_VERSION = 1

DEFAULT_PARAMS = {
    "n_trees": 100,
    "max_depth": 3,
    "learning_rate": 0.1,
    "min_samples_leaf": 1,
    "seed": 0,
}


class ModelError(ValueError):
    pass


@dataclass
class RegressionTree:
    """Flat node arrays; feature < 0 marks a leaf, children are absolute."""
    feature: np.ndarray  # int32
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # float64
    max_depth: int

    def predict_one(self, x) -> float:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return float(self.value[node])


def _best_split(X, r, min_samples_leaf):
    """Best (feature, threshold, sse) over all axis-aligned splits, or None."""
    n = r.shape[0]
    best = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        sv = X[order, j]
        sr = r[order]
        csum = np.cumsum(sr)
        csq = np.cumsum(sr * sr)
        total_sum, total_sq = csum[-1], csq[-1]
        # split after position i (left gets i+1 rows); only between distinct values
        i = np.arange(n - 1)
        valid = sv[:-1] < sv[1:]
        nl = i + 1
        nr = n - nl
        valid &= (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
        if not valid.any():
            continue
        sum_l = csum[:-1]
        sq_l = csq[:-1]
        sse = (sq_l - sum_l**2 / nl) + ((total_sq - sq_l) - (total_sum - sum_l) ** 2 / nr)
        cand = np.flatnonzero(valid)
        k = cand[np.argmin(sse[cand])]  # argmin takes the first, i.e. lowest threshold
        if best is None or sse[k] < best[2]:
            best = (j, 0.5 * (sv[k] + sv[k + 1]), float(sse[k]))
    return best


def _fit_tree(X, r, max_depth, min_samples_leaf) -> RegressionTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def build(idx, depth):
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(np.mean(r[idx])))
        if depth >= max_depth or idx.size < 2 * min_samples_leaf:
            return node
        split = _best_split(X[idx], r[idx], min_samples_leaf)
        if split is None:
            return node
        j, thr, _ = split
        go_left = X[idx, j] <= thr
        feature[node] = j
        threshold[node] = thr
        left[node] = build(idx[go_left], depth + 1)
        right[node] = build(idx[~go_left], depth + 1)
        return node

    build(np.arange(X.shape[0]), 0)
    return RegressionTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value),
        max_depth=max_depth,
    )


@dataclass
class GbrModel:
    """Fitted ensemble; immutable after construction, safe for concurrent reads."""
    init_value: float
    learning_rate: float
    trees: list[RegressionTree]
    feature_names: list[str]
    _packed: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._packed is None:
            object.__setattr__(self, "_packed", self._pack())

    def _pack(self):
        if not self.trees:
            z = np.zeros(0)
            zi = np.zeros(0, dtype=np.int32)
            return zi, z, zi.copy(), zi.copy(), z.copy(), np.zeros(1, dtype=np.int64)
        offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
        for t, tree in enumerate(self.trees):
            offsets[t + 1] = offsets[t] + tree.feature.shape[0]
        feature = np.concatenate([t.feature for t in self.trees])
        threshold = np.concatenate([t.threshold for t in self.trees])
        value = np.concatenate([t.value for t in self.trees])
        left = np.concatenate([t.left + offsets[i] for i, t in enumerate(self.trees)]).astype(np.int32)
        right = np.concatenate([t.right + offsets[i] for i, t in enumerate(self.trees)]).astype(np.int32)
        # leaves keep child index -1 regardless of offset
        leaf = feature < 0
        left[leaf] = -1
        right[leaf] = -1
        return feature, threshold, left, right, value, offsets

    def predict_batch(self, rows) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.feature_names):
            raise ModelError(
                f"expected matrix with {len(self.feature_names)} columns, got shape {rows.shape}"
            )
        if rows.shape[0] == 0:
            return np.zeros(0)
        feature, threshold, left, right, value, offsets = self._packed
        if len(self.trees) == 0:
            return np.full(rows.shape[0], self.init_value)
        return predict_packed(rows, feature, threshold, left, right, value,
                              offsets, self.init_value, self.learning_rate)

    def predict(self, x) -> float:
        return float(self.predict_batch(np.asarray(x, dtype=float)[None, :])[0])

    def to_json_dict(self) -> dict:
        return {
            "format_version": MODEL_FORMAT_VERSION,
            "init_value": self.init_value,
            "learning_rate": self.learning_rate,
            "feature_names": self.feature_names,
            "trees": [
                {
                    "feature": t.feature.tolist(),
                    "threshold": t.threshold.tolist(),
                    "left": t.left.tolist(),
                    "right": t.right.tolist(),
                    "value": t.value.tolist(),
                    "max_depth": t.max_depth,
                }
                for t in self.trees
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GbrModel":
        if doc.get("format_version") != MODEL_FORMAT_VERSION:
            raise ModelError(f"unsupported model format: {doc.get('format_version')}")
        trees = [
            RegressionTree(
                feature=np.array(t["feature"], dtype=np.int32),
                threshold=np.array(t["threshold"], dtype=float),
                left=np.array(t["left"], dtype=np.int32),
                right=np.array(t["right"], dtype=np.int32),
                value=np.array(t["value"], dtype=float),
                max_depth=t["max_depth"],
            )
            for t in doc["trees"]
        ]
        return cls(
            init_value=doc["init_value"],
            learning_rate=doc["learning_rate"],
            trees=trees,
            feature_names=list(doc["feature_names"]),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "GbrModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def fit_gbr(train: Dataset, params: dict | None = None) -> GbrModel:
    p = dict(DEFAULT_PARAMS)
    if params:
        p.update(params)
    if train.n_rows == 0:
        raise ModelError("empty training set")
    if p["n_trees"] < 0 or p["max_depth"] < 1 or not 0 < p["learning_rate"] <= 1 or p["min_samples_leaf"] < 1:
        raise ModelError(f"degenerate params: {p}")

    X = np.ascontiguousarray(train.rows)
    y = train.target
    init = float(np.mean(y))
    current = np.full(train.n_rows, init)
    trees = []
    for _ in range(p["n_trees"]):
        residual = y - current
        tree = _fit_tree(X, residual, p["max_depth"], p["min_samples_leaf"])
        trees.append(tree)
        # evaluate the new tree on the training rows to update the model
        partial = GbrModel(0.0, 1.0, [tree], train.feature_names)
        current = current + p["learning_rate"] * partial.predict_batch(X)
    return GbrModel(
        init_value=init,
        learning_rate=p["learning_rate"],
        trees=trees,
        feature_names=list(train.feature_names),
    )


def r_squared(model, ds: Dataset) -> float:
    """Coefficient of determination, 1 - SS_res/SS_tot."""
    if ds.n_rows == 0:
        raise ModelError("empty dataset")
    ss_tot = float(np.sum((ds.target - np.mean(ds.target)) ** 2))
    if ss_tot == 0:
        raise ModelError("target variance is zero")
    pred = model.predict_batch(ds.rows)
    ss_res = float(np.sum((ds.target - pred) ** 2))
    return 1.0 - ss_res / ss_tot
