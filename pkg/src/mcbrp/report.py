"""Aggregate statistics over explanations and run-level summaries."""

import csv
import json
from dataclasses import dataclass

import numpy as np

from .core import Explanation, classify_errors
from .dataset import Dataset, SplitDataset
from .ensemble import r_squared


class ReportError(ValueError):
    pass


@dataclass
class OutOfRangeStats:
    """Per group, fraction of instances with exactly k of n features out of range."""
    n: int
    histogram_large: list[float]  # index k = 0..n
    histogram_reasonable: list[float]
    all_out_fraction_large: float
    all_out_fraction_reasonable: float

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "histogram_large": self.histogram_large,
            "histogram_reasonable": self.histogram_reasonable,
            "all_out_fraction_large": self.all_out_fraction_large,
            "all_out_fraction_reasonable": self.all_out_fraction_reasonable,
        }


def _histogram(explanations: list[Explanation], n: int) -> list[float]:
    counts = np.zeros(n + 1)
    for e in explanations:
        counts[e.out_of_range_count()] += 1
    return [float(c) / len(explanations) for c in counts]


def out_of_range_stats(explanations_large: list[Explanation],
                       explanations_reasonable: list[Explanation]) -> OutOfRangeStats:
    if not explanations_large or not explanations_reasonable:
        raise ReportError("both explanation lists must be non-empty")
    ns = {e.n for e in explanations_large} | {e.n for e in explanations_reasonable}
    if len(ns) != 1:
        raise ReportError(f"mixed n values across explanations: {sorted(ns)}")
    n = ns.pop()
    hist_l = _histogram(explanations_large, n)
    hist_r = _histogram(explanations_reasonable, n)
    return OutOfRangeStats(
        n=n,
        histogram_large=hist_l,
        histogram_reasonable=hist_r,
        all_out_fraction_large=hist_l[n],
        all_out_fraction_reasonable=hist_r[n],
    )


def prediction_scatter_dump(model, test: Dataset, path) -> None:
    """CSV of row_id, actual, predicted, error, is_large for re-plotting."""
    if test.n_rows == 0:
        raise ReportError("empty test set")
    predicted = model.predict_batch(test.rows)
    taxonomy = classify_errors(test.target, predicted, test.row_ids)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "actual", "predicted", "error", "is_large"])
        for i in range(test.n_rows):
            writer.writerow([
                test.row_ids[i],
                repr(float(test.target[i])),
                repr(float(predicted[i])),
                repr(float(taxonomy.errors[i])),
                int(taxonomy.large_mask[i]),
            ])


@dataclass
class RunSummary:
    r_squared: float
    epsilon_large: float
    large_error_fraction: float
    train_rows: int
    test_rows: int
    n_large: int
    n_reasonable: int

    def to_json_dict(self) -> dict:
        return {
            "r_squared": self.r_squared,
            "epsilon_large": self.epsilon_large,
            "large_error_fraction": self.large_error_fraction,
            "train_rows": self.train_rows,
            "test_rows": self.test_rows,
            "n_large": self.n_large,
            "n_reasonable": self.n_reasonable,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"


def run_summary(model, split: SplitDataset, taxonomy) -> RunSummary:
    n_large = int(taxonomy.large_mask.sum())
    n_reasonable = int((~taxonomy.large_mask).sum())
    return RunSummary(
        r_squared=r_squared(model, split.test),
        epsilon_large=taxonomy.epsilon_large,
        large_error_fraction=n_large / (n_large + n_reasonable),
        train_rows=split.train.n_rows,
        test_rows=split.test.n_rows,
        n_large=n_large,
        n_reasonable=n_reasonable,
    )


def write_rank_frequency_csv(table: list[tuple[str, float]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "fraction_in_top_n"])
        for name, fraction in table:
            writer.writerow([name, repr(fraction)])
