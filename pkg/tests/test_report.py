import csv

import numpy as np
import pytest

from mcbrp.core import Explanation, ExplanationRow, classify_errors
from mcbrp.predictor import FunctionPredictor
from mcbrp.report import (
    ReportError,
    out_of_range_stats,
    prediction_scatter_dump,
    run_summary,
    write_rank_frequency_csv,
)

from conftest import make_dataset


def explanation(flags, iid=0):
    rows = [
        ExplanationRow(feature=j, feature_name=f"x{j}", observed=0.0,
                       stratum_size=50, reasonable_low=-1.0, reasonable_high=1.0,
                       out_of_range=flag)
        for j, flag in enumerate(flags)
    ]
    return Explanation(instance_id=iid, actual=0.0, predicted=0.0, error=0.0,
                       epsilon_large=1.0, n=len(flags), rows=rows,
                       surrogate_fit_quality=1.0)


class TestOutOfRangeStats:
    def test_all_out_large(self):
        stats = out_of_range_stats(
            [explanation([True] * 5, i) for i in range(3)],
            [explanation([False] * 5)],
        )
        assert stats.all_out_fraction_large == 1.0
        assert stats.all_out_fraction_reasonable == 0.0

    def test_single_explanation_mass_at_k(self):
        stats = out_of_range_stats(
            [explanation([True, True, False, False, False])],
            [explanation([False] * 5)],
        )
        assert stats.histogram_large[2] == 1.0
        assert sum(stats.histogram_large) == pytest.approx(1.0, abs=1e-9)

    def test_histograms_are_distributions(self):
        rng = np.random.default_rng(2)
        expl_l = [explanation(list(rng.random(4) < 0.5), i) for i in range(10)]
        expl_r = [explanation(list(rng.random(4) < 0.2), i) for i in range(10)]
        stats = out_of_range_stats(expl_l, expl_r)
        assert sum(stats.histogram_large) == pytest.approx(1.0, abs=1e-9)
        assert sum(stats.histogram_reasonable) == pytest.approx(1.0, abs=1e-9)
        assert all(0 <= f <= 1 for f in stats.histogram_large + stats.histogram_reasonable)

    def test_group_swap_symmetric(self):
        expl_l = [explanation([True, False], i) for i in range(4)]
        expl_r = [explanation([True, True], i) for i in range(6)]
        a = out_of_range_stats(expl_l, expl_r)
        b = out_of_range_stats(expl_r, expl_l)
        assert a.histogram_large == b.histogram_reasonable
        assert a.histogram_reasonable == b.histogram_large

    def test_mixed_n_rejected(self):
        with pytest.raises(ReportError, match="mixed n"):
            out_of_range_stats([explanation([True] * 5)], [explanation([True] * 3)])

    def test_empty_rejected(self):
        with pytest.raises(ReportError):
            out_of_range_stats([], [explanation([True])])


class TestScatterDump:
    def setup_dump(self, tmp_path):
        rows = np.arange(12, dtype=float).reshape(6, 2)
        target = np.array([0.0, 1.0, 2.0, 3.0, 4.0, 50.0])
        ds = make_dataset(rows, target)
        f = FunctionPredictor(lambda r: np.zeros(r.shape[0]))
        path = tmp_path / "scatter.csv"
        prediction_scatter_dump(f, ds, path)
        with open(path, newline="") as fh:
            return ds, f, list(csv.DictReader(fh))

    def test_row_count_and_error_identity(self, tmp_path):
        ds, _, records = self.setup_dump(tmp_path)
        assert len(records) == ds.n_rows
        for rec in records:
            assert float(rec["error"]) == abs(float(rec["actual"]) - float(rec["predicted"]))

    def test_is_large_matches_partition(self, tmp_path):
        ds, f, records = self.setup_dump(tmp_path)
        tax = classify_errors(ds.target, f.predict_batch(ds.rows), ds.row_ids)
        flagged = {rec["row_id"] for rec in records if rec["is_large"] == "1"}
        assert flagged == {str(i) for i in tax.large_ids}

    def test_round_trip_recovers_taxonomy(self, tmp_path):
        ds, f, records = self.setup_dump(tmp_path)
        tax_file = classify_errors([float(r["actual"]) for r in records],
                                   [float(r["predicted"]) for r in records])
        tax_direct = classify_errors(ds.target, f.predict_batch(ds.rows))
        assert tax_file.epsilon_large == tax_direct.epsilon_large
        assert tax_file.large_ids == tax_direct.large_ids


class TestRunSummary:
    def test_fractions(self, small_pipeline):
        split, model, tax = small_pipeline
        summary = run_summary(model, split, tax)
        assert summary.test_rows == split.test.n_rows
        assert summary.n_large + summary.n_reasonable == summary.test_rows
        assert summary.large_error_fraction == pytest.approx(summary.n_large / summary.test_rows)
        assert summary.epsilon_large == tax.epsilon_large

    def test_hand_fraction(self):
        # |L|=4, |R|=96 -> 0.04
        assert 4 / (4 + 96) == 0.04

    def test_json_serializable(self, small_pipeline):
        split, model, tax = small_pipeline
        summary = run_summary(model, split, tax)
        assert '"r_squared"' in summary.to_json()


def test_rank_frequency_csv(tmp_path):
    path = tmp_path / "freq.csv"
    write_rank_frequency_csv([("a", 0.5), ("b", 0.25)], path)
    with open(path, newline="") as fh:
        records = list(csv.DictReader(fh))
    assert records[0] == {"feature": "a", "fraction_in_top_n": "0.5"}
