import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from mcbrp import GbrModel, ModelError, fit_gbr, r_squared
from mcbrp.ensemble import _treekernel_py
from mcbrp.ensemble._backend import BACKEND
from mcbrp.predictor import FunctionPredictor

from conftest import make_dataset


class TestFit:
    def test_constant_target(self):
        ds = make_dataset(np.arange(20).reshape(10, 2), np.full(10, 7.5))
        model = fit_gbr(ds, {"n_trees": 5})
        assert np.allclose(model.predict_batch(ds.rows), 7.5)

    def test_zero_trees_predicts_mean(self):
        ds = make_dataset([[0], [1], [2]], [1.0, 2.0, 6.0], names=["x"])
        model = fit_gbr(ds, {"n_trees": 0})
        assert model.predict([123.0]) == pytest.approx(3.0)

    def test_single_stump_hand_trace(self):
        # x in {0,1}, y in {0,10}: init=5, one stump split at 0.5 with
        # leaf residuals -5/+5, lr=1 -> exact predictions 0 and 10
        ds = make_dataset([[0.0], [1.0]], [0.0, 10.0], names=["x"])
        model = fit_gbr(ds, {"n_trees": 1, "max_depth": 1, "learning_rate": 1.0})
        assert model.init_value == 5.0
        tree = model.trees[0]
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 0.5
        assert model.predict([0.0]) == 0.0
        assert model.predict([1.0]) == 10.0

    def test_training_loss_non_increasing(self, small_pipeline):
        split, _, _ = small_pipeline
        train = split.train
        model = fit_gbr(train, {"n_trees": 30})
        losses = []
        for k in range(len(model.trees) + 1):
            partial = GbrModel(model.init_value, model.learning_rate,
                               model.trees[:k], model.feature_names)
            resid = train.target - partial.predict_batch(train.rows)
            losses.append(float(np.sum(resid**2)))
        assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))

    def test_empty_and_degenerate(self):
        ds = make_dataset([[1.0]], [1.0], names=["x"])
        with pytest.raises(ModelError):
            fit_gbr(ds, {"learning_rate": 0.0})
        with pytest.raises(ModelError):
            fit_gbr(ds, {"max_depth": 0})


class TestPredict:
    def test_empty_matrix(self, small_pipeline):
        _, model, _ = small_pipeline
        out = model.predict_batch(np.zeros((0, len(model.feature_names))))
        assert out.shape == (0,)

    def test_duplicated_row(self, small_pipeline):
        split, model, _ = small_pipeline
        row = split.test.rows[0]
        out = model.predict_batch(np.stack([row, row]))
        assert out[0] == out[1]

    def test_batch_matches_per_row(self, small_pipeline):
        split, model, _ = small_pipeline
        rows = split.test.rows[:20]
        batch = model.predict_batch(rows)
        singles = [model.predict(r) for r in rows]
        assert np.array_equal(batch, singles)

    def test_dimension_mismatch(self, small_pipeline):
        _, model, _ = small_pipeline
        with pytest.raises(ModelError):
            model.predict_batch(np.zeros((3, 2)))

    def test_concurrent_equals_serial(self, small_pipeline):
        split, model, _ = small_pipeline
        chunks = np.array_split(split.test.rows, 8)
        serial = np.concatenate([model.predict_batch(c) for c in chunks])
        with ThreadPoolExecutor(max_workers=8) as pool:
            parallel = np.concatenate(list(pool.map(model.predict_batch, chunks)))
        assert np.array_equal(serial, parallel)

    def test_backends_agree(self, small_pipeline):
        split, model, _ = small_pipeline
        rows = np.ascontiguousarray(split.test.rows[:200])
        via_backend = model.predict_batch(rows)
        via_python = _treekernel_py.predict_packed(
            rows, *model._packed, model.init_value, model.learning_rate
        )
        assert np.array_equal(via_backend, via_python)

    def test_backend_selected(self):
        assert BACKEND in ("cython", "python")


class TestSerialization:
    def test_round_trip_bit_identical(self, small_pipeline, tmp_path):
        split, model, _ = small_pipeline
        path = tmp_path / "model.json"
        model.save(path)
        restored = GbrModel.load(path)
        probe = split.test.rows[:50]
        assert np.array_equal(model.predict_batch(probe), restored.predict_batch(probe))

    def test_version_check(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format_version": 99}), encoding="utf-8")
        with pytest.raises(ModelError, match="format"):
            GbrModel.load(path)


class TestRSquared:
    def test_perfect_predictor(self):
        ds = make_dataset([[0], [1], [2]], [1.0, 2.0, 3.0], names=["x"])
        f = FunctionPredictor(lambda rows: rows[:, 0] + 1.0)
        assert r_squared(f, ds) == pytest.approx(1.0)

    def test_mean_predictor(self):
        ds = make_dataset([[0], [1], [2]], [1.0, 2.0, 3.0], names=["x"])
        f = FunctionPredictor(lambda rows: np.full(rows.shape[0], 2.0))
        assert r_squared(f, ds) == pytest.approx(0.0)

    def test_hand_value(self):
        # y=[1,2,3], yhat=[1,2,4]: 1 - 1/2 = 0.5
        ds = make_dataset([[0], [1], [2]], [1.0, 2.0, 3.0], names=["x"])
        preds = {0.0: 1.0, 1.0: 2.0, 2.0: 4.0}
        f = FunctionPredictor(lambda rows: np.array([preds[v] for v in rows[:, 0]]))
        assert r_squared(f, ds) == pytest.approx(0.5)

    def test_zero_variance_target(self):
        ds = make_dataset([[0], [1]], [2.0, 2.0], names=["x"])
        f = FunctionPredictor(lambda rows: rows[:, 0])
        with pytest.raises(ModelError, match="variance"):
            r_squared(f, ds)
