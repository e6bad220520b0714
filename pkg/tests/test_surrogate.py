import numpy as np
import pytest

from mcbrp.predictor import FunctionPredictor
from mcbrp.surrogate import (
    ImportanceRanking,
    SurrogateError,
    local_importance,
    rank_frequency,
)

from conftest import make_dataset


def gaussian_background(stds, n_rows=300, seed=0):
    rng = np.random.default_rng(seed)
    rows = rng.normal(size=(n_rows, len(stds))) * np.asarray(stds)
    return make_dataset(rows, np.zeros(n_rows))


class TestLocalImportance:
    def test_linear_recovery_order_and_signs(self):
        # f = 3*x0 - 2*x1 + 0*x2 with equal stds: ranking [x0 (+), x1 (-)]
        bg = gaussian_background([1.0, 1.0, 1.0])
        f = FunctionPredictor(lambda r: 3 * r[:, 0] - 2 * r[:, 1])
        ranking = local_importance(f, np.zeros(3), bg, n=2, seed=5)
        assert ranking.feature_indices == [0, 1]
        assert ranking.ranked_features[0][1] > 0
        assert ranking.ranked_features[1][1] < 0
        assert ranking.surrogate_fit_quality > 0.999

    def test_constant_model_degenerate(self):
        bg = gaussian_background([1.0, 1.0])
        f = FunctionPredictor(lambda r: np.full(r.shape[0], 4.2))
        ranking = local_importance(f, np.zeros(2), bg, n=2, seed=0)
        assert ranking.surrogate_fit_quality == 0.0
        assert all(abs(w) < 1e-9 for _, w in ranking.ranked_features)

    @pytest.mark.parametrize("seed", range(10))
    def test_single_relevant_feature_any_seed(self, seed):
        bg = gaussian_background([1.0, 1.0, 1.0], seed=1)
        f = FunctionPredictor(lambda r: np.sin(r[:, 1]))
        ranking = local_importance(f, np.zeros(3), bg, n=1, seed=seed)
        assert ranking.feature_indices == [1]

    def test_deterministic(self):
        bg = gaussian_background([1.0, 2.0])
        f = FunctionPredictor(lambda r: r[:, 0] * r[:, 1])
        a = local_importance(f, np.ones(2), bg, n=2, seed=9, instance_id="r1")
        b = local_importance(f, np.ones(2), bg, n=2, seed=9, instance_id="r1")
        assert a == b

    def test_constant_background_feature_excluded(self):
        rows = np.column_stack([np.random.default_rng(0).normal(size=50), np.full(50, 3.0)])
        bg = make_dataset(rows, np.zeros(50))
        f = FunctionPredictor(lambda r: r[:, 0] + r[:, 1])
        ranking = local_importance(f, np.array([0.0, 3.0]), bg, n=1, seed=0)
        assert ranking.excluded_features == [1]
        assert ranking.feature_indices == [0]

    def test_scale_invariant_ranking(self):
        # same mechanism on a rescaled feature should rank identically
        bg = gaussian_background([1.0, 100.0])
        f = FunctionPredictor(lambda r: 2 * r[:, 0] + 0.05 * r[:, 1])
        ranking = local_importance(f, np.zeros(2), bg, n=2, seed=3)
        # |w*sigma|: feature1 = 5 > feature0 = 2
        assert ranking.feature_indices == [1, 0]

    def test_preconditions(self):
        bg = gaussian_background([1.0, 1.0])
        f = FunctionPredictor(lambda r: r[:, 0])
        with pytest.raises(SurrogateError):
            local_importance(f, np.zeros(2), bg, n=3)
        with pytest.raises(SurrogateError):
            local_importance(f, np.zeros(2), bg, n=1, num_samples=5)


class TestRankFrequency:
    def ranking(self, features, iid=0):
        return ImportanceRanking(iid, [(j, 1.0) for j in features],
                                 n=len(features), surrogate_fit_quality=1.0)

    def test_identical_rankings(self):
        rankings = [self.ranking([0, 2]) for _ in range(4)]
        table = dict(rank_frequency(rankings, ["a", "b", "c"]))
        assert table == {"a": 1.0, "c": 1.0, "b": 0.0}

    def test_single_ranking_fractions_binary(self):
        table = rank_frequency([self.ranking([1])], ["a", "b"])
        assert set(f for _, f in table) <= {0.0, 1.0}

    def test_fractions_and_order(self):
        rankings = [self.ranking([0]), self.ranking([1]), self.ranking([1])]
        table = rank_frequency(rankings, ["a", "b"])
        assert table == [("b", 2 / 3), ("a", 1 / 3)]

    def test_empty_rejected(self):
        with pytest.raises(SurrogateError):
            rank_frequency([], ["a"])
