import numpy as np
import pytest

from mcbrp import (
    Dataset,
    SyntheticSpec,
    fit_gbr,
    generate_synthetic,
    split_by_column_threshold,
)
from mcbrp.core import classify_errors


@pytest.fixture(scope="session")
def small_pipeline():
    """Shared small synthetic run: (split, model, taxonomy)."""
    ds = generate_synthetic(
        SyntheticSpec(n_features=6, n_rows=1000, outlier_fraction=0.05), seed=11
    )
    split = split_by_column_threshold(ds, "period", 8.0)
    model = fit_gbr(split.train, {"n_trees": 150})
    predicted = model.predict_batch(split.test.rows)
    taxonomy = classify_errors(split.test.target, predicted, split.test.row_ids)
    return split, model, taxonomy


def make_dataset(rows, target, names=None, row_ids=None):
    rows = np.asarray(rows, dtype=float)
    if names is None:
        names = [f"x{j}" for j in range(rows.shape[1])]
    if row_ids is None:
        row_ids = list(range(rows.shape[0]))
    return Dataset(feature_names=names, rows=rows,
                   target=np.asarray(target, dtype=float), row_ids=row_ids)
