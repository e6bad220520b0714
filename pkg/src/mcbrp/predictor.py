"""Predictor contract helpers.

A predictor is any object with ``predict(x) -> float`` and
``predict_batch(matrix) -> vector``, pure and safe to call concurrently.
FunctionPredictor adapts a plain row-wise numpy function to the contract.
"""

import numpy as np


class FunctionPredictor:
    """Wrap f(matrix) -> vector (or a scalar-per-row function) as a predictor."""

    def __init__(self, fn):
        self._fn = fn

    def predict_batch(self, rows) -> np.ndarray:
        rows = np.asarray(rows, dtype=float)
        out = np.asarray(self._fn(rows), dtype=float)
        if out.shape != (rows.shape[0],):
            raise ValueError(f"predictor returned shape {out.shape} for {rows.shape[0]} rows")
        return out

    def predict(self, x) -> float:
        return float(self.predict_batch(np.asarray(x, dtype=float)[None, :])[0])
