"""Pure-numpy fallback for the packed-ensemble prediction kernel.

Traversal is vectorized over rows: for each tree, every row's node index is
advanced one level at a time until all rows sit on leaves.  Bitwise identical
to the compiled kernel (same arithmetic, same order of accumulation).
"""

import numpy as np


def predict_packed(X, feature, threshold, left, right, value, offsets,
                   init_value, learning_rate):
    n = X.shape[0]
    acc = np.zeros(n)
    row = np.arange(n)
    for t in range(len(offsets) - 1):
        node = np.full(n, offsets[t], dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            idx = node[active]
            go_left = X[row[active], feature[idx]] <= threshold[idx]
            node[active] = np.where(go_left, left[idx], right[idx])
            active = feature[node] >= 0
        acc += value[node]
    return init_value + learning_rate * acc
