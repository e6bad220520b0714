# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot path: batch prediction over a packed tree ensemble.

The ensemble is flattened into parallel node arrays; tree t owns nodes
offsets[t]..offsets[t+1]-1 and child indices are absolute. A negative
feature index marks a leaf.
"""

import numpy as np

cimport numpy as cnp


def predict_packed(const double[:, ::1] X,
                   int[::1] feature,
                   double[::1] threshold,
                   int[::1] left,
                   int[::1] right,
                   double[::1] value,
                   long long[::1] offsets,
                   double init_value,
                   double learning_rate):
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t n_trees = offsets.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.full(n, init_value)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, t
    cdef long long node
    cdef double acc

    with nogil:
        for i in range(n):
            acc = 0.0
            for t in range(n_trees):
                node = offsets[t]
                while feature[node] >= 0:
                    if X[i, feature[node]] <= threshold[node]:
                        node = left[node]
                    else:
                        node = right[node]
                acc += value[node]
            out[i] += learning_rate * acc
    return out_arr
