# cython: language_level=3
"""Compiled interval type-2 inference kernels; mirrors ``_kernels_py``."""
import numpy as np
from libc.math cimport exp

cdef double UNDERFLOW = 1e-300


cdef double _infer_one(const double[::1] x, const double[:, ::1] lo, const double[:, ::1] hi,
                       const double[:, ::1] sigma, const double[:, ::1] w, double alpha,
                       double[::1] lower, double[::1] upper, double[::1] h, double[::1] y) noexcept nogil:
    cdef Py_ssize_t r, i, j
    cdef Py_ssize_t n_rules = lo.shape[0], dim = lo.shape[1], n_out = w.shape[1]
    cdef double e_lo, e_up, d, dl, mid, inv, total = 0.0
    for r in range(n_rules):
        e_lo = 0.0
        e_up = 0.0
        for i in range(dim):
            inv = 0.5 / (sigma[r, i] * sigma[r, i])
            if x[i] < lo[r, i]:
                d = x[i] - lo[r, i]
            elif x[i] > hi[r, i]:
                d = x[i] - hi[r, i]
            else:
                d = 0.0
            mid = 0.5 * (lo[r, i] + hi[r, i])
            if x[i] <= mid:
                dl = x[i] - hi[r, i]
            else:
                dl = x[i] - lo[r, i]
            e_lo += dl * dl * inv
            e_up += d * d * inv
        lower[r] = exp(-e_lo)
        upper[r] = exp(-e_up)
        h[r] = (1.0 - alpha) * lower[r] + alpha * upper[r]
        total += h[r]
    for j in range(n_out):
        y[j] = 0.0
    if total < UNDERFLOW:
        return total
    for r in range(n_rules):
        for j in range(n_out):
            y[j] += h[r] * w[r, j]
    for j in range(n_out):
        y[j] /= total
    return total


def infer(x, mean_lo, mean_hi, sigma, weights, double alpha):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] lo = np.ascontiguousarray(mean_lo, dtype=np.float64)
    cdef const double[:, ::1] hi = np.ascontiguousarray(mean_hi, dtype=np.float64)
    cdef const double[:, ::1] sg = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    n_rules = lo.shape[0]
    lower = np.empty(n_rules)
    upper = np.empty(n_rules)
    h = np.empty(n_rules)
    y = np.empty(w.shape[1])
    cdef double[::1] lv = lower, uv = upper, hv = h, yv = y
    cdef double total
    with nogil:
        total = _infer_one(xv, lo, hi, sg, w, alpha, lv, uv, hv, yv)
    return lower, upper, h, y, total


def infer_batch(X, mean_lo, mean_hi, sigma, weights, double alpha):
    cdef const double[:, ::1] xs = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] lo = np.ascontiguousarray(mean_lo, dtype=np.float64)
    cdef const double[:, ::1] hi = np.ascontiguousarray(mean_hi, dtype=np.float64)
    cdef const double[:, ::1] sg = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], n_rules = lo.shape[0], k
    Y = np.zeros((n, w.shape[1]))
    totals = np.zeros(n)
    cdef double[:, ::1] Yv = Y
    cdef double[::1] tv = totals
    cdef double[::1] lower = np.empty(n_rules)
    cdef double[::1] upper = np.empty(n_rules)
    cdef double[::1] h = np.empty(n_rules)
    with nogil:
        for k in range(n):
            tv[k] = _infer_one(xs[k], lo, hi, sg, w, alpha, lower, upper, h, Yv[k])
    return Y, totals
