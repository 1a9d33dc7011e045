"""NumPy implementation of the interval type-2 inference kernels.

Rule parameters are (n_rules, dim) arrays; ``weights`` is (n_rules, n_classes).
"""
import numpy as np

UNDERFLOW = 1e-300


def memberships(x, mean_lo, mean_hi, sigma):
    """Squared-exponent sums for the lower and upper envelopes of every rule."""
    d_up = np.where(x < mean_lo, x - mean_lo, np.where(x > mean_hi, x - mean_hi, 0.0))
    mid = 0.5 * (mean_lo + mean_hi)
    d_lo = np.where(x <= mid, x - mean_hi, x - mean_lo)
    inv = 0.5 / (sigma * sigma)
    return np.sum(d_lo * d_lo * inv, axis=1), np.sum(d_up * d_up * inv, axis=1)


def infer(x, mean_lo, mean_hi, sigma, weights, alpha):
    """Firing envelopes, reduced firing, output vector and total firing for one input."""
    e_lo, e_up = memberships(x, mean_lo, mean_hi, sigma)
    lower = np.exp(-e_lo)
    upper = np.exp(-e_up)
    h = (1.0 - alpha) * lower + alpha * upper
    total = float(h.sum())
    if total < UNDERFLOW:
        y = np.zeros(weights.shape[1])
    else:
        y = (h @ weights) / total
    return lower, upper, h, y, total


def infer_batch(X, mean_lo, mean_hi, sigma, weights, alpha):
    """Output vectors (n, n_classes) and total firing (n,) for many inputs."""
    X = np.asarray(X, float)
    Y = np.zeros((X.shape[0], weights.shape[1]))
    totals = np.zeros(X.shape[0])
    for i, x in enumerate(X):
        _, _, _, Y[i], totals[i] = infer(x, mean_lo, mean_hi, sigma, weights, alpha)
    return Y, totals
