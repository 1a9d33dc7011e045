"""Joint approximate diagonalization with non-orthogonal updates (FFDIAG).

Each sweep linearizes ``(I + U) C_k (I + U)'`` around the current diagonals
and solves one 2x2 least-squares system per index pair for the zero-diagonal
update ``U``.  Filters are rows of ``W``: ``W C_k W'`` is driven diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError

__all__ = ["JADResult", "offdiag_objective", "ffdiag"]


@dataclass
class JADResult:
    W: np.ndarray
    objective: list[float] = field(default_factory=list)
    converged: bool = False
    n_iter: int = 0

    def diagonals(self, covs) -> np.ndarray:
        """(n_matrices, n_filters) diagonal of ``W C_k W'``."""
        covs = np.asarray(covs, float)
        return np.einsum("in,knm,im->ki", self.W, covs, self.W)


def offdiag_objective(W: np.ndarray, covs: np.ndarray) -> float:
    """Sum over matrices of the squared off-diagonal entries of ``W C_k W'``."""
    t = W @ covs @ W.T
    diag = np.einsum("kii->ki", t)
    return float(np.sum(t * t) - np.sum(diag * diag))


def _unit_rows(W):
    return W / np.linalg.norm(W, axis=1, keepdims=True)


def _whitener(mean_cov):
    vals, vecs = np.linalg.eigh(mean_cov)
    if vals[0] <= 1e-12 * vals[-1]:
        raise NumericalError(
            "mean covariance is rank deficient; reduce dimensionality before joint diagonalization"
        )
    order = np.argsort(vals)[::-1]
    return (vecs[:, order] / np.sqrt(vals[order])).T


def _pair_update(T):
    diag = np.einsum("kii->ki", T)
    off = T - np.einsum("ki,ij->kij", diag, np.eye(T.shape[1]))
    z = diag.T @ diag
    y = np.einsum("kj,kij->ij", diag, off)
    zd = np.diag(z)
    det = np.outer(zd, zd) - z * z
    num = z * y.T - zd[:, None] * y
    ok = np.abs(det) > 1e-13 * np.outer(zd, zd)
    U = np.where(ok, num / np.where(ok, det, 1.0), 0.0)
    np.fill_diagonal(U, 0.0)
    return U


def ffdiag(covs, max_iter: int = 100, tol: float = 1e-9, init=None, theta: float = 0.9,
           max_halvings: int = 40) -> JADResult:
    """Jointly diagonalize a set of symmetric PSD matrices.

    Parameters
    ----------
    covs : sequence of (n, n) arrays
        At least two matrices of common size.
    max_iter : int
        Sweep budget; ``converged`` is False when it runs out.
    tol : float
        Stop once the off-diagonal objective drops below this value.
    init : (n, n) array, optional
        Starting filters; defaults to the whitening transform of the mean.
    theta : float
        Frobenius-norm cap on each update, keeping ``I + U`` invertible.

    Returns
    -------
    JADResult
        Unit-norm filter rows and the per-sweep objective, which never
        increases (steps that would raise it are halved).
    """
    mats = [np.asarray(getattr(c, "matrix", c), float) for c in covs]
    if len({m.shape for m in mats}) > 1:
        raise ValidationError("ffdiag needs at least two square matrices of common size")
    covs = np.asarray(mats)
    if covs.ndim != 3 or covs.shape[0] < 2 or covs.shape[1] != covs.shape[2]:
        raise ValidationError("ffdiag needs at least two square matrices of common size")
    if not np.all(np.isfinite(covs)):
        raise ValidationError("ffdiag: non-finite matrix entries")
    covs = 0.5 * (covs + covs.transpose(0, 2, 1))
    n = covs.shape[1]

    W = _whitener(covs.mean(axis=0)) if init is None else np.array(init, float)
    W = _unit_rows(W)
    obj = offdiag_objective(W, covs)
    result = JADResult(W, [obj])
    eye = np.eye(n)

    for it in range(max_iter):
        if obj <= tol:
            result.converged = True
            break
        U = _pair_update(W @ covs @ W.T)
        norm = np.linalg.norm(U)
        if norm > theta:
            U *= theta / norm
        step = 1.0
        for _ in range(max_halvings):
            cand = (eye + step * U) @ W
            if not np.all(np.isfinite(cand)):
                raise NumericalError("ffdiag: non-finite update")
            cand = _unit_rows(cand)
            cand_obj = offdiag_objective(cand, covs)
            if cand_obj <= obj:
                break
            step *= 0.5
        else:
            # no descent direction left at machine precision
            break
        if np.linalg.cond(cand) > 1e12:
            raise NumericalError("ffdiag: update made the filter matrix singular")
        W, obj = cand, cand_obj
        result.objective.append(obj)
        result.n_iter = it + 1
    else:
        result.converged = obj <= tol

    result.W = W
    result.converged = result.converged or obj <= tol
    return result
