import numpy as np
import pytest
from scipy.linalg import subspace_angles
from scipy.stats import ortho_group

from conftest import random_spd
from mcsp.csp import csp_two_class
from mcsp.errors import NumericalError, ValidationError
from mcsp.jad import ffdiag, offdiag_objective


def _off_dominant_ratio(M):
    M = np.abs(M)
    return float(np.max(np.sort(M, axis=1)[:, -2] / M.max(axis=1)))


def _is_permutation(M):
    return sorted(np.argmax(np.abs(M), axis=1).tolist()) == list(range(M.shape[0]))


def test_objective_oracle(rng):
    covs = np.array([random_spd(rng, 4) for _ in range(3)])
    W = rng.standard_normal((4, 4))
    brute = 0.0
    for C in covs:
        t = W @ C @ W.T
        brute += sum(t[i, j] ** 2 for i in range(4) for j in range(4) if i != j)
    assert offdiag_objective(W, covs) == pytest.approx(brute, rel=1e-12)


def test_already_diagonal_inputs(rng):
    covs = [np.diag(rng.uniform(0.5, 2, 5)) for _ in range(3)]
    res = ffdiag(covs, tol=1e-12)
    assert res.converged
    assert res.objective[-1] < 1e-20
    assert _off_dominant_ratio(res.W) < 1e-6 and _is_permutation(res.W)


def test_constructed_recovery():
    rng = np.random.default_rng(99)
    A = ortho_group.rvs(5, random_state=rng)
    covs = [A @ np.diag(rng.uniform(0.1, 2.0, 5)) @ A.T for _ in range(4)]
    res = ffdiag(covs, tol=1e-12)
    assert res.converged
    M = res.W @ A
    assert _off_dominant_ratio(M) < 1e-3 and _is_permutation(M)
    assert np.all(np.diff(res.objective) <= 1e-12)


def test_non_orthogonal_mixing_recovery():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 6))
    covs = [A @ np.diag(rng.uniform(0.1, 2.0, 6)) @ A.T for _ in range(4)]
    res = ffdiag(covs, tol=1e-12, max_iter=200)
    assert res.converged
    assert _off_dominant_ratio(res.W @ A) < 1e-3


def test_two_class_matches_csp(rng):
    C1, C2 = random_spd(rng, 6), random_spd(rng, 6)
    res = ffdiag([C1, C2], tol=1e-14, max_iter=200)
    bank = csp_two_class(C1, C2)
    d = res.diagonals([C1, C2])
    ratio = d[0] / d.sum(axis=0)
    pick = [int(np.argmax(ratio)), int(np.argmin(ratio))]
    ang = subspace_angles(res.W[pick].T, bank.W[[0, 5]].T)
    assert np.max(ang) < 1e-3


def test_non_convergence_reported(rng):
    covs = [random_spd(rng, 8) for _ in range(5)]
    res = ffdiag(covs, max_iter=2, tol=1e-30)
    assert not res.converged
    assert res.n_iter <= 2
    assert np.all(np.diff(res.objective) <= 1e-12)


def test_input_validation(rng):
    with pytest.raises(ValidationError):
        ffdiag([np.eye(3)])
    with pytest.raises(ValidationError):
        ffdiag([np.eye(3), np.eye(4)])
    with pytest.raises(NumericalError):
        ffdiag([np.diag([1.0, 0.0]), np.diag([2.0, 0.0])])
