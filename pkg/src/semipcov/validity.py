"""Sufficient validity conditions for the spline coherence model.

A spline coherence specification yields a valid multivariate covariance
when every coefficient matrix ``beta_k`` (unit diagonal, off-diagonals
``b_k^(ij)``) is nonnegative definite. For two components that reduces to
``-1 <= b_k <= 1``.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

COEF_BOUND = 1.0 - 1e-6


def nnd_tolerance(p):
    return -1e-10 * p


def beta_from_cholesky_rows(t):
    """Correlation matrices from unit-diagonal upper-triangular factors.

    Parameters
    ----------
    t : array, shape (n_k, p, p)
        Only the strict upper triangle is read; the diagonal is taken as 1.

    Returns
    -------
    beta : array, shape (n_k, p, p)
        ``D^-1/2 T T' D^-1/2`` for each ``k``: normalized inner products of
        the rows of ``T``.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim == 2:
        t = t[None]
    p = t.shape[-1]
    T = np.triu(t, 1) + np.eye(p)
    G = T @ np.swapaxes(T, -1, -2)
    norms = np.sqrt(np.einsum("kii->ki", G))
    if np.any(norms == 0):
        raise ZeroDivisionError("row with zero norm")
    beta = G / (norms[:, :, None] * norms[:, None, :])
    idx = np.arange(p)
    beta[:, idx, idx] = 1.0
    return beta


def cholesky_rows_from_beta(beta):
    """Inverse of :func:`beta_from_cholesky_rows` for positive definite ``beta``."""
    beta = np.asarray(beta, dtype=float)
    if beta.ndim == 2:
        beta = beta[None]
    flip = beta[:, ::-1, ::-1]
    L = np.linalg.cholesky(flip)
    U = L[:, ::-1, ::-1]  # upper triangular with U U' = beta
    diag = np.einsum("kii->ki", U)
    return np.triu(U / diag[:, :, None], 1)


def beta_from_expdist(t):
    """Correlation matrices ``exp(-|t_i - t_j|)`` from per-component positions.

    ``t`` has shape ``(n_k, p)``; all entries of the result are positive.
    """
    t = np.asarray(t, dtype=float)
    if t.ndim == 1:
        t = t[None]
    return np.exp(-np.abs(t[:, :, None] - t[:, None, :]))


def coefficients_from_beta(beta):
    """Map a ``(n_k, p, p)`` stack to a pair -> coefficient-vector dict."""
    p = beta.shape[-1]
    return {(i, j): beta[:, i, j].copy() for i, j in combinations(range(p), 2)}


def bounded_coef(u):
    """Scaled tanh onto ``(-1 + 1e-6, 1 - 1e-6)``."""
    return COEF_BOUND * np.tanh(u)


def unbounded_coef(b):
    b = np.clip(np.asarray(b, dtype=float), -COEF_BOUND, COEF_BOUND)
    return np.arctanh(b / COEF_BOUND)


@dataclass
class ValidityReport:
    passed: bool
    p: int
    min_eigenvalues: np.ndarray
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "p": self.p,
            "min_eigenvalues": [float(v) for v in self.min_eigenvalues],
            "failures": [list(map(_jsonable, f)) for f in self.failures],
        }


def _jsonable(v):
    if isinstance(v, tuple):
        return [int(x) for x in v]
    if isinstance(v, (np.integer, int)):
        return int(v)
    return float(v)


def check_validity(spec, p):
    """Check the sufficient conditions for all coefficient matrices.

    For ``p == 2`` every coefficient must lie in ``[-1, 1]``; failures are
    ``(k, pair, value)``. For ``p > 2`` each ``beta_k`` must have smallest
    eigenvalue ``>= -1e-10 p``; failures are ``(k, eigenvalue)``.
    """
    beta = spec.beta_stack(p)
    ks = spec.knots.indices
    min_eig = np.linalg.eigvalsh(beta)[:, 0]
    failures = []
    if p == 2:
        b = spec[0, 1]
        for k, v in zip(ks, b):
            if abs(v) > 1.0:
                failures.append((int(k), (0, 1), float(v)))
    else:
        tol = nnd_tolerance(p)
        for k, v in zip(ks, min_eig):
            if v < tol:
                failures.append((int(k), float(v)))
    return ValidityReport(not failures, p, min_eig, failures)
