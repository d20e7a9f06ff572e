"""Cubic B-splines on a uniform knot grid.

The basis functions ``B_k`` for ``k = -3, ..., K`` have support
``[k*delta, (k+4)*delta]``. The knot grid is extended up to
``(K+4)*delta`` so that every ``B_k`` is a full cubic B-spline; on
``[0, (K+1)*delta)`` the basis is a partition of unity.
"""

import math
from dataclasses import dataclass

import numpy as np

ORDER = 4


@dataclass(frozen=True)
class KnotConfig:
    """Uniform knot spacing ``delta``, last index ``K`` and threshold ``omega_t``.

    ``omega_t`` must lie in ``(K*delta, (K+1)*delta]``.
    """

    delta: float
    K: int
    omega_t: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("knot spacing delta must be positive")
        if int(self.K) != self.K or self.K < 0:
            raise ValueError("K must be a nonnegative integer")
        if not self.omega_t > 0:
            raise ValueError("omega_t must be positive")
        lo, hi = self.K * self.delta, (self.K + 1) * self.delta
        if not (lo < self.omega_t <= hi * (1 + 1e-12)):
            raise ValueError(
                f"omega_t={self.omega_t} not in ({lo}, {hi}] for delta={self.delta}, K={self.K}"
            )

    @classmethod
    def from_spacing(cls, delta, omega_t):
        """Smallest ``K`` with ``omega_t <= (K+1)*delta``."""
        K = max(int(math.ceil(omega_t / delta - 1e-12)) - 1, 0)
        return cls(float(delta), K, float(omega_t))

    @property
    def n_basis(self):
        return self.K + 4

    @property
    def indices(self):
        return np.arange(-3, self.K + 1)

    @property
    def knots(self):
        return self.delta * np.arange(-3, self.K + 5, dtype=float)


def _check_omega(cfg, omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or np.any(omega > cfg.omega_t * (1 + 1e-12)):
        raise ValueError(f"omega outside [0, {cfg.omega_t}]")
    return omega


def _cox_de_boor(knots, omega):
    """All order-4 B-splines on ``knots`` at points ``omega``.

    Returns an array of shape ``(len(omega), len(knots) - 4)``.
    """
    t = knots
    x = omega[:, None]
    # order 1: indicator of [t_j, t_{j+1})
    N = ((t[:-1] <= x) & (x < t[1:])).astype(float)
    for order in range(2, ORDER + 1):
        r = order - 1
        left = (x - t[: -order]) / (t[r:-1] - t[: -order])
        right = (t[order:] - x) / (t[order:] - t[1:-r])
        N = left * N[:, :-1] + right * N[:, 1:]
    return N


def basis_matrix(cfg, omega):
    """Matrix ``B[q, k+3] = B_k(omega_q)`` for ``k = -3..K``."""
    omega = np.atleast_1d(_check_omega(cfg, omega))
    return _cox_de_boor(cfg.knots, omega)


def basis_row(cfg, omega):
    """The ``K+4`` basis values at a single frequency."""
    return basis_matrix(cfg, float(omega))[0]


def basis_eval(cfg, k, omega):
    """Value of the ``k``-th cubic B-spline at ``omega``."""
    if int(k) != k or not -3 <= k <= cfg.K:
        raise IndexError(f"basis index {k} outside [-3, {cfg.K}]")
    return float(basis_row(cfg, omega)[int(k) + 3])
