"""Spectral densities and coherence functions.

Angular-frequency convention: a covariance ``C`` and its isotropic spectral
density ``f`` are related by ``C(h) = int_{R^d} exp(i u.h) f(|u|) du`` (no
``(2 pi)^-d`` factor), so ``int_{R^d} f = C(0)``.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .bspline import KnotConfig, basis_matrix
from .specfun import gammaln


@dataclass(frozen=True)
class MarginalParams:
    """Matérn triple for one component plus an optional nugget variance."""

    sigma: float
    nu: float
    a: float
    nugget: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0 and self.nu > 0 and self.a > 0):
            raise ValueError(f"sigma, nu, a must be positive: {self}")
        if not self.nugget >= 0:
            raise ValueError("nugget must be nonnegative")


@dataclass(frozen=True)
class FrequencyGrid:
    """Frequencies ``delta, 2 delta, ..., m delta`` with ``m delta = omega_t``."""

    omega_t: float
    m: int

    def __post_init__(self):
        if not self.omega_t > 0:
            raise ValueError("omega_t must be positive")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("m must be a positive integer")

    @property
    def delta_f(self):
        return self.omega_t / self.m

    @property
    def omegas(self):
        return self.delta_f * np.arange(1, self.m + 1)


def _pair(i, j):
    i, j = int(i), int(j)
    if i == j:
        raise ValueError("coherence pairs need i != j")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True, eq=False)
class SplineCoherenceSpec:
    """B-spline coefficients ``S_ij`` for every unordered component pair.

    Pairs are 0-based ``(i, j)`` with ``i < j``; lookups accept either order.
    """

    knots: KnotConfig
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, b in self.coeffs.items():
            b = np.array(b, dtype=float)
            if b.shape != (self.knots.n_basis,):
                raise ValueError(
                    f"pair {key}: expected {self.knots.n_basis} coefficients, got {b.shape}"
                )
            b.setflags(write=False)
            clean[_pair(*key)] = b
        object.__setattr__(self, "coeffs", clean)

    @classmethod
    def constant(cls, knots, p, value):
        """Every coefficient of every pair set to ``value`` (scalar or p x p)."""
        value = np.broadcast_to(np.asarray(value, dtype=float), (p, p))
        return cls(knots, {(i, j): np.full(knots.n_basis, value[i, j])
                           for i, j in combinations(range(p), 2)})

    def __getitem__(self, pair):
        try:
            return self.coeffs[_pair(*pair)]
        except KeyError:
            raise KeyError(f"no coefficient set for pair {pair}") from None

    def pairs(self):
        return sorted(self.coeffs)

    def beta_stack(self, p):
        """Coefficient matrices ``beta_k`` as an array of shape ``(K+4, p, p)``."""
        beta = np.tile(np.eye(p), (self.knots.n_basis, 1, 1))
        for i, j in combinations(range(p), 2):
            beta[:, i, j] = beta[:, j, i] = self[i, j]
        return beta


def matern_sdf(params, omega, d=2):
    """Matérn spectral density ``f(omega | sigma, nu, a)`` in ``R^d``.

    Truncation at ``omega_t`` is the caller's job.
    """
    if d < 1:
        raise ValueError("dimension d must be >= 1")
    omega = np.asarray(omega, dtype=float)
    s, nu, a = params.sigma, params.nu, params.a
    logf = (2 * np.log(s) + gammaln(nu + d / 2) - gammaln(nu) + 2 * nu * np.log(a)
            - (d / 2) * np.log(np.pi) - (nu + d / 2) * np.log(a * a + omega * omega))
    return np.exp(logf)


def coherence_semiparam(spec, pair, omega):
    """Spline coherence ``gamma_ij(omega) = sum_k b_k B_k(omega)`` on ``[0, omega_t]``."""
    b = spec[pair]
    omega = np.asarray(omega, dtype=float)
    out = basis_matrix(spec.knots, omega.ravel()) @ b
    return out.reshape(omega.shape) if omega.ndim else float(out[0])


def cross_sdf(spec, fi, fj, omega, pair=(0, 1)):
    """Cross spectral density ``gamma_ij(omega) * sqrt(f_i(omega) f_j(omega))``.

    ``fi`` and ``fj`` are callables returning the marginal densities.
    """
    gam = coherence_semiparam(spec, pair, omega)
    return gam * np.sqrt(fi(omega) * fj(omega))


def coherence_bimatern(m1, m2, a12, nu12, rho12, omega, d=2):
    """Coherence of the full bivariate Matérn model.

    ``m1`` and ``m2`` carry the marginal ``(sigma, nu, a)``; the cross term
    is ``rho12 * M(h | sqrt(sigma1 sigma2), nu12, a12)``.
    """
    if not (a12 > 0 and nu12 > 0):
        raise ValueError("a12 and nu12 must be positive")
    omega = np.asarray(omega, dtype=float)
    w2 = omega * omega
    n1, n2, a1, a2 = m1.nu, m2.nu, m1.a, m2.a
    log_const = (gammaln(nu12 + d / 2) + 0.5 * gammaln(n1) + 0.5 * gammaln(n2)
                 + 2 * nu12 * np.log(a12)
                 - 0.5 * gammaln(n1 + d / 2) - 0.5 * gammaln(n2 + d / 2) - gammaln(nu12)
                 - n1 * np.log(a1) - n2 * np.log(a2))
    log_w = ((n1 / 2 + d / 4) * np.log(a1 * a1 + w2) + (n2 / 2 + d / 4) * np.log(a2 * a2 + w2)
             - (nu12 + d / 2) * np.log(a12 * a12 + w2))
    return rho12 * np.exp(log_const + log_w)


def coherence_lmc(B, z1, z2, omega, d=2):
    """Coherence of a bivariate linear model of coregionalization ``X = B Z``."""
    B = np.asarray(B, dtype=float)
    f1 = matern_sdf(z1, omega, d)
    f2 = matern_sdf(z2, omega, d)
    num = B[0, 0] * B[1, 0] * f1 + B[0, 1] * B[1, 1] * f2
    den1 = B[0, 0] ** 2 * f1 + B[0, 1] ** 2 * f2
    den2 = B[1, 0] ** 2 * f1 + B[1, 1] ** 2 * f2
    if np.any(den1 == 0) or np.any(den2 == 0):
        raise ZeroDivisionError("degenerate LMC: a component has zero spectral density")
    return num / np.sqrt(den1 * den2)
