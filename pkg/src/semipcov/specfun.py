"""Special functions used by the spectral and covariance code.

Thin, validated wrappers over :mod:`scipy.special`. Orders of the Bessel
function of the first kind are restricted to ``kappa >= -0.5`` (spatial
dimension ``d >= 1`` gives ``kappa = d/2 - 1``).
"""

import numpy as np
from scipy import special

GAMMA_OVERFLOW = 171.6


def gamma(x):
    """Gamma function for positive arguments.

    Raises
    ------
    ValueError
        if any ``x <= 0``.
    OverflowError
        if any ``x > 171.6`` (the result would not fit in a double).
    """
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("gamma is only defined here for x > 0")
    if np.any(x > GAMMA_OVERFLOW):
        raise OverflowError("gamma(x) overflows for x > 171.6")
    out = special.gamma(x)
    return out if out.ndim else float(out)


def gammaln(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("gammaln is only defined here for x > 0")
    out = special.gammaln(x)
    return out if out.ndim else float(out)


def bessel_j(kappa, x):
    """Bessel function of the first kind ``J_kappa(x)`` for ``x >= 0``."""
    if kappa < -0.5:
        raise ValueError("order kappa must be >= -0.5")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("bessel_j requires x >= 0")
    if kappa == 0:
        out = special.j0(x)
    elif kappa == 1:
        out = special.j1(x)
    elif kappa == -0.5:
        # jv(-0.5, 0) is inf; the limit of sqrt(2/(pi x)) cos x is handled by
        # callers that divide by x**kappa, so only x > 0 is meaningful here.
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.sqrt(2.0 / (np.pi * x)) * np.cos(x)
    else:
        out = special.jv(kappa, x)
    return out if out.ndim else float(out)


def bessel_k(nu, x):
    """Modified Bessel function of the second kind ``K_nu(x)`` for ``x > 0``."""
    if not nu > 0:
        raise ValueError("order nu must be > 0")
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise ValueError("bessel_k requires x > 0")
    out = special.kv(nu, x)
    return out if out.ndim else float(out)
