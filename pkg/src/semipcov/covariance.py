"""Covariance models and assembly of the block covariance matrix.

The semiparametric model synthesizes covariances from spectra by a finite
Hankel sum over the frequency grid ``delta, ..., m delta``::

    C_ij(h) = sum_w (2 pi w)^(kappa+1) h^-kappa J_kappa(w h) f_ij(w) delta

with ``kappa = d/2 - 1``. Raw sums are rescaled so that ``C_ii(0)`` equals
``sigma_i^2``; cross terms get the geometric mean of the two factors.

Reference models (independent, full bivariate, parsimonious Matérn and the
linear model of coregionalization) are evaluated in closed form.
"""

import hashlib
from collections import OrderedDict
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np
from scipy import linalg
from scipy.special import kve

from .bspline import basis_matrix
from .specfun import bessel_j, gamma, gammaln
from .spectral import (
    FrequencyGrid,
    MarginalParams,
    SplineCoherenceSpec,
    coherence_bimatern,
    matern_sdf,
)
from .validity import check_validity

MAX_DIM = 5000


class CovarianceError(Exception):
    pass


class FactorizationError(CovarianceError):
    pass


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def matern_cov(h, sigma, nu, a):
    """Matérn covariance ``sigma^2 2^(1-nu)/Gamma(nu) (a h)^nu K_nu(a h)``."""
    if not (sigma > 0 and nu > 0 and a > 0):
        raise ValueError("sigma, nu and a must be positive")
    h = np.asarray(h, dtype=float)
    x = a * np.abs(h)
    out = np.full(x.shape, float(sigma) ** 2)
    pos = x > 1e-12
    if np.any(pos):
        xp = x[pos]
        log_pref = (1 - nu) * np.log(2) - gammaln(nu) + nu * np.log(xp)
        # kve(x) = kv(x) e^x keeps large arguments finite
        out[pos] = sigma * sigma * np.exp(log_pref - xp) * kve(nu, xp)
    return out if out.ndim else float(out)


def parsimonious_constant(nu_i, nu_j, d=2):
    """Colocated-correlation factor linking constant coherence to the cross term.

    ``rho_ij = tau_ij * C(nu_i, nu_j, d)`` where ``C`` is this ratio of
    gamma functions (equal to 1 when ``nu_i == nu_j``).
    """
    nb = 0.5 * (nu_i + nu_j)
    return float(np.exp(0.5 * gammaln(nu_i + d / 2) + 0.5 * gammaln(nu_j + d / 2) + gammaln(nb)
                        - 0.5 * gammaln(nu_i) - 0.5 * gammaln(nu_j) - gammaln(nb + d / 2)))


def parsimonious_cross_cov(tau_ij, sig_i, sig_j, nu_i, nu_j, a, d, h):
    """Cross-covariance of the parsimonious multivariate Matérn.

    ``rho_ij M(h | sqrt(sig_i sig_j), (nu_i + nu_j)/2, a)`` with
    ``rho_ij = tau_ij * parsimonious_constant(nu_i, nu_j, d)``.
    """
    rho = tau_ij * parsimonious_constant(nu_i, nu_j, d)
    return rho * matern_cov(h, np.sqrt(sig_i * sig_j), 0.5 * (nu_i + nu_j), a)


# ---------------------------------------------------------------------------
# Hankel sum kernel and lag bookkeeping
# ---------------------------------------------------------------------------

def hankel_kernel(h, grid, d=2):
    """Weights ``W[r, s]`` so that ``C(h_r) = sum_s W[r, s] f(omega_s)``.

    At ``h = 0`` the factor ``J_kappa(w h) / h^kappa`` is replaced by its
    limit ``(w/2)^kappa / Gamma(kappa + 1)``.
    """
    kappa = d / 2 - 1
    h = np.atleast_1d(np.asarray(h, dtype=float))
    w = grid.omegas
    pref = (2 * np.pi * w) ** (kappa + 1) * grid.delta_f
    W = np.empty((h.size, w.size))
    zero = h == 0
    if np.any(zero):
        W[zero] = pref * (w / 2) ** kappa / gamma(kappa + 1)
    nz = ~zero
    if np.any(nz):
        hn = h[nz][:, None]
        W[nz] = pref * bessel_j(kappa, w * hn) / hn ** kappa
    return W


def round_sig(x, digits=12):
    """Round to ``digits`` significant digits (zeros stay zero)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    nz = x != 0
    if np.any(nz):
        mag = np.floor(np.log10(np.abs(x[nz])))
        scale = 10.0 ** (digits - 1 - mag)
        out[nz] = np.round(x[nz] * scale) / scale
    return out


def _pair_distances(a, b):
    # coordinate-wise differences avoid the cancellation of the Gram expansion
    d2 = np.zeros((a.shape[0], b.shape[0]))
    for c in range(a.shape[1]):
        diff = a[:, c][:, None] - b[:, c][None, :]
        d2 += diff * diff
    return np.sqrt(d2)


class LagTable:
    """Distinct Euclidean lags among a set of locations.

    Lags are deduplicated after rounding to 12 significant digits so that
    each distinct lag is synthesized only once. The full ``n x n`` index is
    kept only for ``n <= index_cap``; larger sets are indexed block by block.
    """

    def __init__(self, locations, block=512, index_cap=4000):
        loc = np.asarray(locations, dtype=float)
        if loc.ndim != 2:
            raise ValueError("locations must be an (n, d) array")
        if not np.all(np.isfinite(loc)):
            raise ValueError("locations must be finite")
        self.locations = loc
        self.n, self.d = loc.shape
        self.block = block
        self._kernels = {}
        uniq = []
        for r0 in range(0, self.n, block):
            D = round_sig(_pair_distances(loc[r0:r0 + block], loc))
            uniq.append(np.unique(D))
        self.lags = np.unique(np.concatenate(uniq)) if uniq else np.zeros(0)
        self.index = None
        if self.n <= index_cap:
            self.index = self.block_index(0, self.n)

    def block_index(self, r0, r1):
        D = round_sig(_pair_distances(self.locations[r0:r1], self.locations))
        return np.searchsorted(self.lags, D).astype(np.int32)

    def blocks(self):
        if self.index is not None:
            yield 0, self.n, self.index
            return
        for r0 in range(0, self.n, self.block):
            r1 = min(r0 + self.block, self.n)
            yield r0, r1, self.block_index(r0, r1)

    def kernel(self, grid, d):
        key = (grid, d)
        if key not in self._kernels:
            self._kernels[key] = hankel_kernel(self.lags, grid, d)
        return self._kernels[key]


_LAG_CACHE = OrderedDict()


def lag_table(locations, maxsize=4):
    """Cached :class:`LagTable` keyed on the location array contents."""
    if isinstance(locations, LagTable):
        return locations
    loc = np.ascontiguousarray(locations, dtype=float)
    key = (loc.shape, hashlib.sha1(loc.tobytes()).hexdigest())
    tab = _LAG_CACHE.get(key)
    if tab is None:
        tab = LagTable(loc)
        _LAG_CACHE[key] = tab
        while len(_LAG_CACHE) > maxsize:
            _LAG_CACHE.popitem(last=False)
    else:
        _LAG_CACHE.move_to_end(key)
    return tab


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

def _marg_names(i):
    return [f"sigma2_{i + 1}", f"a_{i + 1}", f"nu_{i + 1}", f"nugget_{i + 1}"]


def _marg_natural(m, i):
    return dict(zip(_marg_names(i), (m.sigma ** 2, m.a, m.nu, m.nugget)))


def _marg_from(values, i, base):
    n = _marg_names(i)
    return MarginalParams(
        sigma=float(np.sqrt(values.get(n[0], base.sigma ** 2))),
        a=float(values.get(n[1], base.a)),
        nu=float(values.get(n[2], base.nu)),
        nugget=float(values.get(n[3], base.nugget)),
    )


def _marg_transforms(i):
    return dict.fromkeys(_marg_names(i), "log")


def coef_name(i, j, k):
    return f"b_{i + 1}_{j + 1}[{k}]"


class CovarianceModel:
    """Common surface of all multivariate covariance models.

    Subclasses provide ``p``, ``d``, ``nuggets``, :meth:`lag_cov` and the
    natural-parameter hooks used by the likelihood optimizer.
    """

    variant = "base"

    def lag_cov(self, lags, table=None):
        """Covariances at distinct lags, shape ``(p, p, len(lags))`` (no nugget)."""
        raise NotImplementedError

    def cov(self, i, j, h):
        h = np.asarray(h, dtype=float)
        out = self.lag_cov(np.atleast_1d(h).ravel())[i, j]
        return out.reshape(h.shape) if h.ndim else float(out[0])

    def natural_params(self):
        raise NotImplementedError

    def transforms(self):
        raise NotImplementedError

    def with_natural(self, values):
        raise NotImplementedError

    def is_valid(self):
        return True

    def marginal_variances(self):
        return np.diag(self.lag_cov(np.zeros(1))[:, :, 0]).copy()


@dataclass(frozen=True, eq=False)
class SemiparamModel(CovarianceModel):
    """Matérn marginals with B-spline coherences, synthesized by Hankel sums."""

    marginals: tuple
    coh: SplineCoherenceSpec
    grid: FrequencyGrid
    d: int = 2
    variant = "semiparam"

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if self.p < 2:
            raise ValueError("the semiparametric model needs p >= 2")
        if abs(self.grid.omega_t - self.coh.knots.omega_t) > 1e-12 * self.grid.omega_t:
            raise ValueError("frequency grid and knot configuration disagree on omega_t")
        missing = [pr for pr in combinations(range(self.p), 2) if pr not in self.coh.coeffs]
        if missing:
            raise ValueError(f"missing coherence coefficients for pairs {missing}")

    @property
    def p(self):
        return len(self.marginals)

    @property
    def nuggets(self):
        return np.array([m.nugget for m in self.marginals])

    def validity(self):
        return check_validity(self.coh, self.p)

    def is_valid(self):
        return self.validity().passed

    def spectra(self):
        """Marginal densities ``(p, m)`` and coherences ``{pair: (m,)}`` on the grid."""
        w = self.grid.omegas
        F = np.array([matern_sdf(m, w, self.d) for m in self.marginals])
        G = basis_matrix(self.coh.knots, w)
        coh = {pr: G @ self.coh[pr] for pr in combinations(range(self.p), 2)}
        return F, coh

    def lag_cov(self, lags, table=None):
        lags = np.asarray(lags, dtype=float)
        W = table.kernel(self.grid, self.d) if table is not None else hankel_kernel(lags, self.grid, self.d)
        w0 = hankel_kernel(np.zeros(1), self.grid, self.d)[0]
        F, coh = self.spectra()
        p = self.p
        pairs = list(combinations(range(p), 2))
        S = np.empty((p + len(pairs), F.shape[1]))
        S[:p] = F
        for n, (i, j) in enumerate(pairs):
            S[p + n] = coh[(i, j)] * np.sqrt(F[i] * F[j])
        raw = W @ S.T
        scale = np.array([m.sigma ** 2 for m in self.marginals]) / (F @ w0)
        out = np.empty((p, p, lags.size))
        for i in range(p):
            out[i, i] = scale[i] * raw[:, i]
        for n, (i, j) in enumerate(pairs):
            out[i, j] = out[j, i] = np.sqrt(scale[i] * scale[j]) * raw[:, p + n]
        return out

    def coherence(self, i, j, omega):
        from .spectral import coherence_semiparam
        return coherence_semiparam(self.coh, (i, j), omega)

    def natural_params(self):
        vals = {}
        for i, m in enumerate(self.marginals):
            vals.update(_marg_natural(m, i))
        for i, j in combinations(range(self.p), 2):
            for k, b in zip(self.coh.knots.indices, self.coh[i, j]):
                vals[coef_name(i, j, k)] = float(b)
        return vals

    def transforms(self):
        tr = {}
        for i in range(self.p):
            tr.update(_marg_transforms(i))
        for i, j in combinations(range(self.p), 2):
            for k in self.coh.knots.indices:
                tr[coef_name(i, j, k)] = "coef"
        return tr

    def with_natural(self, values):
        margs = tuple(_marg_from(values, i, m) for i, m in enumerate(self.marginals))
        coeffs = {}
        for i, j in combinations(range(self.p), 2):
            coeffs[(i, j)] = np.array([values.get(coef_name(i, j, k), b) for k, b in
                                       zip(self.coh.knots.indices, self.coh[i, j])])
        return replace(self, marginals=margs, coh=SplineCoherenceSpec(self.coh.knots, coeffs))


@dataclass(frozen=True, eq=False)
class IndependentMatern(CovarianceModel):
    marginals: tuple
    d: int = 2
    variant = "independent"

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @property
    def p(self):
        return len(self.marginals)

    @property
    def nuggets(self):
        return np.array([m.nugget for m in self.marginals])

    def lag_cov(self, lags, table=None):
        lags = np.asarray(lags, dtype=float)
        out = np.zeros((self.p, self.p, lags.size))
        for i, m in enumerate(self.marginals):
            out[i, i] = matern_cov(lags, m.sigma, m.nu, m.a)
        return out

    def coherence(self, i, j, omega):
        return np.zeros_like(np.asarray(omega, dtype=float))

    def natural_params(self):
        vals = {}
        for i, m in enumerate(self.marginals):
            vals.update(_marg_natural(m, i))
        return vals

    def transforms(self):
        tr = {}
        for i in range(self.p):
            tr.update(_marg_transforms(i))
        return tr

    def with_natural(self, values):
        return replace(self, marginals=tuple(_marg_from(values, i, m)
                                             for i, m in enumerate(self.marginals)))


@dataclass(frozen=True, eq=False)
class BivariateMatern(CovarianceModel):
    """Full bivariate Matérn: cross term ``rho12 M(h | sqrt(s1 s2), nu12, a12)``."""

    marginals: tuple
    a12: float
    nu12: float
    rho12: float
    d: int = 2
    variant = "bimatern"

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))
        if len(self.marginals) != 2:
            raise ValueError("the full bivariate Matérn has exactly two components")
        if not (self.a12 > 0 and self.nu12 > 0):
            raise ValueError("a12 and nu12 must be positive")

    p = 2

    @property
    def nuggets(self):
        return np.array([m.nugget for m in self.marginals])

    def coherence(self, i=0, j=1, omega=None):
        m1, m2 = self.marginals
        return coherence_bimatern(m1, m2, self.a12, self.nu12, self.rho12, omega, self.d)

    def is_valid(self):
        m1, m2 = self.marginals
        if self.nu12 < 0.5 * (m1.nu + m2.nu) - 1e-12:
            return False
        w = np.concatenate([[0.0], np.logspace(-4, 4, 801)])
        return bool(np.all(np.abs(self.coherence(0, 1, w)) <= 1.0 + 1e-12))

    def lag_cov(self, lags, table=None):
        lags = np.asarray(lags, dtype=float)
        m1, m2 = self.marginals
        out = np.empty((2, 2, lags.size))
        out[0, 0] = matern_cov(lags, m1.sigma, m1.nu, m1.a)
        out[1, 1] = matern_cov(lags, m2.sigma, m2.nu, m2.a)
        out[0, 1] = out[1, 0] = self.rho12 * matern_cov(
            lags, np.sqrt(m1.sigma * m2.sigma), self.nu12, self.a12)
        return out

    def natural_params(self):
        vals = {}
        for i, m in enumerate(self.marginals):
            vals.update(_marg_natural(m, i))
        vals.update(a_12=self.a12, nu_12=self.nu12, rho_12=self.rho12)
        return vals

    def transforms(self):
        tr = {}
        for i in range(2):
            tr.update(_marg_transforms(i))
        tr.update(a_12="log", nu_12="log", rho_12="coef")
        return tr

    def with_natural(self, values):
        return replace(
            self,
            marginals=tuple(_marg_from(values, i, m) for i, m in enumerate(self.marginals)),
            a12=float(values.get("a_12", self.a12)),
            nu12=float(values.get("nu_12", self.nu12)),
            rho12=float(values.get("rho_12", self.rho12)),
        )


@dataclass(frozen=True, eq=False)
class ParsimoniousMatern(CovarianceModel):
    """Common scale ``a``; cross smoothness ``(nu_i + nu_j)/2``; colocated ``rho``."""

    sigmas: tuple
    nus: tuple
    a: float
    rho: np.ndarray
    nugget: tuple = None
    d: int = 2
    variant = "parsimonious"

    def __post_init__(self):
        p = len(self.sigmas)
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "nus", tuple(float(s) for s in self.nus))
        rho = np.array(self.rho, dtype=float).reshape(p, p)
        np.fill_diagonal(rho, 1.0)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        nug = (0.0,) * p if self.nugget is None else tuple(float(v) for v in self.nugget)
        object.__setattr__(self, "nugget", nug)

    @property
    def p(self):
        return len(self.sigmas)

    @property
    def nuggets(self):
        return np.array(self.nugget)

    def tau(self):
        p = self.p
        t = np.eye(p)
        for i, j in combinations(range(p), 2):
            t[i, j] = t[j, i] = self.rho[i, j] / parsimonious_constant(self.nus[i], self.nus[j], self.d)
        return t

    def is_valid(self):
        return bool(np.linalg.eigvalsh(self.tau())[0] >= -1e-10 * self.p)

    def lag_cov(self, lags, table=None):
        lags = np.asarray(lags, dtype=float)
        p = self.p
        out = np.empty((p, p, lags.size))
        for i in range(p):
            out[i, i] = matern_cov(lags, self.sigmas[i], self.nus[i], self.a)
        for i, j in combinations(range(p), 2):
            out[i, j] = out[j, i] = self.rho[i, j] * matern_cov(
                lags, np.sqrt(self.sigmas[i] * self.sigmas[j]),
                0.5 * (self.nus[i] + self.nus[j]), self.a)
        return out

    def coherence(self, i, j, omega):
        return np.full_like(np.asarray(omega, dtype=float), self.tau()[i, j])

    def natural_params(self):
        vals = {}
        for i in range(self.p):
            vals[f"sigma2_{i + 1}"] = self.sigmas[i] ** 2
            vals[f"nu_{i + 1}"] = self.nus[i]
            vals[f"nugget_{i + 1}"] = self.nugget[i]
        vals["a"] = self.a
        for i, j in combinations(range(self.p), 2):
            vals[f"rho_{i + 1}{j + 1}"] = float(self.rho[i, j])
        return vals

    def transforms(self):
        tr = {}
        for i in range(self.p):
            tr.update({f"sigma2_{i + 1}": "log", f"nu_{i + 1}": "log", f"nugget_{i + 1}": "log"})
        tr["a"] = "log"
        for i, j in combinations(range(self.p), 2):
            tr[f"rho_{i + 1}{j + 1}"] = "coef"
        return tr

    def with_natural(self, values):
        p = self.p
        rho = np.array(self.rho)
        for i, j in combinations(range(p), 2):
            rho[i, j] = rho[j, i] = values.get(f"rho_{i + 1}{j + 1}", rho[i, j])
        return replace(
            self,
            sigmas=tuple(np.sqrt(values.get(f"sigma2_{i + 1}", self.sigmas[i] ** 2)) for i in range(p)),
            nus=tuple(values.get(f"nu_{i + 1}", self.nus[i]) for i in range(p)),
            nugget=tuple(values.get(f"nugget_{i + 1}", self.nugget[i]) for i in range(p)),
            a=float(values.get("a", self.a)),
            rho=rho,
        )


@dataclass(frozen=True, eq=False)
class LMC(CovarianceModel):
    """Linear model of coregionalization ``X = B Z`` with independent Matérn ``Z``."""

    B: np.ndarray
    latent: tuple
    nugget: tuple = None
    d: int = 2
    variant = "lmc"

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        if B.ndim != 2 or B.shape[1] != len(self.latent):
            raise ValueError("B must be p x L with L latent fields")
        B.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "latent", tuple(self.latent))
        nug = (0.0,) * B.shape[0] if self.nugget is None else tuple(float(v) for v in self.nugget)
        object.__setattr__(self, "nugget", nug)

    @property
    def p(self):
        return self.B.shape[0]

    @property
    def nuggets(self):
        return np.array(self.nugget)

    def lag_cov(self, lags, table=None):
        lags = np.asarray(lags, dtype=float)
        M = np.array([matern_cov(lags, z.sigma, z.nu, z.a) for z in self.latent])
        return np.einsum("il,jl,lh->ijh", self.B, self.B, M)

    def coherence(self, i, j, omega):
        f = np.array([matern_sdf(z, omega, self.d) for z in self.latent])
        Bi, Bj = self.B[i], self.B[j]
        num = np.tensordot(Bi * Bj, f, 1)
        den = np.sqrt(np.tensordot(Bi ** 2, f, 1) * np.tensordot(Bj ** 2, f, 1))
        if np.any(den == 0):
            raise ZeroDivisionError("degenerate LMC: a component has zero spectral density")
        return num / den

    def natural_params(self):
        vals = {}
        for i in range(self.p):
            for l in range(self.B.shape[1]):
                vals[f"B_{i + 1}{l + 1}"] = float(self.B[i, l])
        for l, z in enumerate(self.latent):
            vals[f"zsigma2_{l + 1}"] = z.sigma ** 2
            vals[f"za_{l + 1}"] = z.a
            vals[f"znu_{l + 1}"] = z.nu
        for i in range(self.p):
            vals[f"nugget_{i + 1}"] = self.nugget[i]
        return vals

    def transforms(self):
        tr = {}
        for name in self.natural_params():
            tr[name] = "real" if name.startswith("B_") else "log"
        return tr

    def with_natural(self, values):
        B = np.array(self.B)
        for i in range(self.p):
            for l in range(B.shape[1]):
                B[i, l] = values.get(f"B_{i + 1}{l + 1}", B[i, l])
        latent = tuple(
            MarginalParams(
                sigma=float(np.sqrt(values.get(f"zsigma2_{l + 1}", z.sigma ** 2))),
                a=float(values.get(f"za_{l + 1}", z.a)),
                nu=float(values.get(f"znu_{l + 1}", z.nu)),
            )
            for l, z in enumerate(self.latent)
        )
        nug = tuple(values.get(f"nugget_{i + 1}", self.nugget[i]) for i in range(self.p))
        return replace(self, B=B, latent=latent, nugget=nug)


REFERENCE_VARIANTS = (IndependentMatern, BivariateMatern, ParsimoniousMatern, LMC)


def hankel_sum_cov(model, pair, h):
    """Normalized finite Hankel sum covariance ``C_ij(h)`` of a semiparametric model."""
    i, j = pair
    return model.cov(i, j, h)


def reference_cov(model, pair, h):
    """Closed-form covariance ``C_ij(h)`` of a reference model."""
    if not isinstance(model, REFERENCE_VARIANTS):
        raise TypeError(f"not a reference model: {type(model).__name__}")
    if not model.is_valid():
        raise ValueError(f"invalid {model.variant} parameters")
    i, j = pair
    return model.cov(i, j, h)


# ---------------------------------------------------------------------------
# assembly and factorization
# ---------------------------------------------------------------------------

def assemble_sigma(model, locations, max_dim=MAX_DIM, dtype=np.float64, nugget=True):
    """Block covariance matrix of ``(X(s_1)', ..., X(s_n)')'``.

    Block ``(q, r)`` holds ``C_ij(||s_q - s_r||)``; the nugget of component
    ``i`` is added to its diagonal entries.

    Raises
    ------
    MemoryError
        if ``n p`` exceeds ``max_dim``.
    """
    table = lag_table(locations)
    p, n = model.p, table.n
    if n < 1:
        raise ValueError("need at least one location")
    if n * p > max_dim:
        raise MemoryError(f"n*p = {n * p} exceeds the configured cap {max_dim}")
    C = model.lag_cov(table.lags, table)
    S = np.empty((n * p, n * p), dtype=dtype)
    for r0, r1, idx in table.blocks():
        for i in range(p):
            rows = slice(r0 * p + i, r1 * p, p)
            for j in range(p):
                S[rows, j::p] = C[i, j][idx]
    if nugget:
        nug = model.nuggets
        if np.any(nug):
            diag = S.reshape(-1)[:: n * p + 1]  # view on the diagonal
            diag += np.tile(nug, n).astype(dtype)
    return S


def cholesky_jitter(S, start=1e-10, stop=1e-4):
    """Lower Cholesky factor, adding diagonal jitter if plain factorization fails.

    Jitter starts at ``start * mean(diag)`` and grows tenfold up to
    ``stop * mean(diag)``; the input is never modified.

    Returns
    -------
    L : ndarray
    jitter : float
        absolute jitter added (0 if none was needed).
    """
    try:
        return linalg.cholesky(S, lower=True, check_finite=False), 0.0
    except linalg.LinAlgError:
        pass
    scale = float(np.mean(np.diag(S)))
    level = start
    while level <= stop * (1 + 1e-9):
        A = S.copy()
        A[np.diag_indices_from(A)] += level * scale
        try:
            return linalg.cholesky(A, lower=True, overwrite_a=True, check_finite=False), level * scale
        except linalg.LinAlgError:
            level *= 10
    raise FactorizationError(f"Cholesky failed even with jitter {stop:g} x mean diagonal")
