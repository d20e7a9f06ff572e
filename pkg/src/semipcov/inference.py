"""Exact Gaussian likelihood and maximum-likelihood fitting.

Parameters are optimized in an unconstrained space: logs of variances,
scales, smoothnesses and nuggets; a scaled ``tanh`` for bounded
coefficients; and, for more than two components, unit-diagonal triangular
factors whose normalized row products give the coefficient matrices. Every
iterate therefore decodes to a valid model.
"""

import math
import time
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import pdist

from .covariance import (
    FactorizationError,
    SemiparamModel,
    assemble_sigma,
    cholesky_jitter,
    coef_name,
    lag_table,
)
from .dataset import substream
from .validity import (
    beta_from_cholesky_rows,
    beta_from_expdist,
    bounded_coef,
    cholesky_rows_from_beta,
    unbounded_coef,
)

LOG2PI = math.log(2 * math.pi)


def loglik(model, data, max_dim=None):
    """Gaussian log-likelihood of the zero-mean data under ``model``.

    Missing observations (NaN) are dropped from the likelihood.

    Raises
    ------
    ValueError
        on a component-count mismatch.
    FactorizationError
        if the covariance cannot be factorized even with jitter.
    """
    if data.p != model.p:
        raise ValueError(f"model has {model.p} components, data has {data.p}")
    x = data.vector()
    kw = {} if max_dim is None else {"max_dim": max_dim}
    S = assemble_sigma(model, data.locations, **kw)
    seen = ~np.isnan(x)
    if not np.all(seen):
        S = S[np.ix_(seen, seen)]
        x = x[seen]
    L, _ = cholesky_jitter(S)
    z = linalg.solve_triangular(L, x, lower=True, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(-0.5 * (logdet + z @ z + x.size * LOG2PI))


def aic_value(loglik_value, n_params):
    return 2.0 * n_params - 2.0 * loglik_value


def aic(fit):
    """Akaike information criterion ``2k - 2 loglik`` of a fit."""
    return aic_value(fit.loglik, fit.n_params)


# ---------------------------------------------------------------------------
# parameter coding
# ---------------------------------------------------------------------------

def _real(v):
    return np.asarray(v, dtype=float)


# a zero nugget maps to a very negative (finite) log
_FORWARD = {"log": lambda v: np.log(np.maximum(v, 1e-300)), "coef": unbounded_coef, "real": _real}
_INVERSE = {"log": np.exp, "coef": bounded_coef, "real": _real}


def name_matches(name, pattern):
    return name == pattern or name.startswith(pattern + "_") or name.startswith(pattern + "[")


class ParamCodec:
    """Bijection between a model family and an unconstrained vector.

    Parameters
    ----------
    model : CovarianceModel
        supplies the family and the values of fixed parameters.
    fixed : iterable of str or dict
        names (or group prefixes such as ``"nu"`` or ``"nugget"``) held at
        their current values; a dict also sets those values first.
    coherence : {"tanh", "cholesky", "expdist"}, optional
        coefficient parameterization of a semiparametric model. Defaults to
        ``"tanh"`` for two components and ``"cholesky"`` otherwise.
    """

    def __init__(self, model, fixed=(), coherence=None):
        self.coherence = None
        if isinstance(model, SemiparamModel):
            self.coherence = coherence or ("tanh" if model.p == 2 else "cholesky")
            if self.coherence not in ("tanh", "cholesky", "expdist"):
                raise ValueError(f"unknown coherence parameterization {self.coherence!r}")
        if isinstance(fixed, dict):
            model = self._set(model, fixed)
            fixed = list(fixed)
        self.base = model
        values, self.kinds = self._natural(model)
        self.names = list(values)
        unknown = [f for f in fixed if not any(name_matches(n, f) for n in self.names)]
        if unknown:
            raise KeyError(f"unknown parameter(s) {unknown}; known: {self.names}")
        self.fixed = [n for n in self.names if any(name_matches(n, f) for f in fixed)]
        self.free = [n for n in self.names if n not in self.fixed]
        self._base_values = values

    # natural parameters in the chosen coherence parameterization
    def _natural(self, model):
        values = model.natural_params()
        kinds = model.transforms()
        if self.coherence in (None, "tanh"):
            return values, kinds
        p, ks = model.p, model.coh.knots.indices
        for i, j in combinations(range(p), 2):
            for k in ks:
                del values[coef_name(i, j, k)], kinds[coef_name(i, j, k)]
        beta = model.coh.beta_stack(p)
        if self.coherence == "cholesky":
            t = cholesky_rows_from_beta(beta)
            for i, j in combinations(range(p), 2):
                for n, k in enumerate(ks):
                    values[f"t_{i + 1}_{j + 1}[{k}]"] = float(t[n, i, j])
                    kinds[f"t_{i + 1}_{j + 1}[{k}]"] = "real"
        else:
            # positions relative to component 1; exact only for exp-distance matrices
            for n, k in enumerate(ks):
                for i in range(p):
                    pos = 0.0 if i == 0 else -math.log(min(max(beta[n, 0, i], 1e-12), 1.0))
                    values[f"t_{i + 1}[{k}]"] = pos
                    kinds[f"t_{i + 1}[{k}]"] = "real"
        return values, kinds

    def _set(self, model, values):
        values = dict(values)
        if self.coherence in ("cholesky", "expdist"):
            p, ks = model.p, model.coh.knots.indices
            if self.coherence == "cholesky":
                names = [f"t_{i + 1}_{j + 1}[{k}]" for i, j in combinations(range(p), 2) for k in ks]
                if any(n in values for n in names):
                    t = np.zeros((len(ks), p, p))
                    for i, j in combinations(range(p), 2):
                        for n, k in enumerate(ks):
                            t[n, i, j] = values.pop(f"t_{i + 1}_{j + 1}[{k}]")
                    beta = beta_from_cholesky_rows(t)
                    values.update(self._coef_values(beta, p, ks))
            else:
                names = [f"t_{i + 1}[{k}]" for i in range(p) for k in ks]
                if any(n in values for n in names):
                    t = np.array([[values.pop(f"t_{i + 1}[{k}]") for i in range(p)] for k in ks])
                    values.update(self._coef_values(beta_from_expdist(t), p, ks))
        return model.with_natural(values)

    @staticmethod
    def _coef_values(beta, p, ks):
        return {coef_name(i, j, k): float(beta[n, i, j])
                for i, j in combinations(range(p), 2) for n, k in enumerate(ks)}

    @property
    def n_free(self):
        return len(self.free)

    def natural(self, model):
        return self._natural(model)[0]

    def encode(self, model):
        vals = self.natural(model)
        return np.array([float(_FORWARD[self.kinds[n]](vals[n])) for n in self.free])

    def values(self, x):
        vals = dict(self._base_values)
        for n, v in zip(self.free, np.asarray(x, dtype=float)):
            vals[n] = float(_INVERSE[self.kinds[n]](v))
        return vals

    def decode(self, x):
        return self._set(self.base, self.values(x))


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

@dataclass
class FitResult:
    model: object
    loglik: float
    n_params: int
    converged: bool
    n_evals: int
    runtime_s: float
    params: dict = field(default_factory=dict)
    free: list = field(default_factory=list)
    x: np.ndarray = None
    trace: list = field(default_factory=list)
    message: str = ""

    @property
    def aic(self):
        return aic_value(self.loglik, self.n_params)

    @property
    def estimates(self):
        return self.model

    def to_dict(self):
        return {
            "variant": self.model.variant,
            "loglik": self.loglik,
            "aic": self.aic,
            "n_params": self.n_params,
            "converged": bool(self.converged),
            "n_evals": self.n_evals,
            "runtime_s": self.runtime_s,
            "free": list(self.free),
            "params": {k: float(v) for k, v in self.params.items()},
            "message": self.message,
        }


def median_distance(locations):
    loc = np.asarray(locations, dtype=float)
    if loc.shape[0] < 2:
        return 1.0
    return float(np.median(pdist(loc)))


def initial_values(model, data, codec):
    """Neutral, scale-aware starting values for the free parameters.

    Variances start at the empirical componentwise variances, scales at the
    inverse median pairwise distance, free smoothness at 1, nuggets at 5% of
    the variance and all cross-dependence parameters at zero.
    """
    var = np.nanvar(data.obs, axis=0)
    var = np.where(var > 0, var, 1.0)
    a0 = 1.0 / median_distance(data.locations)
    vals = codec.natural(model)
    for n in codec.free:
        comp = n.rsplit("_", 1)[-1]
        idx = int(comp) - 1 if comp.isdigit() and len(comp) == 1 else None
        if n.startswith("sigma2_"):
            vals[n] = var[idx]
        elif n.startswith("nugget_"):
            vals[n] = 0.05 * var[idx]
        elif n.startswith(("a_", "za_")) or n == "a":
            vals[n] = a0
        elif n.startswith(("nu_", "znu_")) and n != "nu_12":
            vals[n] = 1.0
        elif n == "nu_12":
            nus = [vals.get("nu_1", 1.0), vals.get("nu_2", 1.0)]
            vals[n] = 0.5 * sum(nus) + 0.5
        elif n.startswith(("b_", "rho_")):
            vals[n] = 0.0
        elif n.startswith("t_"):
            # zero coherence: identity coefficient matrices (expdist: far apart)
            vals[n] = 0.0 if codec.coherence == "cholesky" else 10.0 * (int(n[2]) - 1)
        elif n.startswith("zsigma2_"):
            vals[n] = 1.0
        elif n.startswith("B_"):
            i, l = int(n[2]) - 1, int(n[3]) - 1
            vals[n] = math.sqrt(var[i]) if i == l else 0.0
    return vals


def _is_cross(name):
    if name.startswith(("b_", "t_", "rho_")) or name in ("a_12", "nu_12"):
        return True
    return name.startswith("B_") and name[2] != name[3]


def fit(model, data, fixed=(), coherence=None, init="auto", seed=0, n_restarts=3,
        max_evals=20000, fatol=1e-8, xatol=1e-4, simplex_step=0.5, restart_scale=0.3,
        staged=True, callback=None):
    """Maximum-likelihood fit by Nelder-Mead with random restarts.

    Parameters
    ----------
    model : CovarianceModel
        template: family, fixed values and (with ``init="model"``) the start.
    data : SpatialDataset
    fixed : iterable of str or dict
        see :class:`ParamCodec`.
    init : {"auto", "model"}
    n_restarts : int
        extra simplex runs started from the best point plus Gaussian noise
        of scale ``restart_scale`` (seeded from ``seed``).
    fatol : float
        relative function tolerance (scaled by ``|loglik|`` at the start).
    staged : bool
        with ``init="auto"``, first fit the marginal parameters with all
        cross-dependence held at zero, then everything from there. A start
        far from the data scale otherwise easily stalls the joint simplex.
    callback : callable, optional
        called with each decoded model the optimizer evaluates.

    Returns
    -------
    FitResult
        non-convergence is reported via ``converged``, never raised.
    """
    t0 = time.perf_counter()
    codec = ParamCodec(model, fixed=fixed, coherence=coherence)
    if init == "auto":
        start = initial_values(codec.base, data, codec)
        codec = ParamCodec(codec._set(codec.base, start), fixed=codec.fixed, coherence=codec.coherence)
    elif init != "model":
        raise ValueError("init must be 'auto' or 'model'")
    lag_table(data.locations)  # warm the lag cache once

    state = {"n": 0, "f": np.inf, "trace": []}

    def objective(x, cd):
        state["n"] += 1
        m = cd.decode(x)
        if callback is not None:
            callback(m)
        if not m.is_valid():
            f = np.inf
        else:
            try:
                f = -loglik(m, data)
            except (FactorizationError, FloatingPointError, ValueError):
                f = np.inf
        state["f"] = min(state["f"], f)
        state["trace"].append(-state["f"])
        return f

    def simplex_runs(cd, x0, restarts, rng):
        best_f, best_x = objective(x0, cd), x0
        abs_fatol = fatol * max(1.0, abs(best_f) if np.isfinite(best_f) else 1.0)
        ok, msg = False, ""
        for r in range(restarts + 1):
            xs = x0 if r == 0 else best_x + rng.normal(0.0, restart_scale, size=x0.size)
            budget = max_evals - state["n"]
            if budget <= x0.size + 1:
                msg = "evaluation budget exhausted"
                break
            simplex = np.vstack([xs, xs + simplex_step * np.eye(x0.size)])
            res = optimize.minimize(objective, xs, args=(cd,), method="Nelder-Mead",
                                    options={"initial_simplex": simplex, "maxfev": budget,
                                             "fatol": abs_fatol, "xatol": xatol})
            if res.fun <= best_f:
                best_f, best_x = float(res.fun), np.array(res.x)
                ok, msg = bool(res.success), str(res.message)
        return best_f, best_x, ok, msg

    if codec.n_free == 0:
        x0 = codec.encode(codec.base)
        ll = -objective(x0, codec)
        return FitResult(codec.base, ll, 0, True, state["n"], time.perf_counter() - t0,
                         codec.natural(codec.base), [], x0, state["trace"], "no free parameters")

    rng = substream(seed, "restarts")
    cross = [n for n in codec.free if _is_cross(n)]
    if staged and init == "auto" and cross and len(cross) < codec.n_free:
        marg = ParamCodec(codec.base, fixed=codec.fixed + cross, coherence=codec.coherence)
        _, xm, _, _ = simplex_runs(marg, marg.encode(marg.base), 0, rng)
        codec = ParamCodec(marg.decode(xm), fixed=codec.fixed, coherence=codec.coherence)

    f_best, x_best, converged, message = simplex_runs(codec, codec.encode(codec.base), n_restarts, rng)
    m_best = codec.decode(x_best)
    return FitResult(m_best, float(-f_best), codec.n_free, converged, state["n"],
                     time.perf_counter() - t0, codec.natural(m_best), list(codec.free),
                     x_best, state["trace"], message)
