"""Co-kriging under a fitted model and proper scores for held-out data."""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .covariance import MAX_DIM, assemble_sigma, cholesky_jitter

NMSE_DEFINITION = "mean of ((y - mu) / sd)^2 (standardized squared error; 1 means calibrated)"


@dataclass(frozen=True, eq=False)
class PredictiveDistribution:
    """Gaussian predictive marginals, one per requested (location, component)."""

    mean: np.ndarray
    sd: np.ndarray
    location: np.ndarray  # index into the test locations
    component: np.ndarray  # 0-based component index

    def __len__(self):
        return self.mean.size


def _target_mask(test_components, n_test, p):
    if test_components is None:
        return np.ones((n_test, p), dtype=bool)
    tc = np.asarray(test_components)
    if tc.dtype == bool:
        tc = np.broadcast_to(tc, (n_test, p))
        return tc.copy()
    mask = np.zeros((n_test, p), dtype=bool)
    mask[:, tc.ravel()] = True
    return mask


def cokrige(model, train, test_locations, test_components=None, max_dim=MAX_DIM):
    """Conditional Gaussian predictive distribution at held-out locations.

    Parameters
    ----------
    model : CovarianceModel
    train : SpatialDataset
        may contain NaN entries (components unobserved at a site); those are
        simply left out of the conditioning set.
    test_locations : (n_test, d) array
    test_components : sequence of int or bool mask, optional
        components to predict (indices, or an ``(n_test, p)`` mask); all by
        default.

    Returns
    -------
    PredictiveDistribution
        means and standard deviations of the held-out observations, so the
        target component's nugget is included in the variance.
    """
    test = np.asarray(test_locations, dtype=float)
    if test.ndim == 1:
        test = test[:, None]
    n, p = train.n, model.p
    if n == 0:
        raise ValueError("empty training set")
    if train.p != p:
        raise ValueError(f"model has {p} components, training data has {train.p}")
    mask = _target_mask(test_components, test.shape[0], p)

    x = train.vector()
    obs = np.flatnonzero(~np.isnan(x))
    tgt = n * p + np.flatnonzero(mask.ravel())
    loc_t, comp_t = np.divmod(tgt - n * p, p)

    # a target that was itself observed is interpolated (noiselessly if no nugget)
    hit = np.all(np.isclose(test[:, None, :], train.locations[None, :, :], rtol=0, atol=1e-12), axis=2)
    seen = ~np.isnan(train.obs)
    clash = [(q, c) for q, c in zip(loc_t, comp_t) if np.any(hit[q] & seen[:, c])]
    if clash:
        warnings.warn(f"{len(clash)} prediction target(s) coincide with observed training data",
                      stacklevel=2)

    S = assemble_sigma(model, np.vstack([train.locations, test]), max_dim=max_dim)
    L, _ = cholesky_jitter(S[np.ix_(obs, obs)])
    A = linalg.solve_triangular(L, S[np.ix_(obs, tgt)], lower=True, check_finite=False)
    w = linalg.solve_triangular(L, x[obs], lower=True, check_finite=False)
    mean = A.T @ w
    var = S[tgt, tgt] - np.einsum("ij,ij->j", A, A)
    sd = np.sqrt(np.maximum(var, 0.0))
    return PredictiveDistribution(mean, sd, loc_t, comp_t)


# ---------------------------------------------------------------------------
# scores
# ---------------------------------------------------------------------------

def crps_gaussian(mu, sd, y):
    """Continuous ranked probability score of ``N(mu, sd^2)`` at ``y`` (lower is better)."""
    mu, sd, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (mu, sd, y)))
    if np.any(sd <= 0):
        raise ValueError("CRPS needs positive predictive standard deviations")
    z = (y - mu) / sd
    return sd * (z * (2 * stats.norm.cdf(z) - 1) + 2 * stats.norm.pdf(z) - 1 / np.sqrt(np.pi))


def log_score(mu, sd, y):
    """Negative log predictive density ``-log(phi(z) / sd)``."""
    mu, sd, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (mu, sd, y)))
    if np.any(sd <= 0):
        raise ValueError("the log score needs positive predictive standard deviations")
    z = (y - mu) / sd
    return np.log(sd) + 0.5 * z * z + 0.5 * np.log(2 * np.pi)


@dataclass(frozen=True)
class ScoreReport:
    rmspe: float
    mae: float
    nmse: float
    mcrps: float
    mlogs: float
    n: int

    def to_dict(self):
        return {"rmspe": self.rmspe, "mae": self.mae, "nmse": self.nmse, "mcrps": self.mcrps,
                "mlogs": self.mlogs, "n": self.n, "nmse_definition": NMSE_DEFINITION}


def score(pred, actual):
    """RMSPE, MAE, NMSE, mean CRPS and mean log score, pooled over all targets.

    Parameters
    ----------
    pred : PredictiveDistribution or (mean, sd) pair
    actual : array of the same length

    Raises
    ------
    ValueError
        on a length mismatch or a zero predictive standard deviation.
    """
    mu, sd = (pred.mean, pred.sd) if isinstance(pred, PredictiveDistribution) else pred
    mu = np.asarray(mu, dtype=float).ravel()
    sd = np.asarray(sd, dtype=float).ravel()
    y = np.asarray(actual, dtype=float).ravel()
    if not (mu.size == sd.size == y.size) or y.size == 0:
        raise ValueError("predictions and actual values must have equal nonzero length")
    if np.any(sd <= 0):
        raise ValueError("zero predictive standard deviation")
    e = y - mu
    return ScoreReport(
        rmspe=float(np.sqrt(np.mean(e * e))),
        mae=float(np.mean(np.abs(e))),
        nmse=float(np.mean((e / sd) ** 2)),
        mcrps=float(np.mean(crps_gaussian(mu, sd, y))),
        mlogs=float(np.mean(log_score(mu, sd, y))),
        n=int(y.size),
    )


def score_by_component(pred, actual):
    """Pooled report plus one report per predicted component."""
    y = np.asarray(actual, dtype=float).ravel()
    out = {"pooled": score(pred, y)}
    for c in np.unique(pred.component):
        sel = pred.component == c
        out[int(c)] = score((pred.mean[sel], pred.sd[sel]), y[sel])
    return out
