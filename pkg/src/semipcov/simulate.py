"""Gaussian random field simulation and frequency-band filtering.

Realizations are drawn as ``L z`` with ``L`` the lower Cholesky factor of the
block covariance matrix. Band-pass filtering of gridded fields zeroes all
discrete Fourier coefficients whose angular radial frequency lies outside
the band, which makes the dependence of the components at that band visible.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import blas, lapack

from .bspline import KnotConfig
from .covariance import MAX_DIM, FactorizationError, SemiparamModel, assemble_sigma, cholesky_jitter
from .dataset import SpatialDataset, substream
from .spectral import FrequencyGrid, MarginalParams, SplineCoherenceSpec


@dataclass(frozen=True)
class FrequencyBand:
    """Closed band ``lo <= |u| <= hi`` of angular radial frequencies."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise ValueError(f"need 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    def contains(self, w):
        return (w >= self.lo) & (w <= self.hi)


ALL_FREQUENCIES = FrequencyBand(0.0, np.inf)


def _factor32(model, locations, max_dim, start=1e-10, stop=1e-4):
    """In-place single-precision Cholesky; returns the factor as a Fortran view."""
    level = 0.0
    while True:
        S = assemble_sigma(model, locations, max_dim=max_dim, dtype=np.float32)
        if level:
            scale = float(np.mean(np.diag(S)))
            S[np.diag_indices_from(S)] += np.float32(level * scale)
        A = S.T  # symmetric, so this Fortran-ordered view is the same matrix
        c, info = lapack.spotrf(A, lower=1, overwrite_a=1, clean=0)
        if info == 0:
            return c
        del S, A, c
        level = start if level == 0 else level * 10
        if level > stop * (1 + 1e-9):
            raise FactorizationError(f"Cholesky failed even with jitter {stop:g} x mean diagonal")


def simulate_grf(model, locations, n_reps=1, seed=0, dtype=np.float64, max_dim=MAX_DIM,
                 names=None):
    """Independent zero-mean Gaussian realizations of ``model`` at ``locations``.

    Parameters
    ----------
    model : CovarianceModel
    locations : (n, d) array
    n_reps : int
    seed : int
        replicate ``r`` draws from its own substream of ``seed``.
    dtype : {np.float64, np.float32}
        single precision halves the memory of the covariance factor, for
        large grids.
    max_dim : int
        cap on ``n p``.

    Returns
    -------
    list of SpatialDataset
    """
    if int(n_reps) != n_reps or n_reps < 1:
        raise ValueError("n_reps must be a positive integer")
    loc = np.asarray(locations, dtype=float)
    n, p = loc.shape[0], model.p
    if np.dtype(dtype) == np.float32:
        c = _factor32(model, loc, max_dim)
        draw = lambda z: blas.strmv(c, z.astype(np.float32), lower=1).astype(float)  # noqa: E731
    else:
        L, _ = cholesky_jitter(assemble_sigma(model, loc, max_dim=max_dim))
        draw = lambda z: L @ z  # noqa: E731
    out = []
    for r in range(int(n_reps)):
        z = substream(seed, f"simulation/{r}").standard_normal(n * p)
        out.append(SpatialDataset(loc, draw(z).reshape(n, p), names))
    return out


def grid_locations(n1, n2=None, spacing=1.0, origin=1.0):
    """Row-major regular grid ``{origin + spacing (i, j)}``."""
    n2 = n1 if n2 is None else n2
    x = origin + spacing * np.arange(n1)
    y = origin + spacing * np.arange(n2)
    X, Y = np.meshgrid(x, y, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def _grid_index(locations, rtol=1e-9):
    loc = np.asarray(locations, dtype=float)
    if loc.ndim != 2 or loc.shape[1] != 2:
        raise ValueError("band-pass filtering needs two-dimensional locations")
    shape, spacing, idx = [], [], []
    for c in range(2):
        u = np.unique(loc[:, c])
        if u.size < 2:
            raise ValueError("locations do not form a regular grid (single row or column)")
        step = np.diff(u)
        if np.ptp(step) > rtol * step.mean() * u.size:
            raise ValueError("locations do not form a regular grid (uneven spacing)")
        spacing.append(step.mean())
        shape.append(u.size)
        idx.append(np.rint((loc[:, c] - u[0]) / step.mean()).astype(int))
    if loc.shape[0] != shape[0] * shape[1]:
        raise ValueError("locations do not form a full regular grid")
    flat = idx[0] * shape[1] + idx[1]
    if np.unique(flat).size != flat.size:
        raise ValueError("locations do not form a full regular grid (duplicates)")
    return tuple(shape), tuple(spacing), flat


def radial_frequencies(shape, spacing):
    """Angular radial frequency of every 2-D DFT coefficient."""
    u1 = 2 * np.pi * np.fft.fftfreq(shape[0], d=spacing[0])
    u2 = 2 * np.pi * np.fft.fftfreq(shape[1], d=spacing[1])
    return np.hypot(u1[:, None], u2[None, :])


def bandpass_filter(field, band):
    """Keep only the Fourier content of each component within ``band``.

    Raises
    ------
    ValueError
        if the locations are not a full regular two-dimensional grid.
    """
    shape, spacing, flat = _grid_index(field.locations)
    keep = band.contains(radial_frequencies(shape, spacing))
    out = np.empty_like(field.obs)
    for c in range(field.p):
        g = np.empty(shape[0] * shape[1])
        g[flat] = field.obs[:, c]
        spec = np.fft.fft2(g.reshape(shape))
        spec[~keep] = 0.0
        out[:, c] = np.fft.ifft2(spec).real.ravel()[flat]
    return SpatialDataset(field.locations, out, field.names)


def empirical_correlation(a, b):
    """Pearson correlation of two equally long vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != b.size or a.size < 2:
        raise ValueError("need two vectors of equal length >= 2")
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a @ a) * (b @ b))
    if den == 0:
        raise ValueError("zero variance")
    return float(np.clip((a @ b) / den, -1.0, 1.0))


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

def trivariate_ordering_model(m=990):
    """Trivariate model where component 3 is most coherent with 2, least with 1.

    Constant-shape coefficients (0.5, 0.65, 0.15) for pairs (1,2), (2,3),
    (1,3), growing mildly with the basis index.
    """
    knots = KnotConfig.from_spacing(1.0, 4.5)
    growth = 1 + 0.03 * (np.asarray(knots.indices) + 3)
    coeffs = {(0, 1): 0.5 * growth, (1, 2): 0.65 * growth, (0, 2): 0.15 * growth}
    margs = (MarginalParams(1.0, 1.0, 1.0), MarginalParams(1.0, 2.0, 0.5),
             MarginalParams(1.0, 2.5, 0.4))
    return SemiparamModel(margs, SplineCoherenceSpec(knots, coeffs), FrequencyGrid(4.5, m))


def oscillating_model(m=990):
    """Bivariate model with negative low-frequency, positive high-frequency coherence."""
    knots = KnotConfig.from_spacing(1.0, 4.5)
    s12 = [-0.99, -0.99, 0.99, 0.99, 0.99, 0.99, -0.99, -0.99]
    margs = (MarginalParams(1.0, 1.0, 1.0), MarginalParams(1.0, 1.0, 1.0))
    return SemiparamModel(margs, SplineCoherenceSpec(knots, {(0, 1): s12}), FrequencyGrid(4.5, m))
