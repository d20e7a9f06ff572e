import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semipcov.covariance import LMC, IndependentMatern, assemble_sigma
from semipcov.dataset import SpatialDataset
from semipcov.simulate import (
    ALL_FREQUENCIES,
    FrequencyBand,
    bandpass_filter,
    empirical_correlation,
    grid_locations,
    oscillating_model,
    radial_frequencies,
    simulate_grf,
    trivariate_ordering_model,
)
from semipcov.spectral import MarginalParams

LMC_MODEL = LMC([[1, 0.4], [0.9, 7.5]], (MarginalParams(1, 1, 0.5), MarginalParams(1, 2, 0.5)))


def test_band_validation():
    with pytest.raises(ValueError):
        FrequencyBand(2.0, 1.0)
    with pytest.raises(ValueError):
        FrequencyBand(-1.0, 1.0)
    b = FrequencyBand(1.0, 2.0)
    assert b.contains(1.0) and b.contains(2.0) and not b.contains(2.0001)


def test_degenerate_variance():
    m = IndependentMatern((MarginalParams(1e-6, 1, 1), MarginalParams(1e-6, 1, 1)))
    x = simulate_grf(m, grid_locations(5), 3, seed=1)
    assert max(np.max(np.abs(d.obs)) for d in x) < 1e-4


def test_same_seed_identical():
    loc = grid_locations(6)
    a = simulate_grf(LMC_MODEL, loc, 2, seed=9)
    b = simulate_grf(LMC_MODEL, loc, 2, seed=9)
    c = simulate_grf(LMC_MODEL, loc, 2, seed=10)
    assert all(np.array_equal(u.obs, v.obs) for u, v in zip(a, b))
    assert not np.array_equal(a[0].obs, c[0].obs)
    assert not np.array_equal(a[0].obs, a[1].obs)
    # replicate r does not depend on how many replicates are requested
    assert np.array_equal(simulate_grf(LMC_MODEL, loc, 1, seed=9)[0].obs, a[0].obs)


def test_monte_carlo_moments(rng):
    loc = rng.uniform(0, 3, (5, 2))
    n = 2000
    sims = simulate_grf(LMC_MODEL, loc, n, seed=3)
    X = np.array([d.vector() for d in sims])
    S = assemble_sigma(LMC_MODEL, loc)
    emp = np.cov(X, rowvar=False, bias=False)
    # standard error of a sample covariance of Gaussian data
    se = np.sqrt((S * S + np.outer(np.diag(S), np.diag(S))) / (n - 1))
    assert np.all(np.abs(emp - S) < 3 * se + 1e-12) or np.mean(np.abs(emp - S) < 3 * se) > 0.99
    sd = np.sqrt(np.diag(S))
    assert np.all(np.abs(X.mean(axis=0)) < 4 * sd / np.sqrt(n))


def test_single_precision_path():
    loc = grid_locations(8)
    m = oscillating_model(200)
    a = simulate_grf(m, loc, 1, seed=2)[0].obs
    b = simulate_grf(m, loc, 1, seed=2, dtype=np.float32)[0].obs
    assert np.max(np.abs(a - b)) < 1e-3


def _field(rng, n1=16, n2=12, spacing=0.5):
    loc = grid_locations(n1, n2, spacing)
    perm = rng.permutation(len(loc))  # row order must not matter
    return SpatialDataset(loc[perm], rng.normal(size=(len(loc), 2)))


def test_filter_identity_and_complement(rng):
    f = _field(rng)
    np.testing.assert_allclose(bandpass_filter(f, ALL_FREQUENCIES).obs, f.obs, atol=1e-10)
    lo = bandpass_filter(f, FrequencyBand(0, 1.0)).obs
    mid = bandpass_filter(f, FrequencyBand(np.nextafter(1.0, 2), 3.0)).obs
    hi = bandpass_filter(f, FrequencyBand(np.nextafter(3.0, 4), 1e9)).obs
    np.testing.assert_allclose(lo + mid + hi, f.obs, atol=1e-10)


@given(st.floats(0, 6), st.floats(0.1, 6))
def test_filter_idempotent(lo, width):
    rng = np.random.default_rng(0)
    f = _field(rng)
    band = FrequencyBand(lo, lo + width)
    once = bandpass_filter(f, band)
    twice = bandpass_filter(once, band)
    np.testing.assert_allclose(twice.obs, once.obs, atol=1e-10)


def test_radial_frequency_convention():
    u = radial_frequencies((10, 10), (2.0, 2.0))
    assert u[1, 0] == pytest.approx(2 * np.pi / 20)
    assert u[3, 4] == pytest.approx(2 * np.pi * np.hypot(3, 4) / 20)


def test_filter_rejects_non_grid(rng):
    f = SpatialDataset(rng.uniform(0, 5, (30, 2)), rng.normal(size=(30, 2)))
    with pytest.raises(ValueError):
        bandpass_filter(f, ALL_FREQUENCIES)
    g = _field(rng)
    with pytest.raises(ValueError):
        bandpass_filter(g.subset(np.arange(len(g.obs) - 1)), ALL_FREQUENCIES)


def test_empirical_correlation():
    x = np.random.default_rng(1).normal(size=50)
    assert empirical_correlation(x, x) == pytest.approx(1.0)
    assert empirical_correlation(x, -x) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        empirical_correlation(np.ones(5), x[:5])
    with pytest.raises(ValueError):
        empirical_correlation(x[:3], x[:4])


def test_fixtures_valid():
    assert trivariate_ordering_model(100).is_valid()
    assert oscillating_model(100).is_valid()


@pytest.mark.slow
def test_trivariate_ordering():
    # single precision keeps the 30000 x 30000 factor at 3.6 GB
    m = trivariate_ordering_model()
    sims = simulate_grf(m, grid_locations(100), 10, seed=2024, dtype=np.float32, max_dim=30000)
    hits = {"lf": 0, "hf": 0}
    for d in sims:
        for name, band in (("lf", FrequencyBand(0, 1)), ("hf", FrequencyBand(3.25, 4.25))):
            o = bandpass_filter(d, band).obs
            c12 = empirical_correlation(o[:, 0], o[:, 1])
            c23 = empirical_correlation(o[:, 1], o[:, 2])
            c13 = empirical_correlation(o[:, 0], o[:, 2])
            hits[name] += c23 > c12 > c13
    assert hits["lf"] >= 9 and hits["hf"] >= 9
