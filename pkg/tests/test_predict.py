import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import crps_monte_carlo
from semipcov.bspline import KnotConfig
from semipcov.covariance import IndependentMatern, SemiparamModel
from semipcov.dataset import SpatialDataset
from semipcov.predict import (
    PredictiveDistribution,
    ScoreReport,
    cokrige,
    crps_gaussian,
    log_score,
    score,
    score_by_component,
)
from semipcov.simulate import simulate_grf
from semipcov.spectral import FrequencyGrid, MarginalParams, SplineCoherenceSpec

KC = KnotConfig(1.0, 4, 4.5)


def coherent_model(b=-0.95, nugget=0.0):
    margs = (MarginalParams(1, 1, 0.6, nugget), MarginalParams(1, 1, 0.6, nugget))
    return SemiparamModel(margs, SplineCoherenceSpec.constant(KC, 2, b), FrequencyGrid(4.5, 200))


def test_interpolation_at_training_site(rng):
    loc = rng.uniform(0, 5, (12, 2))
    m = coherent_model()
    data = simulate_grf(m, loc, 1, seed=1)[0]
    with pytest.warns(UserWarning):
        p = cokrige(m, data, loc[:3])
    np.testing.assert_allclose(p.mean, data.obs[:3].ravel(), atol=1e-6)
    assert np.all(p.sd < 1e-6)


def test_heterotopic_target_does_not_warn(rng):
    loc = rng.uniform(0, 5, (10, 2))
    m = coherent_model()
    obs = simulate_grf(m, loc, 1, seed=2)[0].obs.copy()
    obs[:3, 0] = np.nan
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p = cokrige(m, SpatialDataset(loc, obs), loc[:3], [0])
    assert np.all(p.sd > 0)


def test_independent_components_do_not_borrow(rng):
    loc = rng.uniform(0, 5, (15, 2))
    m = IndependentMatern((MarginalParams(1, 1, 1), MarginalParams(1, 2, 0.5)))
    x = rng.normal(size=(15, 2))
    test = rng.uniform(0, 5, (4, 2))
    a = cokrige(m, SpatialDataset(loc, x), test, [0])
    x2 = x.copy()
    x2[:, 1] += rng.normal(size=15) * 10
    b = cokrige(m, SpatialDataset(loc, x2), test, [0])
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-12)


def test_observing_partner_component_helps():
    rng = np.random.default_rng(5)
    m = coherent_model(-0.95)
    err_with, err_without = [], []
    for r in range(10):
        loc = rng.uniform(0, 10, (60, 2))
        d = simulate_grf(m, loc, 1, seed=100 + r)[0]
        test = np.arange(45, 60)
        obs = d.obs.copy()
        obs[test, 0] = np.nan
        train = SpatialDataset(loc, obs)
        with_ = cokrige(m, train, loc[test], [0]).mean
        without = cokrige(m, SpatialDataset(loc[:45], d.obs[:45]), loc[test], [0]).mean
        truth = d.obs[test, 0]
        err_with.append(np.sqrt(np.mean((with_ - truth) ** 2)))
        err_without.append(np.sqrt(np.mean((without - truth) ** 2)))
    assert np.median(err_with) < np.median(err_without)


def test_variance_bounded_by_prior(rng):
    loc = rng.uniform(0, 5, (20, 2))
    m = coherent_model(-0.5, nugget=0.1)
    d = simulate_grf(m, loc, 1, seed=3)[0]
    p = cokrige(m, d, rng.uniform(0, 5, (10, 2)))
    assert np.all(p.sd ** 2 <= 1.0 + 0.1 + 1e-10)
    assert np.all(p.sd > 0)


def test_cokrige_linear_in_data(rng):
    loc = rng.uniform(0, 5, (20, 2))
    m = coherent_model(0.6)
    x, y = rng.normal(size=(20, 2)), rng.normal(size=(20, 2))
    test = rng.uniform(0, 5, (6, 2))
    pa = cokrige(m, SpatialDataset(loc, x), test).mean
    pb = cokrige(m, SpatialDataset(loc, y), test).mean
    pc = cokrige(m, SpatialDataset(loc, x + y), test).mean
    np.testing.assert_allclose(pc, pa + pb, atol=1e-9)


def test_component_selection(rng):
    loc = rng.uniform(0, 5, (10, 2))
    m = coherent_model()
    d = simulate_grf(m, loc, 1, seed=4)[0]
    p = cokrige(m, d, rng.uniform(0, 5, (3, 2)), [1])
    assert len(p) == 3 and np.all(p.component == 1)
    np.testing.assert_array_equal(p.location, [0, 1, 2])


def test_scores_at_perfect_mean():
    r = score((np.zeros(5), np.ones(5)), np.zeros(5))
    assert r.rmspe == r.mae == r.nmse == 0
    assert r.mcrps == pytest.approx(2 / math.sqrt(2 * math.pi) - 1 / math.sqrt(math.pi), abs=1e-14)
    assert r.mcrps == pytest.approx(0.23370, abs=1e-5)
    assert r.mlogs == pytest.approx(0.5 * math.log(2 * math.pi), abs=1e-14)
    assert r.mlogs == pytest.approx(0.91894, abs=1e-5)


@pytest.mark.parametrize("mu,sd,y", [(0.0, 1.0, 0.0), (1.3, 0.4, 0.2), (-2.0, 3.0, 4.5)])
def test_crps_against_monte_carlo(mu, sd, y):
    assert crps_gaussian(mu, sd, y) == pytest.approx(crps_monte_carlo(mu, sd, y), abs=1e-3)


@given(st.floats(-5, 5), st.floats(0.1, 5), st.floats(-5, 5), st.floats(-100, 100))
def test_scores_translation_invariant(mu, sd, y, c):
    a = score(([mu], [sd]), [y])
    b = score(([mu + c], [sd]), [y + c])
    for f in ("rmspe", "mae", "nmse", "mcrps", "mlogs"):
        assert getattr(a, f) == pytest.approx(getattr(b, f), rel=1e-9, abs=1e-9)


def test_error_inflation(rng):
    mu, sd, y = rng.normal(size=30), rng.uniform(0.5, 2, 30), rng.normal(size=30)
    a = score((mu, sd), y)
    b = score((y - 2 * (y - mu), sd), y)
    assert b.rmspe == pytest.approx(2 * a.rmspe, rel=1e-13)
    assert b.mae == pytest.approx(2 * a.mae, rel=1e-13)
    assert a.rmspe >= a.mae >= 0 and a.mcrps >= 0


def test_logs_formula():
    assert log_score(1.0, 2.0, 3.0) == pytest.approx(-math.log(math.exp(-0.5 * 1.0) / (2 * math.sqrt(2 * math.pi))))


def test_score_errors():
    with pytest.raises(ValueError):
        score(([0, 0], [1, 0]), [0, 0])
    with pytest.raises(ValueError):
        score(([0, 0], [1, 1]), [0])
    with pytest.raises(ValueError):
        crps_gaussian(0, 0, 1)


def test_score_by_component():
    p = PredictiveDistribution(np.zeros(4), np.ones(4), np.array([0, 0, 1, 1]), np.array([0, 1, 0, 1]))
    rep = score_by_component(p, [1.0, 0.0, 1.0, 0.0])
    assert rep[0].rmspe == 1.0 and rep[1].rmspe == 0.0
    assert isinstance(rep["pooled"], ScoreReport)
    assert "nmse_definition" in rep["pooled"].to_dict()
