import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from semipcov.specfun import bessel_j, bessel_k, gamma, gammaln

mpmath.mp.dps = 50


def test_gamma_simple_values():
    assert gamma(1) == pytest.approx(1.0, rel=1e-15)
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("x", [1e-3, 0.1, 0.7, 5.5, 17.25, 64.0, 170.0])
def test_gamma_against_high_precision(x):
    ref = float(mpmath.gamma(mpmath.mpf(x)))
    assert gamma(x) == pytest.approx(ref, rel=1e-12)


def test_gamma_domain_and_overflow():
    with pytest.raises(ValueError):
        gamma(0.0)
    with pytest.raises(ValueError):
        gamma(-2.5)
    with pytest.raises(OverflowError):
        gamma(171.7)


@given(st.floats(0.5, 100.0))
def test_gamma_recurrence(x):
    assert gamma(x + 1) == pytest.approx(x * gamma(x), rel=1e-12)


def test_gammaln_matches_log_gamma():
    x = np.array([0.3, 2.0, 40.0, 300.0])
    ref = [float(mpmath.loggamma(v)) for v in x]
    np.testing.assert_allclose(gammaln(x), ref, rtol=1e-13)


def test_bessel_j_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0
    assert bessel_j(2.5, 0.0) == 0.0


def _first_root_j0():
    # bisection on the mpmath series, independent of scipy
    lo, hi = mpmath.mpf(2), mpmath.mpf(3)
    for _ in range(200):
        mid = (lo + hi) / 2
        if mpmath.besselj(0, lo) * mpmath.besselj(0, mid) <= 0:
            hi = mid
        else:
            lo = mid
    return float(lo)


def test_bessel_j0_first_root():
    root = _first_root_j0()
    assert root == pytest.approx(2.4048255577, abs=1e-9)
    assert abs(bessel_j(0, 2.4048255577)) < 1e-9
    assert abs(bessel_j(0, root)) < 1e-15


@pytest.mark.parametrize("kappa", [-0.5, 0.0, 0.5, 1.0, 1.7, 3.0, 5.0])
@pytest.mark.parametrize("x", [1e-6, 0.3, 2.0, 11.9, 12.1, 77.7, 900.0, 4999.0])
def test_bessel_j_against_high_precision(kappa, x):
    ref = float(mpmath.besselj(kappa, x))
    assert abs(bessel_j(kappa, x) - ref) <= 1e-10


@given(st.floats(0.0, 4.0), st.floats(0.1, 100.0))
def test_bessel_j_three_term_recurrence(kappa, x):
    k = kappa + 0.5  # keeps kappa - 1 >= -0.5
    lhs = bessel_j(k - 1, x) + bessel_j(k + 1, x) - (2 * k / x) * bessel_j(k, x)
    assert abs(lhs) < 1e-8


def test_bessel_j_order_domain():
    with pytest.raises(ValueError):
        bessel_j(-0.7, 1.0)
    with pytest.raises(ValueError):
        bessel_j(0, -1.0)


def test_bessel_k_half_integer_closed_forms():
    assert bessel_k(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1), rel=1e-12)
    assert bessel_k(0.5, 1.0) == pytest.approx(0.4610685044, rel=1e-9)
    # K_{3/2}(x) = sqrt(pi/(2x)) e^-x (1 + 1/x)
    x = 2.0
    ref = math.sqrt(math.pi / (2 * x)) * math.exp(-x) * (1 + 1 / x)
    assert bessel_k(1.5, x) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("nu", [0.2, 1.0, 2.5, 3.0, 7.3])
@pytest.mark.parametrize("x", [1e-4, 0.5, 3.0, 40.0, 600.0])
def test_bessel_k_against_high_precision(nu, x):
    ref = float(mpmath.besselk(nu, x))
    assert bessel_k(nu, x) == pytest.approx(ref, rel=1e-10)


def test_bessel_k_small_argument_divergence():
    assert bessel_k(1, 1e-8) > 1e7


@given(st.floats(0.05, 8.0))
def test_bessel_k_positive_and_decreasing(nu):
    x = np.linspace(0.01, 50, 400)
    k = bessel_k(nu, x)
    k = k[k > 0]
    assert k.size > 0
    assert np.all(np.diff(k) < 0)


def test_bessel_k_domain():
    with pytest.raises(ValueError):
        bessel_k(1.0, 0.0)
    with pytest.raises(ValueError):
        bessel_k(0.0, 1.0)
