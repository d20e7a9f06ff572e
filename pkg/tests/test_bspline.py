import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from semipcov.bspline import KnotConfig, basis_eval, basis_matrix, basis_row

CFG = KnotConfig(1.0, 4, 4.5)


def test_knot_containment():
    with pytest.raises(ValueError):
        KnotConfig(1.0, 4, 5.5)
    with pytest.raises(ValueError):
        KnotConfig(1.0, 4, 4.0)
    assert KnotConfig(1.0, 4, 5.0).K == 4
    assert KnotConfig.from_spacing(1.0, 4.5).K == 4
    assert KnotConfig.from_spacing(2.0, 9.8).K == 4
    assert KnotConfig.from_spacing(2.0, 9.8).n_basis == 8


def test_hand_values_at_zero():
    # zero is the third knot of B_{-3} and the centre of B_{-2}
    assert basis_eval(CFG, -3, 0.0) == pytest.approx(1 / 6, abs=1e-15)
    assert basis_eval(CFG, -2, 0.0) == pytest.approx(2 / 3, abs=1e-15)
    assert basis_eval(CFG, -1, 0.0) == pytest.approx(1 / 6, abs=1e-15)
    assert basis_eval(CFG, 2, 0.0) == 0.0


def test_row_support_at_endpoints():
    r0 = basis_row(CFG, 0.0)
    assert set(np.flatnonzero(r0) - 3) <= {-3, -2, -1, 0}
    rt = basis_row(CFG, 4.5)
    assert set(np.flatnonzero(rt) - 3) == {1, 2, 3, 4}
    np.testing.assert_allclose(rt[4:], [1 / 48, 23 / 48, 23 / 48, 1 / 48], atol=1e-15)


def test_errors():
    with pytest.raises(IndexError):
        basis_eval(CFG, -4, 1.0)
    with pytest.raises(IndexError):
        basis_eval(CFG, 5, 1.0)
    with pytest.raises(ValueError):
        basis_row(CFG, 4.6)
    with pytest.raises(ValueError):
        basis_row(CFG, -0.1)


@pytest.mark.parametrize("delta,omega_t", [(1.0, 4.5), (2.0, 9.8), (0.5, 3.0), (4.0, 9.0)])
def test_partition_of_unity_and_nonnegativity(delta, omega_t):
    cfg = KnotConfig.from_spacing(delta, omega_t)
    w = np.linspace(0, omega_t, 1000)
    G = basis_matrix(cfg, w)
    assert np.max(np.abs(G.sum(axis=1) - 1)) < 1e-12
    assert np.all(G >= 0)
    assert np.all((G > 0).sum(axis=1) <= 4)


def test_matches_independent_spline_library():
    w = np.linspace(0, 4.5, 301)
    G = basis_matrix(CFG, w)
    for n, k in enumerate(CFG.indices):
        ref = BSpline.basis_element(np.arange(k, k + 5, dtype=float), extrapolate=False)(w)
        np.testing.assert_allclose(G[:, n], np.nan_to_num(ref), atol=1e-14)


@given(st.floats(0.0, 4.5).map(lambda v: round(v, 6)))
def test_local_support(w):
    row = basis_row(CFG, w)
    for n, k in enumerate(CFG.indices):
        inside = k < w < k + 4
        assert (row[n] > 0) == inside


def test_second_derivative_continuous():
    h = 1e-4
    for knot in range(0, 5):
        for n in range(CFG.n_basis):
            def d2(x):
                g = basis_matrix(CFG, np.array([x - h, x, x + h]))[:, n]
                return (g[0] - 2 * g[1] + g[2]) / h ** 2
            left, right = d2(knot - 2 * h) if knot > 0 else None, d2(knot + 2 * h)
            if left is not None and knot + 2 * h <= 4.5:
                assert abs(left - right) < 1e-2  # O(h) difference, no jump
