import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotwave.angular import (
    cos2_band,
    cos2_couple,
    cos2_diag,
    parity_js,
    quadrature_element,
    theta_functions,
)


def test_diag_examples():
    assert math.isclose(cos2_diag(0, 0), 1 / 3, abs_tol=1e-15)
    assert math.isclose(cos2_diag(1, 0), 0.6, abs_tol=1e-15)
    assert math.isclose(cos2_diag(1, 1), 0.2, abs_tol=1e-15)
    # same values from the oracle
    assert math.isclose(quadrature_element(1, 1, 0), 0.6, abs_tol=1e-12)
    assert math.isclose(quadrature_element(1, 1, 1), 0.2, abs_tol=1e-12)


def test_couple_examples():
    assert math.isclose(cos2_couple(0, 0), 2 / (3 * math.sqrt(5)), rel_tol=1e-14)
    assert math.isclose(cos2_couple(0, 0), 0.298142, abs_tol=1e-6)
    assert math.isclose(cos2_couple(1, 0), 6 / (5 * math.sqrt(21)), rel_tol=1e-14)
    assert math.isclose(cos2_couple(1, 0), 0.261861, abs_tol=1e-6)


@pytest.mark.parametrize("fn", [cos2_diag, cos2_couple])
def test_domain_violation(fn):
    with pytest.raises(ValueError):
        fn(2, 3)
    with pytest.raises(ValueError):
        fn(-1, 0)


def test_quadrature_examples():
    assert math.isclose(quadrature_element(0, 0, 0), 1 / 3, abs_tol=1e-12)
    assert abs(quadrature_element(3, 1, 0) - cos2_couple(1, 0)) <= 1e-10
    assert abs(quadrature_element(4, 1, 0)) <= 1e-12
    with pytest.raises(ValueError):
        quadrature_element(4, 2, 0, nodes=8)


def test_oracle_equivalence_all_j_up_to_20():
    worst = 0.0
    for j in range(21):
        for m in range(-j, j + 1):
            worst = max(worst, abs(cos2_diag(j, m) - quadrature_element(j, j, m)))
            worst = max(worst, abs(cos2_couple(j, m) - quadrature_element(j + 2, j, m)))
    assert worst <= 1e-10


@given(st.integers(0, 20), st.integers(0, 20), st.data())
def test_selection_rule(j1, j2, data):
    m = data.draw(st.integers(-min(j1, j2), min(j1, j2)))
    if abs(j1 - j2) in (0, 2):
        return
    assert abs(quadrature_element(j1, j2, m)) <= 1e-12


@given(st.integers(0, 20), st.data())
def test_couple_symmetry(j, data):
    m = data.draw(st.integers(-j, j))
    assert math.isclose(
        quadrature_element(j, j + 2, m), quadrature_element(j + 2, j, m), abs_tol=1e-13
    )


def test_bounds_and_large_j_limit():
    for j in range(60):
        for m in range(-j, j + 1):
            assert 0.0 < cos2_diag(j, m) < 1.0
            assert 0.0 <= cos2_couple(j, m) < 1.0
    for j in range(10, 200):
        assert abs(cos2_diag(j, 0) - 0.5) <= 1 / (2 * j)


def test_theta_functions_normalized():
    x, w = np.polynomial.legendre.leggauss(60)
    theta = np.arccos(x)
    for j, m in [(0, 0), (3, 2), (7, -5), (12, 0)]:
        assert math.isclose(np.dot(w, theta_functions(j, m, theta) ** 2), 1.0, rel_tol=1e-12)


def test_band_small():
    band = cos2_band(0, 2)
    np.testing.assert_allclose(band.diag, [1 / 3, 3 / 5, 11 / 21], rtol=1e-14)
    np.testing.assert_allclose(band.couple, [2 / (3 * math.sqrt(5))], rtol=1e-14)
    single = cos2_band(2, 2)
    assert single.diag.size == 1 and single.couple.size == 0


def test_band_large_matches_elementwise():
    band = cos2_band(0, 40)
    assert np.all(np.isfinite(band.diag)) and np.all((band.diag > 0) & (band.diag < 1))
    assert np.all((band.couple >= 0) & (band.couple < 1))
    assert np.all(np.diff(band.diag[1:]) < 0)  # J >= 1 decreases toward 1/2
    assert band.diag[5] == cos2_diag(5, 0) and band.couple[7] == cos2_couple(7, 0)
    with pytest.raises(ValueError):
        cos2_band(3, 2)


def test_parity_blocks():
    np.testing.assert_array_equal(parity_js(1, 8, 0), [2, 4, 6, 8])
    np.testing.assert_array_equal(parity_js(1, 8, 1), [1, 3, 5, 7])
    band = cos2_band(1, 8)
    mat = band.block_matrix(parity_js(1, 8, 0))
    assert mat[0, 1] == cos2_couple(2, 1) and mat[1, 1] == cos2_diag(4, 1)
