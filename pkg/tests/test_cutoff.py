import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thetatool.cutoff import (
    DyadicIndex,
    all_indices,
    chi_box_decomp,
    f1,
    flow_elements,
    fn,
    levels_needed,
    psi,
    sigma,
)
from thetatool.groups import sympl_check


def test_f1_examples():
    assert f1(-0.3) == 0 and f1(1.0) == 0
    x = 0.37
    total = sum(f1(2**j * x) + f1(2**j * (1 - x)) for j in range(7))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_fn_is_a_product():
    assert fn(np.array([0.3, 0.5])) == pytest.approx(f1(0.3) * f1(0.5), rel=1e-15)
    assert fn(np.array([0.3, 0.9])) == 0


def test_sigma_against_high_precision_quadrature():
    bump = lambda t: mpmath.exp(-1 / (t * (1 - t)))
    mpmath.mp.dps = 30
    total = mpmath.quad(bump, [0, 0.5, 1])
    for u in (0.05, 0.2, 0.37, 0.5, 0.61, 0.9, 0.99):
        ref = float(mpmath.quad(bump, [0, u]) / total)
        assert abs(sigma(u) - ref) < 1e-13
    assert sigma(-1.0) == 0 and sigma(2.0) == 1


@settings(max_examples=300, deadline=None)
@given(st.floats(-1, 2))
def test_ramp_is_symmetric_and_monotone(x):
    assert psi(x) + psi(1 - x) == pytest.approx(1.0, abs=1e-15)
    assert psi(x + 1e-3) >= psi(x)
    assert 0 <= f1(x) <= 1


def test_partition_of_unity(rng):
    delta = 2.0**-10
    x = rng.uniform(delta, 1 - delta, 10_000)
    assert np.max(np.abs(chi_box_decomp(x[:, None], np.ones(1), 12) - 1)) < 1e-12


def test_box_indicator():
    b = np.array([2.0, 0.5])
    assert chi_box_decomp(np.array([1.0, 0.25]), b, 12) == pytest.approx(1.0, abs=1e-12)
    assert chi_box_decomp(np.array([2.5, 0.25]), b, 12) == 0
    assert chi_box_decomp(np.array([0.0, 0.25]), b, 12) == 0
    assert chi_box_decomp(np.array([1.0, 0.5]), b, 12) == 0


def test_levels_needed_is_minimal():
    for delta in (0.3, 0.1, 2.0**-10, 1e-5):
        J = levels_needed(delta)
        pts = np.array([[delta], [1 - delta]])
        assert np.max(np.abs(chi_box_decomp(pts, np.ones(1), J) - 1)) < 1e-12
        if J > 0:
            assert np.max(np.abs(chi_box_decomp(pts, np.ones(1), J - 1) - 1)) > 1e-3


def test_flow_elements():
    h, g = flow_elements(DyadicIndex((0,), frozenset()))
    assert np.array_equal(h.x, [0.0]) and np.array_equal(g, np.eye(2))
    h, g = flow_elements(DyadicIndex((1,), frozenset({0})))
    assert np.array_equal(h.x, [-1.0]) and np.array_equal(g, np.diag([-2.0, -0.5]))
    for idx in all_indices((2, 1, 1)):
        assert sympl_check(flow_elements(idx)[1]) == 0


def test_index_validation():
    with pytest.raises(ValueError):
        DyadicIndex((-1,))
    with pytest.raises(ValueError):
        DyadicIndex((0, 1), frozenset({2}))


def test_weight_support():
    for idx in all_indices((3, 2)):
        (a0, b0), (a1, b1) = idx.support()
        u = np.array([[0.5 * (a0 + b0), 0.5 * (a1 + b1)]])
        assert idx.weight(u)[0] > 0
        assert idx.weight(np.array([[a0 - 1e-9, 0.5 * (a1 + b1)]]))[0] == 0


def test_smoothness_proxy():
    """Finite differences up to order four stay bounded as the grid is refined."""
    bounds = []
    for h in (1e-3, 5e-4):
        x = np.arange(-0.1, 1.0, h)
        d = f1(x)
        worst = []
        for k in range(1, 5):
            d = np.diff(d) / h
            worst.append(np.max(np.abs(d)))
        bounds.append(worst)
    for coarse, fine in zip(*bounds):
        assert math.isfinite(fine) and fine <= 1.5 * coarse
