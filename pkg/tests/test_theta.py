import cmath
import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thetatool.cutoff import DyadicIndex
from thetatool.decompose import a_matrix, n_matrix, na_matrix
from thetatool.exceptions import BudgetExceededError, DimensionError
from thetatool.groups import Heisenberg, Jacobi, JacobiLatticeElement, identity, random_word
from thetatool.haar import haar_batch
from thetatool.kernels import KERNELS, box_sum_naive, frac_mul
from thetatool.reduction import dn_reduce
from thetatool.theta import (
    ThetaRequest,
    automorphy_defect,
    big_theta_gaussian,
    gaussian_value_bound,
    theta_box,
    theta_box_via_dyadic,
    theta_schwartz,
    theta_terms,
)

THETA_CONST = 1.08643481121330801457  # sum exp(-pi m^2), 30-digit mpmath


def sl2(x, y):
    return n_matrix([[x]]) @ a_matrix([[math.sqrt(y)]])


def direct(req):
    """Term-by-term sum with phases reduced modulo 1 in rational arithmetic."""
    lo, hi = req.box_limits()
    X = [[Fraction(v) for v in row] for row in req.X]
    y = [Fraction(v) for v in req.y]
    n = req.n
    total = 0j
    for m in itertools.product(*[range(l, h) for l, h in zip(lo, hi)]):
        ph = sum(Fraction(m[a] * m[b]) * X[a][b] for a in range(n) for b in range(n)) / 2
        ph += sum(m[a] * y[a] for a in range(n))
        total += cmath.exp(2j * math.pi * float(ph - math.floor(ph)))
    return total


@pytest.mark.parametrize("kernel", sorted(KERNELS))
def test_box_examples(kernel):
    assert theta_box(ThetaRequest(5, [[0.0]], [0.0], [0.0]), kernel).value == pytest.approx(4)
    assert abs(theta_box(ThetaRequest(5, [[1.0]], [0.0], [0.0]), kernel).value) < 1e-12
    assert theta_box(ThetaRequest(4, [[0.5]], [-0.5], [0.0]), kernel).value == pytest.approx(2 + 2j)


def test_box_faces_are_open():
    # -x < m < M b - x with x = 0 and M = 5 excludes m = 0 and m = 5
    assert ThetaRequest(5, [[0.0]], [0.0], [0.0]).box_limits() == ([1], [5])
    assert ThetaRequest(5, [[0.0]], [0.3], [0.0]).box_limits() == ([0], [5])


def test_kernels_agree_with_direct_sum(rng):
    for _ in range(60):
        n = int(rng.integers(1, 4))
        X = rng.normal(size=(n, n))
        M = float(rng.uniform(1, {1: 400, 2: 30, 3: 8}[n]))
        req = ThetaRequest(M, X + X.T, rng.uniform(-2, 2, n), rng.normal(size=n), b=rng.uniform(0.5, 1.5, n))
        ref = direct(req)
        for k in KERNELS:
            assert abs(theta_box(req, k).value - ref) <= 1e-10 * max(abs(ref), 1.0)


def test_long_rotor_run_stays_accurate(rng):
    X = np.array([[math.sqrt(2) * 0.37]])
    req = ThetaRequest(1 << 20, X, [0.0], [0.1234567])
    ref = box_sum_naive(*req.box_limits(), req.X, req.y)
    for k in KERNELS:
        assert abs(theta_box(req, k).value - ref) <= 1e-10 * max(abs(ref), 1.0)


def test_kernels_are_deterministic(rng):
    X = rng.normal(size=(2, 2))
    req = ThetaRequest(300.0, X + X.T, [0.1, 0.2], [0.3, -0.4])
    for k in KERNELS:
        assert theta_box(req, k).value == theta_box(req, k).value


def test_budget_and_validation():
    with pytest.raises(BudgetExceededError):
        theta_box(ThetaRequest(2.0**27, [[0.0]], [0.0], [0.0]))
    with pytest.raises(DimensionError):
        ThetaRequest(5, [[0.0]], [0.0, 0.0], [0.0])
    with pytest.raises(ValueError):
        ThetaRequest(5, [[0.0, 1.0], [0.0, 0.0]], [0, 0], [0, 0])
    with pytest.raises(ValueError):
        theta_box(ThetaRequest(5, [[0.0]], [0.0], [0.0]), kernel="fft")


@settings(max_examples=100, deadline=None)
@given(
    st.floats(1, 200), st.floats(-3, 3), st.floats(-2, 2), st.floats(-2, 2), st.integers(-5, 5)
)
def test_periodicity_and_conjugation(M, X, x, y, k):
    a = theta_box(ThetaRequest(M, [[X]], [x], [y])).value
    shifted = theta_box(ThetaRequest(M, [[X]], [x], [y + k])).value
    assert abs(a - shifted) <= 1e-9 * max(abs(a), 1.0) * max(1.0, abs(k))
    conj = theta_box(ThetaRequest(M, [[-X]], [x], [-y])).value
    assert abs(conj - a.conjugate()) <= 1e-10 * max(abs(a), 1.0)


def test_terms_sum_to_box_value(rng):
    req = ThetaRequest(17.3, [[0.3, 0.1], [0.1, -0.7]], [0.2, -0.4], [0.5, 0.25])
    lo, terms = theta_terms(req)
    assert lo == req.box_limits()[0]
    assert terms.sum() == pytest.approx(theta_box(req).value, abs=1e-10)


def test_frac_mul_exact():
    k = np.array([3.0, 2.0**40 + 1, -(2.0**50) + 7])
    a = np.array([0.1, 1.0 / 3.0, math.sqrt(2)])
    for ki, ai, got in zip(k, a, frac_mul(k, a)):
        exact = Fraction(int(ki)) * Fraction(ai)
        ref = float(exact - math.floor(exact))
        assert abs(got - ref) < 1e-15 or abs(abs(got - ref) - 1) < 1e-15


# ------------------------------------------------------- smooth cutoffs


def test_gaussian_examples():
    v = theta_schwartz(ThetaRequest(1, [[0.0]], [0.0], [0.0], cutoff="gaussian"))
    assert v.value.real == pytest.approx(THETA_CONST, abs=1e-14)
    assert v.truncation_bound < 1e-15
    big = theta_schwartz(ThetaRequest(50, [[0.0]], [0.0], [0.0], cutoff="gaussian"))
    assert big.value.real == pytest.approx(50, rel=1e-3)


def test_dyadic_piece_with_empty_support_is_zero():
    idx = DyadicIndex((8,), frozenset())
    req = ThetaRequest(4.0, [[0.3]], [0.0], [0.1], cutoff="dyadic", index=idx)
    assert theta_schwartz(req).value == 0


def test_dyadic_reconstruction_matches_box(rng):
    for req in (
        ThetaRequest(5, [[0.0]], [0.0], [0.0]),
        ThetaRequest(5, [[1.0]], [0.0], [0.0]),
        ThetaRequest(4, [[0.5]], [-0.5], [0.0]),
        ThetaRequest(6, [[0.0]], [1.0], [0.0]),
    ):
        assert abs(theta_box_via_dyadic(req).value - theta_box(req).value) < 1e-9
    for _ in range(10):
        X = rng.normal(size=(2, 2))
        req = ThetaRequest(64.0, X + X.T, rng.uniform(-1, 1, 2), rng.normal(size=2))
        a, b = theta_box_via_dyadic(req).value, theta_box(req).value
        assert abs(a - b) <= 1e-9 * max(abs(b), 1.0)


# -------------------------------------------------------- Jacobi theta


def test_big_theta_examples():
    j = Jacobi(Heisenberg.identity(1), identity(1))
    assert big_theta_gaussian(j).value.real == pytest.approx(THETA_CONST, abs=1e-13)
    j = Jacobi(Heisenberg.identity(1), a_matrix([[10.0]]))
    ref = 100**0.25 * (1 + 2 * math.exp(-100 * math.pi))
    assert abs(big_theta_gaussian(j).value) == pytest.approx(ref, rel=1e-12)
    t = 0.3
    shifted = big_theta_gaussian(Jacobi(Heisenberg([0.0], [0.0], t), a_matrix([[10.0]]))).value
    assert shifted == pytest.approx(big_theta_gaussian(j).value * np.exp(-2j * np.pi * t), rel=1e-12)


def test_automorphy_examples(rng):
    J1 = np.array([[0, -1], [1, 0]], dtype=object)
    T1 = np.array([[1, 1], [0, 1]], dtype=object)
    j = Jacobi(Heisenberg.identity(1), a_matrix([[math.sqrt(2)]]))
    assert automorphy_defect(j, JacobiLatticeElement.identity(1)) == 0
    assert automorphy_defect(j, JacobiLatticeElement((0,), (0,), 0.0, J1)) < 1e-10
    for _ in range(20):
        j = Jacobi(Heisenberg(rng.uniform(-1, 1, 1), rng.uniform(-1, 1, 1), rng.normal()),
                   sl2(rng.uniform(-1, 1), math.exp(rng.normal())))
        assert automorphy_defect(j, JacobiLatticeElement((0,), (0,), 0.0, T1)) < 1e-10


def test_automorphy_random_words(rng):
    for _ in range(40):
        n = int(rng.integers(1, 3))
        g = dn_reduce(na_matrix(np.zeros((n, n)), np.eye(n) + 0.2 * np.diag(rng.random(n)))).reduced
        j = Jacobi(Heisenberg(rng.uniform(-0.5, 0.5, n), rng.uniform(-0.5, 0.5, n), 0.0), g)
        w = JacobiLatticeElement(rng.integers(-2, 3, n), rng.integers(-2, 3, n), 0.0, random_word(n, 4, rng))
        assert automorphy_defect(j, w) < 1e-8


def test_gaussian_modulus_shape():
    b = haar_batch(1, 2000, np.random.default_rng(5))
    ratios = [abs(big_theta_gaussian(b.jacobi(k)).value) / gaussian_value_bound(b.jacobi(k)) for k in range(len(b))]
    assert max(ratios) <= 2.0
