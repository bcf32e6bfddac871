import itertools
import math

import numpy as np
import pytest

from thetatool.decompose import a_matrix, iwasawa, n_matrix, na_matrix, partial, random_element
from thetatool.exceptions import HypothesisNotMetError, NotPrimitiveError
from thetatool.groups import (
    Heisenberg,
    Jacobi,
    JacobiLatticeElement,
    from_blocks,
    identity,
    random_word,
    sympl_check,
    to_float,
)
from thetatool.haar import haar_batch
from thetatool.reduction import (
    cusp_quantities,
    dn_member,
    dn_reduce,
    domain_margin,
    grenier_member,
    grenier_reduce,
    in_parabolic,
    jacobi_reduce,
    jacobi_reduce_batch_n1,
    parabolic_reduce,
    sl2_reduce_batch,
    sympl_complete,
    v1_min_search,
)


def sl2(x, y):
    return n_matrix([[x]]) @ a_matrix([[math.sqrt(y)]])


def embed2(g1, g2):
    return from_blocks(np.diag([g1[0, 0], g2[0, 0]]), np.diag([g1[0, 1], g2[0, 1]]),
                       np.diag([g1[1, 0], g2[1, 0]]), np.diag([g1[1, 1], g2[1, 1]]))


def _bezout(d, c):
    """Integers a, b with a*d - b*c = 1."""
    r0, r1, s0, s1, t0, t1 = d, c, 1, 0, 0, 1
    while r1:
        q = r0 // r1
        r0, r1, s0, s1, t0, t1 = r1, r0 - q * r1, s1, s0 - q * s1, t1, t0 - q * t1
    return s0 * r0, -t0 * r0


def sl2_brute(x, y, N=12):
    """Highest point of the orbit over all integer matrices with entries <= N."""
    z = complex(x, y)
    best = None
    for c, d in itertools.product(range(-N, N + 1), repeat=2):
        if math.gcd(c, d) != 1:
            continue
        im = y / abs(c * z + d) ** 2
        if best is None or im > best[0] + 1e-12:
            # a, b with ad - bc = 1
            a, b = _bezout(d, c)
            w = (a * z + b) / (c * z + d)
            best = (im, w)
    w = best[1]
    return w.real - math.floor(w.real + 0.5), w.imag


# ------------------------------------------------------------- Grenier


def test_grenier_member_examples():
    assert grenier_member(np.diag([4.0, 1.0]))
    assert not grenier_member(np.diag([1.0, 4.0]))
    assert grenier_member(np.array([[2.0, 1.0], [1.0, 2.0]]))


def test_grenier_reduce_examples():
    r = grenier_reduce(np.diag([1.0, 4.0]))
    assert [[int(a) for a in row] for row in r.A] == [[0, 1], [1, 0]]
    assert np.allclose(r.Y_reduced, np.diag([4.0, 1.0]))
    r = grenier_reduce(np.diag([4.0, 1.0]))
    assert np.array_equal(r.A, np.eye(2, dtype=int).astype(object))


def test_grenier_orbit_and_chain(rng):
    for _ in range(200):
        l = int(rng.integers(2, 5))
        B = rng.normal(size=(l, l))
        Y = B @ B.T + 0.05 * np.eye(l)
        r = grenier_reduce(Y)
        A = np.array(r.A, dtype=float)
        assert abs(round(np.linalg.det(A))) == 1
        assert np.allclose(A @ Y @ A.T, r.Y_reduced, atol=1e-10 * np.max(np.abs(Y)))
        assert grenier_member(r.Y_reduced)
        v = iwasawa(na_matrix(np.zeros((l, l)), r.Y_reduced)).v
        assert np.all(v[:-1] >= 0.75 * v[1:] - 1e-12)
        E = np.eye(l)
        i = int(rng.integers(l))
        E[i, :] += rng.integers(-3, 4, l) * (np.arange(l) != i)
        E = E[rng.permutation(l)]
        Y2 = E @ Y @ E.T
        assert np.allclose(grenier_reduce(Y2).Y_reduced, r.Y_reduced, atol=1e-8)


# ------------------------------------------------------- v1 and completion


def test_v1_search_examples():
    rows, q = v1_min_search([[0.0]], [[5.0]])
    assert rows == [(0, 1)] and q == pytest.approx(0.2)
    rows, q = v1_min_search([[0.0]], [[0.2]])
    assert rows == [(1, 0)] and q == pytest.approx(0.2)
    rows, q = v1_min_search([[0.0]], [[1.0]])
    assert rows == [(0, 1), (1, 0)] and q == pytest.approx(1.0)


def test_sympl_complete_examples(rng):
    assert np.array_equal(sympl_complete((0, 0, 1, 0)), identity(2, exact=True))
    g = sympl_complete((1, 0))
    assert sympl_check(g) == 0 and list(g[1]) == [1, 0]
    with pytest.raises(NotPrimitiveError):
        sympl_complete((2, 4, 6, 0))
    for _ in range(1000):
        n = int(rng.integers(1, 4))
        v = rng.integers(-100, 101, 2 * n)
        if math.gcd(*map(int, v)) != 1:
            continue
        g = sympl_complete(v)
        assert sympl_check(g) == 0 and [int(a) for a in g[n]] == [int(a) for a in v]


# ---------------------------------------------------------- symplectic


def test_dn_member_examples():
    assert dn_member(sl2(0.0, 2.0))
    assert not dn_member(sl2(0.7, 0.5))
    assert dn_member(embed2(sl2(0.1, 4.0), sl2(-0.3, 2.0)))


def test_rank_one_reduction_matches_brute_force(rng):
    r = dn_reduce(sl2(0.7, 0.5))
    assert r.coords.X[0, 0] == pytest.approx(-2 / 17) and r.coords.v[0] == pytest.approx(25 / 17)
    for _ in range(100):
        x, y = rng.uniform(-3, 3), math.exp(rng.uniform(-2.5, 1))
        r = dn_reduce(sl2(x, y))
        bx, by = sl2_brute(x, y)
        assert r.coords.v[0] == pytest.approx(by, rel=1e-9)
        if abs(abs(bx) - 0.5) > 1e-9:
            assert r.coords.X[0, 0] == pytest.approx(bx, abs=1e-9)


def test_reduction_invariants(rng):
    for n in (1, 2, 3):
        for _ in range(40 if n < 3 else 10):
            g = random_element(n, rng)
            r = dn_reduce(g)
            assert sympl_check(r.gamma) == 0
            assert np.allclose(to_float(r.gamma) @ g, r.reduced, atol=1e-10 * max(1, np.max(np.abs(r.reduced))))
            assert dn_member(r.reduced)
            v = r.coords.v
            assert v[-1] >= math.sqrt(3) / 2 - 1e-12 and np.all(v[:-1] >= 0.75 * v[1:] - 1e-12)


def test_idempotent_and_orbit(rng):
    for n in (1, 2, 3):
        for _ in range(40 if n < 3 else 10):
            g = random_element(n, rng)
            r = dn_reduce(g)
            if domain_margin(r.reduced) < 1e-6:
                continue
            assert np.array_equal(dn_reduce(r.reduced).gamma, identity(n, exact=True))
            moved = dn_reduce(to_float(random_word(n, 5, rng)) @ g)
            assert np.allclose(moved.coords.X, r.coords.X, atol=1e-8)
            assert np.allclose(moved.coords.Y, r.coords.Y, atol=1e-8)


def test_batch_reduction_matches_scalar(rng):
    x, y = rng.uniform(-5, 5, 300), np.exp(rng.normal(scale=2, size=300))
    xr, yr, word = sl2_reduce_batch(x, y)
    for k in range(300):
        c = dn_reduce(sl2(x[k], y[k])).coords
        assert yr[k] == pytest.approx(c.v[0], rel=1e-10)
        a, b, cc, d = word[:, k]
        assert a * d - b * cc == 1


def test_comparison_constants():
    b = haar_batch(2, 20_000, np.random.default_rng(77))
    rng = np.random.default_rng(78)
    worst_lo, worst_hi = np.inf, 0.0
    for k in range(len(b)):
        c = iwasawa(b.jacobi(k).g)
        x = rng.normal(size=(5, 2))
        ratio = np.einsum("ki,ij,kj->k", x, c.Y, x) / np.einsum("ki,i,ki->k", x, c.v, x)
        worst_lo, worst_hi = min(worst_lo, ratio.min()), max(worst_hi, ratio.max())
    assert 1 / 16 <= worst_lo and worst_hi <= 16


# ------------------------------------------------------------- Jacobi


def test_jacobi_examples():
    g = sl2(0.1, 2.0)
    r = jacobi_reduce(Jacobi(Heisenberg.identity(1), g))
    assert r.word.m == (0,) and r.word.n_vec == (0,) and np.array_equal(r.word.gamma, identity(1, exact=True))
    j = Jacobi(Heisenberg([0.8], [0.3], 0.5), g)
    r = jacobi_reduce(j)
    assert r.word.m == (-1,) and r.reduced.h.x[0] == pytest.approx(-0.2)
    assert r.reduced.h.t == 0.0
    # the word really maps j to the reduced element
    moved = r.word * j
    assert np.allclose(moved.g, r.reduced.g) and moved.h.allclose(r.reduced.h, 1e-12)


def test_jacobi_orbit(rng):
    for _ in range(60):
        n = int(rng.integers(1, 3))
        j = Jacobi(Heisenberg(rng.normal(size=n), rng.normal(size=n), rng.normal()), random_element(n, rng))
        r = jacobi_reduce(j)
        moved = r.word * j
        assert np.allclose(moved.g, r.reduced.g, atol=1e-9) and moved.h.allclose(r.reduced.h, 1e-9)
        assert np.all(np.abs(r.reduced.h.x) <= 0.5) and np.all(np.abs(r.reduced.h.y) <= 0.5)
        if domain_margin(r.reduced.g) < 1e-6 or np.max(np.abs(np.abs(r.reduced.h.x) - 0.5)) < 1e-6:
            continue
        w = JacobiLatticeElement(rng.integers(-3, 4, n), rng.integers(-3, 4, n), float(rng.normal()), random_word(n, 4, rng))
        r2 = jacobi_reduce(w * j)
        assert np.allclose(r2.reduced.g @ np.diag(np.sign(np.diag(r2.reduced.g))),
                           r.reduced.g @ np.diag(np.sign(np.diag(r.reduced.g))), atol=1e-8) or np.allclose(
            iwasawa(r2.reduced.g).Y, iwasawa(r.reduced.g).Y, atol=1e-8)
        assert np.allclose(np.abs(r2.reduced.h.x), np.abs(r.reduced.h.x), atol=1e-8)


def test_batch_jacobi_matches_scalar(rng):
    N = 200
    x, y = rng.normal(size=N) * 3, np.exp(rng.normal(size=N) * 2)
    hx, hy = rng.normal(size=N), rng.normal(size=N)
    px, py, xr, yr = jacobi_reduce_batch_n1(hx, hy, x, y)
    for k in range(N):
        r = jacobi_reduce(Jacobi(Heisenberg([hx[k]], [hy[k]], 0.0), sl2(x[k], y[k]))).reduced
        assert r.h.x[0] == pytest.approx(px[k], abs=1e-9) and r.h.y[0] == pytest.approx(py[k], abs=1e-9)
        assert iwasawa(r.g).v[0] == pytest.approx(yr[k], rel=1e-10)


# --------------------------------------------------------------- cusps


def test_cusp_quantity_examples():
    vmin, vmax = cusp_quantities(na_matrix(np.zeros((2, 2)), np.diag([4.0, 1.0])), 2)
    assert vmin == pytest.approx(1.0) and vmax is None
    g = sl2(0.2, 3.0)
    vmin, _ = cusp_quantities(g, 1)
    assert vmin == pytest.approx(3.0)


def test_cusp_ratio_on_reduced_points(rng):
    worst = 1.0
    for _ in range(100):
        n = int(rng.integers(2, 4))
        r = dn_reduce(random_element(n, rng, 1.5))
        for l in range(1, n + 1):
            vmin, _ = cusp_quantities(r.reduced, l)
            ratio = vmin / r.coords.v[l - 1]
            worst = max(worst, ratio, 1 / ratio)
    assert worst <= 16


def test_parabolic_examples(rng):
    g = na_matrix(0.01 * np.array([[1.0, 0.5], [0.5, -1.0]]), 100 * np.eye(2))
    r = parabolic_reduce(g, 2)
    assert in_parabolic(r.gamma, 2) and not any(np.asarray(r.gamma)[2:, :2].flat)
    reduced = embed2(sl2(0.1, 40.0), sl2(0.2, 1.5))
    assert np.array_equal(parabolic_reduce(reduced, 1).gamma, identity(2, exact=True))
    deep = embed2(sl2(0.3, 50.0), sl2(-0.1, 1.2))
    for _ in range(10):
        U = np.array([[1.0, rng.normal()], [0.0, 1.0]])
        moved = from_blocks(U, np.zeros((2, 2)), np.zeros((2, 2)), np.linalg.inv(U).T) @ deep
        r = parabolic_reduce(moved, 1)
        assert in_parabolic(r.gamma, 1)


def test_parabolic_hypothesis_checked():
    with pytest.raises(HypothesisNotMetError):
        parabolic_reduce(embed2(sl2(0.0, 2.0), sl2(0.0, 1.5)), 1)


def test_partial_of_reduced_is_reduced_below(rng):
    for _ in range(30):
        r = dn_reduce(random_element(3, rng))
        assert dn_member(partial(r.reduced, 1).sub_symplectic())
