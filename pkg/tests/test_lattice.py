import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thetatool.lattice import (
    canonical_sign,
    form_value,
    is_primitive,
    lll_gram,
    shortest_vectors,
    unimodular_with_first_row,
    vectors_below,
)


def brute_min(G):
    """Exhaustive search inside the box |v_i| <= sqrt(q (G^-1)_ii)."""
    n = G.shape[0]
    q = float(np.min(np.diag(G)))
    bound = [int(math.floor(math.sqrt(q * Gi) + 1e-9)) for Gi in np.diag(np.linalg.inv(G))]
    best, arg = math.inf, []
    for v in itertools.product(*[range(-b, b + 1) for b in bound]):
        if not any(v):
            continue
        val = form_value(G, v)
        if val < best * (1 - 1e-12):
            best, arg = val, [canonical_sign(v)]
        elif val <= best * (1 + 1e-12):
            arg.append(canonical_sign(v))
    return sorted(set(arg)), best


def random_gram(rng, n, spread=1.0):
    B = rng.normal(size=(n, n)) * np.exp(rng.normal(scale=spread, size=n))
    return B @ B.T + 1e-3 * np.eye(n)


def test_lll_transform_is_unimodular(rng):
    for _ in range(200):
        n = int(rng.integers(2, 6))
        G = random_gram(rng, n)
        T, Gr = lll_gram(G)
        Tf = np.array(T, dtype=float)
        assert abs(round(np.linalg.det(Tf))) == 1
        assert np.allclose(Tf @ G @ Tf.T, Gr, rtol=1e-8, atol=1e-8 * np.max(np.abs(G)))


def test_shortest_matches_brute_force(rng):
    checked = 0
    while checked < 300:
        n = int(rng.integers(2, 5))
        G = random_gram(rng, n, 0.7)
        q = float(np.min(np.diag(G)))
        if np.prod(2 * np.sqrt(q * np.diag(np.linalg.inv(G))) + 1) > 2e4:
            continue
        checked += 1
        vecs, best = shortest_vectors(G)
        ref_vecs, ref_best = brute_min(G)
        assert best == pytest.approx(ref_best, rel=1e-10)
        assert vecs == ref_vecs


def test_ties_found():
    vecs, best = shortest_vectors(np.eye(2))
    assert best == pytest.approx(1.0) and vecs == [(0, 1), (1, 0)]
    vecs, _ = shortest_vectors(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert vecs == [(0, 1), (1, -1), (1, 0)]


def test_vectors_below_complete(rng):
    G = random_gram(rng, 3)
    _, best = shortest_vectors(G)
    found = {v for v, q in vectors_below(G, 3 * best)}
    inv = np.linalg.inv(G)
    bound = [int(math.floor(math.sqrt(3 * best * Gi))) for Gi in np.diag(inv)]
    ref = {canonical_sign(v) for v in itertools.product(*[range(-b, b + 1) for b in bound])
           if any(v) and form_value(G, v) <= 3 * best}
    assert found == ref


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=5))
def test_unimodular_completion(a):
    if not is_primitive(a):
        return
    W, M = unimodular_with_first_row(a)
    assert [int(x) for x in W[0]] == a
    l = len(a)
    assert np.array_equal(W.dot(M), np.eye(l, dtype=int).astype(object))
