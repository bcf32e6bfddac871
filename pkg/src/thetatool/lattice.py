"""Small-dimension lattice tools: Gram-matrix LLL and exhaustive enumeration.

Integer vectors and unimodular transforms are kept as Python ints so that no
word length can overflow; the quadratic forms themselves are floating point.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .exceptions import BudgetExceededError, NotPrimitiveError

ENUM_NODE_BUDGET = 2_000_000
#: Transform entries beyond this switch LLL to the exact big-integer path.
_FAST_ENTRY_LIMIT = 2.0 ** 40


def _int_identity(n):
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _gso(G):
    """Gram-Schmidt data (mu, B) from a Gram matrix."""
    n = len(G)
    mu = np.zeros((n, n))
    B = np.zeros(n)
    for i in range(n):
        for j in range(i):
            mu[i, j] = (G[i, j] - np.dot(mu[j, :j] * mu[i, :j], B[:j])) / B[j]
        B[i] = G[i, i] - np.dot(mu[i, :i] ** 2, B[:i])
    return mu, B


@numba.njit(cache=True)
def _lll_fast(G, delta):
    """Float LLL; returns (T, G_red, ok) with ok False if T grew too large."""
    n = G.shape[0]
    T = np.eye(n)
    Gc = G.copy()
    mu = np.zeros((n, n))
    B = np.zeros(n)
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 100000:
            return T, Gc, False
        for i in range(k + 1):
            for j in range(i):
                acc = Gc[i, j]
                for m in range(j):
                    acc -= mu[j, m] * mu[i, m] * B[m]
                mu[i, j] = acc / B[j]
            acc = Gc[i, i]
            for m in range(i):
                acc -= mu[i, m] ** 2 * B[m]
            B[i] = acc
        for j in range(k - 1, -1, -1):
            q = np.floor(mu[k, j] + 0.5)
            if q != 0.0:
                T[k, :] -= q * T[j, :]
                Gc[k, :] -= q * Gc[j, :]
                Gc[:, k] -= q * Gc[:, j]
                for m in range(j):
                    mu[k, m] -= q * mu[j, m]
                mu[k, j] -= q
        if np.max(np.abs(T[k, :])) > _FAST_ENTRY_LIMIT:
            return T, Gc, False
        if B[k] >= (delta - mu[k, k - 1] ** 2) * B[k - 1]:
            k += 1
        else:
            for c in range(n):
                T[k, c], T[k - 1, c] = T[k - 1, c], T[k, c]
            for c in range(n):
                Gc[k, c], Gc[k - 1, c] = Gc[k - 1, c], Gc[k, c]
            for r in range(n):
                Gc[r, k], Gc[r, k - 1] = Gc[r, k - 1], Gc[r, k]
            k = max(k - 1, 1)
    return T, Gc, True


def lll_gram(G, delta: float = 0.99):
    """LLL-reduce the basis whose Gram matrix is ``G``.

    Returns ``(T, G_red)`` where ``T`` is a unimodular list-of-lists of ints
    (rows are the new basis in old coordinates) and ``G_red = T G T^T``.
    A compiled float path handles the common case; large transforms are
    redone with Python integers.
    """
    G0 = np.ascontiguousarray(G, dtype=float)
    Tf, _, ok = _lll_fast(G0, delta)
    if ok:
        T = [[int(v) for v in row] for row in Tf]
        return T, Tf @ G0 @ Tf.T
    return _lll_exact(G0, delta)


def _lll_exact(G0, delta):
    n = G0.shape[0]
    T = _int_identity(n)
    Gc = G0.copy()
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 100_000:
            raise BudgetExceededError("LLL did not converge")
        mu, B = _gso(Gc)
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                T[k] = [a - q * b for a, b in zip(T[k], T[j])]
                Gc[k, :] -= q * Gc[j, :]
                Gc[:, k] -= q * Gc[:, j]
                mu[k, :j] -= q * mu[j, :j]
                mu[k, j] -= q
        if B[k] >= (delta - mu[k, k - 1] ** 2) * B[k - 1]:
            k += 1
        else:
            T[k], T[k - 1] = T[k - 1], T[k]
            Gc[[k, k - 1], :] = Gc[[k - 1, k], :]
            Gc[:, [k, k - 1]] = Gc[:, [k - 1, k]]
            k = max(k - 1, 1)
    Tf = np.array([[float(v) for v in row] for row in T])
    return T, Tf @ G0 @ Tf.T


def _enumerate(G, radius, node_budget):
    """All nonzero integer z with ``z G z^T <= radius`` (one of each +-z)."""
    n = G.shape[0]
    mu, B = _gso(G)
    # q(z) = sum_i B_i (z_i + sum_{j>i} mu_ji z_j)^2
    out = []
    z = [0] * n
    nodes = 0

    def rec(i, partial):
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceededError(f"enumeration exceeded {node_budget} nodes")
        c = -sum(mu[j, i] * z[j] for j in range(i + 1, n))
        rem = radius - partial
        if rem < 0:
            return
        half = math.sqrt(max(rem, 0.0) / B[i])
        lo, hi = math.ceil(c - half), math.floor(c + half)
        for zi in range(lo, hi + 1):
            val = partial + B[i] * (zi - c) ** 2
            if val > radius:
                continue
            z[i] = zi
            if i == 0:
                if any(z):
                    out.append((tuple(z), val))
            else:
                rec(i - 1, val)
        z[i] = 0

    rec(n - 1, 0.0)
    # keep one representative of each +-pair
    return [(v, q) for v, q in out if _first_nonzero_positive(v)]


def _first_nonzero_positive(v):
    for a in v:
        if a:
            return a > 0
    return False


def canonical_sign(v):
    """Return ``v`` or ``-v`` so that the first nonzero entry is positive."""
    v = tuple(int(a) for a in v)
    return v if _first_nonzero_positive(v) else tuple(-a for a in v)


def form_value(G, v) -> float:
    vf = np.asarray(v, dtype=float)
    return float(vf @ np.asarray(G, dtype=float) @ vf)


def shortest_vectors(G, rtol: float = 1e-12, node_budget: int = ENUM_NODE_BUDGET):
    """All minimal nonzero vectors of the positive definite form ``G``.

    Vectors are returned up to sign (first nonzero entry positive), sorted
    lexicographically, together with the minimum.  Candidates within
    ``rtol`` (relative) of the minimum count as ties.
    """
    G = np.asarray(G, dtype=float)
    G = 0.5 * (G + G.T)
    T, Gr = lll_gram(G)
    radius = float(np.min(np.diag(Gr))) * (1 + 1e-9)
    cands = _enumerate(Gr, radius, node_budget)
    if not cands:
        raise BudgetExceededError("enumeration found no vector inside the LLL radius")
    Tn = [list(map(int, row)) for row in T]
    vecs = []
    for z, _ in cands:
        v = tuple(sum(z[i] * Tn[i][k] for i in range(len(z))) for k in range(len(z)))
        vecs.append((canonical_sign(v), form_value(G, v)))
    best = min(q for _, q in vecs)
    ties = sorted({v for v, q in vecs if q <= best * (1 + rtol)})
    return ties, best


def vectors_below(G, bound: float, node_budget: int = ENUM_NODE_BUDGET):
    """All nonzero vectors (up to sign) with form value ``<= bound``."""
    G = np.asarray(G, dtype=float)
    T, Gr = lll_gram(G)
    cands = _enumerate(Gr, bound, node_budget)
    Tn = [list(map(int, row)) for row in T]
    out = []
    for z, _ in cands:
        v = tuple(sum(z[i] * Tn[i][k] for i in range(len(z))) for k in range(len(z)))
        out.append((canonical_sign(v), form_value(G, v)))
    return out


def _gcd_all(v):
    g = 0
    for a in v:
        g = math.gcd(g, int(a))
    return g


def is_primitive(v) -> bool:
    return _gcd_all(v) == 1


def unimodular_with_first_row(a):
    """Integer matrix ``W`` in GL(l, Z) whose first row is the primitive ``a``.

    Column operations reduce ``a`` to ``e_1``, i.e. ``a M = e_1``, so
    ``W = M^-1`` has first row ``a``.  Returns ``(W, M)``, both exact.
    """
    a = [int(x) for x in a]
    if not is_primitive(a):
        raise NotPrimitiveError(f"{a} is not primitive")
    n = len(a)
    W = _int_identity(n)  # invariant: a_current @ W == a_original
    M = _int_identity(n)  # invariant: a_original @ M == a_current

    def col_sub(j, i, q):
        a[j] -= q * a[i]
        W[i] = [x + q * y for x, y in zip(W[i], W[j])]
        for row in M:
            row[j] -= q * row[i]

    while sum(1 for x in a if x) > 1:
        i = min((k for k in range(n) if a[k]), key=lambda k: abs(a[k]))
        for j in range(n):
            if j != i and a[j]:
                col_sub(j, i, a[j] // a[i])
    i = next(k for k in range(n) if a[k])
    if i != 0:
        a[0], a[i] = a[i], a[0]
        W[0], W[i] = W[i], W[0]
        for row in M:
            row[0], row[i] = row[i], row[0]
    if a[0] < 0:
        a[0] = -a[0]
        W[0] = [-x for x in W[0]]
        for row in M:
            row[0] = -row[0]
    return np.array(W, dtype=object), np.array(M, dtype=object)
