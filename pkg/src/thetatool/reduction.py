"""Reduction into fundamental domains.

* ``grenier_*``: GL(l, Z) acting on positive definite forms by ``Y -> A Y A^T``.
* ``dn_*``: Sp(n, Z) acting on Sp(n, R) from the left, with an inductive
  domain whose cusps are boxes in the level-1 coordinates ``(r, s, t)``.
* ``jacobi_reduce``: the theta group acting on the Jacobi group.

All returned group words are exact integer matrices (object dtype).
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .decompose import IwasawaCoords, iwasawa, partial, uvu_factor
from .exceptions import DimensionError, HypothesisNotMetError, NotPrimitiveError
from .groups import (
    Heisenberg,
    Jacobi,
    JacobiLatticeElement,
    dim,
    h_gamma,
    heis_action,
    identity,
    is_exact,
    sympl_inverse,
    to_float,
)
from .lattice import is_primitive, shortest_vectors, unimodular_with_first_row, vectors_below

#: Inequalities in membership tests are accepted within this slack.
MEMBER_SLACK = 1e-9
#: Relative tolerance below which a candidate does not count as an improvement.
IMPROVE_RTOL = 1e-12
#: Largest supported rank for symplectic reduction.
N_MAX = 4
#: Default cusp constant for parabolic reduction.
DEFAULT_CUSP_CONSTANT = 16.0


# ---------------------------------------------------------------- helpers

def _exact_identity(n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=object)
    for i in range(n):
        out[i, i] = 1
    return out


def _round_int(a) -> np.ndarray:
    """Nearest-integer rounding into an exact object array."""
    a = np.asarray(a, dtype=float)
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        out[idx] = int(math.floor(v + 0.5))
    return out


def _xdot(a, b) -> np.ndarray:
    """Exact product of two object matrices."""
    return np.asarray(a, dtype=object).dot(np.asarray(b, dtype=object))


# --------------------------------------------------------- Grenier domain

@dataclass(frozen=True)
class GrenierResult:
    A: np.ndarray
    Y_reduced: np.ndarray


def _first_row_chart(Y):
    """``(v_1, r, Y_1)`` from ``Y = [[1, r], [0, I]] diag(v_1, Y_1) [..]^T``."""
    U, v = uvu_factor(Y)
    U22 = U[1:, 1:]
    r = np.linalg.solve(U22.T, U[0, 1:])
    Y1 = (U22 * v[1:]) @ U22.T
    return v[0], r, 0.5 * (Y1 + Y1.T)


def grenier_member(Y, slack: float = MEMBER_SLACK) -> bool:
    Y = np.asarray(Y, dtype=float)
    l = Y.shape[0]
    v1, r, Y1 = _first_row_chart(Y) if l > 1 else (uvu_factor(Y)[1][0], None, None)
    if l == 1:
        return True
    # v_1(A Y A^T) = 1 / (a Y^-1 a^T) with a the first row of A^-T
    _, qmin = shortest_vectors(np.linalg.inv(Y))
    if 1.0 / v1 > qmin * (1 + slack):
        return False
    if np.any(np.abs(r) > 0.5 + slack) or r[0] < -slack:
        return False
    return grenier_member(Y1, slack)


def _grenier_word(Y) -> np.ndarray:
    l = Y.shape[0]
    A = _exact_identity(l)
    if l == 1:
        return A
    Yinv = np.linalg.inv(Y)
    vecs, qmin = shortest_vectors(Yinv)
    if Yinv[0, 0] > qmin * (1 + IMPROVE_RTOL) and (1,) + (0,) * (l - 1) not in vecs:
        W, M = unimodular_with_first_row(vecs[0])
        A = M.T.copy()  # A^-T = W has first row a
        Y = _apply_gl(A, Y)
    _, _, Y1 = _first_row_chart(Y)
    A1 = _grenier_word(Y1)
    E = _exact_identity(l)
    E[1:, 1:] = A1
    A = _xdot(E, A)
    Y = _apply_gl(E, Y)
    _, r, _ = _first_row_chart(Y)
    k = _round_int(-r)
    if any(k):
        E = _exact_identity(l)
        E[0, 1:] = k
        A = _xdot(E, A)
        Y = _apply_gl(E, Y)
        _, r, _ = _first_row_chart(Y)
    if r[0] < 0:
        E = _exact_identity(l)
        E[0, 0] = -1
        A = _xdot(E, A)
    return A


def _apply_gl(A, Y):
    Af = to_float(A) if is_exact(A) else np.asarray(A, dtype=float)
    Z = Af @ Y @ Af.T
    return 0.5 * (Z + Z.T)


def grenier_reduce(Y) -> GrenierResult:
    """Reduce a positive definite form into the Grenier-type domain."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise DimensionError(f"expected a square matrix, got {Y.shape}")
    uvu_factor(Y)  # positive definiteness check
    A = _grenier_word(0.5 * (Y + Y.T))
    return GrenierResult(A=A, Y_reduced=_apply_gl(A, Y))


# ------------------------------------------------------ symplectic domain

@dataclass(frozen=True)
class SymplecticReduction:
    gamma: np.ndarray
    reduced: np.ndarray
    coords: IwasawaCoords


def v1_gram(X, Y) -> np.ndarray:
    """Gram matrix of ``(c, d) -> c Y c^T + (c X + d) Y^-1 (c X + d)^T``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Yi = np.linalg.inv(Y)
    XYi = X @ Yi
    G = np.block([[Y + XYi @ X, XYi], [XYi.T, Yi]])
    return 0.5 * (G + G.T)


def v1_form(X, Y, row) -> float:
    """``1 / v_1(gamma g)`` for a gamma whose (n+1)-th row is ``row``."""
    v = np.asarray([float(a) for a in row])
    return float(v @ v1_gram(X, Y) @ v)


def v1_min_search(X, Y):
    """Minimizing rows ``(c, d)`` of the v_1 form, and the minimum.

    Returns ``(rows, q_min)`` where ``rows`` lists every primitive minimizer
    up to sign (first nonzero entry positive), sorted lexicographically.
    """
    return shortest_vectors(v1_gram(X, Y))


def sympl_complete(v) -> np.ndarray:
    """Exact ``gamma`` in Sp(n, Z) whose (n+1)-th row is the primitive ``v``.

    Symplectic elementary operations carry ``v`` to ``e_{n+1}``; the matrix
    ``Winv`` tracks their inverse so that ``e_{n+1} Winv = v`` throughout.
    """
    v = [int(a) for a in v]
    if len(v) % 2 or not v:
        raise DimensionError(f"expected an even-length vector, got {len(v)}")
    if not is_primitive(v):
        raise NotPrimitiveError(f"{v} is not primitive")
    n = len(v) // 2
    W = [[int(i == j) for j in range(2 * n)] for i in range(2 * n)]

    def add_c_to_d(i, k):  # d_i += k c_i
        v[n + i] += k * v[i]
        W[i] = [a - k * b for a, b in zip(W[i], W[n + i])]

    def rotate(i):  # (c_i, d_i) -> (d_i, -c_i)
        v[i], v[n + i] = v[n + i], -v[i]
        W[i], W[n + i] = W[n + i], [-a for a in W[i]]

    def d_col_sub(j, i, q):  # d_j -= q d_i
        v[n + j] -= q * v[n + i]
        W[j] = [a - q * b for a, b in zip(W[j], W[i])]
        W[n + i] = [a + q * b for a, b in zip(W[n + i], W[n + j])]

    def d_swap(i, j):
        v[n + i], v[n + j] = v[n + j], v[n + i]
        W[i], W[j] = W[j], W[i]
        W[n + i], W[n + j] = W[n + j], W[n + i]

    def d_neg(i):
        v[n + i] = -v[n + i]
        W[i] = [-a for a in W[i]]
        W[n + i] = [-a for a in W[n + i]]

    for i in range(n):
        while v[i]:
            if v[n + i]:
                add_c_to_d(i, -(v[n + i] // v[i]))
            rotate(i)
    d = lambda: v[n:]  # noqa: E731
    while sum(1 for a in d() if a) > 1:
        i = min((k for k in range(n) if v[n + k]), key=lambda k: abs(v[n + k]))
        for j in range(n):
            if j != i and v[n + j]:
                d_col_sub(j, i, v[n + j] // v[n + i])
    i = next(k for k in range(n) if v[n + k])
    if i:
        d_swap(0, i)
    if v[n] < 0:
        d_neg(0)
    return np.array(W, dtype=object)


def _embed_lower(gamma1, n: int) -> np.ndarray:
    """Embed gamma1 in Sp(n-1, Z) on the coordinates other than 1 and n+1."""
    m = n - 1
    out = identity(n, exact=True)
    idx = list(range(1, n)) + list(range(n + 1, 2 * n))
    g1 = np.asarray(gamma1, dtype=object)
    for a in range(2 * m):
        for b in range(2 * m):
            out[idx[a], idx[b]] = g1[a, b]
    return out


def _sl2_word(g) -> np.ndarray:
    """Classic translate-and-invert reduction for n = 1."""
    c = iwasawa(g)
    z = complex(c.X[0, 0], c.v[0])
    a, b, cc, d = 1, 0, 0, 1
    for _ in range(10_000):
        k = math.floor(z.real + 0.5)
        if k:
            z -= k
            a, b = a - k * cc, b - k * d
        if abs(z) ** 2 < 1 - IMPROVE_RTOL:
            z = -1 / z
            a, b, cc, d = -cc, -d, a, b
        else:
            break
    return np.array([[a, b], [cc, d]], dtype=object)


def _dn_word(g) -> np.ndarray:
    n = dim(g)
    if n == 1:
        return _sl2_word(g)
    gamma = identity(n, exact=True)

    def apply(step):
        nonlocal gamma, g
        gamma = _xdot(step, gamma)
        g = to_float(step) @ g

    # integer translation keeps X small before the lattice search
    c = iwasawa(g)
    k = _round_int(-c.X)
    if any(k.flat):
        step = identity(n, exact=True)
        step[:n, n:] = k
        apply(step)
        c = iwasawa(g)
    # maximize v_1
    rows, qmin = v1_min_search(c.X, c.Y)
    e = (0,) * n + (1,) + (0,) * (n - 1)
    if 1.0 / c.v[0] > qmin * (1 + IMPROVE_RTOL) and e not in rows:
        apply(sympl_complete(rows[0]))
    # reduce the rank n-1 factor
    g1 = partial(g, 1).sub_symplectic()
    apply(_embed_lower(_dn_word(g1), n))
    # translate r_1, s_1, then t_1
    pc = partial(g, 1)
    a = _round_int(-pc.R[0])
    b = _round_int(-pc.S[0])
    if any(a) or any(b):
        step = identity(n, exact=True)
        step[0, 1:n] = a
        step[0, n + 1:] = b
        step[n + 1:, n] = -a
        step[1:n, n] = b
        apply(step)
        pc = partial(g, 1)
    t = _round_int(-pc.T[0, 0])
    if t:
        step = identity(n, exact=True)
        step[0, n] = t
        apply(step)
        pc = partial(g, 1)
    if pc.R[0, 0] < 0:
        step = identity(n, exact=True)
        step[0, 0] = step[n, n] = -1
        apply(step)
    return gamma


def dn_reduce(g) -> SymplecticReduction:
    """Reduce ``g`` into the inductive domain; returns ``(gamma, gamma g)``."""
    n = dim(g)
    if n > N_MAX:
        raise DimensionError(f"n = {n} exceeds the supported maximum {N_MAX}")
    g = to_float(g)
    gamma = _dn_word(g)
    reduced = to_float(gamma) @ g
    return SymplecticReduction(gamma=gamma, reduced=reduced, coords=iwasawa(reduced))


def dn_member(g, slack: float = MEMBER_SLACK) -> bool:
    g = to_float(g)
    n = dim(g)
    c = iwasawa(g)
    if n == 1:
        x, y = c.X[0, 0], c.v[0]
        return abs(x) <= 0.5 + slack and x * x + y * y >= 1 - slack
    pc = partial(g, 1)
    box = np.concatenate([pc.R.ravel(), pc.S.ravel(), pc.T.ravel()])
    if np.any(np.abs(box) > 0.5 + slack) or pc.R[0, 0] < -slack:
        return False
    if not dn_member(pc.sub_symplectic(), slack):
        return False
    # the lattice search is the expensive test, so it runs last
    _, qmin = v1_min_search(c.X, c.Y)
    return 1.0 / c.v[0] <= qmin * (1 + slack)


def domain_margin(g, cap: float = 1.0) -> float:
    """Smallest slack of a reduced point in its defining inequalities.

    Zero or negative means on or outside the boundary; the v_1 condition
    contributes the relative gap to the next-best primitive row, capped at
    ``cap``.
    """
    g = to_float(g)
    n = dim(g)
    c = iwasawa(g)
    if n == 1:
        x, y = c.X[0, 0], c.v[0]
        return float(min(0.5 - abs(x), x * x + y * y - 1.0))
    pc = partial(g, 1)
    box = np.concatenate([pc.R.ravel(), pc.S.ravel(), pc.T.ravel()])
    margin = min(float(0.5 - np.max(np.abs(box))), float(pc.R[0, 0]))
    margin = min(margin, domain_margin(pc.sub_symplectic(), cap))
    q0 = 1.0 / c.v[0]
    home = tuple(1 if k == n else 0 for k in range(2 * n))
    others = [q for v, q in vectors_below(v1_gram(c.X, c.Y), q0 * (1 + cap)) if v != home]
    gap = min(others) / q0 - 1.0 if others else cap
    return float(min(margin, gap))


# ------------------------------------------------------ fast path, n = 1

def sl2_reduce_batch(x, y, max_iter: int = 10_000):
    """Vectorized reduction of points ``x + iy`` of the upper half plane.

    Returns ``(x, y, word)`` with reduced ``|x| <= 1/2``, ``|z| >= 1`` and
    ``word`` a ``(4, N)`` float array of the integer entries ``a, b, c, d``.
    """
    z = (np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float)).ravel().copy()
    N = z.size
    a, b = np.ones(N), np.zeros(N)
    c, d = np.zeros(N), np.ones(N)
    active = np.arange(N)
    for _ in range(max_iter):
        if active.size == 0:
            break
        za = z[active]
        k = np.floor(za.real + 0.5)
        za = za - k
        a[active] -= k * c[active]
        b[active] -= k * d[active]
        inv = np.abs(za) ** 2 < 1 - IMPROVE_RTOL
        za[inv] = -1 / za[inv]
        idx = active[inv]
        a[idx], b[idx], c[idx], d[idx] = -c[idx], -d[idx], a[idx].copy(), b[idx].copy()
        z[active] = za
        active = idx
    return z.real, z.imag, np.stack([a, b, c, d])


def jacobi_reduce_batch_n1(hx, hy, x, y):
    """Vectorized rank-1 Jacobi reduction.

    Returns reduced ``(hx, hy, x, y)``; ``hx, hy`` land in ``(-1/2, 1/2]``.
    """
    xr, yr, (a, b, c, d) = sl2_reduce_batch(x, y)
    hx = np.asarray(hx, dtype=float).ravel()
    hy = np.asarray(hy, dtype=float).ravel()
    # h_gamma h^{gamma^-1} with gamma^-1 = [[d, -b], [-c, a]]
    px = np.where(np.mod(c * d, 2) == 1, 0.5, 0.0) + hx * d - hy * c
    py = np.where(np.mod(a * b, 2) == 1, 0.5, 0.0) - hx * b + hy * a
    px = px + np.floor(0.5 - px)
    py = py + np.floor(0.5 - py)
    return px, py, xr, yr


# --------------------------------------------------------- Jacobi domain

@dataclass(frozen=True)
class JacobiReduction:
    word: JacobiLatticeElement
    reduced: Jacobi


def jacobi_reduce(j: Jacobi) -> JacobiReduction:
    red = dn_reduce(j.g)
    gamma = red.gamma
    # Heisenberg part of gamma~ (h, g) before the integer translation
    hp = h_gamma(gamma) * heis_action(j.h, sympl_inverse(gamma))
    m = np.floor(0.5 - hp.x)
    nn = np.floor(0.5 - hp.y)
    w = Heisenberg(m, nn, 0.0) * hp
    word = JacobiLatticeElement(m.astype(int), nn.astype(int), -w.t, gamma)
    reduced = Jacobi(Heisenberg(w.x, w.y, 0.0), red.reduced)
    return JacobiReduction(word=word, reduced=reduced)


# ------------------------------------------------------ cusp quantities

def cusp_quantities(g, l: int):
    """``(min v_l, max v_{l+1})`` over the level-l parabolic orbit of ``g``.

    The second entry is ``None`` when ``l = n``.
    """
    n = dim(g)
    if not 1 <= l <= n:
        raise DimensionError(f"level l={l} outside 1..{n}")
    pc = partial(g, l)
    form = (pc.U_l * pc.v_l) @ pc.U_l.T
    _, vmin = shortest_vectors(form)
    vmax = None
    if l < n:
        vmax = float(dn_reduce(pc.sub_symplectic()).coords.v[0])
    return float(vmin), vmax


def in_parabolic(gamma, l: int) -> bool:
    """Block-pattern test for membership of an exact matrix in the level-l parabolic."""
    n = dim(gamma)
    G = np.asarray(gamma, dtype=object)
    if any(G[l:, :l].flat):
        return False
    return not (any(G[n:n + l, l:n].flat) or any(G[n:n + l, n + l:].flat))


def parabolic_reduce(g, l: int, a_l: float = DEFAULT_CUSP_CONSTANT) -> SymplecticReduction:
    """Reduce a point that lies deep in the level-l cusp.

    Raises HypothesisNotMetError when the cusp condition fails or when the
    reducing word leaves the parabolic subgroup (``a_l`` too small).
    """
    n = dim(g)
    vmin, vmax = cusp_quantities(g, l)
    bound = a_l * vmax if l < n else a_l
    if vmin < bound:
        raise HypothesisNotMetError(f"min v_{l} = {vmin:.6g} below required {bound:.6g}")
    red = dn_reduce(g)
    if not in_parabolic(red.gamma, l):
        raise HypothesisNotMetError(f"reducing word is not in the level-{l} parabolic")
    if l < n:
        got = red.coords.v[l]
        if abs(got - vmax) > 1e-8 * vmax:
            raise HypothesisNotMetError(f"v_{l + 1} after reduction {got:.12g} != {vmax:.12g}")
    return red
