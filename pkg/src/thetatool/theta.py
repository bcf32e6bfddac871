"""Theta sums with box, Gaussian and dyadic cutoffs, and the Jacobi theta function.

A theta sum with cutoff ``f`` is

    sum_m f((m + x) / M) e(1/2 m X m^T + m y^T).

For the box cutoff ``f`` is the indicator of the open box ``prod (0, b_i)``;
the sum is finite and handed to one of the lattice kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .cutoff import DyadicIndex, all_indices, f1, levels_needed
from .decompose import iwasawa
from .exceptions import BudgetExceededError, DimensionError
from .groups import Jacobi, JacobiLatticeElement

#: Largest admissible ``M * max(b)`` for finite sums.
LATTICE_BUDGET = 1 << 26
#: Target absolute tail of truncated Gaussian series.
GAUSS_TAIL = 1e-15
#: Phases are called exact when Q is within this of the identity.
PHASE_EXACT_TOL = 1e-12


@dataclass(frozen=True)
class ThetaRequest:
    M: float
    X: np.ndarray
    x: np.ndarray
    y: np.ndarray
    b: np.ndarray = None
    cutoff: str = "box"
    index: DyadicIndex = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        n = X.shape[0]
        if X.shape != (n, n):
            raise DimensionError(f"X must be square, got {X.shape}")
        if np.max(np.abs(X - X.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(X))):
            raise ValueError("X must be symmetric")
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        b = np.ones(n) if self.b is None else np.atleast_1d(np.asarray(self.b, dtype=float))
        if x.shape != (n,) or y.shape != (n,) or b.shape != (n,):
            raise DimensionError("x, y and b must have length n")
        if not self.M > 0:
            raise ValueError(f"M must be positive, got {self.M}")
        if np.any(b <= 0):
            raise ValueError("box sides must be positive")
        if self.cutoff not in ("box", "gaussian", "dyadic"):
            raise ValueError(f"unknown cutoff {self.cutoff!r}")
        if self.cutoff == "dyadic" and (self.index is None or self.index.n != n):
            raise ValueError("dyadic cutoff needs a DyadicIndex of matching dimension")
        for name, val in (("X", 0.5 * (X + X.T)), ("x", x), ("y", y), ("b", b)):
            val = val.copy()
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "M", float(self.M))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def box_limits(self):
        """Integer range ``lo <= m < hi`` of the open box ``-x < m < M b - x``."""
        lo = [math.floor(-xi) + 1 for xi in self.x]
        hi = [math.ceil(self.M * bi - xi) for bi, xi in zip(self.b, self.x)]
        return lo, hi


@dataclass(frozen=True)
class ThetaValue:
    value: complex
    truncation_bound: float = 0.0
    phase_exact: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.truncation_bound >= 0:
            raise ValueError("truncation bound must be nonnegative")
        object.__setattr__(self, "value", complex(self.value))

    def __abs__(self) -> float:
        return abs(self.value)


def _check_budget(req: ThetaRequest, budget: float):
    extent = req.M * float(np.max(req.b))
    if extent > budget:
        raise BudgetExceededError(f"M*max(b) = {extent:.3g} exceeds the lattice budget {budget:.3g}")


def theta_box(req: ThetaRequest, kernel: str = "rotor", budget: float = LATTICE_BUDGET) -> ThetaValue:
    """Finite theta sum over the open box."""
    _check_budget(req, budget)
    try:
        fn = kernels.KERNELS[kernel]
    except KeyError:
        raise ValueError(f"unknown kernel {kernel!r}; choose from {sorted(kernels.KERNELS)}") from None
    lo, hi = req.box_limits()
    return ThetaValue(fn(lo, hi, req.X, req.y), 0.0, True, {"kernel": kernel})


def theta_terms(req: ThetaRequest, budget: float = LATTICE_BUDGET):
    """All box terms as an n-dimensional array, with the index offset ``lo``."""
    _check_budget(req, budget)
    lo, hi = req.box_limits()
    shape = [max(0, h - l) for l, h in zip(lo, hi)]
    if 0 in shape:
        return lo, np.zeros(shape, dtype=complex)
    axes = [np.arange(l, h, dtype=float) for l, h in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, req.n)
    ph = kernels.phases(grid, req.X, req.y)
    return lo, np.exp(2j * np.pi * ph).reshape(shape)


def _weighted_sum(points, weights, X, y) -> complex:
    if points.shape[0] == 0:
        return 0j
    return complex(np.sum(weights * np.exp(2j * np.pi * kernels.phases(points, X, y))))


def _grid(lo, hi):
    axes = [np.arange(l, h, dtype=float) for l, h in zip(lo, hi)]
    if any(a.size == 0 for a in axes):
        return np.zeros((0, len(lo)))
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def _gaussian_radius(n: int, scale: float, tail: float = GAUSS_TAIL):
    """Radius ``r`` and rigorous tail bound for a Gaussian lattice sum.

    ``scale`` bounds the lattice spacing in the Gaussian's metric from below
    (points with metric norm in ``[k, k+1)`` fit in a cube of side
    ``2(k+1)/scale + 1``).
    """
    def tail_from(r):
        total, k = 0.0, int(r)
        while True:
            term = (2.0 * (k + 1) / scale + 1.0) ** n * math.exp(-math.pi * k * k)
            total += term
            if term < 1e-30 * max(total, 1e-300) or k > int(r) + 200:
                return total
            k += 1

    r = 1
    while tail_from(r) >= tail:
        r += 1
    return float(r), tail_from(r)


def theta_schwartz(req: ThetaRequest) -> ThetaValue:
    """Theta sum for the Gaussian cutoff or for one dyadic piece."""
    if req.cutoff == "gaussian":
        r, tail = _gaussian_radius(req.n, 1.0 / req.M)
        lo = [math.floor(-req.M * r - xi) for xi in req.x]
        hi = [math.ceil(req.M * r - xi) + 1 for xi in req.x]
        pts = _grid(lo, hi)
        w = (pts + req.x) / req.M
        q = np.sum(w * w, axis=1)
        keep = q <= r * r
        pts, q = pts[keep], q[keep]
        return ThetaValue(_weighted_sum(pts, np.exp(-np.pi * q), req.X, req.y), tail, True)
    if req.cutoff == "dyadic":
        return ThetaValue(_dyadic_piece(req, req.index), 0.0, True)
    raise ValueError("theta_schwartz handles the gaussian and dyadic cutoffs")


def _dyadic_piece(req: ThetaRequest, idx: DyadicIndex) -> complex:
    lo, hi = [], []
    for (ulo, uhi), bi, xi in zip(idx.support(), req.b, req.x):
        lo.append(math.ceil(req.M * bi * ulo - xi))
        hi.append(math.floor(req.M * bi * uhi - xi) + 1)
    pts = _grid(lo, hi)
    if pts.shape[0] == 0:
        return 0j
    u = (pts + req.x) / (req.M * req.b)
    w = idx.weight(u)
    nz = w > 0
    return _weighted_sum(pts[nz], w[nz], req.X, req.y)


def dyadic_levels(req: ThetaRequest):
    """Per-axis depth at which the dyadic weights sum to one on every box point."""
    lo, hi = req.box_limits()
    J = []
    for l, h, bi, xi in zip(lo, hi, req.b, req.x):
        if h <= l:
            return None
        u = (np.arange(l, h, dtype=float) + xi) / (req.M * bi)
        J.append(levels_needed(float(np.min(np.minimum(u, 1.0 - u)))))
    return J


def theta_box_via_dyadic(req: ThetaRequest, budget: float = LATTICE_BUDGET) -> ThetaValue:
    """Box sum rebuilt as a sum of dyadic-piece theta sums.

    Every piece weight is a product of per-axis factors, so each piece is a
    contraction of one block of the term table with those factors.
    """
    _check_budget(req, budget)
    J = dyadic_levels(req)
    if J is None:
        return ThetaValue(0j)
    lo, terms = theta_terms(req, budget)
    cache = {}

    def axis_factor(i, j, mirrored):
        key = (i, j, mirrored)
        if key not in cache:
            s = 2.0 ** -j
            ulo, uhi = (1 - 0.75 * s, 1 - s / 8) if mirrored else (s / 8, 0.75 * s)
            scale = req.M * req.b[i]
            a = max(math.ceil(scale * ulo - req.x[i]), lo[i])
            b = min(math.floor(scale * uhi - req.x[i]) + 1, lo[i] + terms.shape[i])
            u = (np.arange(a, b, dtype=float) + req.x[i]) / scale
            arg = (1.0 - u) if mirrored else u
            cache[key] = (a - lo[i], b - lo[i], f1(arg * 2.0 ** j))
        return cache[key]

    total = 0j
    pieces = 0
    for idx in all_indices(J):
        block = terms
        factors = []
        for i in range(req.n):
            a, b, w = axis_factor(i, idx.j[i], i in idx.S)
            if b <= a:
                block = None
                break
            block = block[(slice(None),) * i + (slice(a, b),)]
            factors.append(w)
        pieces += 1
        if block is None:
            continue
        for w in reversed(factors):
            block = block @ w
        total += complex(block)
    return ThetaValue(total, 0.0, True, {"levels": J, "pieces": pieces})


# ------------------------------------------------------------ Jacobi theta

def _ellipsoid_points(x, U, v, r):
    """Integer m with ``(m + x) U diag(v) U^T (m + x)^T <= r^2``."""
    n = x.size
    out = []

    def rec(k, prefix, used):
        # coordinate k of w U depends on w_0..w_k; U[k, k] = 1
        shift = sum(prefix[i] * U[i, k] for i in range(k)) if k else 0.0
        rem = r * r - used
        if rem < 0:
            return
        half = math.sqrt(rem / v[k])
        c = -shift - x[k]
        lo, hi = math.ceil(c - half), math.floor(c + half)
        if k == n - 1:
            for m in range(lo, hi + 1):
                out.append(prefix_m + [m])
            return
        for m in range(lo, hi + 1):
            w = m + x[k]
            z = shift + w
            prefix.append(w)
            prefix_m.append(m)
            rec(k + 1, prefix, used + v[k] * z * z)
            prefix.pop()
            prefix_m.pop()

    prefix_m = []
    rec(0, [], 0.0)
    return np.array(out, dtype=float).reshape(-1, n)


def big_theta_gaussian(j: Jacobi) -> ThetaValue:
    """Jacobi theta function for the Gaussian, read in the Iwasawa chart.

    The compact factor only multiplies the value by a unit scalar, so the
    modulus is always correct and the phase only when Q is the identity.
    """
    c = iwasawa(j.g)
    x, y, t = j.h.x, j.h.y, j.h.t
    Y = c.Y
    lam = float(np.min(np.linalg.eigvalsh(Y)))
    r, tail = _gaussian_radius(j.n, math.sqrt(lam))
    pts = _ellipsoid_points(x, c.U, c.v, r)
    w = pts + x
    q = np.einsum("ki,ij,kj->k", w, Y, w)
    ph = 0.5 * np.einsum("ki,ij,kj->k", w, c.X, w) + pts @ y
    s = np.sum(np.exp(-np.pi * q + 2j * np.pi * ph))
    det_q = float(np.prod(c.v)) ** 0.25
    pre = det_q * np.exp(2j * np.pi * (-t + 0.5 * float(x @ y)))
    exact = bool(np.max(np.abs(c.Q - np.eye(j.n))) < PHASE_EXACT_TOL)
    return ThetaValue(pre * s, det_q * tail, exact, {"points": int(pts.shape[0])})


def automorphy_defect(j: Jacobi, word: JacobiLatticeElement) -> float:
    """Relative change of the theta modulus under the theta group."""
    base = abs(big_theta_gaussian(j).value)
    if base < 1e-12:
        raise ValueError(f"|theta| = {base:.3e} is too small for a relative defect")
    moved = abs(big_theta_gaussian(word * j).value)
    return abs(moved - base) / base


def gaussian_value_bound(j: Jacobi, A: float = None) -> float:
    """``(det Y)^{1/4} (1 + x Y x^T)^{-A}`` with ``A = n`` by default."""
    c = iwasawa(j.g)
    A = j.n if A is None else A
    x = j.h.x
    return float(np.prod(c.v)) ** 0.25 * (1.0 + float(x @ c.Y @ x)) ** (-A)

