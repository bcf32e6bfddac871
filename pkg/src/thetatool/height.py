"""Cusp height on the theta-group quotient and its flowed variants."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
import math

import numpy as np

from .cutoff import DyadicIndex, flow_elements
from .decompose import iwasawa
from .groups import Heisenberg, Jacobi
from .reduction import MEMBER_SLACK, jacobi_reduce


@dataclass(frozen=True)
class HeightParams:
    """Damping exponent ``A``; ``None`` means ``A = n``."""

    A: float = None

    def __post_init__(self):
        if self.A is not None and not self.A > 0:
            raise ValueError(f"A must be positive, got {self.A}")

    def exponent(self, n: int) -> float:
        return float(n if self.A is None else self.A)


@dataclass(frozen=True)
class PsiSpec:
    """Growth profile ``psi(t) = (1 + t)^p`` with ``p = 1/(2n+4) + eps``."""

    n: int
    eps: float = 0.01

    def __post_init__(self):
        if self.n < 1 or not self.eps > 0:
            raise ValueError("need n >= 1 and eps > 0")

    @property
    def p(self) -> float:
        return 1.0 / (2 * self.n + 4) + self.eps

    @property
    def C_psi(self) -> float:
        """``int_0^inf psi^-(2n+4)``, finite because ``p (2n+4) > 1``."""
        return 1.0 / (self.p * (2 * self.n + 4) - 1.0)

    def __call__(self, t):
        return (1.0 + np.asarray(t, dtype=float)) ** self.p


def height_formula(det_y, x, Y, A):
    """``det Y (1 + x Y x^T)^-A``; broadcasts over leading axes."""
    x = np.asarray(x, dtype=float)
    q = np.einsum("...i,...ij,...j->...", x, np.asarray(Y, dtype=float), x)
    return np.asarray(det_y, dtype=float) * (1.0 + q) ** (-A)


def height_reduced(j: Jacobi, params: HeightParams = HeightParams(), slack: float = MEMBER_SLACK) -> float:
    """Height of a representative that already lies in the reduced domain.

    Coordinates sitting on the face ``x_i = 1/2`` are also tried at ``-1/2``
    and the largest value is returned.
    """
    c = iwasawa(j.g)
    Y = c.Y
    det_y = float(np.prod(c.v))
    A = params.exponent(j.n)
    x = np.asarray(j.h.x, dtype=float)
    choices = [(xi, xi - 1.0) if abs(xi - 0.5) <= slack else (xi,) for xi in x]
    return max(float(height_formula(det_y, np.array(alt), Y, A)) for alt in product(*choices))


def height(j: Jacobi, params: HeightParams = HeightParams()) -> float:
    return height_reduced(jacobi_reduce(j).reduced, params)


def geodesic(n: int, s: float) -> np.ndarray:
    return np.diag(np.concatenate([np.full(n, math.exp(-s)), np.full(n, math.exp(s))]))


def flowed_point(j: Jacobi, s: float, idx: DyadicIndex) -> Jacobi:
    """``j (1, diag(e^-s I, e^s I)) (h_S, g_{j,S})``."""
    if s < 0:
        raise ValueError("flow time must be nonnegative")
    h_S, g_S = flow_elements(idx)
    return j * Jacobi(Heisenberg.identity(j.n), geodesic(j.n, s)) * Jacobi(h_S, g_S)


def height_flowed(j: Jacobi, s: float, idx: DyadicIndex, params: HeightParams = HeightParams()) -> float:
    return height(flowed_point(j, s, idx), params)


def s_grid(jvec, s_max: float, K: int = 8) -> np.ndarray:
    """Grid on ``[1, s_max]`` with spacing ``1 / (K 2^{|j|})``."""
    step = 1.0 / (K * 2 ** int(sum(jvec)))
    count = int(math.floor((s_max - 1.0) / step + 1e-9)) + 1
    return 1.0 + step * np.arange(count)


def gscript_threshold(j: Jacobi, psi: PsiSpec, jvec, grid, params: HeightParams = HeightParams()) -> float:
    """Smallest C for which ``j`` passes the flowed-height test on ``grid``.

    This is the max over mirror sets S and grid times of ``D^{1/4} / psi(s)``.
    """
    n = j.n
    worst = 0.0
    for mask in range(1 << n):
        idx = DyadicIndex(jvec, frozenset(i for i in range(n) if mask >> i & 1))
        for s in grid:
            worst = max(worst, height_flowed(j, float(s), idx, params) ** 0.25 / float(psi(s)))
    return worst


def g_script_member(j: Jacobi, psi: PsiSpec, C: float, jvec, grid, params: HeightParams = HeightParams()) -> bool:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or grid[0] < 1 or np.any(np.diff(grid) <= 0):
        raise ValueError("s grid must be ascending and start at s >= 1")
    return gscript_threshold(j, psi, jvec, grid, params) <= C
