"""Smooth dyadic partition of unity for open intervals and boxes.

The ramp ``psi`` rises from 0 on ``x <= 1/4`` to 1 on ``x >= 3/4`` and
satisfies ``psi(x) + psi(1 - x) = 1``.  With ``f1(x) = psi(2x) - psi(x)``,
supported in ``[1/8, 3/4]``, the sum over ``j >= 0`` of ``f1(2^j x)``
telescopes to ``1 - psi(x)`` for ``x > 0``; adding the mirrored sum gives
the indicator of ``(0, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
import math

import numpy as np

from .groups import Heisenberg

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(64)


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > 0) & (t < 1)
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (ti * (1.0 - ti)))
    return out


def _bump_integral(u):
    """Integral of the bump over ``[0, u]`` for ``0 <= u <= 1/2``."""
    u = np.asarray(u, dtype=float)
    t = 0.5 * u[..., None] * (_NODES + 1.0)
    return 0.5 * u * np.sum(_WEIGHTS * _bump(t), axis=-1)


_HALF_MASS = float(_bump_integral(np.array(0.5)))


def sigma(u):
    """Normalized bump integral: 0 for ``u <= 0``, 1 for ``u >= 1``, smooth between."""
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    lo = np.clip(u, 0.0, 0.5)
    hi = np.clip(1.0 - u, 0.0, 0.5)
    val = np.where(
        u <= 0.5,
        0.5 * _bump_integral(lo) / _HALF_MASS,
        1.0 - 0.5 * _bump_integral(hi) / _HALF_MASS,
    )
    val = np.where(u <= 0, 0.0, np.where(u >= 1, 1.0, val))
    return float(val[0]) if scalar else val


def psi(x):
    return sigma((np.asarray(x, dtype=float) - 0.25) / 0.5)


def f1(x):
    """Dyadic piece ``psi(2x) - psi(x)``; nonnegative with support ``[1/8, 3/4]``."""
    x = np.asarray(x, dtype=float)
    val = psi(2.0 * x) - psi(x)
    return np.maximum(val, 0.0) if np.ndim(val) else max(float(val), 0.0)


def fn(x):
    """Product of ``f1`` over the last axis of ``x``."""
    x = np.asarray(x, dtype=float)
    return np.prod(f1(x), axis=-1)


def unit_interval_weight(u, J_max: int):
    """``sum_{j <= J_max} f1(2^j u) + f1(2^j (1 - u))``."""
    u = np.asarray(u, dtype=float)
    scale = 2.0 ** np.arange(J_max + 1)
    grid = u[..., None] * scale
    mirror = (1.0 - u)[..., None] * scale
    return np.sum(f1(grid) + f1(mirror), axis=-1)


def chi_box_decomp(x, b, J_max: int):
    """Dyadic reconstruction of the indicator of the open box ``prod (0, b_i)``.

    The sum over index vectors and sign patterns factorizes across axes.
    """
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.prod(unit_interval_weight(x / b, J_max), axis=-1)


@dataclass(frozen=True)
class DyadicIndex:
    """Scale exponents ``j`` and the set ``S`` of mirrored axes (0-based)."""

    j: tuple
    S: frozenset = frozenset()

    def __post_init__(self):
        j = tuple(int(v) for v in self.j)
        if any(v < 0 for v in j):
            raise ValueError("scale exponents must be nonnegative")
        S = frozenset(int(i) for i in self.S)
        if any(not 0 <= i < len(j) for i in S):
            raise ValueError(f"S={set(S)} has axes outside 0..{len(j) - 1}")
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "S", S)

    @property
    def n(self) -> int:
        return len(self.j)

    @property
    def signs(self) -> np.ndarray:
        return np.array([-1.0 if i in self.S else 1.0 for i in range(self.n)])

    @property
    def scales(self) -> np.ndarray:
        return 2.0 ** np.array(self.j, dtype=float)

    def shift(self) -> np.ndarray:
        """``x_S``: entry -1 on the mirrored axes."""
        return np.array([-1.0 if i in self.S else 0.0 for i in range(self.n)])

    def weight(self, u):
        """``f_n((u + x_S) A_j E_S)`` for unit-box coordinates ``u``."""
        return fn((np.asarray(u, dtype=float) + self.shift()) * self.scales * self.signs)

    def support(self):
        """Per-axis closed interval of ``u`` outside which the weight vanishes."""
        out = []
        for i in range(self.n):
            s = 2.0 ** -self.j[i]
            lo, hi = s / 8, 0.75 * s
            out.append((1 - hi, 1 - lo) if i in self.S else (lo, hi))
        return out


def flow_elements(idx: DyadicIndex):
    """``(h_S, g_{j,S})`` with ``g = diag(A_j E_S, A_j^-1 E_S)``."""
    d = idx.scales * idx.signs
    g = np.diag(np.concatenate([d, idx.signs / idx.scales]))
    return Heisenberg(idx.shift(), np.zeros(idx.n), 0.0), g


def levels_needed(delta: float) -> int:
    """Smallest ``J`` for which the partition is exact at distance ``delta``."""
    if delta >= 0.375:
        return 0
    return max(0, math.ceil(math.log2(0.75 / delta)) - 1)


def all_indices(J):
    """Every DyadicIndex with ``j_i <= J[i]`` and every mirror set."""
    n = len(J)
    for j in product(*[range(int(v) + 1) for v in J]):
        for mask in range(1 << n):
            yield DyadicIndex(j, frozenset(i for i in range(n) if mask >> i & 1))
