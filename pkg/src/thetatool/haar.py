"""Haar sampling of the reduced domain and tail-exponent fitting.

For n = 1 the proposal draws ``y`` with density proportional to ``y^-2`` on
``[sqrt(3)/2, inf)`` and rejects points inside the unit circle.  For n = 2 the
proposal lives in the level-1 chart ``(r, s, t, x22, v1, v2)``: the Haar
density is ``v1^-3 v2^-2`` times Lebesgue measure, the box coordinates are
uniform, and ``v1 >= 3/4 v2 >= 3 sqrt(3) / 8`` bounds the domain from outside.
Accepted points pass the full membership test.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .decompose import na_matrix
from .exceptions import BudgetExceededError
from .groups import Heisenberg, Jacobi
from .height import HeightParams, height_formula
from .reduction import MEMBER_SLACK, v1_min_search

SQRT3_2 = math.sqrt(3.0) / 2.0


@dataclass(frozen=True)
class HaarSample:
    j: Jacobi


@dataclass(frozen=True)
class HaarBatch:
    """Vectorized samples: Siegel coordinates plus Heisenberg parts."""

    X: np.ndarray  # (N, n, n)
    Y: np.ndarray  # (N, n, n)
    hx: np.ndarray  # (N, n)
    hy: np.ndarray  # (N, n)
    acceptance_rate: float

    def __len__(self):
        return self.X.shape[0]

    def jacobi(self, k: int) -> Jacobi:
        return Jacobi(Heisenberg(self.hx[k], self.hy[k], 0.0), na_matrix(self.X[k], self.Y[k]))

    def heights(self, params: HeightParams = HeightParams()) -> np.ndarray:
        n = self.X.shape[1]
        return height_formula(np.linalg.det(self.Y), self.hx, self.Y, params.exponent(n))


def _heisenberg(rng, N, n):
    return rng.uniform(-0.5, 0.5, (N, n)), rng.uniform(-0.5, 0.5, (N, n))


def _sample_n1(N, rng, max_rounds):
    xs, ys, drawn = [], [], 0
    have = 0
    for _ in range(max_rounds):
        if have >= N:
            break
        m = int(1.3 * (N - have)) + 16
        x = rng.uniform(-0.5, 0.5, m)
        y = SQRT3_2 / (1.0 - rng.random(m))
        ok = x * x + y * y >= 1.0
        drawn += m
        xs.append(x[ok])
        ys.append(y[ok])
        have += int(ok.sum())
    if have < N:
        raise BudgetExceededError(f"n=1 sampler produced {have} of {N} samples")
    x = np.concatenate(xs)[:N]
    y = np.concatenate(ys)[:N]
    return x[:, None, None], y[:, None, None], have / drawn


def _propose_n2(rng):
    r = rng.uniform(0.0, 0.5)
    s, t, x22 = rng.uniform(-0.5, 0.5, 3)
    v2 = SQRT3_2 * (1.0 - rng.random()) ** (-1.0 / 3.0)  # density v2^-4
    v1 = 0.75 * v2 * (1.0 - rng.random()) ** (-0.5)  # density v1^-3 on [3/4 v2, inf)
    X = np.array([[t + r * r * x22, s + r * x22], [s + r * x22, x22]])
    Y = np.array([[v1 + r * r * v2, r * v2], [r * v2, v2]])
    return X, Y, v1, x22 * x22 + v2 * v2 >= 1.0


def _sample_n2(N, rng, max_tries):
    Xs, Ys, tries = [], [], 0
    while len(Xs) < N:
        if tries >= max_tries:
            raise BudgetExceededError(
                f"n=2 sampler accepted {len(Xs)} of {tries} proposals before the budget"
            )
        X, Y, v1, lower_ok = _propose_n2(rng)
        tries += 1
        # box coordinates are in range by construction; what remains is the
        # rank-1 factor and maximality of v1
        if lower_ok and 1.0 / v1 <= v1_min_search(X, Y)[1] * (1 + MEMBER_SLACK):
            Xs.append(X)
            Ys.append(Y)
    return np.array(Xs), np.array(Ys), N / tries


def haar_batch(n: int, N: int, rng, max_tries: int = None) -> HaarBatch:
    """``N`` Haar-distributed reduced points of the Jacobi quotient."""
    if n == 1:
        X, Y, rate = _sample_n1(N, rng, max_rounds=1000)
    elif n == 2:
        X, Y, rate = _sample_n2(N, rng, max_tries or 20 * N + 100)
    else:
        raise ValueError("Haar sampling is available for n in {1, 2}")
    hx, hy = _heisenberg(rng, N, n)
    return HaarBatch(X, Y, hx, hy, rate)


def haar_sample(n: int, rng) -> HaarSample:
    return HaarSample(haar_batch(n, 1, rng).jacobi(0))


@dataclass(frozen=True)
class TailFit:
    exponent: float
    stderr: float
    R: np.ndarray
    survival: np.ndarray
    counts: np.ndarray


def tail_fit(samples, R_grid, min_count: int = 50) -> TailFit:
    """Least-squares slope of ``log P(D >= R)`` against ``log R``.

    Grid points with fewer than ``min_count`` exceedances are dropped.
    """
    D = np.sort(np.asarray(samples, dtype=float))
    R = np.asarray(R_grid, dtype=float)
    counts = D.size - np.searchsorted(D, R, side="left")
    keep = counts >= min_count
    if keep.sum() < 4:
        raise ValueError(
            f"insufficient tail mass: only {int(keep.sum())} grid points have >= {min_count} exceedances"
        )
    lr, ls = np.log(R[keep]), np.log(counts[keep] / D.size)
    coef, cov = np.polyfit(lr, ls, 1, cov=True)
    return TailFit(float(coef[0]), float(math.sqrt(cov[0, 0])), R[keep], counts[keep] / D.size, counts[keep])
