"""Iwasawa and level-l coordinate charts on Sp(n, R).

``g = n(X) a(Y^{1/2}) k(Q)`` with ``n(X) = [[I, X], [0, I]]``,
``a(W) = diag(W, W^{-T})`` and ``k(Q) = [[Re Q, -Im Q], [Im Q, Re Q]]``.
``Y^{1/2} = U V^{1/2}`` is always the upper-triangular square root with
positive diagonal, where ``Y = U V U^T`` with U unipotent upper triangular.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError, NotPositiveDefiniteError
from .groups import blocks, dim, to_float

#: Smallest admissible pivot relative to the largest diagonal entry.
PIVOT_TOL = 1e-12


def uvu_factor(Y):
    """Factor a positive definite ``Y`` as ``U diag(v) U^T``.

    Returns ``(U, v)`` with ``U`` unipotent upper triangular and ``v`` the
    positive diagonal as a vector.  Elimination runs from the last index up.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise DimensionError(f"expected a square matrix, got {Y.shape}")
    n = Y.shape[0]
    U = np.eye(n)
    v = np.zeros(n)
    if n == 0:
        return U, v
    scale = np.max(np.abs(np.diag(Y)))
    if not scale > 0:
        raise NotPositiveDefiniteError("zero or negative diagonal")
    for k in range(n - 1, -1, -1):
        tail = slice(k + 1, n)
        v[k] = Y[k, k] - np.sum(U[k, tail] ** 2 * v[tail])
        if not v[k] > PIVOT_TOL * scale:
            raise NotPositiveDefiniteError(f"pivot {v[k]:.3e} at index {k}")
        for i in range(k):
            U[i, k] = (Y[i, k] - np.sum(U[i, tail] * U[k, tail] * v[tail])) / v[k]
    return U, v


def n_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    return np.block([[np.eye(n), X], [np.zeros((n, n)), np.eye(n)]])


def a_matrix(W) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    n = W.shape[0]
    return np.block([[W, np.zeros((n, n))], [np.zeros((n, n)), np.linalg.inv(W).T]])


def k_matrix(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=complex)
    return np.block([[Q.real, -Q.imag], [Q.imag, Q.real]])


@dataclass(frozen=True)
class IwasawaCoords:
    X: np.ndarray
    U: np.ndarray
    v: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        object.__setattr__(self, "X", 0.5 * (X + X.T))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if np.any(self.v <= 0):
            raise NotPositiveDefiniteError("V entries must be positive")

    @property
    def n(self) -> int:
        return self.v.size

    @property
    def V(self) -> np.ndarray:
        return np.diag(self.v)

    @property
    def Y(self) -> np.ndarray:
        Y = (self.U * self.v) @ self.U.T
        return 0.5 * (Y + Y.T)

    @property
    def Y_half(self) -> np.ndarray:
        return self.U * np.sqrt(self.v)

    def recompose(self) -> np.ndarray:
        return recompose(self)


def iwasawa(g) -> IwasawaCoords:
    """Iwasawa coordinates from the closed-form block expressions."""
    g = to_float(g)
    A, B, C, D = blocks(g)
    P = C @ C.T + D @ D.T
    Y = np.linalg.inv(P)
    Y = 0.5 * (Y + Y.T)
    X = (A @ C.T + B @ D.T) @ Y
    U, v = uvu_factor(Y)
    Yh = U * np.sqrt(v)
    Q = Yh.T @ (D + 1j * C)
    return IwasawaCoords(X, U, v, Q)


def recompose(c: IwasawaCoords) -> np.ndarray:
    return n_matrix(c.X) @ a_matrix(c.Y_half) @ k_matrix(c.Q)


def na_matrix(X, Y) -> np.ndarray:
    """``n(X) a(Y^{1/2})`` for symmetric X and positive definite Y."""
    U, v = uvu_factor(Y)
    return n_matrix(X) @ a_matrix(U * np.sqrt(v))


def v_coords(g) -> np.ndarray:
    """Diagonal ``(v_1, ..., v_n)`` of V in the Iwasawa chart."""
    return iwasawa(g).v


@dataclass(frozen=True)
class PartialCoords:
    """Level-l refinement of the Iwasawa chart.

    Blocks are split as (l, n-l).  ``R``, ``S`` are l x (n-l), ``T`` is
    l x l symmetric, ``U_l``/``v_l`` factor the leading l x l part of Y and
    ``(X_l, Y_l)`` are the Siegel coordinates of the Sp(n-l) factor.
    """

    l: int
    R: np.ndarray
    S: np.ndarray
    T: np.ndarray
    U_l: np.ndarray
    v_l: np.ndarray
    X_l: np.ndarray
    Y_l: np.ndarray
    Q: np.ndarray

    @property
    def n(self) -> int:
        return self.l + self.X_l.shape[0]

    @property
    def V_l(self) -> np.ndarray:
        return np.diag(self.v_l)

    def sub_symplectic(self) -> np.ndarray:
        """``g_l = n(X_l) a(Y_l^{1/2})`` in Sp(n-l, R)."""
        return na_matrix(self.X_l, self.Y_l)

    def unipotent_factor(self) -> np.ndarray:
        """The unipotent-radical factor built from ``R, S, T``."""
        l, n = self.l, self.n
        N = np.eye(2 * n)
        R, S, T = self.R, self.S, self.T
        N[:l, l:n] = R
        N[:l, n:n + l] = T - S @ R.T
        N[:l, n + l:] = S
        N[l:n, n:n + l] = S.T
        N[n + l:, n:n + l] = -R.T
        return N

    def levi_factor(self) -> np.ndarray:
        l, n = self.l, self.n
        M = np.zeros((2 * n, 2 * n))
        Wl = self.U_l * np.sqrt(self.v_l)
        M[:l, :l] = Wl
        M[n:n + l, n:n + l] = np.linalg.inv(Wl).T
        if l < n:
            Ul, vl = uvu_factor(self.Y_l)
            Yh = Ul * np.sqrt(vl)
            Yh_invT = np.linalg.inv(Yh).T
            M[l:n, l:n] = Yh
            M[l:n, n + l:] = self.X_l @ Yh_invT
            M[n + l:, n + l:] = Yh_invT
        return M

    def recompose(self) -> np.ndarray:
        return self.unipotent_factor() @ self.levi_factor() @ k_matrix(self.Q)


def partial(g, l: int) -> PartialCoords:
    """Level-l coordinates, read off the Iwasawa chart by block algebra."""
    n = dim(g)
    if not 1 <= l <= n:
        raise DimensionError(f"level l={l} outside 1..{n}")
    c = iwasawa(g)
    U, v, X = c.U, c.v, c.X
    U11, U12, U22 = U[:l, :l], U[:l, l:], U[l:, l:]
    # [[U11, U12], [0, U22]] = [[U11, R], [0, I]] diag(I, U22)
    R = np.linalg.solve(U22.T, U12.T).T if l < n else np.zeros((l, 0))
    Y_l = (U22 * v[l:]) @ U22.T
    X_l = X[l:, l:]
    S = X[:l, l:] - R @ X_l
    T = X[:l, :l] - R @ X_l @ R.T
    T = 0.5 * (T + T.T)
    return PartialCoords(
        l=l,
        R=R,
        S=S,
        T=T,
        U_l=U11.copy(),
        v_l=v[:l].copy(),
        X_l=0.5 * (X_l + X_l.T),
        Y_l=0.5 * (Y_l + Y_l.T),
        Q=c.Q,
    )


def random_unitary(n: int, rng) -> np.ndarray:
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_element(n: int, rng, spread: float = 1.0, compact: bool = True) -> np.ndarray:
    """``n(X) a(U V^{1/2}) k(Q)`` with Gaussian X, U, log v and Haar Q."""
    X = rng.normal(scale=spread, size=(n, n))
    U = np.triu(rng.normal(scale=spread, size=(n, n)), 1) + np.eye(n)
    v = np.exp(rng.normal(scale=spread, size=n))
    Q = random_unitary(n, rng) if compact else np.eye(n)
    return recompose(IwasawaCoords(0.5 * (X + X.T), U, v, Q))
