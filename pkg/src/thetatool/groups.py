"""Heisenberg, symplectic and Jacobi group arithmetic.

Symplectic matrices are plain ``numpy`` arrays of shape ``(2n, 2n)``.  Float
arrays are real carriers; arrays of ``dtype=object`` holding Python ints are
exact carriers of Sp(n, Z) and never overflow.

Vectors are row vectors throughout, so the symplectic group acts on the
Heisenberg group from the right: ``h^g = (xA + yC, xB + yD, t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .exceptions import DimensionError, NotSymplecticError

#: Tolerance on ``max|g J g^T - J|`` for floating carriers.
SYMPLECTIC_TOL = 1e-9


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def is_exact(g) -> bool:
    """True for integer (object or integer dtype) carriers."""
    return np.asarray(g).dtype == object or np.issubdtype(np.asarray(g).dtype, np.integer)


def as_exact(g) -> np.ndarray:
    """Copy ``g`` into an object array of Python ints (rejects non-integers)."""
    arr = np.asarray(g)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        iv = int(round(float(v))) if not isinstance(v, (int, np.integer)) else int(v)
        if iv != v:
            raise ValueError(f"entry {v!r} at {idx} is not an integer")
        out[idx] = iv
    return out


def dim(g) -> int:
    """Rank n of a 2n x 2n matrix."""
    shape = np.shape(g)
    if len(shape) != 2 or shape[0] != shape[1] or shape[0] % 2:
        raise DimensionError(f"expected a 2n x 2n matrix, got shape {shape}")
    return shape[0] // 2


def blocks(g):
    """Return the n x n blocks ``(A, B, C, D)`` of ``g``."""
    n = dim(g)
    g = np.asarray(g)
    return g[:n, :n], g[:n, n:], g[n:, :n], g[n:, n:]


def from_blocks(A, B, C, D) -> np.ndarray:
    return np.block([[A, B], [C, D]])


def J(n: int, exact: bool = False) -> np.ndarray:
    """The standard symplectic form ``[[0, -I], [I, 0]]``."""
    out = np.zeros((2 * n, 2 * n), dtype=object if exact else float)
    for i in range(n):
        out[i, n + i] = -1
        out[n + i, i] = 1
    return out


def identity(n: int, exact: bool = False) -> np.ndarray:
    if exact:
        out = np.empty((2 * n, 2 * n), dtype=object)
        out[...] = 0
        for i in range(2 * n):
            out[i, i] = 1
        return out
    return np.eye(2 * n)


def sympl_check(g) -> float:
    """Max-entry norm of ``g J g^T - J``; exactly 0 for valid integer input."""
    n = dim(g)
    exact = is_exact(g)
    g = np.asarray(g, dtype=object) if exact else np.asarray(g, dtype=float)
    Jn = J(n, exact=exact)
    defect = g.dot(Jn).dot(g.T) - Jn
    if exact:
        return float(max(abs(v) for v in defect.flat))
    return float(np.max(np.abs(defect)))


def sympl_inverse(g, tol: float = SYMPLECTIC_TOL) -> np.ndarray:
    """Inverse via ``g^-1 = J g^T J^-1``; exact for integer carriers."""
    n = dim(g)
    defect = sympl_check(g)
    if defect > (0 if is_exact(g) else tol):
        raise NotSymplecticError(f"symplectic defect {defect:.3e} exceeds tolerance")
    A, B, C, D = blocks(g)
    # J g^T J^{-1} = [[D^T, -B^T], [-C^T, A^T]]
    return from_blocks(D.T, -B.T, -C.T, A.T)


def sympl_mul(*mats) -> np.ndarray:
    """Product of symplectic matrices; stays exact if every factor is exact."""
    exact = all(is_exact(m) for m in mats)
    out = np.asarray(mats[0], dtype=object if exact else float)
    for m in mats[1:]:
        m = np.asarray(m, dtype=object if exact else float)
        if m.shape != out.shape:
            raise DimensionError(f"shape mismatch {out.shape} vs {m.shape}")
        out = out.dot(m)
    return out


def to_float(g) -> np.ndarray:
    return np.asarray(g, dtype=float) if not is_exact(g) else np.array(
        [[float(v) for v in row] for row in np.asarray(g)], dtype=float
    )


@dataclass(frozen=True)
class Heisenberg:
    """Element ``(x, y, t)`` of the (2n+1)-dimensional Heisenberg group."""

    x: np.ndarray
    y: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        x = _frozen(np.atleast_1d(self.x))
        y = _frozen(np.atleast_1d(self.y))
        if x.ndim != 1 or x.shape != y.shape or x.size < 1:
            raise DimensionError(f"x and y must be equal-length vectors, got {x.shape}, {y.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n(self) -> int:
        return self.x.size

    @classmethod
    def identity(cls, n: int) -> "Heisenberg":
        return cls(np.zeros(n), np.zeros(n), 0.0)

    def __mul__(self, other: "Heisenberg") -> "Heisenberg":
        return heis_mul(self, other)

    def inverse(self) -> "Heisenberg":
        return Heisenberg(-self.x, -self.y, -self.t)

    def act(self, g) -> "Heisenberg":
        return heis_action(self, g)

    def allclose(self, other: "Heisenberg", atol: float = 1e-10) -> bool:
        return (
            np.allclose(self.x, other.x, atol=atol, rtol=0)
            and np.allclose(self.y, other.y, atol=atol, rtol=0)
            and abs(self.t - other.t) <= atol
        )


def heis_mul(h1: Heisenberg, h2: Heisenberg) -> Heisenberg:
    if h1.n != h2.n:
        raise DimensionError(f"Heisenberg dimensions differ: {h1.n} vs {h2.n}")
    t = h1.t + h2.t + 0.5 * (h1.y @ h2.x - h1.x @ h2.y)
    return Heisenberg(h1.x + h2.x, h1.y + h2.y, t)


def heis_action(h: Heisenberg, g) -> Heisenberg:
    """Right action ``h^g = (xA + yC, xB + yD, t)``."""
    if dim(g) != h.n:
        raise DimensionError(f"g has rank {dim(g)}, h has dimension {h.n}")
    A, B, C, D = (to_float(b) for b in blocks(g))
    return Heisenberg(h.x @ A + h.y @ C, h.x @ B + h.y @ D, h.t)


@dataclass(frozen=True)
class Jacobi:
    """Element ``(h, g)`` of the Jacobi group H x| Sp(n, R)."""

    h: Heisenberg
    g: np.ndarray

    def __post_init__(self):
        g = _frozen(to_float(self.g))
        if dim(g) != self.h.n:
            raise DimensionError(f"g has rank {dim(g)}, h has dimension {self.h.n}")
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.h.n

    @classmethod
    def identity(cls, n: int) -> "Jacobi":
        return cls(Heisenberg.identity(n), np.eye(2 * n))

    def __mul__(self, other: "Jacobi") -> "Jacobi":
        return jacobi_mul(self, other)

    def inverse(self) -> "Jacobi":
        # (h, g)^-1 = ((h^-1)^g, g^-1)
        return Jacobi(heis_action(self.h.inverse(), self.g), sympl_inverse(self.g))


def jacobi_mul(j1: Jacobi, j2: Jacobi) -> Jacobi:
    """``(h1, g1)(h2, g2) = (h1 h2^{g1^-1}, g1 g2)``."""
    if j1.n != j2.n:
        raise DimensionError(f"Jacobi dimensions differ: {j1.n} vs {j2.n}")
    g1_inv = sympl_inverse(j1.g)
    return Jacobi(heis_mul(j1.h, heis_action(j2.h, g1_inv)), j1.g @ j2.g)


def h_gamma(gamma) -> Heisenberg:
    """Half-integer characteristic of an integral symplectic matrix.

    ``r_i`` is 1/2 when ``(C D^T)_ii`` is odd and ``s_i`` is 1/2 when
    ``(A B^T)_ii`` is odd; the t part is zero.
    """
    if not is_exact(gamma):
        gamma = as_exact(gamma)
    A, B, C, D = blocks(np.asarray(gamma, dtype=object))
    cd = np.diag(C.dot(D.T))
    ab = np.diag(A.dot(B.T))
    r = np.array([0.5 if int(v) % 2 else 0.0 for v in cd])
    s = np.array([0.5 if int(v) % 2 else 0.0 for v in ab])
    return Heisenberg(r, s, 0.0)


@dataclass(frozen=True)
class JacobiLatticeElement:
    """Element ``((m, n, t) h_gamma, gamma)`` of the theta group."""

    m: tuple
    n_vec: tuple
    t: float
    gamma: np.ndarray

    def __post_init__(self):
        gamma = as_exact(self.gamma)
        gamma.setflags(write=False)
        if sympl_check(gamma) != 0:
            raise NotSymplecticError("gamma is not in Sp(n, Z)")
        n = dim(gamma)
        m = tuple(int(v) for v in np.atleast_1d(self.m))
        nv = tuple(int(v) for v in np.atleast_1d(self.n_vec))
        if len(m) != n or len(nv) != n:
            raise DimensionError("m and n must have length n")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "n_vec", nv)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def identity(cls, n: int) -> "JacobiLatticeElement":
        return cls((0,) * n, (0,) * n, 0.0, identity(n, exact=True))

    @property
    def h_gamma(self) -> Heisenberg:
        return h_gamma(self.gamma)

    @property
    def heisenberg(self) -> Heisenberg:
        u = Heisenberg(np.array(self.m, float), np.array(self.n_vec, float), self.t)
        return u * self.h_gamma

    def as_jacobi(self) -> Jacobi:
        return Jacobi(self.heisenberg, to_float(self.gamma))

    def __mul__(self, other: Jacobi) -> Jacobi:
        """Left action on a Jacobi group element."""
        return self.as_jacobi() * other



def sp_generators(n: int) -> list:
    """A generating set of Sp(n, Z) as exact matrices (with inverses).

    Translations ``n(E_ii)``, ``n(E_ij + E_ji)``, the embedded inversions
    ``J_i`` and the Levi elements ``diag(A, A^-T)`` for elementary ``A``.
    """
    gens = []

    def unit_translation(S):
        g = identity(n, exact=True)
        g[:n, n:] = S
        return g

    for i in range(n):
        for j in range(i, n):
            S = np.zeros((n, n), dtype=object)
            S[i, j] = S[j, i] = 1
            gens.append(unit_translation(S))
            gens.append(unit_translation(-S))
        Ji = identity(n, exact=True)
        Ji[i, i] = Ji[n + i, n + i] = 0
        Ji[i, n + i] = -1
        Ji[n + i, i] = 1
        gens.append(Ji)
        gens.append(sympl_inverse(Ji))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            A = identity(n, exact=True)[:n, :n].copy()
            A[i, j] = 1
            Ainv_T = identity(n, exact=True)[:n, :n].copy()
            Ainv_T[j, i] = -1
            zero = np.zeros((n, n), dtype=object)
            g = from_blocks(A, zero, zero, Ainv_T)
            gens.append(g)
            gens.append(sympl_inverse(g))
    return gens


def random_word(n: int, length: int, rng) -> np.ndarray:
    """Product of ``length`` generators drawn uniformly with ``rng``."""
    gens = sp_generators(n)
    out = identity(n, exact=True)
    for _ in range(length):
        out = out.dot(gens[int(rng.integers(len(gens)))])
    return out
