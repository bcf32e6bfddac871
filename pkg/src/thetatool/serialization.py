"""JSON encoding of matrices, group elements and results.

A matrix is ``{"n": n, "entries": [...]}`` with row-major entries.  Exact
integer matrices use decimal strings so arbitrarily large entries survive a
round trip; real matrices use doubles.  ``n`` is the rank for a 2n x 2n
symplectic matrix and the side length for anything else square.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DimensionError
from .groups import Heisenberg, Jacobi, is_exact


def encode_matrix(a, symplectic: bool = None) -> dict:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got {a.shape}")
    size = a.shape[0]
    if symplectic is None:
        symplectic = size % 2 == 0
    n = size // 2 if symplectic else size
    if is_exact(a):
        entries = [str(int(v)) for v in a.ravel()]
    else:
        entries = [float(v) for v in a.ravel()]
    return {"n": n, "entries": entries}


def decode_matrix(obj) -> np.ndarray:
    """Inverse of :func:`encode_matrix`; the entry count fixes the shape."""
    n = int(obj["n"])
    entries = list(obj["entries"])
    if len(entries) == (2 * n) ** 2:
        size = 2 * n
    elif len(entries) == n * n:
        size = n
    else:
        raise DimensionError(f"{len(entries)} entries do not fit n={n}")
    if entries and all(isinstance(v, str) for v in entries):
        out = np.empty(len(entries), dtype=object)
        out[:] = [int(v) for v in entries]
        return out.reshape(size, size)
    return np.array([float(v) for v in entries], dtype=float).reshape(size, size)


def encode_vector(v) -> list:
    return [float(x) for x in np.asarray(v, dtype=float).ravel()]


def encode_heisenberg(h: Heisenberg) -> dict:
    return {"x": encode_vector(h.x), "y": encode_vector(h.y), "t": float(h.t)}


def decode_heisenberg(obj) -> Heisenberg:
    return Heisenberg(np.array(obj["x"], float), np.array(obj["y"], float), float(obj.get("t", 0.0)))


def encode_jacobi(j: Jacobi) -> dict:
    return {"n": j.n, "h": encode_heisenberg(j.h), "g": encode_matrix(j.g, symplectic=True)}


def decode_jacobi(obj) -> Jacobi:
    return Jacobi(decode_heisenberg(obj["h"]), decode_matrix(obj["g"]))


def encode_complex(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def clean(obj):
    """Recursively turn numpy scalars and arrays into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return encode_complex(obj)
    return obj
