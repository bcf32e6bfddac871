"""Theta sums, Jacobi-group reduction and cusp-height experiments."""

from .exceptions import (
    BudgetExceededError,
    ConfigError,
    DimensionError,
    HypothesisNotMetError,
    NotPositiveDefiniteError,
    NotPrimitiveError,
    NotSymplecticError,
    ThetaToolError,
)
from .groups import Heisenberg, Jacobi, JacobiLatticeElement, sympl_check
from .decompose import iwasawa, partial, recompose, uvu_factor
from .reduction import dn_member, dn_reduce, grenier_member, grenier_reduce, jacobi_reduce
from .theta import ThetaRequest, big_theta_gaussian, theta_box, theta_box_via_dyadic, theta_schwartz
from .height import HeightParams, PsiSpec, height
from .haar import haar_batch, tail_fit

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError", "ConfigError", "DimensionError", "HypothesisNotMetError",
    "NotPositiveDefiniteError", "NotPrimitiveError", "NotSymplecticError", "ThetaToolError",
    "Heisenberg", "Jacobi", "JacobiLatticeElement", "sympl_check",
    "iwasawa", "partial", "recompose", "uvu_factor",
    "dn_member", "dn_reduce", "grenier_member", "grenier_reduce", "jacobi_reduce",
    "ThetaRequest", "big_theta_gaussian", "theta_box", "theta_box_via_dyadic", "theta_schwartz",
    "HeightParams", "PsiSpec", "height", "haar_batch", "tail_fit",
]
