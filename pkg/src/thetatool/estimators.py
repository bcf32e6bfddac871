"""scikit-learn compatible wrappers for height features and tail fits.

Rows fed to :class:`HeightTransformer` are flattened Siegel coordinates
``[x (n), y (n), X (n*n), Y (n*n)]`` of a Jacobi element with trivial
compact part.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .decompose import iwasawa, na_matrix
from .groups import Heisenberg, Jacobi
from .haar import tail_fit
from .height import HeightParams, height


def _row_dim(width: int) -> int:
    n = 1
    while 2 * n + 2 * n * n < width:
        n += 1
    if 2 * n + 2 * n * n != width:
        raise ValueError(f"row width {width} is not 2n + 2n^2 for any n")
    return n


def rows_from_jacobi(elements) -> np.ndarray:
    out = []
    for j in elements:
        c = iwasawa(j.g)
        out.append(np.concatenate([j.h.x, j.h.y, c.X.ravel(), c.Y.ravel()]))
    return np.array(out)


class HeightTransformer(TransformerMixin, BaseEstimator):
    """Maps coordinate rows to the cusp height (optionally its logarithm)."""

    def __init__(self, A=None, log=False):
        self.A = A
        self.log = log

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_ = _row_dim(X.shape[1])
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        n = self.n_
        params = HeightParams(self.A)
        D = np.empty(X.shape[0])
        for k, row in enumerate(X):
            x, yv = row[:n], row[n:2 * n]
            Xs = row[2 * n:2 * n + n * n].reshape(n, n)
            Ys = row[2 * n + n * n:].reshape(n, n)
            D[k] = height(Jacobi(Heisenberg(x, yv, 0.0), na_matrix(Xs, Ys)), params)
        return (np.log(D) if self.log else D)[:, None]


class TailExponentEstimator(BaseEstimator):
    """Log-log slope of the empirical survival function on a fixed grid."""

    def __init__(self, R_grid=None, min_count=50):
        self.R_grid = R_grid
        self.min_count = min_count

    def fit(self, X, y=None):
        D = check_array(X, ensure_2d=False).ravel()
        grid = np.geomspace(np.quantile(D, 0.9), np.quantile(D, 0.999), 10) if self.R_grid is None else self.R_grid
        f = tail_fit(D, grid, self.min_count)
        self.exponent_ = f.exponent
        self.stderr_ = f.stderr
        self.R_used_ = f.R
        return self

    def score(self, X, y=None):
        """Negative distance of the fitted slope from ``y`` (default -3/2)."""
        check_is_fitted(self, "exponent_")
        target = -1.5 if y is None else float(y)
        return -abs(self.exponent_ - target)
