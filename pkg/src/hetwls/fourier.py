"""
Trigonometric basis on the equidistant design and the discrete transform.

The basis is

    phi_1(x) = 1,
    phi_j(x) = sqrt(2) cos(2 pi [j/2] x)   for even j,
    phi_j(x) = sqrt(2) sin(2 pi [j/2] x)   for odd j >= 3,

and for odd ``n`` it is exactly orthonormal under the empirical inner
product on the points ``x_l = l/n``, ``l = 1..n``. Frequency indices are
1-based in every public function; arrays store frequency ``j`` at
position ``j - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import UsageError

SQRT2 = math.sqrt(2.0)


def check_odd(n: int) -> int:
    """Validate a sample count and return it as ``int``."""
    n = int(n)
    if n < 3 or n % 2 == 0:
        raise UsageError(
            f"sample count must be odd and >= 3 (basis is orthonormal on the "
            f"design only for odd n), got n={n}"
        )
    return n


@dataclass(frozen=True)
class DesignGrid:
    """Equidistant design ``x_j = j/n`` for odd ``n``."""

    n: int

    def __post_init__(self):
        check_odd(self.n)

    @property
    def points(self) -> np.ndarray:
        return design_points(self.n)


@lru_cache(maxsize=64)
def _design_points(n: int) -> np.ndarray:
    x = np.arange(1, n + 1, dtype=float) / n
    x.setflags(write=False)
    return x


def design_points(n: int) -> np.ndarray:
    return _design_points(check_odd(n))


def basis_eval(j, x):
    """Evaluate ``phi_j`` at ``x``.

    Both arguments broadcast, so ``basis_eval(j[:, None], x[None, :])`` gives a
    full design matrix.
    """
    j = np.asarray(j)
    if np.any(j < 1):
        raise UsageError("frequency index must be >= 1")
    x = np.asarray(x, dtype=float)
    freq = 2.0 * np.pi * (j // 2) * x
    out = np.where(j % 2 == 0, SQRT2 * np.cos(freq), SQRT2 * np.sin(freq))
    out = np.where(j == 1, 1.0, out)
    if out.ndim == 0:
        return float(out)
    return out


@lru_cache(maxsize=32)
def _basis_matrix(n: int) -> np.ndarray:
    j = np.arange(1, n + 1)
    mat = np.ascontiguousarray(basis_eval(j[:, None], _design_points(n)[None, :]))
    mat.setflags(write=False)
    return mat


def basis_matrix(n: int) -> np.ndarray:
    """Read-only ``(n, n)`` array with ``[j-1, l-1] = phi_j(x_l)``."""
    return _basis_matrix(check_odd(n))


def empirical_inner(f, g) -> float:
    """``(f, g)_n = n^{-1} sum_l f_l g_l``."""
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape or f.ndim != 1:
        raise UsageError(f"vectors must be 1-d with equal length, got {f.shape} and {g.shape}")
    # np.sum on a contiguous 1-d array uses pairwise summation
    return float(np.sum(f * g) / f.size)


def empirical_norm_sq(f) -> float:
    f = np.asarray(f, dtype=float)
    return empirical_inner(f, f)


@dataclass(frozen=True, eq=False)
class FourierCoefficients:
    """Empirical Fourier coefficients ``theta_hat[j-1] = (y, phi_j)_n``."""

    n: int
    theta_hat: np.ndarray

    def __post_init__(self):
        arr = np.array(self.theta_hat, dtype=float)
        if arr.shape != (self.n,):
            raise UsageError(f"expected {self.n} coefficients, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "theta_hat", arr)

    def __getitem__(self, j: int) -> float:
        """Coefficient at 1-based frequency ``j``."""
        if not 1 <= j <= self.n:
            raise IndexError(f"frequency index {j} outside 1..{self.n}")
        return float(self.theta_hat[j - 1])

    def energy(self) -> float:
        return float(np.sum(self.theta_hat**2))


def forward_transform(y, grid: DesignGrid | None = None) -> FourierCoefficients:
    """Compute ``theta_hat_j = (y, phi_j)_n`` for ``j = 1..n``.

    Direct O(n^2) evaluation; each row is reduced with numpy's pairwise
    summation, which keeps the Parseval residual near machine precision for
    the sizes used here (n up to about 1000).
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise UsageError("observations must be a 1-d vector")
    n = check_odd(y.size)
    if grid is not None and grid.n != n:
        raise UsageError(f"grid has n={grid.n} but {n} observations were given")
    theta = np.sum(basis_matrix(n) * y[None, :], axis=1) / n
    return FourierCoefficients(n, theta)


def synthesize(weights, coeffs: FourierCoefficients, eval_points=None) -> np.ndarray:
    """Evaluate ``sum_j lambda(j) theta_hat_j phi_j(x)``.

    ``weights`` is a :class:`~hetwls.weights.WeightVector` or a plain array of
    length ``n``. ``eval_points`` defaults to the design grid.
    """
    lam = np.asarray(getattr(weights, "values", weights), dtype=float)
    if lam.shape != (coeffs.n,):
        raise UsageError(f"weight length {lam.shape} does not match n={coeffs.n}")
    w = lam * coeffs.theta_hat
    if eval_points is None:
        return np.sum(basis_matrix(coeffs.n) * w[:, None], axis=0)
    x = np.atleast_1d(np.asarray(eval_points, dtype=float))
    j = np.arange(1, coeffs.n + 1)
    return np.sum(basis_eval(j[:, None], x[None, :]) * w[:, None], axis=0)
