"""
Penalized selection over a weight family and the resulting adaptive estimate.

The cost of a weight vector ``lambda`` is

    J(lambda) = sum_j lambda_j^2 th_j^2 - 2 sum_j lambda_j (th_j^2 - v/n) + rho |lambda|^2 v / n

where ``th`` are the empirical Fourier coefficients and ``v`` estimates the
mean noise variance from the coefficients above a cutoff ``d_n``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
import hashlib
import json
import math
from typing import Optional, Union

import numpy as np

from .errors import UsageError
from .fourier import FourierCoefficients, check_odd, forward_transform, synthesize
from .weights import SieveParams, WeightGrid, WeightVector, build_grid


@dataclass(frozen=True)
class VarianceEstimate:
    value: float
    d_n: int

    def __post_init__(self):
        if not self.value >= 0:
            raise UsageError(f"variance estimate must be nonnegative, got {self.value}")


@dataclass(frozen=True, eq=False)
class SelectionResult:
    lambda_hat: WeightVector
    index: int
    cost_value: float
    variance: VarianceEstimate
    fitted_grid: np.ndarray
    rho: float


def default_cutoff(n: int) -> int:
    """``floor(n^(1/3))`` clamped to ``[1, n-1]``."""
    if n < 3:
        raise UsageError(f"n must be >= 3, got {n}")
    d = int(math.floor(round(n ** (1.0 / 3.0), 12)))
    return min(max(d, 1), n - 1)


def default_rho(n: int) -> float:
    return 1.0 / (3.0 + math.log(n) ** 2)


def _check_rho(rho: float) -> float:
    rho = float(rho)
    if not 0.0 < rho < 1.0 / 3.0:
        raise UsageError(f"rho must lie in (0, 1/3), got {rho}")
    return rho


def estimate_variance(coeffs: FourierCoefficients, d_n: int) -> VarianceEstimate:
    """Sum of squared coefficients at frequencies ``d_n + 1 .. n``."""
    if not 1 <= d_n <= coeffs.n - 1:
        raise UsageError(f"cutoff d_n must lie in [1, {coeffs.n - 1}], got {d_n}")
    return VarianceEstimate(float(np.sum(coeffs.theta_hat[d_n:] ** 2)), int(d_n))


def _values(lam) -> np.ndarray:
    return np.asarray(getattr(lam, "values", lam), dtype=float)


def penalty(lam, variance: VarianceEstimate, n: int) -> float:
    """``|lambda|^2 * variance / n``."""
    v = _values(lam)
    return float(np.sum(v**2) * variance.value / n)


def cost(lam, coeffs: FourierCoefficients, variance: VarianceEstimate, rho: float) -> float:
    rho = _check_rho(rho)
    v = _values(lam)
    if v.shape != (coeffs.n,):
        raise UsageError(f"weight length {v.shape} does not match n={coeffs.n}")
    th2 = coeffs.theta_hat**2
    cross = th2 - variance.value / coeffs.n
    return float(np.sum(v**2 * th2) - 2.0 * np.sum(v * cross) + rho * penalty(v, variance, coeffs.n))


def grid_costs(grid: WeightGrid, coeffs: FourierCoefficients, variance: VarianceEstimate,
               rho: float) -> np.ndarray:
    """Vector of ``J`` over all members, in enumeration order."""
    rho = _check_rho(rho)
    if grid.n != coeffs.n:
        raise UsageError(f"grid built for n={grid.n}, coefficients have n={coeffs.n}")
    n = coeffs.n
    mat = grid.matrix
    sq = mat**2
    th2 = coeffs.theta_hat**2
    cross = th2 - variance.value / n
    # row-wise pairwise sums, same operation order as cost(); BLAS matvec can
    # round identical rows differently, which would break the tie rule
    quad = np.sum(sq * th2, axis=1)
    lin = np.sum(mat * cross, axis=1)
    pen = np.sum(sq, axis=1) * variance.value / n
    return quad - 2.0 * lin + rho * pen


def select(grid: WeightGrid, coeffs: FourierCoefficients, variance: VarianceEstimate,
           rho: float) -> SelectionResult:
    """Minimize the cost over ``grid``; ties go to the earliest member."""
    if grid is None or len(grid) == 0:
        raise UsageError("cannot select from an empty grid")
    costs = grid_costs(grid, coeffs, variance, rho)
    idx = int(np.argmin(costs))
    lam = grid[idx]
    return SelectionResult(
        lambda_hat=lam,
        index=idx,
        cost_value=float(costs[idx]),
        variance=variance,
        fitted_grid=synthesize(lam, coeffs),
        rho=float(rho),
    )


@dataclass(frozen=True)
class FitConfig:
    """Tuning parameters; string values resolve to the simulation-study rules.

    rho: float or ``"auto"`` (``1/(3 + ln^2 n)``).
    k_star: int or ``"paper"`` (``floor(100 + sqrt(ln n))``).
    eps: float or ``"paper"`` (``1/ln n``).
    d_n: int or ``"cuberoot"`` (``floor(n^(1/3))``).
    """

    rho: Union[float, str] = "auto"
    k_star: Union[int, str] = "paper"
    eps: Union[float, str] = "paper"
    omega_bar: float = 10.0
    d_n: Union[int, str] = "cuberoot"
    seed: int = 0

    def resolve(self, n: int) -> dict:
        n = check_odd(n)
        ln = math.log(n)
        rho = default_rho(n) if self.rho == "auto" else _check_rho(self.rho)
        k_star = int(math.floor(100 + math.sqrt(ln))) if self.k_star == "paper" else int(self.k_star)
        eps = 1.0 / ln if self.eps == "paper" else float(self.eps)
        d_n = default_cutoff(n) if self.d_n == "cuberoot" else int(self.d_n)
        if not 1 <= d_n <= n - 1:
            raise UsageError(f"cutoff d_n must lie in [1, {n - 1}], got {d_n}")
        return {"n": n, "rho": rho, "k_star": k_star, "eps": eps,
                "omega_bar": float(self.omega_bar), "d_n": d_n, "seed": int(self.seed)}

    def sieve(self, n: int) -> SieveParams:
        r = self.resolve(n)
        return SieveParams(k_star=r["k_star"], eps=r["eps"], omega_bar=r["omega_bar"])

    def digest(self, n: Optional[int] = None) -> str:
        payload = self.resolve(n) if n is not None else asdict(self)
        return config_digest(payload)


def config_digest(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fit(y, config: Optional[FitConfig] = None, *, variance: Optional[float] = None,
        grid: Optional[WeightGrid] = None) -> SelectionResult:
    """Run transform, variance estimate, grid construction and selection.

    Parameters
    ----------
    y : array_like
        Observations on the design ``x_j = j/n`` with odd ``n``.
    config : FitConfig, optional
        Defaults to the simulation-study settings.
    variance : float, optional
        Known mean noise variance; replaces the high-frequency estimate.
    grid : WeightGrid, optional
        Overrides the grid implied by ``config``.
    """
    config = FitConfig() if config is None else config
    coeffs = forward_transform(y)
    n = coeffs.n
    resolved = config.resolve(n)
    if variance is None:
        var = estimate_variance(coeffs, resolved["d_n"])
    else:
        var = VarianceEstimate(float(variance), resolved["d_n"])
    if grid is None:
        grid = build_grid(n, config.sieve(n))
    return select(grid, coeffs, var, resolved["rho"])
