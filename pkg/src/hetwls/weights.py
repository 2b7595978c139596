"""
Pinsker-type weight family over a finite sieve of (order, scale) pairs.

For ``alpha = (beta, t)`` the weight vector is

    lambda_alpha(j) = 1                        for 1 <= j <= j0,
                      1 - (j / omega)^beta      for j0 < j <= omega,
                      0                         otherwise,

with ``omega = omega_bar + (A_beta t n)^(1/(2 beta + 1))`` and
``j0 = floor(omega / j0_divisor)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math
from typing import List, Optional, Tuple

import numpy as np

from .errors import UsageError
from .fourier import basis_matrix, check_odd


def pinsker_constant(beta: int) -> float:
    """``A_beta = (beta + 1)(2 beta + 1) / (pi^(2 beta) beta)``."""
    if beta < 1:
        raise UsageError(f"beta must be >= 1, got {beta}")
    return (beta + 1) * (2 * beta + 1) / (math.pi ** (2 * beta) * beta)


@dataclass(frozen=True)
class SieveParams:
    """Sieve ``{1..k_star} x {eps, 2 eps, ..., m eps}`` plus weight offsets.

    ``j0_divisor=None`` means ``ln n`` for whatever ``n`` the grid is built at.
    """

    k_star: int
    eps: float
    m: Optional[int] = None
    omega_bar: float = 10.0
    j0_divisor: Optional[float] = None

    def __post_init__(self):
        if int(self.k_star) != self.k_star or self.k_star < 1:
            raise UsageError(f"k_star must be a positive integer, got {self.k_star}")
        if not 0.0 < self.eps <= 1.0:
            raise UsageError(f"eps must lie in (0, 1], got {self.eps}")
        if self.m is None:
            # tiny slack so that eps = 1/sqrt(k) does not floor to k - 1
            object.__setattr__(self, "m", int(math.floor(1.0 / self.eps**2 + 1e-9)))
        if self.m < 1:
            raise UsageError(f"m must be >= 1, got {self.m}")
        if self.omega_bar < 0:
            raise UsageError(f"omega_bar must be nonnegative, got {self.omega_bar}")
        if self.j0_divisor is not None and self.j0_divisor <= 1:
            raise UsageError(f"j0_divisor must exceed 1, got {self.j0_divisor}")

    @classmethod
    def default_for(cls, n: int, omega_bar: float = 10.0) -> "SieveParams":
        """Simulation-study defaults: ``k* = floor(100 + sqrt(ln n))``, ``eps = 1/ln n``."""
        check_odd(n)
        ln = math.log(n)
        return cls(k_star=int(math.floor(100 + math.sqrt(ln))), eps=1.0 / ln, omega_bar=omega_bar)

    def divisor(self, n: int) -> float:
        return math.log(n) if self.j0_divisor is None else float(self.j0_divisor)

    @property
    def scales(self) -> np.ndarray:
        return np.arange(1, self.m + 1) * self.eps


@dataclass(frozen=True, eq=False)
class WeightVector:
    """One member of the weight family, indexed by ``alpha = (beta, t)``."""

    n: int
    alpha: Tuple[int, float]
    omega: float
    j0: int
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.shape != (self.n,):
            raise UsageError(f"weight vector must have length {self.n}, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def beta(self) -> int:
        return self.alpha[0]

    @property
    def t(self) -> float:
        return self.alpha[1]

    def norm_sq(self) -> float:
        return float(np.sum(self.values**2))

    @classmethod
    def from_values(cls, values, alpha=(0, 0.0)) -> "WeightVector":
        """Wrap an arbitrary weight array (for ad-hoc grids and tests)."""
        values = np.asarray(values, dtype=float)
        return cls(n=values.size, alpha=alpha, omega=float("nan"), j0=0, values=values)


def pinsker_profile(n: int, beta: int, omega: float, j0: int) -> np.ndarray:
    j = np.arange(1, n + 1, dtype=float)
    taper = np.where(j <= omega, 1.0 - (j / omega) ** beta, 0.0)
    return np.where(j <= j0, 1.0, taper)


def build_weight(alpha: Tuple[int, float], n: int, params: SieveParams) -> WeightVector:
    beta, t = alpha
    if not 1 <= beta <= params.k_star:
        raise UsageError(f"beta={beta} outside 1..{params.k_star}")
    if t <= 0:
        raise UsageError(f"scale t must be positive, got {t}")
    n = check_odd(n)
    omega = params.omega_bar + (pinsker_constant(beta) * t * n) ** (1.0 / (2 * beta + 1))
    j0 = int(math.floor(omega / params.divisor(n)))
    return WeightVector(n=n, alpha=(int(beta), float(t)), omega=omega, j0=j0,
                        values=pinsker_profile(n, beta, omega, j0))


@dataclass(frozen=True, eq=False)
class WeightGrid:
    """Finite, ordered weight family with its sup statistics."""

    members: Tuple[WeightVector, ...]
    n: int
    stats: Tuple[float, float, float] = field(default=None)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise UsageError("weight grid must contain at least one member")
        if any(w.n != self.n for w in members):
            raise UsageError("all grid members must have the same length")
        object.__setattr__(self, "members", members)
        if self.stats is None:
            object.__setattr__(self, "stats", _stats_of(self.matrix, self.n))

    @property
    def nu(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i) -> WeightVector:
        return self.members[i]

    @property
    def matrix(self) -> np.ndarray:
        """``(nu, n)`` array of member values, rows in enumeration order."""
        mat = self.__dict__.get("_matrix")
        if mat is None:
            mat = np.vstack([w.values for w in self.members])
            mat.setflags(write=False)
            object.__setattr__(self, "_matrix", mat)
        return mat

    @property
    def v_n(self) -> float:
        return self.stats[0]

    @property
    def u1_n(self) -> float:
        return self.stats[1]

    @property
    def u2_n(self) -> float:
        return self.stats[2]

    @classmethod
    def from_arrays(cls, arrays) -> "WeightGrid":
        members = [WeightVector.from_values(a, alpha=(0, float(i))) for i, a in enumerate(arrays)]
        return cls(members=tuple(members), n=members[0].n)


def _stats_of(mat: np.ndarray, n: int) -> Tuple[float, float, float]:
    # centred[j-1, l-1] = phi_j(x_l)^2 - 1
    centred = basis_matrix(n) ** 2 - 1.0
    v_n = float(np.max(mat.sum(axis=1)))
    u1 = float(np.max(np.abs(mat @ centred)))
    u2 = float(np.max(np.abs((mat**2) @ centred)))
    return v_n, u1, u2


def grid_stats(grid: WeightGrid, n: Optional[int] = None) -> Tuple[float, float, float]:
    """Return ``(v_n, u1_n, u2_n)`` by exhaustive enumeration over members and design points.

    ``v_n = max sum_j lambda(j)`` and
    ``u_i = max_lambda max_l |sum_j lambda(j)^i (phi_j(x_l)^2 - 1)|``.
    """
    n = grid.n if n is None else check_odd(n)
    if n != grid.n:
        raise UsageError(f"grid built for n={grid.n}, stats requested at n={n}")
    return _stats_of(grid.matrix, n)


def build_grid(n: int, params: Optional[SieveParams] = None) -> WeightGrid:
    """Enumerate the family beta-major: ``(1, t_1), (1, t_2), ..., (k*, t_m)``."""
    n = check_odd(n)
    params = SieveParams.default_for(n) if params is None else params
    return _build_grid_cached(n, params)


@lru_cache(maxsize=16)
def _build_grid_cached(n: int, params: SieveParams) -> WeightGrid:
    members: List[WeightVector] = []
    for beta in range(1, params.k_star + 1):
        for i in range(1, params.m + 1):
            members.append(build_weight((beta, i * params.eps), n, params))
    return WeightGrid(members=tuple(members), n=n)
