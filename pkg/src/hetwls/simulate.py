"""
Synthetic data for ``y_j = S(x_j) + sigma_j xi_j`` and Monte Carlo risk estimation.

Every replication draws from its own Philox stream keyed by
``(seed, n, replication)``, so results do not depend on how replications
are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import UsageError
from .estimator import FitConfig, SelectionResult, config_digest, fit
from .fourier import check_odd, design_points, empirical_norm_sq
from .weights import build_grid

GAUSSIAN_FOURTH_MOMENT = 3.0


def benchmark_s(x):
    """Regression function of the simulation study: ``x sin(2 pi x) + x^2 (1-x) cos(4 pi x)``."""
    x = np.asarray(x, dtype=float)
    out = x * np.sin(2 * np.pi * x) + x**2 * (1 - x) * np.cos(4 * np.pi * x)
    return float(out) if out.ndim == 0 else out


def benchmark_s_prime(x):
    x = np.asarray(x, dtype=float)
    tp, fp = 2 * np.pi, 4 * np.pi
    out = (np.sin(tp * x) + tp * x * np.cos(tp * x)
           + (2 * x - 3 * x**2) * np.cos(fp * x) - fp * x**2 * (1 - x) * np.sin(fp * x))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Volatility:
    """Rule for the squared volatilities on the design.

    ``kind`` is one of ``constant``, ``affine``, ``s_dependent``, ``custom``.
    The first three share the form ``c0 + c1 x + c2 S(x)^2``.
    """

    kind: str
    c0: float = 1.0
    c1: float = 0.0
    c2: float = 0.0
    values: Optional[tuple] = None

    @classmethod
    def constant(cls, sigma_sq: float) -> "Volatility":
        return cls("constant", c0=float(sigma_sq))

    @classmethod
    def affine(cls, c0: float, c1: float) -> "Volatility":
        return cls("affine", c0=float(c0), c1=float(c1))

    @classmethod
    def s_dependent(cls, c0: float = 1.0, c1: float = 0.0, c2: float = 1.0) -> "Volatility":
        return cls("s_dependent", c0=float(c0), c1=float(c1), c2=float(c2))

    @classmethod
    def custom(cls, sigma_sq: Sequence[float]) -> "Volatility":
        return cls("custom", values=tuple(float(v) for v in sigma_sq))

    def sigma_sq(self, x: np.ndarray, s_values: np.ndarray) -> np.ndarray:
        if self.kind == "custom":
            out = np.asarray(self.values, dtype=float)
            if out.shape != x.shape:
                raise UsageError(f"custom volatility has {out.size} values, design has {x.size}")
        else:
            out = self.c0 + self.c1 * x + self.c2 * s_values**2
        if np.any(out < 0) or not np.all(np.isfinite(out)):
            raise UsageError("squared volatilities must be finite and nonnegative")
        return out


@dataclass(frozen=True)
class SimulationModel:
    s_fn: Callable = benchmark_s
    volatility: Volatility = field(default_factory=Volatility.s_dependent)
    noise_law: str = "gaussian"

    def __post_init__(self):
        if self.noise_law != "gaussian":
            raise UsageError(f"unsupported noise law {self.noise_law!r}")

    @property
    def xi_star(self) -> float:
        return GAUSSIAN_FOURTH_MOMENT

    def truth(self, n: int):
        """``(x, S(x), sigma^2)`` on the design of size ``n``."""
        x = design_points(n)
        s = np.asarray(self.s_fn(x), dtype=float)
        return x, s, self.volatility.sigma_sq(x, s)


def paper_model() -> SimulationModel:
    return SimulationModel()


@dataclass(frozen=True, eq=False)
class ObservationSet:
    x: np.ndarray
    y: np.ndarray
    s_values: Optional[np.ndarray] = None
    sigma_sq: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.y.size


def replication_rng(seed: int, n: int, replication: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(n), int(replication)])))


def generate(model: SimulationModel, n: int, seed: int, replication: int = 0) -> ObservationSet:
    n = check_odd(n)
    x, s, sig2 = model.truth(n)
    xi = replication_rng(seed, n, replication).standard_normal(n)
    return ObservationSet(x=x, y=s + np.sqrt(sig2) * xi, s_values=s, sigma_sq=sig2)


@dataclass(frozen=True)
class RiskReport:
    n_values: List[int]
    risks: List[float]
    std_errors: List[float]
    replications: int
    seed: int
    config_digest: str


def mean_and_se(values: Sequence[float]):
    vals = list(values)
    r = len(vals)
    mean = math.fsum(vals) / r
    var = math.fsum((v - mean) ** 2 for v in vals) / (r - 1)
    return mean, math.sqrt(var / r)


def map_ordered(func, items, workers: int = 1) -> list:
    """``list(map(func, items))``, optionally on a thread pool; output order is input order."""
    if workers <= 1:
        return [func(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def squared_error(result: SelectionResult, s_values: np.ndarray) -> float:
    return empirical_norm_sq(result.fitted_grid - s_values)


def monte_carlo_risk(model: SimulationModel, n_values: Sequence[int], replications: int,
                     seed: int, fit_config: Optional[FitConfig] = None,
                     workers: int = 1) -> RiskReport:
    """Average ``||S_hat - S||_n^2`` over independent replications for each ``n``."""
    if replications < 2:
        raise UsageError("need at least 2 replications for a standard error")
    n_values = [check_odd(n) for n in n_values]
    fit_config = FitConfig(seed=seed) if fit_config is None else fit_config
    risks, ses, resolved = [], [], []
    for n in n_values:
        grid = build_grid(n, fit_config.sieve(n))
        resolved.append(fit_config.resolve(n))

        def one(rep, n=n, grid=grid):
            obs = generate(model, n, seed, rep)
            return squared_error(fit(obs.y, fit_config, grid=grid), obs.s_values)

        mean, se = mean_and_se(map_ordered(one, range(replications), workers))
        risks.append(mean)
        ses.append(se)
    digest = config_digest({"resolved": resolved, "replications": replications, "seed": seed,
                            "volatility": repr(model.volatility),
                            "s_fn": getattr(model.s_fn, "__name__", repr(model.s_fn))})
    return RiskReport(n_values=n_values, risks=risks, std_errors=ses,
                      replications=replications, seed=seed, config_digest=digest)
