"""
Closed-form risk of fixed-weight estimates, oracle-bound constants and
numerical checks of the supporting inequalities.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
import math
from typing import Callable, Optional, Sequence, Tuple
import warnings

import numpy as np

from .errors import UsageError
from .estimator import (FitConfig, VarianceEstimate, _check_rho, config_digest,
                        default_cutoff, estimate_variance, select)
from .fourier import (basis_eval, basis_matrix, check_odd, design_points, empirical_norm_sq,
                      forward_transform)
from .simulate import SimulationModel, generate, map_ordered, mean_and_se
from .weights import WeightGrid, build_grid


class NonPeriodicWarning(UserWarning):
    """The function (or one of its derivatives) does not match at 0 and 1."""


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Squared volatilities on the design and the moments the bounds need."""

    sigma_sq: np.ndarray
    xi_star: float = 3.0

    def __post_init__(self):
        arr = np.array(self.sigma_sq, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise UsageError("sigma_sq must be a nonempty 1-d vector")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise UsageError("sigma_sq must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "sigma_sq", arr)

    @property
    def n(self) -> int:
        return self.sigma_sq.size

    @property
    def sigma_star(self) -> float:
        return float(np.max(self.sigma_sq))

    @property
    def varsigma_n(self) -> float:
        return float(np.mean(self.sigma_sq))

    @classmethod
    def from_model(cls, model: SimulationModel, n: int) -> "NoiseModel":
        _, _, sig2 = model.truth(n)
        return cls(sig2, model.xi_star)

    def per_frequency(self) -> np.ndarray:
        """``E xi_{j,n}^2 = n^{-1} sum_l sigma_l^2 phi_j(x_l)^2`` for ``j = 1..n``."""
        n = check_odd(self.n)
        return (basis_matrix(n) ** 2 @ self.sigma_sq) / n


def _vals(lam) -> np.ndarray:
    return np.asarray(getattr(lam, "values", lam), dtype=float)


def exact_mise(lam, theta, noise: NoiseModel) -> float:
    """``E||S_lambda - S||_n^2`` for deterministic volatilities.

    ``theta`` holds the noiseless coefficients ``(S, phi_j)_n``.
    """
    v = _vals(lam)
    th = np.asarray(getattr(theta, "theta_hat", theta), dtype=float)
    if v.shape != th.shape or th.size != noise.n:
        raise UsageError("weights, coefficients and noise model must share n")
    return float(np.sum((1 - v) ** 2 * th**2) + np.sum(v**2 * noise.per_frequency()) / noise.n)


def exact_mise_grid(grid: WeightGrid, theta, noise: NoiseModel) -> np.ndarray:
    th2 = np.asarray(getattr(theta, "theta_hat", theta), dtype=float) ** 2
    mat = grid.matrix
    return (1 - mat) ** 2 @ th2 + (mat**2) @ noise.per_frequency() / noise.n


def upsilon_star(rho: float, nu: int, u1_n: float, v_n: float, xi_star: float, n: int) -> float:
    rho = _check_rho(rho)
    root = math.sqrt(xi_star) / math.sqrt(n)
    return 16.0 * nu / rho + 4.0 * u1_n * (1.0 + nu * root) + 4.0 * nu * v_n * root


def principal_coefficient(rho: float) -> float:
    rho = _check_rho(rho)
    return (1 + 3 * rho - 2 * rho**2) / (1 - 3 * rho)


def kappa(rho: float) -> float:
    rho = _check_rho(rho)
    return 4 * (1 - rho**2) / (1 - 3 * rho)


@dataclass(frozen=True)
class BoundConstants:
    psi_n: float
    kappa: float
    coefficient: float
    b_n: float


def bound_constants(rho: float, stats: Tuple[float, float, float], noise: NoiseModel,
                    nu: int, n: int, var_gap: float) -> BoundConstants:
    """Remainder constants of the oracle inequality.

    ``var_gap`` stands in for ``E|varsigma_hat - varsigma|``; pass 0 when the
    volatilities are known.
    """
    rho = _check_rho(rho)
    v_n, u1_n, u2_n = stats
    ups = upsilon_star(rho, nu, u1_n, v_n, noise.xi_star, n)
    psi = ((rho * (1 - rho) * ups + 2 * nu + 2 * rho**2 * (1 - rho) * u2_n)
           / (rho * (1 - 3 * rho)) * noise.sigma_star)
    k = kappa(rho)
    return BoundConstants(psi_n=psi, kappa=k, coefficient=principal_coefficient(rho),
                          b_n=psi + k * v_n * var_gap)


def varsigma_star(r: float, n: int, d_n: int, sigma_star: float) -> float:
    return (4 * r * math.sqrt(n) / d_n**2 + 4 * math.sqrt(r * sigma_star) / d_n
            + (2 + d_n) * sigma_star / math.sqrt(n))


def variance_error_bound(r: float, n: int, d_n: int, sigma_star: float, xi_star: float = 3.0) -> float:
    """Upper bound on ``E|varsigma_hat_n - varsigma_n|`` for ``S`` in the first-order Sobolev ball."""
    return ((2 * (math.sqrt(xi_star) + math.sqrt(2)) * sigma_star
             + varsigma_star(r, n, d_n, sigma_star)) / math.sqrt(n))


def d_remainder(rho: float, stats, noise: NoiseModel, nu: int, n: int, r: float, d_n: int) -> float:
    """Remainder of the inequality with the estimated variance replaced by its Sobolev-ball bound."""
    const = bound_constants(rho, stats, noise, nu, n, 0.0)
    gap = (2 * (math.sqrt(noise.xi_star) + math.sqrt(2)) * noise.sigma_star
           + varsigma_star(r, n, d_n, noise.sigma_star))
    return const.psi_n + const.kappa * gap * stats[0] / math.sqrt(n)


@dataclass(frozen=True)
class OracleReport:
    n: int
    rho: float
    nu: int
    v_n: float
    u1_n: float
    u2_n: float
    upsilon_star: float
    psi_n: float
    kappa: float
    coefficient: float
    b_n: float
    lhs: float
    lhs_se: float
    rhs_min: float
    bound_rhs: float
    var_gap: float
    var_gap_se: float
    known_variance: bool
    replications: int
    seed: int
    holds: bool
    holds_within_mc_error: bool
    d_n_bound: Optional[float] = None
    config_digest: str = ""
    note: str = ""

    @property
    def rhs(self) -> float:
        return self.coefficient * self.rhs_min + self.bound_rhs

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rhs"] = self.rhs
        return out


def oracle_audit(model: SimulationModel, n: int, rho: Optional[float] = None,
                 replications: int = 1000, seed: int = 0, *, known_variance: bool = False,
                 grid: Optional[WeightGrid] = None, config: Optional[FitConfig] = None,
                 radius: Optional[float] = None, workers: int = 1) -> OracleReport:
    """Check the oracle inequality with every term computed or estimated.

    The left side is a Monte Carlo mean; the minimum over the grid is exact.
    ``E|varsigma_hat - varsigma|`` in the remainder is replaced by its Monte
    Carlo mean over the same replications (0 when ``known_variance``).
    """
    if replications < 2:
        raise UsageError("oracle audit needs at least 2 replications")
    n = check_odd(n)
    config = FitConfig(seed=seed) if config is None else config
    if rho is not None:
        config = replace(config, rho=rho)
    resolved = config.resolve(n)
    rho = resolved["rho"]
    d_n = resolved["d_n"]
    grid = build_grid(n, config.sieve(n)) if grid is None else grid

    noise = NoiseModel.from_model(model, n)
    _, s_values, _ = model.truth(n)
    theta = forward_transform(s_values)
    rhs_min = float(np.min(exact_mise_grid(grid, theta, noise)))

    def one(rep):
        obs = generate(model, n, seed, rep)
        coeffs = forward_transform(obs.y)
        est = estimate_variance(coeffs, d_n)
        used = VarianceEstimate(noise.varsigma_n, d_n) if known_variance else est
        res = select(grid, coeffs, used, rho)
        return (empirical_norm_sq(res.fitted_grid - s_values), abs(est.value - noise.varsigma_n))

    rows = map_ordered(one, range(replications), workers)
    lhs, lhs_se = mean_and_se([r[0] for r in rows])
    gap, gap_se = mean_and_se([r[1] for r in rows])
    var_gap = 0.0 if known_variance else gap

    stats = grid.stats
    const = bound_constants(rho, stats, noise, grid.nu, n, var_gap)
    ups = upsilon_star(rho, grid.nu, stats[1], stats[0], noise.xi_star, n)
    bound_rhs = const.b_n / n
    rhs = const.coefficient * rhs_min + bound_rhs
    d_bound = None
    if radius is not None and not known_variance:
        d_bound = d_remainder(rho, stats, noise, grid.nu, n, radius, d_n) / n
    note = "" if known_variance else (
        "E|varsigma_hat - varsigma| replaced by its Monte Carlo mean; "
        "small replication counts make this plug-in noisy")
    return OracleReport(
        n=n, rho=rho, nu=grid.nu, v_n=stats[0], u1_n=stats[1], u2_n=stats[2],
        upsilon_star=ups, psi_n=const.psi_n, kappa=const.kappa, coefficient=const.coefficient,
        b_n=const.b_n, lhs=lhs, lhs_se=lhs_se, rhs_min=rhs_min, bound_rhs=bound_rhs,
        var_gap=var_gap, var_gap_se=0.0 if known_variance else gap_se,
        known_variance=known_variance, replications=replications, seed=seed,
        holds=bool(lhs <= rhs), holds_within_mc_error=bool(lhs - 3 * lhs_se <= rhs),
        d_n_bound=d_bound,
        config_digest=config_digest({"resolved": resolved, "known_variance": known_variance,
                                     "replications": replications, "nu": grid.nu}),
        note=note,
    )


# --- Sobolev-ball quantities -------------------------------------------------

def _simpson(values: np.ndarray, h: float) -> float:
    w = np.ones(values.size)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float(np.sum(w * values) * h / 3.0)


def _spectral_derivatives(s_fn: Callable, k: int, points: int) -> list:
    x = np.arange(points) / points
    coef = np.fft.rfft(np.asarray(s_fn(x), dtype=float))
    freq = 2j * np.pi * np.fft.rfftfreq(points, d=1.0 / points)
    out = []
    for order in range(k + 1):
        out.append(np.fft.irfft(coef * freq**order, n=points))
    return out


def sobolev_radius(s_fn: Callable, k: int, derivatives: Optional[Sequence[Callable]] = None,
                   points: int = 2**14, rtol: float = 1e-8) -> float:
    """``sum_{i=0}^k int_0^1 (S^(i))^2``.

    With ``derivatives`` (callables for orders 1..k) the integrals use composite
    Simpson on ``points`` intervals, checked against ``2 * points``. Without
    them, derivatives come from the FFT of ``points`` periodic samples.
    Mismatched endpoint values raise :class:`NonPeriodicWarning`.
    """
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    if derivatives is not None and len(derivatives) < k:
        raise UsageError(f"need {k} derivative callables, got {len(derivatives)}")
    funcs = [s_fn] + list(derivatives[:k]) if derivatives is not None else [s_fn]
    for order, f in enumerate(funcs[:k]):
        a, b = float(f(0.0)), float(f(1.0))
        if abs(a - b) > 1e-8 * (1.0 + abs(a) + abs(b)):
            warnings.warn(f"derivative of order {order} differs at the endpoints "
                          f"({a:.6g} vs {b:.6g}); function is not periodic to that order",
                          NonPeriodicWarning, stacklevel=2)

    if derivatives is None:
        return float(sum(np.mean(d**2) for d in _spectral_derivatives(s_fn, k, points)))

    def total(m: int) -> float:
        x = np.linspace(0.0, 1.0, m + 1)
        return sum(_simpson(np.asarray(f(x), dtype=float) ** 2, 1.0 / m) for f in funcs)

    coarse, fine = total(points), total(2 * points)
    if abs(fine - coarse) > rtol * max(abs(fine), 1e-300):
        warnings.warn(f"quadrature not converged: {coarse!r} vs {fine!r}", RuntimeWarning,
                      stacklevel=2)
    return float(fine)


def tail_energies(s_fn: Callable, n: int) -> np.ndarray:
    """``tails[m-1] = sum_{j>m} theta_{j,n}^2`` for ``m = 1..n-1``."""
    n = check_odd(n)
    th2 = forward_transform(np.asarray(s_fn(design_points(n)), dtype=float)).theta_hat ** 2
    suffix = np.cumsum(th2[::-1])[::-1]
    return suffix[1:]


def tail_energy_check(s_fn: Callable, r: float, k: int, n: int) -> bool:
    """``m^(2k) sum_{j>m} theta_{j,n}^2 <= 4 r / pi^(2(k-1))`` for every ``1 <= m <= n-1``."""
    tails = tail_energies(s_fn, n)
    m = np.arange(1, n, dtype=float)
    bound = 4 * r / math.pi ** (2 * (k - 1))
    return bool(np.all(m ** (2 * k) * tails <= bound * (1 + 1e-12) + 1e-300))


# --- appendix inequalities ---------------------------------------------------

def lemma_a3_ratios(k: int, n_max: int = 200, points: int = 1000,
                    basis: Callable = basis_eval) -> np.ndarray:
    """``N^-k |sum_{l=2}^N l^k (phi_l(x)^2 - 1)|`` for ``N = 2..n_max`` (rows) and ``x`` in a uniform grid."""
    x = np.linspace(0.0, 1.0, points)
    l = np.arange(2, n_max + 1)
    terms = (l[:, None].astype(float) ** k) * (np.asarray(basis(l[:, None], x[None, :])) ** 2 - 1.0)
    partial = np.cumsum(terms, axis=0)
    return np.abs(partial) / (l[:, None].astype(float) ** k)


def lemma_a3_check(ks=(0, 1, 2), n_max: int = 200, points: int = 1000,
                   basis: Callable = basis_eval) -> dict:
    """Count violations of the ``2^k`` bound for each ``k``."""
    out = {}
    for k in ks:
        ratios = lemma_a3_ratios(k, n_max, points, basis)
        out[k] = {"violations": int(np.sum(ratios > 2.0**k * (1 + 1e-12))),
                  "worst": float(ratios.max()), "bound": 2.0**k}
    return out


def orthonormality_error(n: int, basis: Callable = basis_eval) -> float:
    """``max_{i,j} |(phi_i, phi_j)_n - delta_ij|``."""
    n = check_odd(n)
    j = np.arange(1, n + 1)
    x = np.arange(1, n + 1) / n
    mat = np.asarray(basis(j[:, None], x[None, :]), dtype=float)
    gram = mat @ mat.T / n
    return float(np.max(np.abs(gram - np.eye(n))))


def linear_combo_moment(noise: NoiseModel, f, replications: int, seed: int):
    """Monte Carlo ``E(sum_j f_j xi_{j,n})^2`` with its standard error and the ``sigma* |f|^2`` bound."""
    f = np.asarray(f, dtype=float)
    n = check_odd(noise.n)
    if f.shape != (n,):
        raise UsageError(f"f must have length {n}")
    # sum_j f_j xi_{j,n} = sum_l sigma_l xi_l ftilde_l with ftilde_l = n^{-1/2} sum_j f_j phi_j(x_l)
    ftilde = (f @ basis_matrix(n)) / math.sqrt(n)
    load = np.sqrt(noise.sigma_sq) * ftilde
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), n, 0xA5])))
    z = rng.standard_normal((replications, n)) @ load
    sq = z**2
    mean = float(np.mean(sq))
    se = float(np.std(sq, ddof=1) / math.sqrt(replications)) if replications > 1 else float("inf")
    return mean, se, noise.sigma_star * float(np.sum(f**2))


def linear_combo_variance_check(noise: NoiseModel, f, replications: int = 1000, seed: int = 0) -> bool:
    if replications < 1000:
        raise UsageError("use at least 1000 replications")
    mean, se, bound = linear_combo_moment(noise, f, replications, seed)
    return bool(mean <= bound + 3 * se)


@dataclass(frozen=True)
class VarianceErrorStudy:
    n: int
    d_n: int
    mean_abs_error: float
    std_error: float
    bound: float
    radius: float
    sigma_star: float
    varsigma_n: float

    @property
    def holds(self) -> bool:
        return self.mean_abs_error <= self.bound


def variance_error_study(model: SimulationModel, n: int, replications: int, seed: int,
                         radius: float, d_n: Optional[int] = None) -> VarianceErrorStudy:
    """Monte Carlo ``E|varsigma_hat_n - varsigma_n|`` against its Sobolev-ball bound."""
    n = check_odd(n)
    d_n = default_cutoff(n) if d_n is None else d_n
    noise = NoiseModel.from_model(model, n)

    def one(rep):
        obs = generate(model, n, seed, rep)
        return abs(estimate_variance(forward_transform(obs.y), d_n).value - noise.varsigma_n)

    mean, se = mean_and_se([one(r) for r in range(replications)])
    bound = variance_error_bound(radius, n, d_n, noise.sigma_star, noise.xi_star)
    return VarianceErrorStudy(n=n, d_n=d_n, mean_abs_error=mean, std_error=se, bound=bound,
                              radius=radius, sigma_star=noise.sigma_star,
                              varsigma_n=noise.varsigma_n)
