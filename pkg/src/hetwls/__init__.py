"""Adaptive weighted least squares for heteroscedastic nonparametric regression."""

from .analysis import (NoiseModel, OracleReport, bound_constants, exact_mise, oracle_audit,
                       sobolev_radius, tail_energy_check, upsilon_star)
from .errors import UsageError
from .estimator import (FitConfig, SelectionResult, VarianceEstimate, cost, default_cutoff,
                        estimate_variance, fit, penalty, select)
from .fourier import (DesignGrid, FourierCoefficients, basis_eval, empirical_inner,
                      forward_transform, synthesize)
from .simulate import (ObservationSet, RiskReport, SimulationModel, Volatility, benchmark_s,
                       generate, monte_carlo_risk)
from .weights import (SieveParams, WeightGrid, WeightVector, build_grid, build_weight,
                      grid_stats, pinsker_constant)

__version__ = "0.1.0"
