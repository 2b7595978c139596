import math

import numpy as np
import pytest

from hetwls.errors import UsageError
from hetwls.estimator import FitConfig, fit
from hetwls.fourier import design_points, empirical_norm_sq
from hetwls.simulate import (SimulationModel, Volatility, benchmark_s, benchmark_s_prime, generate,
                             mean_and_se, monte_carlo_risk, paper_model)


def test_benchmark_values():
    assert benchmark_s(0.0) == 0.0
    assert benchmark_s(1.0) == pytest.approx(0.0, abs=1e-15)
    assert benchmark_s(0.25) == pytest.approx(0.203125, abs=1e-15)


def test_benchmark_derivative_by_finite_difference():
    x = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (benchmark_s(x + h) - benchmark_s(x - h)) / (2 * h)
    np.testing.assert_allclose(benchmark_s_prime(x), fd, atol=1e-7)


def test_volatility_rules():
    x = design_points(5)
    s = benchmark_s(x)
    np.testing.assert_array_equal(Volatility.constant(2.0).sigma_sq(x, s), np.full(5, 2.0))
    np.testing.assert_allclose(Volatility.affine(1.0, 2.0).sigma_sq(x, s), 1 + 2 * x)
    np.testing.assert_allclose(Volatility.s_dependent().sigma_sq(x, s), 1 + s**2)
    np.testing.assert_array_equal(Volatility.custom([1, 2, 3, 4, 5]).sigma_sq(x, s), [1, 2, 3, 4, 5])
    with pytest.raises(UsageError):
        Volatility.custom([1, 2]).sigma_sq(x, s)
    with pytest.raises(UsageError):
        Volatility.constant(-1.0).sigma_sq(x, s)


def test_paper_model():
    m = paper_model()
    assert m.xi_star == 3.0
    x, s, sig2 = m.truth(101)
    np.testing.assert_allclose(sig2, 1 + benchmark_s(x) ** 2)
    with pytest.raises(UsageError):
        SimulationModel(noise_law="cauchy")


def test_generate_noiseless():
    m = SimulationModel(volatility=Volatility.constant(0.0))
    obs = generate(m, 21, 5)
    np.testing.assert_array_equal(obs.y, benchmark_s(design_points(21)))


def test_generate_deterministic():
    a = generate(paper_model(), 101, 9, 3)
    b = generate(paper_model(), 101, 9, 3)
    np.testing.assert_array_equal(a.y, b.y)
    c = generate(paper_model(), 101, 9, 4)
    assert not np.array_equal(a.y, c.y)
    with pytest.raises(UsageError):
        generate(paper_model(), 100, 0)


def test_generate_noise_moment():
    m = SimulationModel(s_fn=lambda x: np.zeros_like(x), volatility=Volatility.constant(1.0))
    reps = 10_000
    vals = [empirical_norm_sq(generate(m, 401, 2, r).y) for r in range(reps)]
    mean, se = mean_and_se(vals)
    assert abs(mean - 1.0) <= 3 * se


def test_mean_and_se():
    mean, se = mean_and_se([1.0, 2.0, 3.0, 4.0])
    assert mean == 2.5
    assert se == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)


def test_risk_noiseless_is_constant():
    m = SimulationModel(volatility=Volatility.constant(0.0))
    rep = monte_carlo_risk(m, [21, 401], 3, 0)
    assert rep.std_errors == [0.0, 0.0]
    for n, risk in zip(rep.n_values, rep.risks):
        x = design_points(n)
        single = empirical_norm_sq(fit(benchmark_s(x)).fitted_grid - benchmark_s(x))
        assert risk == pytest.approx(single, rel=1e-12, abs=1e-300)
    assert rep.risks[1] < rep.risks[0]


def test_risk_validation():
    with pytest.raises(UsageError):
        monte_carlo_risk(paper_model(), [21], 1, 0)
    with pytest.raises(UsageError):
        monte_carlo_risk(paper_model(), [20], 5, 0)


def test_risk_independent_of_workers():
    a = monte_carlo_risk(paper_model(), [21, 41], 20, 4, workers=1)
    b = monte_carlo_risk(paper_model(), [21, 41], 20, 4, workers=4)
    assert a == b
    assert all(r >= 0 for r in a.risks)
    assert a.config_digest == b.config_digest
    c = monte_carlo_risk(paper_model(), [21, 41], 20, 5)
    assert c.config_digest != a.config_digest
