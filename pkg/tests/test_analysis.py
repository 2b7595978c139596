import math
import warnings

import numpy as np
import pytest

from hetwls.analysis import (NonPeriodicWarning, NoiseModel, bound_constants, exact_mise,
                             exact_mise_grid, kappa, lemma_a3_check, linear_combo_moment,
                             linear_combo_variance_check, oracle_audit, orthonormality_error,
                             principal_coefficient, sobolev_radius, tail_energies,
                             tail_energy_check, upsilon_star, varsigma_star,
                             variance_error_bound)
from hetwls.errors import UsageError
from hetwls.fourier import basis_eval, design_points, empirical_norm_sq, forward_transform, synthesize
from hetwls.simulate import SimulationModel, Volatility, benchmark_s, benchmark_s_prime, paper_model
from hetwls.weights import WeightGrid

# int_0^1 S^2 + int_0^1 (S')^2 for the benchmark function, integrated exactly with sympy
BENCHMARK_RADIUS_K1 = 9.1115104918838007472


def test_noise_model():
    noise = NoiseModel(np.array([1.0, 2.0, 4.0]))
    assert noise.sigma_star == 4.0
    assert noise.varsigma_n == pytest.approx(7 / 3)
    assert noise.xi_star == 3.0
    with pytest.raises(UsageError):
        NoiseModel(np.array([1.0, -1.0, 1.0]))


def test_per_frequency_variance_averages_to_mean():
    noise = NoiseModel.from_model(paper_model(), 101)
    per = noise.per_frequency()
    assert per.mean() == pytest.approx(noise.varsigma_n, rel=1e-12)


def test_exact_mise_identities():
    n = 41
    model = paper_model()
    noise = NoiseModel.from_model(model, n)
    _, s, _ = model.truth(n)
    theta = forward_transform(s)
    assert exact_mise(np.ones(n), theta, noise) == pytest.approx(noise.varsigma_n, rel=1e-10)
    assert exact_mise(np.zeros(n), theta, noise) == pytest.approx(empirical_norm_sq(s), rel=1e-12)
    rng = np.random.default_rng(2)
    mats = rng.uniform(size=(6, n))
    grid = WeightGrid.from_arrays(mats)
    np.testing.assert_allclose(exact_mise_grid(grid, theta, noise),
                               [exact_mise(m, theta, noise) for m in mats], rtol=1e-12)
    assert np.all(exact_mise_grid(grid, theta, noise) >= 0)


def test_exact_mise_against_monte_carlo():
    n, reps = 5, 100_000
    model = SimulationModel(volatility=Volatility.constant(1.0))
    noise = NoiseModel.from_model(model, n)
    _, s, _ = model.truth(n)
    theta = forward_transform(s)
    rng = np.random.default_rng(8)
    lam = rng.uniform(size=n)
    y = s + rng.standard_normal((reps, n))
    fits = np.array([synthesize(lam, forward_transform(row)) for row in y[:2000]])
    # vectorised path for the remaining replications, checked against the loop above
    from hetwls.fourier import basis_matrix
    phi = basis_matrix(n)
    all_fits = ((y @ phi.T) / n * lam) @ phi
    np.testing.assert_allclose(all_fits[:2000], fits, atol=1e-12)
    err = np.mean((all_fits - s) ** 2, axis=1)
    se = err.std(ddof=1) / math.sqrt(reps)
    assert abs(err.mean() - exact_mise(lam, theta, noise)) <= 3 * se


def test_upsilon_examples():
    assert upsilon_star(0.1, 1, 0.0, 0.0, 3.0, 100) == pytest.approx(160.0, rel=1e-14)
    direct = 320 + 4 * (1 + 2 * math.sqrt(3) / 10) + 24 * math.sqrt(3) / 10
    assert upsilon_star(0.1, 2, 1.0, 3.0, 3.0, 100) == pytest.approx(direct, rel=1e-14)
    assert direct == pytest.approx(329.5425626, abs=1e-6)
    vals = [upsilon_star(r, 3, 1.0, 5.0, 3.0, 50) for r in np.linspace(0.01, 0.33, 20)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(UsageError):
        upsilon_star(0.34, 1, 0, 0, 3, 10)


def test_bound_constants():
    noise = NoiseModel(np.ones(5))
    c = bound_constants(1 / 6, (2.0, 1.0, 1.0), noise, 3, 5, 0.0)
    assert c.coefficient == pytest.approx(26 / 9, rel=1e-14)
    assert c.kappa == pytest.approx(70 / 9, rel=1e-14)
    assert c.b_n == c.psi_n
    ups = upsilon_star(1 / 6, 3, 1.0, 2.0, 3.0, 5)
    rho = 1 / 6
    psi = (rho * (1 - rho) * ups + 6 + 2 * rho**2 * (1 - rho)) / (rho * (1 - 3 * rho))
    assert c.psi_n == pytest.approx(psi, rel=1e-14)
    c2 = bound_constants(1 / 6, (2.0, 1.0, 1.0), noise, 3, 5, 0.5)
    assert c2.b_n == pytest.approx(c.psi_n + 70 / 9 * 2.0 * 0.5, rel=1e-14)
    assert principal_coefficient(1e-9) == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(UsageError):
        bound_constants(1 / 3, (1, 1, 1), noise, 1, 5, 0.0)


def test_coefficient_and_kappa_increasing():
    rhos = np.linspace(1e-4, 1 / 3 - 1e-4, 200)
    c = [principal_coefficient(r) for r in rhos]
    k = [kappa(r) for r in rhos]
    assert all(x > 1 for x in c) and all(x > 0 for x in k)
    assert all(a < b for a, b in zip(c, c[1:]))
    assert all(a < b for a, b in zip(k, k[1:]))
    assert principal_coefficient(1 / 3 - 1e-9) > 1e8


def test_variance_bound_formula():
    r, n, d, s = 9.0, 101, 4, 1.8
    expect = 4 * r * math.sqrt(n) / d**2 + 4 * math.sqrt(r * s) / d + (2 + d) * s / math.sqrt(n)
    assert varsigma_star(r, n, d, s) == pytest.approx(expect, rel=1e-14)
    full = (2 * (math.sqrt(3) + math.sqrt(2)) * s + expect) / math.sqrt(n)
    assert variance_error_bound(r, n, d, s) == pytest.approx(full, rel=1e-14)


def test_sobolev_radius():
    assert sobolev_radius(lambda x: np.zeros_like(np.asarray(x, dtype=float)), 2) == 0.0
    sine = lambda x: np.sin(2 * np.pi * np.asarray(x))
    assert sobolev_radius(sine, 1) == pytest.approx(0.5 + 2 * math.pi**2, rel=1e-10)
    assert 0.5 + 2 * math.pi**2 == pytest.approx(20.2392, abs=1e-4)
    with warnings.catch_warnings():
        warnings.simplefilter("error", NonPeriodicWarning)
        r = sobolev_radius(benchmark_s, 1, derivatives=[benchmark_s_prime])
    assert r == pytest.approx(BENCHMARK_RADIUS_K1, rel=1e-10)


def test_sobolev_radius_warns_when_not_periodic():
    with pytest.warns(NonPeriodicWarning):
        sobolev_radius(lambda x: np.asarray(x, dtype=float), 1, derivatives=[np.ones_like])
    # S matches at the endpoints but S' does not, which matters from k = 2 on
    second = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    with pytest.warns(NonPeriodicWarning):
        sobolev_radius(benchmark_s, 2, derivatives=[benchmark_s_prime, second])


def test_tail_energy_check():
    zero = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    assert tail_energy_check(zero, 0.0, 1, 21)
    assert tail_energy_check(benchmark_s, BENCHMARK_RADIUS_K1, 1, 401)
    phi2 = lambda x: basis_eval(2, x)
    r = 1 + 4 * math.pi**2
    assert tail_energy_check(phi2, r, 1, 101)
    tails = tail_energies(phi2, 101)
    assert tails[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.abs(tails[1:]) < 1e-25)
    assert not tail_energy_check(benchmark_s, 1e-4, 1, 101)


def test_lemma_a3():
    res = lemma_a3_check()
    for k in (0, 1, 2):
        assert res[k]["violations"] == 0
        assert res[k]["worst"] <= 2.0**k * (1 + 1e-12)


def test_orthonormality_error_detects_corruption():
    assert orthonormality_error(21) < 1e-12
    assert orthonormality_error(21, lambda j, x: 1.01 * basis_eval(j, x)) > 1e-3


def test_linear_combo_check():
    noise = NoiseModel(np.ones(21))
    assert linear_combo_variance_check(noise, np.zeros(21), 1000, 0)
    e1 = np.eye(21)[0]
    mean, se, bound = linear_combo_moment(noise, e1, 5000, 1)
    assert bound == 1.0
    assert abs(mean - 1.0) <= 4 * se
    assert linear_combo_variance_check(noise, e1, 5000, 1)
    noise = NoiseModel.from_model(paper_model(), 101)
    rng = np.random.default_rng(0)
    assert linear_combo_variance_check(noise, rng.normal(size=101), 2000, 3)
    with pytest.raises(UsageError):
        linear_combo_variance_check(noise, rng.normal(size=101), 10, 3)


def test_audit_single_member_grid():
    n, reps = 21, 1000
    grid = WeightGrid.from_arrays([np.ones(n)])
    rep = oracle_audit(paper_model(), n, replications=reps, seed=3, grid=grid)
    assert rep.nu == 1
    assert abs(rep.lhs - rep.rhs_min) <= 3 * rep.lhs_se
    assert rep.holds


def test_audit_small_and_errors():
    rep = oracle_audit(paper_model(), 21, replications=50, seed=0)
    assert rep.holds == (rep.lhs <= rep.coefficient * rep.rhs_min + rep.bound_rhs)
    assert rep.coefficient > 1 and rep.kappa > 0
    assert rep.b_n == pytest.approx(rep.psi_n + rep.kappa * rep.v_n * rep.var_gap, rel=1e-12)
    kv = oracle_audit(paper_model(), 21, replications=50, seed=0, known_variance=True)
    assert kv.var_gap == 0.0 and kv.b_n == kv.psi_n
    with pytest.raises(UsageError):
        oracle_audit(paper_model(), 21, replications=1)
    with pytest.raises(UsageError):
        oracle_audit(paper_model(), 21, rho=0.4, replications=10)
    d = rep.to_dict()
    assert d["rhs"] == rep.rhs and "config_digest" in d


@pytest.mark.parametrize("rho", [0.02, 0.1, 1 / 6])
@pytest.mark.parametrize("n", [21, 101, 401])
def test_audit_holds_across_rho(n, rho):
    rep = oracle_audit(paper_model(), n, rho=rho, replications=1000, seed=17)
    assert rep.rho == rho
    assert rep.holds_within_mc_error
    assert rep.holds
