import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from id_regret import bayes, levy, regret
from id_regret.errors import QuadratureError
from id_regret.grid import Grid1D, GriddedFunction


def _normal(g, mean, var):
    x = g.points
    return GriddedFunction(g, np.exp(-(x - mean) ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var))


@settings(max_examples=20, deadline=None)
@given(m1=st.floats(-3, 3), m2=st.floats(-3, 3), v1=st.floats(0.3, 4), v2=st.floats(0.3, 4))
def test_kl_gaussian_closed_form(m1, m2, v1, v2):
    g = Grid1D.symmetric(60.0, 4096)
    kl = regret.kl_divergence(_normal(g, m1, v1), _normal(g, m2, v2))
    exact = 0.5 * (np.log(v2 / v1) + (v1 + (m1 - m2) ** 2) / v2 - 1)
    assert kl == pytest.approx(exact, abs=1e-9)


def test_kl_infinite_when_support_missing():
    g = Grid1D.symmetric(10.0, 256)
    p = _normal(g, 0, 1)
    q = p.with_values(np.where(np.abs(g.points) < 1, 0.0, p.values))
    assert regret.kl_divergence(p, q) == np.inf


def test_benchmark_risk_constant_for_gaussian(gaussian, gauss_grid):
    k = bayes.benchmark_predictive(gaussian, gauss_grid)
    for theta in (0.0, 2.0, -3.0):
        assert regret.kl_risk(gaussian, k, theta, gauss_grid).value == pytest.approx(0.5 * np.log(2), abs=1e-10)


def test_uniform_prior_has_zero_regret(cauchy, wide_grid):
    assert regret.integrated_regret(cauchy, bayes.PriorSpec.uniform(), wide_grid) == 0.0


@pytest.mark.parametrize("s2", [1.0, 10.0])
def test_gaussian_regret_closed_form(gaussian, s2):
    g = Grid1D.symmetric(80.0, 2048)
    value = regret.integrated_regret(gaussian, bayes.PriorSpec.gaussian(s2), g)
    assert value == pytest.approx(regret.gaussian_regret(1.0, s2), rel=1e-6)


def test_identity_report_row_schema(gaussian):
    rep = regret.verify_identity(gaussian, bayes.PriorSpec.gaussian(1.0), Grid1D.symmetric(80.0, 1024))
    assert list(rep.row()) == ["model", "prior", "param", "lhs", "rhs_spectral", "rhs_finite_h",
                               "rhs_gradient", "ratio", "grid_n"]
    assert rep.check()


def test_gaussian_reduction_identities():
    rep = regret.gaussian_reduction_report(2.0, 1.0)
    assert rep.check(1e-6)


def test_cauchy_plugin_worse_than_benchmark(cauchy, wide_grid):
    bench = bayes.benchmark_predictive(cauchy, wide_grid)
    plug = bayes.plugin_predictive(cauchy, wide_grid)
    for theta in (0.0, 1.5):
        assert regret.kl_risk(cauchy, plug, theta, wide_grid).value > regret.kl_risk(cauchy, bench, theta, wide_grid).value


def test_regret_refuses_large_untrusted_mass(monkeypatch, cauchy, wide_grid):
    real = regret._regret_terms

    def broken(model, prior, grid):
        kl, m, u = real(model, prior, grid)
        return kl, m, np.ones_like(u)

    monkeypatch.setattr(regret, "_regret_terms", broken)
    with pytest.raises(QuadratureError):
        regret.integrated_regret(cauchy, bayes.PriorSpec.power_law(1.0), wide_grid)
