import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from id_regret import bayes, levy
from id_regret.grid import Grid1D


def test_power_law_prior_validation():
    with pytest.raises(ValueError):
        bayes.PriorSpec.power_law(-1.0)
    with pytest.raises(ValueError):
        bayes.PriorSpec.student(0.5)
    assert not bayes.PriorSpec.power_law(1.0).proper
    assert bayes.PriorSpec.power_law(2.0).proper


def test_gaussian_marginal_closed_form(gaussian, gauss_grid):
    m = bayes.marginal_density(gaussian, bayes.PriorSpec.gaussian(3.0), gauss_grid)
    x = gauss_grid.points
    exact = np.exp(-x ** 2 / 8) / np.sqrt(8 * np.pi)
    assert np.max(np.abs(m.values - exact)) < 1e-10


def test_uniform_marginal_is_constant(cauchy, wide_grid):
    m = bayes.marginal_density(cauchy, bayes.PriorSpec.uniform(), wide_grid)
    assert np.allclose(m.values, 1.0)


def test_benchmark_is_translation_kernel(gaussian, gauss_grid):
    k = bayes.bayes_predictive(gaussian, bayes.PriorSpec.uniform(), gauss_grid)
    assert k.is_translation
    x = k.offsets.points
    assert np.allclose(k.offsets.values, np.exp(-x ** 2 / 4) / np.sqrt(4 * np.pi), atol=1e-12)


def test_gaussian_posterior_predictive_row(gaussian, gauss_grid):
    s2 = 1.0
    k = bayes.bayes_predictive(gaussian, bayes.PriorSpec.gaussian(s2), gauss_grid)
    i = gauss_grid.zero_index + 40
    x0 = gauss_grid.points[i]
    mean, var = x0 * s2 / (1 + s2), 1 + s2 / (1 + s2)
    y = gauss_grid.points
    exact = np.exp(-(y - mean) ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var)
    assert np.max(np.abs(k.row(i) - exact)) < 1e-10


@pytest.mark.parametrize("prior", [bayes.PriorSpec.gaussian(1.0), bayes.PriorSpec.power_law(1.0, 1.0)])
def test_balance_residuals_small(cauchy, wide_grid, prior):
    assert bayes.detailed_balance_residual(cauchy, prior, wide_grid) < 1e-6
    assert bayes.invariance_residual(cauchy, prior, wide_grid) < 1e-6


@settings(max_examples=8, deadline=None)
@given(s2=st.floats(0.2, 20.0))
def test_gaussian_kernel_rows_are_densities(s2):
    g = Grid1D.symmetric(60.0, 512)
    k = bayes.bayes_predictive(levy.gaussian_model(1.0), bayes.PriorSpec.gaussian(s2), g)
    mass = k.row_mass()
    mid = g.interior_mask(0.5)
    assert np.allclose(mass[mid], 1.0, atol=1e-8)
    assert np.all(k.matrix() >= 0)


def test_stable_marginal_tail_exponent():
    g = Grid1D.symmetric(400.0, 32768)
    m = bayes.marginal_density(levy.stable_model(0.5), bayes.PriorSpec.power_law(2.0), g)
    # the likelihood tail |x|^-1.5 dominates the prior tail |x|^-2
    assert m.tail_model.exponent == pytest.approx(1.5, abs=1e-9)
    # total mass equals the prior mass, int (1 + theta^2)^-1 = pi; the
    # extrapolated tail beyond the grid carries about 0.2 of it
    assert m.function.mass() == pytest.approx(np.pi, rel=1e-3)
