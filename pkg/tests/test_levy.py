import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from id_regret import levy
from id_regret.errors import GridError, TripletError
from id_regret.grid import Grid1D


def test_gaussian_exponent_convention():
    psi = levy.characteristic_exponent(levy.symmetrize(levy.gaussian_model(1.0)))
    xi = np.linspace(-3, 3, 7)
    assert np.allclose(psi(xi), xi ** 2)


def test_cauchy_exponent_doubles_under_symmetrization():
    psi = levy.characteristic_exponent(levy.symmetrize(levy.cauchy_model(1.0)))
    assert np.allclose(psi([0.5, 1.0, 4.0]), [1.0, 2.0, 8.0], rtol=1e-10)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_stable_exponent_matches_quadrature(alpha):
    sym = levy.symmetrize(levy.stable_model(alpha))
    psi = levy.characteristic_exponent(sym)
    for xi in (0.3, 1.0, 2.5):
        assert psi(xi) == pytest.approx(levy.exponent_by_quadrature(sym, xi), rel=1e-8)


def test_stable_scale_gives_unit_exponent():
    # stable_model(alpha) carries psi(xi) = |xi|^alpha before symmetrization
    sym = levy.symmetrize(levy.stable_model(0.5))
    psi = levy.characteristic_exponent(sym)
    assert psi(2.0) == pytest.approx(2 * 2.0 ** 0.5, rel=1e-10)


def test_double_symmetrization_rejected():
    sym = levy.symmetrize(levy.cauchy_model(1.0))
    with pytest.raises(TripletError):
        levy.symmetrize(sym)


def test_cauchy_density_against_closed_form():
    g = Grid1D.symmetric(400.0, 16384)
    q = levy.transition_density(levy.symmetrize(levy.cauchy_model(1.0)), 1.0, g)
    x = g.points
    assert np.max(np.abs(q.values - 2 / (np.pi * (4 + x ** 2)))) < 1e-6


def test_gaussian_density_mass_and_variance(gauss_grid):
    p = levy.model_density(levy.gaussian_model(2.0), gauss_grid)
    x = gauss_grid.points
    assert p.mass() == pytest.approx(1.0, abs=1e-10)
    assert np.sum(x ** 2 * p.values) * gauss_grid.spacing == pytest.approx(2.0, rel=1e-8)


def test_undersampled_stable_density_raises():
    with pytest.raises(GridError, match="resolution"):
        levy.model_density(levy.stable_model(0.5), Grid1D.symmetric(400.0, 2048))


@settings(max_examples=15, deadline=None)
@given(t=st.floats(0.05, 3.0), s=st.floats(0.05, 3.0))
def test_semigroup_property(t, s):
    sym = levy.symmetrize(levy.cauchy_model(1.0))
    g = Grid1D.symmetric(50.0, 512)
    from id_regret.grid import GriddedFunction
    f = GriddedFunction(g, np.exp(-g.points ** 2))
    lhs = levy.apply_semigroup(sym, t + s, f).values
    rhs = levy.apply_semigroup(sym, t, levy.apply_semigroup(sym, s, f)).values
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_generator_on_smooth_function_matches_multiplier():
    sym = levy.symmetrize(levy.stable_model(1.5))
    g = Grid1D.symmetric(100.0, 2048)
    from id_regret.grid import GriddedFunction
    f = GriddedFunction(g, np.exp(-g.points ** 2 / 8))
    psi = levy.characteristic_exponent(sym)
    exact = -np.real(np.fft.ifft(np.fft.fft(f.values) * psi(g.frequencies())))
    op = levy.GeneratorOperator(sym, g)
    approx = op @ f.values
    mid = g.interior_mask(0.25)
    assert np.max(np.abs(approx - exact)[mid]) < 5e-3 * np.max(np.abs(exact))


def test_dense_generator_budget():
    sym = levy.symmetrize(levy.cauchy_model(1.0))
    with pytest.raises(levy.BudgetError):
        levy.generator_matrix(sym, Grid1D.symmetric(10.0, 8192))
