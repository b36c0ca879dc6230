import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from id_regret import bayes, energy, levy
from id_regret.errors import ClassificationError
from id_regret.grid import Grid1D, GriddedFunction


def _root_normal(g, var):
    x = g.points
    return GriddedFunction(g, (2 * np.pi * var) ** -0.25 * np.exp(-x ** 2 / (4 * var)))


@settings(max_examples=10, deadline=None)
@given(var=st.floats(0.5, 10.0))
def test_spectral_energy_gaussian_root(var):
    # E(sqrt N(0, s)) = 1 / (4 s) for psi = xi^2
    g = Grid1D.symmetric(80.0, 2048)
    sym = levy.symmetrize(levy.gaussian_model(1.0))
    assert energy.energy_spectral(sym, _root_normal(g, var)).value == pytest.approx(1 / (4 * var), rel=1e-9)


def test_estimators_agree_for_cauchy():
    g = Grid1D.symmetric(400.0, 2048)
    model = levy.cauchy_model(1.0)
    sym = levy.symmetrize(model)
    m = bayes.marginal_density(model, bayes.PriorSpec.gaussian(1.0), g)
    sp = energy.energy_spectral(sym, m.sqrt())
    fh = energy.energy_finite_h(sym, m.sqrt())
    assert fh.value == pytest.approx(sp.value, rel=5e-3)
    assert all(b >= a - 1e-12 for a, b in zip(fh.partials, fh.partials[1:]))


def test_rate_bound_below_spectral():
    g = Grid1D.symmetric(40.0, 1024)
    model = levy.gaussian_model(1.0)
    sym = levy.symmetrize(model)
    m = bayes.marginal_density(model, bayes.PriorSpec.power_law(1.0), g)
    sp = energy.energy_spectral(sym, m.sqrt()).value
    lb = energy.rate_function_lower_bound(sym, m.function).value
    assert 0.85 * sp <= lb <= sp * (1 + 5e-3)


def test_killed_resolvent_in_unit_interval():
    g = Grid1D.symmetric(50.0, 512)
    sym = levy.symmetrize(levy.cauchy_model(1.0))
    u = energy.killed_resolvent(sym, energy.default_eta(g), 0.1)
    assert 0 <= u.values.min() and u.values.max() <= 1


def test_blyth_functions_increase_towards_one():
    g = Grid1D.symmetric(100.0, 512)
    sym = levy.symmetrize(levy.gaussian_model(1.0))
    est = energy.blyth_sequence_energies(sym, energy.default_eta(g), [1, 4, 16])
    peaks = [e.partials[0] for e in est]
    assert peaks == sorted(peaks)
    # the quadratic form never exceeds the resolvent bound <eta (1 - f), f>
    assert all(e.value <= e.partials[1] + 1e-12 for e in est)


def test_transience_classification():
    assert energy.is_transient(levy.symmetrize(levy.stable_model(0.5)))
    assert not energy.is_transient(levy.symmetrize(levy.cauchy_model(1.0)))
    assert not energy.is_transient(levy.symmetrize(levy.gaussian_model(1.0)))


def test_witness_rejects_recurrent_process():
    g = Grid1D.symmetric(400.0, 2048)
    model = levy.cauchy_model(1.0)
    m = bayes.marginal_density(model, bayes.PriorSpec.power_law(2.0), g)
    with pytest.raises(ClassificationError):
        energy.transience_witness(levy.symmetrize(model), m)


def test_witness_schwarz_bound_and_stability():
    model = levy.stable_model(0.5)
    sym = levy.symmetrize(model)
    prior = bayes.PriorSpec.power_law(2.0)
    w1 = energy.transience_witness(sym, bayes.marginal_density(model, prior, Grid1D.symmetric(400.0, 16384)))
    w2 = energy.transience_witness(sym, bayes.marginal_density(model, prior, Grid1D.symmetric(400.0, 32768)))
    assert w1.lower >= 1e-3
    assert w1.bound_holds
    assert w2.lower == pytest.approx(w1.lower, rel=0.1)
