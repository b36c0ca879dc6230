import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from id_regret import bayes, classify as C, levy
from id_regret.errors import ClassificationError, TailFitError
from id_regret.grid import Grid1D, GriddedFunction


@settings(max_examples=50, deadline=None)
@given(d=st.integers(1, 6), alpha=st.floats(0.01, 1.99))
def test_verdict_pairing(d, alpha):
    for trait in (C.FiniteVariance(), C.StableTail(alpha)):
        v = C.classify_admissibility(d, trait)
        assert v.admissible == (v.recurrence is C.Recurrence.RECURRENT)


@pytest.mark.parametrize("d,trait,admissible", [
    (1, C.StableTail(1.0), True),
    (3, C.FiniteVariance(), False),
    (1, C.StableTail(0.5), False),
    (2, C.FiniteVariance(), True),
    (2, C.StableTail(1.5), False),
])
def test_rule_table(d, trait, admissible):
    assert C.classify_admissibility(d, trait).admissible is admissible


def test_invalid_inputs():
    with pytest.raises(ClassificationError):
        C.StableTail(2.0)
    with pytest.raises(ClassificationError):
        C.classify_admissibility(0, C.FiniteVariance())


def test_tail_index_cauchy():
    g = Grid1D.symmetric(400.0, 16384)
    fit = C.tail_index_estimate(levy.model_density(levy.cauchy_model(1.0), g))
    assert 0.95 <= fit.alpha <= 1.05
    assert fit.window[1] / fit.window[0] >= 10


def test_tail_index_stable_half():
    g = Grid1D.symmetric(400.0, 32768)
    fit = C.tail_index_estimate(levy.model_density(levy.stable_model(0.5), g))
    assert 0.45 <= fit.alpha <= 0.55


def test_tail_index_rejects_gaussian():
    g = Grid1D.symmetric(400.0, 16384)
    dens = levy.model_density(levy.gaussian_model(1.0), g)
    with pytest.raises(TailFitError):
        C.tail_index_estimate(dens)
    v, fit = C.classify_density(dens)
    assert fit is None and v.trait.startswith("FiniteVariance")


@pytest.mark.parametrize("scale", [0.5, 3.0])
def test_tail_index_scale_equivariant(scale):
    g = Grid1D.symmetric(4000.0, 16384)
    x = g.points
    dens = GriddedFunction(g, scale / (np.pi * (scale ** 2 + x ** 2)))
    base = GriddedFunction(g, 1 / (np.pi * (1 + x ** 2)))
    a1, a0 = C.tail_index_estimate(dens), C.tail_index_estimate(base)
    assert a1.alpha == pytest.approx(a0.alpha, abs=3 * a0.stderr + 2e-3)


def test_closed_exponent_examples():
    assert C.aharmonic_tail_test(1, 0.5, C.ClosedExponent(0.5)).admissible
    v = C.aharmonic_tail_test(1, 0.5, C.ClosedExponent(0.2))
    assert not v.admissible and v.status == "not_established"
    assert C.aharmonic_tail_test(2, 1.0, C.ClosedExponent(1.5)).admissible
    with pytest.raises(ClassificationError):
        C.aharmonic_tail_test(1, 0.5, C.ClosedExponent(1.5))


@pytest.mark.parametrize("alpha,model", [(0.5, levy.stable_model(0.5)), (1.0, levy.cauchy_model(1.0))])
def test_numeric_route_on_marginals(alpha, model):
    g = Grid1D.symmetric(400.0, 32768)
    for beta in (0.2, 0.5, 0.8, 1.0):
        m = bayes.marginal_density(model, bayes.PriorSpec.power_law(beta), g)
        num = C.aharmonic_tail_test(1, alpha, C.RadialProfile.from_marginal(m))
        closed = C.aharmonic_tail_test(1, alpha, C.ClosedExponent(beta))
        if abs(beta - (1 - alpha)) < 1e-12:
            # the boundary integral diverges only logarithmically
            assert num.status == "indeterminate"
        else:
            assert num.admissible == closed.admissible


def test_capacity_profile_scaling():
    recs = C.capacity_profile(1, 1.0, C.ClosedExponent(1.0), [1e2, 1e3, 1e4])
    prods = [r.product for r in recs]
    assert max(prods) / min(prods) <= 3
    energies = [r.energy for r in recs]
    assert energies == sorted(energies, reverse=True)
    floor = C.capacity_profile(1, 0.5, C.ClosedExponent(0.2), [1e2, 1e4])
    assert floor[-1].energy > 0.5 * floor[0].energy


def test_radial_kernel_d3_matches_angular_quadrature():
    from scipy import integrate
    r, s, a = 1.3, 2.1, 0.7
    ang, _ = integrate.quad(lambda t: (r * r + s * s - 2 * r * s * t) ** (-(3 + a) / 2), -1, 1)
    expected = 4 * np.pi * r ** 2 * s ** 2 * 2 * np.pi * ang
    assert C.radial_kernel(3, a, r, s) == pytest.approx(expected, rel=1e-10)


def test_radial_kernel_d2_matches_angular_quadrature():
    from scipy import integrate
    r, s, a = 1.3, 2.1, 0.7
    ang, _ = integrate.quad(lambda p: (r * r + s * s - 2 * r * s * np.cos(p)) ** (-(2 + a) / 2), 0, 2 * np.pi)
    assert C.radial_kernel(2, a, r, s) == pytest.approx(2 * np.pi * r * s * ang, rel=1e-10)


def test_catalog_examples():
    rows = {(v.detail["distribution"], v.d): v for v in C.catalog_report()}
    assert rows[("Laplace", 2)].admissible
    assert not rows[("NIG", 3)].admissible
    hc = rows[("half-Cauchy", 1)]
    assert hc.admissible and hc.detail["alpha_hat"] == pytest.approx(1.0, abs=0.05)
