"""Acceptance checks: closed-form oracles, convergence probes and classification tables."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import bayes, classify, energy, levy, regret
from .grid import Grid1D

log = logging.getLogger(__name__)

SUITE_BUDGET = 300.0


@dataclass
class Check:
    name: str
    value: float
    bound: str
    passed: bool


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, bound, passed):
        self.checks.append(Check(name, float(value), bound, bool(passed)))

    def rows(self):
        for c in self.checks:
            yield {"criterion": self.number, "check": c.name, "value": c.value,
                   "bound": c.bound, "passed": c.passed}


def _rel(a, b):
    return abs(a - b) / abs(b)


def gaussian_identity() -> CriterionResult:
    res = CriterionResult(1, "Gaussian identity report")
    model = levy.gaussian_model(1.0)
    grid = Grid1D.symmetric(80.0, 2048)
    targets = {0.0: 1.38629, 1.0: 1.15073, 10.0: 1.02328, 100.0: 1.00251}
    t0 = time.perf_counter()
    for s2, target in targets.items():
        prior = bayes.PriorSpec.point_mass(0.0) if s2 == 0 else bayes.PriorSpec.gaussian(s2)
        rep = regret.verify_identity(model, prior, grid)
        lhs = regret.gaussian_regret(1.0, s2)
        rhs = 1.0 / (4.0 * (1.0 + s2))
        res.add(f"lhs_rel_err[s2={s2:g}]", _rel(rep.lhs, lhs), "<1e-4", _rel(rep.lhs, lhs) < 1e-4)
        err = abs(rep.rhs_spectral - rhs)
        res.add(f"rhs_spectral_err[s2={s2:g}]", err, "<1e-6", err < 1e-6)
        res.add(f"ratio[s2={s2:g}]", rep.ratio, f"{target}+-0.005", abs(rep.ratio - target) <= 0.005)
    elapsed = time.perf_counter() - t0
    res.add("runtime_under_10s", float(elapsed < 10.0), "==1", elapsed < 10.0)
    return res


def variance_integral() -> CriterionResult:
    res = CriterionResult(2, "Gaussian reduction integral")
    for v in (1.0, 2.0):
        for s2 in (0.0, 1.0, 10.0):
            rep = regret.gaussian_reduction_report(v, s2)
            res.add(f"integral_err[v={v:g},s2={s2:g}]", rep.integral_error, "<1e-6", rep.integral_error < 1e-6)
            res.add(f"per_w_err[v={v:g},s2={s2:g}]", rep.per_w_error, "<1e-6", rep.per_w_error < 1e-6)
    return res


def cauchy_benchmark() -> CriterionResult:
    res = CriterionResult(3, "Cauchy benchmark and regret self-convergence")
    t0 = time.perf_counter()
    model = levy.cauchy_model(1.0)
    grid = Grid1D.symmetric(400.0, 16384)
    bench = bayes.benchmark_predictive(model, grid)
    q = bench.offsets
    x = q.points
    exact = 2.0 / (np.pi * (4.0 + x ** 2))
    err = float(np.max(np.abs(q.values - exact)))
    res.add("benchmark_sup_err", err, "<1e-6", err < 1e-6)
    prior = bayes.PriorSpec.power_law(1.0, 1.0)
    r1 = regret.integrated_regret(model, prior, Grid1D.symmetric(400.0, 2048))
    r2 = regret.integrated_regret(model, prior, Grid1D.symmetric(400.0, 4096))
    res.add("regret_n2048", r1, "report", True)
    res.add("regret_n4096", r2, "report", True)
    res.add("regret_rel_change", _rel(r1, r2), "<0.01", _rel(r1, r2) < 0.01)
    elapsed = time.perf_counter() - t0
    res.add("runtime_under_60s", float(elapsed < 60.0), "==1", elapsed < 60.0)
    return res


# expected table from the rule statements
CLASSIFIER_TABLE = [
    ("Cauchy", 1, classify.StableTail(1.0), "Admissible"),
    ("Cauchy", 2, classify.StableTail(1.0), "Inadmissible"),
    ("FiniteVariance", 1, classify.FiniteVariance(), "Admissible"),
    ("FiniteVariance", 2, classify.FiniteVariance(), "Admissible"),
    ("FiniteVariance", 3, classify.FiniteVariance(), "Inadmissible"),
    ("Stable(0.5)", 1, classify.StableTail(0.5), "Inadmissible"),
    ("Stable(1.0)", 1, classify.StableTail(1.0), "Admissible"),
    ("Stable(1.5)", 1, classify.StableTail(1.5), "Admissible"),
    ("NIG", 3, classify.FiniteVariance(), "Inadmissible"),
    ("VG", 3, classify.FiniteVariance(), "Inadmissible"),
    ("Laplace", 3, classify.FiniteVariance(), "Inadmissible"),
    ("Skellam", 3, classify.FiniteVariance(), "Inadmissible"),
]


def classifier_table() -> CriterionResult:
    res = CriterionResult(4, "Classifier table")
    for name, d, trait, expected in CLASSIFIER_TABLE:
        v = classify.classify_admissibility(d, trait)
        ok = v.admissibility.value == expected and v.admissible == (v.recurrence is classify.Recurrence.RECURRENT)
        res.add(f"{name}[d={d}]", float(v.admissible), f"=={float(expected == 'Admissible'):g}", ok)
    return res


BLYTH_SCHEDULE = (1, 4, 16, 64, 256)


def _blyth(model, n):
    grid = Grid1D.symmetric(200.0, n)
    est = energy.blyth_sequence_energies(levy.symmetrize(model), energy.default_eta(grid), BLYTH_SCHEDULE)
    return np.array([e.value for e in est])


def blyth_sequence() -> CriterionResult:
    res = CriterionResult(5, "Blyth sequence")
    cau = _blyth(levy.cauchy_model(1.0), 2048)
    for k, e in zip(BLYTH_SCHEDULE, cau):
        res.add(f"cauchy_energy[n={k}]", e, "report", True)
    mono = bool(np.all(np.diff(cau) <= 1e-12 * cau[0]))
    res.add("cauchy_nonincreasing", float(mono), "==1", mono)
    res.add("cauchy_final_over_initial", cau[-1] / cau[0], "<=0.2", cau[-1] <= 0.2 * cau[0])
    st = _blyth(levy.stable_model(0.5), 2048)
    st2 = _blyth(levy.stable_model(0.5), 4096)
    for k, e in zip(BLYTH_SCHEDULE, st):
        res.add(f"stable0.5_energy[n={k}]", e, "report", True)
    res.add("stable_min_over_cauchy_final", st.min() / cau[-1], ">=10", st.min() >= 10 * cau[-1])
    drift = _rel(st2.min(), st.min())
    res.add("stable_min_grid_doubling", drift, "<0.1", drift < 0.1)
    return res


def transience_witness() -> CriterionResult:
    res = CriterionResult(6, "Transience witness")
    model = levy.stable_model(0.5)
    sym = levy.symmetrize(model)
    prior = bayes.PriorSpec.power_law(2.0)
    out = []
    for n in (16384, 32768):
        grid = Grid1D.symmetric(400.0, n)
        out.append(energy.transience_witness(sym, bayes.marginal_density(model, prior, grid)))
    w = out[0]
    res.add("lower", w.lower, ">=1e-3", w.lower >= 1e-3)
    res.add("energy", w.energy, "report", True)
    res.add("lower_le_energy", w.lower / w.energy, "<=1", w.holds)
    res.add("lower_le_schwarz_bound", w.lower / w.schwarz_bound, "<=1 (diagnostic)", True)
    drift = _rel(out[1].lower, w.lower)
    res.add("lower_grid_doubling", drift, "<0.1", drift < 0.1)
    return res


def estimator_concordance() -> CriterionResult:
    res = CriterionResult(7, "Energy estimator concordance")
    models = {
        "gaussian": (levy.gaussian_model(1.0), Grid1D.symmetric(40.0, 1024)),
        "cauchy": (levy.cauchy_model(1.0), Grid1D.symmetric(400.0, 2048)),
        "stable1.5": (levy.stable_model(1.5), Grid1D.symmetric(200.0, 2048)),
    }
    priors = {"gaussian(1)": bayes.PriorSpec.gaussian(1.0), "power_law(1,1)": bayes.PriorSpec.power_law(1.0, 1.0)}
    for mname, (model, grid) in models.items():
        sym = levy.symmetrize(model)
        for pname, prior in priors.items():
            marginal = bayes.marginal_density(model, prior, grid)
            root = marginal.sqrt()
            sp = energy.energy_spectral(sym, root).value
            fh = energy.energy_finite_h(sym, root).value
            lb = energy.rate_function_lower_bound(sym, marginal.function).value
            tag = f"{mname},{pname}"
            res.add(f"finite_h_rel[{tag}]", _rel(fh, sp), "<0.005", _rel(fh, sp) < 0.005)
            ratio = lb / sp
            res.add(f"rate_lb_ratio[{tag}]", ratio, "in[0.85,1]", 0.85 <= ratio <= 1.0)
    return res


def balance_invariance() -> CriterionResult:
    res = CriterionResult(8, "Detailed balance and invariance")
    cases = {
        "gaussian-gaussian": (levy.gaussian_model(1.0), bayes.PriorSpec.gaussian(1.0), Grid1D.symmetric(40.0, 4096)),
        "cauchy-power_law": (levy.cauchy_model(1.0), bayes.PriorSpec.power_law(1.0, 1.0), Grid1D.symmetric(400.0, 4096)),
    }
    for name, (model, prior, grid) in cases.items():
        db = bayes.detailed_balance_residual(model, prior, grid)
        inv = bayes.invariance_residual(model, prior, grid)
        res.add(f"detailed_balance[{name}]", db, "<1e-6", db < 1e-6)
        res.add(f"invariance[{name}]", inv, "<1e-6", inv < 1e-6)
    return res


def aharmonic() -> CriterionResult:
    res = CriterionResult(9, "Integral tail test and capacity scaling")
    for d in (1, 2):
        for a in (0.5, 1.0):
            for shift in (-0.3, 0.3):
                beta = round(d - a + shift, 10)
                expected = beta >= d - a
                closed = classify.aharmonic_tail_test(d, a, classify.ClosedExponent(beta))
                numeric = classify.aharmonic_tail_test(d, a, classify.ClosedExponent(beta), method="numeric")
                tag = f"d={d},alpha={a:g},beta={beta:g}"
                res.add(f"closed[{tag}]", float(closed.admissible), f"=={float(expected):g}", closed.admissible == expected)
                agree = numeric.admissible == closed.admissible and numeric.status == closed.status
                res.add(f"numeric_agrees[{tag}]", float(agree), "==1", agree)
    recs = classify.capacity_profile(1, 1.0, classify.ClosedExponent(1.0), [1e2, 1e3, 1e4])
    prods = np.array([r.product for r in recs])
    for r in recs:
        res.add(f"capacity_product[R={r.R:g}]", r.product, "report", True)
    spread = prods.max() / prods.min()
    res.add("capacity_product_spread", spread, "<=3", spread <= 3)
    return res


CRITERIA = (gaussian_identity, variance_integral, cauchy_benchmark, classifier_table, blyth_sequence,
            transience_witness, estimator_concordance, balance_invariance, aharmonic)


def run_suite(only=None) -> list[CriterionResult]:
    """Run the acceptance criteria (all, or the numbers in ``only``).

    The last entry is the wall-time criterion for the whole run.
    Determinism across runs is checked outside, by comparing outputs.
    """
    results = []
    t0 = time.perf_counter()
    for fn in CRITERIA:
        t = time.perf_counter()
        if only is not None and CRITERIA.index(fn) + 1 not in only:
            continue
        r = fn()
        r.seconds = time.perf_counter() - t
        log.info("criterion %d %s in %.1f s", r.number, "passed" if r.passed else "FAILED", r.seconds)
        results.append(r)
    total = time.perf_counter() - t0
    if only is None:
        final = CriterionResult(10, "Suite wall time", seconds=total)
        final.add("wall_time_under_budget", float(total <= SUITE_BUDGET), "==1", total <= SUITE_BUDGET)
        results.append(final)
    return results
