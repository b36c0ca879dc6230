"""KL divergences, predictive risks and the regret/energy identity report."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bayes, energy, levy
from .errors import QuadratureError
from .grid import Grid1D, GriddedFunction

log = logging.getLogger(__name__)

FLOOR = 1e-300
SUPPORT_CUTOFF = 1e-15
RISK_CUTOFF = 1e-12


def _kl_rows(p: np.ndarray, q: np.ndarray, dx: float) -> np.ndarray:
    """Row-wise ``sum p log(p/q) dx`` with the floors and support cut-off."""
    p = np.atleast_2d(p)
    q = np.atleast_2d(q)
    peak = p.max(axis=1, keepdims=True)
    live = p >= SUPPORT_CUTOFF * peak
    pf = np.maximum(p, FLOOR)
    qf = np.maximum(q, FLOOR)
    integrand = np.where(live, pf * (np.log(pf) - np.log(qf)), 0.0)
    out = integrand.sum(axis=1) * dx
    # q vanishing where p carries mass: report infinity
    dead = np.any(live & (q <= 0) & (p > FLOOR), axis=1)
    return np.where(dead, np.inf, out)


def kl_divergence(p: GriddedFunction, q: GriddedFunction) -> float:
    """``int p log(p/q)`` by the periodic trapezoid rule on the common grid.

    Both densities are floored at 1e-300 and the integrand is set to zero
    where ``p < 1e-15 max p``.  Returns ``inf`` when ``q`` vanishes on the
    support of ``p``.
    """
    if p.grid != q.grid:
        raise ValueError("KL divergence needs both densities on the same grid")
    return float(_kl_rows(p.values, q.values, p.grid.spacing)[0])


@dataclass(frozen=True)
class RiskResult:
    value: float
    flagged: bool = False
    truncated_mass: float = 0.0

    def __float__(self) -> float:
        return self.value


def kl_risk(model: levy.LevyTriplet, rule: bayes.PredictiveKernel, theta: float, grid: Grid1D) -> RiskResult:
    """``int KL(p(.|theta) || rule(.|x)) p(x|theta) dx`` on the grid.

    Observations with ``p(x|theta) < 1e-12`` times its peak are skipped and
    their mass reported; rows flagged untrusted inside the support set
    ``flagged``.
    """
    if rule.grid != grid:
        raise ValueError("rule and risk grid differ")
    p = bayes._shifted_model(model, grid, theta)
    dx = grid.spacing
    keep = p >= RISK_CUTOFF * p.max()
    idx = np.flatnonzero(keep)
    rows = np.stack([rule.row(i) for i in idx]) if not rule.is_translation else rule.matrix()[idx]
    kl = _kl_rows(np.broadcast_to(p, rows.shape), rows, dx)
    value = float(np.sum(kl * p[idx]) * dx)
    truncated = float(np.sum(p[~keep]) * dx)
    flagged = bool(np.any(rule.untrusted_rows()[idx]))
    if flagged:
        log.warning("risk at theta=%g uses untrusted kernel rows", theta)
    return RiskResult(value, flagged, truncated)


def _regret_terms(model, prior, grid):
    kernel = bayes.bayes_predictive(model, prior, grid)
    bench = bayes.benchmark_predictive(model, grid)
    if kernel.is_translation:
        return np.zeros(grid.n), np.ones(grid.n), np.zeros(grid.n, dtype=bool)
    kl = _kl_rows(kernel.matrix(), bench.matrix(), grid.spacing)
    return kl, kernel.meta["marginal"], kernel.untrusted_rows()


def integrated_regret(model: levy.LevyTriplet, prior: bayes.PriorSpec, grid: Grid1D) -> float:
    """``int KL(p_pi(.|x) || p_U(.|x)) M(x) dx``, the Bayes-risk gap to the benchmark.

    For improper priors this is the sigma-finite integral against the
    unnormalised marginal.  Untrusted rows are dropped; if the marginal mass
    they carry exceeds 1e-3 of the total the computation fails.
    """
    if prior.kind is bayes.PriorKind.UNIFORM:
        return 0.0
    kl, marginal, untrusted = _regret_terms(model, prior, grid)
    dx = grid.spacing
    total = float(np.sum(marginal) * dx)
    dropped = untrusted | ~np.isfinite(kl)
    deficit = float(np.sum(marginal[dropped]) * dx)
    if total > 0 and deficit / total > 1e-3:
        raise QuadratureError("untrusted or divergent rows carry too much marginal mass", deficit / total)
    if deficit:
        log.info("regret excludes rows of marginal mass %.3e", deficit)
    good = ~dropped
    return float(np.sum(kl[good] * marginal[good]) * dx)


@dataclass
class IdentityReport:
    """Regret and the energy of the root marginal, side by side."""

    model: str
    prior: str
    param: float
    lhs: float
    rhs_spectral: float
    rhs_finite_h: float
    rhs_gradient: float | None
    grid_n: int
    tolerance: float = 5e-3
    notes: list = field(default_factory=list)

    @property
    def ratio(self) -> float:
        if self.rhs_spectral == 0:
            return 1.0 if self.lhs == 0 else np.inf
        return self.lhs / self.rhs_spectral

    @property
    def ratio_finite_h(self) -> float:
        return self.lhs / self.rhs_finite_h if self.rhs_finite_h else np.inf

    @property
    def estimators_agree(self) -> bool:
        ref = max(self.rhs_spectral, 1e-12)
        ok = abs(self.rhs_finite_h - self.rhs_spectral) <= self.tolerance * ref + 1e-10
        if self.rhs_gradient is not None:
            ok = ok and abs(self.rhs_gradient - self.rhs_spectral) <= self.tolerance * ref + 1e-10
        return ok

    def check(self) -> bool:
        values = [self.lhs, self.rhs_spectral, self.rhs_finite_h]
        if self.rhs_gradient is not None:
            values.append(self.rhs_gradient)
        finite = all(np.isfinite(v) and v >= -1e-12 for v in values)
        return finite and self.estimators_agree

    def row(self) -> dict:
        return {"model": self.model, "prior": self.prior, "param": self.param, "lhs": self.lhs,
                "rhs_spectral": self.rhs_spectral, "rhs_finite_h": self.rhs_finite_h,
                "rhs_gradient": self.rhs_gradient, "ratio": self.ratio, "grid_n": self.grid_n}

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(ratio=self.ratio, estimators_agree=self.estimators_agree)
        return out


def describe_model(model: levy.LevyTriplet) -> str:
    nu = model.levy_measure
    if nu.is_trivial:
        return f"gaussian(v={model.gaussian_variance:g})"
    if nu.family is levy.LevyFamily.CAUCHY:
        return f"cauchy(c={nu.c:g})"
    if nu.family is levy.LevyFamily.SYMMETRIC_STABLE:
        return f"stable(alpha={nu.alpha:g})"
    return nu.family.value


def _prior_param(prior: bayes.PriorSpec) -> float:
    if prior.kind is bayes.PriorKind.GAUSSIAN:
        return prior.sigma2
    if prior.kind in (bayes.PriorKind.POWER_LAW, bayes.PriorKind.STUDENT):
        return prior.beta
    if prior.kind is bayes.PriorKind.POINT_MASS:
        return 0.0
    return float("nan")


def verify_identity(model: levy.LevyTriplet, prior: bayes.PriorSpec, grid: Grid1D,
                    h_schedule=energy.DEFAULT_H) -> IdentityReport:
    """Compare the integrated regret with the energy of ``sqrt(M)``.

    Nothing is asserted about ``lhs == rhs``; the report carries both sides
    and the estimator concordance on the right-hand side.
    """
    sym = levy.symmetrize(model)
    lhs = integrated_regret(model, prior, grid)
    marginal = bayes.marginal_density(model, prior, grid)
    root = marginal.sqrt()
    spectral = energy.energy_spectral(sym, root)
    finite = energy.energy_finite_h(sym, root, h_schedule)
    gradient = None
    if model.levy_measure.is_trivial:
        gradient = energy.energy_gradient_local(model.gaussian_variance, root).value
    report = IdentityReport(describe_model(model), prior.describe(), _prior_param(prior), lhs,
                            spectral.value, finite.value, gradient, grid.n)
    if not report.estimators_agree:
        report.notes.append("energy estimators disagree beyond tolerance")
    return report


@dataclass
class GaussianReduction:
    """Quadratic-risk and energy quantities of the Gaussian reduction."""

    v: float
    sigma2: float
    w: np.ndarray
    risk_difference: np.ndarray   # (1/w^2)[B(MLE) - B(posterior mean)]
    gradient_energy: np.ndarray   # 4 int |grad sqrt M(.; w)|^2
    variance_integral: float      # 2 int_{v/2}^{v} int |grad sqrt M|^2 dw
    regret: float                 # closed form regret

    @property
    def per_w_error(self) -> float:
        return float(np.max(np.abs(self.risk_difference - self.gradient_energy)))

    @property
    def integral_error(self) -> float:
        return abs(self.variance_integral - self.regret)

    def check(self, tol: float = 1e-6) -> bool:
        return self.per_w_error < tol and self.integral_error < tol


def gaussian_regret(v: float, sigma2: float) -> float:
    """Closed-form KL regret of the Gaussian prior against the flat benchmark."""
    return 0.5 * np.log(2 * (v + sigma2) / (v + 2 * sigma2))


def gaussian_reduction_report(v: float, sigma2: float, nodes: int = 8, n: int = 65536) -> GaussianReduction:
    """Quadratic-risk and energy checks for the equal-variance Gaussian model.

    At noise level ``w`` the marginal is ``Normal(0, w + sigma2)``.  The
    scaled quadratic-risk difference uses the conjugate closed forms
    ``B(MLE) = w`` and ``B(post. mean) = w sigma2 / (w + sigma2)``; the
    gradient energy is computed on a grid; the variance integral integrates the
    gradient energy over ``w`` in ``[v/2, v]`` by Gauss-Legendre.
    """
    if v <= 0 or sigma2 < 0:
        raise ValueError("need v > 0 and sigma2 >= 0")
    u, wts = np.polynomial.legendre.leggauss(nodes)
    lo, hi = 0.5 * v, v
    w = 0.5 * (hi - lo) * u + 0.5 * (hi + lo)
    risk = (w - w * sigma2 / (w + sigma2)) / w ** 2
    grad = np.empty_like(w)
    for k, wk in enumerate(w):
        s2 = wk + sigma2
        half = 12.0 * np.sqrt(2.0 * s2)
        g = Grid1D.symmetric(half, n)
        x = g.points
        root = GriddedFunction(g, (2 * np.pi * s2) ** -0.25 * np.exp(-x ** 2 / (4 * s2)))
        grad[k] = 4.0 * energy.energy_gradient_local(1.0, root).value
    integral = 2.0 * 0.5 * (hi - lo) * np.sum(wts * grad / 4.0)
    return GaussianReduction(v, sigma2, w, risk, grad, float(integral), float(gaussian_regret(v, sigma2)))
