"""Recurrence/admissibility classification, tail-index fits and the integral tail test."""

from __future__ import annotations

import enum
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special, stats

from .errors import ClassificationError, QuadratureError, TailFitError
from .grid import Grid1D, GriddedFunction, TailModel

log = logging.getLogger(__name__)

# rule identifiers echoed in every verdict
RULE_FINITE_VARIANCE = "finite-variance: recurrent iff d <= 2"
RULE_STABLE_D1 = "stable-tail d=1: recurrent iff alpha >= 1"
RULE_STABLE_MULTI = "stable-tail d>=2: transient"
RULE_TAIL_MET = "integral tail test: divergent, sufficient condition met"
RULE_TAIL_FAILED = "integral tail test: sufficient condition failed"
RULE_TAIL_OPEN = "integral tail test: indeterminate at this R_max"

SLOPE_MARGIN = 0.05
BOUNDARY_TOLERANCE = 0.05


class Recurrence(enum.Enum):
    RECURRENT = "Recurrent"
    TRANSIENT = "Transient"


class Admissibility(enum.Enum):
    ADMISSIBLE = "Admissible"
    INADMISSIBLE = "Inadmissible"


@dataclass(frozen=True)
class FiniteVariance:
    heuristic: bool = False

    def label(self) -> str:
        return "FiniteVariance" + ("(heuristic)" if self.heuristic else "")


@dataclass(frozen=True)
class StableTail:
    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ClassificationError(f"stable tail index must lie in (0, 2), got {self.alpha}")

    def label(self) -> str:
        return f"StableTail(alpha={self.alpha:g})"


@dataclass
class Verdict:
    """Classification outcome.  Admissibility always mirrors recurrence.

    ``status`` is ``established`` for the rule-based corollaries and for a
    divergent tail integral; ``not_established`` or ``indeterminate`` when
    the one-sided tail test does not decide.
    """

    d: int
    trait: str
    recurrence: Recurrence
    rule: str
    alpha: float | None = None
    beta: float | None = None
    status: str = "established"
    detail: dict = field(default_factory=dict)

    @property
    def admissibility(self) -> Admissibility:
        if self.recurrence is Recurrence.RECURRENT:
            return Admissibility.ADMISSIBLE
        return Admissibility.INADMISSIBLE

    @property
    def admissible(self) -> bool:
        return self.admissibility is Admissibility.ADMISSIBLE

    def row(self) -> dict:
        return {"d": self.d, "trait": self.trait, "recurrence": self.recurrence.value,
                "admissibility": self.admissibility.value, "rule": self.rule}

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(recurrence=self.recurrence.value, admissibility=self.admissibility.value)
        return out


def _verdict(d, trait, recurrent: bool, rule, **kw) -> Verdict:
    rec = Recurrence.RECURRENT if recurrent else Recurrence.TRANSIENT
    return Verdict(d, trait.label() if hasattr(trait, "label") else str(trait), rec, rule, **kw)


def classify_admissibility(d: int, trait) -> Verdict:
    """Rule-based verdict for a location model of dimension ``d``.

    Parameters
    ----------
    d : int
        Dimension, at least one.
    trait : FiniteVariance or StableTail
        Tail class of the observation noise.
    """
    if int(d) != d or d < 1:
        raise ClassificationError(f"dimension must be a positive integer, got {d}")
    d = int(d)
    if isinstance(trait, FiniteVariance):
        return _verdict(d, trait, d <= 2, RULE_FINITE_VARIANCE)
    if isinstance(trait, StableTail):
        if d == 1:
            return _verdict(d, trait, trait.alpha >= 1.0, RULE_STABLE_D1, alpha=trait.alpha)
        return _verdict(d, trait, False, RULE_STABLE_MULTI, alpha=trait.alpha)
    raise ClassificationError(f"unknown trait {trait!r}")


# tail index


@dataclass(frozen=True)
class TailFit:
    alpha: float
    stderr: float
    window: tuple
    r_squared: float

    def trait(self, boundary_tolerance: float = BOUNDARY_TOLERANCE):
        """Trait routed from the fit.

        Indices below ``2 - 3 stderr`` are stable-like; an index within
        ``boundary_tolerance`` (or three standard errors) of one is snapped to
        the boundary value.  Everything else is flagged finite-variance-like.
        """
        if self.alpha < 2 - 3 * self.stderr and self.alpha < 2:
            a = self.alpha
            if abs(a - 1.0) <= max(boundary_tolerance, 3 * self.stderr):
                a = 1.0
            return StableTail(float(np.clip(a, 1e-6, 2 - 1e-6)))
        return FiniteVariance(heuristic=True)


def _outside_mass(density: GriddedFunction, alpha_guess: float) -> float:
    if density.tail_model is not None and density.tail_model.exponent > 1:
        g = density.grid
        return density.tail_model.mass_beyond(g.lower, g.upper)
    # power-law continuation of the edge values
    v = density.values
    g = density.grid
    return float((v[-1] * g.upper + v[0] * abs(g.lower)) / max(alpha_guess, 1e-3))


def tail_index_estimate(density: GriddedFunction, window=(0.05, 0.5), points: int = 64) -> TailFit:
    """Tail index from the log-log slope of the two-sided survival function.

    ``S(x) = P(|X| > x)`` is accumulated from the outside of the grid inward,
    plus the mass beyond the grid (from the tail model or a power-law
    continuation).  The window is a fraction of the half-width of the grid
    and spans one decade by default.
    """
    g = density.grid
    lo, hi = window
    if hi / lo < 10 - 1e-9:
        raise TailFitError("fit window must span at least one decade")
    half = min(g.upper, -g.lower)
    x = g.points
    p = density.values
    dx = g.spacing
    # fold the density onto |x|
    pos = x >= 0
    radial_x = x[pos]
    folded = p[pos] + np.interp(-radial_x, x, p, left=0.0, right=0.0)
    folded[0] = p[pos][0]
    # survival from the outside in (trapezoid)
    seg = 0.5 * (folded[1:] + folded[:-1]) * dx
    inner = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    xs = np.geomspace(lo * half, hi * half, points)
    alpha = 1.0
    fit = None
    for _ in range(4):
        surv = np.interp(xs, radial_x, inner) + _outside_mass(density, alpha)
        if np.any(surv <= 0) or not np.all(np.isfinite(surv)):
            raise TailFitError("survival function vanishes inside the fit window")
        fit = stats.linregress(np.log(xs), np.log(surv))
        new = -fit.slope
        if abs(new - alpha) < 1e-8:
            break
        alpha = new
    r2 = fit.rvalue ** 2
    if r2 < 0.95 or not np.isfinite(r2):
        raise TailFitError(f"log-log survival fit rejected (R^2 = {r2:.3f})")
    return TailFit(float(-fit.slope), float(fit.stderr), (lo * half, hi * half), float(r2))


def classify_density(density: GriddedFunction, d: int = 1) -> tuple[Verdict, TailFit | None]:
    """Route a noise density through the tail-index fit into the rule table."""
    try:
        fit = tail_index_estimate(density)
    except TailFitError as exc:
        log.info("tail fit rejected (%s); taking the finite-variance route", exc)
        return classify_admissibility(d, FiniteVariance(heuristic=True)), None
    v = classify_admissibility(d, fit.trait())
    v.detail["alpha_hat"] = fit.alpha
    v.detail["stderr"] = fit.stderr
    return v, fit


# integral tail test


@dataclass(frozen=True)
class ClosedExponent:
    """Marginal with ``M(r) ~ r^-beta``."""

    beta: float

    def __call__(self, r):
        return (1.0 + np.asarray(r, dtype=float) ** 2) ** (-0.5 * self.beta)


@dataclass(frozen=True)
class RadialProfile:
    """Radial marginal profile tabulated on ``r >= 0`` with a power tail beyond."""

    function: GriddedFunction

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        f = self.function
        g = f.grid
        inside = np.interp(r, g.points, f.values)
        tail = f.tail_model
        if tail is None:
            return np.where(r <= g.upper, inside, np.nan)
        return np.where(r <= g.upper, inside, tail(np.maximum(r, g.upper)))

    @classmethod
    def from_marginal(cls, marginal) -> "RadialProfile":
        """Radial profile of a symmetric one-dimensional marginal density."""
        func = marginal.function if hasattr(marginal, "function") else marginal
        g = func.grid
        pos = g.points >= 0
        pts = g.points[pos]
        grid = Grid1D(float(pts[0]), float(pts[-1]) + g.spacing, int(pos.sum()))
        return cls(GriddedFunction(grid, func.values[pos], func.tail_model))


def _tail_integrand(profile, d: int, alpha: float):
    return lambda r: 1.0 / (profile(r) * r ** (d - alpha + 1))


def _j_integral(profile, d, alpha, R_list, per_decade: int = 64) -> np.ndarray:
    """``J(R) = int_1^R dr / (M(r) r^(d - alpha + 1))`` at each ``R``, by Gauss-Legendre in log r."""
    f = _tail_integrand(profile, d, alpha)
    u, w = np.polynomial.legendre.leggauss(8)
    out = []
    total = 0.0
    prev = 1.0
    for R in R_list:
        if R < prev:
            raise QuadratureError("R ladder must be increasing", np.nan)
        segs = max(1, int(np.ceil(per_decade * np.log10(R / prev)))) if R > prev else 0
        edges = np.geomspace(prev, R, segs + 1) if segs else np.array([prev])
        for a, b in zip(edges[:-1], edges[1:]):
            ta, tb = np.log(a), np.log(b)
            t = 0.5 * (tb - ta) * u + 0.5 * (tb + ta)
            r = np.exp(t)
            total += 0.5 * (tb - ta) * np.sum(w * f(r) * r)
        out.append(total)
        prev = R
    J = np.array(out)
    if not np.all(np.isfinite(J)) or np.any(np.diff(J) < 0):
        raise QuadratureError("tail integral ladder is not monotone", float(np.nanmin(np.diff(J))) if J.size > 1 else np.nan)
    return J


def aharmonic_tail_test(d: int, alpha: float, marginal, R_max: float = 1e6, method: str | None = None) -> Verdict:
    """Integral tail test for a prior whose marginal decays like ``marginal``.

    ``ClosedExponent(beta)`` uses the exact rule ``beta >= d - alpha``
    (valid for ``beta <= d``).  A ``RadialProfile`` or a closed exponent with
    ``method="numeric"`` evaluates ``J`` on a geometric ladder up to
    ``R_max`` and reads the log-slope of its decade increments over the top
    two decades: at least ``0.05`` is divergent, at most ``-0.05`` is
    convergent, anything between is indeterminate.

    The test is sufficient only, so a convergent integral yields status
    ``not_established`` on the inadmissible side.
    """
    if not 0 < alpha < 2:
        raise ClassificationError("alpha must lie in (0, 2)")
    d = int(d)
    trait = StableTail(alpha)
    numeric = method == "numeric" or not isinstance(marginal, ClosedExponent)
    if not numeric:
        beta = marginal.beta
        if beta > d:
            raise ClassificationError("closed-exponent rule needs beta <= d; use the numeric route")
        divergent = beta >= d - alpha
        return _verdict(d, trait, divergent, RULE_TAIL_MET if divergent else RULE_TAIL_FAILED,
                        alpha=alpha, beta=beta, status="established" if divergent else "not_established",
                        detail={"route": "closed", "exponent": beta - d + alpha - 1})
    if R_max < 1e3:
        raise ClassificationError("numeric route needs R_max >= 1e3 for a two-decade slope")
    top = np.log10(R_max)
    ladder = 10.0 ** np.arange(top - 3, top + 1e-9, 0.25)
    J = _j_integral(marginal, d, alpha, ladder)
    inc = np.diff(J)
    keep = ladder[1:] >= R_max / 100 * (1 - 1e-9)
    if np.any(inc[keep] <= 0):
        raise QuadratureError("tail integral increments vanish", float(inc[keep].min()))
    slope = stats.linregress(np.log(ladder[1:][keep]), np.log(inc[keep])).slope
    beta = getattr(marginal, "beta", None)
    detail = {"route": "numeric", "slope": float(slope), "J": J.tolist(), "R": ladder.tolist()}
    if slope >= SLOPE_MARGIN:
        return _verdict(d, trait, True, RULE_TAIL_MET, alpha=alpha, beta=beta, detail=detail)
    if slope <= -SLOPE_MARGIN:
        return _verdict(d, trait, False, RULE_TAIL_FAILED, alpha=alpha, beta=beta,
                        status="not_established", detail=detail)
    return _verdict(d, trait, False, RULE_TAIL_OPEN, alpha=alpha, beta=beta,
                    status="indeterminate", detail=detail)


# capacity probe


def radial_kernel(d: int, alpha: float, r, s) -> np.ndarray:
    """``int int |x - z|^-(d + alpha)`` over the spheres of radii ``r`` and ``s``."""
    r = np.asarray(r, dtype=float)
    s = np.asarray(s, dtype=float)
    a = alpha
    with np.errstate(divide="ignore", invalid="ignore"):
        if d == 1:
            return 2.0 * (np.abs(r - s) ** (-1 - a) + (r + s) ** (-1 - a))
        if d == 2:
            big = r ** 2 + s ** 2
            p = 0.5 * (2 + a)
            z = (2 * r * s / big) ** 2
            ang = 2 * np.pi * big ** (-p) * special.hyp2f1(0.5 * p, 0.5 * (p + 1), 1.0, z)
            return 2 * np.pi * r * s * ang
        if d == 3:
            return 8 * np.pi ** 2 * r * s / (1 + a) * (np.abs(r - s) ** (-1 - a) - (r + s) ** (-1 - a))
    raise ClassificationError("capacity kernel implemented for d in {1, 2, 3}")


def _diagonal_coefficient(d: int, alpha: float) -> float:
    """``A`` with ``radial_kernel(r, r + delta) ~ A r^(d-1) |delta|^-(1+alpha)``."""
    sphere = 2 * np.pi ** (d / 2) / special.gamma(d / 2)
    c = np.pi ** ((d - 1) / 2) * special.gamma((1 + alpha) / 2) / special.gamma((d + alpha) / 2)
    return sphere * c


@dataclass(frozen=True)
class CapacityRecord:
    R: float
    energy: float
    J: float

    @property
    def product(self) -> float:
        return self.energy * self.J


def capacity_profile(d: int, alpha: float, marginal, R_list, nodes_per_unit: int = 40,
                     inner: float = 1e-3, outer_factor: float = 1e4) -> list[CapacityRecord]:
    """First-order nonlocal energy of the radial test functions ``u_R``.

    ``u_R`` is one on the unit ball, zero beyond ``R`` and in between the
    normalised tail integral ``int_r^R / int_1^R``.  The energy
    ``(1/2) int int (u(x) - u(z))^2 |x - z|^-(d+alpha) sqrt(M(x) M(z))``
    is reduced to a radial double integral and evaluated by a midpoint
    product rule in ``log r``; the diagonal cell is integrated with the
    local expansion of the kernel.
    """
    R_list = np.asarray(R_list, dtype=float)
    if np.any(np.diff(R_list) <= 0) or R_list[0] <= 1:
        raise ClassificationError("R_list must be increasing and above one")
    f = _tail_integrand(marginal, d, alpha)
    J_all = _j_integral(marginal, d, alpha, R_list)
    diag_a = _diagonal_coefficient(d, alpha)
    records = []
    for R, J in zip(R_list, J_all):
        t_lo, t_hi = np.log(inner), np.log(R * outer_factor)
        n = int(np.ceil((t_hi - t_lo) * nodes_per_unit))
        dt = (t_hi - t_lo) / n
        t = t_lo + (np.arange(n) + 0.5) * dt
        r = np.exp(t)
        h = r * dt
        # v_R on the nodes: cumulative tail integral from r to R
        v = np.zeros(n)
        mid = (r > 1) & (r < R)
        if np.any(mid):
            rm = r[mid]
            # integrate f from r to R by Gauss-Legendre in log r on each node interval
            u, w = np.polynomial.legendre.leggauss(8)
            ta = np.log(rm)
            tb = np.log(R)
            tt = 0.5 * (tb - ta)[:, None] * u[None, :] + 0.5 * (tb + ta)[:, None]
            rr = np.exp(tt)
            v[mid] = (0.5 * (tb - ta) * np.sum(w * f(rr) * rr, axis=1)) / J
        v[r <= 1] = 1.0
        m = marginal(r)
        sq = np.sqrt(m)
        W = radial_kernel(d, alpha, r[:, None], r[None, :])
        np.fill_diagonal(W, 0.0)
        diff2 = (v[:, None] - v[None, :]) ** 2
        off = 0.5 * np.sum(diff2 * W * (sq[:, None] * sq[None, :]) * (h[:, None] * h[None, :]))
        # diagonal cells: (1/2) v'^2 M A r^(d-1) int_{|delta|<h/2} |delta|^(1-alpha)
        dv = np.where(mid, -f(r) / J, 0.0)
        cell = 2 * (0.5 * h) ** (2 - alpha) / (2 - alpha)
        diag = 0.5 * np.sum(dv ** 2 * m * diag_a * r ** (d - 1) * cell * h)
        energy = float(off + diag)
        if not np.isfinite(energy):
            raise QuadratureError("capacity energy is not finite", energy)
        records.append(CapacityRecord(float(R), energy, float(J)))
    return records


# catalog


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    group: str           # "finite-variance" or "heavy-tail"
    distribution: object | None = None   # frozen scipy distribution for heavy tails


def catalog() -> list[CatalogEntry]:
    """Base noise distributions of the classification table."""
    fv = [CatalogEntry(n, "finite-variance") for n in
          ("Skellam", "Laplace", "VarianceGamma", "NIG", "Logistic", "Weibull(k=0.5)", "Student-t(nu=3)")]
    heavy = [
        CatalogEntry("Student-t(nu=1.5)", "heavy-tail", stats.t(1.5)),
        CatalogEntry("F(5,3)", "heavy-tail", stats.f(5, 3)),
        CatalogEntry("Pareto(b=1.5)", "heavy-tail", stats.pareto(1.5)),
        CatalogEntry("half-Cauchy", "heavy-tail", stats.halfcauchy()),
    ]
    return fv + heavy


def _catalog_density(dist, half_width: float = 4000.0, n: int = 1 << 16) -> GriddedFunction:
    g = Grid1D.symmetric(half_width, n)
    x = g.points
    vals = dist.pdf(x)
    # exact tail model from the survival function at the grid edge
    edge = g.upper
    sf = dist.sf(edge)
    a = edge * dist.pdf(edge) / sf
    tail = TailModel(float(a + 1), float(sf * a * edge ** a), 0.0)
    return GriddedFunction(g, vals, tail)


def catalog_report(dims=(1, 2, 3)) -> list[Verdict]:
    """Classification table: every catalog entry at each dimension in ``dims``."""
    rows = []
    for entry in catalog():
        fit = None
        if entry.group == "heavy-tail":
            fit = tail_index_estimate(_catalog_density(entry.distribution))
        for d in dims:
            if fit is None:
                v = classify_admissibility(d, FiniteVariance())
            else:
                v = classify_admissibility(d, fit.trait())
                v.detail.update(alpha_hat=fit.alpha, stderr=fit.stderr)
            v.detail["distribution"] = entry.name
            v.trait = f"{entry.name}:{v.trait}"
            rows.append(v)
    return rows
