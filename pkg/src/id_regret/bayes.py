"""Priors, marginals and predictive kernels for one-dimensional location models.

All integrals over the location parameter use a single quadrature rule: a
uniform lattice aligned with the observation grid on ``[-2L, 2L)`` plus a
short Gauss-Legendre rule for ``|theta| > 2L`` after the substitution
``theta = 2L u^(-q)``.  Because the same rule builds the marginal and the
joint ``J(x, y) = int p(x|theta) p(y|theta) pi(theta) dtheta``, the algebraic
identities between them hold to rounding error, and what the residual checks
measure is the consistency of the bookkeeping, including the mass each row
places beyond the grid.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import special
from scipy.linalg import blas

from . import levy
from .errors import BudgetError, GridError, TripletError
from .grid import Grid1D, GriddedFunction, TailModel, fit_power_tail

log = logging.getLogger(__name__)

MAX_KERNEL_N = 4096
FAR_NODES = 48
UNDERFLOW = 1e-300


class PriorKind(enum.Enum):
    UNIFORM = "uniform"
    GAUSSIAN = "gaussian"
    POWER_LAW = "power_law"
    POINT_MASS = "point_mass"
    STUDENT = "student"


@dataclass(frozen=True)
class PriorSpec:
    """Prior on the location parameter.

    ``PowerLaw`` has density ``(r0**2 + theta**2)**(-beta/2)`` and is left
    unnormalised (it is proper iff ``beta > d``).  ``Student`` is the same
    shape normalised to a probability density and requires ``beta > d``.
    ``Gaussian`` has variance ``sigma2``.
    """

    kind: PriorKind = PriorKind.UNIFORM
    sigma2: float | None = None
    beta: float | None = None
    r0: float = 1.0
    theta0: float = 0.0
    dimension: int = 1

    def __post_init__(self):
        if self.kind is PriorKind.GAUSSIAN and not (self.sigma2 is not None and self.sigma2 > 0):
            raise ValueError("Gaussian prior needs sigma2 > 0")
        if self.kind in (PriorKind.POWER_LAW, PriorKind.STUDENT):
            if self.beta is None or self.beta <= 0:
                raise ValueError("power-law prior needs beta > 0")
            if self.r0 <= 0:
                raise ValueError("core radius must be positive")
        if self.kind is PriorKind.STUDENT and not self.beta > self.dimension:
            raise ValueError("Student-like prior needs beta > d to be proper")

    @classmethod
    def uniform(cls) -> "PriorSpec":
        return cls(PriorKind.UNIFORM)

    @classmethod
    def gaussian(cls, sigma2: float) -> "PriorSpec":
        return cls(PriorKind.GAUSSIAN, sigma2=float(sigma2))

    @classmethod
    def power_law(cls, beta: float, r0: float = 1.0) -> "PriorSpec":
        return cls(PriorKind.POWER_LAW, beta=float(beta), r0=float(r0))

    @classmethod
    def point_mass(cls, theta0: float = 0.0) -> "PriorSpec":
        return cls(PriorKind.POINT_MASS, theta0=float(theta0))

    @classmethod
    def student(cls, beta: float, r0: float = 1.0) -> "PriorSpec":
        return cls(PriorKind.STUDENT, beta=float(beta), r0=float(r0))

    @property
    def symmetric(self) -> bool:
        return self.kind is not PriorKind.POINT_MASS or self.theta0 == 0

    @property
    def proper(self) -> bool:
        if self.kind is PriorKind.UNIFORM:
            return False
        if self.kind is PriorKind.POWER_LAW:
            return self.beta > self.dimension
        return True

    @property
    def normalized(self) -> bool:
        """True when the density integrates to one."""
        return self.kind in (PriorKind.GAUSSIAN, PriorKind.STUDENT, PriorKind.POINT_MASS)

    @property
    def tail_exponent(self) -> float | None:
        """``beta`` with ``pi(theta) ~ |theta|^-beta``; ``inf`` for light tails."""
        if self.kind is PriorKind.UNIFORM:
            return 0.0
        if self.kind in (PriorKind.POWER_LAW, PriorKind.STUDENT):
            return self.beta
        return np.inf

    def density(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        k = self.kind
        if k is PriorKind.UNIFORM:
            return np.ones_like(theta)
        if k is PriorKind.GAUSSIAN:
            return np.exp(-0.5 * theta ** 2 / self.sigma2) / np.sqrt(2 * np.pi * self.sigma2)
        if k in (PriorKind.POWER_LAW, PriorKind.STUDENT):
            out = (self.r0 ** 2 + theta ** 2) ** (-0.5 * self.beta)
            if k is PriorKind.STUDENT:
                # int (r0^2 + t^2)^(-b/2) dt = r0^(1-b) sqrt(pi) G((b-1)/2) / G(b/2)
                b = self.beta
                norm = self.r0 ** (1 - b) * np.sqrt(np.pi) * special.gamma(0.5 * (b - 1)) / special.gamma(0.5 * b)
                out = out / norm
            return out
        raise ValueError("point-mass prior has no density")

    def describe(self) -> str:
        k = self.kind
        if k is PriorKind.GAUSSIAN:
            return f"gaussian(sigma2={self.sigma2:g})"
        if k in (PriorKind.POWER_LAW, PriorKind.STUDENT):
            return f"{k.value}(beta={self.beta:g},r0={self.r0:g})"
        if k is PriorKind.POINT_MASS:
            return f"point_mass(theta0={self.theta0:g})"
        return k.value


@dataclass(frozen=True)
class MarginalDensity:
    """``M(x) = int p(x|theta) pi(theta) dtheta`` on a grid."""

    function: GriddedFunction
    proper: bool
    prior: PriorSpec

    @property
    def grid(self) -> Grid1D:
        return self.function.grid

    @property
    def values(self) -> np.ndarray:
        return self.function.values

    @property
    def tail_model(self) -> TailModel | None:
        return self.function.tail_model

    def sqrt(self) -> GriddedFunction:
        return self.function.sqrt()


@dataclass(frozen=True)
class PredictiveKernel:
    """Predictive density ``K(y|x)`` for ``x, y`` on a grid.

    ``kind == "translation"``: ``K(y|x) = q(y - x)`` with ``q`` stored at the
    ``2n`` offsets ``(k - n) * spacing``.  ``kind == "gridded"``: dense matrix
    ``K[i, k] = K(y_k | x_i)`` together with the mass of each row that falls
    outside the grid and a flag for rows whose marginal underflowed.
    """

    kind: str
    grid: Grid1D
    offsets: GriddedFunction | None = None
    matrix_values: np.ndarray | None = None
    off_grid: np.ndarray | None = None
    untrusted: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def translation(cls, grid: Grid1D, q: GriddedFunction, **meta) -> "PredictiveKernel":
        if q.grid.n != 2 * grid.n or not np.isclose(q.grid.spacing, grid.spacing):
            raise GridError("translation kernel must live on the difference grid")
        return cls("translation", grid, offsets=q, meta=dict(meta))

    @property
    def is_translation(self) -> bool:
        return self.kind == "translation"

    def row(self, i: int) -> np.ndarray:
        """Values of ``K(y_k | x_i)`` for ``k = 0..n-1``."""
        if self.is_translation:
            n = self.grid.n
            return self.offsets.values[n - i:2 * n - i]
        return self.matrix_values[i]

    def matrix(self) -> np.ndarray:
        if not self.is_translation:
            return self.matrix_values
        n = self.grid.n
        idx = n + np.arange(n)[None, :] - np.arange(n)[:, None]
        return self.offsets.values[idx]

    def row_mass(self) -> np.ndarray:
        """Total mass of each row, including the part beyond the grid."""
        if self.is_translation:
            return np.full(self.grid.n, self.offsets.mass())
        return self.matrix_values.sum(axis=1) * self.grid.spacing + self.off_grid

    def untrusted_rows(self) -> np.ndarray:
        if self.untrusted is None:
            return np.zeros(self.grid.n, dtype=bool)
        return self.untrusted


# ---------------------------------------------------------------------------
# location quadrature


@dataclass(frozen=True)
class _ThetaRule:
    """Quadrature nodes for the location parameter with precomputed likelihoods.

    ``lattice`` holds the model density at offsets ``(k - 4n) * dx`` so that
    ``p(x_i | theta_j)`` for lattice nodes is a lookup; ``far_f`` holds the
    tail-series likelihood for nodes beyond ``2L``.
    """

    grid: Grid1D
    lattice: np.ndarray
    tail: object
    theta: np.ndarray          # uniform nodes, (j - 2n) * dx
    weight: np.ndarray         # dx * pi(theta)
    far_theta: np.ndarray
    far_weight: np.ndarray     # quadrature weight times pi(theta)
    off_grid_uniform: np.ndarray
    off_grid_far: np.ndarray

    def likelihood_block(self, cols: slice) -> np.ndarray:
        """``p(x_i | theta_j)`` for all grid ``x_i`` and uniform nodes in ``cols``."""
        n = self.grid.n
        j = np.arange(self.theta.size)[cols]
        i = np.arange(n)
        # x_i - theta_j = (i - n/2 - j + 2n) dx; lattice index adds 4n
        idx = i[:, None] - j[None, :] + (4 * n + 2 * n - n // 2)
        return self.lattice[idx]

    def far_likelihood(self) -> np.ndarray:
        x = self.grid.points
        return self.tail(x[:, None] - self.far_theta[None, :])


def _model_lattice(model: levy.LevyTriplet, grid: Grid1D):
    if model.dimension != 1:
        raise TripletError("numeric marginals are one-dimensional")
    if model.is_lattice:
        raise TripletError("lattice (point-mass) models have no density")
    m = 8 * grid.n
    _, values, terms = levy.density_lattice(model, grid.spacing, m)
    # the lattice must carry essentially all the mass the grid can see
    tail = levy.tail_function(terms)
    return values, terms, tail


def _far_nodes(prior: PriorSpec, model_tail_exponent: float | None, reach: float):
    """Gauss-Legendre nodes for ``|theta| > reach`` under ``theta = reach u^(-q)``."""
    beta = prior.tail_exponent
    if model_tail_exponent is None or not np.isfinite(beta) or prior.kind is PriorKind.UNIFORM:
        return np.zeros(0), np.zeros(0)
    q = 1.0 / (model_tail_exponent - 1.0 + beta)
    u, w = np.polynomial.legendre.leggauss(FAR_NODES)
    u, w = 0.5 * (u + 1.0), 0.5 * w
    theta = reach * u ** (-q)
    jac = reach * q * u ** (-q - 1.0)
    weight = w * jac * prior.density(theta)
    return np.concatenate([-theta[::-1], theta]), np.concatenate([weight[::-1], weight])


def _off_grid_fraction(grid: Grid1D, lattice: np.ndarray, tail, theta_uniform, theta_far, terms):
    """``1 - int_grid p(y|theta) dy`` for every node."""
    n, dx = grid.n, grid.spacing
    csum = np.concatenate([[0.0], np.cumsum(lattice)]) * dx
    j = np.arange(theta_uniform.size)
    # grid y_k - theta_j = (k - n/2 - j + 2n) dx for k = 0..n-1
    start = -n // 2 - j + 2 * n + 4 * n
    inside = csum[start + n] - csum[start]
    off_uniform = 1.0 - inside
    if theta_far.size:
        # mass of the tail series over the grid, in closed form per term
        lo = grid.lower - theta_far
        hi = grid.upper - theta_far
        inside_far = np.zeros_like(theta_far)
        for p, right, left in terms:
            # each node sits beyond the grid, so y - theta keeps one sign
            a, b = np.abs(lo), np.abs(hi)
            coeff = np.where(theta_far > 0, left, right)
            inside_far += coeff * np.abs(a ** (1 - p) - b ** (1 - p)) / (p - 1)
        off_far = 1.0 - inside_far
    else:
        off_far = np.zeros(0)
    return off_uniform, off_far


def _theta_rule(model: levy.LevyTriplet, prior: PriorSpec, grid: Grid1D) -> _ThetaRule:
    if not grid.is_symmetric:
        raise GridError("location quadrature needs a grid symmetric about 0")
    lattice, terms, tail = _model_lattice(model, grid)
    n, dx = grid.n, grid.spacing
    theta = (np.arange(4 * n) - 2 * n) * dx
    weight = dx * prior.density(theta)
    p_tail = terms[0][0] if terms else None
    far_theta, far_weight = _far_nodes(prior, p_tail, 2 * grid.upper)
    off_u, off_f = _off_grid_fraction(grid, lattice, tail, theta, far_theta, terms)
    return _ThetaRule(grid, lattice, tail, theta, weight, far_theta, far_weight, off_u, off_f)


def _linear_correlate(lattice: np.ndarray, weights: np.ndarray, n: int) -> np.ndarray:
    """``sum_j lattice[i - j + c] * weights[j]`` for grid rows, by FFT."""
    size = lattice.size + weights.size
    size = 1 << int(np.ceil(np.log2(size)))
    conv = np.fft.irfft(np.fft.rfft(lattice, size) * np.fft.rfft(weights, size), size)
    # conv[m] = sum_j lattice[m - j] w[j]; row i needs m = i + 6n - n/2
    start = 6 * n - n // 2
    return conv[start:start + n]


def marginal_density(model: levy.LevyTriplet, prior: PriorSpec, grid: Grid1D) -> MarginalDensity:
    """Marginal of ``x`` under ``prior`` by convolution on the grid.

    Improper priors give sigma-finite marginals; a power tail fitted on the
    outer decade is attached whenever the marginal is not identically one.
    """
    if prior.kind is PriorKind.UNIFORM:
        return MarginalDensity(GriddedFunction.constant(grid, 1.0), False, prior)
    if prior.kind is PriorKind.POINT_MASS:
        f = GriddedFunction(grid, _shifted_model(model, grid, prior.theta0))
        return MarginalDensity(_with_fitted_tail(f, model), True, prior)
    rule = _theta_rule(model, prior, grid)
    values = _linear_correlate(rule.lattice, rule.weight, grid.n)
    if rule.far_theta.size:
        values = values + rule.far_likelihood() @ rule.far_weight
    values = np.clip(values, 0.0, None)
    f = _with_fitted_tail(GriddedFunction(grid, values), model, prior)
    # light tails legitimately underflow far out; those points are counted
    f.meta["underflow"] = int(np.sum(values < UNDERFLOW))
    marginal = MarginalDensity(f, prior.proper, prior)
    if prior.normalized:
        mass = f.mass()
        if abs(mass - 1.0) > 1e-6:
            log.warning("proper marginal has mass %.9f on the grid", mass)
        f.meta["mass"] = mass
    return marginal


def _tail_exponents(model: levy.LevyTriplet, prior: PriorSpec | None):
    """Known power-tail exponents of the marginal, or ``None`` to fit freely."""
    terms = levy._tail_terms(model, 1.0, 1.0)
    if not terms:
        return None
    exps = [p for p, _, _ in terms[:2]]
    beta = np.inf if prior is None else prior.tail_exponent
    if np.isfinite(beta):
        if beta <= exps[0]:
            return None
        exps.append(beta)
    return sorted(exps)[:3]


def _with_fitted_tail(f: GriddedFunction, model: levy.LevyTriplet, prior: PriorSpec | None = None):
    try:
        tail = fit_power_tail(f.grid, f.values, exponents=_tail_exponents(model, prior))
    except GridError:
        return f
    if not np.isfinite(tail.exponent) or tail.exponent <= 0:
        return f
    # light-tailed marginals have no meaningful power tail
    if tail.exponent > 12:
        return f
    return GriddedFunction(f.grid, f.values, tail, meta=dict(f.meta))


def _shifted_model(model: levy.LevyTriplet, grid: Grid1D, shift: float) -> np.ndarray:
    """``p(x - shift | 0)`` on the grid (shift need not be a grid point)."""
    exact = levy.closed_form_density(model, grid.points - shift)
    if exact is not None:
        return exact
    _, values, _ = levy._lattice_density(model, 1.0, grid.spacing, grid.n,
                                         offset=grid.lower + grid.n // 2 * grid.spacing - shift)
    return np.clip(values, 0.0, None)


# ---------------------------------------------------------------------------
# predictive kernels


def benchmark_predictive(model: levy.LevyTriplet, grid: Grid1D) -> PredictiveKernel:
    """Uniform-prior predictive ``K(y|x) = q(y - x)`` with ``q`` the symmetrised law."""
    sym = levy.symmetrize(model)
    wide = Grid1D.symmetric(2 * grid.upper, 2 * grid.n)
    q = levy.transition_density(sym, 1.0, wide)
    exact = levy.closed_form_density(sym, wide.points)
    if exact is not None:
        # keep far-tail values exact rather than at the inversion error floor
        q = q.with_values(exact)
    return PredictiveKernel.translation(grid, q, rule="benchmark")


def plugin_predictive(model: levy.LevyTriplet, grid: Grid1D) -> PredictiveKernel:
    """Plug-in rule ``K(y|x) = p(y|theta = x)``."""
    wide = Grid1D.symmetric(2 * grid.upper, 2 * grid.n)
    q = levy.model_density(model, wide)
    exact = levy.closed_form_density(model, wide.points)
    if exact is not None:
        q = q.with_values(exact)
    return PredictiveKernel.translation(grid, q, rule="plugin")


@dataclass(frozen=True)
class _Joint:
    joint: np.ndarray       # J(x_i, y_k)
    marginal: np.ndarray    # M(x_i) from the same rule
    off_grid: np.ndarray    # int_{y off grid} J(x_i, y) dy


def _joint(model: levy.LevyTriplet, prior: PriorSpec, grid: Grid1D) -> _Joint:
    n = grid.n
    if n > MAX_KERNEL_N:
        raise BudgetError(f"dense predictive kernels limited to n <= {MAX_KERNEL_N}, got {n}")
    rule = _theta_rule(model, prior, grid)
    keep = np.flatnonzero(rule.weight > 0)
    joint = np.zeros((n, n))
    marginal = np.zeros(n)
    off = np.zeros(n)
    block = 2048
    for start in range(0, keep.size, block):
        cols = keep[start:start + block]
        f = rule.likelihood_block(cols) if cols.size else np.zeros((n, 0))
        w = rule.weight[cols]
        live = np.any(f > 0, axis=0)
        f, w, cols = f[:, live], w[live], cols[live]
        if not cols.size:
            continue
        a = f * np.sqrt(w)[None, :]
        joint += blas.dsyrk(1.0, a, lower=0)
        marginal += f @ w
        off += f @ (w * rule.off_grid_uniform[cols])
    if rule.far_theta.size:
        f = rule.far_likelihood()
        w = rule.far_weight
        a = f * np.sqrt(w)[None, :]
        joint += blas.dsyrk(1.0, a, lower=0)
        marginal += f @ w
        off += f @ (w * rule.off_grid_far)
    joint = np.triu(joint) + np.triu(joint, 1).T
    return _Joint(joint, marginal, off)


def bayes_predictive(model: levy.LevyTriplet, prior: PriorSpec, grid: Grid1D) -> PredictiveKernel:
    """Bayes predictive ``K(y|x) = J(x, y) / M(x)`` for a general prior.

    The uniform prior returns the translation benchmark itself.
    """
    if prior.kind is PriorKind.UNIFORM:
        return benchmark_predictive(model, grid)
    n = grid.n
    if prior.kind is PriorKind.POINT_MASS:
        row = _shifted_model(model, grid, prior.theta0)
        inside = float(np.sum(row) * grid.spacing)
        return PredictiveKernel("gridded", grid, matrix_values=np.tile(row, (n, 1)),
                                off_grid=np.full(n, 1.0 - inside), untrusted=row < UNDERFLOW,
                                meta={"rule": "bayes", "prior": prior.describe(), "marginal": row})
    j = _joint(model, prior, grid)
    untrusted = j.marginal < UNDERFLOW
    safe = np.where(untrusted, 1.0, j.marginal)
    kernel = j.joint / safe[:, None]
    kernel[untrusted] = 0.0
    off = np.where(untrusted, 0.0, j.off_grid / safe)
    if untrusted.any():
        log.warning("%d kernel rows flagged untrusted (marginal underflow)", int(untrusted.sum()))
    return PredictiveKernel("gridded", grid, matrix_values=kernel, off_grid=off, untrusted=untrusted,
                            meta={"rule": "bayes", "prior": prior.describe(), "marginal": j.marginal,
                                  "joint_max": float(j.joint.max())})


def _kernel_and_marginal(model, prior, grid):
    kernel = bayes_predictive(model, prior, grid)
    if kernel.is_translation:
        marginal = np.ones(grid.n)
    elif "marginal" in kernel.meta:
        marginal = kernel.meta["marginal"]
    else:
        marginal = marginal_density(model, prior, grid).values
    return kernel, marginal


def detailed_balance_residual(model: levy.LevyTriplet, prior: PriorSpec, grid: Grid1D) -> float:
    """``max |M(x)K(y|x) - M(y)K(x|y)|`` relative to the largest joint value."""
    kernel, m = _kernel_and_marginal(model, prior, grid)
    k = kernel.matrix()
    joint = m[:, None] * k
    scale = float(np.max(np.abs(joint)))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(joint - joint.T)) / scale)


def invariance_residual(model: levy.LevyTriplet, prior: PriorSpec, grid: Grid1D) -> float:
    """Relative L1 residual of ``int K(x|y) M(y) dy - M(x)`` on the interior half.

    The integral includes the mass carried beyond the grid by the rows, as
    given by the same location quadrature, so for translation kernels the
    exact tail mass of the kernel is used.
    """
    kernel, m = _kernel_and_marginal(model, prior, grid)
    dx = grid.spacing
    k = kernel.matrix()
    pushed = (m[:, None] * k).sum(axis=0) * dx
    if kernel.is_translation:
        # rows are probability densities: the part of K(x|y) with y off grid is
        # the offset tail beyond the grid, evaluated on both sides
        q = kernel.offsets
        total = np.ones(grid.n) * q.mass()
        csum = np.concatenate([[0.0], np.cumsum(q.values)]) * dx
        n = grid.n
        i = np.arange(n)
        seen = csum[2 * n - i] - csum[n - i]
        pushed = pushed + (total - seen)
    else:
        pushed = pushed + m * kernel.off_grid
    mask = grid.interior_mask(0.5)
    num = np.sum(np.abs(pushed - m)[mask])
    den = np.sum(np.abs(m)[mask])
    return float(num / den)
