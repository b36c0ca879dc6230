"""Dirichlet-form energies of the benchmark process and related constructions.

The energy is normalised as ``E(f, f) = (2 pi)^-1 int psi(xi) |f_hat(xi)|^2 dxi``
so that a Gaussian benchmark with ``psi = v xi^2`` gives ``v int f'^2``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, interpolate, linalg, special

from . import levy
from .errors import ClassificationError, GridError, QuadratureError
from .grid import Grid1D, GriddedFunction

log = logging.getLogger(__name__)

DEFAULT_H = (0.5, 0.25, 0.125, 0.0625, 0.03125)
SPECTRAL_RTOL = 5e-3


class EnergyMethod(enum.Enum):
    SPECTRAL = "spectral"
    FINITE_H = "finite_h"
    GRADIENT_LOCAL = "gradient_local"
    RATE_LB = "rate_lb"
    QUADRATIC_FORM = "quadratic_form"


@dataclass
class EnergyEstimate:
    value: float
    method: EnergyMethod
    schedule: tuple = ()
    partials: tuple = ()
    tolerance: float = 0.0
    flags: list = field(default_factory=list)

    def __float__(self) -> float:
        return self.value


def _power_spectrum(f: GriddedFunction) -> np.ndarray:
    """``|f_hat|^2 dxi / (2 pi)`` on the FFT frequencies."""
    dx = f.grid.spacing
    return np.abs(np.fft.fft(f.values)) ** 2 * dx / f.grid.n


def energy_spectral(sym: levy.LevyTriplet, f: GriddedFunction, rtol: float = SPECTRAL_RTOL) -> EnergyEstimate:
    """Spectral energy with partial sums at 1/8, 1/4, 1/2 and all of the Nyquist band.

    Raises :class:`QuadratureError` when the last doubling of the cut-off
    still changes the value by more than ``rtol``.
    """
    psi = levy.characteristic_exponent(sym)
    xi = f.grid.frequencies()
    terms = psi(xi) * _power_spectrum(f)
    nyq = np.pi / f.grid.spacing
    cutoffs = (nyq / 8, nyq / 4, nyq / 2, np.inf)
    partials = tuple(float(np.sum(terms[np.abs(xi) <= c])) for c in cutoffs)
    value = partials[-1]
    scale = max(abs(value), 1e-300)
    if value > 1e-10 and abs(partials[-1] - partials[-2]) > rtol * scale:
        raise QuadratureError(f"spectral energy not converged: partials {partials[-2]:.6g} -> {partials[-1]:.6g}",
                              abs(partials[-1] - partials[-2]))
    return EnergyEstimate(max(value, 0.0), EnergyMethod.SPECTRAL, schedule=cutoffs, partials=partials,
                          tolerance=rtol)


def _neville(h: np.ndarray, q: np.ndarray) -> float:
    """Polynomial extrapolation of ``q(h)`` to ``h = 0``."""
    p = q.astype(float).copy()
    m = len(h)
    for k in range(1, m):
        for i in range(m - k):
            p[i] = (h[i + k] * p[i] - h[i] * p[i + 1]) / (h[i + k] - h[i])
    return float(p[0])


def energy_finite_h(sym: levy.LevyTriplet, f: GriddedFunction, h_schedule=DEFAULT_H) -> EnergyEstimate:
    """Rayleigh quotients ``<f - T_h f, f> / h`` and their extrapolation to ``h = 0``.

    Quotients are nondecreasing as ``h`` decreases; a violation beyond 1e-8
    signals a grid problem.
    """
    h = np.asarray(sorted(h_schedule, reverse=True), dtype=float)
    if h.size < 4 or h[0] > 1 or h[-1] <= 0:
        raise ValueError("h schedule needs at least 4 values in (0, 1]")
    psi = levy.characteristic_exponent(sym)(f.grid.frequencies())
    power = _power_spectrum(f)
    quotients = np.array([np.sum(-np.expm1(-hk * psi) / hk * power) for hk in h])
    if np.any(np.diff(quotients) < -1e-8 * max(1.0, abs(quotients[-1]))):
        raise GridError("finite-h quotients are not monotone in h; refine the grid")
    value = _neville(h, quotients)
    flags = []
    if value < quotients[-1]:
        flags.append("extrapolation below smallest-h quotient")
        value = float(quotients[-1])
    return EnergyEstimate(max(value, 0.0), EnergyMethod.FINITE_H, schedule=tuple(h),
                          partials=tuple(float(q) for q in quotients), flags=flags)


def energy_gradient_local(v: float, f: GriddedFunction) -> EnergyEstimate:
    """``v int f'^2`` with centred differences (Gaussian benchmark only)."""
    if v <= 0:
        raise ValueError("v must be positive")
    dx = f.grid.spacing
    d = (np.roll(f.values, -1) - np.roll(f.values, 1)) / (2 * dx)
    return EnergyEstimate(float(v * np.sum(d * d) * dx), EnergyMethod.GRADIENT_LOCAL)


# ---------------------------------------------------------------------------
# rate-function lower bound


def _spline_basis(mu: GriddedFunction, size: int) -> np.ndarray:
    """Cubic B-spline design matrix with interior knots at quantiles of ``mu``."""
    if size < 5:
        raise ValueError("family_size must be at least 5")
    grid = mu.grid
    x = grid.points
    weights = np.clip(mu.values, 0.0, None)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    levels = np.arange(1, size - 3) / (size - 3)
    interior = np.interp(levels, cdf, x)
    interior = np.unique(interior)
    lo, hi = grid.lower, grid.upper
    knots = np.concatenate([[lo] * 4, interior, [hi] * 4])
    return interpolate.BSpline.design_matrix(np.clip(x, lo, np.nextafter(hi, lo)), knots, 3).toarray()


def rate_function_lower_bound(sym: levy.LevyTriplet, mu: GriddedFunction, family_size: int = 12,
                              eps=(1e-2, 1e-4), sweeps: int = 200, seed: int = 0,
                              h: float = 0.01) -> EnergyEstimate:
    """Lower bound on ``I(mu) = sup_u int -(L u_eps)/u_eps dmu`` over a spline family.

    ``u = exp(B a)`` with ``B`` a cubic B-spline basis of ``family_size``
    functions, ``u_eps = u / max u + eps``, and ``L`` the censored generator
    on the grid of ``mu``.  Each ``eps`` runs coordinate ascent (finite-
    difference Newton steps with backtracking) for at most ``sweeps`` sweeps;
    ``seed`` fixes the coordinate order.  The best value is returned.
    """
    grid = mu.grid
    if grid.n > levy.MAX_DENSE_N:
        raise levy.BudgetError(f"rate-function bound limited to n <= {levy.MAX_DENSE_N}")
    op = levy.GeneratorOperator(sym, grid, h, boundary="censored")
    basis = _spline_basis(mu, family_size)
    weight = np.clip(mu.values, 0.0, None) * grid.spacing
    rng = np.random.default_rng(seed)

    def objective(a, e):
        g = basis @ a
        u = np.exp(g - g.max())
        return float(np.dot(weight, -(op @ u) / (u + e)))

    best, best_eps, history, flags = -np.inf, None, [], []
    for e in eps:
        a = np.zeros(basis.shape[1])
        current = objective(a, e)
        step = 1e-3
        for sweep in range(sweeps):
            start = current
            for k in rng.permutation(a.size):
                ek = np.zeros_like(a)
                ek[k] = step
                fp, fm = objective(a + ek, e), objective(a - ek, e)
                d1 = (fp - fm) / (2 * step)
                d2 = (fp - 2 * current + fm) / step ** 2
                move = -d1 / d2 if d2 < 0 else np.sign(d1) * 0.5
                move = float(np.clip(move, -2.0, 2.0))
                for _ in range(30):
                    trial = a.copy()
                    trial[k] += move
                    val = objective(trial, e)
                    if np.isfinite(val) and val >= current:
                        a, current = trial, val
                        break
                    move *= 0.5
            history.append(current)
            if not np.isfinite(current):
                flags.append("ascent diverged")
                break
            if current - start <= 1e-10 * max(1.0, abs(current)):
                break
        if current > best:
            best, best_eps = current, e
    return EnergyEstimate(max(best, 0.0), EnergyMethod.RATE_LB, schedule=tuple(eps),
                          partials=tuple(history), flags=flags + [f"best eps {best_eps:g}"])


# ---------------------------------------------------------------------------
# killed resolvents and Blyth sequences


def default_eta(grid: Grid1D) -> GriddedFunction:
    return GriddedFunction(grid, np.exp(-np.abs(grid.points)))


def killed_resolvent(sym: levy.LevyTriplet, eta: GriddedFunction, alpha: float,
                     grid: Grid1D | None = None, h: float = 0.01) -> GriddedFunction:
    """``u = G_alpha^eta eta`` solving ``(alpha I + diag(eta) - L) u = eta``.

    ``L`` is the killed generator, so the system matrix is an M-matrix and
    ``0 <= u <= 1``; values outside ``[0, 1 + 1e-6]`` raise with the residual.
    """
    grid = eta.grid if grid is None else grid
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if np.any(eta.values <= 0):
        raise ValueError("eta must be positive on the grid")
    gen = levy.generator_matrix(sym, grid, h)
    system = -gen
    system[np.diag_indices_from(system)] += alpha + eta.values
    u = linalg.solve(system, eta.values, assume_a="sym")
    residual = float(np.linalg.norm(system @ u - eta.values))
    if u.min() < -1e-6 or u.max() > 1 + 1e-6:
        raise QuadratureError(f"killed resolvent left [0, 1]: range [{u.min():.3g}, {u.max():.3g}]", residual)
    return GriddedFunction(grid, u, meta={"alpha": alpha, "residual": residual})


def dirichlet_form(sym: levy.LevyTriplet, f: GriddedFunction, h: float = 0.01) -> float:
    """``<f, -L f> dx`` with the killed generator."""
    gen = levy.GeneratorOperator(sym, f.grid, h)
    return float(-np.dot(f.values, gen @ f.values) * f.grid.spacing)


def blyth_sequence_energies(sym: levy.LevyTriplet, eta: GriddedFunction, n_list,
                            h: float = 0.01) -> list[EnergyEstimate]:
    """Energies of ``f_n = G_{1/n}^eta eta`` for each ``n`` in ``n_list``.

    Each estimate carries ``partials = (max f_n, <eta (1 - f_n), f_n>)``; the
    second is the resolvent upper bound on the energy of ``f_n``.
    """
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    grid = eta.grid
    gen = levy.generator_matrix(sym, grid, h)
    out = []
    for n in n_list:
        system = -gen
        system[np.diag_indices_from(system)] += 1.0 / n + eta.values
        u = linalg.solve(system, eta.values, assume_a="sym")
        if u.min() < -1e-6 or u.max() > 1 + 1e-6:
            raise QuadratureError(f"Blyth function left [0, 1] at n={n}",
                                  float(np.linalg.norm(system @ u - eta.values)))
        value = float(-u @ (gen @ u) * grid.spacing)
        bound = float(np.sum(eta.values * (1 - u) * u) * grid.spacing)
        out.append(EnergyEstimate(max(value, 0.0), EnergyMethod.QUADRATIC_FORM, schedule=(n,),
                                  partials=(float(u.max()), bound)))
    return out


# ---------------------------------------------------------------------------
# transience


def low_frequency_index(sym: levy.LevyTriplet) -> float:
    """Exponent ``a`` with ``psi(xi) ~ |xi|^a`` as ``xi -> 0``."""
    psi = levy.characteristic_exponent(sym)
    if psi.stable_index is not None and psi.gaussian_coefficient == 0:
        return float(psi.stable_index)
    return psi.low_frequency_exponent()


def is_transient(sym: levy.LevyTriplet) -> bool:
    """``int_{|xi| < 1} dxi / psi(xi) < infinity`` for a one-dimensional process."""
    return low_frequency_index(sym) < 1.0 - 1e-9


@dataclass
class TransienceWitness:
    """Reference function ``g`` and the quantities of the transience bound.

    ``lower = <g, sqrt(M)>`` and ``energy = E(sqrt(M))``.  ``g_potential`` is
    ``<g, R g>``; Cauchy-Schwarz in the extended Dirichlet space gives
    ``lower <= sqrt(g_potential * energy)``, which is what ``bound_holds``
    checks.  ``holds`` is the plain comparison ``0 < lower <= energy``.
    """

    g: GriddedFunction
    lower: float
    energy: float
    potential: GriddedFunction
    g_potential: float = np.nan

    @property
    def holds(self) -> bool:
        return 0 < self.lower <= self.energy

    @property
    def schwarz_bound(self) -> float:
        return float(np.sqrt(self.g_potential * self.energy))

    @property
    def bound_holds(self) -> bool:
        return 0 < self.lower <= self.schwarz_bound * (1 + 1e-6)


def _riesz_cells(alpha: float, kappa: float, dx: float, m: int) -> np.ndarray:
    """Cell averages of ``|z|^(alpha-1) / (2 kappa Gamma(alpha) cos(pi alpha / 2))``."""
    const = 1.0 / (2 * kappa * special.gamma(alpha) * np.cos(np.pi * alpha / 2))
    k = np.arange(m + 1)
    hi = (k + 0.5) * dx
    lo = np.maximum(k - 0.5, 0) * dx
    prim = lambda z: z ** alpha / alpha
    cells = (prim(hi) - prim(lo)) / dx
    cells[0] *= 2  # the central cell is symmetric around 0
    return const * cells


def _potential(values: np.ndarray, grid: Grid1D, tail, alpha: float, kappa: float) -> np.ndarray:
    """Riesz potential of a gridded function, with its tail beyond the grid."""
    n, dx = grid.n, grid.spacing
    cells = _riesz_cells(alpha, kappa, dx, n)
    kernel = np.concatenate([cells[:0:-1], cells])  # offsets -n..n
    size = 1 << int(np.ceil(np.log2(kernel.size + n)))
    conv = np.fft.irfft(np.fft.rfft(kernel, size) * np.fft.rfft(values, size), size)
    out = conv[n:2 * n] * dx
    if tail is not None:
        out = out + _outside_potential(grid, tail, alpha, kappa)
    return out


def transience_witness(sym: levy.LevyTriplet, marginal, grid: Grid1D | None = None) -> TransienceWitness:
    """Reference function ``g = sqrt(M) / max(R sqrt(M), 1)`` and its pairing.

    ``R`` is the potential operator of the benchmark process, applied as a
    linear convolution with the cell-averaged Riesz kernel plus the
    contribution of ``sqrt(M)`` beyond the grid from its tail model.
    """
    if not is_transient(sym):
        raise ClassificationError("benchmark process is recurrent; no transience witness exists")
    psi = levy.characteristic_exponent(sym)
    if not psi.is_pure_stable:
        raise ClassificationError("transience witness implemented for pure stable benchmarks")
    func = marginal.function if hasattr(marginal, "function") else marginal
    grid = func.grid if grid is None else grid
    root = func.sqrt()
    a, kappa = psi.stable_index, psi.kappa
    dx = grid.spacing
    tail = root.tail_model
    potential = _potential(root.values, grid, tail, a, kappa)
    g = root.values / np.maximum(potential, 1.0)
    lower = float(np.sum(g * root.values) * dx)
    if func.tail_model is not None and func.tail_model.exponent > 1:
        # beyond the grid the potential is below one, so g = sqrt(M) there
        lower += func.tail_model.mass_beyond(grid.lower, grid.upper)
    # <g, R g>; outside the grid g coincides with sqrt(M)
    g_pot = _potential(g, grid, tail, a, kappa)
    g_potential = float(np.sum(g * g_pot) * dx)
    if tail is not None and func.tail_model is not None and func.tail_model.exponent > 1:
        g_potential += func.tail_model.mass_beyond(grid.lower, grid.upper) * float(np.min(g_pot[[0, -1]]))
    energy = energy_spectral(sym, root).value
    if not 0 < lower <= energy:
        log.info("witness pairing %.6g exceeds the energy %.6g", lower, energy)
    return TransienceWitness(GriddedFunction(grid, g), lower, energy, GriddedFunction(grid, potential), g_potential)


def _outside_potential(grid: Grid1D, tail, alpha: float, kappa: float, nodes: int = 64) -> np.ndarray:
    """``int_{|y| > L} u(x - y) tail(y) dy`` at every grid point."""
    const = 1.0 / (2 * kappa * special.gamma(alpha) * np.cos(np.pi * alpha / 2))
    p = tail.exponent
    if p + 1 - alpha <= 1:
        raise QuadratureError("potential of the tail diverges", np.inf)
    x = grid.points
    u, w = np.polynomial.legendre.leggauss(nodes)
    u, w = 0.5 * (u + 1), 0.5 * w
    # y = L u^(-q) maps (0, 1] onto [L, inf); q chosen to flatten y^(alpha-1-p)
    q = 1.0 / (p - alpha)
    out = np.zeros_like(x)
    for side, edge in ((1.0, grid.upper), (-1.0, -grid.lower)):
        y = edge * u ** (-q)
        jac = edge * q * u ** (-q - 1)
        vals = np.abs(x[:, None] - side * y[None, :]) ** (alpha - 1) * tail(side * y)[None, :]
        out += const * (vals * (w * jac)[None, :]).sum(axis=1)
    return out
