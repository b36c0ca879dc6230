"""Infinitely divisible triplets and the symmetric benchmark semigroup.

A location model is ``X = theta + eps`` with ``eps ~ ID(A, nu, gamma)``.  The
uniform-prior predictive kernel is the time-1 law of the symmetrised triplet
``(2A, nu(dx) + nu(-dx), 0)``; everything in this module about semigroups,
resolvents and generators refers to that symmetric process.

Conventions
-----------
* The Gaussian part contributes ``A * xi**2 / 2`` to the exponent, so the
  symmetrised Gaussian ``ID(2v, 0, 0)`` has ``psi(xi) = v * xi**2``.
* ``Cauchy(c)`` is parametrised by the Cauchy *scale*: ``nu = c/pi |x|^-2``.
* ``SymmetricStable(alpha, c)`` has intensity ``c`` per side,
  ``nu = c |x|^(-1-alpha)``; :func:`stable_measure` builds it from a scale.
* The centre is the location in each family's natural parametrisation
  (uncompensated for finite-variation measures, fully compensated for
  stable ``alpha > 1``).
"""

from __future__ import annotations

import enum
import functools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, linalg, optimize, special

from .errors import BudgetError, GridError, QuadratureError, TripletError
from .grid import Grid1D, GriddedFunction, TailModel

log = logging.getLogger(__name__)

MAX_DENSE_N = 4096
MAX_FFT_SIZE = 2 ** 22


class LevyFamily(enum.Enum):
    NONE = "none"
    CAUCHY = "cauchy"
    SYMMETRIC_STABLE = "symmetric_stable"
    ASYMMETRIC_STABLE = "asymmetric_stable"
    EXPONENTIAL_JUMP = "exponential"
    GAMMA_JUMP = "gamma"
    INVERSE_GAUSSIAN_JUMP = "inverse_gaussian"
    GUMBEL_JUMP = "gumbel"
    POINT_MASS = "point_mass"


_STABLE = (LevyFamily.CAUCHY, LevyFamily.SYMMETRIC_STABLE, LevyFamily.ASYMMETRIC_STABLE)
_ONE_SIDED = (LevyFamily.EXPONENTIAL_JUMP, LevyFamily.GAMMA_JUMP,
              LevyFamily.INVERSE_GAUSSIAN_JUMP, LevyFamily.GUMBEL_JUMP, LevyFamily.POINT_MASS)


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Parametric Levy measure.

    Only the fields relevant to ``family`` are used: ``alpha`` and ``c`` for
    the stable families (``c1``/``c2`` for the asymmetric one), ``rate`` and
    ``shape``/``c`` for the jump families, ``rate`` and ``atom`` for a point
    mass.  ``two_sided`` marks the reflection-sum of a one-sided base measure.
    """

    family: LevyFamily = LevyFamily.NONE
    alpha: float | None = None
    c: float | None = None
    c1: float | None = None
    c2: float | None = None
    rate: float | None = None
    shape: float | None = None
    atom: float | None = None
    two_sided: bool = False

    def __post_init__(self):
        f = self.family
        if f in (LevyFamily.SYMMETRIC_STABLE, LevyFamily.ASYMMETRIC_STABLE):
            if self.alpha is None or not 0 < self.alpha < 2:
                raise TripletError(f"stable index must lie in (0, 2), got {self.alpha}")
        positive = {
            LevyFamily.CAUCHY: ("c",),
            LevyFamily.SYMMETRIC_STABLE: ("c",),
            LevyFamily.ASYMMETRIC_STABLE: (),
            LevyFamily.EXPONENTIAL_JUMP: ("rate",),
            LevyFamily.GAMMA_JUMP: ("shape", "c"),
            LevyFamily.INVERSE_GAUSSIAN_JUMP: ("c", "rate"),
            LevyFamily.GUMBEL_JUMP: (),
            LevyFamily.POINT_MASS: ("rate", "atom"),
            LevyFamily.NONE: (),
        }[f]
        for name in positive:
            value = getattr(self, name)
            if value is None or not value > 0:
                raise TripletError(f"{f.value}: parameter {name} must be positive, got {value}")
        if f is LevyFamily.ASYMMETRIC_STABLE:
            c1, c2 = self.c1 or 0.0, self.c2 or 0.0
            if c1 < 0 or c2 < 0 or c1 + c2 <= 0:
                raise TripletError("asymmetric stable needs c1, c2 >= 0 with c1 + c2 > 0")

    @property
    def is_trivial(self) -> bool:
        return self.family is LevyFamily.NONE

    @property
    def is_even(self) -> bool:
        return self.family in (LevyFamily.NONE, LevyFamily.CAUCHY,
                               LevyFamily.SYMMETRIC_STABLE) or self.two_sided

    @property
    def stable_index(self) -> float | None:
        if self.family is LevyFamily.CAUCHY:
            return 1.0
        if self.family in (LevyFamily.SYMMETRIC_STABLE, LevyFamily.ASYMMETRIC_STABLE):
            return float(self.alpha)
        return None

    @property
    def stable_intensities(self) -> tuple[float, float]:
        """Right/left intensities of a stable measure ``c_pm |x|^(-1-alpha)``."""
        if self.family is LevyFamily.CAUCHY:
            return self.c / np.pi, self.c / np.pi
        if self.family is LevyFamily.SYMMETRIC_STABLE:
            return self.c, self.c
        if self.family is LevyFamily.ASYMMETRIC_STABLE:
            return self.c1 or 0.0, self.c2 or 0.0
        raise TripletError(f"{self.family.value} is not a stable measure")


def cauchy_measure(c: float) -> LevyMeasureSpec:
    return LevyMeasureSpec(LevyFamily.CAUCHY, c=c)


def stable_measure(alpha: float, scale: float = 1.0) -> LevyMeasureSpec:
    """Symmetric stable measure whose law has exponent ``(scale |xi|)**alpha``."""
    return LevyMeasureSpec(LevyFamily.SYMMETRIC_STABLE, alpha=alpha,
                           c=scale ** alpha / stable_constant(alpha))


def asymmetric_stable_measure(alpha: float, c1: float, c2: float) -> LevyMeasureSpec:
    return LevyMeasureSpec(LevyFamily.ASYMMETRIC_STABLE, alpha=alpha, c1=c1, c2=c2)


@functools.lru_cache(maxsize=None)
def stable_constant(alpha: float) -> float:
    """``K(alpha) = int (1 - cos u) |u|^(-1-alpha) du`` over the real line.

    Computed once per ``alpha`` by adaptive quadrature (relative tolerance
    1e-9) and cached.
    """
    alpha = float(alpha)
    if not 0 < alpha < 2:
        raise TripletError(f"stable index must lie in (0, 2), got {alpha}")
    # 1 - cos u = 2 sin(u/2)**2 avoids cancellation near the origin
    near, err1 = integrate.quad(lambda u: 2 * np.sin(0.5 * u) ** 2 * u ** (-1 - alpha), 0.0, 1.0,
                                epsabs=0, epsrel=1e-11, limit=200)
    # int_1^inf cos(u) u^(-1-a) du, integrated by parts into an absolutely
    # convergent sine integral that QAWF handles well
    sine, err2 = integrate.quad(lambda u: u ** (-2 - alpha), 1.0, np.inf, weight="sin", wvar=1.0,
                                epsrel=1e-9, limlst=200)
    far_cos = -np.sin(1.0) + (1 + alpha) * sine
    value = 2.0 * (near + 1.0 / alpha - far_cos)
    residual = 2.0 * (err1 + (1 + alpha) * err2)
    # QAWF error estimates are pessimistic by several orders of magnitude
    if residual > 1e-6 * value:
        raise QuadratureError(f"stable constant for alpha={alpha} did not converge", residual)
    return value


@dataclass(frozen=True)
class LevyTriplet:
    gaussian_variance: float = 0.0
    levy_measure: LevyMeasureSpec = LevyMeasureSpec()
    center: float = 0.0
    dimension: int = 1
    symmetrized: bool = False

    def __post_init__(self):
        if self.gaussian_variance < 0:
            raise TripletError("Gaussian variance must be nonnegative")
        if self.gaussian_variance == 0 and self.levy_measure.is_trivial:
            raise TripletError("degenerate triplet: no Gaussian part and no jumps")
        if self.dimension < 1:
            raise TripletError("dimension must be a positive integer")
        if self.symmetrized and (self.center != 0 or not self.levy_measure.is_even):
            raise TripletError("a symmetrised triplet has centre 0 and an even measure")

    @property
    def is_lattice(self) -> bool:
        return self.gaussian_variance == 0 and self.levy_measure.family is LevyFamily.POINT_MASS


def gaussian_model(v: float, center: float = 0.0, dimension: int = 1) -> LevyTriplet:
    return LevyTriplet(gaussian_variance=v, center=center, dimension=dimension)


def cauchy_model(c: float = 1.0, center: float = 0.0, dimension: int = 1) -> LevyTriplet:
    return LevyTriplet(levy_measure=cauchy_measure(c), center=center, dimension=dimension)


def stable_model(alpha: float, scale: float = 1.0, center: float = 0.0) -> LevyTriplet:
    return LevyTriplet(levy_measure=stable_measure(alpha, scale), center=center)


def symmetrize(triplet: LevyTriplet) -> LevyTriplet:
    """Return ``(2A, nu(dx) + nu(-dx), 0)``.

    Applied once, to a model triplet; passing an already symmetrised triplet
    raises so that ``A`` is never doubled twice.
    """
    if triplet.symmetrized:
        raise TripletError("triplet is already symmetrised")
    nu = triplet.levy_measure
    f = nu.family
    if f is LevyFamily.NONE:
        sym_nu = nu
    elif f is LevyFamily.CAUCHY:
        sym_nu = replace(nu, c=2.0 * nu.c)
    elif f is LevyFamily.SYMMETRIC_STABLE:
        sym_nu = replace(nu, c=2.0 * nu.c)
    elif f is LevyFamily.ASYMMETRIC_STABLE:
        sym_nu = LevyMeasureSpec(LevyFamily.SYMMETRIC_STABLE, alpha=nu.alpha,
                                 c=(nu.c1 or 0.0) + (nu.c2 or 0.0))
    elif nu.two_sided:
        raise TripletError(f"{f.value} measure is already two-sided; symmetrise the model triplet")
    else:
        sym_nu = replace(nu, two_sided=True)
    return LevyTriplet(gaussian_variance=2.0 * triplet.gaussian_variance, levy_measure=sym_nu,
                       center=0.0, dimension=triplet.dimension, symmetrized=True)


# ---------------------------------------------------------------------------
# Levy densities and exponents


def levy_density(nu: LevyMeasureSpec, x):
    """Density of ``nu`` (continuous families only)."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    f = nu.family
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if f in _STABLE:
            right, left = nu.stable_intensities
            a = nu.stable_index
            out = np.where(x > 0, right, left) * ax ** (-1 - a)
        elif f is LevyFamily.EXPONENTIAL_JUMP:
            out = np.exp(-nu.rate * ax) / ax
        elif f is LevyFamily.GAMMA_JUMP:
            out = nu.shape * np.exp(-ax / nu.c) / ax
        elif f is LevyFamily.INVERSE_GAUSSIAN_JUMP:
            out = nu.c * ax ** -1.5 * np.exp(-nu.rate * ax)
        elif f is LevyFamily.GUMBEL_JUMP:
            out = np.exp(-ax) / (ax * -np.expm1(-ax))
        elif f is LevyFamily.NONE:
            out = np.zeros_like(ax)
        else:
            raise TripletError(f"{f.value} has no Lebesgue density")
        if f in _ONE_SIDED and not nu.two_sided:
            out = np.where(x > 0, out, 0.0)
    return np.where(x == 0, 0.0, out)


def _jump_exponent(nu: LevyMeasureSpec, xi: np.ndarray) -> np.ndarray:
    """Complex jump part of ``log E exp(i xi eps)``."""
    f = nu.family
    xi = np.asarray(xi, dtype=float)
    if nu.two_sided or f in (LevyFamily.NONE, LevyFamily.CAUCHY, LevyFamily.SYMMETRIC_STABLE):
        return -_even_jump_exponent(nu, xi) + 0j
    if f is LevyFamily.ASYMMETRIC_STABLE:
        a = nu.alpha
        c1, c2 = nu.c1 or 0.0, nu.c2 or 0.0
        ax = np.abs(xi)
        if a == 1.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                drift = np.where(ax > 0, xi * np.log(ax), 0.0)
            return -(c1 + c2) * (np.pi / 2) * ax - 1j * (c1 - c2) * drift
        phase = np.exp(-1j * np.pi * a / 2 * np.sign(xi))
        return special.gamma(-a) * ax ** a * (c1 * phase + c2 * np.conj(phase))
    if f is LevyFamily.EXPONENTIAL_JUMP:
        return -np.log(1 - 1j * xi / nu.rate)
    if f is LevyFamily.GAMMA_JUMP:
        return -nu.shape * np.log(1 - 1j * nu.c * xi)
    if f is LevyFamily.INVERSE_GAUSSIAN_JUMP:
        return -2 * np.sqrt(np.pi) * nu.c * (np.sqrt(nu.rate - 1j * xi) - np.sqrt(nu.rate))
    if f is LevyFamily.GUMBEL_JUMP:
        return special.loggamma(1 - 1j * xi)
    if f is LevyFamily.POINT_MASS:
        return nu.rate * (np.exp(1j * nu.atom * xi) - 1)
    raise TripletError(f"unsupported family {f}")


def _even_jump_exponent(nu: LevyMeasureSpec, xi: np.ndarray) -> np.ndarray:
    """``int (1 - cos xi x) nu(dx)`` for an even measure, in closed form."""
    f = nu.family
    ax = np.abs(np.asarray(xi, dtype=float))
    if f is LevyFamily.NONE:
        return np.zeros_like(ax)
    if f is LevyFamily.CAUCHY:
        return nu.c * ax
    if f is LevyFamily.SYMMETRIC_STABLE:
        return nu.c * stable_constant(nu.alpha) * ax ** nu.alpha
    if not nu.two_sided:
        raise TripletError(f"{f.value} measure is not even")
    # two-sided: twice the real part of the one-sided exponent
    if f is LevyFamily.EXPONENTIAL_JUMP:
        return np.log1p((ax / nu.rate) ** 2)
    if f is LevyFamily.GAMMA_JUMP:
        return nu.shape * np.log1p((nu.c * ax) ** 2)
    if f is LevyFamily.INVERSE_GAUSSIAN_JUMP:
        lam = nu.rate
        re_sqrt = np.sqrt(0.5 * (np.hypot(lam, ax) + lam))
        return 4 * np.sqrt(np.pi) * nu.c * (re_sqrt - np.sqrt(lam))
    if f is LevyFamily.GUMBEL_JUMP:
        z = np.pi * ax
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(z < 1e-4, z ** 2 / 6, z + np.log1p(-np.exp(-2 * z)) - np.log(2 * z))
        return out
    if f is LevyFamily.POINT_MASS:
        return 2 * nu.rate * (1 - np.cos(nu.atom * ax))
    raise TripletError(f"unsupported family {f}")


def log_characteristic(triplet: LevyTriplet, xi) -> np.ndarray:
    """``log E exp(i xi eps)`` for the model (or symmetrised) triplet."""
    xi = np.asarray(xi, dtype=float)
    return (1j * triplet.center * xi - 0.5 * triplet.gaussian_variance * xi ** 2
            + _jump_exponent(triplet.levy_measure, xi))


class CharacteristicExponent:
    """The nonnegative even exponent ``psi`` of a symmetrised triplet.

    Time-``t`` transition laws have Fourier transform ``exp(-t psi)``.
    """

    def __init__(self, sym: LevyTriplet):
        if not sym.symmetrized:
            raise TripletError("characteristic exponent needs a symmetrised triplet")
        self.triplet = sym
        self.gaussian_coefficient = 0.5 * sym.gaussian_variance
        nu = sym.levy_measure
        self.stable_index = nu.stable_index
        self.kappa = None
        if self.stable_index is not None:
            c_side = nu.stable_intensities[0]
            self.kappa = c_side * stable_constant(self.stable_index)

    @property
    def is_pure_stable(self) -> bool:
        return self.kappa is not None and self.gaussian_coefficient == 0

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.gaussian_coefficient * xi ** 2 + _even_jump_exponent(self.triplet.levy_measure, xi)

    def low_frequency_exponent(self, xi0: float = 1e-6) -> float:
        """Local log-log slope of ``psi`` near the origin."""
        lo, hi = self(xi0), self(2 * xi0)
        return float(np.log(hi / lo) / np.log(2.0))


def characteristic_exponent(sym: LevyTriplet) -> CharacteristicExponent:
    return CharacteristicExponent(sym)


def exponent_by_quadrature(sym: LevyTriplet, xi: float) -> float:
    """``psi(xi)`` by direct quadrature of the Levy integral (test oracle)."""
    if not sym.symmetrized:
        raise TripletError("quadrature exponent needs a symmetrised triplet")
    xi = abs(float(xi))
    value = 0.5 * sym.gaussian_variance * xi ** 2
    nu = sym.levy_measure
    if nu.is_trivial or xi == 0:
        return value
    if nu.family is LevyFamily.POINT_MASS:
        return value + 2 * nu.rate * (1 - np.cos(nu.atom * xi))
    dens = functools.partial(levy_density, nu)
    split = 1.0 / xi
    near, e1 = integrate.quad(lambda x: 2 * np.sin(0.5 * xi * x) ** 2 * dens(x), 0.0, split,
                              epsabs=0, epsrel=1e-12, limit=400)
    plain, e2 = integrate.quad(dens, split, np.inf, epsabs=0, epsrel=1e-12, limit=400)
    osc, e3 = integrate.quad(dens, split, np.inf, weight="cos", wvar=xi, limlst=200)
    jump = 2.0 * (near + plain - osc)
    residual = 2.0 * (e1 + e2 + e3)
    if residual > 1e-4 * max(jump, 1e-300):
        raise QuadratureError(f"Levy integral at xi={xi} did not converge", residual)
    return value + jump


# ---------------------------------------------------------------------------
# densities on grids


def _stable_series(alpha: float, kappa: float, r_min: float, max_terms: int = 40):
    """Terms ``(p_k, a_k)`` of ``q(x) = sum a_k |x|^(-p_k)`` for ``exp(-kappa|xi|^alpha)``.

    Convergent for ``alpha < 1``, asymptotic otherwise; truncated once terms
    at ``r_min`` stop decreasing or become negligible.
    """
    terms = []
    first = None
    prev = np.inf
    for k in range(1, max_terms + 1):
        logmag = special.gammaln(k * alpha + 1) - special.gammaln(k + 1) + k * np.log(kappa)
        s = np.sin(k * np.pi * alpha / 2)
        p = k * alpha + 1
        size = np.exp(logmag - p * np.log(r_min)) * abs(s) / np.pi
        if abs(s) < 1e-14:
            continue
        if first is None:
            first = size
        if size > prev or size < 1e-17 * first:
            break
        prev = size
        terms.append((p, (-1) ** (k + 1) * np.exp(logmag) * s / np.pi))
    return terms


def _tail_terms(triplet: LevyTriplet, t: float, r_min: float):
    """Power-tail terms ``(p, right, left)`` of the time-``t`` law, or ``[]``."""
    nu = triplet.levy_measure
    a = nu.stable_index
    if a is None:
        return []
    right, left = nu.stable_intensities
    if triplet.gaussian_variance == 0 and nu.is_even:
        kappa = t * right * stable_constant(a)
        return [(p, c, c) for p, c in _stable_series(a, kappa, r_min)]
    return [(1 + a, t * right, t * left)]


def _alias_images(z: np.ndarray, period: float, terms) -> np.ndarray:
    """``sum_{m != 0} tail(z + m * period)`` via Hurwitz zeta sums."""
    out = np.zeros_like(z)
    for p, right, left in terms:
        out += period ** (-p) * (right * special.zeta(p, 1 + z / period)
                                 + left * special.zeta(p, 1 - z / period))
    return out


def _lattice_density(triplet: LevyTriplet, t: float, spacing: float, m: int, offset: float = 0.0,
                     tail_terms=None):
    """Density of the time-``t`` law at ``offset + (k - m/2) * spacing``.

    Discrete inverse Fourier transform with automatic oversampling until the
    characteristic function is negligible at the Nyquist frequency, then
    removal of the periodic images of power-law tails.
    """
    over = 1
    while True:
        nyq = np.pi * over / spacing
        decay = -t * np.real(log_characteristic(triplet, np.array([nyq])))[0]
        if decay > 36 or m * over * 2 > MAX_FFT_SIZE:
            break
        over *= 2
    big = m * over
    d = spacing / over
    xi = 2 * np.pi * np.fft.fftfreq(big, d=d)
    idx = np.rint(xi * big * d / (2 * np.pi)).astype(np.int64)
    phi = np.exp(t * log_characteristic(triplet, xi) - 1j * xi * offset)
    phi *= np.where(idx % 2 == 0, 1.0, -1.0)
    vals = np.real(np.fft.fft(phi)) / (big * d)
    vals = vals[::over]
    z = offset + (np.arange(m) - m // 2) * spacing
    period = m * spacing
    if tail_terms is None:
        tail_terms = _tail_terms(triplet, t, 0.5 * period)
    if tail_terms:
        vals = vals - _alias_images(z, period, tail_terms)
    return z, vals, {"oversample": over, "nyquist_decay": float(decay)}


def _density_on_grid(triplet: LevyTriplet, t: float, grid: Grid1D, tol: float = 1e-6) -> GriddedFunction:
    if triplet.is_lattice:
        raise TripletError("lattice (point-mass) laws have no density")
    if not grid.is_symmetric:
        raise GridError("densities are computed on grids symmetric about 0")
    half = grid.upper
    terms = _tail_terms(triplet, t, half)
    z, vals, info = _lattice_density(triplet, t, grid.spacing, grid.n, tail_terms=terms)
    dx = grid.spacing
    negative = -np.sum(vals[vals < 0]) * dx
    vals = np.clip(vals, 0.0, None)
    tail = None
    if terms:
        (p0, r0, l0), higher = terms[0], tuple(terms[1:])
        tail = TailModel(p0, r0, l0, higher)
        outside = tail.mass_beyond(grid.lower, grid.upper)
    else:
        band = max(1, grid.n // 32)
        outside = float(np.sum(vals[:band]) + np.sum(vals[-band:])) * dx
        if outside > tol:
            raise GridError(f"grid too narrow: estimated truncated mass {outside:.2e} exceeds {tol:.0e}")
    mass = float(np.sum(vals) * dx + (outside if terms else 0.0))
    if abs(mass - 1.0) > tol:
        sample_error = float(np.exp(-t * np.real(-log_characteristic(triplet, np.array([2 * np.pi / dx])))[0]))
        cause = "resolution" if sample_error > 0.1 * tol else "width"
        raise GridError(f"density mass {mass:.9f} violates the 1 +/- {tol:.0e} bound "
                        f"(grid {cause} insufficient; sampling error ~{sample_error:.1e})")
    factor = 1.0 / mass
    if negative > 0:
        log.debug("clipped negative ringing of mass %.3e; renormalisation factor %.9f", negative, factor)
    if factor > 1 + tol:
        raise GridError(f"renormalisation factor {factor:.9f} exceeds 1 + {tol:.0e}")
    info.update(mass=mass, renormalisation=factor, clipped=negative)
    return GriddedFunction(grid, vals * factor, tail, meta=info)


def transition_density(sym: LevyTriplet, t: float, grid: Grid1D) -> GriddedFunction:
    """Density of the time-``t`` law of the symmetrised triplet on ``grid``."""
    if not sym.symmetrized:
        raise TripletError("transition_density expects a symmetrised triplet")
    if sym.dimension != 1:
        raise TripletError("numeric densities are one-dimensional")
    if not t > 0:
        raise ValueError("time must be positive")
    return _density_on_grid(sym, t, grid)


def model_density(model: LevyTriplet, grid: Grid1D) -> GriddedFunction:
    """Density ``p(x | theta = 0)`` of the model noise on ``grid``."""
    if model.dimension != 1:
        raise TripletError("numeric densities are one-dimensional")
    return _density_on_grid(model, 1.0, grid)


def closed_form_density(triplet: LevyTriplet, x, t: float = 1.0):
    """Exact time-``t`` density for Gaussian and pure Cauchy triplets, else ``None``."""
    x = np.asarray(x, dtype=float)
    nu = triplet.levy_measure
    loc = t * triplet.center
    if nu.is_trivial:
        var = t * triplet.gaussian_variance
        return np.exp(-0.5 * (x - loc) ** 2 / var) / np.sqrt(2 * np.pi * var)
    if nu.family is LevyFamily.CAUCHY and triplet.gaussian_variance == 0:
        scale = t * nu.c
        return scale / np.pi / (scale ** 2 + (x - loc) ** 2)
    return None


def density_lattice(triplet: LevyTriplet, spacing: float, m: int, t: float = 1.0):
    """Density values at ``(k - m/2) * spacing``, ``k = 0..m-1``, with tail terms.

    Closed forms are used where they exist so that far-tail values keep their
    relative accuracy (a discrete Fourier inversion has an absolute error
    floor near ``1e-17`` times the peak).
    """
    terms = _tail_terms(triplet, t, 0.5 * m * spacing)
    z = (np.arange(m) - m // 2) * spacing
    exact = closed_form_density(triplet, z, t)
    if exact is not None:
        return z, exact, terms
    z, vals, _ = _lattice_density(triplet, t, spacing, m, tail_terms=terms)
    return z, np.clip(vals, 0.0, None), terms


def tail_function(terms):
    """Callable evaluating power-tail terms at (large) arguments."""
    if not terms:
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    (p0, r0, l0), higher = terms[0], tuple(terms[1:])
    return TailModel(p0, r0, l0, higher)


# ---------------------------------------------------------------------------
# semigroup, resolvent, generator


def _multiplier_apply(f: GriddedFunction, multiplier: np.ndarray) -> np.ndarray:
    return np.real(np.fft.ifft(np.fft.fft(f.values) * multiplier))


def apply_semigroup(sym: LevyTriplet, t: float, f: GriddedFunction) -> GriddedFunction:
    """``(T_t f)(x) = int q_t(y - x) f(y) dy`` as a periodic Fourier multiplier."""
    if not t >= 0:
        raise ValueError("time must be nonnegative")
    psi = characteristic_exponent(sym)
    mult = np.exp(-t * psi(f.grid.frequencies()))
    return GriddedFunction(f.grid, _multiplier_apply(f, mult), f.tail_model)


def resolvent(sym: LevyTriplet, alpha: float, f: GriddedFunction) -> GriddedFunction:
    """``G_alpha f`` with multiplier ``1 / (alpha + psi)``."""
    if not alpha > 0:
        raise ValueError("resolvent parameter must be positive")
    psi = characteristic_exponent(sym)
    mult = 1.0 / (alpha + psi(f.grid.frequencies()))
    tail = None if f.tail_model is None else f.tail_model.scaled(1.0 / alpha)
    return GriddedFunction(f.grid, _multiplier_apply(f, mult), tail)


def _gauss_legendre_cells(density, lo: np.ndarray, hi: np.ndarray, nodes: int = 16) -> np.ndarray:
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    pts = mid[:, None] + half[:, None] * x[None, :]
    return np.sum(density(pts) * w[None, :], axis=1) * half


def _jump_cells(nu: LevyMeasureSpec, spacing: float, kmax: int):
    """Per-side cell masses, small-jump second moment and far-tail mass.

    Returns ``(cells, second_moment, far)`` where ``cells[k-1]`` is the mass
    of ``[(k-1/2) dx, (k+1/2) dx]`` for ``k = 1..kmax``, ``second_moment`` is
    ``int_{|z| < dx/2} z^2 nu(dz) / 2`` and ``far`` the per-side mass beyond
    ``(kmax + 1/2) dx``.
    """
    k = np.arange(1, kmax + 1)
    lo, hi = (k - 0.5) * spacing, (k + 0.5) * spacing
    half = 0.5 * spacing
    f = nu.family
    if f is LevyFamily.NONE:
        return np.zeros(kmax), 0.0, 0.0
    if f is LevyFamily.POINT_MASS:
        cells = np.zeros(kmax)
        rate = nu.rate  # per-side intensity of the two-sided atom pair
        if nu.atom < spacing:
            # sub-cell jumps act as a diffusion with the same second moment
            return cells, rate * nu.atom ** 2, 0.0
        # split the atom linearly between its two neighbouring cells
        pos = nu.atom / spacing
        j = int(np.floor(pos))
        frac = pos - j
        far = 0.0
        for k, share in ((j, 1.0 - frac), (j + 1, frac)):
            if k <= kmax:
                cells[k - 1] += rate * share
            else:
                far += rate * share
        return cells, 0.0, far
    if f in (LevyFamily.CAUCHY, LevyFamily.SYMMETRIC_STABLE):
        c, _ = nu.stable_intensities
        a = nu.stable_index
        cells = c / a * (lo ** -a - hi ** -a)
        moments = c / (2 - a) * (hi ** (2 - a) - lo ** (2 - a))
        second = c * half ** (2 - a) / (2 - a)
        far = c / a * hi[-1] ** -a
    else:
        dens = functools.partial(levy_density, nu)
        cells = _gauss_legendre_cells(dens, lo, hi)
        moments = _gauss_legendre_cells(lambda z: z * z * dens(z), lo, hi)
        second = integrate.quad(lambda z: z * z * dens(z), 0.0, half, limit=200)[0]
        far = integrate.quad(dens, hi[-1], np.inf, limit=200)[0]
    # Lumping each cell at its centre misstates the second moment; the
    # shortfall is returned to the diffusion term so quadratics are exact.
    second += float(np.sum(moments - (k * spacing) ** 2 * cells))
    return cells, max(second, 0.0), far


def _gaussian_cells(var: float, dx: float, n: int) -> np.ndarray:
    """Cell masses of a centred normal law, lumped at the cell centres.

    Lumping inflates the second moment by roughly ``dx**2 / 12``; the normal
    variance is reduced so that the lattice law has second moment ``var``.
    """
    k = np.arange(n)

    def cells(s2):
        edges = (np.arange(n + 1) - 0.5) * dx / np.sqrt(s2)
        cdf = special.ndtr(edges)
        out = np.diff(cdf)
        out[0] = 2 * cdf[1] - 1  # central cell [-dx/2, dx/2]
        return out

    def excess(s2):
        c = cells(s2)
        return 2 * np.sum((k[1:] * dx) ** 2 * c[1:]) - var

    lo = max(var - dx * dx / 6, 1e-3 * var)
    if excess(lo) < 0 < excess(var):
        return cells(optimize.brentq(excess, lo, var, xtol=1e-14 * var, rtol=1e-13))
    return cells(var)


def generator_stencil(sym: LevyTriplet, grid: Grid1D, h: float = 0.01,
                      boundary: str = "killing") -> tuple[np.ndarray, np.ndarray]:
    """First column of the Toeplitz part of the generator and the diagonal correction.

    The generator is ``toeplitz(col) + diag(extra)``.  With ``boundary =
    "killing"`` jumps that leave the grid are absorbed and ``extra`` is zero;
    with ``"censored"`` they are suppressed, so every row sums to zero.
    """
    if not sym.symmetrized:
        raise TripletError("generator_matrix expects a symmetrised triplet")
    if boundary not in ("killing", "censored"):
        raise ValueError(f"unknown boundary treatment {boundary!r}")
    if not 0 < h <= 0.05:
        raise ValueError("generator step h must lie in (0, 0.05]")
    n, dx = grid.n, grid.spacing
    col = np.zeros(n)
    a_sym = sym.gaussian_variance
    if a_sym > 0:
        h_eff = max(h, dx * dx / a_sym)
        cells = _gaussian_cells(a_sym * h_eff, dx, n)
        col += cells / h_eff
        col[0] -= 1.0 / h_eff
    nu = sym.levy_measure
    if not nu.is_trivial:
        cells, second, far = _jump_cells(nu, dx, n - 1)
        col[1:] += cells
        col[0] -= 2 * (np.sum(cells) + far)
        if second > 0:
            col[0] -= 2 * second / dx ** 2
            col[1] += second / dx ** 2
    extra = np.zeros(n)
    if boundary == "censored":
        # row sums of the Toeplitz part are the (negative) killing rates
        csum = np.concatenate([[0.0], np.cumsum(col[1:])])
        i = np.arange(n)
        row = col[0] + csum[i] + csum[n - 1 - i]
        extra = -row
    return col, extra


def generator_matrix(sym: LevyTriplet, grid: Grid1D, h: float = 0.01,
                     boundary: str = "killing") -> np.ndarray:
    """Dense generator of the symmetrised process on ``grid``.

    Gaussian part: ``(P_h - I) / h`` with ``P_h`` the cell-averaged Gaussian
    kernel of variance ``2A h`` (``h`` is raised to ``spacing**2 / 2A`` when
    smaller, so one cell is resolved).  Jump part: the ``h -> 0`` limit of the
    same construction, i.e. cell-integrated jump intensities, with the part
    of the jump measure below half a cell folded into a second difference.
    By default jumps that leave the grid are killed, so rows sum to
    nonpositive values whose deficit is the killing rate.
    """
    if grid.n > MAX_DENSE_N:
        raise BudgetError(f"dense generator limited to n <= {MAX_DENSE_N}, got {grid.n}")
    col, extra = generator_stencil(sym, grid, h, boundary)
    out = linalg.toeplitz(col)
    out[np.diag_indices_from(out)] += extra
    return out


class GeneratorOperator:
    """Matrix-free action of :func:`generator_stencil` via FFT Toeplitz products."""

    def __init__(self, sym: LevyTriplet, grid: Grid1D, h: float = 0.01, boundary: str = "killing"):
        col, extra = generator_stencil(sym, grid, h, boundary)
        n = grid.n
        circ = np.concatenate([col, [0.0], col[:0:-1]])
        self._spectrum = np.fft.rfft(circ)
        self._size = 2 * n
        self.n = n
        self.extra = extra

    def __matmul__(self, u: np.ndarray) -> np.ndarray:
        pad = np.fft.irfft(self._spectrum * np.fft.rfft(u, self._size), self._size)
        return pad[:self.n] + self.extra * u
