"""Uniform 1-D grids and functions sampled on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridError


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic-style grid ``lower + k * spacing`` for ``k = 0..n-1``.

    The right endpoint ``upper`` is excluded, so a grid on ``[-L, L)`` with
    even ``n`` contains 0 at index ``n // 2`` and every point except ``-L``
    has its mirror image on the grid.
    """

    lower: float
    upper: float
    n: int

    def __post_init__(self):
        if self.n < 16:
            raise GridError(f"grid needs n >= 16, got {self.n}")
        if self.n & (self.n - 1):
            raise GridError(f"grid size must be a power of two, got {self.n}")
        if not self.lower < self.upper:
            raise GridError(f"empty grid [{self.lower}, {self.upper})")

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "Grid1D":
        return cls(-float(half_width), float(half_width), int(n))

    @property
    def spacing(self) -> float:
        return (self.upper - self.lower) / self.n

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def points(self) -> np.ndarray:
        return self.lower + self.spacing * np.arange(self.n)

    @property
    def is_symmetric(self) -> bool:
        return bool(np.isclose(self.lower, -self.upper, rtol=0, atol=1e-12 * self.width))

    @property
    def zero_index(self) -> int:
        if not self.is_symmetric:
            raise GridError("grid is not symmetric about 0")
        return self.n // 2

    def frequencies(self) -> np.ndarray:
        """Angular frequencies matching :func:`numpy.fft.fft` ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    def interior_mask(self, fraction: float = 0.5) -> np.ndarray:
        """Points within the central ``fraction`` of the grid width."""
        mid = 0.5 * (self.lower + self.upper)
        return np.abs(self.points - mid) <= 0.5 * fraction * self.width

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.lower, self.upper, self.n * factor)

    def widened(self, factor: int = 2) -> "Grid1D":
        """Same spacing, ``factor`` times the width, still centred."""
        mid = 0.5 * (self.lower + self.upper)
        half = 0.5 * self.width * factor
        return Grid1D(mid - half, mid + half, self.n * factor)


@dataclass(frozen=True)
class TailModel:
    """Power-law behaviour ``coefficient * |x|**(-exponent)`` beyond the grid.

    ``coefficient_left`` defaults to ``coefficient`` (even tails).  ``higher``
    holds optional correction terms ``(exponent, right, left)`` of an
    asymptotic series; they enter evaluation and mass but not ``sqrt``.
    """

    exponent: float
    coefficient: float
    coefficient_left: float | None = None
    higher: tuple = ()

    @property
    def left(self) -> float:
        return self.coefficient if self.coefficient_left is None else self.coefficient_left

    def terms(self):
        yield self.exponent, self.coefficient, self.left
        yield from self.higher

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        ax = np.abs(x)
        with np.errstate(divide="ignore"):
            for p, right, left in self.terms():
                out = out + np.where(x >= 0, right, left) * ax ** (-p)
        return out

    def mass_beyond(self, lower: float, upper: float) -> float:
        """Integral of the tail over ``x < lower`` and ``x > upper``."""
        total = 0.0
        for p, right, left in self.terms():
            if p <= 1:
                return np.inf
            total += (right * upper ** (1 - p) + left * (-lower) ** (1 - p)) / (p - 1)
        return total

    def scaled(self, factor: float) -> "TailModel":
        left = None if self.coefficient_left is None else factor * self.coefficient_left
        higher = tuple((p, factor * r, factor * l) for p, r, l in self.higher)
        return TailModel(self.exponent, factor * self.coefficient, left, higher)

    def sqrt(self) -> "TailModel":
        left = None if self.coefficient_left is None else float(np.sqrt(self.coefficient_left))
        return TailModel(0.5 * self.exponent, float(np.sqrt(self.coefficient)), left)


@dataclass(frozen=True)
class GriddedFunction:
    grid: Grid1D
    values: np.ndarray
    tail_model: TailModel | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.n,):
            raise GridError(f"expected {self.grid.n} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise GridError("gridded function has non-finite values")
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid1D, value: float = 1.0) -> "GriddedFunction":
        return cls(grid, np.full(grid.n, float(value)), TailModel(0.0, float(value)))

    @classmethod
    def from_callable(cls, grid: Grid1D, fn, tail_model: TailModel | None = None) -> "GriddedFunction":
        return cls(grid, fn(grid.points), tail_model)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def integral(self) -> float:
        """Periodic trapezoid rule (all samples carry weight ``spacing``)."""
        return float(np.sum(self.values) * self.grid.spacing)

    def mass(self) -> float:
        """Grid integral plus the analytic mass of the tail model, if any."""
        total = self.integral()
        if self.tail_model is not None and self.tail_model.exponent > 1:
            total += self.tail_model.mass_beyond(self.grid.lower, self.grid.upper)
        return total

    def sqrt(self) -> "GriddedFunction":
        tail = None if self.tail_model is None else self.tail_model.sqrt()
        return GriddedFunction(self.grid, np.sqrt(np.clip(self.values, 0.0, None)), tail)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.values ** 2) * self.grid.spacing))

    def with_values(self, values) -> "GriddedFunction":
        return GriddedFunction(self.grid, values, self.tail_model)


def fit_power_tail(grid: Grid1D, values: np.ndarray, decade=(0.1, 1.0), exponents=None) -> TailModel:
    """Fit ``coeff * |x|**(-p)`` on the outer decade of a symmetric grid.

    Both sides are pooled for the exponent; coefficients are fitted per side.
    When ``exponents`` are given they are held fixed and only the per-side
    coefficients of ``sum_j c_j |x|**(-p_j)`` are fitted (in relative
    least squares); the first exponent is the leading term.
    """
    x = grid.points
    half = min(-grid.lower, grid.upper)
    lo, hi = decade[0] * half, decade[1] * half
    right = (x >= lo) & (x < hi) & (values > 0)
    left = (x <= -lo) & (x > -hi) & (values > 0)
    if right.sum() < 4 or left.sum() < 4:
        raise GridError("not enough positive samples to fit a power tail")
    if exponents is not None:
        exps = sorted(set(float(p) for p in exponents))
        coeffs = []
        for mask in (right, left):
            ax, v = np.abs(x[mask]), values[mask]
            design = np.column_stack([ax ** -p / v for p in exps])
            c, *_ = np.linalg.lstsq(design, np.ones(v.size), rcond=None)
            coeffs.append(c)
        if not np.all(np.isfinite(coeffs)):
            raise GridError("power-tail fit is not finite")
        higher = tuple((p, float(r), float(l)) for p, r, l in zip(exps[1:], coeffs[0][1:], coeffs[1][1:]))
        return TailModel(exps[0], float(coeffs[0][0]), float(coeffs[1][0]), higher)
    lx = np.concatenate([np.log(x[right]), np.log(-x[left])])
    ly = np.concatenate([np.log(values[right]), np.log(values[left])])
    side = np.concatenate([np.ones(right.sum()), np.zeros(left.sum())])
    # shared slope, separate intercepts
    design = np.column_stack([lx, side, 1.0 - side])
    coef, *_ = np.linalg.lstsq(design, ly, rcond=None)
    p = -coef[0]
    with np.errstate(over="ignore"):
        right, left = np.exp(coef[1]), np.exp(coef[2])
    if not (np.isfinite(p) and np.isfinite(right) and np.isfinite(left)):
        raise GridError("power-tail fit is not finite (tail is not a power law)")
    return TailModel(float(p), float(right), float(left))
