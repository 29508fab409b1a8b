"""Shared domain types, grid conventions and small numerical helpers.

Size cells follow one convention everywhere: cell ``i`` (1-based) covers
``(eps*(i-1), eps*i]`` and is represented by its midpoint ``eps*(i-1/2)``.
Densities are number densities per unit size, so the number of particles in
a cell is ``eps * value``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InvalidArgument


@dataclass(frozen=True)
class Params:
    """Model constants. Mass and maximal size are normalised to ``M(t) = t``, ``sigma = 1``."""

    k0: float
    total_mass: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.k0) or self.k0 <= 0:
            raise InvalidArgument(f"k0 must be positive, got {self.k0}")
        if self.total_mass != 1.0:
            raise InvalidArgument("total_mass is fixed to 1 by normalisation")


@dataclass(frozen=True)
class Grid1D:
    cell_width: float
    n_cells: int

    def __post_init__(self):
        if not self.cell_width > 0:
            raise InvalidArgument("cell_width must be positive")
        if self.n_cells < 1:
            raise InvalidArgument("n_cells must be at least 1")

    @property
    def x(self) -> np.ndarray:
        """Cell midpoints ``eps*(i - 1/2)``, ``i = 1..n_cells``."""
        return self.cell_width * (np.arange(1, self.n_cells + 1) - 0.5)

    @property
    def length(self) -> float:
        return self.cell_width * self.n_cells


@dataclass(frozen=True)
class DiscreteDensity:
    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_cells,):
            raise InvalidArgument(
                f"expected {self.grid.n_cells} values, got shape {values.shape}"
            )
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise InvalidArgument("density values must be finite and nonnegative")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __call__(self, x):
        """Piecewise-linear interpolant through the cell midpoints, constant beyond them."""
        return np.interp(x, self.grid.x, self.values)


@dataclass(frozen=True)
class SampledProfile:
    """A function sampled on increasing points, typically in rescaled size ``y``."""

    ys: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        ys = np.asarray(self.ys, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if ys.shape != values.shape or ys.ndim != 1:
            raise InvalidArgument("ys and values must be 1-d arrays of equal length")
        if ys.size > 1 and np.any(np.diff(ys) <= 0):
            raise InvalidArgument("ys must be strictly increasing")
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "values", values)


def discrete_mass(d: DiscreteDensity) -> float:
    return float(d.grid.cell_width * np.dot(d.grid.x, d.values))


def discrete_number(d: DiscreteDensity) -> float:
    return float(d.grid.cell_width * np.sum(d.values))


def make_gaussian_initial(center: float, dispersion: float, n_cells: int) -> DiscreteDensity:
    """Gaussian bump on ``[0, 1]`` scaled to unit discrete mass.

    Parameters
    ----------
    center:
        Location of the maximum, strictly inside ``(0, 1)``.
    dispersion:
        Standard deviation of the Gaussian.
    n_cells:
        Number of cells on ``[0, 1]``; the cell width is ``1/n_cells``.

    The Gaussian is truncated to ``[0, 1]`` and then normalised, so the
    discrete mass is one regardless of how much of the tail was cut off.
    """
    if not 0 < center < 1:
        raise InvalidArgument(f"center must lie in (0, 1), got {center}")
    if not dispersion > 0:
        raise InvalidArgument(f"dispersion must be positive, got {dispersion}")
    if n_cells < 2:
        raise InvalidArgument("n_cells must be at least 2")
    grid = Grid1D(1.0 / n_cells, int(n_cells))
    values = np.exp(-((grid.x - center) ** 2) / (2.0 * dispersion**2))
    values /= grid.cell_width * np.dot(grid.x, values)
    return DiscreteDensity(grid, values)


def density_from_profile(ys, G, n_cells: int) -> DiscreteDensity:
    """Cell-midpoint sampling of a profile on ``[0, 1]``, normalised to unit mass."""
    grid = Grid1D(1.0 / n_cells, int(n_cells))
    values = np.interp(grid.x, ys, G)
    values /= grid.cell_width * np.dot(grid.x, values)
    return DiscreteDensity(grid, values)


@njit(cache=True)
def compensated_sum(a, n):
    """Neumaier-compensated sum of ``a[:n]`` in index order.

    Agrees with the correctly rounded sum except in rare midpoint cases, and
    unlike pairwise summation it does not change rounding behaviour when the
    array grows by one element.
    """
    s = 0.0
    c = 0.0
    for k in range(n):
        v = a[k]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def trapezoid(values, x) -> float:
    return float(np.trapezoid(values, x))
