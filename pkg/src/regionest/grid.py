"""Scalar fields sampled at the cell centres of a rectangular grid.

Cells are indexed row-major with ``i`` (x direction) fastest, so the flat
index of cell ``(i, j)`` is ``j * nx + i``. Integrals use the midpoint rule.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .errors import (
    DegenerateFieldError,
    DegeneratePosteriorError,
    GridMismatchError,
    RegionEstError,
    RoleError,
)
from .toa import NoiseModel, Observation, Point2, TowerArray, log_likelihood_points, tower_distances

ROLES = ("likelihood", "density", "weight", "cost")
DENSITY_RTOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    origin: Point2
    width: float
    height: float
    nx: int
    ny: int

    def __post_init__(self):
        if not isinstance(self.origin, Point2):
            object.__setattr__(self, "origin", Point2(*self.origin))
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "height", float(self.height))
        if not (math.isfinite(self.width) and self.width > 0 and math.isfinite(self.height) and self.height > 0):
            raise RegionEstError("grid width and height must be finite and > 0")
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 2 or self.ny < 2:
            raise RegionEstError("grid needs integer nx, ny >= 2")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))

    @property
    def dx(self) -> float:
        return self.width / self.nx

    @property
    def dy(self) -> float:
        return self.height / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_diagonal(self) -> float:
        return math.hypot(self.dx, self.dy)

    @cached_property
    def centers(self) -> np.ndarray:
        """``(size, 2)`` array of cell centres in flat-index order."""
        xs = self.origin.x + (np.arange(self.nx) + 0.5) * self.dx
        ys = self.origin.y + (np.arange(self.ny) + 0.5) * self.dy
        gx, gy = np.meshgrid(xs, ys)  # shape (ny, nx): i fastest when flattened
        out = np.column_stack([gx.ravel(), gy.ravel()])
        out.flags.writeable = False
        return out

    def center(self, index: int) -> Point2:
        i, j = self.ij(index)
        return Point2(self.origin.x + (i + 0.5) * self.dx, self.origin.y + (j + 0.5) * self.dy)

    def ij(self, index: int) -> tuple[int, int]:
        return int(index) % self.nx, int(index) // self.nx

    def index(self, i: int, j: int) -> int:
        return j * self.nx + i

    def contains(self, p: Point2) -> bool:
        return (self.origin.x <= p.x <= self.origin.x + self.width
                and self.origin.y <= p.y <= self.origin.y + self.height)

    def locate(self, p: Point2) -> int | None:
        """Flat index of the cell containing ``p`` (upper edges clamp inward)."""
        if not self.contains(p):
            return None
        i = min(int((p.x - self.origin.x) / self.dx), self.nx - 1)
        j = min(int((p.y - self.origin.y) / self.dy), self.ny - 1)
        return self.index(i, j)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    values: np.ndarray
    role: str = "likelihood"

    def __post_init__(self):
        if self.role not in ROLES:
            raise RoleError(f"unknown field role {self.role!r}")
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size != self.grid.size:
            raise GridMismatchError(f"field has {vals.size} values, grid has {self.grid.size} cells")
        if not np.all(np.isfinite(vals)):
            raise DegenerateFieldError("field values must be finite")
        if self.role != "likelihood" and np.any(vals < 0):
            raise RoleError(f"{self.role} field must be nonnegative")
        if self.role == "cost" and np.any(vals <= 0):
            raise RoleError("cost field must be strictly positive")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.role == "density":
            total = integrate(self)
            if abs(total - 1.0) > DENSITY_RTOL:
                raise RoleError(f"density integrates to {total!r}, not 1")

    def as_2d(self) -> np.ndarray:
        """Values reshaped to ``(ny, nx)``; row ``j``, column ``i``."""
        return self.values.reshape(self.grid.ny, self.grid.nx)

    def with_role(self, role: str) -> "ScalarField":
        return ScalarField(self.grid, self.values, role)


def constant_field(grid: GridSpec, value: float, role: str = "weight") -> ScalarField:
    return ScalarField(grid, np.full(grid.size, float(value)), role)


def integrate(f: ScalarField) -> float:
    return f.grid.cell_area * float(np.sum(f.values))


def normalize(f: ScalarField) -> ScalarField:
    """Rescale a nonnegative field to a probability density."""
    if np.any(f.values < 0):
        raise DegenerateFieldError("cannot normalize a field with negative values")
    total = integrate(f)
    if not math.isfinite(total) or total <= 0:
        raise DegenerateFieldError(f"field integral is {total!r}")
    if f.role == "density":
        return f
    return ScalarField(f.grid, f.values / total, "density")


@lru_cache(maxsize=32)
def _grid_distances(grid: GridSpec, towers: TowerArray) -> np.ndarray:
    d = tower_distances(grid.centers, towers)
    d.flags.writeable = False
    return d


def log_likelihood_field(obs: Observation, towers: TowerArray, noise: NoiseModel, grid: GridSpec) -> ScalarField:
    vals = log_likelihood_points(grid.centers, obs, towers, noise, distances=_grid_distances(grid, towers))
    return ScalarField(grid, vals, "likelihood")


def log_posterior_values(loglik: ScalarField, weight: ScalarField) -> np.ndarray:
    """Unnormalized log posterior; ``-inf`` where the weight vanishes."""
    if loglik.grid != weight.grid:
        raise GridMismatchError("likelihood and weight live on different grids")
    if weight.role not in ("weight", "density"):
        raise RoleError(f"posterior needs a weight or density field, got {weight.role}")
    top = np.max(weight.values)
    if not top > 0:
        raise DegeneratePosteriorError("weight field is identically zero")
    # dividing by the peak makes power-of-two rescaling of the weight cancel exactly
    with np.errstate(divide="ignore"):
        return loglik.values + np.log(weight.values / top)


def posterior_from_loglik(loglik: ScalarField, weight: ScalarField) -> ScalarField:
    lp = log_posterior_values(loglik, weight)
    top = np.max(lp)
    if not np.isfinite(top):
        raise DegeneratePosteriorError("weight vanishes wherever the likelihood is finite")
    p = np.exp(lp - top)
    total = float(np.sum(p)) * loglik.grid.cell_area
    return ScalarField(loglik.grid, p / total, "density")


def posterior(obs: Observation, towers: TowerArray, noise: NoiseModel, weight: ScalarField) -> ScalarField:
    """Posterior density on ``weight.grid`` with the weight acting as prior."""
    return posterior_from_loglik(log_likelihood_field(obs, towers, noise, weight.grid), weight)


def argmax(f: ScalarField) -> Point2:
    # np.argmax returns the first maximum: lowest row-major index wins ties
    return f.grid.center(int(np.argmax(f.values)))


def mean(f: ScalarField) -> Point2:
    if f.role != "density":
        raise RoleError(f"mean needs a density field, got {f.role}")
    c = f.grid.centers
    a = f.grid.cell_area
    return Point2(float(np.sum(c[:, 0] * f.values)) * a, float(np.sum(c[:, 1] * f.values)) * a)


def write_field_csv(f: ScalarField, fh) -> None:
    """Write ``i,j,x,y,value`` rows in flat-index order to an open text file."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["i", "j", "x", "y", "value"])
    c = f.grid.centers
    for k, v in enumerate(f.values):
        i, j = f.grid.ij(k)
        w.writerow([i, j, repr(float(c[k, 0])), repr(float(c[k, 1])), repr(float(v))])
