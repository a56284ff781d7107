"""Minimum search-cost credible regions.

For a posterior density p and a search-cost density v, the region with the
least search cost ``nu(A) = integral_A v`` among all regions holding posterior
mass at least c is the level set ``{p / v >= alpha_c}``. On a grid this is a
fractional-knapsack selection: take cells in decreasing order of mass per unit
cost until the requested mass is reached, then close the set under ties.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from .errors import GridMismatchError, InvalidLevelError, RoleError
from .grid import GridSpec, ScalarField

# 4-connectivity: cells touching only at a corner are separate components
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True, eq=False)
class CredibleRegion:
    grid: GridSpec
    mask: np.ndarray  # flat boolean, one entry per cell
    alpha: float
    coverage: float
    nu_volume: float
    components: int
    c_requested: float

    @property
    def cells(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.mask).tolist())

    @property
    def full_domain(self) -> bool:
        """True when the region is every cell (the uninformative ``alpha = 0`` case)."""
        return bool(self.mask.all())

    def mask_2d(self) -> np.ndarray:
        return self.mask.reshape(self.grid.ny, self.grid.nx)


@dataclass(frozen=True, eq=False)
class RegionFamily:
    levels: tuple[float, ...]
    regions: tuple[CredibleRegion, ...]


def density_ratio(post: ScalarField, cost: ScalarField) -> ScalarField:
    if post.grid != cost.grid:
        raise GridMismatchError("posterior and cost live on different grids")
    if cost.role != "cost":
        raise RoleError(f"expected a cost field, got {cost.role}")
    return ScalarField(post.grid, post.values / cost.values, "weight")


def nu_volume(cells, cost: ScalarField) -> float:
    """Search cost of a cell set (boolean mask or iterable of flat indices)."""
    mask = _as_mask(cells, cost.grid.size)
    return cost.grid.cell_area * float(np.sum(cost.values[mask]))


def connected_components(region, grid: GridSpec | None = None) -> int:
    """Count 4-connected components of a region or cell set."""
    if isinstance(region, CredibleRegion):
        grid = grid or region.grid
        mask = region.mask
    else:
        mask = _as_mask(region, grid.size)
    _, n = ndimage.label(mask.reshape(grid.ny, grid.nx), structure=_FOUR)
    return int(n)


def _as_mask(cells, size: int) -> np.ndarray:
    if isinstance(cells, np.ndarray) and cells.dtype == bool:
        return cells.reshape(-1)
    mask = np.zeros(size, dtype=bool)
    idx = list(cells)
    if idx:
        mask[np.asarray(idx, dtype=int)] = True
    return mask


def check_level(c: float):
    if not (0 < c <= 1):
        raise InvalidLevelError(f"credible level must lie in (0, 1], got {c}")


def _region_from_order(post, cost, ratio, order, cum, total, c) -> CredibleRegion:
    check_level(c)
    grid = post.grid
    if c >= 1:
        mask = np.ones(grid.size, dtype=bool)
        alpha = 0.0
    else:
        # cum / total reaches exactly 1.0 at the last positive cell, so this always hits
        k = int(np.searchsorted(cum / total, c, side="left"))
        k = min(k, len(order) - 1)
        alpha = float(ratio[order[k]])
        mask = ratio >= alpha
    coverage = float(np.sum(post.values[mask])) / float(np.sum(post.values))
    return CredibleRegion(
        grid=grid,
        mask=mask,
        alpha=alpha,
        coverage=coverage,
        nu_volume=nu_volume(mask, cost),
        components=connected_components(mask, grid),
        c_requested=float(c),
    )


def _ordering(post: ScalarField, cost: ScalarField):
    ratio = density_ratio(post, cost).values
    # stable sort on the negated ratio: ties keep ascending flat index
    order = np.argsort(-ratio, kind="stable")
    cum = np.cumsum(post.values[order])
    return ratio, order, cum, float(cum[-1])


def credible_region(post: ScalarField, cost: ScalarField, c: float) -> CredibleRegion:
    """Least-cost region holding posterior mass at least ``c``.

    Coverage is reported relative to the total grid mass, which equals one for
    a density up to rounding. ``c == 1`` returns the whole domain with
    ``alpha = 0``.
    """
    check_level(c)
    if post.role != "density":
        raise RoleError(f"credible_region needs a density, got {post.role}")
    return _region_from_order(post, cost, *_ordering(post, cost), c)


def region_family(post: ScalarField, cost: ScalarField, c_list: Sequence[float]) -> RegionFamily:
    levels = tuple(float(c) for c in c_list)
    for c in levels:
        check_level(c)
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise InvalidLevelError(f"levels must be ascending, got {levels}")
    if post.role != "density":
        raise RoleError(f"region_family needs a density, got {post.role}")
    ordering = _ordering(post, cost)
    regions = tuple(_region_from_order(post, cost, *ordering, c) for c in levels)
    return RegionFamily(levels, regions)


def contour_masks(family: RegionFamily) -> list[np.ndarray]:
    """One ``(ny, nx)`` boolean mask per level, smallest level first."""
    return [r.mask_2d().copy() for r in family.regions]


def write_region_summary(family: RegionFamily, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["c", "alpha", "coverage", "nu_volume", "components"])
    for c, r in zip(family.levels, family.regions):
        w.writerow([repr(c), repr(r.alpha), repr(r.coverage), repr(r.nu_volume), r.components])


def write_region_masks(family: RegionFamily, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["c", "i", "j"])
    for c, r in zip(family.levels, family.regions):
        for k in np.flatnonzero(r.mask):
            i, j = r.grid.ij(k)
            w.writerow([repr(c), i, j])
