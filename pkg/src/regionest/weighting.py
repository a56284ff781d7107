"""Weighting functions w(x) and terrain search-cost densities v(x).

A weighting function says how much estimator accuracy matters at each
location; a cost density says how long a unit of area takes to search.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateWeightError, InvalidCostError, RegionEstError
from .grid import GridSpec, ScalarField
from .toa import Point2


def _pt(p) -> Point2:
    return p if isinstance(p, Point2) else Point2(*p)


def _positive(name, v):
    v = float(v)
    if not (math.isfinite(v) and v > 0):
        raise RegionEstError(f"{name} must be finite and > 0, got {v}")
    return v


@dataclass(frozen=True)
class Uniform:
    def evaluate(self, xy: np.ndarray) -> np.ndarray:
        return np.ones(len(xy))


@dataclass(frozen=True)
class GaussianComponent:
    center: Point2
    sigma: float
    mass: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))
        object.__setattr__(self, "mass", _positive("mass", self.mass))


@dataclass(frozen=True)
class GaussianMixture:
    """Sum of unnormalized isotropic Gaussian bumps, ``mass * exp(-d^2 / 2 sigma^2)``."""

    components: tuple[GaussianComponent, ...]

    def __post_init__(self):
        comps = tuple(c if isinstance(c, GaussianComponent) else GaussianComponent(**c)
                      for c in self.components)
        if not comps:
            raise RegionEstError("GaussianMixture needs at least one component")
        object.__setattr__(self, "components", comps)

    def evaluate(self, xy):
        out = np.zeros(len(xy))
        for c in self.components:
            d2 = (xy[:, 0] - c.center.x) ** 2 + (xy[:, 1] - c.center.y) ** 2
            out += c.mass * np.exp(-d2 / (2 * c.sigma ** 2))
        return out

    def scaled(self, k: float) -> "GaussianMixture":
        return GaussianMixture(tuple(GaussianComponent(c.center, c.sigma, c.mass * k)
                                     for c in self.components))


@dataclass(frozen=True)
class PathProximity:
    """Gaussian falloff in perpendicular distance to the line ``a x + b y + c = 0``."""

    a: float
    b: float
    c: float
    scale: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not math.isfinite(float(getattr(self, name))):
                raise RegionEstError(f"line coefficient {name} must be finite")
        if abs(self.a ** 2 + self.b ** 2 - 1.0) > 1e-9:
            raise RegionEstError("line coefficients need a^2 + b^2 = 1")
        object.__setattr__(self, "scale", _positive("scale", self.scale))

    @classmethod
    def diagonal(cls, scale: float = 1.0) -> "PathProximity":
        """The line y = x."""
        s = 1 / math.sqrt(2)
        return cls(s, -s, 0.0, scale)

    def evaluate(self, xy):
        d = xy[:, 0] * self.a + xy[:, 1] * self.b + self.c
        return np.exp(-d ** 2 / (2 * self.scale ** 2))


@dataclass(frozen=True)
class RiskInverseDistance:
    """``floor + sum_k 1 / (epsilon + |x - c_k|)``; large near the risk centres."""

    centers: tuple[Point2, ...]
    epsilon: float = 1.0
    floor: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "centers", tuple(_pt(c) for c in self.centers))
        object.__setattr__(self, "epsilon", _positive("epsilon", self.epsilon))
        f = float(self.floor)
        if not (math.isfinite(f) and f >= 0):
            raise RegionEstError(f"floor must be finite and >= 0, got {f}")
        if f == 0 and not self.centers:
            raise RegionEstError("RiskInverseDistance with no centres and zero floor is identically zero")
        object.__setattr__(self, "floor", f)

    def evaluate(self, xy):
        out = np.full(len(xy), self.floor)
        for c in self.centers:
            out += 1.0 / (self.epsilon + np.hypot(xy[:, 0] - c.x, xy[:, 1] - c.y))
        return out


WeightSpec = Union[Uniform, GaussianMixture, PathProximity, RiskInverseDistance]


@dataclass(frozen=True)
class UniformCost:
    value: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "value", _positive("cost value", self.value))

    def evaluate(self, xy):
        return np.full(len(xy), self.value)


@dataclass(frozen=True)
class Disk:
    center: Point2
    radius: float
    inside_cost: float

    def __post_init__(self):
        object.__setattr__(self, "center", _pt(self.center))
        object.__setattr__(self, "radius", _positive("radius", self.radius))
        object.__setattr__(self, "inside_cost", _positive("inside_cost", self.inside_cost))


@dataclass(frozen=True)
class RiskRegions:
    """Piecewise-constant cost: closed disks override the outside cost.

    Where disks overlap the one listed last wins.
    """

    regions: tuple[Disk, ...]
    outside_cost: float = 1.0

    def __post_init__(self):
        regs = tuple(r if isinstance(r, Disk) else Disk(**r) for r in self.regions)
        object.__setattr__(self, "regions", regs)
        object.__setattr__(self, "outside_cost", _positive("outside_cost", self.outside_cost))

    def evaluate(self, xy):
        out = np.full(len(xy), self.outside_cost)
        for r in self.regions:
            d2 = (xy[:, 0] - r.center.x) ** 2 + (xy[:, 1] - r.center.y) ** 2
            out[d2 <= r.radius ** 2] = r.inside_cost
        return out


CostSpec = Union[UniformCost, RiskRegions]


def eval_weight(spec: WeightSpec, x: Point2) -> float:
    return float(spec.evaluate(np.array([[x.x, x.y]]))[0])


def eval_cost(spec: CostSpec, x: Point2) -> float:
    return float(spec.evaluate(np.array([[x.x, x.y]]))[0])


def build_weight_field(spec: WeightSpec, grid: GridSpec) -> ScalarField:
    vals = spec.evaluate(grid.centers)
    if not np.any(vals > 0):
        raise DegenerateWeightError(f"{type(spec).__name__} is identically zero on the grid")
    return ScalarField(grid, vals, "weight")


def build_cost_field(spec: CostSpec, grid: GridSpec) -> ScalarField:
    vals = spec.evaluate(grid.centers)
    if not (np.all(np.isfinite(vals)) and np.all(vals > 0)):
        raise InvalidCostError("cost must be strictly positive and finite everywhere")
    return ScalarField(grid, vals, "cost")


# Scenario constants for the search-and-rescue demonstration: a bush area and
# a forest area that are slow to search.
BUSH = Point2(5, 5)
FOREST = Point2(12, 12)
BUSH_RADIUS = 2 * math.sqrt(2)
FOREST_RADIUS = 3 * math.sqrt(2)


def defined_weights(epsilon: float = 1.0, floor: float = 0.05) -> RiskInverseDistance:
    return RiskInverseDistance((BUSH, FOREST), epsilon, floor)


def risk_prior() -> GaussianMixture:
    return GaussianMixture((GaussianComponent(BUSH, BUSH_RADIUS, 1.0),
                            GaussianComponent(FOREST, FOREST_RADIUS, 1.0)))


def weights_near(scale: float = 1.0) -> PathProximity:
    return PathProximity.diagonal(scale)


def risk_cost(inside: float = 5.0, outside: float = 1.0) -> RiskRegions:
    return RiskRegions((Disk(BUSH, BUSH_RADIUS, inside), Disk(FOREST, FOREST_RADIUS, inside)), outside)
