"""Time-of-arrival observation model.

Ranges are in length units: a measured arrival time is assumed to be
pre-multiplied by the propagation speed, so ``y_i = |x - r_i| + n_i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidNoiseError, RegionEstError


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise RegionEstError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def distance(self, other: "Point2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class TowerArray:
    positions: tuple[Point2, ...]

    def __post_init__(self):
        pts = tuple(p if isinstance(p, Point2) else Point2(*p) for p in self.positions)
        if not pts:
            raise RegionEstError("at least one tower is required")
        object.__setattr__(self, "positions", pts)

    @classmethod
    def of(cls, *coords) -> "TowerArray":
        return cls(tuple(Point2(*c) for c in coords))

    def __len__(self):
        return len(self.positions)

    def as_array(self) -> np.ndarray:
        """Tower coordinates as an ``(m, 2)`` array."""
        return np.array([[p.x, p.y] for p in self.positions], dtype=float)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float

    def __post_init__(self):
        object.__setattr__(self, "sigma", float(self.sigma))
        if not math.isfinite(self.sigma) or self.sigma < 0:
            raise InvalidNoiseError(f"sigma must be finite and >= 0, got {self.sigma}")

    def require_positive(self):
        if self.sigma <= 0:
            raise InvalidNoiseError(f"likelihood needs sigma > 0, got {self.sigma}")


@dataclass(frozen=True)
class Observation:
    ranges: tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(v) for v in self.ranges)
        if not all(math.isfinite(v) for v in r):
            raise RegionEstError(f"non-finite range in {r}")
        object.__setattr__(self, "ranges", r)

    def __len__(self):
        return len(self.ranges)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.ranges, dtype=float)


def predict_ranges(x: Point2, towers: TowerArray) -> list[float]:
    """Noiseless range from ``x`` to every tower."""
    return [math.hypot(x.x - r.x, x.y - r.y) for r in towers.positions]


def sample_observation(x: Point2, towers: TowerArray, noise: NoiseModel, seed: int) -> Observation:
    """Draw one noisy observation; a pure function of ``seed``.

    With ``sigma == 0`` the result equals :func:`predict_ranges` exactly.
    """
    clean = predict_ranges(x, towers)
    if noise.sigma == 0:
        return Observation(tuple(clean))
    rng = np.random.default_rng(seed)
    n = rng.normal(0.0, noise.sigma, size=len(clean))
    return Observation(tuple(c + float(e) for c, e in zip(clean, n)))


def _check_lengths(obs: Observation, towers: TowerArray):
    if len(obs) != len(towers):
        raise RegionEstError(
            f"observation has {len(obs)} ranges but there are {len(towers)} towers"
        )


def log_likelihood(x: Point2, obs: Observation, towers: TowerArray, noise: NoiseModel) -> float:
    """Normalized Gaussian log-density of ``obs`` given source position ``x``."""
    noise.require_positive()
    _check_lengths(obs, towers)
    s2 = noise.sigma ** 2
    resid = 0.0
    for y, d in zip(obs.ranges, predict_ranges(x, towers)):
        resid += (y - d) ** 2
    m = len(towers)
    return -resid / (2 * s2) - 0.5 * m * math.log(2 * math.pi * s2)


def log_likelihood_points(
    xy: np.ndarray, obs: Observation, towers: TowerArray, noise: NoiseModel,
    distances: np.ndarray | None = None,
) -> np.ndarray:
    """Vectorized :func:`log_likelihood` over an ``(n, 2)`` array of positions.

    ``distances`` may carry precomputed ``(m, n)`` tower-to-point distances.
    """
    noise.require_positive()
    _check_lengths(obs, towers)
    if distances is None:
        distances = tower_distances(xy, towers)
    s2 = noise.sigma ** 2
    resid = np.zeros(distances.shape[1])
    # fixed tower order keeps the reduction reproducible
    for y, d in zip(obs.ranges, distances):
        resid += (y - d) ** 2
    m = len(towers)
    return -resid / (2 * s2) - 0.5 * m * math.log(2 * math.pi * s2)


def tower_distances(xy: np.ndarray, towers: TowerArray) -> np.ndarray:
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    t = towers.as_array()
    return np.hypot(xy[None, :, 0] - t[:, None, 0], xy[None, :, 1] - t[:, None, 1])


def points(coords: Iterable[Sequence[float]]) -> list[Point2]:
    return [Point2(*c) for c in coords]
