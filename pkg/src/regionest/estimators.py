"""Grid-based point estimators: MLE, MAP and the weighted conditional mean."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .grid import (
    GridSpec,
    ScalarField,
    log_likelihood_field,
    log_posterior_values,
    mean,
    posterior_from_loglik,
)
from .toa import NoiseModel, Observation, Point2, TowerArray
from .weighting import Uniform, WeightSpec, build_weight_field


@dataclass(frozen=True)
class MLE:
    tag = "mle"

    @property
    def weight(self) -> WeightSpec:
        return Uniform()


@dataclass(frozen=True)
class MAP:
    prior: WeightSpec
    tag = "map"

    @property
    def weight(self) -> WeightSpec:
        return self.prior


@dataclass(frozen=True)
class WeightedConditionalMean:
    weight: WeightSpec
    tag = "wcm"


EstimatorKind = Union[MLE, MAP, WeightedConditionalMean]


def estimate_from_loglik(kind: EstimatorKind, loglik: ScalarField, weight: ScalarField | None = None) -> Point2:
    """Apply ``kind`` to a precomputed log-likelihood field.

    ``weight`` may carry the already-built weight field for ``kind`` so that
    repeated calls skip rebuilding it.
    """
    grid = loglik.grid
    if weight is None:
        weight = build_weight_field(kind.weight, grid)
    if isinstance(kind, WeightedConditionalMean):
        return mean(posterior_from_loglik(loglik, weight))
    # MLE is MAP under a flat weight: log(1) == 0 leaves the likelihood untouched
    lp = log_posterior_values(loglik, weight)
    return grid.center(int(np.argmax(lp)))


def estimate(kind: EstimatorKind, obs: Observation, towers: TowerArray, noise: NoiseModel,
             grid: GridSpec) -> Point2:
    loglik = log_likelihood_field(obs, towers, noise, grid)
    return estimate_from_loglik(kind, loglik)


def estimate_batch(kind: EstimatorKind, observations: Sequence[Observation], towers: TowerArray,
                   noise: NoiseModel, grid: GridSpec, threads: int = 1) -> list[Point2]:
    if not observations:
        return []
    weight = build_weight_field(kind.weight, grid)

    def one(obs):
        return estimate_from_loglik(kind, log_likelihood_field(obs, towers, noise, grid), weight)

    if threads <= 1:
        return [one(o) for o in observations]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, observations))
