"""Monte Carlo experiments for the search-and-rescue TOA scenario.

Every trial draws its randomness from a seed derived from
``(scenario.seed, experiment stream, position index, trial index)`` with
:func:`mix_seed`, so tables do not depend on execution order or on the number
of worker threads. Reductions always run in trial-index order.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .estimators import MAP, MLE, EstimatorKind, WeightedConditionalMean, estimate_from_loglik
from .grid import (
    GridSpec,
    ScalarField,
    log_likelihood_field,
    posterior,
    posterior_from_loglik,
)
from .regions import RegionFamily, check_level, credible_region, region_family
from .toa import NoiseModel, Observation, Point2, TowerArray, predict_ranges, sample_observation
from .weighting import (
    CostSpec,
    WeightSpec,
    build_cost_field,
    build_weight_field,
    defined_weights,
    risk_prior,
    weights_near,
)

# experiment streams for seed derivation
STREAM_RMSE = 1
STREAM_AVERAGE_ERROR = 2
STREAM_COVERAGE = 3
STREAM_DOMINANCE = 4
STREAM_GROWTH = 5
STREAM_SIMULATE = 6


def mix_seed(seed: int, *keys: int) -> int:
    """Derive an independent 64-bit seed from a base seed and integer keys.

    Uses numpy's SeedSequence hash, which is stable across platforms and
    numpy versions.
    """
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class Scenario:
    grid: GridSpec
    towers: TowerArray
    noise: NoiseModel
    weight: WeightSpec
    cost: CostSpec
    seed: int = 0

    def with_sigma(self, sigma: float) -> "Scenario":
        return replace(self, noise=NoiseModel(sigma))

    def towers_outside(self) -> list[Point2]:
        """Towers lying outside the search domain (allowed, but worth flagging)."""
        return [t for t in self.towers.positions if not self.grid.contains(t)]


@dataclass(frozen=True)
class EvalRow:
    experiment: str
    estimator: str
    x_true: Point2 | None
    sigma: float
    metric: str
    value: float
    stderr: float


EVAL_HEADER = ["experiment", "estimator", "x_true_x", "x_true_y", "sigma", "metric", "value", "stderr"]


@dataclass
class EvalTable:
    rows: list[EvalRow]

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def select(self, **match) -> list[EvalRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in match.items())]

    def value(self, **match) -> float:
        (row,) = self.select(**match)
        return row.value

    def to_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_HEADER)
        for r in self.rows:
            xt = ("", "") if r.x_true is None else (repr(r.x_true.x), repr(r.x_true.y))
            w.writerow([r.experiment, r.estimator, *xt, repr(r.sigma), r.metric,
                        repr(r.value), repr(r.stderr)])


def run_ordered(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """``[fn(i) for i in items]``, optionally on a thread pool; order preserved."""
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _mean_stderr(samples: np.ndarray) -> tuple[float, float]:
    n = len(samples)
    m = float(np.mean(samples))
    se = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return m, se


def _prepared(kinds: Mapping[str, EstimatorKind], grid: GridSpec):
    return [(name, k, build_weight_field(k.weight, grid)) for name, k in kinds.items()]


def _sq_err(p: Point2, q: Point2) -> float:
    return (p.x - q.x) ** 2 + (p.y - q.y) ** 2


def sample_from_weight(weight: ScalarField, rng: np.random.Generator) -> Point2:
    """Draw a location with density proportional to ``weight``.

    Picks a cell by inverse CDF over cell masses, then a uniform position
    inside it.
    """
    cdf = np.cumsum(weight.values)
    u = rng.random() * cdf[-1]
    k = min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)
    g = weight.grid
    i, j = g.ij(k)
    return Point2(g.origin.x + (i + rng.random()) * g.dx, g.origin.y + (j + rng.random()) * g.dy)


def _squared_errors_at(kinds, scenario: Scenario, x_true: Point2, seeds: Sequence[int], threads: int):
    def trial(seed):
        obs = sample_observation(x_true, scenario.towers, scenario.noise, seed)
        ll = log_likelihood_field(obs, scenario.towers, scenario.noise, scenario.grid)
        return [_sq_err(estimate_from_loglik(k, ll, w), x_true) for _, k, w in kinds]

    return np.array(run_ordered(trial, seeds, threads), dtype=float).reshape(len(seeds), len(kinds))


def rmse_curve(kinds: Mapping[str, EstimatorKind], path_points: Sequence[Point2], scenario: Scenario,
               trials: int, threads: int = 1, experiment: str = "fig1") -> EvalTable:
    """Root-mean-square error of each estimator at each true source position.

    The stderr column propagates the standard error of the mean squared error
    through the square root (delta method).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prepared = _prepared(kinds, scenario.grid)
    rows = []
    for p_idx, x_true in enumerate(path_points):
        seeds = [mix_seed(scenario.seed, STREAM_RMSE, p_idx, t) for t in range(trials)]
        sq = _squared_errors_at(prepared, scenario, x_true, seeds, threads)
        for col, (name, _, _) in enumerate(prepared):
            mse, se = _mean_stderr(sq[:, col])
            rmse = math.sqrt(mse)
            rows.append(EvalRow(experiment, name, x_true, scenario.noise.sigma, "rmse", rmse,
                                se / (2 * rmse) if rmse > 0 else 0.0))
    return EvalTable(rows)


def _average_error_samples(kinds, weight: WeightSpec, scenario: Scenario, trials: int, threads: int):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    wfield = build_weight_field(weight, scenario.grid)

    def trial(t):
        rng = np.random.default_rng(mix_seed(scenario.seed, STREAM_AVERAGE_ERROR, t, 0))
        x = sample_from_weight(wfield, rng)
        obs = sample_observation(x, scenario.towers, scenario.noise,
                                 mix_seed(scenario.seed, STREAM_AVERAGE_ERROR, t, 1))
        ll = log_likelihood_field(obs, scenario.towers, scenario.noise, scenario.grid)
        return [_sq_err(estimate_from_loglik(k, ll, w), x) for _, k, w in kinds]

    out = run_ordered(trial, range(trials), threads)
    return np.array(out, dtype=float).reshape(trials, len(kinds))


def average_error(kind: EstimatorKind, weight: WeightSpec, scenario: Scenario, trials: int,
                  threads: int = 1) -> tuple[float, float]:
    """Weighted average squared error and its standard error.

    The source is drawn from the normalized weight, which turns the weighted
    integral of per-position MSE into a plain expectation.
    """
    sq = _average_error_samples(_prepared({"k": kind}, scenario.grid), weight, scenario, trials, threads)
    return _mean_stderr(sq[:, 0])


def average_error_table(kinds: Mapping[str, EstimatorKind], weight: WeightSpec, scenario: Scenario,
                        sigmas: Sequence[float], trials: int, threads: int = 1,
                        experiment: str = "fig2") -> EvalTable:
    """Average error of every estimator at every noise level.

    Within one sigma, all estimators see the same sources and observations,
    and rows are ordered by ascending average error (ties by roster order).
    """
    prepared = _prepared(kinds, scenario.grid)
    rows = []
    for sigma in sigmas:
        sq = _average_error_samples(prepared, weight, scenario.with_sigma(sigma), trials, threads)
        block = []
        for col, (name, _, _) in enumerate(prepared):
            e, se = _mean_stderr(sq[:, col])
            block.append(EvalRow(experiment, name, None, float(sigma), "average_error", e, se))
        rows.extend(sorted(block, key=lambda r: r.value))
    return EvalTable(rows)


@dataclass(frozen=True)
class CoverageCheck:
    c: float
    lhs: float
    bayes_cov: float
    stderr: float

    @property
    def passed(self) -> bool:
        return self.lhs >= self.c - 2 * self.stderr


def weighted_coverage_check(scenario: Scenario, c: float, trials: int, threads: int = 1,
                            weight: WeightSpec | None = None) -> CoverageCheck:
    """Frequentist coverage of credible regions, averaged over the weight.

    ``lhs`` is the fraction of trials whose true source cell falls inside the
    credible region built from its own observation, with sources drawn from
    the normalized weight. ``bayes_cov`` is the mean posterior mass of those
    regions; the two estimate the same probability.
    """
    check_level(c)
    weight = weight or scenario.weight
    wfield = build_weight_field(weight, scenario.grid)
    cost = build_cost_field(scenario.cost, scenario.grid)

    def trial(t):
        rng = np.random.default_rng(mix_seed(scenario.seed, STREAM_COVERAGE, t, 0))
        x = sample_from_weight(wfield, rng)
        obs = sample_observation(x, scenario.towers, scenario.noise,
                                 mix_seed(scenario.seed, STREAM_COVERAGE, t, 1))
        ll = log_likelihood_field(obs, scenario.towers, scenario.noise, scenario.grid)
        region = credible_region(posterior_from_loglik(ll, wfield), cost, c)
        return float(region.mask[scenario.grid.locate(x)]), region.coverage

    out = np.array(run_ordered(trial, range(trials), threads), dtype=float).reshape(trials, 2)
    lhs, se = _mean_stderr(out[:, 0])
    return CoverageCheck(float(c), lhs, float(np.mean(out[:, 1])), se)


@dataclass(frozen=True)
class DominanceRow:
    x: Point2
    mse_a: float
    mse_b: float
    stderr: float  # standard error of the paired difference mse_a - mse_b


def dominance_diagnostic(kind_a: EstimatorKind, kind_b: EstimatorKind, probe_points: Sequence[Point2],
                         scenario: Scenario, trials: int, threads: int = 1) -> list[DominanceRow]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    prepared = _prepared({"a": kind_a, "b": kind_b}, scenario.grid)
    rows = []
    for p_idx, x in enumerate(probe_points):
        seeds = [mix_seed(scenario.seed, STREAM_DOMINANCE, p_idx, t) for t in range(trials)]
        sq = _squared_errors_at(prepared, scenario, x, seeds, threads)
        _, se = _mean_stderr(sq[:, 0] - sq[:, 1])
        rows.append(DominanceRow(x, float(np.mean(sq[:, 0])), float(np.mean(sq[:, 1])), se))
    return rows


def dominance_verdict(rows: Sequence[DominanceRow]) -> str | None:
    """``"a"`` or ``"b"`` if that estimator has lower MSE at every probe, else None.

    A dominating estimator is evidence (at grid resolution) that the other
    one is not admissible.
    """
    if rows and all(r.mse_a < r.mse_b for r in rows):
        return "a"
    if rows and all(r.mse_b < r.mse_a for r in rows):
        return "b"
    return None


@dataclass(frozen=True, eq=False)
class GrowthResult:
    observation: Observation
    posterior: ScalarField
    family: RegionFamily
    components: tuple[int, ...]

    @property
    def monotone_components(self) -> bool:
        return all(b >= a for a, b in zip(self.components, self.components[1:]))

    def split_levels(self) -> tuple[float, float] | None:
        """First pair ``(c1, c2)`` with one component at c1 and two at a later c2."""
        for a, (c1, n1) in enumerate(zip(self.family.levels, self.components)):
            if n1 != 1:
                continue
            for c2, n2 in zip(self.family.levels[a + 1:], self.components[a + 1:]):
                if n2 == 2:
                    return c1, c2
        return None


def region_growth_experiment(scenario: Scenario, x_true: Point2, c_list: Sequence[float],
                             noiseless: bool = True) -> GrowthResult:
    """Credible regions of a single observation over a ladder of levels.

    The posterior uses ``scenario.weight`` as the weighting function and the
    regions use ``scenario.cost``. With ``noiseless=False`` the observation is
    drawn once from the scenario seed.
    """
    if noiseless:
        obs = Observation(tuple(predict_ranges(x_true, scenario.towers)))
    else:
        obs = sample_observation(x_true, scenario.towers, scenario.noise,
                                 mix_seed(scenario.seed, STREAM_GROWTH, 0))
    post = posterior(obs, scenario.towers, scenario.noise, build_weight_field(scenario.weight, scenario.grid))
    fam = region_family(post, build_cost_field(scenario.cost, scenario.grid), c_list)
    return GrowthResult(obs, post, fam, tuple(r.components for r in fam.regions))


def diagonal_path(n: int = 19) -> list[Point2]:
    return [Point2(k, k) for k in range(1, n + 1)]


def paper_roster() -> dict[str, EstimatorKind]:
    """The four estimators compared in the search-and-rescue demonstration."""
    return {
        "mle": MLE(),
        "map": MAP(risk_prior()),
        "weights_near": WeightedConditionalMean(weights_near()),
        "defined_weights": WeightedConditionalMean(defined_weights()),
    }
