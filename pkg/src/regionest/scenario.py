"""YAML scenario files.

A scenario file holds the grid, towers, noise level, weighting function,
search-cost density and seed, plus two optional sections: ``estimators``
(a named roster) and ``experiment`` (defaults for the figure commands).
Unknown keys are rejected with their line and column.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError, RegionEstError
from .estimators import MAP, MLE, EstimatorKind, WeightedConditionalMean
from .evaluation import Scenario, diagonal_path, paper_roster
from .grid import GridSpec
from .toa import NoiseModel, Point2, TowerArray
from .weighting import (
    Disk,
    GaussianComponent,
    GaussianMixture,
    PathProximity,
    RiskInverseDistance,
    RiskRegions,
    Uniform,
    UniformCost,
)

BUILTIN = ("paper_fig1", "paper_fig2", "paper_fig3")


@dataclass
class ExperimentSettings:
    trials: int | None = None
    path: list[Point2] = field(default_factory=diagonal_path)
    sigma_list: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 1.0])
    c_list: list[float] = field(default_factory=lambda: [round(0.05 * k, 2) for k in range(1, 20)])
    x_true: Point2 | None = None
    observation: str = "noiseless"


@dataclass
class ScenarioConfig:
    scenario: Scenario
    estimators: dict[str, EstimatorKind]
    experiment: ExperimentSettings
    source: str = "<scenario>"

    def resolve_estimator(self, tag: str) -> EstimatorKind:
        """Look up a roster name, or one of the generic tags ``mle``, ``map``, ``wcm``.

        The generic ``map`` and ``wcm`` use the scenario's own weight.
        """
        if tag in self.estimators:
            return self.estimators[tag]
        generic = {"mle": MLE(), "map": MAP(self.scenario.weight),
                   "wcm": WeightedConditionalMean(self.scenario.weight)}
        if tag in generic:
            return generic[tag]
        known = sorted(set(self.estimators) | set(generic))
        raise ConfigError(f"unknown estimator {tag!r}; known: {', '.join(known)}")


class _Reader:
    def __init__(self, source: str):
        self.source = source

    def fail(self, node, msg):
        m = node.start_mark if node is not None else None
        raise ConfigError(msg, m.line + 1 if m else None, m.column + 1 if m else None, self.source)

    def mapping(self, node, where, required=(), optional=()):
        if not isinstance(node, yaml.MappingNode):
            self.fail(node, f"{where} must be a mapping")
        out = {}
        allowed = set(required) | set(optional)
        for k, v in node.value:
            key = k.value if isinstance(k, yaml.ScalarNode) else None
            if key not in allowed:
                self.fail(k, f"unknown key {key!r} in {where}")
            if key in out:
                self.fail(k, f"duplicate key {key!r} in {where}")
            out[key] = v
        for key in required:
            if key not in out:
                self.fail(node, f"missing key {key!r} in {where}")
        return out

    def sequence(self, node, where):
        if not isinstance(node, yaml.SequenceNode):
            self.fail(node, f"{where} must be a list")
        return node.value

    def number(self, node, where):
        if not isinstance(node, yaml.ScalarNode) or node.tag.rsplit(":", 1)[-1] not in ("int", "float"):
            self.fail(node, f"{where} must be a number")
        try:
            v = float(yaml.safe_load(node.value))
        except (TypeError, ValueError):
            self.fail(node, f"{where} must be a number")
        if not math.isfinite(v):
            self.fail(node, f"{where} must be finite")
        return v

    def integer(self, node, where):
        if not isinstance(node, yaml.ScalarNode) or not node.tag.endswith(":int"):
            self.fail(node, f"{where} must be an integer")
        return int(yaml.safe_load(node.value))

    def string(self, node, where):
        if not isinstance(node, yaml.ScalarNode) or not node.tag.endswith(":str"):
            self.fail(node, f"{where} must be a string")
        return node.value

    def point(self, node, where):
        items = self.sequence(node, where)
        if len(items) != 2:
            self.fail(node, f"{where} must be a pair [x, y]")
        return Point2(self.number(items[0], where), self.number(items[1], where))

    def points(self, node, where):
        return [self.point(n, f"{where}[{k}]") for k, n in enumerate(self.sequence(node, where))]

    def numbers(self, node, where):
        return [self.number(n, where) for n in self.sequence(node, where)]

    def grid(self, node):
        m = self.mapping(node, "grid", ("origin", "width", "height", "nx", "ny"))
        return GridSpec(self.point(m["origin"], "grid.origin"), self.number(m["width"], "grid.width"),
                        self.number(m["height"], "grid.height"), self.integer(m["nx"], "grid.nx"),
                        self.integer(m["ny"], "grid.ny"))

    def weight(self, node, where="weight"):
        m = self.mapping(node, where, ("variant",), ("params",))
        variant = self.string(m["variant"], f"{where}.variant")
        pnode = m.get("params")
        w = f"{where}.params"
        if variant == "uniform":
            if pnode is not None and not (isinstance(pnode, yaml.MappingNode) and not pnode.value):
                self.mapping(pnode, w)
            return Uniform()
        if pnode is None:
            self.fail(node, f"{where} variant {variant!r} needs params")
        if variant == "gaussian_mixture":
            p = self.mapping(pnode, w, ("components",))
            comps = []
            for k, cn in enumerate(self.sequence(p["components"], f"{w}.components")):
                cw = f"{w}.components[{k}]"
                c = self.mapping(cn, cw, ("center", "sigma"), ("mass",))
                comps.append(GaussianComponent(
                    self.point(c["center"], f"{cw}.center"), self.number(c["sigma"], f"{cw}.sigma"),
                    self.number(c["mass"], f"{cw}.mass") if "mass" in c else 1.0))
            return GaussianMixture(tuple(comps))
        if variant == "path_proximity":
            p = self.mapping(pnode, w, ("a", "b", "c"), ("scale",))
            return PathProximity(self.number(p["a"], f"{w}.a"), self.number(p["b"], f"{w}.b"),
                                 self.number(p["c"], f"{w}.c"),
                                 self.number(p["scale"], f"{w}.scale") if "scale" in p else 1.0)
        if variant == "risk_inverse_distance":
            p = self.mapping(pnode, w, ("centers",), ("epsilon", "floor"))
            return RiskInverseDistance(
                tuple(self.points(p["centers"], f"{w}.centers")),
                self.number(p["epsilon"], f"{w}.epsilon") if "epsilon" in p else 1.0,
                self.number(p["floor"], f"{w}.floor") if "floor" in p else 0.05)
        self.fail(m["variant"], f"unknown weight variant {variant!r}")

    def cost(self, node):
        m = self.mapping(node, "cost", ("variant",), ("params",))
        variant = self.string(m["variant"], "cost.variant")
        pnode = m.get("params")
        if variant == "uniform_cost":
            if pnode is None:
                return UniformCost()
            p = self.mapping(pnode, "cost.params", (), ("value",))
            return UniformCost(self.number(p["value"], "cost.params.value") if "value" in p else 1.0)
        if variant == "risk_regions":
            if pnode is None:
                self.fail(node, "cost variant 'risk_regions' needs params")
            p = self.mapping(pnode, "cost.params", ("regions",), ("outside_cost",))
            disks = []
            for k, rn in enumerate(self.sequence(p["regions"], "cost.params.regions")):
                rw = f"cost.params.regions[{k}]"
                r = self.mapping(rn, rw, ("center", "radius", "inside_cost"))
                disks.append(Disk(self.point(r["center"], f"{rw}.center"),
                                  self.number(r["radius"], f"{rw}.radius"),
                                  self.number(r["inside_cost"], f"{rw}.inside_cost")))
            out = self.number(p["outside_cost"], "cost.params.outside_cost") if "outside_cost" in p else 1.0
            return RiskRegions(tuple(disks), out)
        self.fail(m["variant"], f"unknown cost variant {variant!r}")

    def estimators(self, node):
        if not isinstance(node, yaml.MappingNode):
            self.fail(node, "estimators must be a mapping of name -> estimator")
        roster = {}
        for k, v in node.value:
            name = k.value
            where = f"estimators.{name}"
            m = self.mapping(v, where, ("kind",), ("weight",))
            kind = self.string(m["kind"], f"{where}.kind")
            if kind == "mle":
                if "weight" in m:
                    self.fail(m["weight"], f"{where}: mle takes no weight")
                roster[name] = MLE()
            elif kind in ("map", "wcm"):
                if "weight" not in m:
                    self.fail(v, f"{where}: {kind} needs a weight")
                w = self.weight(m["weight"], f"{where}.weight")
                roster[name] = MAP(w) if kind == "map" else WeightedConditionalMean(w)
            else:
                self.fail(m["kind"], f"unknown estimator kind {kind!r}")
        return roster

    def experiment(self, node):
        m = self.mapping(node, "experiment", (),
                         ("trials", "path", "sigma_list", "c_list", "x_true", "observation"))
        s = ExperimentSettings()
        if "trials" in m:
            s.trials = self.integer(m["trials"], "experiment.trials")
            if s.trials < 1:
                self.fail(m["trials"], "experiment.trials must be >= 1")
        if "path" in m:
            s.path = self.points(m["path"], "experiment.path")
        if "sigma_list" in m:
            s.sigma_list = self.numbers(m["sigma_list"], "experiment.sigma_list")
        if "c_list" in m:
            s.c_list = self.numbers(m["c_list"], "experiment.c_list")
        if "x_true" in m:
            s.x_true = self.point(m["x_true"], "experiment.x_true")
        if "observation" in m:
            s.observation = self.string(m["observation"], "experiment.observation")
            if s.observation not in ("noiseless", "sampled"):
                self.fail(m["observation"], "experiment.observation must be 'noiseless' or 'sampled'")
        return s


def parse_scenario(text: str, source: str = "<scenario>", seed_override: int | None = None) -> ScenarioConfig:
    reader = _Reader(source)
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        m = exc.problem_mark
        raise ConfigError(f"malformed YAML: {exc.problem}", m.line + 1 if m else None,
                          m.column + 1 if m else None, source) from None
    if root is None:
        raise ConfigError("empty scenario file", source=source)
    top = reader.mapping(root, "scenario", ("grid", "towers", "noise", "weight", "cost", "seed"),
                         ("estimators", "experiment"))
    try:
        grid = reader.grid(top["grid"])
        towers = TowerArray(tuple(reader.points(top["towers"], "towers")))
        noise_m = reader.mapping(top["noise"], "noise", ("sigma",))
        noise = NoiseModel(reader.number(noise_m["sigma"], "noise.sigma"))
        seed = reader.integer(top["seed"], "seed")
        if seed < 0:
            reader.fail(top["seed"], "seed must be >= 0")
        if seed_override is not None:
            seed = seed_override
        scenario = Scenario(grid, towers, noise, reader.weight(top["weight"]), reader.cost(top["cost"]), seed)
        roster = reader.estimators(top["estimators"]) if "estimators" in top else paper_roster()
        exp = reader.experiment(top["experiment"]) if "experiment" in top else ExperimentSettings()
    except ConfigError:
        raise
    except RegionEstError as exc:
        raise ConfigError(str(exc), source=source) from None
    return ScenarioConfig(scenario, roster, exp, source)


def resolve_path(name_or_path: str) -> Path | None:
    """Return the shipped scenario file for a builtin name, else None."""
    stem = name_or_path[:-5] if name_or_path.endswith(".yaml") else name_or_path
    if stem in BUILTIN and not Path(name_or_path).exists():
        return Path(str(resources.files("regionest") / "scenarios" / f"{stem}.yaml"))
    return None


def load_scenario(path: str | Path, seed_override: int | None = None) -> ScenarioConfig:
    """Read a scenario file; builtin names such as ``paper_fig1`` also work."""
    p = resolve_path(str(path)) or Path(path)
    text = p.read_text(encoding="utf-8")
    return parse_scenario(text, str(path), seed_override)
