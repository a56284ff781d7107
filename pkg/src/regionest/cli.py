"""Command-line front end.

Exit codes: 0 success, 2 bad input or configuration, 3 I/O failure.
Every output depends only on the scenario bytes, the command and its flags.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys

from .errors import ConfigError, RegionEstError
from .estimators import estimate_batch
from .evaluation import (
    STREAM_SIMULATE,
    EvalTable,
    average_error_table,
    mix_seed,
    region_growth_experiment,
    rmse_curve,
)
from .grid import posterior, write_field_csv
from .regions import density_ratio, region_family, write_region_masks, write_region_summary
from .scenario import ScenarioConfig, load_scenario
from .toa import Observation, Point2, sample_observation
from .weighting import build_cost_field, build_weight_field

SEED_ENV = "REGIONEST_SEED"
EXIT_INPUT = 2
EXIT_IO = 3


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _point(text: str) -> Point2:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}")
    try:
        return Point2(*vals)
    except RegionEstError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        n = 0
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return n


def _seed_override() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV} must be a nonnegative integer, got {raw!r}") from None
    if seed < 0:
        raise ConfigError(f"{SEED_ENV} must be a nonnegative integer, got {raw!r}")
    return seed


def _load(args) -> ScenarioConfig:
    cfg = load_scenario(args.scenario, _seed_override())
    outside = cfg.scenario.towers_outside()
    if outside:
        listed = ", ".join(f"({p.x:g}, {p.y:g})" for p in outside)
        print(f"note: towers outside the search domain: {listed}", file=sys.stderr)
    return cfg


def _write(path: str | None, render) -> None:
    buf = io.StringIO(newline="")
    render(buf)
    if path is None or path == "-":
        sys.stdout.write(buf.getvalue())
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_observations(path: str, n_towers: int) -> list[tuple[int, Observation]]:
    """Parse a ``trial,tower,range`` CSV into observations in file order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return []
        if [h.strip() for h in header] != ["trial", "tower", "range"]:
            raise ConfigError(f"expected header trial,tower,range, got {','.join(header)}", 1, 1, path)
        trials: dict[int, dict[int, float]] = {}
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise ConfigError(f"expected 3 fields, got {len(row)}", line, 1, path)
            try:
                t, k, r = int(row[0]), int(row[1]), float(row[2])
            except ValueError:
                raise ConfigError(f"bad observation row {row}", line, 1, path) from None
            if not 0 <= k < n_towers:
                raise ConfigError(f"tower index {k} out of range for {n_towers} towers", line, 1, path)
            if k in trials.setdefault(t, {}):
                raise ConfigError(f"duplicate range for trial {t}, tower {k}", line, 1, path)
            trials[t][k] = r
    out = []
    for t, ranges in trials.items():
        if len(ranges) != n_towers:
            raise ConfigError(f"trial {t} has {len(ranges)} ranges but the scenario has {n_towers} towers",
                              source=path)
        try:
            out.append((t, Observation(tuple(ranges[k] for k in range(n_towers)))))
        except RegionEstError as exc:
            raise ConfigError(f"trial {t}: {exc}", source=path) from None
    return out


def cmd_simulate(args) -> None:
    cfg = _load(args)
    sc = cfg.scenario
    x_true = args.x_true or cfg.experiment.x_true
    if x_true is None:
        raise ConfigError("no source position: pass --x-true or set experiment.x_true")
    trials = args.trials or 1
    rows = [(t, sample_observation(x_true, sc.towers, sc.noise, mix_seed(sc.seed, STREAM_SIMULATE, t)))
            for t in range(trials)]

    def render(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "tower", "range"])
        for t, obs in rows:
            for k, r in enumerate(obs.ranges):
                w.writerow([t, k, repr(r)])

    _write(args.out, render)


def cmd_estimate(args) -> None:
    cfg = _load(args)
    sc = cfg.scenario
    kind = cfg.resolve_estimator(args.estimator)
    observations = read_observations(args.obs, len(sc.towers))
    sc.noise.require_positive()
    est = estimate_batch(kind, [o for _, o in observations], sc.towers, sc.noise, sc.grid, args.threads)

    def render(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "estimator", "x", "y"])
        for (t, _), p in zip(observations, est):
            w.writerow([t, args.estimator, repr(p.x), repr(p.y)])

    _write(args.out, render)


def _write_ratio(path: str | None, post, cost) -> None:
    if path:
        ratio = density_ratio(post, cost)
        _write(path, lambda fh: write_field_csv(ratio, fh))


def _write_family(prefix: str, family) -> None:
    _write(f"{prefix}_summary.csv", lambda fh: write_region_summary(family, fh))
    _write(f"{prefix}_masks.csv", lambda fh: write_region_masks(family, fh))
    if any(r.full_domain for r in family.regions):
        full = [repr(c) for c, r in zip(family.levels, family.regions) if r.full_domain]
        print(f"note: region covers the whole domain at c = {', '.join(full)}", file=sys.stderr)


def cmd_region(args) -> None:
    cfg = _load(args)
    sc = cfg.scenario
    observations = read_observations(args.obs, len(sc.towers))
    if not observations:
        raise ConfigError("observation file holds no trials", source=args.obs)
    c_list = args.c_list or cfg.experiment.c_list
    sc.noise.require_positive()
    post = posterior(observations[0][1], sc.towers, sc.noise, build_weight_field(sc.weight, sc.grid))
    cost = build_cost_field(sc.cost, sc.grid)
    family = region_family(post, cost, c_list)
    _write_family(args.out, family)
    _write_ratio(args.field_out, post, cost)


def cmd_fig1(args) -> None:
    cfg = _load(args)
    trials = args.trials or cfg.experiment.trials or 500
    sigmas = args.sigma_list or [cfg.scenario.noise.sigma]
    rows = []
    for s in sigmas:
        rows.extend(rmse_curve(cfg.estimators, cfg.experiment.path, cfg.scenario.with_sigma(s),
                               trials, args.threads).rows)
    _write(args.out, EvalTable(rows).to_csv)


def cmd_fig2(args) -> None:
    cfg = _load(args)
    trials = args.trials or cfg.experiment.trials or 2000
    sigmas = args.sigma_list or cfg.experiment.sigma_list
    table = average_error_table(cfg.estimators, cfg.scenario.weight, cfg.scenario, sigmas, trials, args.threads)
    _write(args.out, table.to_csv)


def cmd_fig3(args) -> None:
    cfg = _load(args)
    x_true = args.x_true or cfg.experiment.x_true
    if x_true is None:
        raise ConfigError("no source position: pass --x-true or set experiment.x_true")
    c_list = args.c_list or cfg.experiment.c_list
    result = region_growth_experiment(cfg.scenario, x_true, c_list,
                                      noiseless=cfg.experiment.observation == "noiseless")
    _write_family(args.out, result.family)
    _write_ratio(args.field_out, result.posterior, build_cost_field(cfg.scenario.cost, cfg.scenario.grid))
    if not result.monotone_components:
        print("note: component count decreases somewhere along the ladder", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regionest",
        description="Weighted point estimators and least-search-cost credible regions for TOA localization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help="output CSV path (default: stdout)", out_required=False):
        p.add_argument("--scenario", required=True, metavar="PATH",
                       help="scenario YAML file, or a shipped name (paper_fig1, paper_fig2, paper_fig3)")
        p.add_argument("--out", metavar="PATH", required=out_required, help=out_help)
        p.add_argument("--threads", type=_positive_int, default=1, metavar="N")

    p = sub.add_parser("simulate", help="draw noisy range observations")
    common(p)
    p.add_argument("--x-true", type=_point, metavar="X,Y")
    p.add_argument("--trials", type=_positive_int, metavar="N")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="point estimates for every observation in a file")
    common(p)
    p.add_argument("--obs", required=True, metavar="PATH")
    p.add_argument("--estimator", required=True, metavar="TAG",
                   help="roster name from the scenario, or mle / map / wcm")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("region", help="credible regions for the first observation in a file")
    common(p, "prefix for PREFIX_summary.csv and PREFIX_masks.csv", out_required=True)
    p.add_argument("--obs", required=True, metavar="PATH")
    p.add_argument("--c-list", type=_floats, metavar="a,b,c")
    p.add_argument("--field-out", metavar="PATH", help="also write the posterior-to-cost ratio field")
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("fig1", help="RMSE along the source path")
    common(p)
    p.add_argument("--trials", type=_positive_int, metavar="N")
    p.add_argument("--sigma-list", type=_floats, metavar="a,b,c")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("fig2", help="weighted average error versus noise level")
    common(p)
    p.add_argument("--trials", type=_positive_int, metavar="N")
    p.add_argument("--sigma-list", type=_floats, metavar="a,b,c")
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("fig3", help="credible-region growth for one observation")
    common(p, "prefix for PREFIX_summary.csv and PREFIX_masks.csv", out_required=True)
    p.add_argument("--x-true", type=_point, metavar="X,Y")
    p.add_argument("--c-list", type=_floats, metavar="a,b,c")
    p.add_argument("--field-out", metavar="PATH", help="also write the posterior-to-cost ratio field")
    p.set_defaults(func=cmd_fig3)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RegionEstError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
