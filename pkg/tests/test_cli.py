import csv
import textwrap

import pytest

from regionest.cli import main, read_observations
from regionest.errors import ConfigError
from regionest.estimators import estimate
from regionest.scenario import load_scenario, parse_scenario
from regionest.toa import Point2, predict_ranges

SMALL = textwrap.dedent("""\
    seed: 42
    grid: {origin: [0, 0], width: 20, height: 20, nx: 40, ny: 40}
    towers: [[5, 2], [1, 10], [15, 7]]
    noise: {sigma: 0.5}
    weight:
      variant: risk_inverse_distance
      params: {centers: [[5, 5], [12, 12]], epsilon: 1.0, floor: 0.05}
    cost:
      variant: risk_regions
      params:
        outside_cost: 1.0
        regions:
          - {center: [5, 5], radius: 2.8284271247461903, inside_cost: 5.0}
    experiment:
      trials: 4
      path: [[2, 2], [5, 5]]
      sigma_list: [0.3, 0.6]
      x_true: [5, 5]
      c_list: [0.5, 0.9]
    """)

# one tower equidistant from all four cells makes the likelihood flat, so the
# posterior is exactly the tabulated weight [0.4, 0.3, 0.2, 0.1]
TWO_BY_TWO = textwrap.dedent("""\
    seed: 0
    grid: {origin: [0, 0], width: 2, height: 2, nx: 2, ny: 2}
    towers: [[1, 1]]
    noise: {sigma: 1.0}
    weight:
      variant: gaussian_mixture
      params:
        components:
          - {center: [0.5, 0.5], sigma: 0.01, mass: 0.4}
          - {center: [1.5, 0.5], sigma: 0.01, mass: 0.3}
          - {center: [0.5, 1.5], sigma: 0.01, mass: 0.2}
          - {center: [1.5, 1.5], sigma: 0.01, mass: 0.1}
    cost:
      variant: risk_regions
      params:
        outside_cost: 1.0
        regions: [{center: [1.5, 0.5], radius: 0.1, inside_cost: 2.0}]
    """)


@pytest.fixture
def small_file(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def run(*args):
    return main([str(a) for a in args])


def test_shipped_scenarios_parse():
    for name in ("paper_fig1", "paper_fig2", "paper_fig3"):
        cfg = load_scenario(name)
        assert cfg.scenario.grid.nx == 200 and cfg.scenario.towers_outside() == []
    assert set(load_scenario("paper_fig1").estimators) == {"mle", "map", "weights_near", "defined_weights"}


def test_unknown_key_reports_position():
    bad = SMALL.replace("noise: {sigma: 0.5}", "noise: {sigma: 0.5, sigmaa: 1}")
    with pytest.raises(ConfigError) as err:
        parse_scenario(bad, "s.yaml")
    assert "sigmaa" in str(err.value)
    assert (err.value.line, err.value.column) == (4, 21)


@pytest.mark.parametrize("text", [
    "seed: 1\ngrid: [",
    SMALL.replace("nx: 40", "nx: 1.5"),
    SMALL.replace("sigma: 0.5", "sigma: .nan"),
    SMALL.replace("risk_inverse_distance", "bogus"),
    SMALL + "extra: 1\n",
])
def test_bad_scenarios(text):
    with pytest.raises(ConfigError):
        parse_scenario(text)


def test_malformed_key_exit_code(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text(SMALL.replace("seed: 42", "seeed: 42"))
    assert run("simulate", "--scenario", p, "--x-true", "1,1") == 2
    err = capsys.readouterr().err
    assert "seeed" in err and "bad.yaml:1:1" in err


def test_missing_file_exit_code(tmp_path):
    assert run("fig3", "--scenario", tmp_path / "nope.yaml", "--out", tmp_path / "x") == 3


def test_unwritable_output_exit_code(small_file, tmp_path):
    assert run("simulate", "--scenario", small_file, "--out", tmp_path / "no" / "dir.csv") == 3


def test_simulate_noiseless(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(SMALL.replace("sigma: 0.5", "sigma: 0.0"))
    out = tmp_path / "obs.csv"
    assert run("simulate", "--scenario", p, "--x-true", "3.5,8.25", "--trials", 3, "--out", out) == 0
    body = rows(out)
    assert body[0] == ["trial", "tower", "range"] and len(body) == 1 + 9
    truth = predict_ranges(Point2(3.5, 8.25), load_scenario(p).scenario.towers)
    for t, k, r in body[1:]:
        assert float(r) == truth[int(k)]


def test_simulate_byte_identical_and_seed_env(small_file, tmp_path, monkeypatch):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    run("simulate", "--scenario", small_file, "--trials", 5, "--out", a)
    run("simulate", "--scenario", small_file, "--trials", 5, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv("REGIONEST_SEED", "43")
    run("simulate", "--scenario", small_file, "--trials", 5, "--out", c)
    assert c.read_bytes() != a.read_bytes()
    monkeypatch.setenv("REGIONEST_SEED", "minus one")
    assert run("simulate", "--scenario", small_file, "--out", c) == 2


def test_estimate_round_trip(small_file, tmp_path):
    obs, est = tmp_path / "obs.csv", tmp_path / "est.csv"
    run("simulate", "--scenario", small_file, "--trials", 6, "--out", obs)
    assert run("estimate", "--scenario", small_file, "--obs", obs, "--estimator", "defined_weights",
               "--out", est) == 0
    cfg = load_scenario(small_file)
    sc = cfg.scenario
    loaded = read_observations(obs, len(sc.towers))
    body = rows(est)
    assert body[0] == ["trial", "estimator", "x", "y"]
    for (t, o), row in zip(loaded, body[1:]):
        p = estimate(cfg.resolve_estimator("defined_weights"), o, sc.towers, sc.noise, sc.grid)
        assert row == [str(t), "defined_weights", repr(p.x), repr(p.y)]
    est8 = tmp_path / "est8.csv"
    run("estimate", "--scenario", small_file, "--obs", obs, "--estimator", "defined_weights",
        "--out", est8, "--threads", 8)
    assert est8.read_bytes() == est.read_bytes()


def test_estimate_edge_cases(small_file, tmp_path):
    empty, out = tmp_path / "empty.csv", tmp_path / "out.csv"
    empty.write_text("trial,tower,range\n")
    assert run("estimate", "--scenario", small_file, "--obs", empty, "--estimator", "mle", "--out", out) == 0
    assert out.read_text() == "trial,estimator,x,y\n"
    assert run("estimate", "--scenario", small_file, "--obs", empty, "--estimator", "nope", "--out", out) == 2
    short = tmp_path / "short.csv"
    short.write_text("trial,tower,range\n0,0,1.0\n0,1,2.0\n")
    assert run("estimate", "--scenario", small_file, "--obs", short, "--estimator", "mle", "--out", out) == 2
    extra = tmp_path / "extra.csv"
    extra.write_text("trial,tower,range\n0,0,1.0\n0,1,2.0\n0,2,3.0\n0,3,4.0\n")
    assert run("estimate", "--scenario", small_file, "--obs", extra, "--estimator", "mle", "--out", out) == 2


def test_region_full_and_nested(small_file, tmp_path):
    obs = tmp_path / "obs.csv"
    run("simulate", "--scenario", small_file, "--out", obs)
    prefix = tmp_path / "r"
    assert run("region", "--scenario", small_file, "--obs", obs, "--c-list", "0.3,0.6,0.9,1.0",
               "--out", prefix) == 0
    summary = rows(f"{prefix}_summary.csv")
    assert summary[0] == ["c", "alpha", "coverage", "nu_volume", "components"]
    masks = rows(f"{prefix}_masks.csv")[1:]
    by_level = {}
    for c, i, j in masks:
        by_level.setdefault(float(c), set()).add((int(i), int(j)))
    assert len(by_level[1.0]) == 40 * 40
    levels = sorted(by_level)
    for a, b in zip(levels, levels[1:]):
        assert by_level[a] <= by_level[b]


def test_region_two_by_two(tmp_path):
    p = tmp_path / "tiny.yaml"
    p.write_text(TWO_BY_TWO)
    obs = tmp_path / "obs.csv"
    obs.write_text("trial,tower,range\n0,0,0.7\n")
    prefix = tmp_path / "tiny"
    assert run("region", "--scenario", p, "--obs", obs, "--c-list", "0.5", "--out", prefix) == 0
    c, alpha, cov, nu, comp = (float(v) for v in rows(f"{prefix}_summary.csv")[1])
    assert alpha == pytest.approx(0.2, rel=1e-12) and cov == pytest.approx(0.6, rel=1e-12)
    assert nu == 2.0 and comp == 1
    assert rows(f"{prefix}_masks.csv")[1:] == [["0.5", "0", "0"], ["0.5", "0", "1"]]
    flat = tmp_path / "flat.yaml"
    flat.write_text(TWO_BY_TWO.replace("inside_cost: 2.0", "inside_cost: 1.0"))
    run("region", "--scenario", flat, "--obs", obs, "--c-list", "0.5", "--out", prefix)
    assert rows(f"{prefix}_masks.csv")[1:] == [["0.5", "0", "0"], ["0.5", "1", "0"]]


@pytest.mark.parametrize("cmd", ["fig1", "fig2"])
def test_figure_tables_deterministic(cmd, small_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(cmd, "--scenario", small_file, "--out", a) == 0
    assert run(cmd, "--scenario", small_file, "--out", b, "--threads", 8) == 0
    assert a.read_bytes() == b.read_bytes()
    body = rows(a)
    assert body[0] == ["experiment", "estimator", "x_true_x", "x_true_y", "sigma", "metric", "value", "stderr"]
    per_sigma = 2 if cmd == "fig2" else 1
    per_point = 1 if cmd == "fig2" else 2
    assert len(body) - 1 == 4 * per_sigma * per_point


def test_fig1_sigma_list(small_file, tmp_path):
    out = tmp_path / "f.csv"
    assert run("fig1", "--scenario", small_file, "--sigma-list", "0.2,0.4", "--trials", 2, "--out", out) == 0
    assert {r[4] for r in rows(out)[1:]} == {"0.2", "0.4"}


def test_fig3_outputs(small_file, tmp_path):
    prefix = tmp_path / "g"
    field = tmp_path / "ratio.csv"
    assert run("fig3", "--scenario", small_file, "--out", prefix, "--field-out", field) == 0
    ratio = rows(field)
    assert ratio[0] == ["i", "j", "x", "y", "value"] and len(ratio) == 1 + 40 * 40
    # every in-region cell has ratio >= alpha of its level
    alpha = float(rows(f"{prefix}_summary.csv")[1][1])
    value = {(r[0], r[1]): float(r[4]) for r in ratio[1:]}
    assert all(value[(i, j)] >= alpha for c, i, j in rows(f"{prefix}_masks.csv")[1:] if c == "0.5")
    assert [r[0] for r in rows(f"{prefix}_summary.csv")[1:]] == ["0.5", "0.9"]
    first = (tmp_path / "g_masks.csv").read_bytes()
    run("fig3", "--scenario", small_file, "--out", prefix, "--threads", 8)
    assert (tmp_path / "g_masks.csv").read_bytes() == first


def test_towers_outside_flagged(tmp_path, capsys):
    p = tmp_path / "o.yaml"
    p.write_text(SMALL.replace("[15, 7]]", "[25, 7]]"))
    assert run("simulate", "--scenario", p, "--out", tmp_path / "o.csv") == 0
    assert "(25, 7)" in capsys.readouterr().err


def test_bad_flags_exit_two(small_file):
    with pytest.raises(SystemExit) as err:
        main(["simulate", "--scenario", str(small_file), "--x-true", "1"])
    assert err.value.code == 2
    with pytest.raises(SystemExit) as err:
        main(["region", "--scenario", str(small_file), "--obs", "x", "--out", "y", "--c-list", "a,b"])
    assert err.value.code == 2
