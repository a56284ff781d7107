import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from regionest.errors import DegenerateFieldError, DegeneratePosteriorError, RoleError
from regionest.grid import (
    GridSpec,
    ScalarField,
    argmax,
    constant_field,
    integrate,
    mean,
    normalize,
    posterior,
    write_field_csv,
)
from regionest.toa import NoiseModel, Observation, Point2, predict_ranges


def unit_grid(n=64):
    return GridSpec(Point2(0, 0), 1, 1, n, n)


def test_cell_centres_row_major():
    g = GridSpec(Point2(1, 2), 4, 2, 4, 2)
    assert g.cell_area == 1.0
    assert g.center(0) == Point2(1.5, 2.5)
    assert g.center(1) == Point2(2.5, 2.5)  # i fastest
    assert g.center(4) == Point2(1.5, 3.5)
    assert tuple(g.centers[5]) == (2.5, 3.5)
    assert g.locate(Point2(2.7, 3.1)) == 5
    assert g.locate(Point2(5, 4)) == 7
    assert g.locate(Point2(0, 0)) is None


def test_integrate_constants(paper_grid):
    assert integrate(constant_field(paper_grid, 1.0)) == pytest.approx(400.0, rel=1e-12)
    assert integrate(constant_field(paper_grid, 0.0)) == 0


def test_integrate_linear_exact():
    g = unit_grid()
    assert integrate(ScalarField(g, g.centers[:, 0])) == pytest.approx(0.5, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), seed=st.integers(0, 2 ** 32 - 1))
def test_integrate_is_linear(a, b, seed):
    g = GridSpec(Point2(0, 0), 3, 2, 7, 5)
    rng = np.random.default_rng(seed)
    f, h = rng.normal(size=g.size), rng.normal(size=g.size)
    lhs = integrate(ScalarField(g, a * f + b * h))
    rhs = a * integrate(ScalarField(g, f)) + b * integrate(ScalarField(g, h))
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(a) + abs(b)) * g.size)


def test_normalize_constant_and_point_mass(paper_grid):
    d = normalize(constant_field(paper_grid, 3.0))
    assert np.allclose(d.values, 1 / 400, rtol=1e-12)
    vals = np.zeros(paper_grid.size)
    vals[123] = 7.0
    pm = normalize(ScalarField(paper_grid, vals, "weight"))
    assert pm.values[123] == pytest.approx(1 / paper_grid.cell_area)
    assert np.count_nonzero(pm.values) == 1


def test_normalize_idempotent(coarse_grid):
    rng = np.random.default_rng(3)
    d = normalize(ScalarField(coarse_grid, rng.random(coarse_grid.size), "weight"))
    assert np.array_equal(normalize(d).values, d.values)


def test_normalize_degenerate(coarse_grid):
    with pytest.raises(DegenerateFieldError):
        normalize(constant_field(coarse_grid, 0.0))


def test_density_role_checks_integral(coarse_grid):
    with pytest.raises(RoleError):
        ScalarField(coarse_grid, np.ones(coarse_grid.size), "density")
    with pytest.raises(RoleError):
        ScalarField(coarse_grid, np.zeros(coarse_grid.size), "cost")


def test_fields_are_immutable(coarse_grid):
    f = constant_field(coarse_grid, 1.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0


def test_argmax_tie_breaks():
    g = GridSpec(Point2(0, 0), 4, 4, 4, 4)
    assert argmax(ScalarField(g, np.ones(16))) == g.center(0)
    v = np.zeros(16)
    v[5] = v[9] = 1.0
    assert argmax(ScalarField(g, v)) == g.center(5)
    v[12] = 2.0
    assert argmax(ScalarField(g, v)) == g.center(12)


def test_mean_point_masses(paper_grid):
    v = np.zeros(paper_grid.size)
    v[4321] = 1.0
    c = paper_grid.center(4321)
    m = mean(normalize(ScalarField(paper_grid, v, "weight")))
    assert m.x == pytest.approx(c.x, abs=1e-12) and m.y == pytest.approx(c.y, abs=1e-12)
    g = GridSpec(Point2(0, 0), 10, 10, 10, 10)
    v = np.zeros(g.size)
    v[g.locate(Point2(2.5, 2.5))] = v[g.locate(Point2(8.5, 8.5))] = 1.0
    # centres (2.5, 2.5) and (8.5, 8.5): midpoint (5.5, 5.5)
    assert mean(normalize(ScalarField(g, v, "weight"))) == Point2(5.5, 5.5)


def test_mean_symmetric_density(coarse_grid):
    rng = np.random.default_rng(0)
    half = rng.random(coarse_grid.size)
    sym = half + half[::-1]  # 180-degree rotation about the domain centre
    m = mean(normalize(ScalarField(coarse_grid, sym, "weight")))
    assert m.x == pytest.approx(10, abs=1e-9) and m.y == pytest.approx(10, abs=1e-9)


def test_mean_requires_density(coarse_grid):
    with pytest.raises(RoleError):
        mean(constant_field(coarse_grid, 1.0))


def test_mean_converges_under_refinement():
    mu, s = (9.3, 11.7), 1.5
    errs = []
    for n in (10, 20, 40, 80):
        g = GridSpec(Point2(0, 0), 20, 20, n, n)
        c = g.centers
        v = np.exp(-((c[:, 0] - mu[0]) ** 2 + (c[:, 1] - mu[1]) ** 2) / (2 * s * s))
        m = mean(normalize(ScalarField(g, v, "weight")))
        errs.append(math.hypot(m.x - mu[0], m.y - mu[1]))
        assert errs[-1] <= g.dx
    assert errs[-1] < 1e-6


def test_posterior_uniform_weight_matches_likelihood(towers, coarse_grid):
    obs = Observation((3.2, 6.1, 10.5))
    post = posterior(obs, towers, NoiseModel(0.5), constant_field(coarse_grid, 1.0))
    assert integrate(post) == pytest.approx(1.0, abs=1e-12)
    from regionest.grid import log_likelihood_field

    ll = log_likelihood_field(obs, towers, NoiseModel(0.5), coarse_grid)
    assert argmax(post) == argmax(ll)


def test_posterior_point_mass_weight(towers, coarse_grid):
    v = np.zeros(coarse_grid.size)
    v[777] = 1.0
    # likelihood there is astronomically small but max-subtraction keeps it
    obs = Observation((50.0, 50.0, 50.0))
    post = posterior(obs, towers, NoiseModel(0.1), ScalarField(coarse_grid, v, "weight"))
    assert np.flatnonzero(post.values).tolist() == [777]


def test_posterior_degenerate(towers, coarse_grid):
    with pytest.raises(DegeneratePosteriorError):
        posterior(Observation((1.0, 2.0, 3.0)), towers, NoiseModel(0.5), constant_field(coarse_grid, 0.0))


def test_posterior_mode_near_truth(towers, paper_grid):
    obs = Observation(tuple(predict_ranges(Point2(5, 5), towers)))
    post = posterior(obs, towers, NoiseModel(0.5), constant_field(paper_grid, 1.0))
    m = argmax(post)
    assert math.hypot(m.x - 5, m.y - 5) <= 2 * paper_grid.cell_diagonal


@pytest.mark.parametrize("k", [0.37, 2.0, 1e6])
def test_posterior_weight_scale_invariance(towers, coarse_grid, k):
    rng = np.random.default_rng(8)
    w = rng.random(coarse_grid.size) + 0.1
    obs = Observation((4.0, 7.0, 9.0))
    a = posterior(obs, towers, NoiseModel(0.8), ScalarField(coarse_grid, w, "weight"))
    b = posterior(obs, towers, NoiseModel(0.8), ScalarField(coarse_grid, k * w, "weight"))
    assert np.allclose(a.values, b.values, rtol=1e-12, atol=0)


def test_field_csv_export():
    g = GridSpec(Point2(0, 0), 2, 2, 2, 2)
    buf = io.StringIO()
    write_field_csv(ScalarField(g, [1.0, 2.0, 3.0, 4.0]), buf)
    assert buf.getvalue().splitlines() == [
        "i,j,x,y,value", "0,0,0.5,0.5,1.0", "1,0,1.5,0.5,2.0", "0,1,0.5,1.5,3.0", "1,1,1.5,1.5,4.0"]
