import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrsearch.errors import ParameterError, ValidationError
from qrsearch.objectives import (
    BO_SUITE,
    Objective,
    antisobol,
    antish,
    bo_suite,
    illcond,
    make_objective,
    objective_names,
    pathological_ball_indicator,
    reverse_illcond,
    sphere,
)
from qrsearch.sampler import SamplerSpec, generate


def at(obj_factory, xs, d):
    """Objective with its optimum overridden to ``xs``."""
    base = obj_factory(d, 0)
    shift = np.asarray(xs) - base.optimum_location
    return lambda x: base.evaluate(np.asarray(x) - shift)


def test_sphere_examples():
    f = at(sphere, [0.0, 0.0], 2)
    assert f([0.3, 0.4]) == pytest.approx(0.5)
    s = sphere(3, seed=4)
    assert s.evaluate(s.optimum_location) == 0.0


@given(st.integers(0, 2**32))
@settings(max_examples=20)
def test_sphere_is_lipschitz(seed):
    rng = np.random.default_rng(seed)
    s = sphere(4, seed)
    x, y = rng.random(4), rng.random(4)
    assert abs(s(x) - s(y)) <= np.linalg.norm(x - y) + 1e-12


def test_illcond_examples():
    f = at(illcond, [0.5, 0.5], 2)
    assert f([0.7, 0.1]) == pytest.approx(0.04)
    assert f([0.7, 0.9]) == pytest.approx(0.04)
    with pytest.raises(ParameterError):
        illcond(1)


@given(st.integers(2, 12), st.integers(0, 1000))
@settings(max_examples=30)
def test_illcond_last_axis_inert(d, seed):
    f = illcond(d, seed)
    x = np.random.default_rng(seed).random(d)
    y = x.copy()
    y[-1] = 1 - y[-1]
    assert f(x) == f(y)


def test_reverse_illcond_examples():
    f = at(reverse_illcond, [0.4], 1)
    assert f([0.5]) == pytest.approx(0.08)
    g = at(reverse_illcond, [0.0, 0.0], 2)
    assert g([0, 0.1]) / g([0.1, 0]) == pytest.approx(27 / 8)


def test_antisobol_examples():
    f = at(antisobol, [0.1, 0.1, 0.1], 3)
    assert f([0.1, 0.1, 0.9]) == 0
    assert f([0.2, 0.0, 0.5]) == pytest.approx(0.0)
    assert f([0.3, 0.4, 0.7]) == pytest.approx(0.25)
    with pytest.raises(ParameterError):
        antisobol(1)


def test_antish_examples():
    f = at(antish, [0.5, 0.5, 0.5], 3)
    assert f([0.6, 0.7, 0.2]) == pytest.approx(0.0, abs=1e-15)
    g = at(antish, [0.5, 0.5], 2)
    assert g([0.6, 0.7]) == pytest.approx(0.09)


@given(st.integers(0, 1000))
@settings(max_examples=30)
def test_valley_invariance(seed):
    rng = np.random.default_rng(seed)
    x = rng.random(4) * 0.5 + 0.25
    t = rng.random() * 0.2 - 0.1
    a = antisobol(4, seed)
    moved = x.copy()
    moved[0] += t
    moved[1] -= t
    assert a(moved) == pytest.approx(a(x), abs=1e-12)
    h = antish(4, seed)
    moved = x.copy()
    moved[2] += t
    moved[3] -= t
    assert h(moved) == pytest.approx(h(x), abs=1e-12)


def test_evaluate_batch_and_dimension_check():
    s = sphere(3, 1)
    pts = np.random.default_rng(0).random((5, 3))
    np.testing.assert_allclose(s.evaluate(pts), [s(p) for p in pts])
    with pytest.raises(ValidationError):
        s.evaluate(np.zeros(2))


def test_optimum_is_seeded():
    assert np.array_equal(sphere(3, 5).optimum_location, sphere(3, 5).optimum_location)
    assert not np.array_equal(sphere(3, 5).optimum_location, sphere(3, 6).optimum_location)


# -- pathological ---------------------------------------------------------------------


def test_pathological_indicator():
    anchors = generate(SamplerSpec("halton", 2), 8)
    f = pathological_ball_indicator(anchors, 0.05)
    assert f(anchors[3]) == 1.0
    rng = np.random.default_rng(1)
    u = rng.random((200000, 2))
    vals = f.evaluate(u)
    assert set(np.unique(vals)) <= {0.0, 1.0}
    assert vals.mean() <= 8 * math.pi * 0.05**2 + 3e-3
    far = np.array([0.99, 0.99])
    assert f(far) == 0.0 or np.min(np.linalg.norm(anchors - far, axis=1)) <= 0.05


def test_pathological_uses_torus_distance():
    f = pathological_ball_indicator([[0.01, 0.5]], 0.05)
    assert f([0.98, 0.5]) == 1.0


def test_pathological_rejects_covering_epsilon():
    with pytest.raises(ValidationError):
        pathological_ball_indicator(generate(SamplerSpec("halton", 2), 8), 0.3)


# -- BO suite ------------------------------------------------------------------------------


@pytest.mark.parametrize("name", BO_SUITE)
@pytest.mark.parametrize("d", [2, 5, 12])
def test_bo_optimum_attained(name, d):
    f = bo_suite(name, d, seed=7)
    assert f.evaluate(f.optimum_location) == pytest.approx(f.optimum_value, abs=1e-12)
    vals = f.evaluate(np.random.default_rng(0).random((5000, d)))
    assert np.all(vals >= f.optimum_value - 1e-9)


def test_bo_known_minima():
    assert bo_suite("branin", 2).optimum_value == pytest.approx(0.397887, abs=1e-6)
    assert bo_suite("sixhump", 2).optimum_value == pytest.approx(-1.031628, abs=1e-6)
    assert bo_suite("rastrigin", 3).optimum_value == 0.0
    assert bo_suite("sphere", 3).optimum_value == 0.0
    assert bo_suite("styblinski", 2).optimum_value == pytest.approx(-39.16617 * 2, abs=1e-4)


def test_branin_other_minima_mapped():
    f = bo_suite("branin", 2, seed=3)
    shift = np.mod(f.optimum_location - (np.array([math.pi, 2.275]) - [-5, 0]) / 15, 1.0)
    for x1, x2 in [(-math.pi, 12.275), (9.42478, 2.475)]:
        u = np.mod((np.array([x1, x2]) - [-5, 0]) / 15 + shift, 1.0)
        assert f(u) == pytest.approx(0.397887, abs=1e-5)


def test_two_d_functions_ignore_extra_axes():
    f = bo_suite("beale", 4, seed=1)
    x = np.array([0.1, 0.2, 0.3, 0.4])
    y = x.copy()
    y[2:] = [0.9, 0.05]
    assert f(x) == f(y)


def test_registry():
    assert make_objective("bo:Branin", 2).name == "branin"
    assert make_objective("reverseIllcond", 3).name == "reverse_illcond"
    assert isinstance(make_objective("antish", 3, 1), Objective)
    assert "bo:sixhump" in objective_names()
    with pytest.raises(ParameterError):
        make_objective("nope", 2)
    with pytest.raises(ParameterError):
        make_objective("bo:nope", 2)
