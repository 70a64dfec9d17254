import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qrsearch.errors import ValidationError
from qrsearch.sampler import SamplerSpec, generate
from qrsearch.space import (
    ParamDef,
    ParamSpace,
    base_assignment,
    map_point,
    resolve_scale,
    sample_space,
    sampler_for_space,
    unmap_value,
)


@pytest.mark.parametrize("low, high, expected", [(0.02, 1, "log"), (5, 15, "linear"),
                                                 (-9, 9, "linear"), (0.1, 3, "log"),
                                                 (0.11, 3, "linear")])
def test_auto_scale(low, high, expected):
    assert resolve_scale(ParamDef("p", low=low, high=high)) == expected


def test_explicit_scale_passes_through():
    assert resolve_scale(ParamDef("p", low=0.02, high=1, scale="linear")) == "linear"
    assert resolve_scale(ParamDef("p", low=5, high=15, scale="logarithmic")) == "log"


def test_log_requires_positive_low():
    with pytest.raises(ValidationError):
        ParamDef("p", low=0, high=1, scale="log")


@pytest.mark.parametrize("kwargs", [dict(low=1, high=1), dict(kind="categorical"),
                                    dict(kind="discrete", low=0.5, high=3), dict(kind="weird",
                                                                                 low=0, high=1)])
def test_invalid_defs(kwargs):
    with pytest.raises(ValidationError):
        ParamDef("p", **kwargs)


def test_map_point_examples():
    space = ParamSpace([ParamDef("a", low=10, high=20),
                        ParamDef("lr", low=0.5, high=30, scale="log"),
                        ParamDef("z", kind="discrete", low=10, high=20)])
    assert map_point(space, [0, 0.5, 0.999]) == pytest.approx(
        {"a": 10, "lr": math.sqrt(15), "z": 20})
    with pytest.raises(ValidationError):
        map_point(space, [0.1, 0.2])


def test_categorical_equal_cells():
    space = ParamSpace([ParamDef("cell", kind="categorical", choices=["lstm", "gru", "rnn"])])
    assert [map_point(space, [u])["cell"] for u in (0, 0.34, 0.67, 0.9999)] == [
        "lstm", "gru", "rnn", "rnn"]


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_continuous_monotone_and_invertible(u, v):
    for p in (ParamDef("a", low=-3, high=7), ParamDef("b", low=1e-4, high=1)):
        space = ParamSpace([p])
        x, y = map_point(space, [u])[p.name], map_point(space, [v])[p.name]
        if u <= v:
            assert x <= y + 1e-12 * max(1.0, abs(y))
        assert unmap_value(p, x) == pytest.approx(u, abs=1e-9)


def test_endpoints_hit():
    for p in (ParamDef("a", low=-3, high=7), ParamDef("b", low=1e-4, high=1)):
        space = ParamSpace([p])
        assert map_point(space, [0.0])[p.name] == pytest.approx(p.low)
        assert map_point(space, [np.nextafter(1, 0)])[p.name] == pytest.approx(p.high)


def test_discrete_cells_equal_measure():
    p = ParamDef("z", kind="discrete", low=10, high=20)
    space = ParamSpace([p])
    u = (np.arange(11 * 1000) + 0.5) / (11 * 1000)
    counts = np.bincount([map_point(space, [x])["z"] - 10 for x in u])
    assert np.all(counts == 1000)


def test_base_assignment_follows_rank():
    ps = [ParamDef(n, low=0, high=1, rank=r) for n, r in zip("abc", (2, 1, 3))]
    assert base_assignment(ParamSpace(ps)) == [3, 2, 5]
    assert base_assignment(ParamSpace([ParamDef("a", low=0, high=1)])) == [2]
    plain = ParamSpace([ParamDef(n, low=0, high=1) for n in "abcd"])
    assert base_assignment(plain) == [2, 3, 5, 7]


def test_ranks_validated():
    with pytest.raises(ValidationError):
        ParamSpace([ParamDef("a", low=0, high=1, rank=1), ParamDef("b", low=0, high=1, rank=1)])
    with pytest.raises(ValidationError):
        ParamSpace([ParamDef("a", low=0, high=1, rank=1), ParamDef("b", low=0, high=1)])
    with pytest.raises(ValidationError):
        ParamSpace([ParamDef("a", low=0, high=1), ParamDef("a", low=0, high=2)])


def test_json_round_trip(tmp_path):
    space = ParamSpace([
        ParamDef("lr", low=0.5, high=30, rank=1),
        ParamDef("layers", kind="discrete-integer", low=1, high=4, rank=3),
        ParamDef("cell", kind="categorical", choices=["lstm", "gru"], rank=2),
    ])
    path = tmp_path / "space.json"
    space.dump(path)
    again = ParamSpace.load(path)
    assert again == space
    assert again.ranks == (1, 3, 2)


def test_sampler_for_space_uses_rank_bases():
    ps = [ParamDef(n, low=0, high=1, rank=r) for n, r in zip("abc", (3, 1, 2))]
    spec = sampler_for_space(ParamSpace(ps), "halton")
    assert spec.resolved_bases() == (5, 2, 3)
    pts = generate(spec, 4)
    np.testing.assert_allclose(pts[:, 1], [0.5, 0.25, 0.75, 0.125])


def test_sample_space_hammersley_puts_first_axis_on_top_rank():
    ps = [ParamDef(n, low=0, high=1, scale="linear", rank=r) for n, r in zip("abc", (2, 3, 1))]
    space = ParamSpace(ps)
    configs = sample_space(space, SamplerSpec("hammersley", 3), 4)
    np.testing.assert_allclose([c["c"] for c in configs], [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose([c["a"] for c in configs], [0.5, 0.25, 0.75, 0.125])
