from fractions import Fraction
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qrsearch.errors import ValidationError
from qrsearch.harness import (
    CampaignConfig,
    binomial_p,
    campaign,
    dune_scores,
    fisher_exact,
    implied_win_rate,
    moving_average,
    robustness_speedup,
    run_one_shot,
    set_hit_experiment,
    set_hit_space,
    speedup,
    win_rate,
    win_rate_vs_group,
    worst_probability,
)
from qrsearch.objectives import make_objective
from qrsearch.sampler import SamplerSpec, generate


def fisher_oracle(a, b, c, d):
    """Two-sided Fisher p-value from exact hypergeometric fractions."""
    r1, c1, n = a + b, a + c, a + b + c + d
    if n == 0:
        return 1.0

    def prob(x):
        return Fraction(math.comb(r1, x) * math.comb(n - r1, c1 - x), math.comb(n, c1))

    obs = prob(a)
    lo, hi = max(0, r1 + c1 - n), min(r1, c1)
    return float(sum(prob(x) for x in range(lo, hi + 1) if prob(x) <= obs))


# -- win rate / speed-up ----------------------------------------------------------------


def test_win_rate_examples():
    a = [0.1, 0.2, 0.3]
    assert win_rate(a, a) == 0.5
    assert win_rate([2, 3], [0, 1]) == 0.0
    wins = [0.0] * 569 + [1.0] * 431
    assert win_rate(wins, [0.5] * 1000) == pytest.approx(0.569)
    assert win_rate([1, 3], [2], paired=False) == 0.5
    with pytest.raises(ValidationError):
        win_rate([], [])
    with pytest.raises(ValidationError):
        win_rate([1, 2], [1])


def test_win_rate_vs_group():
    p, q = win_rate_vs_group([0, 5, 2], [[1, 1, 1], [3, 3, 3]])
    assert p == pytest.approx(1 / 3)
    assert q == pytest.approx(1 / 3)


@pytest.mark.parametrize("p, k, s", [(2 / 3, 1, 1.0), (0.5, 1, 0.0), (0.6, 2, 2.0)])
def test_speedup_anchors(p, k, s):
    assert speedup(p, k) == pytest.approx(s, abs=1e-12)


def test_speedup_reference_anchor():
    assert speedup(0.569) == pytest.approx(0.32, abs=0.005)
    assert speedup(1.0) == math.inf
    with pytest.raises(ValidationError):
        speedup(1.2)


@given(st.floats(0, 50), st.integers(1, 6))
def test_speedup_round_trip(s, k):
    assert speedup(implied_win_rate(s, k), k) == pytest.approx(s, abs=1e-9)


@pytest.mark.parametrize("q, s", [(0.5, 0.0), (1 / 3, 1.0), (0.25, 2.0)])
def test_robustness_closed_form(q, s):
    assert robustness_speedup(q, 1) == pytest.approx(s, abs=1e-12)


def test_robustness_zero_is_infinite():
    assert robustness_speedup(0.0, 3) == math.inf


@given(st.floats(0, 20), st.integers(1, 5))
@settings(max_examples=50)
def test_robustness_round_trip(s, k):
    assert robustness_speedup(worst_probability(s, k), k) == pytest.approx(s, abs=1e-8)


def test_worst_probability_matches_simulation():
    # best of m*(1+s) uniforms vs best of m uniforms, k independent rivals
    rng = np.random.default_rng(0)
    k, m, s = 2, 4, 1.0
    trials = 100000
    ours = rng.random((trials, int(m * (1 + s)))).min(axis=1)
    rivals = rng.random((trials, k, m)).min(axis=2)
    freq = np.mean(np.all(ours[:, None] > rivals, axis=1))
    assert freq == pytest.approx(worst_probability(s, k), abs=0.005)


# -- dune / fisher / binomial ------------------------------------------------------------


def test_dune_examples():
    np.testing.assert_allclose(dune_scores([[1, 2, 3], [4, 5, 6]]), [0.0, 1.0])
    np.testing.assert_allclose(dune_scores([[1], [2], [3]]), [0.0, 0.5, 1.0])
    np.testing.assert_allclose(dune_scores([[1, 1], [1, 1]]), [0.0, 0.0])
    with pytest.raises(ValidationError):
        dune_scores([[1, 2]])


@given(st.integers(2, 5), st.integers(1, 6), st.integers(0, 10**6))
def test_dune_scores_in_unit_interval(m, p, seed):
    scores = dune_scores(np.random.default_rng(seed).random((m, p)))
    assert np.all((scores >= 0) & (scores <= 1))


def test_fisher_examples():
    assert fisher_exact([[0, 0], [0, 0]]) == 1.0
    assert fisher_exact([[5, 0], [0, 5]]) == pytest.approx(1 / 126, abs=1e-15)
    assert fisher_exact([[3, 3], [3, 3]]) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        fisher_exact([[1, -1], [0, 0]])
    with pytest.raises(ValidationError):
        fisher_exact([[1, 2, 3]])


@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 6), st.integers(0, 6))
def test_fisher_matches_oracle(a, b, c, d):
    assert fisher_exact([[a, b], [c, d]]) == pytest.approx(fisher_oracle(a, b, c, d), abs=1e-12)


def test_fisher_matches_scipy_on_large_tables():
    stats = pytest.importorskip("scipy.stats")
    for table in ([[120, 80], [90, 110]], [[700, 521], [610, 611]]):
        assert fisher_exact(table) == pytest.approx(stats.fisher_exact(table)[1], rel=1e-9)


def test_binomial_p():
    assert binomial_p(0, 0) == 1.0
    assert binomial_p(10, 10) == pytest.approx(0.5**10)
    assert binomial_p(5, 10) > 0.5


def test_moving_average():
    assert moving_average([1, 2, 3, 4, 5, 6], 5) == pytest.approx([3, 4])
    assert moving_average([1, 2], 5) == []


# -- one-shot runs ---------------------------------------------------------------------------


def test_budget_one_is_single_evaluation():
    recs = run_one_shot(SamplerSpec("halton", 2), "sphere", 1, 3, master_seed=9)
    for r in recs:
        f = make_objective("sphere", 2, _objective_seed(9, r.replication))
        assert r.best_loss == f(np.array(r.best_point))
        assert r.best_point == (0.5, 1 / 3)


def _objective_seed(master, rep):
    from qrsearch._seeding import derive_seed
    from qrsearch.harness import replication_seed

    return derive_seed(replication_seed(master, rep), "objective")


def test_replay_matches_independent_evaluation():
    spec = SamplerSpec("s-sh", 3)
    recs = run_one_shot(spec, "illcond", 20, 5, master_seed=2, label="s-sh")
    from qrsearch._seeding import derive_seed

    for r in recs:
        pts = generate(spec.replace(seed=derive_seed(r.seed, "sampler", "s-sh")), 20)
        f = make_objective("illcond", 3, _objective_seed(2, r.replication))
        assert r.best_loss == f.evaluate(pts).min()


def test_halton_prefix_monotone_in_budget():
    losses = [[r.best_loss for r in run_one_shot(SamplerSpec("halton", 2), "sphere", b, 4, 1)]
              for b in (5, 10, 20, 40)]
    assert np.all(np.diff(np.array(losses), axis=0) <= 0)


def test_optimum_shared_across_samplers():
    a = run_one_shot(SamplerSpec("random", 2), "sphere", 1, 3, 5)
    b = run_one_shot(SamplerSpec("halton", 2), "sphere", 1, 3, 5)
    for ra, rb in zip(a, b):
        assert ra.seed == rb.seed


def test_adding_replications_keeps_earlier_ones():
    short = run_one_shot(SamplerSpec("lhs", 2), "sphere", 8, 3, 4)
    long = run_one_shot(SamplerSpec("lhs", 2), "sphere", 8, 6, 4)
    assert short == long[:3]


def test_dimension_mismatch():
    with pytest.raises(ValidationError):
        run_one_shot(SamplerSpec("halton", 2), lambda d, s: make_objective("sphere", 3, s), 4, 1, 0)


# -- set hit -------------------------------------------------------------------------------


def test_set_hit_space_shape():
    space = set_hit_space()
    assert space.dimension == 10
    assert space.names[:3] == ["x", "y", "z"]


def test_set_hit_zero_points():
    res = set_hit_experiment("s-ha", 0, 3, 500)
    assert res.counts == (0, 0, 0)
    assert res.failures == 3


def test_set_hit_counts_feasible_points():
    from qrsearch.space import map_point, sampler_for_space

    counts = set_hit_experiment("random", 2000, 1, 1, master_seed=3).counts
    from qrsearch._seeding import derive_seed

    spec = sampler_for_space(set_hit_space(), "random", seed=derive_seed(3, "set-hit", 0))
    pts = generate(spec, 2000)
    expected = 0
    for p in pts:
        c = map_point(set_hit_space(), p)
        expected += 10 * c["x"] + c["y"] + c["z"] <= 129
    assert counts == (expected,)


# -- campaigns ---------------------------------------------------------------------------------


def _cfg(**over):
    cfg = {"samplers": ["random", "s-sh"], "objectives": ["sphere"], "dimensions": [2],
           "budgets": [3, 4, 5, 6, 7, 8], "replications": 6, "seed": 11}
    cfg.update(over)
    return cfg


def test_minimal_campaign():
    rep = campaign({"samplers": ["halton"], "objectives": ["sphere"], "budgets": [4],
                    "replications": 1, "seed": 0})
    assert len(rep.records) == 1
    assert rep.stats == []


def test_campaign_shape_and_stats():
    rep = campaign(_cfg())
    assert len(rep.records) == 2 * 6 * 6
    assert len(rep.stats) == 6
    assert [r["budget"] for r in rep.stats] == [3, 4, 5, 6, 7, 8]
    row = rep.stats[0]
    for key in ("win_rate", "speed_up", "robustness_speed_up", "fisher_p", "binomial_p"):
        assert key in row
    assert sum(row["rank_distribution"]) == 6
    assert rep.dune and set(rep.dune[0]["scores"]) == {"random", "s-sh"}
    ma = [m for m in rep.moving_averages if m["sampler"] == "s-sh"][0]
    assert len(ma["moving_average"]) == 2


def test_campaign_with_several_random_instances():
    rep = campaign(_cfg(random_instances=3, budgets=[5]))
    assert {r.sampler for r in rep.records} == {"random", "random#2", "random#3", "s-sh"}
    row = rep.stats[0]
    assert row["speed_up"] == pytest.approx(speedup(row["win_rate"], 3))


def test_campaign_deterministic_across_threads():
    a = campaign(_cfg(), threads=1)
    b = campaign(_cfg(), threads=4)
    assert a.records_csv() == b.records_csv()
    assert a.stats_csv() == b.stats_csv()
    assert json.dumps(a.summary(), sort_keys=True) == json.dumps(b.summary(), sort_keys=True)


def test_campaign_validation_lists_all_errors():
    with pytest.raises(ValidationError) as exc:
        CampaignConfig.from_dict(_cfg(samplers=["nope", "random"], objectives=["bad", "sphere"]))
    msg = str(exc.value)
    assert "nope" in msg and "bad" in msg
    with pytest.raises(ValidationError, match="missing"):
        CampaignConfig.from_dict({"samplers": ["random"]})
