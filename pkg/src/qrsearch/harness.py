"""One-shot optimization experiments and comparison statistics.

A sampler is compared against ``K`` independent instances of random search
at the same budget. Its win rate ``p`` (frequency of beating all of them) is
read as the budget multiplier ``1 + s`` a random search would need to win
as often: ``p = (1 + s) / (K + 1 + s)``. The robustness speed-up does the
same with the frequency of being worse than all ``K`` instances.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import binomtest

from qrsearch._seeding import derive_seed
from qrsearch.errors import ValidationError
from qrsearch.objectives import Objective, make_objective
from qrsearch.sampler import Algorithm, SamplerSpec, generate
from qrsearch.space import ParamDef, ParamSpace, sampler_for_space

ObjectiveFactory = Callable[[int, int], Objective]


@dataclass(frozen=True)
class RunRecord:
    sampler: str
    objective: str
    dimension: int
    budget: int
    replication: int
    seed: int
    best_loss: float
    best_point: tuple[float, ...]


def replication_seed(master_seed: int, replication: int) -> int:
    return derive_seed(master_seed, "replication", replication)


def _one_run(template: SamplerSpec, label: str, factory: ObjectiveFactory, budget: int,
             rep: int, master_seed: int) -> RunRecord:
    rseed = replication_seed(master_seed, rep)
    spec = template.replace(seed=derive_seed(rseed, "sampler", label))
    objective = factory(template.dimension, derive_seed(rseed, "objective"))
    if objective.dimension != template.dimension:
        raise ValidationError(
            f"sampler dimension {template.dimension} != objective dimension {objective.dimension}")
    points = generate(spec, budget)
    values = objective.evaluate(points)
    i = int(np.argmin(values))
    return RunRecord(label, objective.name, template.dimension, budget, rep, rseed,
                     float(values[i]), tuple(float(v) for v in points[i]))


def run_one_shot(sampler: SamplerSpec, objective: "str | ObjectiveFactory", budget: int,
                 replications: int, master_seed: int, label: Optional[str] = None,
                 threads: int = 1) -> list[RunRecord]:
    """Evaluate ``budget`` sampler points per replication and keep the best.

    Replication ``i`` derives its seeds from ``(master_seed, i)``: the
    objective's random optimum depends only on the replication, so two
    samplers run with the same master seed face the same optima. Samplers
    with different ``label`` values get distinct sampler seeds.
    """
    if budget < 1 or replications < 1:
        raise ValidationError("budget and replications must be >= 1")
    factory = _factory(objective)
    label = label or sampler.algorithm.value + ("+mirror" if sampler.mirror3d else "")

    def job(rep):
        return _one_run(sampler, label, factory, budget, rep, master_seed)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(job, range(replications)))
    return [job(rep) for rep in range(replications)]


def _factory(objective) -> ObjectiveFactory:
    if callable(objective):
        return objective
    return lambda d, seed: make_objective(objective, d, seed)


# -- statistics ----------------------------------------------------------------


def win_rate(a: Sequence[float], b: Sequence[float], paired: bool = True) -> float:
    """Frequency with which losses in ``a`` beat those in ``b``; ties count 1/2.

    ``paired`` compares ``a[i]`` with ``b[i]``; otherwise every pair is used.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValidationError("win_rate needs non-empty inputs")
    if paired:
        if a.size != b.size:
            raise ValidationError("paired comparison needs equal lengths")
        return float(np.mean((a < b) + 0.5 * (a == b)))
    a = a[:, None]
    return float(np.mean((a < b) + 0.5 * (a == b)))


def win_rate_vs_group(a: Sequence[float], group: Sequence[Sequence[float]]) -> tuple[float, float]:
    """Frequencies with which ``a[i]`` is strictly best / strictly worst against
    every instance in ``group`` (shape ``K x reps``)."""
    a = np.asarray(a, dtype=float)
    g = np.atleast_2d(np.asarray(group, dtype=float))
    best = np.all(a[None, :] < g, axis=0)
    worst = np.all(a[None, :] > g, axis=0)
    return float(best.mean()), float(worst.mean())


def rank_distribution(a: Sequence[float], group: Sequence[Sequence[float]]) -> list[int]:
    """How often ``a[i]`` ranks 1st..(K+1)-th against the group (ties broken in its favour)."""
    a = np.asarray(a, dtype=float)
    g = np.atleast_2d(np.asarray(group, dtype=float))
    ranks = (g < a[None, :]).sum(axis=0)
    return np.bincount(ranks, minlength=g.shape[0] + 1).tolist()


def speedup(p: float, k: int = 1) -> float:
    """Budget speed-up implied by win probability ``p`` against ``k`` random instances.

    Inverts ``p = (1 + s) / (k + 1 + s)``. Returns ``inf`` for ``p = 1``.
    """
    if not 0.0 <= p <= 1.0:
        raise ValidationError("p must lie in [0, 1]")
    if k < 1:
        raise ValidationError("k must be >= 1")
    if p == 1.0:
        return math.inf
    return (p * k + p - 1.0) / (1.0 - p)


def implied_win_rate(s: float, k: int = 1) -> float:
    return (1.0 + s) / (k + 1.0 + s)


def worst_probability(s: float, k: int) -> float:
    """Probability that a random search with budget ``(1 + s) b`` is worse than
    all ``k`` independent random searches with budget ``b``.

    With continuous losses the answer is ``sum_j C(k,j) (-1)^j a / (a + j)``,
    ``a = 1 + s``; for ``k = 1`` it is ``1 / (2 + s)``.
    """
    a = 1.0 + s
    total = 0.0
    for j in range(k + 1):
        total += (-1) ** j * math.comb(k, j) * a / (a + j)
    return total


def robustness_speedup(q: float, k: int = 1, tol: float = 1e-12) -> float:
    """Speed-up whose worst-of-``k+1`` frequency equals ``q``.

    Closed form ``(1 - 2q) / q`` for ``k = 1``; bisection otherwise, since the
    worst probability decreases monotonically in ``s``. ``q = 0`` gives ``inf``.
    """
    if not 0.0 <= q <= 1.0:
        raise ValidationError("q must lie in [0, 1]")
    if k < 1:
        raise ValidationError("k must be >= 1")
    if q == 0.0:
        return math.inf
    if q == 1.0:
        return -1.0
    if k == 1:
        return (1.0 - 2.0 * q) / q
    lo, hi = -1.0 + 1e-15, 1.0
    while worst_probability(hi, k) > q:
        hi = 2.0 * hi + 1.0
    while hi - lo > tol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if worst_probability(mid, k) > q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dune_scores(loss_matrix) -> np.ndarray:
    """Mean over problems of the average of normalized rank and min-max-normalized loss.

    ``loss_matrix`` is methods x problems. Rank counts strictly better methods
    and is divided by ``M - 1``; a problem where all losses tie scores 0.
    """
    losses = np.asarray(loss_matrix, dtype=float)
    if losses.ndim != 2 or losses.shape[0] < 2 or losses.shape[1] < 1:
        raise ValidationError("need at least 2 methods and 1 problem")
    m = losses.shape[0]
    better = (losses[None, :, :] < losses[:, None, :]).sum(axis=1)
    q = better / (m - 1)
    lo = losses.min(axis=0)
    span = losses.max(axis=0) - lo
    s = np.where(span > 0, (losses - lo) / np.where(span > 0, span, 1.0), 0.0)
    return (0.5 * (q + s)).mean(axis=1)


def _log_table_prob(a: int, b: int, c: int, d: int) -> float:
    n = a + b + c + d
    return (gammaln(a + b + 1) + gammaln(c + d + 1) + gammaln(a + c + 1) + gammaln(b + d + 1)
            - gammaln(n + 1) - gammaln(a + 1) - gammaln(b + 1) - gammaln(c + 1)
            - gammaln(d + 1))


def fisher_exact(table) -> float:
    """Two-sided Fisher exact test on a 2x2 table of counts.

    Sums the hypergeometric probabilities of every table with the observed
    margins that is no more likely than the observed one.
    """
    t = np.asarray(table)
    if t.shape != (2, 2):
        raise ValidationError("fisher_exact needs a 2x2 table")
    if np.any(t < 0) or np.any(t != np.round(t)):
        raise ValidationError("counts must be non-negative integers")
    (a, b), (c, d) = (int(v) for v in t[0]), (int(v) for v in t[1])
    row1, col1, n = a + b, a + c, a + b + c + d
    if n == 0 or row1 in (0, n) or col1 in (0, n):
        return 1.0
    observed = _log_table_prob(a, b, c, d)
    lo, hi = max(0, row1 + col1 - n), min(row1, col1)
    total = 0.0
    for x in range(lo, hi + 1):
        lp = _log_table_prob(x, row1 - x, col1 - x, n - row1 - col1 + x)
        # relative slack keeps equally likely tables despite rounding
        if lp <= observed + 1e-7:
            total += math.exp(lp)
    return min(total, 1.0)


def binomial_p(successes: int, trials: int, p: float = 0.5) -> float:
    """One-sided p-value for observing at least ``successes`` wins."""
    if trials == 0:
        return 1.0
    return float(binomtest(successes, trials, p, alternative="greater").pvalue)


def moving_average(values: Sequence[float], window: int = 5) -> list[float]:
    """Trailing means over ``window`` successive values (full windows only)."""
    v = np.asarray(values, dtype=float)
    if v.size < window:
        return []
    c = np.cumsum(np.insert(v, 0, 0.0))
    return list((c[window:] - c[:-window]) / window)


# -- set-hit experiment --------------------------------------------------------


def set_hit_space() -> ParamSpace:
    """x in [10, 20], y in [0, 100], z in {10..20} plus seven inert variables."""
    params = [
        ParamDef("x", "continuous", 10.0, 20.0, scale="linear"),
        ParamDef("y", "continuous", 0.0, 100.0, scale="linear"),
        ParamDef("z", "discrete", 10, 20),
    ]
    params += [ParamDef(f"noise{i}", "continuous", 0.0, 1.0, scale="linear") for i in range(7)]
    return ParamSpace(params)


def _feasible_count(points: np.ndarray) -> int:
    x = 10.0 + 10.0 * points[:, 0]
    y = 100.0 * points[:, 1]
    z = np.minimum(10 + np.floor(points[:, 2] * 11), 20)
    return int(np.count_nonzero(10.0 * x + y + z <= 129.0))


@dataclass(frozen=True)
class SetHitResult:
    counts: tuple[int, ...]
    target_hits: int

    @property
    def successes(self) -> tuple[bool, ...]:
        return tuple(c >= self.target_hits for c in self.counts)

    @property
    def failures(self) -> int:
        return sum(not s for s in self.successes)


def set_hit_experiment(algorithm, n: int, runs: int, target_hits: int,
                       master_seed: int = 0) -> SetHitResult:
    """Count feasible points (``10x + y + z <= 129``) in each of ``runs`` runs.

    A run succeeds when its count reaches ``target_hits``. Halton-family runs
    are randomized by discarding a random prefix.
    """
    space = set_hit_space()
    alg = Algorithm.parse(algorithm)
    random_start = alg in (Algorithm.HALTON, Algorithm.SCRAMBLED_HALTON, Algorithm.S_HA)
    counts = []
    for r in range(runs):
        spec = sampler_for_space(space, alg, seed=derive_seed(master_seed, "set-hit", r),
                                 random_start=random_start)
        counts.append(_feasible_count(generate(spec, n)) if n else 0)
    return SetHitResult(tuple(counts), target_hits)


# -- campaigns -----------------------------------------------------------------


@dataclass
class CampaignConfig:
    """Cross product of samplers x objectives x dimensions x budgets.

    Samplers are names or dicts of :class:`SamplerSpec` fields (without
    ``dimension``/``seed``) plus an optional ``label``. The ``baseline``
    sampler is run as ``random_instances`` independent instances; the others
    are scored against all of them.
    """

    samplers: list
    objectives: list[str]
    dimensions: list[int]
    budgets: list[int]
    replications: int
    seed: int
    baseline: str = "random"
    random_instances: int = 1
    moving_average_window: int = 5

    @classmethod
    def from_dict(cls, data: dict) -> "CampaignConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        missing = [k for k in ("samplers", "objectives", "budgets", "replications", "seed")
                   if k not in data]
        unknown = sorted(set(data) - names - {"dimension"})
        errors = []
        if missing:
            errors.append(f"missing fields: {missing}")
        if unknown:
            errors.append(f"unknown fields: {unknown}")
        if errors:
            raise ValidationError("; ".join(errors))
        data = dict(data)
        if "dimension" in data:
            data.setdefault("dimensions", [data.pop("dimension")])
        data.setdefault("dimensions", [2])
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        from qrsearch.objectives import objective_names

        errors = []
        bad_samplers = []
        for s in self.samplers:
            name = s if isinstance(s, str) else s.get("algorithm", "")
            try:
                Algorithm.parse(name)
            except ValueError:
                bad_samplers.append(name)
        if bad_samplers:
            errors.append(f"unknown samplers: {bad_samplers}")
        known = set(objective_names()) | {"reverseillcond"}
        bad_obj = [o for o in self.objectives if o.lower().replace("-", "_") not in known]
        if bad_obj:
            errors.append(f"unknown objectives: {bad_obj}")
        if any(b < 1 for b in self.budgets) or not self.budgets:
            errors.append("budgets must be a non-empty list of positive integers")
        if self.replications < 1:
            errors.append("replications must be >= 1")
        if not self.dimensions or any(d < 1 for d in self.dimensions):
            errors.append("dimensions must be positive")
        if self.random_instances < 1:
            errors.append("random_instances must be >= 1")
        if errors:
            raise ValidationError("; ".join(errors))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def sampler_entries(self) -> list[tuple[str, dict]]:
        """(label, spec fields) per sampler, with baseline instances expanded."""
        entries = []
        for s in self.samplers:
            fields = {"algorithm": s} if isinstance(s, str) else dict(s)
            label = fields.pop("label", None)
            alg = Algorithm.parse(fields["algorithm"]).value
            label = label or alg + ("+mirror" if fields.get("mirror3d") else "")
            if label == self.baseline:
                for k in range(self.random_instances):
                    entries.append((label if k == 0 else f"{label}#{k + 1}", fields))
            else:
                entries.append((label, fields))
        return entries


@dataclass
class BenchReport:
    config: dict
    records: list[RunRecord]
    stats: list[dict] = field(default_factory=list)
    dune: list[dict] = field(default_factory=list)
    moving_averages: list[dict] = field(default_factory=list)

    def records_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sampler", "objective", "dimension", "budget", "replication", "seed",
                    "best_loss", "best_point"])
        for r in self.records:
            w.writerow([r.sampler, r.objective, r.dimension, r.budget, r.replication, r.seed,
                        repr(r.best_loss), " ".join(repr(v) for v in r.best_point)])
        return buf.getvalue()

    def stats_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        cols = ["objective", "dimension", "budget", "sampler", "replications", "win_rate",
                "speed_up", "worst_rate", "robustness_speed_up", "mean_loss",
                "baseline_mean_loss", "fisher_p", "binomial_p"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for row in self.stats:
            w.writerow([_fmt(row[c]) for c in cols])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"config": self.config, "stats": self.stats, "dune": self.dune,
                "moving_averages": self.moving_averages}


def _fmt(v):
    return repr(v) if isinstance(v, float) else v


def campaign(config: "CampaignConfig | dict", threads: int = 1) -> BenchReport:
    """Run every (sampler, objective, dimension, budget, replication) and score it."""
    cfg = config if isinstance(config, CampaignConfig) else CampaignConfig.from_dict(config)
    cfg.validate()
    entries = cfg.sampler_entries()
    jobs = []
    for obj in cfg.objectives:
        for d in cfg.dimensions:
            for budget in cfg.budgets:
                for label, fields in entries:
                    spec = SamplerSpec(**{**fields, "dimension": d, "seed": 0})
                    for rep in range(cfg.replications):
                        jobs.append((spec, label, obj, budget, rep))

    def job(args):
        spec, label, obj, budget, rep = args
        return _one_run(spec, label, _factory(obj), budget, rep, cfg.seed)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            records = list(pool.map(job, jobs))
    else:
        records = [job(a) for a in jobs]

    report = BenchReport(cfg.to_dict(), records)
    _fill_stats(report, cfg, entries)
    return report


def _fill_stats(report: BenchReport, cfg: CampaignConfig, entries) -> None:
    losses: dict[tuple, np.ndarray] = {}
    grouped: dict[tuple, list[float]] = {}
    for r in report.records:
        grouped.setdefault((r.objective, r.dimension, r.budget, r.sampler), []).append(r.best_loss)
    for key, vals in grouped.items():
        losses[key] = np.asarray(vals)
    labels = [label for label, _ in entries]
    baseline_labels = [l for l in labels if l == cfg.baseline or l.startswith(cfg.baseline + "#")]
    contenders = [l for l in labels if l not in baseline_labels]
    obj_names = sorted({r.objective for r in report.records})
    k = len(baseline_labels)

    for obj in obj_names:
        for d in cfg.dimensions:
            for budget in cfg.budgets:
                if not baseline_labels:
                    continue
                group = np.stack([losses[(obj, d, budget, b)] for b in baseline_labels])
                for label in contenders:
                    a = losses[(obj, d, budget, label)]
                    p, q = win_rate_vs_group(a, group)
                    if k == 1:
                        p = win_rate(a, group[0])
                    n = a.size
                    wins = int(round(p * n))
                    null_wins = int(round(n / (k + 1)))
                    report.stats.append({
                        "objective": obj, "dimension": d, "budget": budget, "sampler": label,
                        "replications": n, "win_rate": p, "speed_up": speedup(p, k),
                        "worst_rate": q, "robustness_speed_up": robustness_speedup(q, k),
                        "mean_loss": float(a.mean()),
                        "baseline_mean_loss": float(group.mean()),
                        "fisher_p": fisher_exact([[wins, n - wins], [null_wins, n - null_wins]]),
                        "binomial_p": binomial_p(wins, n, 1.0 / (k + 1)),
                        "rank_distribution": rank_distribution(a, group),
                    })

    for d in cfg.dimensions:
        for budget in cfg.budgets:
            if len(labels) < 2:
                continue
            matrix = np.stack([
                np.concatenate([losses[(obj, d, budget, l)] for obj in obj_names])
                for l in labels])
            scores = dune_scores(matrix)
            report.dune.append({"dimension": d, "budget": budget,
                                "scores": {l: float(s) for l, s in zip(labels, scores)}})

    budgets = sorted(cfg.budgets)
    for obj in obj_names:
        for d in cfg.dimensions:
            for label in labels:
                means = [float(losses[(obj, d, b, label)].mean()) for b in budgets]
                ma = moving_average(means, cfg.moving_average_window)
                report.moving_averages.append({
                    "objective": obj, "dimension": d, "sampler": label,
                    "budgets": budgets[cfg.moving_average_window - 1:] if ma else [],
                    "mean_loss": means, "moving_average": ma})
