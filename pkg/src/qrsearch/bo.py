"""Batch Bayesian optimization with pluggable first-batch strategies.

The surrogate is a zero-noise GP with a squared-exponential kernel whose
hyperparameters are set by heuristics (no likelihood optimization):
lengthscale = median pairwise distance, signal variance = variance of the
observations, prior mean = their mean.

Each batch is built greedily over a pool of scrambled-Halton candidates. The
first point minimizes the lower confidence bound ``mu - kappa sigma``; every
selected point is then assumed to have returned the pessimistic value
``mu + kappa sigma`` and the posterior is updated before the next pick.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.spatial.distance import cdist, pdist

from qrsearch._seeding import derive_seed, rng_for
from qrsearch.errors import ValidationError
from qrsearch.objectives import BO_SUITE, Objective, bo_suite
from qrsearch.sampler import SamplerSpec, generate

INIT_STRATEGIES = ("lds", "random", "lhs", "pessimistic")
DEFAULT_POOL_SIZE = 4096
DEFAULT_JITTER = 1e-8


@dataclass
class GPModel:
    """Fitted GP posterior. Use :func:`gp_fit` to build one."""

    inputs: np.ndarray
    values: np.ndarray
    lengthscale: float
    signal_variance: float
    prior_mean: float
    jitter: float
    chol: np.ndarray
    alpha: np.ndarray

    def kernel(self, a, b) -> np.ndarray:
        sq = cdist(np.atleast_2d(a), np.atleast_2d(b), "sqeuclidean")
        return self.signal_variance * np.exp(-0.5 * sq / self.lengthscale**2)

    def cross(self, points) -> np.ndarray:
        """``L^{-1} k(X, points)``, shape ``(n_train, m)``."""
        return solve_triangular(self.chol, self.kernel(self.inputs, points), lower=True)

    def predict(self, points):
        """Posterior mean and variance (clamped at 0) at ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = self.kernel(self.inputs, points)
        mean = self.prior_mean + k.T @ self.alpha
        a = solve_triangular(self.chol, k, lower=True)
        var = self.signal_variance - (a**2).sum(axis=0)
        return mean, np.maximum(var, 0.0)


def median_lengthscale(inputs: np.ndarray) -> float:
    """Median pairwise distance; falls back to the mean distance of uniform points."""
    n, d = inputs.shape
    if n >= 2:
        med = float(np.median(pdist(inputs)))
        if med > 0:
            return med
    return float(np.sqrt(d / 6.0))


def gp_fit(inputs, values, lengthscale: Optional[float] = None,
           jitter: float = DEFAULT_JITTER) -> GPModel:
    """Exact GP regression, raising the diagonal jitter tenfold until Cholesky succeeds."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(values, dtype=float).ravel()
    if x.shape[0] == 0 or x.shape[0] != y.size:
        raise ValidationError("gp_fit needs at least one observation and matching values")
    if not np.all(np.isfinite(y)):
        raise ValidationError("observed values must be finite")
    ell = median_lengthscale(x) if lengthscale is None else float(lengthscale)
    if ell <= 0:
        raise ValidationError("lengthscale must be positive")
    var = float(np.var(y))
    if var <= 0:
        var = 1.0
    mean = float(np.mean(y))
    sq = cdist(x, x, "sqeuclidean")
    gram = var * np.exp(-0.5 * sq / ell**2)
    j = jitter
    while True:
        try:
            chol = np.linalg.cholesky(gram + j * var * np.eye(len(y)))
            break
        except np.linalg.LinAlgError:
            j *= 10.0
            if j > 1.0:
                raise
    alpha = cho_solve((chol, True), y - mean)
    return GPModel(x, y, ell, var, mean, j, chol, alpha)


def pessimistic_batch(model: GPModel, batch_size: int, candidates, kappa: float = 2.0) -> np.ndarray:
    """Select ``batch_size`` candidates by LCB with pessimistic fantasies.

    Conditioning on a fantasy ``y_j = mu_j + kappa sigma_j`` at ``c_j`` moves
    the posterior by a rank-one term ``v = k_n(., c_j) / sigma_j``:
    ``mu += kappa v`` and ``sigma^2 -= v^2``, where ``k_n`` is the current
    posterior covariance. The update is applied to the whole pool in place.
    """
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    m = cand.shape[0]
    if m == 0:
        raise ValidationError("candidate pool is empty")
    if batch_size < 1:
        raise ValidationError("batch size must be >= 1")
    if batch_size > m:
        raise ValidationError(f"batch size {batch_size} exceeds pool size {m}")
    mean, var = model.predict(cand)
    a = model.cross(cand)
    fantasies: list[np.ndarray] = []
    chosen: list[int] = []
    available = np.ones(m, dtype=bool)
    floor = model.jitter * model.signal_variance
    for _ in range(batch_size):
        lcb = mean - kappa * np.sqrt(np.maximum(var, 0.0))
        lcb[~available] = np.inf
        j = int(np.argmin(lcb))
        chosen.append(j)
        available[j] = False
        var_j = max(var[j], 0.0) + floor
        if len(chosen) == batch_size:
            break
        cov = model.kernel(cand, cand[j])[:, 0] - a.T @ a[:, j]
        for f in fantasies:
            cov -= f * f[j]
        v = cov / np.sqrt(var_j)
        fantasies.append(v)
        mean = mean + kappa * v
        var = np.maximum(var - v**2, 0.0)
    return cand[chosen]


@dataclass(frozen=True)
class BatchPlan:
    init: str = "lds"
    batch_size: int = 64
    batches: int = 1
    kappa: float = 2.0
    pool_size: int = DEFAULT_POOL_SIZE

    def __post_init__(self):
        init = {"s-ha": "lds", "pessimistic-fantasizing": "pessimistic"}.get(self.init, self.init)
        object.__setattr__(self, "init", init)
        if init not in INIT_STRATEGIES:
            raise ValidationError(f"unknown init strategy {self.init!r}; expected {INIT_STRATEGIES}")
        if self.batch_size < 1 or self.batches < 1:
            raise ValidationError("batch size and batch count must be >= 1")
        if self.kappa < 0:
            raise ValidationError("kappa must be non-negative")
        if self.pool_size < self.batch_size:
            raise ValidationError("pool size must be at least the batch size")


def candidate_pool(d: int, size: int, seed: int) -> np.ndarray:
    return generate(SamplerSpec("s-ha", d, seed=seed), size)


def init_batch(plan: BatchPlan, objective: Objective, seed: int) -> np.ndarray:
    """First batch for ``plan.init``; the non-adaptive ones are plain one-shot samples."""
    d, b = objective.dimension, plan.batch_size
    init_seed = derive_seed(seed, "init")
    if plan.init == "lds":
        return generate(SamplerSpec("s-ha", d, seed=init_seed), b)
    if plan.init == "random":
        return generate(SamplerSpec("random", d, seed=init_seed), b)
    if plan.init == "lhs":
        return generate(SamplerSpec("lhs", d, seed=init_seed), b)
    boot = min(2 * d, b)
    first = rng_for(init_seed, "bootstrap").random((boot, d))
    if boot == b:
        return first
    model = gp_fit(first, objective.evaluate(first))
    pool = candidate_pool(d, plan.pool_size, derive_seed(seed, "pool", 0))
    rest = pessimistic_batch(model, b - boot, pool, plan.kappa)
    return np.vstack([first, rest])


def _loss(objective: Objective, values: np.ndarray) -> np.ndarray:
    return objective.regret(values) if objective.optimum_value is not None else values


def bo_run(objective: Objective, plan: BatchPlan, seed: int) -> list[float]:
    """Running minimum of the loss (regret when the optimum is known) after each batch."""
    d = objective.dimension
    x = init_batch(plan, objective, seed)
    if x.shape[1] != d:
        raise ValidationError("initial batch dimension does not match the objective")
    y = objective.evaluate(x)
    trace = [float(_loss(objective, y).min())]
    for t in range(1, plan.batches):
        model = gp_fit(x, y)
        pool = candidate_pool(d, plan.pool_size, derive_seed(seed, "pool", t))
        new = pessimistic_batch(model, plan.batch_size, pool, plan.kappa)
        x = np.vstack([x, new])
        y = np.concatenate([y, objective.evaluate(new)])
        trace.append(min(trace[-1], float(_loss(objective, y[-len(new):]).min())))
    return trace


@dataclass
class RatioTable:
    """Mean losses and ratios to the ``lds`` strategy, keyed ``[T][strategy][function]``."""

    config: dict
    functions: list[str]
    strategies: list[str]
    batch_counts: list[int]
    mean_loss: dict
    ratio: dict
    losses: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# config: " + json.dumps(self.config, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["batches", "strategy"] + self.functions)
        for t in self.batch_counts:
            for s in self.strategies:
                w.writerow([t, s] + [repr(self.ratio[t][s][f]) for f in self.functions])
        return buf.getvalue()

    def to_dict(self) -> dict:
        conv = lambda table: {str(t): v for t, v in table.items()}  # noqa: E731
        return {"config": self.config, "functions": self.functions,
                "strategies": self.strategies, "batch_counts": self.batch_counts,
                "mean_loss": conv(self.mean_loss), "ratio": conv(self.ratio)}


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 1.0 if a == 0 else float("inf")
    return a / b


def bo_compare(functions: Sequence[str] = BO_SUITE,
               strategies: Sequence[str] = ("lds", "random", "lhs", "pessimistic"),
               batch_counts: Sequence[int] = (1, 3, 5), runs: int = 20, dimension: int = 12,
               batch_size: int = 64, seed: int = 0, kappa: float = 2.0,
               pool_size: int = DEFAULT_POOL_SIZE, threads: int = 1) -> RatioTable:
    """Cross product of functions x strategies, each run for ``max(batch_counts)`` batches.

    Run ``r`` on a function uses the same objective translation for every
    strategy. Shorter horizons are read off the trace prefix, which equals a
    separate run with fewer batches.
    """
    strategies = [BatchPlan(init=s).init for s in strategies]
    if "lds" not in strategies:
        strategies = ["lds"] + strategies
    if runs < 1 or not batch_counts or min(batch_counts) < 1:
        raise ValidationError("runs and batch counts must be >= 1")
    functions = [bo_suite(f, max(dimension, 2)).name for f in functions]
    horizon = max(batch_counts)
    jobs = [(f, s, r) for f in functions for s in strategies for r in range(runs)]

    def job(args):
        f, s, r = args
        run_seed = derive_seed(seed, "bo-run", f, r)
        objective = bo_suite(f, dimension, derive_seed(run_seed, "objective"))
        plan = BatchPlan(s, batch_size, horizon, kappa, pool_size)
        return bo_run(objective, plan, run_seed)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            traces = list(pool.map(job, jobs))
    else:
        traces = [job(a) for a in jobs]
    by_key = {}
    for (f, s, r), tr in zip(jobs, traces):
        by_key.setdefault((f, s), []).append(tr)
    losses, mean_loss, ratio = {}, {}, {}
    for t in sorted(batch_counts):
        losses[t], mean_loss[t], ratio[t] = {}, {}, {}
        for s in strategies:
            losses[t][s] = {f: [tr[t - 1] for tr in by_key[(f, s)]] for f in functions}
            mean_loss[t][s] = {f: float(np.mean(losses[t][s][f])) for f in functions}
        for s in strategies:
            ratio[t][s] = {f: _ratio(mean_loss[t][s][f], mean_loss[t]["lds"][f])
                           for f in functions}
    config = {"functions": functions, "strategies": strategies,
              "batch_counts": sorted(batch_counts), "runs": runs, "dimension": dimension,
              "batch_size": batch_size, "seed": seed, "kappa": kappa, "pool_size": pool_size}
    return RatioTable(config, functions, strategies, sorted(batch_counts), mean_loss, ratio,
                      losses)


__all__ = ["GPModel", "gp_fit", "pessimistic_batch", "BatchPlan", "bo_run", "bo_compare",
           "RatioTable", "init_batch", "candidate_pool", "median_lengthscale"]
