"""Spread metrics for point sets in the unit cube.

Exact values are only tractable for star discrepancy on small sets; the
other metrics are Monte Carlo lower bounds and are reported as such.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln

from qrsearch._seeding import derive_seed, rng_for
from qrsearch.errors import UsageError, ValidationError

DEFAULT_DISPERSION_PROBES = 4096
DEFAULT_DISCREPANCY_SAMPLES = 8192
DEFAULT_VDISP_TRIALS = 2000
EXACT_MAX_POINTS = 200
EXACT_MAX_DIM = 3
_MAX_CORNER_DIM = 10
_BALL_CANDIDATES = 16
_BALL_VOLUME_SAMPLES = 20000
_CHUNK = 2048


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise ValidationError("points must be a 2-D array of shape (n, d)")
    return pts


# -- geometry ------------------------------------------------------------------


@dataclass(frozen=True)
class GeometryConstants:
    """Unit-ball volume ``V``, its positive orthant ``V_orthant`` and the
    largest cube ``K`` inside that orthant (side ``1/sqrt(d)``)."""

    dimension: int
    ball_volume: float
    orthant_volume: float
    orthant_cube_volume: float

    @classmethod
    def for_dimension(cls, d: int) -> "GeometryConstants":
        if d < 1:
            raise ValidationError("dimension must be >= 1")
        v = math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))
        return cls(d, v, v / 2**d, d ** (-0.5 * d))


# -- star discrepancy ----------------------------------------------------------


def star_discrepancy_exact(points) -> float:
    """Exact star discrepancy over anchored boxes ``[0, t)``.

    The supremum is attained on the grid of point coordinates (plus 1) per
    axis; at each corner both the closed count (``<= t``) and the open count
    (``< t``) are checked. Limited to ``n <= 200`` and ``d <= 3``.
    """
    pts = _as_points(points)
    n, d = pts.shape
    if n == 0:
        return 1.0
    if n > EXACT_MAX_POINTS or d > EXACT_MAX_DIM:
        raise UsageError(
            f"exact star discrepancy is limited to n <= {EXACT_MAX_POINTS}, d <= {EXACT_MAX_DIM}; "
            "use star_discrepancy_mc for larger sets")
    grids, ranks = [], []
    for j in range(d):
        values = np.unique(np.append(pts[:, j], 1.0))
        grids.append(values)
        ranks.append(np.searchsorted(values, pts[:, j]))
    shape = tuple(len(g) for g in grids)
    hist = np.zeros(shape, dtype=np.int64)
    np.add.at(hist, tuple(ranks), 1)
    closed = hist
    for j in range(d):
        closed = np.cumsum(closed, axis=j)
    # open count at corner i equals the closed count at corner i-1 on every axis
    open_ = np.pad(closed, [(1, 0)] * d)[tuple(slice(0, s) for s in shape)]
    volume = np.ones(shape)
    for j, g in enumerate(grids):
        volume = volume * g.reshape([-1 if k == j else 1 for k in range(d)])
    over = closed / n - volume
    under = volume - open_ / n
    return float(max(over.max(), under.max()))


def star_discrepancy_mc(points, samples: int = DEFAULT_DISCREPANCY_SAMPLES, seed: int = 0) -> float:
    """Lower bound: max over random anchored boxes of ``|empirical - volume|``.

    Box corners are a prefix of one seeded stream, so a larger budget never
    yields a smaller estimate.
    """
    pts = _as_points(points)
    n, d = pts.shape
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    if n == 0:
        return 1.0
    corners = rng_for(seed, "disc-boxes").random((samples, d))
    best = 0.0
    for start in range(0, samples, _CHUNK):
        t = corners[start:start + _CHUNK]
        inside_open = np.all(pts[None, :, :] < t[:, None, :], axis=2).sum(axis=1)
        inside_closed = np.all(pts[None, :, :] <= t[:, None, :], axis=2).sum(axis=1)
        vol = t.prod(axis=1)
        gap = np.maximum(vol - inside_open / n, inside_closed / n - vol)
        best = max(best, float(gap.max()))
    return best


# -- dispersion ----------------------------------------------------------------


# below this many probe/point pairs a dense distance matrix beats building a tree
_DENSE_LIMIT = 20000


@functools.lru_cache(maxsize=64)
def _probe_set(d: int, probes: int, seed: int) -> np.ndarray:
    uniform = rng_for(seed, "disp-probes").random((probes, d))
    k = min(d, _MAX_CORNER_DIM)
    corners = np.array(np.meshgrid(*([[0.0, 1.0]] * k), indexing="ij")).reshape(k, -1).T
    if d > k:
        corners = np.hstack([corners, np.zeros((corners.shape[0], d - k))])
    out = np.vstack([uniform, corners])
    out.flags.writeable = False
    return out


def _min_distances(pts: np.ndarray, probes: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        if pts.shape[0] * probes.shape[0] <= _DENSE_LIMIT:
            diff = probes[:, None, :] - pts[None, :, :]
            return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff).min(axis=1))
        tree = cKDTree(pts)
        return tree.query(probes)[0]
    if metric == "torus":
        tree = cKDTree(np.mod(pts, 1.0), boxsize=1.0)
        return tree.query(np.mod(probes, 1.0))[0]
    raise ValidationError(f"unknown metric {metric!r}; expected 'euclidean' or 'torus'")


def dispersion_estimate(points, probes: int = DEFAULT_DISPERSION_PROBES, seed: int = 0,
                        metric: str = "euclidean") -> float:
    """Largest empty-ball radius found among uniform probes and cube corners.

    This is a lower bound on the true dispersion.
    """
    pts = _as_points(points)
    if pts.shape[0] == 0:
        raise ValidationError("dispersion of an empty point set is undefined")
    probe_pts = _probe_set(pts.shape[1], probes, seed)
    return float(_min_distances(pts, probe_pts, metric).max())


def stochastic_dispersion(point_sets: Sequence[np.ndarray], delta: float,
                          probes: int = DEFAULT_DISPERSION_PROBES, seed: int = 0,
                          metric: str = "euclidean") -> float:
    """Empirical stochastic dispersion over independent draws of a sampler.

    For each fixed probe ``x`` the ``(1 - delta)``-quantile over draws of the
    distance from ``x`` to the nearest point is taken; the result is the
    largest such quantile over probes.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValidationError("delta must lie in [0, 1]")
    sets = [_as_points(s) for s in point_sets]
    if not sets:
        raise ValidationError("need at least one point set")
    probe_pts = _probe_set(sets[0].shape[1], probes, seed)
    dists = np.stack([_min_distances(s, probe_pts, metric) for s in sets])
    return float(np.quantile(dists, 1.0 - delta, axis=0).max())


# -- volume dispersion ---------------------------------------------------------


def _clipped_ball_volume(center: np.ndarray, radius: float, rng: np.random.Generator,
                         samples: int) -> float:
    d = center.size
    geom = GeometryConstants.for_dimension(d)
    if np.all(center - radius >= 0.0) and np.all(center + radius <= 1.0):
        return geom.ball_volume * radius**d
    lo = np.maximum(center - radius, 0.0)
    hi = np.minimum(center + radius, 1.0)
    box = float(np.prod(hi - lo))
    u = lo + (hi - lo) * rng.random((samples, d))
    frac = np.mean(np.sum((u - center) ** 2, axis=1) <= radius**2)
    return box * float(frac)


def _ball_vdisp(pts: np.ndarray, trials: int, seed: int) -> float:
    probe_pts = _probe_set(pts.shape[1], trials, seed)
    radii = _min_distances(pts, probe_pts, "euclidean")
    order = np.argsort(-radii, kind="stable")[:_BALL_CANDIDATES]
    rng = rng_for(seed, "ball-volume")
    return max(_clipped_ball_volume(probe_pts[i], float(radii[i]), rng, _BALL_VOLUME_SAMPLES)
               for i in order)


def _rect_vdisp(pts: np.ndarray, trials: int, seed: int, anchored: bool) -> float:
    n, d = pts.shape
    rng = rng_for(seed, "rect-search")
    best = 0.0
    for _ in range(trials):
        x = rng.random(d)
        order = rng.permutation(d)
        hi = x.copy()
        if anchored:
            lo = np.zeros(d)
            outside = pts >= hi
            if np.any(~outside.any(axis=1)):
                continue  # the seed box [0, x) already holds a point
        else:
            lo = x.copy()
            outside = (pts <= lo) | (pts >= hi)
        violations = outside.sum(axis=1)
        for j in order:
            # points inside the box on every axis but j bound its growth along j
            blocking = violations - outside[:, j] == 0
            cj = pts[blocking, j]
            above = cj[cj >= hi[j]]
            hi[j] = above.min() if above.size else 1.0
            if not anchored:
                below = cj[cj <= lo[j]]
                lo[j] = below.max() if below.size else 0.0
                col = (pts[:, j] <= lo[j]) | (pts[:, j] >= hi[j])
            else:
                col = pts[:, j] >= hi[j]
            violations += col.astype(np.int64) - outside[:, j]
            outside[:, j] = col
        best = max(best, float(np.prod(hi - lo)))
    return best


def vdisp_estimate(points, family: str = "rects", trials: int = DEFAULT_VDISP_TRIALS,
                   seed: int = 0, anchored: bool = False) -> float:
    """Largest empty set volume found for the given family (a lower bound).

    ``balls``: the emptiest probe balls are clipped to the cube and their
    volume measured by Monte Carlo. ``rects``: randomized growth of empty
    axis-aligned boxes from random seeds; ``anchored=True`` restricts the
    search to boxes ``[0, t)``.
    """
    pts = _as_points(points)
    if pts.shape[0] == 0:
        raise ValidationError("volume dispersion of an empty point set is undefined")
    if family == "balls":
        return _ball_vdisp(pts, trials, seed)
    if family == "rects":
        return _rect_vdisp(pts, trials, seed, anchored)
    raise ValidationError(f"unknown family {family!r}; expected 'balls' or 'rects'")


# -- projections and correlation -----------------------------------------------


def projection(points, axes: Sequence[int]) -> np.ndarray:
    """Select coordinates ``axes`` (1-indexed), preserving point order."""
    pts = _as_points(points)
    d = pts.shape[1]
    axes = [int(a) for a in axes]
    if not axes:
        raise ValidationError("axes must be non-empty")
    bad = [a for a in axes if not 1 <= a <= d]
    if bad:
        raise ValidationError(f"axes {bad} out of range 1..{d}")
    return pts[:, [a - 1 for a in axes]]


def mean_abs_correlation(points, axis_range: tuple[int, int]) -> float:
    """Mean absolute Pearson correlation over all axis pairs in ``axis_range``.

    The range is 1-indexed and inclusive. Constant axes contribute 0.
    """
    pts = _as_points(points)
    lo, hi = axis_range
    sub = projection(pts, range(lo, hi + 1))
    if sub.shape[1] < 2:
        raise ValidationError("need at least two axes")
    if sub.shape[0] < 3:
        raise ValidationError("need at least three points")
    constant = np.ptp(sub, axis=0) == 0
    if constant.any():
        warnings.warn("constant axis in correlation range; its pairs count as 0", RuntimeWarning)
    centered = np.where(constant, 0.0, sub - sub.mean(axis=0))
    norms = np.sqrt((centered**2).sum(axis=0))
    safe = np.where(constant, 1.0, norms)
    corr = (centered.T @ centered) / np.outer(safe, safe)
    iu = np.triu_indices(sub.shape[1], 1)
    return float(np.abs(corr[iu]).mean())


# -- report --------------------------------------------------------------------


@dataclass
class SpreadReport:
    n_points: int
    dimension: int
    star_discrepancy: float
    star_discrepancy_method: str
    star_discrepancy_samples: Optional[int]
    dispersion: float
    dispersion_metric: str
    dispersion_probes: int
    ball_volume_dispersion: float
    rect_volume_dispersion: float
    vdisp_trials: int
    seed: int
    lower_bounds: tuple[str, ...] = ("dispersion", "ball_volume_dispersion",
                                     "rect_volume_dispersion")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["lower_bounds"] = list(self.lower_bounds)
        return out


def spread_report(points, seed: int = 0, metric: str = "euclidean",
                  probes: int = DEFAULT_DISPERSION_PROBES,
                  samples: int = DEFAULT_DISCREPANCY_SAMPLES,
                  trials: int = DEFAULT_VDISP_TRIALS) -> SpreadReport:
    pts = _as_points(points)
    n, d = pts.shape
    if n == 0:
        raise ValidationError("cannot audit an empty point set")
    if n <= EXACT_MAX_POINTS and d <= EXACT_MAX_DIM:
        disc, method, used = star_discrepancy_exact(pts), "exact", None
    else:
        disc = star_discrepancy_mc(pts, samples, derive_seed(seed, "audit-disc"))
        method, used = "monte-carlo-lower-bound", samples
    lower = [] if method == "exact" else ["star_discrepancy"]
    return SpreadReport(
        n_points=n,
        dimension=d,
        star_discrepancy=disc,
        star_discrepancy_method=method,
        star_discrepancy_samples=used,
        dispersion=dispersion_estimate(pts, probes, derive_seed(seed, "audit-disp"), metric),
        dispersion_metric=metric,
        dispersion_probes=probes,
        ball_volume_dispersion=vdisp_estimate(pts, "balls", trials, derive_seed(seed, "audit-vb")),
        rect_volume_dispersion=vdisp_estimate(pts, "rects", trials, derive_seed(seed, "audit-vr")),
        vdisp_trials=trials,
        seed=seed,
        lower_bounds=tuple(lower) + ("dispersion", "ball_volume_dispersion",
                                     "rect_volume_dispersion"),
    )
