"""Test objectives on the unit cube.

All objectives are minimized. Those with a random optimum draw it from
their seed, uniformly in the cube.

BO-suite functions use their usual literature definitions on the canonical
domains below, mapped affinely onto ``[0, 1]`` per axis and then translated
by a random vector with wrap-around (no rotation):

==============  =====================  ==================================
name            canonical domain       minimum
==============  =====================  ==================================
rastrigin       [-5.12, 5.12]^d        0 at the origin
sphere          [-1, 1]^d              0 at the origin
ellipsoidal     [-5, 5]^d              0 at the origin, weights 10^(6(i-1)/(d-1))
styblinski      [-5, 5]^d              -39.16617 d at x_i = -2.903534
beale           [-4.5, 4.5]^2          0 at (3, 0.5)
branin          [-5, 10] x [0, 15]     0.397887 at (pi, 2.275) and two others
sixhump         [-3, 3] x [-2, 2]      -1.031628 at (0.0898, -0.7126) and its mirror
==============  =====================  ==================================

The 2-D functions ignore coordinates beyond the second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from qrsearch._seeding import rng_for
from qrsearch.errors import ParameterError, ValidationError
from qrsearch.quality import GeometryConstants


@dataclass(frozen=True, eq=False)
class Objective:
    """A named function on ``[0, 1]^d``.

    ``func`` maps an ``(m, d)`` array to ``m`` values; :meth:`evaluate`
    accepts a single point or a batch.
    """

    name: str
    dimension: int
    func: Callable[[np.ndarray], np.ndarray]
    optimum_location: Optional[np.ndarray] = None
    optimum_value: Optional[float] = None
    seed: int = 0

    def evaluate(self, x):
        arr = np.asarray(x, dtype=float)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.shape[1] != self.dimension:
            raise ValidationError(
                f"{self.name} expects dimension {self.dimension}, got {arr.shape[1]}")
        values = np.asarray(self.func(arr), dtype=float)
        return float(values[0]) if single else values

    __call__ = evaluate

    def regret(self, values):
        if self.optimum_value is None:
            raise ValidationError(f"{self.name} has no known optimum value")
        return np.asarray(values, dtype=float) - self.optimum_value


def _optimum(d: int, seed: int) -> np.ndarray:
    return rng_for(seed, "optimum").random(d)


def sphere(d: int, seed: int = 0) -> Objective:
    """Euclidean distance to a random optimum."""
    _check_dim(d, 1, "sphere")
    xs = _optimum(d, seed)
    return Objective("sphere", d, lambda x: np.sqrt(((x - xs) ** 2).sum(axis=1)), xs, 0.0, seed)


def illcond(d: int, seed: int = 0) -> Objective:
    """Quadratic with weights ``(d - i)^3``: the first variables dominate, the last is inert."""
    _check_dim(d, 2, "illcond")
    xs = _optimum(d, seed)
    w = (d - np.arange(1, d + 1, dtype=float)) ** 3
    return Objective("illcond", d, lambda x: ((x - xs) ** 2 * w).sum(axis=1), xs, 0.0, seed)


def reverse_illcond(d: int, seed: int = 0) -> Objective:
    """Quadratic with weights ``(1 + i)^3``: the last variables dominate."""
    _check_dim(d, 1, "reverse_illcond")
    xs = _optimum(d, seed)
    w = (1.0 + np.arange(1, d + 1, dtype=float)) ** 3
    return Objective("reverse_illcond", d, lambda x: ((x - xs) ** 2 * w).sum(axis=1), xs, 0.0,
                     seed)


def antisobol(d: int, seed: int = 0) -> Objective:
    """Squared sum of the first two offsets; a valley along the anti-diagonal."""
    _check_dim(d, 2, "antisobol")
    xs = _optimum(d, seed)
    return Objective("antisobol", d,
                     lambda x: ((x[:, 0] - xs[0]) + (x[:, 1] - xs[1])) ** 2, xs, 0.0, seed)


def antish(d: int, seed: int = 0) -> Objective:
    """Squared sum of all offsets; a diagonal valley."""
    _check_dim(d, 1, "antish")
    xs = _optimum(d, seed)
    return Objective("antish", d, lambda x: (x - xs).sum(axis=1) ** 2, xs, 0.0, seed)


def _torus_dist(x: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    diff = np.abs(x[:, None, :] - anchors[None, :, :])
    diff = np.minimum(diff, 1.0 - diff)
    return np.sqrt((diff**2).sum(axis=2)).min(axis=1)


def pathological_ball_indicator(points, epsilon: float) -> Objective:
    """1 within torus distance ``epsilon`` of any anchor point, 0 elsewhere.

    Any sampler that puts its points on the anchors scores 1 while most of
    the cube scores 0. ``epsilon`` must be small enough that the balls
    cannot cover the cube: ``n * V_d * epsilon^d < 1``.
    """
    anchors = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = anchors.shape
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    covered = n * GeometryConstants.for_dimension(d).ball_volume * epsilon**d
    if covered >= 1.0:
        raise ValidationError(
            f"epsilon={epsilon} lets {n} balls cover the cube (n V_d eps^d = {covered:.3g} >= 1)")

    def func(x):
        return (_torus_dist(x, anchors) <= epsilon).astype(float)

    return Objective("pathological", d, func, None, 0.0)


# -- BO suite ------------------------------------------------------------------


def _rastrigin(z):
    return 10.0 * z.shape[1] + (z**2 - 10.0 * np.cos(2.0 * np.pi * z)).sum(axis=1)


def _sphere(z):
    return (z**2).sum(axis=1)


def _ellipsoidal(z):
    d = z.shape[1]
    expo = 6.0 * np.arange(d) / (d - 1) if d > 1 else np.zeros(1)
    return (10.0**expo * z**2).sum(axis=1)


def _styblinski(z):
    return 0.5 * (z**4 - 16.0 * z**2 + 5.0 * z).sum(axis=1)


def _beale(z):
    x, y = z[:, 0], z[:, 1]
    return ((1.5 - x + x * y) ** 2 + (2.25 - x + x * y**2) ** 2
            + (2.625 - x + x * y**3) ** 2)


def _branin(z):
    x, y = z[:, 0], z[:, 1]
    b = 5.1 / (4.0 * np.pi**2)
    c = 5.0 / np.pi
    t = 1.0 / (8.0 * np.pi)
    return (y - b * x**2 + c * x - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x) + 10.0


def _sixhump(z):
    x, y = z[:, 0], z[:, 1]
    return (4.0 - 2.1 * x**2 + x**4 / 3.0) * x**2 + x * y + (-4.0 + 4.0 * y**2) * y**2


_STYB_ARGMIN = -2.903534027771177


@dataclass(frozen=True)
class _Canonical:
    func: Callable
    low: Sequence[float]
    high: Sequence[float]
    argmin: Sequence[float]
    native_dim: Optional[int]


def _canonical(name: str, d: int) -> _Canonical:
    if name == "rastrigin":
        return _Canonical(_rastrigin, [-5.12] * d, [5.12] * d, [0.0] * d, None)
    if name == "sphere":
        return _Canonical(_sphere, [-1.0] * d, [1.0] * d, [0.0] * d, None)
    if name == "ellipsoidal":
        return _Canonical(_ellipsoidal, [-5.0] * d, [5.0] * d, [0.0] * d, None)
    if name == "styblinski":
        return _Canonical(_styblinski, [-5.0] * d, [5.0] * d, [_STYB_ARGMIN] * d, None)
    if name == "beale":
        return _Canonical(_beale, [-4.5, -4.5], [4.5, 4.5], [3.0, 0.5], 2)
    if name == "branin":
        return _Canonical(_branin, [-5.0, 0.0], [10.0, 15.0], [math.pi, 2.275], 2)
    if name == "sixhump":
        return _Canonical(_sixhump, [-3.0, -2.0], [3.0, 2.0],
                          [0.08984201368301331, -0.7126564032704135], 2)
    raise ParameterError(f"unknown BO function {name!r}; expected one of {sorted(BO_SUITE)}")


BO_SUITE = ("rastrigin", "sphere", "ellipsoidal", "styblinski", "beale", "branin", "sixhump")
_BO_ALIASES = {"ellip": "ellipsoidal", "ellipsoid": "ellipsoidal", "styb": "styblinski",
               "styblinski-tang": "styblinski", "six-hump": "sixhump", "6hump": "sixhump",
               "sixhumpcamel": "sixhump"}


def bo_suite(name: str, d: int, seed: int = 0) -> Objective:
    """Standard benchmark function mapped onto ``[0, 1]^d`` with a random wrap-around translation."""
    key = _BO_ALIASES.get(name.lower(), name.lower())
    c = _canonical(key, d)
    k = c.native_dim or d
    if d < k:
        raise ParameterError(f"{key} needs dimension >= {k}, got {d}")
    low = np.asarray(c.low, dtype=float)
    width = np.asarray(c.high, dtype=float) - low
    shift = rng_for(seed, "translation").random(d)

    def func(x):
        u = np.mod(x - shift, 1.0)[:, :k]
        return c.func(low + u * width)

    u_star = (np.asarray(c.argmin, dtype=float) - low) / width
    full = np.concatenate([u_star, np.zeros(d - k)]) if d > k else u_star
    x_star = np.mod(full + shift, 1.0)
    value = float(c.func((low + u_star * width)[None, :])[0])
    return Objective(key, d, func, x_star, value, seed)


# -- registry ------------------------------------------------------------------

_TOY = {
    "sphere": sphere,
    "illcond": illcond,
    "reverse_illcond": reverse_illcond,
    "reverseillcond": reverse_illcond,
    "antisobol": antisobol,
    "antish": antish,
}


def make_objective(name: str, d: int, seed: int = 0) -> Objective:
    """Look up an objective by name.

    Toy one-shot functions use their plain names (``sphere``, ``illcond``,
    ``reverse_illcond``, ``antisobol``, ``antish``); BO-suite functions take a
    ``bo:`` prefix, e.g. ``bo:branin``.
    """
    key = name.strip().lower().replace("-", "_")
    if key.startswith("bo:"):
        return bo_suite(key[3:], d, seed)
    if key in _TOY:
        return _TOY[key](d, seed)
    known = sorted({"sphere", "illcond", "reverse_illcond", "antisobol", "antish"})
    raise ParameterError(
        f"unknown objective {name!r}; expected one of {known} or bo:<{'|'.join(BO_SUITE)}>")


def objective_names() -> list[str]:
    return ["sphere", "illcond", "reverse_illcond", "antisobol", "antish"] + [
        f"bo:{n}" for n in BO_SUITE]


def _check_dim(d: int, minimum: int, name: str) -> None:
    if d < minimum:
        raise ParameterError(f"{name} is not defined in dimension {d} (needs d >= {minimum})")
