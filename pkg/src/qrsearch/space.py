"""Hyperparameter spaces and the map from unit-cube points to configurations.

Variables are ranked by importance (rank 1 = most important) and the
variable of rank ``r`` gets the ``r``-th prime as its Halton/Hammersley
base, since coordinates with small bases become uniform first. When in
doubt, put the learning rate first and the gradient-clipping norm second.

Space files are JSON::

    {"params": [
        {"name": "lr", "kind": "continuous", "low": 0.5, "high": 30,
         "scale": "auto", "rank": 1},
        {"name": "layers", "kind": "discrete", "low": 1, "high": 4, "rank": 3},
        {"name": "cell", "kind": "categorical", "choices": ["lstm", "gru"], "rank": 2}
    ]}

``scale`` defaults to ``auto``. Ranks are given for all parameters or none;
without them declaration order is used.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from qrsearch.errors import ValidationError
from qrsearch.sampler import SamplerSpec, coprime_bases, generate

KINDS = ("continuous", "discrete", "categorical")
SCALES = ("linear", "log", "auto")
# auto scale goes logarithmic when the range is positive and reaches this low
LOG_THRESHOLD = 0.1


@dataclass(frozen=True)
class ParamDef:
    name: str
    kind: str = "continuous"
    low: Optional[float] = None
    high: Optional[float] = None
    choices: tuple = ()
    scale: str = "auto"
    rank: Optional[int] = None

    def __post_init__(self):
        kind = {"discrete-integer": "discrete", "integer": "discrete"}.get(self.kind, self.kind)
        object.__setattr__(self, "kind", kind)
        scale = {"logarithmic": "log"}.get(self.scale, self.scale)
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "choices", tuple(self.choices))
        if kind not in KINDS:
            raise ValidationError(f"{self.name}: unknown kind {self.kind!r}")
        if scale not in SCALES:
            raise ValidationError(f"{self.name}: unknown scale {self.scale!r}")
        if kind == "categorical":
            if not self.choices:
                raise ValidationError(f"{self.name}: categorical parameter needs choices")
            return
        if self.low is None or self.high is None:
            raise ValidationError(f"{self.name}: low and high are required")
        if not self.low < self.high:
            raise ValidationError(f"{self.name}: low must be < high")
        if kind == "discrete" and (self.low != int(self.low) or self.high != int(self.high)):
            raise ValidationError(f"{self.name}: discrete bounds must be integers")
        if scale == "log" and self.low <= 0:
            raise ValidationError(f"{self.name}: logarithmic scale requires low > 0")

    @property
    def is_range(self) -> bool:
        return self.kind != "categorical"

    def to_dict(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind}
        if self.is_range:
            out.update(low=self.low, high=self.high, scale=self.scale)
        else:
            out["choices"] = list(self.choices)
        if self.rank is not None:
            out["rank"] = self.rank
        return out


def resolve_scale(p: ParamDef) -> str:
    """``linear`` or ``log`` for a range parameter.

    ``auto`` becomes ``log`` when the whole range is positive and contains a
    value at or below 0.1.
    """
    if not p.is_range:
        raise ValidationError(f"{p.name}: categorical parameters have no scale")
    if p.scale != "auto":
        return p.scale
    return "log" if 0 < p.low <= LOG_THRESHOLD else "linear"


@dataclass(frozen=True)
class ParamSpace:
    params: tuple[ParamDef, ...]
    ranks: tuple[int, ...] = field(init=False)

    def __init__(self, params: Sequence[ParamDef]):
        params = tuple(params)
        if not params:
            raise ValidationError("a space needs at least one parameter")
        names = [p.name for p in params]
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate parameter names in {names}")
        given = [p.rank for p in params]
        if all(r is None for r in given):
            ranks = tuple(range(1, len(params) + 1))
        elif any(r is None for r in given):
            raise ValidationError("either every parameter has a rank or none does")
        else:
            ranks = tuple(int(r) for r in given)
            if sorted(ranks) != list(range(1, len(params) + 1)):
                raise ValidationError(f"ranks must be a permutation of 1..{len(params)}")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "ranks", ranks)

    @property
    def dimension(self) -> int:
        return len(self.params)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def to_dict(self) -> dict:
        return {"params": [p.to_dict() for p in self.params]}

    @classmethod
    def from_dict(cls, data: dict) -> "ParamSpace":
        try:
            entries = data["params"]
        except (KeyError, TypeError):
            raise ValidationError("space definition needs a 'params' list") from None
        params = []
        for i, entry in enumerate(entries):
            try:
                params.append(ParamDef(**entry))
            except TypeError as exc:
                raise ValidationError(f"param {i}: {exc}") from None
        return cls(params)

    @classmethod
    def load(cls, path) -> "ParamSpace":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def base_assignment(space: ParamSpace) -> list[int]:
    """Per-variable bases: the variable of rank r gets the r-th prime."""
    return coprime_bases(space.dimension, space.ranks)


def _map_one(p: ParamDef, u: float):
    if p.kind == "categorical":
        idx = min(int(math.floor(u * len(p.choices))), len(p.choices) - 1)
        return p.choices[idx]
    if p.kind == "discrete":
        lo, hi = int(p.low), int(p.high)
        return min(lo + int(math.floor(u * (hi - lo + 1))), hi)
    if resolve_scale(p) == "log":
        a, b = math.log(p.low), math.log(p.high)
        return math.exp(a + u * (b - a))
    return p.low + u * (p.high - p.low)


def map_point(space: ParamSpace, point: Sequence[float]) -> dict:
    """Configuration for one unit-cube point, keyed by parameter name."""
    point = np.asarray(point, dtype=float).ravel()
    if point.size != space.dimension:
        raise ValidationError(f"point has dimension {point.size}, space has {space.dimension}")
    return {p.name: _map_one(p, float(u)) for p, u in zip(space.params, point)}


def unmap_value(p: ParamDef, value) -> float:
    """Inverse of the continuous map; discrete/categorical return the cell's left edge."""
    if p.kind == "categorical":
        return p.choices.index(value) / len(p.choices)
    if p.kind == "discrete":
        return (int(value) - int(p.low)) / (int(p.high) - int(p.low) + 1)
    if resolve_scale(p) == "log":
        return (math.log(value) - math.log(p.low)) / (math.log(p.high) - math.log(p.low))
    return (value - p.low) / (p.high - p.low)


def sampler_for_space(space: ParamSpace, algorithm, seed: int = 0, **kwargs) -> SamplerSpec:
    """A sampler spec whose radical-inverse bases follow the space's ranking.

    For the Hammersley family the first coordinate is ``(k - 1/2)/n``, so the
    top-ranked variable is placed there and the rest follow by rank.
    """
    spec = SamplerSpec(algorithm, space.dimension, seed=seed, **kwargs)
    bases = base_assignment(space)
    if spec.n_bases == space.dimension:
        return spec.replace(bases=tuple(bases))
    return spec


def sample_space(space: ParamSpace, spec: SamplerSpec, n: int) -> list[dict]:
    """Draw ``n`` configurations from the space using ``spec``.

    For Hammersley-family samplers the coordinates are permuted so that the
    evenly spaced first coordinate lands on the top-ranked variable and
    later coordinates follow by rank.
    """
    if spec.dimension != space.dimension:
        raise ValidationError("sampler and space dimensions differ")
    points = generate(spec, n)
    if spec.n_bases != space.dimension:
        by_rank = np.argsort(space.ranks)
        reordered = np.empty_like(points)
        reordered[:, by_rank] = points
        points = reordered
    return [map_point(space, p) for p in points]
