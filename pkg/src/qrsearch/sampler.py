"""Point-set generators on the unit cube.

Every generator is a pure function of ``(SamplerSpec, n)`` and returns an
``(n, d)`` float64 array whose rows are points in ``[0, 1)^d``.

Randomized ingredients (scrambling permutations, shift vector, LHS jitter,
random start, fill-in points) each draw from their own stream derived from
``spec.seed`` and a tag, see :mod:`qrsearch._seeding`.
"""

from __future__ import annotations

import dataclasses
import enum
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from qrsearch import _sobol_table
from qrsearch._seeding import derive_seed, rng_for
from qrsearch.errors import ParameterError, UsageError

__all__ = [
    "Algorithm",
    "SamplerSpec",
    "first_primes",
    "coprime_bases",
    "radical_inverse",
    "scramble_permutations",
    "shift_vector",
    "apply_shift",
    "halton",
    "hammersley",
    "sobol",
    "lhs",
    "grid",
    "random",
    "semi_qr",
    "naive_doe",
    "mirror3d",
    "generate",
    "SOBOL_MAX_DIM",
]

# digits whose weight q^(-j-1) falls below this are dropped
TRUNCATION = 2.0**-60
_BELOW_ONE = np.nextafter(1.0, 0.0)
_SOBOL_BITS = 32
SOBOL_MAX_DIM = len(_sobol_table.POLY)
RANDOM_START_RANGE = 1 << 16


class Algorithm(str, enum.Enum):
    RANDOM = "random"
    GRID = "grid"
    SHIFTED_GRID = "shifted-grid"
    LHS = "lhs"
    HALTON = "halton"
    HAMMERSLEY = "hammersley"
    SCRAMBLED_HALTON = "scrambled-halton"
    SCRAMBLED_HAMMERSLEY = "scrambled-hammersley"
    S_HA = "s-ha"
    S_SH = "s-sh"
    SOBOL = "sobol"
    SEMI_QR = "semiqr"
    NAIVE_DOE = "naive-doe"

    @classmethod
    def parse(cls, name: "str | Algorithm") -> "Algorithm":
        if isinstance(name, Algorithm):
            return name
        key = name.strip().lower().replace("_", "-")
        aliases = {"sha": "s-ha", "ssh": "s-sh", "semi-qr": "semiqr", "naivedoe": "naive-doe",
                   "scr-halton": "scrambled-halton", "scr-hammersley": "scrambled-hammersley"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(a.value for a in cls)
            raise ParameterError(f"unknown sampler {name!r}; expected one of: {names}") from None


_HALTON_FAMILY = {Algorithm.HALTON, Algorithm.SCRAMBLED_HALTON, Algorithm.S_HA}
_HAMMERSLEY_FAMILY = {Algorithm.HAMMERSLEY, Algorithm.SCRAMBLED_HAMMERSLEY, Algorithm.S_SH}
_SCRAMBLED = {Algorithm.SCRAMBLED_HALTON, Algorithm.S_HA,
              Algorithm.SCRAMBLED_HAMMERSLEY, Algorithm.S_SH}
_SHIFTED = {Algorithm.S_HA, Algorithm.S_SH, Algorithm.SHIFTED_GRID}


@dataclass(frozen=True)
class SamplerSpec:
    """Everything needed to reproduce a point set.

    ``bases`` defaults to the first primes; the Hammersley family uses
    ``dimension - 1`` bases since its first coordinate is ``(k - 1/2)/n``.
    ``random_start`` discards a seeded random prefix of the Halton family
    and ``skip_origin`` drops the all-zero first Sobol point.
    """

    algorithm: Algorithm
    dimension: int
    seed: int = 0
    bases: Optional[tuple[int, ...]] = None
    mirror3d: bool = False
    candidate_count: int = 11
    random_start: bool = False
    skip_origin: bool = True

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        if self.bases is not None:
            object.__setattr__(self, "bases", tuple(int(b) for b in self.bases))
        if int(self.dimension) < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.dimension}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if self.candidate_count < 1:
            raise ParameterError("candidate_count must be >= 1")
        if self.algorithm is Algorithm.SOBOL and self.dimension > SOBOL_MAX_DIM:
            raise ParameterError(
                f"sobol supports at most {SOBOL_MAX_DIM} dimensions, got {self.dimension}")
        if self.bases is not None:
            _check_bases(self.bases, self.n_bases)

    @property
    def n_bases(self) -> int:
        if self.algorithm in _HAMMERSLEY_FAMILY:
            return self.dimension - 1
        return self.dimension

    def resolved_bases(self) -> tuple[int, ...]:
        if self.bases is not None:
            return self.bases
        return tuple(first_primes(self.n_bases))

    def replace(self, **changes) -> "SamplerSpec":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["algorithm"] = self.algorithm.value
        out["bases"] = list(self.resolved_bases())
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SamplerSpec":
        fields = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - fields
        if unknown:
            raise ParameterError(f"unknown sampler fields: {sorted(unknown)}")
        kwargs = dict(data)
        if kwargs.get("bases") is not None:
            kwargs["bases"] = tuple(kwargs["bases"])
        return cls(**kwargs)


def _check_bases(bases: Sequence[int], expected: int) -> None:
    if len(bases) != expected:
        raise ParameterError(f"expected {expected} bases, got {len(bases)}")
    for b in bases:
        if b < 2:
            raise ParameterError(f"bases must be >= 2, got {b}")
    for a, b in itertools.combinations(bases, 2):
        if math.gcd(a, b) != 1:
            raise ParameterError(f"bases {a} and {b} are not coprime")


def first_primes(count: int) -> list[int]:
    primes: list[int] = []
    candidate = 2
    while len(primes) < count:
        if all(candidate % p for p in primes if p * p <= candidate):
            primes.append(candidate)
        candidate += 1
    return primes


def coprime_bases(d: int, ranking: Optional[Sequence[int]] = None) -> list[int]:
    """First ``d`` primes, optionally assigned by importance rank.

    ``ranking[i]`` is the rank (1 = most important) of variable ``i``; the
    variable ranked ``r`` receives the ``r``-th prime so that important
    variables get the small bases.
    """
    if d < 1:
        raise ParameterError("dimension must be >= 1")
    primes = first_primes(d)
    if ranking is None:
        return primes
    ranks = [int(r) for r in ranking]
    if sorted(ranks) != list(range(1, d + 1)):
        raise ParameterError(f"ranking must be a permutation of 1..{d}, got {ranks}")
    return [primes[r - 1] for r in ranks]


def _n_digits(base: int) -> int:
    j = 0
    while float(base) ** -(j + 1) >= TRUNCATION:
        j += 1
    return j


def radical_inverse(k: int, base: int, perm: Optional[Sequence[int]] = None) -> float:
    """Base-``base`` digit reversal of ``k``, optionally digit-scrambled."""
    if base < 2:
        raise ParameterError(f"base must be >= 2, got {base}")
    if k < 0:
        raise ParameterError("k must be non-negative")
    return float(_radical_inverse_array(np.array([k], dtype=np.int64), base, perm)[0])


def _radical_inverse_array(ks: np.ndarray, base: int, perm=None) -> np.ndarray:
    ks = np.asarray(ks, dtype=np.int64).copy()
    if perm is None:
        n_digits = 1
        top = int(ks.max()) if ks.size else 0
        while base**n_digits <= top:
            n_digits += 1
    else:
        n_digits = _n_digits(base)
        perm = np.asarray(perm, dtype=np.float64)
    digits = np.empty((n_digits, ks.size), dtype=np.int64)
    for j in range(n_digits):
        digits[j] = ks % base
        ks //= base
    value = np.zeros(ks.size)
    for j in range(n_digits - 1, -1, -1):
        d = digits[j] if perm is None else perm[digits[j]]
        value = (d + value) / base
    return np.minimum(value, _BELOW_ONE)


def scramble_permutations(bases: Sequence[int], seed: int) -> dict[int, np.ndarray]:
    """One seeded Fisher-Yates permutation of ``{0..b-1}`` per base."""
    return {b: rng_for(seed, "scramble", b).permutation(b) for b in bases}


def shift_vector(d: int, seed: int) -> np.ndarray:
    return rng_for(seed, "shift").random(d)


def apply_shift(points: np.ndarray, a: np.ndarray) -> np.ndarray:
    shifted = np.mod(np.asarray(points, dtype=float) + a, 1.0)
    return np.minimum(shifted, _BELOW_ONE)


def _empty(d: int) -> np.ndarray:
    return np.zeros((0, d))


def _check_n(n: int) -> int:
    n = int(n)
    if n < 0:
        raise ParameterError("point count must be non-negative")
    return n


def _radical_columns(ks: np.ndarray, bases, perms) -> np.ndarray:
    cols = [_radical_inverse_array(ks, b, None if perms is None else perms[b]) for b in bases]
    return np.column_stack(cols) if cols else np.zeros((ks.size, 0))


def halton(spec: SamplerSpec, n: int) -> np.ndarray:
    """Halton points ``k = 1..n`` with scrambling/shift per the algorithm."""
    n = _check_n(n)
    if n == 0:
        return _empty(spec.dimension)
    bases = spec.resolved_bases()
    start = 0
    if spec.random_start:
        start = int(rng_for(spec.seed, "start").integers(0, RANDOM_START_RANGE))
    ks = np.arange(start + 1, start + n + 1, dtype=np.int64)
    perms = scramble_permutations(bases, spec.seed) if spec.algorithm in _SCRAMBLED else None
    points = _radical_columns(ks, bases, perms)
    if spec.algorithm in _SHIFTED:
        points = apply_shift(points, shift_vector(spec.dimension, spec.seed))
    return points


def hammersley(spec: SamplerSpec, n: int, count: Optional[int] = None) -> np.ndarray:
    """Hammersley set of size ``n``; only the first ``count`` points are returned.

    The first coordinate ``(k - 1/2)/n`` depends on ``n``, so the set is not
    extensible: asking for more than ``n`` points is a usage error.
    """
    n = _check_n(n)
    count = n if count is None else int(count)
    if count > n:
        raise UsageError(f"hammersley set was configured for {n} points; {count} requested")
    if count == 0:
        return _empty(spec.dimension)
    bases = spec.resolved_bases()
    ks = np.arange(1, count + 1, dtype=np.int64)
    perms = scramble_permutations(bases, spec.seed) if spec.algorithm in _SCRAMBLED else None
    first = (ks - 0.5) / n
    points = np.column_stack([first, _radical_columns(ks, bases, perms)])
    if spec.algorithm in _SHIFTED:
        points = apply_shift(points, shift_vector(spec.dimension, spec.seed))
    return points


def _sobol_directions(d: int) -> np.ndarray:
    v = np.zeros((d, _SOBOL_BITS), dtype=np.uint64)
    for j in range(d):
        m = [0] * (_SOBOL_BITS + 1)
        if j == 0:
            for i in range(1, _SOBOL_BITS + 1):
                m[i] = 1
        else:
            poly = _sobol_table.POLY[j]
            s = poly.bit_length() - 1
            a = (poly >> 1) & ((1 << (s - 1)) - 1)
            for i, mi in enumerate(_sobol_table.M_INIT[j], start=1):
                m[i] = mi
            for i in range(s + 1, _SOBOL_BITS + 1):
                mi = m[i - s] ^ (m[i - s] << s)
                for k in range(1, s):
                    mi ^= ((a >> (s - 1 - k)) & 1) * (m[i - k] << k)
                m[i] = mi
        for i in range(1, _SOBOL_BITS + 1):
            v[j, i - 1] = m[i] << (_SOBOL_BITS - i)
    return v


def sobol(spec: SamplerSpec, n: int) -> np.ndarray:
    """Sobol points in Gray-code order; index 0 (the origin) skipped by default."""
    n = _check_n(n)
    d = spec.dimension
    if d > SOBOL_MAX_DIM:
        raise ParameterError(f"sobol supports at most {SOBOL_MAX_DIM} dimensions, got {d}")
    if n == 0:
        return _empty(d)
    offset = 1 if spec.skip_origin else 0
    idx = np.arange(offset, offset + n, dtype=np.uint64)
    if int(idx[-1]) >= 1 << _SOBOL_BITS:
        raise ParameterError(f"sobol is limited to 2^{_SOBOL_BITS} points")
    gray = idx ^ (idx >> np.uint64(1))
    v = _sobol_directions(d)
    x = np.zeros((n, d), dtype=np.uint64)
    for b in range(_SOBOL_BITS):
        on = ((gray >> np.uint64(b)) & np.uint64(1)).astype(bool)
        if not on.any():
            continue
        x[on] ^= v[:, b]
    return x.astype(np.float64) / float(1 << _SOBOL_BITS)


def lhs(spec: SamplerSpec, n: int) -> np.ndarray:
    """Latin hypercube: one point per axis cell, uniform jitter inside it."""
    n = _check_n(n)
    d = spec.dimension
    if n == 0:
        return _empty(d)
    perm_rng = rng_for(spec.seed, "lhs-perm")
    cells = np.column_stack([perm_rng.permutation(n) for _ in range(d)])
    jitter = rng_for(spec.seed, "lhs-jitter").random((n, d))
    return np.minimum((cells + jitter) / n, _BELOW_ONE)


def _grid_side(n: int, d: int) -> int:
    k = max(int(round(n ** (1.0 / d))), 0)
    while k**d > n:
        k -= 1
    while (k + 1) ** d <= n:
        k += 1
    return k


def grid(spec: SamplerSpec, n: int) -> np.ndarray:
    """Cell-centre grid with ``k = floor(n^(1/d))`` values per axis.

    The ``n - k^d`` leftover slots are filled with uniform points.
    """
    n = _check_n(n)
    d = spec.dimension
    k = _grid_side(n, d)
    if k > 0:
        axis = (2.0 * np.arange(1, k + 1) - 1.0) / (2.0 * k)
        mesh = np.meshgrid(*([axis] * d), indexing="ij")
        points = np.column_stack([m.ravel() for m in mesh])
    else:
        points = _empty(d)
    if spec.algorithm is Algorithm.SHIFTED_GRID:
        points = apply_shift(points, shift_vector(d, spec.seed))
    rest = n - points.shape[0]
    if rest:
        points = np.vstack([points, rng_for(spec.seed, "grid-fill").random((rest, d))])
    return points


def random(spec: SamplerSpec, n: int) -> np.ndarray:
    n = _check_n(n)
    return rng_for(spec.seed, "random").random((n, spec.dimension))


def semi_qr(spec: SamplerSpec, n: int) -> np.ndarray:
    """First ``ceil(n/2)`` points from S-SH, the rest i.i.d. uniform."""
    n = _check_n(n)
    half = (n + 1) // 2
    qr = hammersley(spec.replace(algorithm=Algorithm.S_SH, mirror3d=False, bases=None), half)
    rest = rng_for(spec.seed, "semiqr-random").random((n - half, spec.dimension))
    return np.vstack([qr, rest])


def naive_doe(spec: SamplerSpec, n: int, probes: Optional[int] = None) -> np.ndarray:
    """Best of ``candidate_count`` uniform sets, judged by estimated dispersion."""
    from qrsearch.quality import DEFAULT_DISPERSION_PROBES, dispersion_estimate

    n = _check_n(n)
    if n == 0:
        return _empty(spec.dimension)
    probes = DEFAULT_DISPERSION_PROBES if probes is None else probes
    probe_seed = derive_seed(spec.seed, "naive-doe-probes")
    best, best_disp = None, math.inf
    for i in range(spec.candidate_count):
        if i == 0:
            cand = random(spec, n)
        else:
            cand = rng_for(spec.seed, "naive-doe", i).random((n, spec.dimension))
        disp = dispersion_estimate(cand, probes=probes, seed=probe_seed)
        if disp < best_disp:
            best, best_disp = cand, disp
    return best


def mirror3d(points: np.ndarray) -> np.ndarray:
    """Orbit of every point under ``x_j -> 1 - x_j`` on the first ``min(d, 3)`` axes."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    d = points.shape[1]
    axes = min(d, 3)
    out = []
    for p in points:
        for flips in itertools.product((False, True), repeat=axes):
            q = p.copy()
            for j, flip in enumerate(flips):
                if flip:
                    q[j] = 1.0 - q[j]
            out.append(q)
    if not out:
        return _empty(d)
    return np.minimum(np.array(out), _BELOW_ONE)


def _generate_plain(spec: SamplerSpec, n: int) -> np.ndarray:
    alg = spec.algorithm
    if alg in _HALTON_FAMILY:
        return halton(spec, n)
    if alg in _HAMMERSLEY_FAMILY:
        return hammersley(spec, n)
    if alg is Algorithm.SOBOL:
        return sobol(spec, n)
    if alg is Algorithm.LHS:
        return lhs(spec, n)
    if alg in (Algorithm.GRID, Algorithm.SHIFTED_GRID):
        return grid(spec, n)
    if alg is Algorithm.RANDOM:
        return random(spec, n)
    if alg is Algorithm.SEMI_QR:
        return semi_qr(spec, n)
    if alg is Algorithm.NAIVE_DOE:
        return naive_doe(spec, n)
    raise ParameterError(f"unhandled algorithm {alg}")  # pragma: no cover


def generate(spec: SamplerSpec, n: int) -> np.ndarray:
    """Generate ``n`` points for any algorithm, applying 3-D mirroring if requested.

    With mirroring, ``n // 2^min(d,3)`` source points are mirrored and the
    remaining slots are filled with uniform points.
    """
    n = _check_n(n)
    if not spec.mirror3d:
        return _generate_plain(spec, n)
    orbit = 2 ** min(spec.dimension, 3)
    sources = n // orbit
    mirrored = mirror3d(_generate_plain(spec, sources)) if sources else _empty(spec.dimension)
    fill = rng_for(spec.seed, "mirror-fill").random((n - mirrored.shape[0], spec.dimension))
    return np.vstack([mirrored, fill])

