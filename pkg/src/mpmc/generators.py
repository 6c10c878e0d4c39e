"""Classical low-discrepancy constructions and randomized variants.

Every generator is a deterministic function of its arguments (and seed),
returning a :class:`~mpmc.points.PointSet`. Randomness is drawn from
counter-based Philox streams derived with ``numpy.random.SeedSequence``,
so independent sub-streams are reproducible and safe to generate
concurrently.

Index conventions: the radical-inverse family (van der Corput, Halton)
defaults to ``start_index=1`` so the first point is not the origin, while
the digital base-2 sequence, Hammersley, and lattice constructions start
at 0. Both are overridable; the benchmark configs pin ``start_index=0``
for Halton, which reproduces the published two-dimensional reference
values. The base-2 digital sequence uses Gray-code ordering (successive
indices differ in one direction number), the convention of the common
scientific-computing implementations.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _sobol_data
from .errors import (
    DimensionMismatch,
    InvalidBase,
    InvalidConfig,
    InvalidShiftBound,
    UnsupportedDimension,
)
from .points import PointSet

__all__ = [
    "GeneratorSpec",
    "derive_rng",
    "fibonacci_set",
    "generate",
    "halton",
    "hammersley",
    "korobov",
    "lifted_sobol",
    "random_shift",
    "rank1_lattice",
    "sobol",
    "uniform_random",
    "van_der_corput",
]

# First 64 primes: Halton bases for dimensions up to 64.
PRIMES = (
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
    59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131,
    137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223,
    227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281, 283, 293, 307, 311,
)

MAX_SOBOL_DIM = len(_sobol_data.POLY) + 1  # 64
_SOBOL_BITS = 53  # full float64 mantissa; x = integer / 2**53 is exact


def derive_rng(seed: int, *path) -> np.random.Generator:
    """Philox stream for (seed, path); distinct paths give independent streams.

    Path strings are folded with a fixed digest (never the salted builtin
    hash), so streams are stable across processes and platforms.
    """
    key = []
    for p in path:
        if isinstance(p, str):
            digest = hashlib.blake2s(p.encode("utf-8"), digest_size=4).digest()
            key.append(int.from_bytes(digest, "little"))
        else:
            key.append(int(p) & 0xFFFFFFFF)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(key))
    return np.random.Generator(np.random.Philox(ss))


def _frac(x: np.ndarray) -> np.ndarray:
    """Fractional part with 1.0 clamped down to 0.0 (floating-point guard)."""
    out = x - np.floor(x)
    out[out >= 1.0] = 0.0
    return out


def _radical_inverse(indices: np.ndarray, base: int) -> np.ndarray:
    """Digit-reversal of each index: one exact division per value."""
    out = np.empty(len(indices), dtype=np.float64)
    for pos, k in enumerate(indices):
        k = int(k)
        num, denom = 0, 1
        while k > 0:
            k, digit = divmod(k, base)
            num = num * base + digit
            denom *= base
        out[pos] = num / denom
    return out


def van_der_corput(n: int, base: int = 2, start_index: int = 1) -> PointSet:
    """Radical-inverse sequence in the given base, as a 1-D point set."""
    if base < 2:
        raise InvalidBase(f"base must be >= 2, got {base}")
    _check_count(n)
    if start_index < 0:
        raise InvalidConfig(f"start_index must be >= 0, got {start_index}")
    idx = np.arange(start_index, start_index + n)
    return PointSet(_radical_inverse(idx, base)[:, None])


def halton(
    n: int,
    d: int,
    start_index: int = 1,
    bases: Optional[Sequence[int]] = None,
) -> PointSet:
    """Concatenated radical inverses, one prime base per coordinate."""
    _check_count(n)
    if bases is None:
        if d > len(PRIMES):
            raise UnsupportedDimension(f"halton supports d <= {len(PRIMES)}, got {d}")
        bases = PRIMES[:d]
    else:
        bases = tuple(int(b) for b in bases)
        if len(bases) != d:
            raise DimensionMismatch(f"{len(bases)} bases for dimension {d}")
        if any(b < 2 for b in bases):
            raise InvalidBase(f"bases must be >= 2, got {bases}")
        if len(set(bases)) != len(bases):
            raise InvalidBase(f"bases must be pairwise distinct, got {bases}")
    if start_index < 0:
        raise InvalidConfig(f"start_index must be >= 0, got {start_index}")
    idx = np.arange(start_index, start_index + n)
    cols = [_radical_inverse(idx, b) for b in bases]
    return PointSet(np.column_stack(cols))


_direction_cache: dict[int, np.ndarray] = {}


def _direction_numbers(d: int) -> np.ndarray:
    """(d, BITS+1) int64 table; column k holds m_k << (BITS - k)."""
    if d not in _direction_cache:
        V = np.zeros((d, _SOBOL_BITS + 1), dtype=np.int64)
        for k in range(1, _SOBOL_BITS + 1):
            V[0, k] = 1 << (_SOBOL_BITS - k)
        for j in range(1, d):
            poly = _sobol_data.POLY[j - 1]
            s = poly.bit_length() - 1
            coeffs = [(poly >> (s - 1 - t)) & 1 for t in range(s - 1)]
            m = [0] * (_SOBOL_BITS + 1)
            for k in range(1, min(s, _SOBOL_BITS) + 1):
                m[k] = _sobol_data.M_INIT[j - 1][k - 1]
            for k in range(s + 1, _SOBOL_BITS + 1):
                val = m[k - s] ^ (m[k - s] << s)
                for t in range(1, s):
                    if coeffs[t - 1]:
                        val ^= m[k - t] << t
                m[k] = val
            for k in range(1, _SOBOL_BITS + 1):
                V[j, k] = m[k] << (_SOBOL_BITS - k)
        _direction_cache[d] = V
    return _direction_cache[d]


def sobol(n: int, d: int, start_index: int = 0) -> PointSet:
    """Base-2 digital sequence with embedded direction numbers, Gray-code order."""
    _check_count(n)
    if d > MAX_SOBOL_DIM:
        raise UnsupportedDimension(
            f"embedded direction numbers cover d <= {MAX_SOBOL_DIM}, got {d}"
        )
    if start_index < 0:
        raise InvalidConfig(f"start_index must be >= 0, got {start_index}")
    last = start_index + n - 1
    if last >= (1 << _SOBOL_BITS):
        raise InvalidConfig(f"index {last} exceeds the {_SOBOL_BITS}-bit resolution")
    V = _direction_numbers(d)
    idx = np.arange(start_index, start_index + n, dtype=np.int64)
    code = idx ^ (idx >> 1)
    acc = np.zeros((n, d), dtype=np.int64)
    nbits = int(code.max()).bit_length() if n else 0
    for k in range(nbits):
        hit = ((code >> k) & 1).astype(bool)
        acc[hit] ^= V[:, k + 1]
    return PointSet(acc / float(1 << _SOBOL_BITS))


def fibonacci_set(n: int) -> PointSet:
    """Two-dimensional set (i/n, frac(i*phi)) with phi the golden ratio."""
    _check_count(n)
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    i = np.arange(n, dtype=np.float64)
    return PointSet(np.column_stack([i / n, _frac(i * phi)]))


def korobov(n: int, d: int, a: int) -> PointSet:
    """Rank-1 lattice with generating vector (1, a, a^2, ...), exact modular arithmetic."""
    _check_count(n)
    if not 1 <= a < n:
        raise InvalidConfig(f"multiplier a must satisfy 1 <= a < n, got a={a}, n={n}")
    z = [pow(a, k, n) for k in range(d)]
    return rank1_lattice(n, z)


def rank1_lattice(n: int, z: Sequence[int], dim: Optional[int] = None) -> PointSet:
    """Lattice points frac(i * z / n); coordinates are exact rationals i*z_k mod n over n."""
    _check_count(n)
    z = np.asarray([int(v) for v in z], dtype=np.int64)
    if dim is not None and len(z) != dim:
        raise DimensionMismatch(f"generating vector has length {len(z)}, expected {dim}")
    i = np.arange(n, dtype=np.int64)
    coords = (i[:, None] * z[None, :]) % n
    return PointSet(coords / float(n))


def hammersley(n: int, d: int) -> PointSet:
    """First coordinate i/n, remaining coordinates radical inverses in the first d-1 primes."""
    _check_count(n)
    if d < 1:
        raise UnsupportedDimension(f"d must be >= 1, got {d}")
    if d - 1 > len(PRIMES):
        raise UnsupportedDimension(f"hammersley supports d <= {len(PRIMES) + 1}, got {d}")
    i = np.arange(n, dtype=np.float64)
    cols = [i / n]
    idx = np.arange(n)
    for k in range(d - 1):
        cols.append(_radical_inverse(idx, PRIMES[k]))
    return PointSet(np.column_stack(cols))


def lifted_sobol(n: int) -> PointSet:
    """Two-dimensional set (s_i, i/n): 1-D digital sequence first, then the uniform grid."""
    _check_count(n)
    s1 = sobol(n, 1, start_index=0).coords[:, 0]
    i = np.arange(n, dtype=np.float64)
    return PointSet(np.column_stack([s1, i / n]))


def uniform_random(n: int, d: int, seed: int) -> PointSet:
    """IID uniform points on [0,1)^d from a Philox stream."""
    _check_count(n)
    rng = derive_rng(seed, "uniform")
    return PointSet(rng.random((n, d)))


def random_shift(points: PointSet, seed: int, bound: float = 1.0) -> PointSet:
    """Add one shared uniform vector from [0, bound]^d to every point, modulo 1."""
    if not 0.0 < bound <= 1.0:
        raise InvalidShiftBound(f"shift bound must be in (0, 1], got {bound}")
    rng = derive_rng(seed, "shift")
    xi = bound * rng.random(points.dim)
    return PointSet(_frac(points.coords + xi))


def _check_count(n: int) -> None:
    if n < 1:
        raise InvalidConfig(f"point count must be >= 1, got {n}")


# --- serializable generator specification ---

_KINDS = (
    "van_der_corput",
    "halton",
    "sobol",
    "hammersley",
    "lifted_sobol",
    "fibonacci",
    "korobov",
    "rank1_lattice",
    "uniform_random",
    "shifted",
)


@dataclass
class GeneratorSpec:
    """Kind plus kind-specific parameters; round-trips through JSON."""

    kind: str
    n: int = 0
    d: int = 0
    seed: int = 0
    base: Optional[Sequence[int]] = None
    a: Optional[int] = None
    z: Optional[Sequence[int]] = None
    b: Optional[float] = None
    inner: Optional["GeneratorSpec"] = None
    start_index: Optional[int] = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "d": self.d, "seed": self.seed}
        if self.base is not None:
            out["base"] = list(self.base) if not isinstance(self.base, int) else self.base
        if self.a is not None:
            out["a"] = self.a
        if self.z is not None:
            out["z"] = list(self.z)
        if self.b is not None:
            out["b"] = self.b
        if self.inner is not None:
            out["inner"] = self.inner.to_json()
        if self.start_index is not None:
            out["start_index"] = self.start_index
        return out

    @classmethod
    def from_json(cls, obj) -> "GeneratorSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict):
            raise InvalidConfig(f"generator spec must be a JSON object, got {type(obj).__name__}")
        kind = obj.get("kind")
        if kind not in _KINDS:
            raise InvalidConfig(f"unknown generator kind {kind!r}; expected one of {_KINDS}")
        inner = obj.get("inner")
        return cls(
            kind=kind,
            n=int(obj.get("n", 0)),
            d=int(obj.get("d", 0)),
            seed=int(obj.get("seed", 0)),
            base=obj.get("base"),
            a=obj.get("a"),
            z=obj.get("z"),
            b=obj.get("b"),
            inner=cls.from_json(inner) if inner is not None else None,
            start_index=obj.get("start_index"),
        )


def generate(spec: GeneratorSpec) -> PointSet:
    """Produce the point set described by a GeneratorSpec."""
    kind = spec.kind
    if kind == "van_der_corput":
        base = spec.base if isinstance(spec.base, int) else (spec.base or [2])[0]
        return van_der_corput(spec.n, int(base), _start(spec, 1))
    if kind == "halton":
        bases = None
        if spec.base is not None:
            bases = [spec.base] if isinstance(spec.base, int) else list(spec.base)
        return halton(spec.n, spec.d, _start(spec, 1), bases)
    if kind == "sobol":
        return sobol(spec.n, spec.d, _start(spec, 0))
    if kind == "hammersley":
        return hammersley(spec.n, spec.d)
    if kind == "lifted_sobol":
        return lifted_sobol(spec.n)
    if kind == "fibonacci":
        return fibonacci_set(spec.n)
    if kind == "korobov":
        if spec.a is None:
            raise InvalidConfig("korobov requires the multiplier 'a'")
        return korobov(spec.n, spec.d, int(spec.a))
    if kind == "rank1_lattice":
        if spec.z is None:
            raise InvalidConfig("rank1_lattice requires the generating vector 'z'")
        return rank1_lattice(spec.n, spec.z, spec.d if spec.d else None)
    if kind == "uniform_random":
        return uniform_random(spec.n, spec.d, spec.seed)
    if kind == "shifted":
        if spec.inner is None:
            raise InvalidConfig("shifted requires an 'inner' generator spec")
        if spec.b is None:
            raise InvalidConfig("shifted requires the bound 'b'")
        return random_shift(generate(spec.inner), spec.seed, float(spec.b))
    raise InvalidConfig(f"unknown generator kind {kind!r}")


def _start(spec: GeneratorSpec, default: int) -> int:
    return default if spec.start_index is None else int(spec.start_index)
