"""Uniformity measures: Warnock L2, exact star discrepancy, local fields,
and projection-averaged objectives.

Hot kernels live in a compiled extension when available; a pure-NumPy
backend with identical semantics is selected at import time otherwise.
Set ``MPMC_BACKEND=fallback`` (or ``compiled``) to force the choice.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import ComplexityBudgetExceeded, EmptyPointSet, InvalidConfig, UnsupportedDimension
from ..points import PointSet, ProjectionIndexSet, as_index_set
from . import _reference

__all__ = [
    "BACKEND",
    "DiscrepancyReport",
    "ProjectionSpec",
    "hickernell_from_subsets",
    "hickernell_p2",
    "local_discrepancy_field",
    "resolve_subsets",
    "star_discrepancy",
    "warnock_l2_squared",
    "warnock_l2_squared_grad",
]

_requested = os.environ.get("MPMC_BACKEND", "")
if _requested == "fallback":
    _impl = _reference
    BACKEND = "fallback"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            warnings.warn("compiled kernels unavailable, using the NumPy fallback")
        _impl = _reference
        BACKEND = "fallback"


def _coords(points) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.coords
    arr = np.ascontiguousarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise EmptyPointSet(f"expected a non-empty (N, d) array, got shape {arr.shape}")
    return arr


@dataclass
class DiscrepancyReport:
    """A measured value, with the witness box corner for the star measure."""

    measure: str
    value: float
    witness: Optional[tuple[float, ...]] = None
    subsets_used: Optional[list[tuple[int, ...]]] = None

    def to_json(self) -> dict:
        return {
            "measure": self.measure,
            "value": self.value,
            "witness": list(self.witness) if self.witness is not None else None,
            "subsets": [list(s) for s in self.subsets_used] if self.subsets_used is not None else None,
        }


def warnock_l2_squared(points) -> float:
    """Squared L2 discrepancy via the exact closed-form point/pair sums."""
    return float(_impl.warnock_value(_coords(points)))


def warnock_l2_squared_grad(points):
    """(value, gradient) of the squared L2 discrepancy w.r.t. each coordinate."""
    val, grad = _impl.warnock_value_grad(_coords(points))
    return float(val), grad


def star_discrepancy(points, cell_budget: int = 10**9) -> DiscrepancyReport:
    """Exact star discrepancy over the critical grid, with a witness corner.

    Enumerates every grid corner built from the point coordinates and 1,
    taking the larger of the closed-count overshoot and the open-count
    undershoot at each corner. Dimensions above 4 must fit ``cell_budget``
    candidate cells.
    """
    x = _coords(points)
    n, d = x.shape
    if d > 4:
        cells = 1
        for k in range(d):
            cells *= len(np.unique(x[:, k])) + 1
            if cells > cell_budget:
                raise ComplexityBudgetExceeded(
                    f"about {cells:.3g}+ candidate cells exceed the budget {cell_budget:.3g}"
                )
    if d == 1:
        value, witness = _star_1d(x[:, 0])
    elif d == 2:
        value, witness = _impl.star_2d(x)
    else:
        value, witness = _impl.star_nd(x)
    return DiscrepancyReport("star", float(value), witness=tuple(float(w) for w in witness))


def _star_1d(xs: np.ndarray):
    n = len(xs)
    t = np.unique(np.concatenate([xs, [1.0]]))
    s = np.sort(xs)
    closed = np.searchsorted(s, t, side="right")
    opened = np.searchsorted(s, t, side="left")
    over = closed / n - t
    under = t - opened / n
    cand = np.maximum(over, under)
    best = int(np.argmax(cand))
    return float(cand[best]), (t[best],)


def evaluate_star_at(points, corner) -> float:
    """Re-evaluate both star candidates at one corner (witness check)."""
    x = _coords(points)
    corner = np.asarray(corner, dtype=np.float64)
    closed = int(np.all(x <= corner[None, :], axis=1).sum())
    opened = int(np.all(x < corner[None, :], axis=1).sum())
    vol = float(np.prod(corner))
    n = x.shape[0]
    return max(closed / n - vol, vol - opened / n)


def local_discrepancy_field(points, resolution: int) -> np.ndarray:
    """Signed local discrepancy count([0,x))/N - vol on a regular 2-D grid.

    Entry (a, b) is evaluated at x = ((a+1)/res, (b+1)/res); boxes are
    half open, so points on the upper box faces do not count.
    """
    x = _coords(points)
    n, d = x.shape
    if d != 2:
        raise UnsupportedDimension(f"local field is two-dimensional only, got d={d}")
    if resolution < 1:
        raise InvalidConfig(f"resolution must be >= 1, got {resolution}")
    ticks = np.arange(1, resolution + 1) / resolution
    ix = np.searchsorted(ticks, x[:, 0], side="right")
    iy = np.searchsorted(ticks, x[:, 1], side="right")
    hist = np.zeros((resolution + 1, resolution + 1))
    np.add.at(hist, (ix, iy), 1.0)
    counts = hist.cumsum(axis=0).cumsum(axis=1)[:resolution, :resolution]
    vol = ticks[:, None] * ticks[None, :]
    return counts / n - vol


# --- projection-averaged measures ---


@dataclass
class ProjectionSpec:
    """How to pick coordinate subsets for the projection-averaged measure."""

    mode: str = "exhaustive"
    k_samples: int = 1
    order_weights: Optional[Sequence[float]] = None
    explicit_sets: Optional[list] = None
    seed: int = 0

    MAX_EXHAUSTIVE_DIM = 20

    def validate(self, dim: int) -> None:
        if self.mode not in ("exhaustive", "random", "explicit"):
            raise InvalidConfig(f"unknown projection mode {self.mode!r}")
        if self.mode == "exhaustive" and dim > self.MAX_EXHAUSTIVE_DIM:
            raise ComplexityBudgetExceeded(
                f"exhaustive projections need 2^{dim}-1 subsets; limit is d <= {self.MAX_EXHAUSTIVE_DIM}"
            )
        if self.mode == "random":
            if self.k_samples < 1:
                raise InvalidConfig(f"k_samples must be >= 1, got {self.k_samples}")
            if self.order_weights is not None:
                w = np.asarray(self.order_weights, dtype=np.float64)
                if len(w) != dim:
                    raise InvalidConfig(f"order_weights has length {len(w)}, expected {dim}")
                if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                    raise InvalidConfig("order_weights must be non-negative and sum to 1")
        if self.mode == "explicit" and not self.explicit_sets:
            raise InvalidConfig("explicit mode requires explicit_sets")

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "k_samples": self.k_samples,
            "order_weights": list(self.order_weights) if self.order_weights is not None else None,
            "explicit_sets": [list(s) for s in self.explicit_sets] if self.explicit_sets else None,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj) -> "ProjectionSpec":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(
            mode=obj.get("mode", "exhaustive"),
            k_samples=int(obj.get("k_samples", 1)),
            order_weights=obj.get("order_weights"),
            explicit_sets=obj.get("explicit_sets"),
            seed=int(obj.get("seed", 0)),
        )


def all_subsets(dim: int, orders: Optional[Sequence[int]] = None) -> list[tuple[int, ...]]:
    """All non-empty index subsets, optionally restricted to the given orders."""
    orders = range(1, dim + 1) if orders is None else sorted(set(orders))
    out = []
    for r in orders:
        if 1 <= r <= dim:
            out.extend(itertools.combinations(range(dim), r))
    return out


def resolve_subsets(
    spec: ProjectionSpec, dim: int, rng: Optional[np.random.Generator] = None
) -> list[tuple[int, ...]]:
    """Concrete list of index subsets for a spec (duplicates allowed in random mode)."""
    spec.validate(dim)
    if spec.mode == "exhaustive":
        return all_subsets(dim)
    if spec.mode == "explicit":
        out = []
        for s in spec.explicit_sets:
            idx = as_index_set(s)
            idx.validate_against(dim)
            out.append(idx.dims)
        return out
    if rng is None:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed)))
    if spec.order_weights is None:
        weights = np.full(dim, 1.0 / dim)
    else:
        weights = np.asarray(spec.order_weights, dtype=np.float64)
        weights = weights / weights.sum()
    out = []
    for _ in range(spec.k_samples):
        order = int(rng.choice(dim, p=weights)) + 1
        dims = np.sort(rng.choice(dim, size=order, replace=False))
        out.append(tuple(int(v) for v in dims))
    return out


def hickernell_from_subsets(points, subsets: Sequence[Sequence[int]]) -> float:
    """sqrt of the summed squared L2 discrepancies of the named projections."""
    x = _coords(points)
    total = math.fsum(
        float(_impl.warnock_value(np.ascontiguousarray(x[:, list(s)]))) for s in subsets
    )
    return math.sqrt(total)


def hickernell_p2(points, spec: ProjectionSpec, rng: Optional[np.random.Generator] = None) -> float:
    """Projection-averaged L2 measure for the requested subset scheme."""
    x = _coords(points)
    subsets = resolve_subsets(spec, x.shape[1], rng)
    return hickernell_from_subsets(x, subsets)
