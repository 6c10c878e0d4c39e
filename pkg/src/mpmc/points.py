"""Point sets in the unit cube, coordinate projections, and file IO.

A :class:`PointSet` is an immutable (N, d) array of float64 coordinates,
each in the closed interval [0, 1]. It is the common currency passed
between generators, discrepancy measures, the learned model, and the
pricing harness. Files are headerless CSV, one point per row, written
with 17 significant digits so a write/read round trip is bit exact.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyPointSet, FormatError, InvalidProjection

__all__ = ["PointSet", "ProjectionIndexSet", "project", "read_points", "write_points"]


@dataclass(frozen=True)
class PointSet:
    """N points in [0,1]^d, row i holding point i. Immutable once built."""

    coords: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.coords, dtype=np.float64)
        if arr.ndim != 2:
            raise DomainError(f"coordinate array must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise EmptyPointSet(f"need at least one point and one dimension, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("coordinates must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            bad = arr[(arr < 0.0) | (arr > 1.0)].flat[0]
            raise DomainError(f"coordinate {bad!r} outside [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def __repr__(self):
        return f"PointSet(n_points={self.n_points}, dim={self.dim})"


@dataclass(frozen=True)
class ProjectionIndexSet:
    """A non-empty, strictly increasing set of coordinate indices."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(k) for k in self.dims)
        if not dims:
            raise InvalidProjection("projection index set is empty")
        if any(k < 0 for k in dims):
            raise InvalidProjection(f"negative coordinate index in {dims}")
        if any(a >= b for a, b in zip(dims, dims[1:])):
            raise InvalidProjection(f"indices must be strictly increasing, got {dims}")
        object.__setattr__(self, "dims", dims)

    def __len__(self):
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def validate_against(self, dim: int) -> None:
        if self.dims[-1] >= dim:
            raise InvalidProjection(f"index {self.dims[-1]} out of range for dimension {dim}")


def as_index_set(subset) -> ProjectionIndexSet:
    """Coerce an iterable of indices (or an index set) to ProjectionIndexSet."""
    if isinstance(subset, ProjectionIndexSet):
        return subset
    return ProjectionIndexSet(tuple(subset))


def project(points: PointSet, subset) -> PointSet:
    """Extract the named coordinate columns, preserving point order."""
    idx = as_index_set(subset)
    idx.validate_against(points.dim)
    return PointSet(points.coords[:, list(idx.dims)].copy())


def write_points(points: PointSet, path) -> None:
    """Write CSV with 17 significant digits (bit-exact round trip), atomically."""
    path = os.fspath(path)
    tmp_fd, tmp_path = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(tmp_fd, "w", encoding="utf-8", newline="\n") as fh:
            for row in points.coords:
                fh.write(",".join(format(c, ".17g") for c in row))
                fh.write("\n")
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def read_points(path, dim: int | None = None) -> PointSet:
    """Read a headerless CSV point file.

    Shape is inferred from the rows; pass ``dim`` to require a width.
    """
    rows = []
    width = dim
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise FormatError(
                    f"{path}: row {lineno} has {len(fields)} fields, expected {width}"
                )
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise FormatError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: no points")
    return PointSet(np.array(rows, dtype=np.float64))
