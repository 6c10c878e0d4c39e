"""Reverse-mode automatic differentiation over dense float64 tensors.

A :class:`Tape` records each primitive as it executes; :meth:`Tape.backward`
replays the records in exact reverse order, accumulating gradients into
every tensor that influenced the scalar loss. The primitive set is sized
for the message-passing model and its discrepancy losses: affine algebra,
relu/sigmoid, concat, row gather/scatter, and the two loss nodes.

One tape is single threaded and single shot (rebuilt every step);
independent tapes share no state and may run concurrently.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from . import discrepancy as _disc
from .discrepancy import ProjectionSpec, resolve_subsets
from .errors import NotAScalar, ShapeError, TapeConsumed

__all__ = ["Tensor", "Tape"]


class Tensor:
    """Dense float64 array with an optional gradient accumulator."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    """Accumulate an owned gradient array (caller-allocated, never a view)."""
    if t.grad is None:
        t.grad = g
    else:
        t.grad += g


def _accumulate_view(t: Tensor, g: np.ndarray) -> None:
    """Accumulate a gradient that aliases another array (copied on first use)."""
    if t.grad is None:
        t.grad = g.copy()
    else:
        t.grad += g


def _scatter_add_rows(acc: np.ndarray, idx: np.ndarray, g: np.ndarray) -> None:
    """acc[idx] += g with duplicate indices, via sorted-run reduction."""
    if idx.size == 0:
        return
    order = np.argsort(idx, kind="stable")
    sidx = idx[order]
    starts = np.flatnonzero(np.diff(sidx, prepend=-1))
    acc[sidx[starts]] += np.add.reduceat(g[order], starts, axis=0)


class Tape:
    """Linear record of primitives; backward() may be called exactly once."""

    def __init__(self):
        self._ops: list[tuple[Tensor, callable]] = []
        self._produced: set[int] = set()
        self._consumed = False

    def _record(self, out: Tensor, backward) -> Tensor:
        self._ops.append((out, backward))
        self._produced.add(id(out))
        return out

    # --- primitives ---

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
            raise ShapeError(f"matmul shapes {a.data.shape} x {b.data.shape}")
        out = Tensor(a.data @ b.data, a.requires_grad or b.requires_grad)

        def backward(g):
            _accumulate(a, g @ b.data.T)
            _accumulate(b, a.data.T @ g)

        return self._record(out, backward)

    def add_bias(self, x: Tensor, b: Tensor) -> Tensor:
        if b.data.ndim != 1 or x.data.ndim != 2 or x.data.shape[1] != b.data.shape[0]:
            raise ShapeError(f"add_bias shapes {x.data.shape} + {b.data.shape}")
        out = Tensor(x.data + b.data, x.requires_grad or b.requires_grad)

        def backward(g):
            _accumulate_view(x, g)
            _accumulate(b, g.sum(axis=0))

        return self._record(out, backward)

    def relu(self, x: Tensor) -> Tensor:
        out = Tensor(np.maximum(x.data, 0.0), x.requires_grad)
        mask = x.data > 0.0  # subgradient 0 at the kink

        def backward(g):
            _accumulate(x, g * mask)

        return self._record(out, backward)

    def sigmoid(self, x: Tensor) -> Tensor:
        s = np.empty_like(x.data)
        pos = x.data >= 0
        s[pos] = 1.0 / (1.0 + np.exp(-x.data[pos]))
        ex = np.exp(x.data[~pos])
        s[~pos] = ex / (1.0 + ex)
        out = Tensor(s, x.requires_grad)

        def backward(g):
            _accumulate(x, g * s * (1.0 - s))

        return self._record(out, backward)

    def concat(self, xs: Sequence[Tensor], axis: int = 1) -> Tensor:
        if not xs:
            raise ShapeError("concat of zero tensors")
        out = Tensor(
            np.concatenate([t.data for t in xs], axis=axis),
            any(t.requires_grad for t in xs),
        )
        splits = np.cumsum([t.data.shape[axis] for t in xs])[:-1]

        def backward(g):
            for t, piece in zip(xs, np.split(g, splits, axis=axis)):
                _accumulate_view(t, piece)

        return self._record(out, backward)

    def gather_rows(self, x: Tensor, indices) -> Tensor:
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ShapeError(f"gather_rows indices must be 1-D, got shape {idx.shape}")
        if idx.size and (idx.min() < 0 or idx.max() >= x.data.shape[0]):
            raise ShapeError(f"gather_rows index out of range for {x.data.shape[0]} rows")
        out = Tensor(x.data[idx], x.requires_grad)

        def backward(g):
            if x.grad is None:
                x.grad = np.zeros_like(x.data)
            _scatter_add_rows(x.grad, idx, g)

        return self._record(out, backward)

    def scatter_sum(self, messages: Tensor, edge_targets, n_nodes: int) -> Tensor:
        tgt = np.asarray(edge_targets, dtype=np.int64)
        if tgt.ndim != 1 or tgt.shape[0] != messages.data.shape[0]:
            raise ShapeError(
                f"scatter_sum targets {tgt.shape} vs messages {messages.data.shape}"
            )
        if tgt.size and (tgt.min() < 0 or tgt.max() >= n_nodes):
            raise ShapeError(f"scatter_sum target out of range for {n_nodes} nodes")
        acc = np.zeros((n_nodes, messages.data.shape[1]))
        _scatter_add_rows(acc, tgt, messages.data)
        out = Tensor(acc, messages.requires_grad)

        def backward(g):
            _accumulate(messages, g[tgt])

        return self._record(out, backward)

    def warnock_loss(self, points: Tensor) -> Tensor:
        if points.data.ndim != 2:
            raise ShapeError(f"warnock_loss expects (N, d), got {points.data.shape}")
        value, grad = _disc.warnock_l2_squared_grad(points.data)
        out = Tensor(value, points.requires_grad)

        def backward(g):
            _accumulate(points, g.item() * grad)

        return self._record(out, backward)

    def hickernell_loss(
        self,
        points: Tensor,
        spec: ProjectionSpec,
        rng: Optional[np.random.Generator] = None,
    ) -> Tensor:
        """sqrt of summed squared L2 discrepancies over the spec's projections."""
        if points.data.ndim != 2:
            raise ShapeError(f"hickernell_loss expects (N, d), got {points.data.shape}")
        subsets = resolve_subsets(spec, points.data.shape[1], rng)
        parts = []
        for s in subsets:
            cols = list(s)
            val, grad = _disc.warnock_l2_squared_grad(
                np.ascontiguousarray(points.data[:, cols])
            )
            parts.append((cols, val, grad))
        total = math.fsum(p[1] for p in parts)
        value = math.sqrt(total)
        out = Tensor(value, points.requires_grad)

        def backward(g):
            if value == 0.0:
                return
            scale = g.item() / (2.0 * value)
            full = np.zeros_like(points.data)
            for cols, _, grad in parts:
                full[:, cols] += grad
            _accumulate(points, scale * full)

        return self._record(out, backward)

    # --- reverse pass ---

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(tensor) into .grad of everything upstream."""
        if self._consumed:
            raise TapeConsumed("backward() already ran on this tape")
        if id(loss) not in self._produced:
            raise NotAScalar("loss is not an output of this tape")
        if loss.size != 1:
            raise NotAScalar(f"loss must be scalar, got shape {loss.data.shape}")
        self._consumed = True
        loss.grad = np.ones_like(loss.data)
        for out, backward in reversed(self._ops):
            if out.grad is not None:
                backward(out.grad)
