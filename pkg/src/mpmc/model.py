"""Radius-graph message-passing network that maps point sets to point sets.

The network is an affine encoder into a hidden width m, L message-passing
blocks, and an affine decoder squashed through a sigmoid so outputs stay
strictly inside the open unit cube. Each block computes, per node i,

    h_i <- phi([h_i ; sum_{j in N(i)} psi([h_i ; h_j])])

with psi and phi two-layer relu perceptrons and N(i) the fixed radius
neighborhood of the input points. Weights are stored (fan_in, fan_out),
so the per-point affine maps are row-vector products ``x @ W + b``.
"""

from __future__ import annotations

import json
import os
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, Tensor
from .errors import InvalidConfig, InvalidRadius, ShapeError
from .generators import derive_rng
from .points import PointSet

__all__ = [
    "Graph",
    "MpmcModel",
    "build_radius_graph",
    "forward",
    "init_model",
    "load_checkpoint",
    "save_checkpoint",
]

RECOMMENDED_HIDDEN = (32, 64, 128, 256)
RECOMMENDED_LAYERS = range(1, 11)


@dataclass(frozen=True)
class Graph:
    """Symmetric edge list over node indices; both directions stored."""

    n_nodes: int
    edges: np.ndarray  # (E, 2) int64, sorted by (target, neighbor), no self-loops
    radius: float

    def __post_init__(self):
        e = np.ascontiguousarray(self.edges, dtype=np.int64).reshape(-1, 2)
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]


def build_radius_graph(points: PointSet, r: float) -> Graph:
    """Connect every distinct pair within Euclidean distance r (inclusive)."""
    x = points.coords
    n, d = x.shape
    limit = np.sqrt(d)
    if not 0.0 <= r <= limit + 1e-12:
        raise InvalidRadius(f"radius must lie in [0, sqrt({d})] = [0, {limit:.6g}], got {r}")
    d2 = np.einsum("ik,ik->i", x, x)
    sq = d2[:, None] + d2[None, :] - 2.0 * (x @ x.T)
    # recompute near-threshold entries exactly; the expansion above loses bits
    np.clip(sq, 0.0, None, out=sq)
    mask = sq <= r * r + 1e-9
    np.fill_diagonal(mask, False)
    i, j = np.nonzero(mask)
    exact = np.einsum("ek->e", (x[i] - x[j]) ** 2) <= r * r
    i, j = i[exact], j[exact]
    edges = np.column_stack([i, j])  # np.nonzero is already (i, j) lexicographic
    return Graph(n_nodes=n, edges=edges, radius=float(r))


@dataclass
class LayerParams:
    """One message-passing block: psi (messages) and phi (update), 2 affine layers each."""

    psi_w1: np.ndarray
    psi_b1: np.ndarray
    psi_w2: np.ndarray
    psi_b2: np.ndarray
    phi_w1: np.ndarray
    phi_b1: np.ndarray
    phi_w2: np.ndarray
    phi_b2: np.ndarray


@dataclass
class MpmcModel:
    """Encoder + L message-passing blocks + sigmoid-clamped decoder."""

    dim: int
    hidden: int
    n_layers: int
    seed: int
    enc_w: np.ndarray
    enc_b: np.ndarray
    layers: list[LayerParams]
    dec_w: np.ndarray
    dec_b: np.ndarray
    radius: float | None = None  # graph radius the model was trained with

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        out = [("enc_w", self.enc_w), ("enc_b", self.enc_b)]
        for l, blk in enumerate(self.layers):
            for name in ("psi_w1", "psi_b1", "psi_w2", "psi_b2",
                         "phi_w1", "phi_b1", "phi_w2", "phi_b2"):
                out.append((f"layers.{l}.{name}", getattr(blk, name)))
        out.append(("dec_w", self.dec_w))
        out.append(("dec_b", self.dec_b))
        return out


def init_model(d: int, hidden: int, layers: int, seed: int, radius: float | None = None) -> MpmcModel:
    """Seeded uniform fan-in initialization: weights ~ U(+-sqrt(1/fan_in)), zero biases.

    The fan-in-only scale keeps the summed neighborhood messages from
    saturating the decoder sigmoid at initialization even on dense graphs.
    """
    if d < 1 or hidden < 1 or layers < 0:
        raise InvalidConfig(f"need d >= 1, hidden >= 1, layers >= 0; got {d}, {hidden}, {layers}")
    if hidden not in RECOMMENDED_HIDDEN:
        warnings.warn(f"hidden width {hidden} outside the tuned set {RECOMMENDED_HIDDEN}")
    if layers not in RECOMMENDED_LAYERS:
        warnings.warn(f"layer count {layers} outside the tuned range 1..10")
    rng = derive_rng(seed, "init")

    def w(fan_in, fan_out):
        lim = np.sqrt(1.0 / fan_in)
        return rng.uniform(-lim, lim, (fan_in, fan_out))

    blocks = [
        LayerParams(
            psi_w1=w(2 * hidden, hidden), psi_b1=np.zeros(hidden),
            psi_w2=w(hidden, hidden), psi_b2=np.zeros(hidden),
            phi_w1=w(2 * hidden, hidden), phi_b1=np.zeros(hidden),
            phi_w2=w(hidden, hidden), phi_b2=np.zeros(hidden),
        )
        for _ in range(layers)
    ]
    return MpmcModel(
        dim=d, hidden=hidden, n_layers=layers, seed=seed,
        enc_w=w(d, hidden), enc_b=np.zeros(hidden),
        layers=blocks,
        dec_w=w(hidden, d), dec_b=np.zeros(d),
        radius=radius,
    )


def model_tensors(model: MpmcModel, requires_grad: bool = False) -> dict[str, Tensor]:
    """Wrap every parameter array as a Tensor, keyed by parameter name."""
    return {name: Tensor(arr, requires_grad) for name, arr in model.named_parameters()}


def run_model(tape: Tape, tensors: dict[str, Tensor], model: MpmcModel,
              x: Tensor, graph: Graph) -> Tensor:
    """Forward pass on a tape; returns the decoded (N, d) output tensor."""
    if x.data.shape[1] != model.dim:
        raise ShapeError(f"model dimension {model.dim} vs input {x.data.shape}")
    if graph.n_nodes != x.data.shape[0]:
        raise ShapeError(f"graph has {graph.n_nodes} nodes, input {x.data.shape[0]} points")
    tgt = graph.edges[:, 0]
    nbr = graph.edges[:, 1]
    h = tape.add_bias(tape.matmul(x, tensors["enc_w"]), tensors["enc_b"])
    for l in range(model.n_layers):
        p = lambda name: tensors[f"layers.{l}.{name}"]
        hi = tape.gather_rows(h, tgt)
        hj = tape.gather_rows(h, nbr)
        z = tape.concat([hi, hj], axis=1)
        z = tape.add_bias(tape.matmul(z, p("psi_w1")), p("psi_b1"))
        z = tape.relu(z)
        z = tape.add_bias(tape.matmul(z, p("psi_w2")), p("psi_b2"))
        agg = tape.scatter_sum(z, tgt, graph.n_nodes)
        u = tape.concat([h, agg], axis=1)
        u = tape.add_bias(tape.matmul(u, p("phi_w1")), p("phi_b1"))
        u = tape.relu(u)
        h = tape.add_bias(tape.matmul(u, p("phi_w2")), p("phi_b2"))
    out = tape.add_bias(tape.matmul(h, tensors["dec_w"]), tensors["dec_b"])
    return tape.sigmoid(out)


def forward(model: MpmcModel, points: PointSet, graph: Graph) -> PointSet:
    """Map a point set through the network; outputs lie strictly in (0,1)^d."""
    tape = Tape()
    out = run_model(tape, model_tensors(model), model, Tensor(points.coords), graph)
    return PointSet(out.data)


# --- checkpoint IO (JSON; float round trip is exact via repr shortest form) ---

_FORMAT = "mpmc-checkpoint-v1"


def save_checkpoint(model: MpmcModel, path, extra: dict | None = None) -> None:
    doc = {
        "format": _FORMAT,
        "dim": model.dim,
        "hidden": model.hidden,
        "n_layers": model.n_layers,
        "seed": model.seed,
        "radius": model.radius,
        "params": {name: arr.tolist() for name, arr in model.named_parameters()},
    }
    if extra:
        doc["extra"] = extra
    path = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path) -> tuple[MpmcModel, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _FORMAT:
        raise InvalidConfig(f"{path}: not a model checkpoint (format={doc.get('format')!r})")
    params = {k: np.asarray(v, dtype=np.float64) for k, v in doc["params"].items()}
    layers = []
    for l in range(doc["n_layers"]):
        layers.append(LayerParams(**{
            name: params[f"layers.{l}.{name}"]
            for name in ("psi_w1", "psi_b1", "psi_w2", "psi_b2",
                         "phi_w1", "phi_b1", "phi_w2", "phi_b2")
        }))
    model = MpmcModel(
        dim=doc["dim"], hidden=doc["hidden"], n_layers=doc["n_layers"],
        seed=doc["seed"], enc_w=params["enc_w"], enc_b=params["enc_b"],
        layers=layers, dec_w=params["dec_w"], dec_b=params["dec_b"],
        radius=doc.get("radius"),
    )
    return model, doc.get("extra", {})
