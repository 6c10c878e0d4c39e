"""Training loop: optimizes model parameters against a discrepancy objective.

A run trains ``batch_size`` independent model instances, one per input
set, under a single hyperparameter draw. The learning rate is constant
for ``max_initial_steps``, after which it is divided by
``lr_decay_factor`` whenever the best evaluated objective has not
improved for ``plateau_window`` steps; the run stops when the rate falls
below ``lr_floor`` or the total step budget is spent. The returned
element is the one minimizing the selection objective (a restricted
projection measure when ``selection_spec`` is given, the training
objective otherwise).
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import discrepancy as disc
from .autodiff import Tape, Tensor
from .discrepancy import ProjectionSpec, hickernell_from_subsets, resolve_subsets
from .errors import InvalidConfig, SearchFailed, TrainingDiverged
from .generators import GeneratorSpec, derive_rng, generate, random_shift, uniform_random
from .model import Graph, MpmcModel, build_radius_graph, forward, init_model, model_tensors, run_model
from .points import PointSet

__all__ = ["TrainConfig", "TrainResult", "make_inputs", "random_search", "train"]

BATCH_SIZES = (8, 16, 32)
INPUT_KINDS = ("uniform", "qmc", "shifted_qmc")
SEARCH_LR_RANGE = (1e-4, 1e-2)
SEARCH_WD_RANGE = (1e-8, 1e-2)
SEARCH_HIDDEN = (32, 64, 128, 256)
SEARCH_LAYERS = tuple(range(1, 11))

# guard thresholds: abort when the objective sits above 10x its initial
# value for this many consecutive evaluations
_DIVERGE_FACTOR = 10.0
_DIVERGE_EVALS = 100


@dataclass
class TrainConfig:
    """Full training recipe; defaults are the desk-scale schedule."""

    n_points: int = 64
    dim: int = 2
    input_kind: str = "shifted_qmc"
    qmc_kind: str = "sobol"
    shift_bound: float = 0.1
    radius: float = 0.35
    hidden: int = 32
    layers: int = 3
    learning_rate: float = 1e-3
    weight_decay: float = 1e-6
    batch_size: int = 8
    max_initial_steps: int = 5000
    max_total_steps: int = 5000
    plateau_window: int = 500
    eval_every: int = 100
    lr_decay_factor: float = 10.0
    lr_floor: float = 1e-6
    objective: str = "warnock"
    objective_spec: Optional[ProjectionSpec] = None
    selection_spec: Optional[ProjectionSpec] = None
    seed: int = 0

    def validate(self) -> None:
        if self.n_points < 1 or self.dim < 1:
            raise InvalidConfig(f"need n_points >= 1 and dim >= 1, got {self.n_points}, {self.dim}")
        if self.input_kind not in INPUT_KINDS:
            raise InvalidConfig(f"unknown input kind {self.input_kind!r}; expected {INPUT_KINDS}")
        if self.batch_size not in BATCH_SIZES:
            raise InvalidConfig(f"batch_size must be one of {BATCH_SIZES}, got {self.batch_size}")
        if self.learning_rate < 0:
            raise InvalidConfig(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise InvalidConfig(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.lr_floor <= 0:
            raise InvalidConfig(f"lr_floor must be > 0, got {self.lr_floor}")
        if self.lr_decay_factor <= 1:
            raise InvalidConfig(f"lr_decay_factor must exceed 1, got {self.lr_decay_factor}")
        if self.eval_every < 1 or self.plateau_window < 1:
            raise InvalidConfig("eval_every and plateau_window must be >= 1")
        if self.max_initial_steps < 0 or self.max_total_steps < self.max_initial_steps:
            raise InvalidConfig("need 0 <= max_initial_steps <= max_total_steps")
        if self.objective not in ("warnock", "hickernell"):
            raise InvalidConfig(f"unknown objective {self.objective!r}")
        if self.objective == "hickernell" and self.objective_spec is None:
            raise InvalidConfig("hickernell objective requires objective_spec")

    def at_full_scale(self) -> "TrainConfig":
        """Copy with the published long schedule (100k initial steps)."""
        return replace(
            self,
            max_initial_steps=100_000,
            max_total_steps=200_000,
            plateau_window=2000,
        )

    def to_json(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if isinstance(v, ProjectionSpec):
                v = v.to_json()
            out[name] = v
        return out

    @classmethod
    def from_json(cls, obj) -> "TrainConfig":
        if isinstance(obj, str):
            obj = json.loads(obj)
        kwargs = dict(obj)
        unknown = set(kwargs) - set(cls.__dataclass_fields__)
        if unknown:
            raise InvalidConfig(f"unknown TrainConfig keys: {sorted(unknown)}")
        for key in ("objective_spec", "selection_spec"):
            if kwargs.get(key) is not None:
                kwargs[key] = ProjectionSpec.from_json(kwargs[key])
        return cls(**kwargs)


@dataclass
class TrainResult:
    """Selected batch element: its model, decoded points, and eval history."""

    best_model: MpmcModel
    best_points: PointSet
    history: list[tuple[int, float]]
    selection_value: float
    element_index: int = 0
    config: Optional[TrainConfig] = None
    lr_trace: list[tuple[int, float]] = field(default_factory=list)


class _AdamW:
    """Adaptive moments with decoupled weight decay, beta=(0.9, 0.999), eps=1e-8."""

    def __init__(self, params: dict[str, Tensor], weight_decay: float):
        self.params = params
        self.weight_decay = weight_decay
        self.m = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.v = {k: np.zeros_like(t.data) for k, t in params.items()}
        self.t = 0

    def step(self, lr: float) -> None:
        self.t += 1
        b1, b2, eps = 0.9, 0.999, 1e-8
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            m = self.m[k]
            v = self.v[k]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.data -= lr * ((m / c1) / (np.sqrt(v / c2) + eps) + self.weight_decay * p.data)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


def make_inputs(config: TrainConfig) -> list[PointSet]:
    """One input set per batch element, sub-seeded per element."""
    config.validate()
    kind = config.input_kind
    if kind == "uniform":
        return [
            uniform_random(config.n_points, config.dim, _subseed(config.seed, "input", b))
            for b in range(config.batch_size)
        ]
    base = generate(GeneratorSpec(kind=config.qmc_kind, n=config.n_points, d=config.dim,
                                  seed=config.seed))
    if kind == "qmc":
        return [base] * config.batch_size
    return [
        random_shift(base, _subseed(config.seed, "input", b), config.shift_bound)
        for b in range(config.batch_size)
    ]


def _subseed(seed: int, *path) -> int:
    return int(derive_rng(seed, *path).integers(0, 2**63 - 1))


class _Element:
    """Per-batch-element training state."""

    def __init__(self, index: int, points: PointSet, config: TrainConfig):
        self.index = index
        self.points = points
        self.graph = build_radius_graph(points, config.radius)
        self.model = init_model(
            config.dim, config.hidden, config.layers,
            seed=_subseed(config.seed, "model", index), radius=config.radius,
        )
        self.tensors = model_tensors(self.model, requires_grad=True)
        self.opt = _AdamW(self.tensors, config.weight_decay)
        self.best_value = math.inf
        self.best_snapshot = None

    def snapshot_if_better(self, value: float) -> None:
        if value < self.best_value:
            self.best_value = value
            self.best_snapshot = {k: t.data.copy() for k, t in self.tensors.items()}

    def best_model(self) -> MpmcModel:
        model = copy.deepcopy(self.model)
        snap = self.best_snapshot or {k: t.data for k, t in self.tensors.items()}
        for name, arr in model.named_parameters():
            arr[...] = snap[name]
        return model


def train(config: TrainConfig) -> TrainResult:
    """Optimize batch_size independent models and return the selected element."""
    config.validate()
    inputs = make_inputs(config)
    elements = [_Element(b, pts, config) for b, pts in enumerate(inputs)]

    # fixed evaluation subsets keep plateau comparisons consistent when the
    # per-step training objective samples random projections
    eval_subsets = None
    if config.objective == "hickernell":
        eval_subsets = resolve_subsets(
            config.objective_spec, config.dim, derive_rng(config.seed, "eval")
        )

    def eval_element(el: _Element) -> float:
        # el.tensors share storage with the model arrays, so el.model is current
        pts = forward(el.model, el.points, el.graph)
        if eval_subsets is None:
            return disc.warnock_l2_squared(pts)
        return hickernell_from_subsets(pts, eval_subsets)

    history: list[tuple[int, float]] = []
    lr_trace: list[tuple[int, float]] = []
    vals = [eval_element(el) for el in elements]
    for el, v in zip(elements, vals):
        el.snapshot_if_better(v)
    initial_min = min(vals)
    best_seen = initial_min
    history.append((0, initial_min))

    lr = config.learning_rate
    lr_trace.append((0, lr))
    step = 0
    last_improve = 0
    bad_evals = 0
    while step < config.max_total_steps and lr >= config.lr_floor:
        step += 1
        for el in elements:
            tape = Tape()
            out = run_model(tape, el.tensors, el.model, Tensor(el.points.coords), el.graph)
            if config.objective == "warnock":
                loss = tape.warnock_loss(out)
            else:
                loss = tape.hickernell_loss(
                    out, config.objective_spec,
                    derive_rng(config.seed, "objective", step, el.index),
                )
            if not np.isfinite(loss.data.item()):
                raise TrainingDiverged(
                    f"non-finite objective at step {step} (element {el.index})",
                    last_result=_finish(config, elements, history),
                )
            tape.backward(loss)
            el.opt.step(lr)
            el.opt.zero_grad()
        if step % config.eval_every == 0:
            vals = [eval_element(el) for el in elements]
            for el, v in zip(elements, vals):
                el.snapshot_if_better(v)
            batch_min = min(vals)
            history.append((step, batch_min))
            if batch_min < best_seen:
                best_seen = batch_min
                last_improve = step
            bad_evals = bad_evals + 1 if batch_min > _DIVERGE_FACTOR * initial_min else 0
            if bad_evals >= _DIVERGE_EVALS:
                raise TrainingDiverged(
                    f"objective stuck above {_DIVERGE_FACTOR}x its initial value",
                    last_result=_finish(config, elements, history, lr_trace),
                )
            if step >= config.max_initial_steps and step - last_improve >= config.plateau_window:
                lr /= config.lr_decay_factor
                last_improve = step
            lr_trace.append((step, lr))

    return _finish(config, elements, history, lr_trace)


def _finish(config: TrainConfig, elements: list[_Element], history, lr_trace=None) -> TrainResult:
    selection_subsets = None
    if config.selection_spec is not None:
        selection_subsets = resolve_subsets(
            config.selection_spec, config.dim, derive_rng(config.seed, "selection")
        )
    best = None
    for el in elements:
        model = el.best_model()
        pts = forward(model, el.points, el.graph)
        if selection_subsets is not None:
            value = hickernell_from_subsets(pts, selection_subsets)
        else:
            value = el.best_value
        if best is None or value < best[0]:
            best = (value, el.index, model, pts)
    value, index, model, pts = best
    return TrainResult(
        best_model=model,
        best_points=pts,
        history=list(history),
        selection_value=float(value),
        element_index=index,
        config=config,
        lr_trace=list(lr_trace or []),
    )


def random_search(base: TrainConfig, n_trials: int, seed: int) -> TrainResult:
    """Sample hyperparameters per the published ranges; keep the best trial.

    Learning rate and weight decay are log-uniform, widths/layers/batch
    discrete uniform, and the graph radius uniform on (0, sqrt(d)].
    Each trial is reproducible from (seed, trial index) alone.
    """
    if n_trials < 1:
        raise InvalidConfig(f"n_trials must be >= 1, got {n_trials}")
    best: Optional[TrainResult] = None
    failures = []
    for t in range(n_trials):
        rng = derive_rng(seed, "search", t)
        cfg = replace(
            base,
            learning_rate=_log_uniform(rng, *SEARCH_LR_RANGE),
            weight_decay=_log_uniform(rng, *SEARCH_WD_RANGE),
            hidden=int(rng.choice(SEARCH_HIDDEN)),
            layers=int(rng.choice(SEARCH_LAYERS)),
            batch_size=int(rng.choice(BATCH_SIZES)),
            radius=float((1.0 - rng.random()) * math.sqrt(base.dim)),
            seed=_subseed(seed, "trial", t),
        )
        try:
            result = train(cfg)
        except TrainingDiverged as exc:
            failures.append(f"trial {t}: {exc}")
            continue
        if best is None or result.selection_value < best.selection_value:
            best = result
    if best is None:
        raise SearchFailed("; ".join(failures))
    return best


def _log_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
