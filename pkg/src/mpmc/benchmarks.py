"""Benchmark suites: regenerate the comparison tables at desk scale.

Each suite writes one CSV (schema header in the first row) plus a JSON
manifest recording the generating specs, seeds, package version, and
backend, so any run can be reproduced byte for byte. Classical
constructions are compared against embedded reference values with
per-entry tolerances; trained rows assert nothing at desk scale and are
skipped entirely unless requested (training budgets are the caller's).
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import __version__, reference_values as refs
from .discrepancy import BACKEND, ProjectionSpec, star_discrepancy, warnock_l2_squared
from .errors import InvalidConfig
from .finance import AsianOptionConfig, estimate_option
from .generators import fibonacci_set, halton, hammersley, lifted_sobol, sobol
from .points import PointSet
from .training import TrainConfig, train

__all__ = ["BenchmarkSuite", "SUITES", "run_suite"]

SUITES = (
    "star_vs_n",
    "l2_vs_n",
    "optimal_2d",
    "optimal_3d",
    "asian_option",
    "radius_ablation",
    "input_ablation",
)

_GRID_METHODS = {
    "halton": lambda n: halton(n, 2, start_index=0),
    "sobol": lambda n: sobol(n, 2),
    "lifted_sobol": lifted_sobol,
    "hammersley": lambda n: hammersley(n, 2),
    "fibonacci": fibonacci_set,
}


@dataclass
class BenchmarkSuite:
    """One suite invocation: what to run, at which scale, where to write."""

    name: str
    scale: str = "desk"
    output_dir: str = "."
    seed: int = 0
    threads: int = 1
    include_mpmc: bool = False
    max_n: int | None = None

    def __post_init__(self):
        if self.name not in SUITES:
            raise InvalidConfig(f"unknown suite {self.name!r}; expected one of {SUITES}")
        if self.scale not in ("desk", "full"):
            raise InvalidConfig(f"scale must be desk or full, got {self.scale!r}")
        if self.threads < 1:
            raise InvalidConfig(f"threads must be >= 1, got {self.threads}")


def run_suite(suite: BenchmarkSuite) -> dict:
    """Execute a suite; returns the manifest (also written next to the CSV)."""
    runner = {
        "star_vs_n": _run_grid_suite,
        "l2_vs_n": _run_grid_suite,
        "optimal_2d": _run_optimal_2d,
        "optimal_3d": _run_optimal_3d,
        "asian_option": _run_asian,
        "radius_ablation": _run_radius_ablation,
        "input_ablation": _run_input_ablation,
    }[suite.name]
    header, rows, spec = runner(suite)
    os.makedirs(suite.output_dir, exist_ok=True)
    csv_path = os.path.join(suite.output_dir, f"{suite.name}.csv")
    _write_csv(csv_path, header, rows)
    manifest = {
        "suite": suite.name,
        "scale": suite.scale,
        "seed": suite.seed,
        "threads": suite.threads,
        "include_mpmc": suite.include_mpmc,
        "max_n": suite.max_n,
        "version": __version__,
        "backend": BACKEND,
        "spec": spec,
        "csv": os.path.basename(csv_path),
    }
    manifest_path = os.path.join(suite.output_dir, f"{suite.name}.manifest.json")
    _write_atomic(manifest_path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_csv(path: str, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    _write_atomic(path, "\n".join(lines) + "\n")


def _write_atomic(path: str, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _parallel(tasks, threads):
    """Run callables, preserving task order in the result list."""
    if threads <= 1 or len(tasks) <= 1:
        return [t() for t in tasks]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(t) for t in tasks]
        return [f.result() for f in futures]


def _grid_ns(suite: BenchmarkSuite):
    ns = refs.GRID_N
    if suite.max_n is not None:
        ns = tuple(n for n in ns if n <= suite.max_n)
    return ns


def _run_grid_suite(suite: BenchmarkSuite):
    """star_vs_n and l2_vs_n: classical methods over the N grid."""
    star = suite.name == "star_vs_n"
    table = refs.STAR_2D if star else refs.L2_2D
    ns = _grid_ns(suite)
    measure = (
        (lambda p: star_discrepancy(p).value)
        if star
        else (lambda p: math.sqrt(warnock_l2_squared(p)))
    )
    methods = [m for m in table if m in _GRID_METHODS]

    def value_task(method, n):
        return lambda: measure(_GRID_METHODS[method](n))

    tasks = [value_task(m, n) for m in methods for n in ns]
    values = _parallel(tasks, suite.threads)
    rows = []
    it = iter(values)
    for method in methods:
        for n in ns:
            ref, tol = _ref_entry(table, method, n)
            rows.append((method, n, next(it), ref, tol, "ok"))
    for method in table:
        if method in _GRID_METHODS:
            continue
        if method == "mpmc" and suite.include_mpmc:
            for n in ns:
                value = _train_value(suite, n, 2, star=star)
                ref, tol = _ref_entry(table, method, n)
                rows.append((method, n, value, ref, tol, "ok"))
        else:
            for n in ns:
                ref, tol = _ref_entry(table, method, n)
                rows.append((method, n, None, ref, tol, "skipped"))
    rows.sort(key=lambda r: (r[0], r[1]))
    header = ["method", "n", "value", "reference", "tolerance", "status"]
    spec = {"d": 2, "n_grid": list(ns), "halton_start_index": 0}
    return header, rows, spec


def _ref_entry(table, method, n):
    grid = refs.GRID_N
    if n in grid:
        i = grid.index(n)
        entry = table[method]
        return entry["values"][i], entry["tolerances"][i]
    return None, None


def _desk_config(n, d, seed, objective="warnock", steps=1500):
    spec = None
    selection = None
    if objective == "hickernell":
        weights = [0.0] * d
        for order in (1, 2, 3):
            weights[order - 1] = 1.0 / 3.0
        spec = ProjectionSpec(mode="random", k_samples=8, order_weights=weights, seed=seed)
        selection = ProjectionSpec(mode="random", k_samples=64, order_weights=weights, seed=seed)
    return TrainConfig(
        n_points=n,
        dim=d,
        input_kind="shifted_qmc",
        qmc_kind="sobol",
        radius=min(0.35 * math.sqrt(d / 2.0), math.sqrt(d)),
        hidden=32,
        layers=3,
        learning_rate=1e-3,
        weight_decay=1e-6,
        batch_size=8,
        max_initial_steps=steps,
        max_total_steps=steps,
        eval_every=100,
        objective=objective,
        objective_spec=spec,
        selection_spec=selection,
        seed=seed,
    )


def _train_value(suite: BenchmarkSuite, n, d, star):
    cfg = _desk_config(n, d, suite.seed)
    if suite.scale == "full":
        cfg = cfg.at_full_scale()
    result = train(cfg)
    pts = result.best_points
    return star_discrepancy(pts).value if star else math.sqrt(warnock_l2_squared(pts))


def _run_optimal_2d(suite: BenchmarkSuite):
    ns = refs.OPTIMAL_2D_N
    if suite.max_n is not None:
        ns = tuple(n for n in ns if n <= suite.max_n)
    rows = []
    for n in ns:
        value = star_discrepancy(fibonacci_set(n)).value
        i = refs.OPTIMAL_2D_N.index(n)
        rows.append(("fibonacci", n, value,
                     refs.OPTIMAL_2D["fibonacci"]["values"][i],
                     refs.OPTIMAL_2D["fibonacci"]["tolerances"][i], "ok"))
    for method in ("optimal", "mpmc"):
        for n in ns:
            i = refs.OPTIMAL_2D_N.index(n)
            ref = refs.OPTIMAL_2D[method]["values"][i]
            if method == "mpmc" and suite.include_mpmc:
                value = _train_value(suite, n, 2, star=True)
                rows.append((method, n, value, ref, None, "ok"))
            else:
                rows.append((method, n, None, ref, None, "skipped"))
    rows.sort(key=lambda r: (r[0], r[1]))
    header = ["method", "n", "value", "reference", "tolerance", "status"]
    return header, rows, {"d": 2, "n_grid": list(ns)}


def _run_optimal_3d(suite: BenchmarkSuite):
    ns = refs.OPTIMAL_3D_N
    if suite.max_n is not None:
        ns = tuple(n for n in ns if n <= suite.max_n)
    rows = []
    for method in ("optimal", "mpmc"):
        for n in ns:
            i = refs.OPTIMAL_3D_N.index(n)
            ref = refs.OPTIMAL_3D[method]["values"][i]
            if method == "mpmc" and suite.include_mpmc:
                value = _train_value(suite, n, 3, star=True)
                rows.append((method, n, value, ref, None, "ok"))
            else:
                rows.append((method, n, None, ref, None, "skipped"))
    rows.sort(key=lambda r: (r[0], r[1]))
    header = ["method", "n", "value", "reference", "tolerance", "status"]
    return header, rows, {"d": 3, "n_grid": list(ns)}


def _run_asian(suite: BenchmarkSuite):
    config = AsianOptionConfig()
    ns = refs.ASIAN_N
    if suite.max_n is not None:
        ns = tuple(n for n in ns if n <= suite.max_n)
    gens = {"sobol": lambda n: sobol(n, config.n_times),
            "hammersley": lambda n: hammersley(n, config.n_times)}

    def task(method, n):
        return lambda: estimate_option(gens[method](n), config)

    results = _parallel([task(m, n) for m in gens for n in ns], suite.threads)
    rows = []
    it = iter(results)
    for method in gens:
        for n in ns:
            est = next(it)
            i = refs.ASIAN_N.index(n)
            ref = refs.ASIAN_ERRORS[method]["values"][i]
            factor = refs.ASIAN_ERRORS[method]["factor"]
            rows.append((method, n, est.estimate, est.abs_error, ref, factor, "ok"))
    for method in ("rank1_lattice", "mpmc"):
        for n in ns:
            i = refs.ASIAN_N.index(n)
            ref = refs.ASIAN_ERRORS[method]["values"][i]
            if method == "mpmc" and suite.include_mpmc:
                cfg = _desk_config(n, config.n_times, suite.seed,
                                   objective="hickernell", steps=600)
                result = train(cfg)
                est = estimate_option(result.best_points, config)
                rows.append((method, n, est.estimate, est.abs_error, ref, None, "ok"))
            else:
                rows.append((method, n, None, None, ref, None, "skipped"))
    rows.sort(key=lambda r: (r[0], r[1]))
    header = ["method", "n", "estimate", "abs_error", "reference_error", "error_factor", "status"]
    return header, rows, {"d": config.n_times, "n_grid": list(ns), "option": config.to_json()}


def _run_radius_ablation(suite: BenchmarkSuite):
    n = 64
    d = 2
    radii = (0.0, 0.35, 0.7, 1.05, math.sqrt(2.0))
    steps = 400 if suite.scale == "desk" else 5000
    rows = []
    for r in radii:
        cfg = _desk_config(n, d, suite.seed, steps=steps)
        cfg.radius = r
        result = train(cfg)
        value = math.sqrt(warnock_l2_squared(result.best_points))
        rows.append((r, n, value, steps, "ok"))
    header = ["radius", "n", "l2", "steps", "status"]
    return header, rows, {"d": d, "n": n, "radii": list(radii), "steps": steps}


def _run_input_ablation(suite: BenchmarkSuite):
    n = 64
    d = 2
    kinds = ("uniform", "qmc", "shifted_qmc")
    steps = 400 if suite.scale == "desk" else 5000
    rows = []
    for kind in kinds:
        cfg = _desk_config(n, d, suite.seed, steps=steps)
        cfg.input_kind = kind
        result = train(cfg)
        value = math.sqrt(warnock_l2_squared(result.best_points))
        rows.append((kind, n, value, steps, "ok"))
    header = ["input_kind", "n", "l2", "steps", "status"]
    return header, rows, {"d": d, "n": n, "kinds": list(kinds), "steps": steps}
