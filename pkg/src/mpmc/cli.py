"""Command-line front end.

Subcommands: generate, discrepancy, train, search, price, benchmark,
project, localfield. Exit codes: 0 success, 2 user error, 3 budget
exceeded, 4 numerical failure. Structured output is JSON on stdout or
CSV files; every file-writing command drops a manifest next to its
outputs from which the run can be reproduced byte for byte.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .benchmarks import SUITES, BenchmarkSuite, run_suite
from .discrepancy import (
    BACKEND,
    DiscrepancyReport,
    ProjectionSpec,
    hickernell_from_subsets,
    resolve_subsets,
    star_discrepancy,
    warnock_l2_squared,
)
from .errors import InvalidConfig, MpmcError
from .finance import AsianOptionConfig, estimate_option
from .generators import GeneratorSpec, generate
from .model import build_radius_graph, forward, load_checkpoint, save_checkpoint
from .points import PointSet, project, read_points, write_points
from .training import TrainConfig, random_search, train

__all__ = ["main"]


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except MpmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    # global flags accepted both before and after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="master seed (sub-streams are derived)")
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                        help="worker threads for benchmark rows")
    common.add_argument("--scale", choices=("desk", "full"), default=argparse.SUPPRESS,
                        help="desk: CI-sized budgets; full: published training schedule")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory")

    parser = argparse.ArgumentParser(
        prog="mpmc",
        parents=[common],
        description="Low-discrepancy point sets: generate, measure, train, price, benchmark.",
    )
    parser.add_argument("--version", action="version", version=f"mpmc {__version__} ({BACKEND} kernels)")
    parser.set_defaults(command=None, seed=0, threads=1, scale="desk", out=None)
    sub = parser.add_subparsers(dest="command")

    def add_command(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add_command("generate", "write a point-set CSV from a generator spec or checkpoint")
    p.add_argument("--spec", help="path to a generator-spec JSON file, or an inline JSON object")
    p.add_argument("--checkpoint", help="model checkpoint: run inference on its stored inputs")
    p.add_argument("--kind", help="generator kind (alternative to --spec)")
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--d", type=int, default=0)
    p.add_argument("--base", type=int, default=None)
    p.add_argument("--a", type=int, default=None)
    p.add_argument("--z", default=None, help="comma-separated generating vector")
    p.add_argument("--b", type=float, default=None, help="random-shift bound")
    p.add_argument("--inner", default=None, help="inner generator spec JSON (for kind=shifted)")
    p.add_argument("--start-index", type=int, default=None, dest="start_index")
    p.set_defaults(func=cmd_generate)

    p = add_command("discrepancy", "measure a point file and print a JSON report")
    p.add_argument("points", help="point CSV file")
    p.add_argument("--measure", choices=("star", "l2", "l2_squared", "hickernell"), default="star")
    p.add_argument("--spec", default=None, help="projection spec JSON (file or inline)")
    p.add_argument("--budget", type=int, default=10**9, help="star candidate-cell budget")
    p.set_defaults(func=cmd_discrepancy)

    p = add_command("train", "train models from a config and write checkpoint/points/history")
    p.add_argument("--config", required=True, help="TrainConfig JSON (file or inline)")
    p.set_defaults(func=cmd_train)

    p = add_command("search", "random hyperparameter search around a base config")
    p.add_argument("--config", required=True, help="base TrainConfig JSON (file or inline)")
    p.add_argument("--trials", type=int, default=4)
    p.set_defaults(func=cmd_search)

    p = add_command("price", "estimate the Asian option value from a point file")
    p.add_argument("points", help="point CSV file (dimension must match the config)")
    p.add_argument("--config", default=None, help="option config JSON (file or inline)")
    p.set_defaults(func=cmd_price)

    p = add_command("benchmark", "run a comparison suite and write CSV + manifest")
    p.add_argument("--suite", required=True, choices=SUITES)
    p.add_argument("--max-n", type=int, default=None, dest="max_n", help="restrict the N grid")
    p.add_argument("--mpmc", action="store_true", help="also train the learned rows (slow)")
    p.set_defaults(func=cmd_benchmark)

    p = add_command("project", "extract coordinate columns from a point file")
    p.add_argument("points")
    p.add_argument("--dims", required=True, help="comma-separated coordinate indices, e.g. 0,2")
    p.set_defaults(func=cmd_project)

    p = add_command("localfield", "write the 2-D local-discrepancy field as a CSV matrix")
    p.add_argument("points")
    p.add_argument("--resolution", type=int, default=64)
    p.set_defaults(func=cmd_localfield)

    return parser


def _load_json_arg(text_or_path):
    """Accept either inline JSON or a path to a JSON file."""
    s = text_or_path.strip()
    if s.startswith("{") or s.startswith("["):
        return json.loads(s)
    with open(text_or_path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _require_out(args, what="an output path") -> str:
    if not args.out:
        raise InvalidConfig(f"this command writes files; pass --out {what}")
    return args.out


def _write_manifest(path: str, payload: dict) -> None:
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _manifest_base(args, command: str) -> dict:
    return {
        "command": command,
        "version": __version__,
        "backend": BACKEND,
        "seed": args.seed,
        "threads": args.threads,
        "scale": args.scale,
    }


# --- commands ---


def cmd_generate(args) -> int:
    if args.checkpoint:
        points, spec_json = _checkpoint_inference(args.checkpoint)
    else:
        spec = _generator_spec_from_args(args)
        points = generate(spec)
        spec_json = spec.to_json()
    out = _require_out(args, "points.csv")
    write_points(points, out)
    manifest = _manifest_base(args, "generate")
    manifest["spec"] = spec_json
    manifest["checkpoint"] = args.checkpoint
    manifest["out"] = os.path.basename(out)
    _write_manifest(out + ".manifest.json", manifest)
    return 0


def _generator_spec_from_args(args) -> GeneratorSpec:
    if args.spec:
        return GeneratorSpec.from_json(_load_json_arg(args.spec))
    if not args.kind:
        raise InvalidConfig("pass --spec, --checkpoint, or --kind")
    z = [int(v) for v in args.z.split(",")] if args.z else None
    inner = GeneratorSpec.from_json(_load_json_arg(args.inner)) if args.inner else None
    return GeneratorSpec(
        kind=args.kind, n=args.n, d=args.d, seed=args.seed, base=args.base,
        a=args.a, z=z, b=args.b, inner=inner, start_index=args.start_index,
    )


def _checkpoint_inference(path):
    model, extra = load_checkpoint(path)
    if "input_spec" not in extra:
        raise InvalidConfig(f"{path}: checkpoint records no input spec for inference")
    inputs = generate(GeneratorSpec.from_json(extra["input_spec"]))
    radius = model.radius if model.radius is not None else math.sqrt(model.dim)
    graph = build_radius_graph(inputs, radius)
    return forward(model, inputs, graph), extra["input_spec"]


def cmd_discrepancy(args) -> int:
    points = read_points(args.points)
    if args.measure == "star":
        report = star_discrepancy(points, cell_budget=args.budget)
    elif args.measure in ("l2", "l2_squared"):
        report = DiscrepancyReport("l2_squared", warnock_l2_squared(points))
    else:
        spec = ProjectionSpec.from_json(_load_json_arg(args.spec)) if args.spec else ProjectionSpec()
        subsets = resolve_subsets(spec, points.dim)
        measure = "hickernell_random" if spec.mode == "random" else "hickernell_p2"
        report = DiscrepancyReport(
            measure, hickernell_from_subsets(points, subsets), subsets_used=subsets
        )
    print(json.dumps(report.to_json()))
    return 0


def cmd_train(args) -> int:
    out_dir = _require_out(args, "a directory")
    cfg = TrainConfig.from_json(_load_json_arg(args.config))
    if args.scale == "full":
        cfg = cfg.at_full_scale()
    result = train(cfg)
    os.makedirs(out_dir, exist_ok=True)
    _write_train_artifacts(args, out_dir, cfg, result)
    print(json.dumps({
        "selection_value": result.selection_value,
        "element_index": result.element_index,
        "evals": len(result.history),
        "out": out_dir,
    }))
    return 0


def _write_train_artifacts(args, out_dir, cfg, result) -> None:
    extra = {
        "train_config": cfg.to_json(),
        "element_index": result.element_index,
        "selection_value": result.selection_value,
        "input_spec": _element_input_spec(cfg, result.element_index),
    }
    save_checkpoint(result.best_model, os.path.join(out_dir, "checkpoint.json"), extra=extra)
    write_points(result.best_points, os.path.join(out_dir, "points.csv"))
    lines = ["step,objective"]
    lines.extend(f"{step},{format(val, '.17g')}" for step, val in result.history)
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, os.path.join(out_dir, "history.csv"))
    manifest = _manifest_base(args, "train")
    manifest["config"] = cfg.to_json()
    manifest["outputs"] = ["checkpoint.json", "points.csv", "history.csv"]
    _write_manifest(os.path.join(out_dir, "train.manifest.json"), manifest)


def _element_input_spec(cfg, element_index: int) -> dict:
    """Generator spec that reproduces the selected element's input set."""
    from .training import _subseed

    inner = {"kind": cfg.qmc_kind, "n": cfg.n_points, "d": cfg.dim, "seed": cfg.seed}
    if cfg.input_kind == "qmc":
        return inner
    sub = _subseed(cfg.seed, "input", element_index)
    if cfg.input_kind == "uniform":
        return {"kind": "uniform_random", "n": cfg.n_points, "d": cfg.dim, "seed": sub}
    return {"kind": "shifted", "n": cfg.n_points, "d": cfg.dim, "seed": sub,
            "b": cfg.shift_bound, "inner": inner}


def cmd_search(args) -> int:
    out_dir = _require_out(args, "a directory")
    base = TrainConfig.from_json(_load_json_arg(args.config))
    if args.scale == "full":
        base = base.at_full_scale()
    result = random_search(base, args.trials, args.seed)
    os.makedirs(out_dir, exist_ok=True)
    _write_train_artifacts(args, out_dir, result.config, result)
    print(json.dumps({
        "selection_value": result.selection_value,
        "trials": args.trials,
        "config": result.config.to_json(),
    }))
    return 0


def cmd_price(args) -> int:
    cfg = AsianOptionConfig.from_json(_load_json_arg(args.config)) if args.config else AsianOptionConfig()
    points = read_points(args.points)
    result = estimate_option(points, cfg)
    print(json.dumps(result.to_json()))
    return 0


def cmd_benchmark(args) -> int:
    out_dir = _require_out(args, "a directory")
    suite = BenchmarkSuite(
        name=args.suite,
        scale=args.scale,
        output_dir=out_dir,
        seed=args.seed,
        threads=args.threads,
        include_mpmc=args.mpmc,
        max_n=args.max_n,
    )
    manifest = run_suite(suite)
    print(json.dumps({"suite": args.suite, "csv": manifest["csv"], "out": out_dir}))
    return 0


def cmd_project(args) -> int:
    out = _require_out(args, "points.csv")
    dims = [int(v) for v in args.dims.split(",")]
    points = project(read_points(args.points), dims)
    write_points(points, out)
    manifest = _manifest_base(args, "project")
    manifest["dims"] = dims
    manifest["source"] = args.points
    _write_manifest(out + ".manifest.json", manifest)
    return 0


def cmd_localfield(args) -> int:
    from .discrepancy import local_discrepancy_field

    out = _require_out(args, "field.csv")
    field = local_discrepancy_field(read_points(args.points), args.resolution)
    lines = [",".join(format(v, ".17g") for v in row) for row in field]
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(out) or ".", suffix=".tmp")
    with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, out)
    manifest = _manifest_base(args, "localfield")
    manifest["resolution"] = args.resolution
    manifest["source"] = args.points
    _write_manifest(out + ".manifest.json", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
