import json
import os

import numpy as np
import pytest

from mpmc.cli import main
from mpmc.points import read_points


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestGenerate:
    def test_fibonacci_csv(self, tmp_path, capsys):
        out = tmp_path / "fib.csv"
        code, _, _ = run(capsys, "--out", str(out), "generate", "--kind", "fibonacci", "--n", "5")
        assert code == 0
        pts = read_points(out)
        assert pts.n_points == 5 and pts.dim == 2
        from mpmc.generators import fibonacci_set
        assert np.array_equal(pts.coords, fibonacci_set(5).coords)

    def test_sobol_row_count(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code, _, _ = run(capsys, "--out", str(out), "generate", "--kind", "sobol",
                         "--n", "64", "--d", "2")
        assert code == 0
        assert sum(1 for _ in open(out)) == 64

    def test_malformed_spec_exits_2(self, tmp_path, capsys):
        code, _, err = run(capsys, "--out", str(tmp_path / "x.csv"),
                           "generate", "--spec", '{"kind": "nope"}')
        assert code == 2 and "error" in err

    def test_spec_file(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"kind": "halton", "n": 6, "d": 2, "start_index": 0}))
        out = tmp_path / "h.csv"
        code, _, _ = run(capsys, "--out", str(out), "generate", "--spec", str(spec))
        assert code == 0
        from mpmc.generators import halton
        assert np.array_equal(read_points(out).coords, halton(6, 2, 0).coords)

    def test_rerun_from_manifest_byte_identical(self, tmp_path, capsys):
        out = tmp_path / "pts.csv"
        args = ["--seed", "5", "--out", str(out), "generate", "--kind", "uniform_random",
                "--n", "20", "--d", "3"]
        assert run(capsys, *args)[0] == 0
        first = out.read_bytes()
        manifest = json.loads((tmp_path / "pts.csv.manifest.json").read_text())
        assert manifest["command"] == "generate" and manifest["seed"] == 5
        assert run(capsys, *args)[0] == 0
        assert out.read_bytes() == first


class TestDiscrepancy:
    def test_star_fibonacci_20(self, tmp_path, capsys):
        out = tmp_path / "f.csv"
        run(capsys, "--out", str(out), "generate", "--kind", "fibonacci", "--n", "20")
        code, stdout, _ = run(capsys, "discrepancy", str(out), "--measure", "star")
        assert code == 0
        report = json.loads(stdout)
        assert report["value"] == pytest.approx(0.11885, abs=1e-4)
        assert report["witness"] is not None

    def test_l2_single_point(self, tmp_path, capsys):
        path = tmp_path / "p.csv"
        path.write_text("0.5\n")
        code, stdout, _ = run(capsys, "discrepancy", str(path), "--measure", "l2")
        assert code == 0
        assert json.loads(stdout)["value"] == pytest.approx(1 / 12, abs=1e-12)

    def test_exhaustive_hickernell_guard_exits_3(self, tmp_path, capsys):
        path = tmp_path / "wide.csv"
        rng = np.random.default_rng(0)
        rows = [",".join(format(v, ".17g") for v in rng.random(25)) for _ in range(4)]
        path.write_text("\n".join(rows) + "\n")
        code, _, err = run(capsys, "discrepancy", str(path), "--measure", "hickernell")
        assert code == 3

    def test_hickernell_explicit(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        run(capsys, "--out", str(out), "generate", "--kind", "sobol", "--n", "16", "--d", "3")
        spec = json.dumps({"mode": "explicit", "explicit_sets": [[0], [1, 2]]})
        code, stdout, _ = run(capsys, "discrepancy", str(out), "--measure", "hickernell",
                              "--spec", spec)
        assert code == 0
        report = json.loads(stdout)
        assert report["subsets"] == [[0], [1, 2]]


class TestTrainCli:
    CONFIG = {
        "n_points": 12, "dim": 2, "hidden": 32, "layers": 1, "radius": 0.5,
        "max_initial_steps": 40, "max_total_steps": 40, "eval_every": 20,
        "batch_size": 8, "seed": 2,
    }

    def test_writes_three_artifacts(self, tmp_path, capsys):
        out = tmp_path / "run"
        code, stdout, _ = run(capsys, "--out", str(out), "train",
                              "--config", json.dumps(self.CONFIG))
        assert code == 0
        for name in ("checkpoint.json", "points.csv", "history.csv", "train.manifest.json"):
            assert (out / name).exists()
        header = (out / "history.csv").read_text().splitlines()[0]
        assert header == "step,objective"

    def test_zero_lr_outputs_initial_forward(self, tmp_path, capsys):
        cfg = dict(self.CONFIG, learning_rate=0.0)
        out = tmp_path / "run0"
        code, _, _ = run(capsys, "--out", str(out), "train", "--config", json.dumps(cfg))
        assert code == 0
        code2, _, _ = run(capsys, "--out", str(tmp_path / "infer.csv"),
                          "generate", "--checkpoint", str(out / "checkpoint.json"))
        assert code2 == 0
        assert (out / "points.csv").read_bytes() == (tmp_path / "infer.csv").read_bytes()

    def test_invalid_batch_size_exits_2(self, tmp_path, capsys):
        cfg = dict(self.CONFIG, batch_size=7)
        code, _, err = run(capsys, "--out", str(tmp_path / "x"), "train",
                           "--config", json.dumps(cfg))
        assert code == 2


class TestPrice:
    def test_sobol_256(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        run(capsys, "--out", str(out), "generate", "--kind", "sobol", "--n", "256", "--d", "32")
        code, stdout, _ = run(capsys, "price", str(out))
        assert code == 0
        doc = json.loads(stdout)
        assert doc["N"] == 256
        assert doc["abs_error"] == pytest.approx(0.623, rel=0.5)

    def test_dimension_mismatch_exits_2(self, tmp_path, capsys):
        out = tmp_path / "p.csv"
        run(capsys, "--out", str(out), "generate", "--kind", "sobol", "--n", "8", "--d", "4")
        code, _, _ = run(capsys, "price", str(out))
        assert code == 2


class TestProjectAndField:
    def test_project_columns(self, tmp_path, capsys):
        src = tmp_path / "s.csv"
        run(capsys, "--out", str(src), "generate", "--kind", "sobol", "--n", "10", "--d", "3")
        out = tmp_path / "p.csv"
        code, _, _ = run(capsys, "project", str(src), "--dims", "0,2", "--out", str(out))
        assert code == 0
        a = read_points(src).coords[:, [0, 2]]
        assert np.array_equal(read_points(out).coords, a)

    def test_localfield_csv_shape(self, tmp_path, capsys):
        src = tmp_path / "f.csv"
        run(capsys, "--out", str(src), "generate", "--kind", "fibonacci", "--n", "8")
        out = tmp_path / "field.csv"
        code, _, _ = run(capsys, "localfield", str(src), "--resolution", "5", "--out", str(out))
        assert code == 0
        rows = out.read_text().strip().split("\n")
        assert len(rows) == 5 and all(len(r.split(",")) == 5 for r in rows)


class TestBenchmark:
    def test_l2_suite_small(self, tmp_path, capsys):
        code, stdout, _ = run(capsys, "--out", str(tmp_path), "benchmark",
                              "--suite", "l2_vs_n", "--max-n", "60")
        assert code == 0
        csv = (tmp_path / "l2_vs_n.csv").read_text().splitlines()
        assert csv[0] == "method,n,value,reference,tolerance,status"
        rows = [line.split(",") for line in csv[1:]]
        fib20 = next(r for r in rows if r[0] == "fibonacci" and r[1] == "20")
        assert float(fib20[2]) == pytest.approx(0.04324, abs=1e-4)
        assert (tmp_path / "l2_vs_n.manifest.json").exists()

    def test_rows_within_embedded_tolerances(self, tmp_path, capsys):
        code, _, _ = run(capsys, "--out", str(tmp_path), "benchmark",
                         "--suite", "star_vs_n", "--max-n", "100")
        assert code == 0
        for line in (tmp_path / "star_vs_n.csv").read_text().splitlines()[1:]:
            method, n, value, ref, tol, status = line.split(",")
            if status == "ok" and tol:
                assert abs(float(value) - float(ref)) <= float(tol), line

    def test_deterministic_rerun(self, tmp_path, capsys):
        args = ["--threads", "2", "--out", str(tmp_path), "benchmark",
                "--suite", "star_vs_n", "--max-n", "100"]
        assert run(capsys, *args)[0] == 0
        first = (tmp_path / "star_vs_n.csv").read_bytes()
        assert run(capsys, *args)[0] == 0
        assert (tmp_path / "star_vs_n.csv").read_bytes() == first

    def test_optimal_2d_fibonacci_column(self, tmp_path, capsys):
        code, _, _ = run(capsys, "--out", str(tmp_path), "benchmark",
                         "--suite", "optimal_2d", "--max-n", "7")
        assert code == 0
        lines = (tmp_path / "optimal_2d.csv").read_text().splitlines()[1:]
        for line in lines:
            method, n, value, ref, tol, status = line.split(",")
            if method == "fibonacci":
                assert abs(float(value) - float(ref)) <= float(tol)
            else:
                assert status == "skipped"

    def test_unknown_suite_exits_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit):
            run(capsys, "--out", str(tmp_path), "benchmark", "--suite", "bogus")


class TestAblationSuites:
    def test_radius_ablation_tiny(self, tmp_path, capsys, monkeypatch):
        import mpmc.benchmarks as bm

        monkeypatch.setattr(bm, "_run_radius_ablation", _tiny_radius_suite)
        code, _, _ = run(capsys, "--out", str(tmp_path), "benchmark",
                         "--suite", "radius_ablation")
        assert code == 0
        lines = (tmp_path / "radius_ablation.csv").read_text().splitlines()
        assert lines[0].startswith("radius,")


def _tiny_radius_suite(suite):
    import math
    from mpmc.benchmarks import _desk_config
    from mpmc.training import train
    from mpmc.discrepancy import warnock_l2_squared

    rows = []
    for r in (0.0, 0.5):
        cfg = _desk_config(8, 2, suite.seed, steps=10)
        cfg.radius = r
        result = train(cfg)
        rows.append((r, 8, math.sqrt(warnock_l2_squared(result.best_points)), 10, "ok"))
    return ["radius", "n", "l2", "steps", "status"], rows, {"tiny": True}
