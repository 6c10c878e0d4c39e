"""Compare the compiled discrepancy kernels against the NumPy fallback.

Times warnock_value, warnock_value_grad, and the exact star kernels on
growing point sets and checks that the two backends agree. Run with:

    python benchmarks/kernel_benchmark.py
"""

from __future__ import annotations

import time

import numpy as np

from mpmc.discrepancy import _reference
from mpmc.generators import sobol

try:
    from mpmc.discrepancy import _kernels
except ImportError:
    _kernels = None


def _time(fn, *args, repeat=3):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def _row(label, compiled_s, fallback_s, agree):
    speedup = fallback_s / compiled_s if compiled_s else float("nan")
    print(f"{label:34s} {compiled_s*1e3:10.2f} {fallback_s*1e3:10.2f} {speedup:9.1f}x   {agree}")


def main():
    if _kernels is None:
        print("compiled kernels not built; only the fallback is available")
        return
    print(f"{'kernel':34s} {'compiled ms':>10s} {'fallback ms':>10s} {'speedup':>10s}   agree")
    cases = [("warnock_value", (256, 2)), ("warnock_value", (1024, 2)),
             ("warnock_value", (512, 8)),
             ("warnock_value_grad", (256, 2)), ("warnock_value_grad", (1024, 2)),
             ("star_2d", (256, 2)), ("star_2d", (1024, 2)),
             ("star_nd", (64, 3)), ("star_nd", (24, 4))]
    for name, (n, d) in cases:
        x = np.ascontiguousarray(sobol(n, d).coords)
        tc, rc = _time(getattr(_kernels, name), x)
        tf, rf = _time(getattr(_reference, name), x)
        if name == "warnock_value":
            agree = abs(rc - rf) <= 1e-12 * max(abs(rf), 1e-300)
        elif name == "warnock_value_grad":
            agree = (abs(rc[0] - rf[0]) <= 1e-12 * max(abs(rf[0]), 1e-300)
                     and np.allclose(rc[1], rf[1], rtol=1e-12, atol=1e-15))
        else:
            agree = abs(rc[0] - rf[0]) <= 1e-12
        _row(f"{name} (N={n}, d={d})", tc, tf, agree)


if __name__ == "__main__":
    main()
