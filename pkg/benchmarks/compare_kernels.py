"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/compare_kernels.py [--repeat 5]

Also runs one waveguide build per backend (in a subprocess, since the
backend is fixed at import time).
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from sparsepce import _kernels_py
from sparsepce.multi_index import generate_set

try:
    from sparsepce import _kernels
except ImportError:
    _kernels = None

BUILD_SNIPPET = """
import time
from sparsepce import AdaptiveConfig, build, get_benchmark, BACKEND
b = get_benchmark("waveguide-sf")
t = time.perf_counter()
m = build(AdaptiveConfig("K", 10.0, max_evals=300), b, b.input_model, seed=1, record_criterion=False)
print(BACKEND, len(m.index_set), round(time.perf_counter() - t, 3))
"""


def _cases(rng):
    x = np.ascontiguousarray(rng.uniform(-1, 1, (2000, 14)))
    exps = np.array(generate_set("TD", 14, 3).indices, dtype=np.int64)
    table = _kernels_py.legendre_table(x, 3)
    m, n = 600, 120
    a = rng.standard_normal((m, n))
    q, r = np.linalg.qr(a)
    q = np.asfortranarray(np.pad(q, ((0, 1), (0, 0))))
    return x, exps, table, q, r, n, m


def _givens(mod, q, r, n, m, rng):
    qq, rr, z = q.copy(order="F"), r.copy(), np.zeros(n)
    row = rng.standard_normal(n)
    return lambda: mod.givens_append_row(qq, rr, z, row.copy(), 1.0, m, n)


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-build", action="store_true")
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    x, exps, table, q, r, n, m = _cases(rng)
    backends = [("python", _kernels_py)] + ([("compiled", _kernels)] if _kernels else [])
    print(f"{'kernel':<28}{'backend':<10}{'best [ms]':>10}")
    for name, mod in backends:
        jobs = {
            "legendre_table 2000x14 p=3": lambda: mod.legendre_table(x, 3),
            f"tensor_columns {len(exps)} cols": lambda: mod.tensor_columns(table, exps),
            "givens_append_row 600x120": _givens(mod, q, r, n, m, rng),
        }
        for label, fn in jobs.items():
            best = min(timeit.repeat(fn, number=1, repeat=args.repeat)) * 1e3
            print(f"{label:<28}{name:<10}{best:>10.3f}")
    if not args.skip_build:
        print("\nwaveguide-sf build, K<=10, budget 300 (backend, terms, seconds)")
        for pure in ("1", "0"):
            env = dict(os.environ, SPARSEPCE_PURE_PYTHON=pure)
            out = subprocess.run([sys.executable, "-c", BUILD_SNIPPET], env=env,
                                 capture_output=True, text=True, check=True)
            print(" ", out.stdout.strip())


if __name__ == "__main__":
    main()
