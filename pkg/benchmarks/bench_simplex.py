"""Compare the compiled simplex kernel with the numpy fallback.

Two measurements:
  * raw kernel time on random feasible LPs of growing size;
  * end-to-end BaB time on generated instances, one process per kernel
    (the kernel is chosen at import, so the fallback needs RELUBAB_PURE_PYTHON).

    python3 benchmarks/bench_simplex.py [--sizes 10 20 40 80] [--instances 10]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from relubab import _simplex_py

try:
    from relubab import _simplex
except ImportError:
    _simplex = None


def random_lp(rng, n):
    m = n
    A = rng.uniform(-1, 1, (m, n))
    x0 = rng.uniform(0, 1, n)
    b = A @ x0 + rng.uniform(0.1, 1, m)
    # box rows keep the problem bounded
    A = np.vstack([A, np.eye(n)])
    b = np.concatenate([b, np.full(n, 2.0)])
    return A, b, rng.normal(size=n)


def time_kernel(kernel, problems, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for A, b, c in problems:
            kernel.solve_standard(A, b, c)
        best = min(best, time.perf_counter() - t0)
    return best / len(problems)


def kernel_table(sizes, count):
    rng = np.random.default_rng(0)
    print(f"{'n':>5} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>8}")
    for n in sizes:
        problems = [random_lp(rng, n) for _ in range(count)]
        tp = time_kernel(_simplex_py, problems)
        if _simplex is None:
            print(f"{n:>5} {tp * 1e3:>12.3f} {'n/a':>14}")
            continue
        tc = time_kernel(_simplex, problems)
        for A, b, c in problems:
            sp, sc = _simplex_py.solve_standard(A, b, c), _simplex.solve_standard(A, b, c)
            assert sp[0] == sc[0] and np.array_equal(sp[1], sc[1]), "kernels disagree"
        print(f"{n:>5} {tp * 1e3:>12.3f} {tc * 1e3:>14.3f} {tp / tc:>8.1f}")


_CHILD = """
import json, sys, tempfile, time
from relubab import numerics
from relubab.harness import gen_suite
from relubab.search import SearchConfig, run_bab
with tempfile.TemporaryDirectory() as d:
    recs = gen_suite(7, int(sys.argv[1]), d)
    problems = [r.load() for r in recs]
    t0 = time.perf_counter()
    sizes = [run_bab(p, SearchConfig(timeout=60)).stats.tree_size for p in problems]
    print(json.dumps({"kernel": numerics.KERNEL, "seconds": time.perf_counter() - t0, "nodes": sum(sizes)}))
"""


def end_to_end(count):
    results = {}
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("RELUBAB_PURE_PYTHON", None)
        if pure:
            env["RELUBAB_PURE_PYTHON"] = "1"
        out = subprocess.run([sys.executable, "-c", _CHILD, str(count)], env=env,
                             capture_output=True, text=True, check=True)
        doc = json.loads(out.stdout.strip().splitlines()[-1])
        results[doc["kernel"]] = doc
    for name, doc in results.items():
        print(f"{name:>9}: {doc['seconds']:.2f} s for {doc['nodes']} BaB nodes")
    if len(results) == 2:
        print(f"speedup: {results['python']['seconds'] / results['compiled']['seconds']:.1f}x")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 20, 40, 80])
    ap.add_argument("--count", type=int, default=20, help="LPs per size")
    ap.add_argument("--instances", type=int, default=10, help="generated instances end to end")
    args = ap.parse_args()
    kernel_table(args.sizes, args.count)
    print()
    end_to_end(args.instances)


if __name__ == "__main__":
    main()
