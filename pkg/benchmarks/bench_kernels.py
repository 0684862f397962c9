"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from SQZCOOL_DISABLE_NUMBA.

    python benchmarks/bench_kernels.py [--points N] [--repeat K]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from sqzcool import _kernels as K
from sqzcool import Model, Method, optimize_nst
from sqzcool.sweep import default_bounds

n, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = np.random.default_rng(0)
rows = np.column_stack([
    rng.uniform(0.05, 5.0, n), rng.uniform(0.2, 3.0, n), rng.uniform(0.0, 0.3, n),
    rng.uniform(0.0, 0.5, n), rng.uniform(0.0, np.pi, n), np.full(n, 1e-3),
    np.full(n, 10.0), np.ones(n)])

t0 = time.perf_counter()
K.nst_internal_batch(rows[:2])  # includes JIT compilation or cache load
warm = time.perf_counter() - t0

def best(f):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        f()
        times.append(time.perf_counter() - t0)
    return min(times)

batch = best(lambda: K.nst_internal_batch(rows))
fixed = {"kappa_a": 10.0}
opt = best(lambda: optimize_nst(Model.INTERNAL, fixed, default_bounds(Model.INTERNAL, fixed),
                                starts=4, method=Method.LYAP))
json.dump({"numba": K.USING_NUMBA, "warmup_s": warm, "batch_s": batch,
           "per_point_us": 1e6 * batch / n, "optimize_s": opt}, sys.stdout)
"""


def run(disable, points, repeat):
    env = dict(os.environ)
    env.pop("SQZCOOL_DISABLE_NUMBA", None)
    if disable:
        env["SQZCOOL_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKER, str(points), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    results = [run(False, args.points, args.repeat), run(True, args.points, args.repeat)]
    print(f"{'backend':<8} {'warm-up s':>10} {'batch s':>10} {'us/point':>10} {'optimize s':>11}")
    for r in results:
        name = "numba" if r["numba"] else "numpy"
        print(f"{name:<8} {r['warmup_s']:>10.3f} {r['batch_s']:>10.4f} "
              f"{r['per_point_us']:>10.2f} {r['optimize_s']:>11.3f}")
    fast, slow = results
    if fast["numba"]:
        print(f"speed-up: batch x{slow['batch_s'] / fast['batch_s']:.1f}, "
              f"optimize x{slow['optimize_s'] / fast['optimize_s']:.1f}")
    else:
        print("numba is not installed; both runs used the numpy path")


if __name__ == "__main__":
    main()
