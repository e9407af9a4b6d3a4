"""Time the numba kernels against the pure-NumPy fallback.

Each path runs in its own interpreter because the flag is read at import:

    python3 benchmarks/bench_kernels.py --instances 30 --repeat 3

The first call in the JIT worker is a warm-up so compile time (or cache
loading) is excluded.  Timings are wall-clock minima over ``--repeat``.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads(count):
    import numpy as np

    from banach_mni import LossSpec, RegProblem, Regularizer, L1, basis_pursuit, make_instances, solve_mni_l1, solve_reg
    from banach_mni.report import IterationConfig

    instances = make_instances(count, seed=11)
    cfg = IterationConfig()

    def mni_l1():
        for inst in instances:
            solve_mni_l1(inst.op, inst.y, cfg)

    def lasso():
        for inst in instances:
            solve_reg(RegProblem(inst.op, L1, LossSpec("square", inst.y), 0.1, Regularizer.identity()), cfg)

    def hinge_pdhg():
        for inst in instances:
            labels = np.where(inst.y >= 0, 1.0, -1.0)
            solve_reg(RegProblem(inst.op, L1, LossSpec("hinge", labels), 0.1, Regularizer.identity()), cfg)

    def simplex():
        for inst in instances:
            basis_pursuit(inst.op, inst.y)

    return {"mni_l1_pdhg": mni_l1, "lasso_fista": lasso, "hinge_pdhg": hinge_pdhg, "simplex": simplex}


def worker(count, repeat):
    from banach_mni import JIT_ENABLED

    out = {"jit": JIT_ENABLED}
    for name, fn in _workloads(count).items():
        fn()  # warm-up
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out[name] = best
    print(json.dumps(out))


def run_path(disable_jit, count, repeat):
    env = dict(os.environ)
    env.pop("BANACH_MNI_DISABLE_JIT", None)
    if disable_jit:
        env["BANACH_MNI_DISABLE_JIT"] = "1"
    proc = subprocess.run([sys.executable, __file__, "--worker", "--instances", str(count), "--repeat", str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=30)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.instances, args.repeat)
        return
    jit = run_path(False, args.instances, args.repeat)
    py = run_path(True, args.instances, args.repeat)
    print(f"{args.instances} random instances, best of {args.repeat}")
    print(f"{'workload':<14}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name in (k for k in jit if k != "jit"):
        print(f"{name:<14}{jit[name]:>12.4f}{py[name]:>12.4f}{py[name] / jit[name]:>9.1f}x")


if __name__ == "__main__":
    main()
