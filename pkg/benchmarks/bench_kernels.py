#!/usr/bin/env python3
"""Compare the jit-compiled simulation kernel against the pure-numpy fallback.

Runs the same seeded workload twice in subprocesses, once normally and once
with MAW_NO_NUMBA=1, and reports activations/second for each.  The results
must match bit for bit; the script exits nonzero if they do not.

Usage: python3 benchmarks/bench_kernels.py [--w 100] [--runs 20]
"""

import argparse
import json
import os
import subprocess
import sys
import textwrap

WORKLOAD = textwrap.dedent(
    """
    import json, time
    from antcover.harness import ExperimentConfig, run_experiment

    cfg = ExperimentConfig(domain="maze", width={w}, height={w}, runs={runs}, seed=123)
    run_experiment(ExperimentConfig(domain="maze", width=21, height=21, runs=1, seed=1))  # warm the jit
    t0 = time.perf_counter()
    rep = run_experiment(cfg)
    dt = time.perf_counter() - t0
    print(json.dumps({{
        "seconds": dt,
        "activations": sum(r.steps for r in rep.results),
        "csv": rep.results_csv(),
    }}))
    """
)


def run(no_numba: bool, w: int, runs: int) -> dict:
    env = dict(os.environ)
    if no_numba:
        env["MAW_NO_NUMBA"] = "1"
    else:
        env.pop("MAW_NO_NUMBA", None)
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD.format(w=w, runs=runs)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--w", type=int, default=100, help="maze side length")
    ap.add_argument("--runs", type=int, default=20)
    args = ap.parse_args()

    jit = run(False, args.w, args.runs)
    fallback = run(True, args.w, args.runs)

    for name, res in (("jit", jit), ("fallback", fallback)):
        rate = res["activations"] / res["seconds"]
        print(f"{name:9s} {res['activations']:>10d} activations "
              f"in {res['seconds']:7.2f} s  ({rate:,.0f}/s)")
    print(f"speedup   {fallback['seconds'] / jit['seconds']:.1f}x")

    if jit["csv"] != fallback["csv"]:
        print("ERROR: jit and fallback results differ", file=sys.stderr)
        return 1
    print("results identical across backends")
    return 0


if __name__ == "__main__":
    sys.exit(main())
