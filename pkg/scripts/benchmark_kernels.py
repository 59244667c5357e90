#!/usr/bin/env python3
"""Compare the compiled traversal kernel against its pure-Python twin.

Runs the same replica batch through both implementations, first checking
that every per-depth statistic agrees bit for bit (the kernels are exact
twins by construction), then timing them.

Usage:
    python3 scripts/benchmark_kernels.py [--depth 16] [--replicas 40]
"""

import argparse
import os
import sys
import time
from dataclasses import replace

import numpy as np

from brwlab.model import ComplexParam, binary_gaussian
from brwlab.regimes import solve_theta_star
from brwlab.simulator import SimConfig, active_kernel, run_replica


def build_config(depth: int, seed: int) -> tuple:
    law = binary_gaussian()
    tstar = solve_theta_star(law).theta_star
    params = (
        ComplexParam.for_law(law, 0.3 + 0.2j),
        ComplexParam.for_law(law, 0.9 + 0.2j),
    )
    cfg = SimConfig(
        depth_n=depth,
        extra_m=0,
        params=params,
        tip_k=16,
        master_seed=seed,
        tstar=tstar,
    )
    return law, cfg


def run_batch(law, cfg, count: int, pure: bool) -> tuple:
    os.environ["BRWLAB_PURE_PYTHON"] = "1" if pure else ""
    results = []
    nodes = 0
    start = time.perf_counter()
    for index in range(count):
        rep = run_replica(law, replace(cfg, replica_index=index))
        nodes += int(rep.population.sum())
        results.append(rep)
    elapsed = time.perf_counter() - start
    return results, nodes, elapsed


def check_twins(law, cfg, count: int) -> None:
    pure, _, _ = run_batch(law, cfg, count, pure=True)
    fast, _, _ = run_batch(law, cfg, count, pure=False)
    for index, (a, b) in enumerate(zip(pure, fast)):
        for field in ("z", "w", "dw", "min_v", "sup_weight", "population",
                      "tips_v", "tips_z"):
            lhs, rhs = getattr(a, field), getattr(b, field)
            if not np.array_equal(lhs, rhs, equal_nan=True):
                raise SystemExit(
                    f"kernel mismatch in replica {index}, field {field}")
    print(f"twin check: {count} replicas agree bit for bit")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--depth", type=int, default=16)
    parser.add_argument("--replicas", type=int, default=40)
    parser.add_argument("--seed", type=int, default=20260816)
    args = parser.parse_args()

    os.environ["BRWLAB_PURE_PYTHON"] = ""
    if active_kernel() != "compiled":
        print("compiled kernel unavailable; build the extension first "
              "(pip install -e . --no-build-isolation)", file=sys.stderr)
        return 1

    law, cfg = build_config(args.depth, args.seed)
    check_twins(law, cfg, min(args.replicas, 5))

    _, nodes_p, sec_p = run_batch(law, cfg, args.replicas, pure=True)
    _, nodes_c, sec_c = run_batch(law, cfg, args.replicas, pure=False)
    assert nodes_p == nodes_c

    print(f"depth {args.depth}, {args.replicas} replicas, "
          f"{nodes_p:,} nodes total")
    print(f"pure python : {sec_p:8.3f} s  ({nodes_p / sec_p:12,.0f} nodes/s)")
    print(f"compiled    : {sec_c:8.3f} s  ({nodes_c / sec_c:12,.0f} nodes/s)")
    print(f"speedup     : {sec_p / sec_c:8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
