#!/usr/bin/env python3
"""Benchmark the compiled transient kernel against the pure-Python fallback.

Runs the full activation + precharge pair for the reference organizations
under both backends and reports per-simulation wall time and speedup.
Run from a build with the extension compiled:

    python benchmarks/bench_transient.py [--repeats 5]
"""

import argparse
import os
import statistics
import subprocess
import sys
import time


def run_suite(repeats: int) -> dict:
    from m3dram import backend_name
    from m3dram.circuit import (
        BitlineElectricals,
        CellModel,
        SenseAmpModel,
        SolverConfig,
        simulate_activation,
        simulate_precharge,
    )
    from m3dram.geometry import OrgSpec, TechNode

    tech = TechNode()
    cell = CellModel()
    sa = SenseAmpModel()
    cfg = SolverConfig()
    orgs = [("ddr4-512", 512, False), ("m3d-512", 512, True),
            ("m3d-128", 128, True)]

    results = {}
    for name, cells, m3d in orgs:
        spec = OrgSpec(name, cells, m3d)
        bl = BitlineElectricals.from_org(spec)
        times = []
        t_rcd = 0.0
        for _ in range(repeats):
            t0 = time.perf_counter()
            act = simulate_activation(cell, bl, sa, tech, cfg, org=name)
            simulate_precharge(cell, bl, sa, tech, cfg, org=name)
            times.append(time.perf_counter() - t0)
            t_rcd = act.t_rcd_s
        results[name] = (statistics.median(times), t_rcd)
    return {"backend": backend_name(), "orgs": results}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--single", action="store_true",
                        help="run only the current backend (internal)")
    args = parser.parse_args()

    if args.single:
        out = run_suite(args.repeats)
        print(f"backend={out['backend']}")
        for org, (t, t_rcd) in out["orgs"].items():
            print(f"{org} {t:.6f} {t_rcd:.6e}")
        return

    # run each backend in a fresh interpreter so import-time selection applies
    rows = {}
    for env_val, label in (("0", "compiled"), ("1", "python")):
        env = dict(os.environ, M3DRAM_FORCE_PY=env_val)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__),
             "--single", "--repeats", str(args.repeats)],
            capture_output=True, text=True, env=env, check=True,
        )
        lines = proc.stdout.strip().splitlines()
        actual = lines[0].split("=", 1)[1]
        if label == "compiled" and actual != "compiled":
            print("note: compiled extension unavailable; comparing python "
                  "against itself", file=sys.stderr)
        rows[label] = {}
        for line in lines[1:]:
            org, t, t_rcd = line.split()
            rows[label][org] = (float(t), float(t_rcd))

    print(f"{'org':10s} {'compiled (ms)':>14s} {'python (ms)':>12s} "
          f"{'speedup':>8s}  tRCD agreement")
    for org in rows["compiled"]:
        tc, rcd_c = rows["compiled"][org]
        tp, rcd_p = rows["python"][org]
        agree = abs(rcd_c - rcd_p) / rcd_c
        print(f"{org:10s} {tc * 1e3:14.2f} {tp * 1e3:12.1f} "
              f"{tp / tc:8.1f}x  |d(tRCD)|/tRCD = {agree:.2e}")


if __name__ == "__main__":
    main()
