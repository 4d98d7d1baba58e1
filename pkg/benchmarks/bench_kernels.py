#!/usr/bin/env python3
"""Throughput of the compiled simulation kernel vs the numpy fallback.

The two paths run the same source; numba is toggled per process via the
``ETCSIM_NO_NUMBA`` environment variable, so this script re-launches itself
once per mode and reports steps/second for a few representative loops.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

CASES = [
    # (preset, t_final, dt) — step counts span 50k..500k
    ("example1", 5.0, 1e-4),
    ("example2", 25.0, 1e-4),
    ("mip", 5.0, 1e-5),
]


def run_cases(repeat: int):
    from etcsim import kernels
    from etcsim.config import setup_from_preset
    from etcsim.sim import SimConfig, simulate_event_triggered

    mode = "numba" if kernels.NUMBA_ENABLED else "numpy-fallback"
    rows = []
    for preset, t_final, dt in CASES:
        s = setup_from_preset(preset)
        cfg = SimConfig(t_final=t_final, x0=s.sim.x0, dt=dt,
                        record_stride=1000,
                        validity_radius=s.sim.validity_radius)
        simulate_event_triggered(s.model, s.certificate, s.rule, cfg)  # warm
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            r = simulate_event_triggered(s.model, s.certificate, s.rule, cfg)
            best = min(best, time.perf_counter() - t0)
        steps = cfg.n_steps
        rows.append({"preset": preset, "mode": mode, "steps": steps,
                     "seconds": best, "steps_per_s": steps / best,
                     "events": r.events.count})
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--single-mode", action="store_true",
                    help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.single_mode:
        print(json.dumps(run_cases(args.repeat)))
        return

    results = []
    for flag in ("0", "1"):
        env = dict(os.environ, ETCSIM_NO_NUMBA=flag)
        out = subprocess.run(
            [sys.executable, __file__, "--single-mode",
             "--repeat", str(args.repeat)],
            capture_output=True, text=True, env=env, check=True)
        results.extend(json.loads(out.stdout.splitlines()[-1]))

    print(f"{'preset':10s} {'mode':16s} {'steps':>9s} {'time [s]':>10s} "
          f"{'steps/s':>12s}")
    for row in results:
        print(f"{row['preset']:10s} {row['mode']:16s} {row['steps']:9d} "
              f"{row['seconds']:10.3f} {row['steps_per_s']:12.0f}")
    by_preset = {}
    for row in results:
        by_preset.setdefault(row["preset"], {})[row["mode"]] = row
    print()
    for preset, modes in by_preset.items():
        if len(modes) == 2:
            speedup = (modes["numpy-fallback"]["steps_per_s"]
                       / modes["numba"]["steps_per_s"])
            print(f"{preset}: numba is {1 / speedup:.0f}x faster")


if __name__ == "__main__":
    main()
