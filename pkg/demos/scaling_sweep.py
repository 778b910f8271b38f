"""Greedy-mapper wall-clock scaling on seeded random circuits.

Run: python3 demos/scaling_sweep.py
"""

import math
import time

from nisqc import (
    HeuristicConfig, build_tables, expand, gen_random, heuristic_compile,
    load_calibration, reliability_score, synth_calibration,
)

print(f"{'qubits':<7} {'gates':<6} {'grid':<6} {'seconds':<8} {'swaps':<6} reliability")
for nq, ngates in ((8, 64), (16, 128), (32, 512), (64, 1024), (128, 2048)):
    side = math.isqrt(nq - 1) + 1
    machine = load_calibration(synth_calibration(side, side, seed=3, t2=10 ** 6))
    tables = build_tables(machine)
    circuit = gen_random(nq, ngates, seed=nq)
    t0 = time.perf_counter()
    sol = heuristic_compile(circuit, machine, tables,
                            HeuristicConfig(policy="greedy-e"))
    dt = time.perf_counter() - t0
    cc = expand(sol, circuit, machine)
    print(f"{nq:<7} {ngates:<6} {side}x{side:<4} {dt:<8.3f} {cc.swap_count:<6} "
          f"{reliability_score(cc):.3e}")
