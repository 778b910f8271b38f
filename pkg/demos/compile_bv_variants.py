"""Compile one Bernstein-Vazirani circuit under every variant and compare.

Run: python3 demos/compile_bv_variants.py
"""

from nisqc import (
    HeuristicConfig, ProblemConfig, build_tables, expand, gen_bv,
    heuristic_compile, load_calibration, reliability_score, solve_exact,
    synth_calibration,
)

machine = load_calibration(synth_calibration(3, 3, seed=7))
tables = build_tables(machine)
circuit = gen_bv(4, "101")

rows = []
for variant in ("t-smt", "t-smt-star", "r-smt-star"):
    cfg = ProblemConfig(variant=variant)
    cc = expand(solve_exact(circuit, machine, cfg, tables=tables), circuit, machine)
    rows.append((variant, cc))
for policy in ("greedy-v", "greedy-e"):
    sol = heuristic_compile(circuit, machine, tables, HeuristicConfig(policy=policy))
    rows.append((policy, expand(sol, circuit, machine)))

print(f"{'variant':<12} {'optimal':<8} {'swaps':<6} {'makespan':<9} reliability")
for variant, cc in rows:
    print(f"{variant:<12} {str(cc.optimal).lower():<8} {cc.swap_count:<6} "
          f"{cc.makespan:<9} {reliability_score(cc):.6f}")

best = max(rows, key=lambda r: reliability_score(r[1]))
print(f"\nmost reliable: {best[0]}, placement {best[1].placement}")
