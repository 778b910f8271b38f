"""Command-line driver: compile circuits, evaluate records, compare variants,
sweep synthetic benchmarks, and generate inputs.

Exit codes: 0 success, 2 usage, 3 infeasible, 4 timeout without a solution,
1 any other error. Failures print one JSON object on stderr.
"""

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time

from .circuit import Circuit, ParseError, gen_bv, gen_random, gen_toffoli, parse_circuit, to_qasm
from .codegen import CodegenError, CompiledCircuit, emit_qasm, expand, from_record, to_record
from .evaluate import (
    EvalReport,
    _atomic_write,
    equivalence_check,
    monte_carlo_success,
    reliability_score,
    write_report,
)
from .heuristic import HeuristicConfig, heuristic_compile
from .machine import CalibrationError, GridMachine, build_tables, load_calibration, synth_calibration
from .optimal import Infeasible, ProblemConfig, Solution, SolverTimeout, emit_smtlib, solve_exact

EXACT_VARIANTS = ("t-smt", "t-smt-star", "r-smt-star")
GREEDY_VARIANTS = ("greedy-v", "greedy-e")
ALL_VARIANTS = EXACT_VARIANTS + GREEDY_VARIANTS
RELIABILITY_VARIANTS = ("r-smt-star",) + GREEDY_VARIANTS
DEFAULT_EXACT_TIME_LIMIT = 60.0


class UsageError(ValueError):
    pass


def _fail(code: int, exc: BaseException) -> int:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(doc), file=sys.stderr)
    return code


def _thread_cap() -> int:
    raw = os.environ.get("NISQC_THREADS", "").strip()
    if not raw:
        return max(1, os.cpu_count() or 1)
    try:
        cap = int(raw)
    except ValueError as exc:
        raise UsageError(f"NISQC_THREADS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise UsageError("NISQC_THREADS must be >= 1")
    return cap


def _stem(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _read(path: str) -> str:
    with open(path) as f:
        return f.read()


def _load_circuit(path: str) -> Circuit:
    fmt = "json" if path.endswith(".json") else "qasm"
    return parse_circuit(_read(path), format=fmt)


def _load_machine(path: str) -> GridMachine:
    return load_calibration(_read(path))


def _compile_one(c: Circuit, m: GridMachine, tables, variant: str, args) -> Solution:
    """Shared flag validation + dispatch for compile/compare/bench."""
    omega = 0.5 if args.omega is None else args.omega
    if args.omega is not None and variant not in RELIABILITY_VARIANTS:
        raise UsageError(f"--omega only applies to {', '.join(RELIABILITY_VARIANTS)}")
    if variant in GREEDY_VARIANTS:
        if getattr(args, "routing", None):
            raise UsageError("greedy variants always route along best paths; "
                             "--routing only applies to exact variants")
        if getattr(args, "emit_smtlib", None):
            raise UsageError("--emit-smtlib only applies to exact variants")
        try:
            cfg = HeuristicConfig(policy=variant, omega=omega,
                                  count_return_swaps=args.count_return_swaps)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        return heuristic_compile(c, m, tables, cfg)
    limit = DEFAULT_EXACT_TIME_LIMIT if args.time_limit is None else args.time_limit
    try:
        cfg = ProblemConfig(variant=variant, routing=getattr(args, "routing", None),
                            omega=omega, count_return_swaps=args.count_return_swaps,
                            time_limit=limit)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if getattr(args, "emit_smtlib", None):
        _atomic_write(args.emit_smtlib, emit_smtlib(c, m, cfg))
    return solve_exact(c, m, cfg, tables=tables)


def _equivalence_or_none(c: Circuit, cc: CompiledCircuit):
    active = {cell for pg in cc.expanded for cell in pg.hw_operands}
    if c.num_qubits > 14 or len(active) > 14:
        return None
    return equivalence_check(c, cc).passed


def _evaluate_record(cc: CompiledCircuit, benchmark: str, trials: int, seed: int,
                     compile_time_s: float, optimal: bool | None) -> EvalReport:
    p, se = monte_carlo_success(cc, trials, seed)
    return EvalReport(
        benchmark=benchmark,
        variant=cc.variant,
        reliability=reliability_score(cc, cc.count_return_swaps),
        mc_success=p,
        stderr=se,
        trials=trials,
        makespan=cc.makespan,
        swaps=cc.swap_count,
        compile_time_s=compile_time_s,
        equivalence_passed=_equivalence_or_none(cc.source, cc),
        optimal=optimal,
    )


# ----------------------------------------------------------- subcommands ---

def cmd_compile(args) -> int:
    c = _load_circuit(args.circuit)
    m = _load_machine(args.calibration)
    tables = build_tables(m)
    t0 = time.perf_counter()
    sol = _compile_one(c, m, tables, args.variant, args)
    dt = time.perf_counter() - t0
    cc = expand(sol, c, m)
    rec = to_record(cc)
    rec["compile_time_s"] = dt
    stem = args.out or f"{_stem(args.circuit)}-{args.variant}"
    if stem.endswith((".json", ".qasm")):
        stem = stem[:-5]
    record_path, qasm_path = stem + ".json", stem + ".qasm"
    _atomic_write(record_path, json.dumps(rec, indent=2) + "\n")
    _atomic_write(qasm_path, emit_qasm(cc))
    print(f"wrote {record_path} and {qasm_path}: objective={cc.objective_value!r} "
          f"optimal={str(cc.optimal).lower()} swaps={cc.swap_count} "
          f"makespan={cc.makespan} compile_time_s={dt:.3f}")
    return 0


def cmd_evaluate(args) -> int:
    doc = json.loads(_read(args.record))
    m = _load_machine(args.calibration)
    cc = from_record(doc, m)
    report = _evaluate_record(cc, args.benchmark or _stem(args.record),
                              args.trials, args.seed,
                              doc.get("compile_time_s", 0.0), doc.get("optimal"))
    csv_path, json_path = write_report([report], args.out or _stem(args.record) + "-eval")
    eq = {True: "pass", False: "FAIL", None: "skipped"}[report.equivalence_passed]
    print(f"wrote {csv_path} and {json_path}: reliability={report.reliability!r} "
          f"mc_success={report.mc_success!r} stderr={report.stderr:.6f} "
          f"equivalence={eq}")
    return 0


def cmd_compare(args) -> int:
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    if not variants:
        raise UsageError("--variants needs at least one variant")
    for v in variants:
        if v not in ALL_VARIANTS:
            raise UsageError(f"unknown variant {v!r}; choose from {', '.join(ALL_VARIANTS)}")
    cap = _thread_cap()
    c = _load_circuit(args.circuit)
    m = _load_machine(args.calibration)
    tables = build_tables(m)
    benchmark = _stem(args.circuit)

    def run(variant: str):
        t0 = time.perf_counter()
        sol = _compile_one(c, m, tables, variant, args)
        dt = time.perf_counter() - t0
        cc = expand(sol, c, m)
        return _evaluate_record(cc, benchmark, args.trials, args.seed, dt, sol.optimal)

    def run_safe(variant: str):
        try:
            return run(variant)
        except (Infeasible, SolverTimeout) as exc:
            return exc

    with concurrent.futures.ThreadPoolExecutor(min(cap, len(variants))) as pool:
        results = list(pool.map(run_safe, variants))
    rows = [r for r in results if isinstance(r, EvalReport)]
    first_error = next((r for r in results if not isinstance(r, EvalReport)), None)
    if first_error is not None:
        print(json.dumps({"error": type(first_error).__name__,
                          "message": str(first_error)}), file=sys.stderr)
    if not rows:
        return 3 if isinstance(first_error, Infeasible) else 4
    csv_path, json_path = write_report(rows, args.out or f"{benchmark}-compare")
    print(f"wrote {csv_path} and {json_path}: {len(rows)} variants")
    return 0


def _parse_sizes(text: str) -> list[tuple[int, int]]:
    sizes = []
    for part in text.split(","):
        part = part.strip()
        try:
            nq, ng = part.split(":")
            sizes.append((int(nq), int(ng)))
        except ValueError as exc:
            raise UsageError(f"bad --sizes entry {part!r}; expected QUBITS:GATES") from exc
    return sizes


def cmd_bench(args) -> int:
    sizes = _parse_sizes(args.sizes)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        if v not in ALL_VARIANTS:
            raise UsageError(f"unknown variant {v!r}; choose from {', '.join(ALL_VARIANTS)}")
    cap = _thread_cap()
    tasks = []
    for nq, ng in sizes:
        side = math.isqrt(nq - 1) + 1
        m = load_calibration(synth_calibration(side, side, args.seed, t2=10 ** 6))
        tables = build_tables(m)
        c = gen_random(nq, ng, args.seed)
        for variant in variants:
            tasks.append((f"rand-{nq}-{ng}", c, m, tables, variant))

    def run(task):
        benchmark, c, m, tables, variant = task
        t0 = time.perf_counter()
        try:
            sol = _compile_one(c, m, tables, variant, args)
        except (Infeasible, SolverTimeout):
            dt = time.perf_counter() - t0
            return EvalReport(benchmark=benchmark, variant=variant,
                              reliability=math.nan, mc_success=math.nan,
                              stderr=math.nan, trials=0, makespan=-1, swaps=-1,
                              compile_time_s=dt, equivalence_passed=None,
                              optimal=False)
        dt = time.perf_counter() - t0
        cc = expand(sol, c, m)
        return _evaluate_record(cc, benchmark, args.trials, args.seed, dt, sol.optimal)

    with concurrent.futures.ThreadPoolExecutor(min(cap, len(tasks))) as pool:
        rows = list(pool.map(run, tasks))
    csv_path, json_path = write_report(rows, args.out or "bench")
    print(f"wrote {csv_path} and {json_path}: {len(rows)} rows")
    return 0


def cmd_gen_circuit(args) -> int:
    if args.kind == "bv":
        secret = args.secret if args.secret is not None else "1" * (args.qubits - 1)
        c = gen_bv(args.qubits, secret)
    elif args.kind == "toffoli":
        c = gen_toffoli()
    else:
        c = gen_random(args.qubits, args.gates, args.seed)
    text = to_qasm(c)
    if args.out:
        _atomic_write(args.out, text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_cal(args) -> int:
    if args.mx < 1 or args.my < 1:
        raise UsageError(f"grid {args.mx}x{args.my} must be at least 1x1")
    doc = synth_calibration(args.mx, args.my, args.seed, t2=args.t2,
                            jitter_durations=args.jitter_durations)
    text = json.dumps(doc, indent=2) + "\n"
    if args.out:
        _atomic_write(args.out, text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------- parser ---

def _add_shared_compile_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--omega", type=float, default=None,
                   help="readout weight in the reliability objective (default 0.5)")
    p.add_argument("--count-return-swaps", action="store_true",
                   help="score the SWAPs that restore the placement too")
    p.add_argument("--time-limit", type=float, default=None, metavar="S",
                   help=f"exact-solver budget in seconds (default {DEFAULT_EXACT_TIME_LIMIT:g})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nisqc",
        description="Noise-adaptive compiler for grid-coupled NISQ machines.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("compile", help="map, route, and schedule one circuit")
    p.add_argument("circuit", help="OpenQASM 2.0 (.qasm) or JSON (.json) circuit")
    p.add_argument("calibration", help="calibration JSON")
    p.add_argument("--variant", required=True, choices=ALL_VARIANTS)
    p.add_argument("--routing", choices=["rr", "1bp"], default=None,
                   help="exact-variant routing (default: rr for duration, 1bp for reliability)")
    _add_shared_compile_flags(p)
    p.add_argument("--emit-smtlib", metavar="PATH", default=None,
                   help="also write the SMT-LIB 2 encoding (exact variants)")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="output stem for the record (.json) and program (.qasm)")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("evaluate", help="score a compilation record")
    p.add_argument("record", help="compilation record JSON from `nisqc compile`")
    p.add_argument("calibration", help="calibration JSON")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--benchmark", default=None, help="row label (default: record stem)")
    p.add_argument("--out", metavar="PATH", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="compile one circuit under several variants")
    p.add_argument("circuit")
    p.add_argument("calibration")
    p.add_argument("--variants", default=",".join(ALL_VARIANTS),
                   help="comma-separated variant list")
    p.add_argument("--routing", choices=["rr", "1bp"], default=None)
    _add_shared_compile_flags(p)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="scalability sweep over random circuits")
    p.add_argument("--sizes", default="4:16,8:64,16:128,32:512,64:1024,128:2048",
                   metavar="Q:G[,Q:G...]", help="qubit:gate sizes to sweep")
    p.add_argument("--variants", default="t-smt-star,r-smt-star,greedy-v,greedy-e")
    _add_shared_compile_flags(p)
    p.add_argument("--trials", type=int, default=1_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-circuit", help="write a benchmark circuit as QASM")
    p.add_argument("kind", choices=["bv", "toffoli", "random"])
    p.add_argument("--qubits", type=int, default=4)
    p.add_argument("--secret", default=None, help="BV hidden string (default all ones)")
    p.add_argument("--gates", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", default=None)
    p.set_defaults(func=cmd_gen_circuit)

    p = sub.add_parser("gen-cal", help="write a seeded synthetic calibration")
    p.add_argument("--mx", type=int, required=True)
    p.add_argument("--my", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t2", type=int, default=1000)
    p.add_argument("--jitter-durations", action="store_true")
    p.add_argument("--out", metavar="PATH", default=None)
    p.set_defaults(func=cmd_gen_cal)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail(2, exc)
    except Infeasible as exc:
        return _fail(3, exc)
    except SolverTimeout as exc:
        return _fail(4, exc)
    except (CalibrationError, ParseError, CodegenError, OSError, ValueError) as exc:
        return _fail(1, exc)


if __name__ == "__main__":
    sys.exit(main())
