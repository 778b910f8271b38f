"""Verification oracles: exact statevector simulation, equivalence checking,
Monte Carlo success estimation, the brute-force optimality enumerator, and
report emission."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .circuit import Circuit, GateKind, build_circuit
from .codegen import CompiledCircuit
from .machine import DerivedTables, GridMachine, build_tables
from .optimal import (
    Infeasible,
    ProblemConfig,
    _InfeasibleSchedule,
    _junction_choices,
    _Scorer,
)

_SQRT2 = 1.0 / math.sqrt(2.0)
_GATE_MATRIX = {
    GateKind.H: np.array([[_SQRT2, _SQRT2], [_SQRT2, -_SQRT2]], dtype=complex),
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.SDG: np.array([[1, 0], [0, -1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=complex),
    GateKind.TDG: np.array([[1, 0], [0, np.exp(-1j * math.pi / 4)]], dtype=complex),
}

_MAX_SIM_QUBITS = 14


def _apply_single(state: np.ndarray, n: int, q: int, mat: np.ndarray) -> None:
    view = state.reshape(1 << (n - 1 - q), 2, 1 << q)
    a = view[:, 0, :].copy()
    b = view[:, 1, :].copy()
    view[:, 0, :] = mat[0, 0] * a + mat[0, 1] * b
    view[:, 1, :] = mat[1, 0] * a + mat[1, 1] * b


def _apply_cnot(state: np.ndarray, n: int, ctrl: int, tgt: int) -> None:
    view = state.reshape([2] * n)
    sel: list = [slice(None)] * n
    sel[n - 1 - ctrl] = 1
    sub = view[tuple(sel)]
    axis = (n - 1 - tgt) - (1 if n - 1 - ctrl < n - 1 - tgt else 0)
    sub[...] = np.flip(sub, axis=axis)


def _project(state: np.ndarray, n: int, q: int, bit: int) -> np.ndarray:
    out = state.copy()
    view = out.reshape(1 << (n - 1 - q), 2, 1 << q)
    view[:, 1 - bit, :] = 0.0
    return out


def statevector_sim(c: Circuit) -> dict[str, float]:
    """Exact output distribution over classical bitstrings (clbit 0 leftmost).

    Measurements branch the state instead of sampling, so the result is the
    exact joint marginal on the classical register. Unwritten clbits read 0.
    """
    n = c.num_qubits
    if n > _MAX_SIM_QUBITS:
        raise ValueError(f"{n} qubits exceed the {_MAX_SIM_QUBITS}-qubit simulation cap")
    init = np.zeros(1 << n, dtype=complex)
    init[0] = 1.0
    branches: list[tuple[np.ndarray, dict[int, int]]] = [(init, {})]
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            for state, _ in branches:
                _apply_cnot(state, n, g.operands[0], g.operands[1])
        elif g.kind is GateKind.MEASURE:
            q = g.operands[0]
            split: list[tuple[np.ndarray, dict[int, int]]] = []
            for state, bits in branches:
                for bit in (0, 1):
                    proj = _project(state, n, q, bit)
                    if float(np.vdot(proj, proj).real) > 1e-30:
                        split.append((proj, {**bits, g.classical_target: bit}))
            branches = split
        else:
            mat = _GATE_MATRIX[g.kind]
            for state, _ in branches:
                _apply_single(state, n, g.operands[0], mat)
    dist: dict[str, float] = {}
    for state, bits in branches:
        p = float(np.vdot(state, state).real)
        key = "".join(str(bits.get(i, 0)) for i in range(c.num_clbits))
        dist[key] = dist.get(key, 0.0) + p
    return dist


class EquivalenceResult(NamedTuple):
    passed: bool
    max_deviation: float
    total_variation: float


def compiled_as_circuit(cc: CompiledCircuit) -> Circuit:
    """Reinterpret the physical stream as a logical circuit on its active cells."""
    active = sorted({cell for pg in cc.expanded for cell in pg.hw_operands})
    if len(active) > _MAX_SIM_QUBITS:
        raise ValueError(f"{len(active)} active cells exceed the "
                         f"{_MAX_SIM_QUBITS}-qubit simulation cap")
    index = {cell: i for i, cell in enumerate(active)}
    ordered = sorted(range(len(cc.expanded)), key=lambda i: (cc.expanded[i].start, i))
    ops = []
    for i in ordered:
        pg = cc.expanded[i]
        operands = tuple(index[cell] for cell in pg.hw_operands)
        ops.append((pg.kind, operands, pg.clbit))
    return build_circuit(max(len(active), 1), cc.source.num_clbits, ops)


def equivalence_check(source: Circuit, cc: CompiledCircuit) -> EquivalenceResult:
    """Compare the source distribution against the expanded stream's.

    SWAP chains move state between cells, and every expanded MEASURE already
    targets the measured qubit's home cell with the source clbit, so simulating
    the stream literally (time order) yields a distribution directly comparable
    to the source's.
    """
    want = statevector_sim(source)
    got = statevector_sim(compiled_as_circuit(cc))
    keys = set(want) | set(got)
    diffs = [abs(want.get(k, 0.0) - got.get(k, 0.0)) for k in keys]
    tv = 0.5 * sum(diffs)
    return EquivalenceResult(tv <= 1e-9, max(diffs, default=0.0), tv)


def reliability_score(cc: CompiledCircuit, count_return_swaps: bool = False) -> float:
    """Product of per-gate success probabilities over routed CNOTs and readouts."""
    eps = cc.eps_strict if count_return_swaps else cc.eps_route
    score = 1.0
    for gid in sorted(eps):
        score *= eps[gid]
    return score


def monte_carlo_success(cc: CompiledCircuit, trials: int, seed: int, *,
                        m: GridMachine | None = None,
                        per_physical_gate: bool = False) -> tuple[float, float]:
    """Estimate end-to-end success probability by Bernoulli sampling.

    Default model: each routed CNOT (swaps included) and each readout is one
    event with its recorded ε. per_physical_gate instead draws one event per
    expanded CNOT/readout with per-edge ε (requires the machine).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if per_physical_gate:
        if m is None:
            raise ValueError("per-physical-gate mode needs the machine")
        eps = []
        for pg in cc.expanded:
            if pg.kind is GateKind.CNOT:
                eps.append(1.0 - m.edge_between(*pg.hw_operands).cnot_error)
            elif pg.kind is GateKind.MEASURE:
                eps.append(1.0 - m.qubits[pg.hw_operands[0]].readout_error)
    else:
        eps = [cc.per_gate_eps[g] for g in sorted(cc.per_gate_eps)]
    if not eps:
        return 1.0, 0.0
    rng = np.random.Generator(np.random.Philox(key=seed))
    fail = 1.0 - np.asarray(eps)
    hits = 0
    chunk = max(1, min(trials, 10_000_000 // len(eps)))
    done = 0
    while done < trials:
        rows = min(chunk, trials - done)
        u = rng.random((rows, len(eps)))
        hits += int(np.all(u >= fail, axis=1).sum())
        done += rows
    p = hits / trials
    return p, math.sqrt(p * (1.0 - p) / trials)


@dataclass(frozen=True)
class LeafRecord:
    cells: tuple[int, ...]
    junctions: tuple[int, ...]
    objective: float
    makespan: int


@dataclass(frozen=True)
class BruteForceResult:
    objective_value: float
    argmax: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]
    leaves: tuple[LeafRecord, ...] | None = None


_LEAF_BUDGET = 2_000_000


def brute_force_optimal(c: Circuit, m: GridMachine, cfg: ProblemConfig, *,
                        tables: DerivedTables | None = None,
                        collect_leaves: bool = False) -> BruteForceResult:
    """Exhaustive sweep of every injective placement x junction assignment,
    scored through the same leaf evaluator as solve_exact (objectives agree
    bitwise). argmax lists every assignment attaining the optimum."""
    nq, ncells = c.num_qubits, m.num_cells
    if nq > ncells:
        raise ValueError(f"{nq} program qubits exceed {ncells} hardware cells")
    n_cnots = sum(1 for g in c.gates if g.kind is GateKind.CNOT)
    size = math.perm(ncells, nq) * (2 ** n_cnots)
    if size > _LEAF_BUDGET:
        raise ValueError(f"instance too large: {size} assignments exceed the "
                         f"{_LEAF_BUDGET} enumeration budget")
    tables = tables if tables is not None else build_tables(m)
    scorer = _Scorer(c, m, tables, cfg)
    maximize = cfg.variant.value == "r-smt-star"
    cnots = [g for g in c.gates if g.kind is GateKind.CNOT]
    best = None
    argmax: list = []
    leaves: list[LeafRecord] = []
    for cells in itertools.permutations(range(ncells), nq):
        choices = [
            _junction_choices(m, tables, cfg,
                              cells[g.operands[0]], cells[g.operands[1]])
            for g in cnots
        ]
        for combo in itertools.product(*choices):
            try:
                obj, makespan = scorer.leaf(cells, combo)
            except _InfeasibleSchedule:
                continue
            if collect_leaves:
                leaves.append(LeafRecord(cells, combo, obj, makespan))
            if best is None or (obj > best if maximize else obj < best):
                best = obj
                argmax = [(cells, combo)]
            elif obj == best:
                argmax.append((cells, combo))
    if best is None:
        raise Infeasible("every placement violates a coherence deadline")
    return BruteForceResult(best, tuple(argmax),
                            tuple(leaves) if collect_leaves else None)


@dataclass(frozen=True)
class EvalReport:
    benchmark: str
    variant: str
    reliability: float
    mc_success: float
    stderr: float
    trials: int
    makespan: int
    swaps: int
    compile_time_s: float
    equivalence_passed: bool | None
    optimal: bool | None = None


_CSV_COLUMNS = ("benchmark", "variant", "reliability", "mc_success", "stderr",
                "makespan", "swaps", "compile_time_s")


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def write_report(reports: list[EvalReport], path: str) -> tuple[str, str]:
    """Write the fixed-column CSV and a full JSON dump next to each other.

    `path` may carry a .csv or .json suffix or none; both files share the stem.
    Returns (csv_path, json_path).
    """
    stem, ext = os.path.splitext(path)
    if ext not in (".csv", ".json"):
        stem = path
    csv_path, json_path = stem + ".csv", stem + ".json"
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(_CSV_COLUMNS)
    for r in reports:
        writer.writerow([r.benchmark, r.variant, repr(r.reliability),
                         repr(r.mc_success), repr(r.stderr), r.makespan,
                         r.swaps, repr(r.compile_time_s)])
    _atomic_write(csv_path, buf.getvalue())
    _atomic_write(json_path, json.dumps([asdict(r) for r in reports], indent=2) + "\n")
    return csv_path, json_path
