"""Machine-independent circuit IR: gate list, dependency DAG, CNOT program graph."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class GateKind(Enum):
    H = "h"
    X = "x"
    Y = "y"
    Z = "z"
    S = "s"
    SDG = "sdg"
    T = "t"
    TDG = "tdg"
    CNOT = "cx"
    MEASURE = "measure"

    @property
    def n_qubits(self) -> int:
        return 2 if self is GateKind.CNOT else 1


# The random benchmark generator samples only these kinds.
RANDOM_GATE_KINDS = (
    GateKind.H,
    GateKind.X,
    GateKind.Y,
    GateKind.Z,
    GateKind.S,
    GateKind.T,
    GateKind.CNOT,
)

_SINGLE_QUBIT_NAMES = {k.value: k for k in GateKind if k.n_qubits == 1 and k is not GateKind.MEASURE}


class ParseError(ValueError):
    """Circuit source rejected; carries 1-based line and column."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Gate:
    id: int
    kind: GateKind
    operands: tuple[int, ...]
    classical_target: int | None = None


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    num_clbits: int
    gates: tuple[Gate, ...]

    def cnot_gates(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.kind is GateKind.CNOT)

    def measure_gates(self) -> tuple[Gate, ...]:
        return tuple(g for g in self.gates if g.kind is GateKind.MEASURE)


@dataclass(frozen=True)
class DependencyDag:
    edges: frozenset[tuple[int, int]]


@dataclass(frozen=True)
class ProgramGraph:
    nodes: tuple[int, ...]
    edges: dict[tuple[int, int], int] = field(default_factory=dict)
    vertex_degree: dict[int, int] = field(default_factory=dict)


def _validate_gate(kind: GateKind, operands: tuple[int, ...], num_qubits: int,
                   clbit: int | None, num_clbits: int, line: int, col: int) -> None:
    for q in operands:
        if not 0 <= q < num_qubits:
            raise ParseError(f"operand q[{q}] out of range (register size {num_qubits})", line, col)
    if kind is GateKind.CNOT and operands[0] == operands[1]:
        raise ParseError("CNOT operands distinct", line, col)
    if kind is GateKind.MEASURE:
        if clbit is None or not 0 <= clbit < num_clbits:
            raise ParseError(f"classical bit {clbit} out of range (register size {num_clbits})", line, col)


def build_circuit(num_qubits: int, num_clbits: int,
                  ops: list[tuple[GateKind, tuple[int, ...], int | None]]) -> Circuit:
    """Assemble a Circuit from (kind, operands[, classical_target]) tuples, assigning gate ids."""
    gates = []
    for i, op in enumerate(ops):
        kind, operands = GateKind(op[0]), op[1]
        clbit = op[2] if len(op) > 2 else None
        _validate_gate(kind, operands, num_qubits, clbit, num_clbits, line=i + 1, col=1)
        gates.append(Gate(id=i, kind=kind, operands=tuple(operands), classical_target=clbit))
    return Circuit(num_qubits=num_qubits, num_clbits=num_clbits, gates=tuple(gates))


_RE_QREG = re.compile(r"qreg\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_RE_CREG = re.compile(r"creg\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_RE_1Q = re.compile(r"([A-Za-z]+)\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_RE_CX = re.compile(
    r"cx\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]\s*,\s*([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")
_RE_MEASURE = re.compile(
    r"measure\s+([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]\s*->\s*([A-Za-z_][A-Za-z0-9_]*)\s*\[\s*(\d+)\s*\]$")


def _parse_qasm(text: str) -> Circuit:
    qreg: str | None = None
    creg: str | None = None
    num_qubits = 0
    num_clbits = 0
    ops: list[tuple[GateKind, tuple[int, ...], int | None]] = []
    gate_locs: list[tuple[int, int]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("//", 1)[0].strip()
        if not line:
            continue
        col = len(raw) - len(raw.lstrip()) + 1
        if not line.endswith(";"):
            raise ParseError("statement must end with ';'", lineno, col + len(line))
        stmt = line[:-1].strip()
        if stmt.startswith("OPENQASM"):
            continue
        m = _RE_QREG.match(stmt)
        if m:
            if qreg is not None:
                raise ParseError("duplicate qreg declaration", lineno, col)
            qreg, num_qubits = m.group(1), int(m.group(2))
            continue
        m = _RE_CREG.match(stmt)
        if m:
            if creg is not None:
                raise ParseError("duplicate creg declaration", lineno, col)
            creg, num_clbits = m.group(1), int(m.group(2))
            continue
        m = _RE_CX.match(stmt)
        if m:
            if qreg is None:
                raise ParseError("gate before qreg declaration", lineno, col)
            if m.group(1) != qreg or m.group(3) != qreg:
                raise ParseError(f"unknown register '{m.group(1)}'", lineno, col)
            ops.append((GateKind.CNOT, (int(m.group(2)), int(m.group(4))), None))
            gate_locs.append((lineno, col))
            continue
        m = _RE_MEASURE.match(stmt)
        if m:
            if qreg is None:
                raise ParseError("gate before qreg declaration", lineno, col)
            if m.group(1) != qreg:
                raise ParseError(f"unknown register '{m.group(1)}'", lineno, col)
            if creg is None or m.group(3) != creg:
                raise ParseError(f"unknown classical register '{m.group(3)}'", lineno, col)
            ops.append((GateKind.MEASURE, (int(m.group(2)),), int(m.group(4))))
            gate_locs.append((lineno, col))
            continue
        m = _RE_1Q.match(stmt)
        if m:
            name = m.group(1)
            if name not in _SINGLE_QUBIT_NAMES:
                raise ParseError(f"unknown gate kind '{name}'", lineno, col)
            if qreg is None:
                raise ParseError("gate before qreg declaration", lineno, col)
            if m.group(2) != qreg:
                raise ParseError(f"unknown register '{m.group(2)}'", lineno, col)
            ops.append((_SINGLE_QUBIT_NAMES[name], (int(m.group(3)),), None))
            gate_locs.append((lineno, col))
            continue
        raise ParseError(f"cannot parse statement '{stmt}'", lineno, col)

    if qreg is None:
        raise ParseError("missing qreg declaration", 1, 1)
    gates = []
    for i, ((kind, operands, clbit), (lineno, col)) in enumerate(zip(ops, gate_locs)):
        _validate_gate(kind, operands, num_qubits, clbit, num_clbits, lineno, col)
        gates.append(Gate(id=i, kind=kind, operands=operands, classical_target=clbit))
    return Circuit(num_qubits=num_qubits, num_clbits=num_clbits, gates=tuple(gates))


def _parse_json(text: str) -> Circuit:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    if not isinstance(doc, dict) or "num_qubits" not in doc or "gates" not in doc:
        raise ParseError("circuit JSON needs num_qubits and gates", 1, 1)
    num_qubits = int(doc["num_qubits"])
    num_clbits = int(doc.get("num_clbits", 0))
    kind_by_name = {k.value: k for k in GateKind}
    ops: list[tuple[GateKind, tuple[int, ...], int | None]] = []
    for i, entry in enumerate(doc["gates"]):
        name = entry.get("kind")
        if name not in kind_by_name:
            raise ParseError(f"unknown gate kind '{name}' at gates[{i}]", 1, 1)
        kind = kind_by_name[name]
        operands = tuple(int(q) for q in entry["operands"])
        if len(operands) != kind.n_qubits:
            raise ParseError(f"gate '{name}' takes {kind.n_qubits} operand(s) at gates[{i}]", 1, 1)
        clbit = entry.get("clbit")
        ops.append((kind, operands, None if clbit is None else int(clbit)))
    return build_circuit(num_qubits, num_clbits, ops)


def parse_circuit(text: str, format: str = "qasm") -> Circuit:
    """Parse circuit source in the qasm subset or the JSON layout.

    Args:
        text: circuit source.
        format: "qasm" or "json".
    """
    if format == "qasm":
        return _parse_qasm(text)
    if format == "json":
        return _parse_json(text)
    raise ValueError(f"unknown circuit format '{format}'")


def to_qasm(c: Circuit, qreg: str = "q", creg: str = "c") -> str:
    lines = ["OPENQASM 2.0;", f"qreg {qreg}[{c.num_qubits}];"]
    if c.num_clbits:
        lines.append(f"creg {creg}[{c.num_clbits}];")
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            lines.append(f"cx {qreg}[{g.operands[0]}],{qreg}[{g.operands[1]}];")
        elif g.kind is GateKind.MEASURE:
            lines.append(f"measure {qreg}[{g.operands[0]}] -> {creg}[{g.classical_target}];")
        else:
            lines.append(f"{g.kind.value} {qreg}[{g.operands[0]}];")
    return "\n".join(lines) + "\n"


def to_json(c: Circuit) -> str:
    gates = []
    for g in c.gates:
        entry: dict = {"kind": g.kind.value, "operands": list(g.operands)}
        if g.classical_target is not None:
            entry["clbit"] = g.classical_target
        gates.append(entry)
    return json.dumps({"num_qubits": c.num_qubits, "num_clbits": c.num_clbits, "gates": gates})


def build_dag(c: Circuit) -> DependencyDag:
    """Per-qubit last-writer chaining; every pair of touching gates is ordered."""
    edges: set[tuple[int, int]] = set()
    last: dict[int, int] = {}
    for g in c.gates:
        for q in g.operands:
            if q in last:
                edges.add((last[q], g.id))
            last[q] = g.id
    return DependencyDag(edges=frozenset(edges))


def predecessor_lists(c: Circuit) -> list[list[int]]:
    """Direct DAG predecessors per gate id, each list sorted ascending."""
    preds: list[list[int]] = [[] for _ in c.gates]
    for g1, g2 in sorted(build_dag(c).edges):
        preds[g2].append(g1)
    return preds


def build_program_graph(c: Circuit) -> ProgramGraph:
    edges: dict[tuple[int, int], int] = {}
    degree = {q: 0 for q in range(c.num_qubits)}
    for g in c.gates:
        if g.kind is not GateKind.CNOT:
            continue
        a, b = sorted(g.operands)
        edges[(a, b)] = edges.get((a, b), 0) + 1
        degree[a] += 1
        degree[b] += 1
    return ProgramGraph(nodes=tuple(range(c.num_qubits)), edges=edges, vertex_degree=degree)


def gen_bv(n: int, s: str) -> Circuit:
    """Bernstein-Vazirani circuit for hidden string s over n-1 data qubits plus one ancilla."""
    if len(s) != n - 1:
        raise ValueError(f"hidden string length {len(s)} != {n - 1}")
    if set(s) - {"0", "1"}:
        raise ValueError("hidden string must be over {0,1}")
    ancilla = n - 1
    ops: list[tuple[GateKind, tuple[int, ...], int | None]] = [(GateKind.X, (ancilla,), None)]
    ops += [(GateKind.H, (q,), None) for q in range(n)]
    ops += [(GateKind.CNOT, (i, ancilla), None) for i in range(n - 1) if s[i] == "1"]
    ops += [(GateKind.H, (q,), None) for q in range(n - 1)]
    ops += [(GateKind.MEASURE, (q,), q) for q in range(n - 1)]
    return build_circuit(n, n - 1, ops)


def gen_toffoli() -> Circuit:
    """Toffoli on qubits (0, 1) controlling 2, decomposed over {H, T, TDG, CNOT}, all qubits measured."""
    ops: list[tuple[GateKind, tuple[int, ...], int | None]] = [
        (GateKind.H, (2,), None),
        (GateKind.CNOT, (1, 2), None),
        (GateKind.TDG, (2,), None),
        (GateKind.CNOT, (0, 2), None),
        (GateKind.T, (2,), None),
        (GateKind.CNOT, (1, 2), None),
        (GateKind.TDG, (2,), None),
        (GateKind.CNOT, (0, 2), None),
        (GateKind.T, (1,), None),
        (GateKind.T, (2,), None),
        (GateKind.H, (2,), None),
        (GateKind.CNOT, (0, 1), None),
        (GateKind.T, (0,), None),
        (GateKind.TDG, (1,), None),
        (GateKind.CNOT, (0, 1), None),
        (GateKind.MEASURE, (0,), 0),
        (GateKind.MEASURE, (1,), 1),
        (GateKind.MEASURE, (2,), 2),
    ]
    return build_circuit(3, 3, ops)


def gen_random(num_qubits: int, num_gates: int, seed: int) -> Circuit:
    """Random benchmark: kinds uniform over the 7-kind set, operands uniform without replacement."""
    if num_qubits < 2:
        raise ValueError("need at least 2 qubits")
    rng = np.random.default_rng(seed)
    ops: list[tuple[GateKind, tuple[int, ...], int | None]] = []
    for _ in range(num_gates):
        kind = RANDOM_GATE_KINDS[int(rng.integers(len(RANDOM_GATE_KINDS)))]
        if kind is GateKind.CNOT:
            a, b = (int(q) for q in rng.choice(num_qubits, size=2, replace=False))
            ops.append((kind, (a, b), None))
        else:
            ops.append((kind, (int(rng.integers(num_qubits)),), None))
    return build_circuit(num_qubits, 0, ops)
