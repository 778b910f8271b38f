"""Grid hardware model: calibration ingest plus the derived tables the mappers consume."""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

# Fallbacks when the calibration document's defaults section is silent.
_LIB_DEFAULTS = {
    "t2": 1000,
    "readout_error": 0.07,
    "readout_duration": 12,
    "cnot_error": 0.04,
    "cnot_duration": 2,
    "single_qubit_duration": 1,
    "single_qubit_error": 0.001,
    "static_tau_cnot": 2,
    "static_coherence_bound": 1000,
}


class CalibrationError(ValueError):
    """Calibration document rejected."""


@dataclass(frozen=True)
class HardwareQubit:
    id: int
    pos: tuple[int, int]
    t2: int
    readout_error: float
    readout_duration: int


@dataclass(frozen=True)
class HardwareEdge:
    endpoints: tuple[int, int]
    cnot_error: float
    cnot_duration: int


@dataclass(eq=False)
class GridMachine:
    mx: int
    my: int
    qubits: list[HardwareQubit]
    edges: list[HardwareEdge]
    single_qubit_duration: int
    single_qubit_error: float
    static_tau_cnot: int
    static_tau_swap: int
    static_coherence_bound: int

    def __post_init__(self):
        self.num_cells = self.mx * self.my
        self.edge_map: dict[tuple[int, int], HardwareEdge] = {}
        self.adjacency: list[list[int]] = [[] for _ in range(self.num_cells)]
        for e in self.edges:
            self.edge_map[e.endpoints] = e
            a, b = e.endpoints
            self.adjacency[a].append(b)
            self.adjacency[b].append(a)
        for nbrs in self.adjacency:
            nbrs.sort()

    def cell_id(self, pos: tuple[int, int]) -> int:
        return pos[0] * self.my + pos[1]

    def pos(self, cell: int) -> tuple[int, int]:
        return divmod(cell, self.my)

    def edge_between(self, a: int, b: int) -> HardwareEdge:
        return self.edge_map[(a, b) if a < b else (b, a)]


@dataclass(frozen=True)
class DerivedTables:
    machine: "GridMachine" = field(repr=False)
    delta: np.ndarray = field(repr=False)
    readout_rel: np.ndarray = field(repr=False)
    cnot_rel: dict[tuple[int, int, int], float] = field(repr=False)
    cnot_rel_return: dict[tuple[int, int, int], float] = field(repr=False)
    junctions: dict[tuple[int, int], tuple[int, ...]] = field(repr=False)
    best_paths: dict[tuple[int, int], tuple[tuple[int, ...], float]] = field(repr=False)
    best_paths_return: dict[tuple[int, int], tuple[tuple[int, ...], float]] = field(repr=False)


def manhattan(a: tuple[int, int], b: tuple[int, int]) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def static_cnot_duration(d: int, m: GridMachine) -> int:
    """Duration in timeslots of a distance-d CNOT under the machine-wide constants."""
    if d < 1:
        raise ValueError("CNOT endpoints mapped to the same cell (distance 0)")
    return 2 * (d - 1) * m.static_tau_swap + m.static_tau_cnot


def one_bend_junctions(c: tuple[int, int], t: tuple[int, int]) -> list[tuple[int, int]]:
    """Corner cells of the 1 or 2 axis-aligned single-bend routes from c to t."""
    if c == t:
        raise ValueError("no route between identical cells")
    if c[0] == t[0] or c[1] == t[1]:
        return [c]
    return [(c[0], t[1]), (t[0], c[1])]


def _probability(value, name: str) -> float:
    p = float(value)
    if not 0.0 <= p < 1.0:
        raise CalibrationError(f"{name} = {p} outside [0, 1)")
    return p


def _duration(value, name: str) -> int:
    d = int(value)
    if d < 1:
        raise CalibrationError(f"{name} = {d} must be a positive timeslot count")
    return d


def load_calibration(doc) -> GridMachine:
    """Build a GridMachine from a calibration document (dict or JSON text).

    Every grid-adjacent pair gets an edge; the document's qubit and edge
    entries override the defaults section, which overrides library defaults.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    if not isinstance(doc, dict) or "grid" not in doc:
        raise CalibrationError("calibration document needs a grid section")
    grid = doc["grid"]
    try:
        mx, my = int(grid["mx"]), int(grid["my"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CalibrationError(f"bad grid section: {exc}") from exc
    if mx < 1 or my < 1:
        raise CalibrationError("grid dimensions must be >= 1")

    dft = dict(_LIB_DEFAULTS)
    dft.update(doc.get("defaults", {}))
    t2_d = _duration(dft["t2"], "t2")
    ro_err_d = _probability(dft["readout_error"], "readout_error")
    ro_dur_d = _duration(dft["readout_duration"], "readout_duration")
    cx_err_d = _probability(dft["cnot_error"], "cnot_error")
    cx_dur_d = _duration(dft["cnot_duration"], "cnot_duration")

    qubit_over: dict[tuple[int, int], dict] = {}
    for entry in doc.get("qubits", []):
        pos = (int(entry["x"]), int(entry["y"]))
        if not (0 <= pos[0] < mx and 0 <= pos[1] < my):
            raise CalibrationError(f"qubit cell {pos} outside {mx}x{my} grid")
        if pos in qubit_over:
            raise CalibrationError(f"duplicate qubit cell {pos}")
        qubit_over[pos] = entry

    qubits = []
    for x in range(mx):
        for y in range(my):
            over = qubit_over.get((x, y), {})
            qubits.append(HardwareQubit(
                id=x * my + y,
                pos=(x, y),
                t2=_duration(over.get("t2", t2_d), "t2"),
                readout_error=_probability(over.get("readout_error", ro_err_d), "readout_error"),
                readout_duration=_duration(over.get("readout_duration", ro_dur_d), "readout_duration"),
            ))

    edge_over: dict[tuple[int, int], dict] = {}
    for entry in doc.get("edges", []):
        a = (int(entry["a"][0]), int(entry["a"][1]))
        b = (int(entry["b"][0]), int(entry["b"][1]))
        for pos in (a, b):
            if not (0 <= pos[0] < mx and 0 <= pos[1] < my):
                raise CalibrationError(f"edge endpoint {pos} outside {mx}x{my} grid")
        if manhattan(a, b) != 1:
            raise CalibrationError(f"edge between non-adjacent cells {a}, {b}")
        key = tuple(sorted((a[0] * my + a[1], b[0] * my + b[1])))
        if key in edge_over:
            raise CalibrationError(f"duplicate edge {a}, {b}")
        edge_over[key] = entry

    edges = []
    for x in range(mx):
        for y in range(my):
            a = x * my + y
            for nx, ny in ((x + 1, y), (x, y + 1)):
                if nx >= mx or ny >= my:
                    continue
                b = nx * my + ny
                over = edge_over.get((a, b), {})
                edges.append(HardwareEdge(
                    endpoints=(a, b),
                    cnot_error=_probability(over.get("cnot_error", cx_err_d), "cnot_error"),
                    cnot_duration=_duration(over.get("cnot_duration", cx_dur_d), "cnot_duration"),
                ))

    tau_cnot = _duration(dft["static_tau_cnot"], "static_tau_cnot")
    return GridMachine(
        mx=mx, my=my, qubits=qubits, edges=edges,
        single_qubit_duration=_duration(dft["single_qubit_duration"], "single_qubit_duration"),
        single_qubit_error=_probability(dft["single_qubit_error"], "single_qubit_error"),
        static_tau_cnot=tau_cnot,
        static_tau_swap=3 * tau_cnot,
        static_coherence_bound=_duration(dft["static_coherence_bound"], "static_coherence_bound"),
    )


def _straight_cells(m: GridMachine, a: tuple[int, int], b: tuple[int, int]) -> list[int]:
    # Inclusive cell walk along one axis; a and b share a row or column.
    if a[0] == b[0]:
        step = 1 if b[1] >= a[1] else -1
        return [m.cell_id((a[0], y)) for y in range(a[1], b[1] + step, step)]
    step = 1 if b[0] >= a[0] else -1
    return [m.cell_id((x, a[1])) for x in range(a[0], b[0] + step, step)]


def route_cells(m: GridMachine, c: int, t: int, junction: int) -> tuple[int, ...]:
    """Vertex sequence of the single-bend route c -> junction -> t (cell ids)."""
    cp, tp, jp = m.pos(c), m.pos(t), m.pos(junction)
    first = _straight_cells(m, cp, jp)
    second = _straight_cells(m, jp, tp)
    return tuple(first + second[1:])


def path_reliability(path, m: GridMachine, count_return_swaps: bool = False) -> float:
    """Success probability of a routed CNOT walking the given cell sequence.

    The last edge carries the CNOT itself; every earlier edge carries a
    3-CNOT forward swap, squared when return swaps are counted too.
    """
    if len(path) < 2:
        raise ValueError("path needs at least one edge")
    swap_exp = 6 if count_return_swaps else 3
    rel = 1.0
    for i in range(len(path) - 1):
        a, b = path[i], path[i + 1]
        if manhattan(m.pos(a), m.pos(b)) != 1:
            raise ValueError(f"cells {a} and {b} not adjacent")
        r = 1.0 - m.edge_between(a, b).cnot_error
        rel *= r if i == len(path) - 2 else r ** swap_exp
    return rel


def path_duration(m: GridMachine, cells) -> int:
    """Timeslots to walk a route: 6x each swap edge (round trip), 1x the final CNOT edge."""
    durs = [m.edge_between(cells[i], cells[i + 1]).cnot_duration for i in range(len(cells) - 1)]
    return 6 * sum(durs[:-1]) + durs[-1]


def _best_path_search(m: GridMachine, swap_exp: int) -> dict[tuple[int, int], tuple[tuple[int, ...], float]]:
    # Most-reliable simple path per ordered pair. The last edge is scored once
    # while interior edges are scored swap_exp times, so a single global
    # Dijkstra cannot be optimal; instead, per target t, search from each
    # neighbor u on the graph without t and append the closing edge (u, t).
    n = m.num_cells
    log_w = {}
    for e in m.edges:
        w = -math.log(1.0 - e.cnot_error)
        log_w[e.endpoints] = w
        log_w[e.endpoints[::-1]] = w
    result: dict[tuple[int, int], tuple[tuple[int, ...], float]] = {}
    best_cost = [[math.inf] * n for _ in range(n)]
    best_via: list[list[int]] = [[-1] * n for _ in range(n)]
    preds: dict[tuple[int, int], list[int]] = {}

    for t in range(n):
        for u in sorted(m.adjacency[t]):
            close_w = log_w[(u, t)]
            dist = [math.inf] * n
            pred = [-1] * n
            dist[u] = 0.0
            heap = [(0.0, u)]
            while heap:
                d, v = heapq.heappop(heap)
                if d > dist[v]:
                    continue
                for w_ in m.adjacency[v]:
                    if w_ == t:
                        continue
                    nd = d + swap_exp * log_w[(v, w_)]
                    if nd < dist[w_]:
                        dist[w_] = nd
                        pred[w_] = v
                        heapq.heappush(heap, (nd, w_))
            preds[(t, u)] = pred
            for s in range(n):
                if s == t or dist[s] == math.inf:
                    continue
                cost = dist[s] + close_w
                if cost < best_cost[t][s] - 1e-15:
                    best_cost[t][s] = cost
                    best_via[t][s] = u

    for t in range(n):
        for s in range(n):
            if s == t or best_via[t][s] == -1:
                continue
            u = best_via[t][s]
            pred = preds[(t, u)]
            seq = [s]
            while seq[-1] != u:
                seq.append(pred[seq[-1]])
            # pred chains point from u outward, so walk s -> u then close at t.
            path = tuple(seq) + (t,)
            result[(s, t)] = (path, path_reliability(path, m, count_return_swaps=swap_exp == 6))
    return result


def canonical_junction(m: GridMachine, c: int, t: int) -> int:
    """Junction whose route minimizes walk duration (either direction); ties pick the lower cell."""
    best = None
    for jp in one_bend_junctions(m.pos(c), m.pos(t)):
        j = m.cell_id(jp)
        cells = route_cells(m, c, t, j)
        dur = min(path_duration(m, cells), path_duration(m, cells[::-1]))
        if best is None or (dur, j) < best:
            best = (dur, j)
    return best[1]


def build_tables(m: GridMachine) -> DerivedTables:
    """Precompute everything the mappers look up per hardware-cell pair."""
    n = m.num_cells
    delta = np.zeros((n, n), dtype=np.int64)
    junctions: dict[tuple[int, int], tuple[int, ...]] = {}
    cnot_rel: dict[tuple[int, int, int], float] = {}
    cnot_rel_return: dict[tuple[int, int, int], float] = {}
    for c in range(n):
        for t in range(n):
            if c == t:
                continue
            best_dur = None
            js = []
            for jp in one_bend_junctions(m.pos(c), m.pos(t)):
                j = m.cell_id(jp)
                js.append(j)
                cells = route_cells(m, c, t, j)
                dur = min(path_duration(m, cells), path_duration(m, cells[::-1]))
                best_dur = dur if best_dur is None else min(best_dur, dur)
                cnot_rel[(c, t, j)] = path_reliability(cells, m)
                cnot_rel_return[(c, t, j)] = path_reliability(cells, m, count_return_swaps=True)
            junctions[(c, t)] = tuple(sorted(js))
            delta[c, t] = best_dur
    readout_rel = np.array([1.0 - q.readout_error for q in m.qubits])
    return DerivedTables(
        machine=m,
        delta=delta,
        readout_rel=readout_rel,
        cnot_rel=cnot_rel,
        cnot_rel_return=cnot_rel_return,
        junctions=junctions,
        best_paths=_best_path_search(m, swap_exp=3),
        best_paths_return=_best_path_search(m, swap_exp=6),
    )


def synth_calibration(mx: int, my: int, seed: int, *,
                      t2: int = 1000,
                      readout_error: float = 0.07, readout_sigma: float = 0.02,
                      cnot_error: float = 0.04, cnot_sigma: float = 0.015,
                      jitter_durations: bool = False) -> dict:
    """Seeded synthetic calibration document mimicking day-to-day drift."""
    if mx < 1 or my < 1:
        raise ValueError(f"grid {mx}x{my} must be at least 1x1")
    rng = np.random.default_rng(seed)
    doc = {
        "grid": {"mx": mx, "my": my},
        "defaults": {"t2": t2, "readout_duration": 12,
                     "single_qubit_duration": 1, "single_qubit_error": 0.001,
                     "static_tau_cnot": 2, "static_coherence_bound": t2},
        "qubits": [],
        "edges": [],
    }
    for x in range(mx):
        for y in range(my):
            err = float(np.clip(rng.normal(readout_error, readout_sigma), 0.005, 0.25))
            jit = int(rng.integers(-t2 // 10, t2 // 10 + 1))
            doc["qubits"].append({"x": x, "y": y, "t2": max(2, t2 + jit),
                                  "readout_error": round(err, 6)})
    for x in range(mx):
        for y in range(my):
            for nx, ny in ((x + 1, y), (x, y + 1)):
                if nx >= mx or ny >= my:
                    continue
                err = float(np.clip(rng.normal(cnot_error, cnot_sigma), 0.002, 0.3))
                dur = int(rng.integers(2, 5)) if jitter_durations else 2
                doc["edges"].append({"a": [x, y], "b": [nx, ny],
                                     "cnot_error": round(err, 6), "cnot_duration": dur})
    return doc
