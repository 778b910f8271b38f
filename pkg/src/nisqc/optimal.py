"""Exact mapping and scheduling: problem variants, the canonical list scheduler,
branch-and-bound placement search, and an SMT-LIB2 emission of the joint problem."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from bisect import insort
from dataclasses import dataclass, field
from enum import Enum

from .circuit import Circuit, Gate, GateKind, build_dag, build_program_graph, predecessor_lists
from .machine import (
    DerivedTables,
    GridMachine,
    build_tables,
    canonical_junction,
    manhattan,
    path_duration,
    path_reliability,
    route_cells,
    static_cnot_duration,
)


class Variant(str, Enum):
    T_SMT = "t-smt"
    T_SMT_STAR = "t-smt-star"
    R_SMT_STAR = "r-smt-star"


class Routing(str, Enum):
    RR = "rr"
    ONE_BEND = "1bp"
    BEST_PATH = "path"


class Infeasible(Exception):
    """No schedule meets the coherence deadlines."""


class SolverTimeout(Exception):
    """Time limit expired before any feasible solution was found."""


@dataclass(frozen=True)
class ProblemConfig:
    variant: Variant
    routing: Routing | None = None
    omega: float = 0.5
    count_return_swaps: bool = False
    time_limit: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.routing is None:
            default = Routing.ONE_BEND if self.variant is Variant.R_SMT_STAR else Routing.RR
            object.__setattr__(self, "routing", default)
        else:
            object.__setattr__(self, "routing", Routing(self.routing))
        if self.variant is Variant.R_SMT_STAR and self.routing is not Routing.ONE_BEND:
            raise ValueError("reliability variant requires one-bend routing")
        if self.routing is Routing.BEST_PATH:
            raise ValueError("best-path routing belongs to the heuristic mappers")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega = {self.omega} outside [0, 1]")


@dataclass(frozen=True)
class Placement:
    loc: dict[int, tuple[int, int]]

    def cell(self, m: GridMachine, q: int) -> int:
        return m.cell_id(self.loc[q])

    def cells(self, m: GridMachine) -> tuple[int, ...]:
        return tuple(m.cell_id(self.loc[q]) for q in sorted(self.loc))


@dataclass(frozen=True)
class RouteAssignment:
    junction: dict[int, tuple[int, int]]
    rect: dict[int, tuple[int, int, int, int]]


@dataclass(frozen=True)
class Schedule:
    start: dict[int, int]
    dur: dict[int, int]

    @property
    def makespan(self) -> int:
        return max((self.start[g] + self.dur[g] for g in self.start), default=0)


@dataclass(frozen=True)
class Solution:
    placement: Placement
    routes: RouteAssignment
    schedule: Schedule
    objective_value: float
    optimal: bool
    variant: str
    routing: str
    omega: float
    count_return_swaps: bool
    gate_eps: dict[int, float] = field(repr=False)
    gate_routes: dict[int, tuple[int, ...]] = field(repr=False)

    @property
    def makespan(self) -> int:
        return self.schedule.makespan


class _InfeasibleSchedule(Exception):
    def __init__(self, gate_id: int):
        super().__init__(f"gate {gate_id} cannot finish before its coherence deadline")
        self.gate_id = gate_id


class _SearchTimeout(Exception):
    pass


def _list_schedule(n_gates, durs, gcells, deadlines, preds, succs):
    """Deterministic list scheduler shared by every variant.

    Among ready gates (all predecessors committed) the one with the smallest
    (earliest conflict-free start, gate id) commits next. A gate exclusively
    occupies each of its cells for [start, start + dur): half-open, so a gate
    may begin exactly when the previous one ends.
    """
    starts = [0] * n_gates
    est = [0] * n_gates
    pending = [len(p) for p in preds]
    busy: dict[int, list[tuple[int, int]]] = {}
    cellver: dict[int, int] = {}
    heap: list[tuple[int, int, int]] = []

    def fit(g: int) -> int:
        s = est[g]
        d = durs[g]
        moved = True
        while moved:
            moved = False
            for cell in gcells[g]:
                for a, b in busy.get(cell, ()):
                    if a >= s + d:
                        break
                    if b > s:
                        s = b
                        moved = True
        if s + d > deadlines[g]:
            raise _InfeasibleSchedule(g)
        return s

    def stamp(g: int) -> int:
        total = 0
        for cell in gcells[g]:
            total += cellver.get(cell, 0)
        return total

    for g in range(n_gates):
        if pending[g] == 0:
            heapq.heappush(heap, (fit(g), g, stamp(g)))
    committed = 0
    while heap:
        s, g, st = heapq.heappop(heap)
        if stamp(g) != st:
            # A commit touched this gate's cells since it was queued; refit.
            heapq.heappush(heap, (fit(g), g, stamp(g)))
            continue
        starts[g] = s
        committed += 1
        end = s + durs[g]
        for cell in gcells[g]:
            insort(busy.setdefault(cell, []), (s, end))
            cellver[cell] = cellver.get(cell, 0) + 1
        for nxt in succs[g]:
            if end > est[nxt]:
                est[nxt] = end
            pending[nxt] -= 1
            if pending[nxt] == 0:
                heapq.heappush(heap, (fit(nxt), nxt, stamp(nxt)))
    assert committed == n_gates
    return starts


def _rect_cells(m: GridMachine, a: int, b: int) -> tuple[int, ...]:
    (ax, ay), (bx, by) = m.pos(a), m.pos(b)
    lx, rx = min(ax, bx), max(ax, bx)
    ly, ry = min(ay, by), max(ay, by)
    return tuple(m.cell_id((x, y)) for x in range(lx, rx + 1) for y in range(ly, ry + 1))


class _Scorer:
    """Shared leaf evaluator: the exact solver and the brute-force enumerator both
    score a (placement, junctions) assignment through this one code path, so their
    objectives agree bitwise."""

    def __init__(self, c: Circuit, m: GridMachine, tables: DerivedTables, cfg: ProblemConfig):
        self.c, self.m, self.tables, self.cfg = c, m, tables, cfg
        self.n_gates = len(c.gates)
        self.preds = predecessor_lists(c)
        self.succs: list[list[int]] = [[] for _ in range(self.n_gates)]
        for g2, ps in enumerate(self.preds):
            for g1 in ps:
                self.succs[g1].append(g2)
        self.cnot_ids = [g.id for g in c.gates if g.kind is GateKind.CNOT]
        self.measure_ids = [g.id for g in c.gates if g.kind is GateKind.MEASURE]
        self.ec = tables.cnot_rel_return if cfg.count_return_swaps else tables.cnot_rel
        self.ln_ro = [math.log(r) for r in tables.readout_rel.tolist()]
        self.ro_dur = [q.readout_duration for q in m.qubits]
        self.t2 = [q.t2 for q in m.qubits]
        self.delta = tables.delta.tolist()
        self.static = cfg.variant is Variant.T_SMT
        self.one_bend = cfg.routing is Routing.ONE_BEND
        self.mt_deadline = m.static_coherence_bound - 1
        self._region: dict[tuple[int, int, int], tuple[int, ...]] = {}
        self._ln_ec: dict[tuple[int, int, int], float] = {}

    def cnot_duration(self, a: int, b: int) -> int:
        if self.static:
            return static_cnot_duration(manhattan(self.m.pos(a), self.m.pos(b)), self.m)
        return self.delta[a][b]

    def ln_ec(self, key: tuple[int, int, int]) -> float:
        v = self._ln_ec.get(key)
        if v is None:
            v = self._ln_ec[key] = math.log(self.ec[key])
        return v

    def _cnot_region(self, a: int, b: int, j: int) -> tuple[int, ...]:
        key = (a, b, j)
        region = self._region.get(key)
        if region is None:
            if self.one_bend:
                region = route_cells(self.m, a, b, j)
            else:
                region = _rect_cells(self.m, a, b)
            self._region[key] = region
        return region

    def schedule_arrays(self, cells, junctions):
        """Starts and durations for one assignment; raises _InfeasibleSchedule."""
        durs = [0] * self.n_gates
        gc: list[tuple[int, ...]] = [()] * self.n_gates
        dl = [0] * self.n_gates
        ji = 0
        for g in self.c.gates:
            i = g.id
            if g.kind is GateKind.CNOT:
                a, b = cells[g.operands[0]], cells[g.operands[1]]
                durs[i] = self.cnot_duration(a, b)
                gc[i] = self._cnot_region(a, b, junctions[ji])
                ji += 1
                dl[i] = self.mt_deadline if self.static else min(self.t2[a], self.t2[b])
            else:
                cell = cells[g.operands[0]]
                durs[i] = self.ro_dur[cell] if g.kind is GateKind.MEASURE else self.m.single_qubit_duration
                gc[i] = (cell,)
                dl[i] = self.mt_deadline if self.static else self.t2[cell]
        starts = _list_schedule(self.n_gates, durs, gc, dl, self.preds, self.succs)
        return starts, durs

    def log_objective(self, cells, junctions) -> float:
        """The weighted log-reliability sum, accumulated in gate-id order."""
        sum_ro = 0.0
        for i in self.measure_ids:
            sum_ro += self.ln_ro[cells[self.c.gates[i].operands[0]]]
        sum_cx = 0.0
        for ji, i in enumerate(self.cnot_ids):
            g = self.c.gates[i]
            sum_cx += self.ln_ec((cells[g.operands[0]], cells[g.operands[1]], junctions[ji]))
        w = self.cfg.omega
        return w * sum_ro + (1.0 - w) * sum_cx

    def leaf(self, cells, junctions):
        """(objective, makespan) for one assignment; raises _InfeasibleSchedule."""
        starts, durs = self.schedule_arrays(cells, junctions)
        makespan = max((starts[i] + durs[i] for i in range(self.n_gates)), default=0)
        if self.cfg.variant is Variant.R_SMT_STAR:
            return self.log_objective(cells, junctions), makespan
        return float(makespan), makespan


def gate_duration(g: Gate, p: Placement, cfg: ProblemConfig, m: GridMachine,
                  t: DerivedTables) -> int:
    """Duration in timeslots of one gate under the variant's duration model."""
    if g.kind is GateKind.MEASURE:
        return m.qubits[p.cell(m, g.operands[0])].readout_duration
    if g.kind is not GateKind.CNOT:
        return m.single_qubit_duration
    a, b = p.cell(m, g.operands[0]), p.cell(m, g.operands[1])
    if a == b:
        raise ValueError(f"CNOT {g.id} operands mapped to the same cell {a}")
    if cfg.variant is Variant.T_SMT:
        return static_cnot_duration(manhattan(p.loc[g.operands[0]], p.loc[g.operands[1]]), m)
    return int(t.delta[a, b])


def gate_reliability(g: Gate, p: Placement, routes: RouteAssignment, t: DerivedTables) -> float:
    """Per-gate success probability: E^R for readout, junction-routed E^C for CNOT, 1 otherwise."""
    m = t.machine
    if g.kind is GateKind.MEASURE:
        return float(t.readout_rel[p.cell(m, g.operands[0])])
    if g.kind is not GateKind.CNOT:
        return 1.0
    a, b = p.cell(m, g.operands[0]), p.cell(m, g.operands[1])
    j = m.cell_id(routes.junction[g.id])
    if j not in t.junctions[(a, b)]:
        raise ValueError(f"junction {routes.junction[g.id]} not legal for CNOT {g.id}")
    return t.cnot_rel[(a, b, j)]


def objective(sol: Solution, cfg: ProblemConfig | None = None) -> float:
    """Recompute the objective from the solution's own schedule and gate reliabilities.

    Duration variants score the makespan; every reliability-driven solution
    (the exact reliability variant and both greedy mappers) scores the weighted
    log-reliability sum.
    """
    variant = cfg.variant.value if cfg is not None else sol.variant
    if variant in (Variant.T_SMT.value, Variant.T_SMT_STAR.value):
        return float(sol.schedule.makespan)
    omega = cfg.omega if cfg is not None else sol.omega
    sum_ro = 0.0
    sum_cx = 0.0
    for g, eps in sorted(sol.gate_eps.items()):
        if g in sol.gate_routes:
            sum_cx += math.log(eps)
        else:
            sum_ro += math.log(eps)
    return omega * sum_ro + (1.0 - omega) * sum_cx


def _junction_choices(m: GridMachine, tables: DerivedTables, cfg: ProblemConfig,
                      a: int, b: int) -> tuple[int, ...]:
    # Rectangle reservation does not search junctions; expansion later walks
    # the canonical one.
    if cfg.routing is Routing.ONE_BEND:
        return tables.junctions[(a, b)]
    return (canonical_junction(m, a, b),)


def canonical_schedule(c: Circuit, p: Placement, routes: RouteAssignment,
                       cfg: ProblemConfig, m: GridMachine, t: DerivedTables) -> Schedule:
    """Deterministic schedule for a fixed placement and route assignment."""
    cells = p.cells(m)
    junctions = []
    for g in c.gates:
        if g.kind is not GateKind.CNOT:
            continue
        if g.id in routes.junction:
            junctions.append(m.cell_id(routes.junction[g.id]))
        else:
            junctions.append(canonical_junction(m, cells[g.operands[0]], cells[g.operands[1]]))
    scorer = _Scorer(c, m, t, cfg)
    try:
        starts, durs = scorer.schedule_arrays(cells, tuple(junctions))
    except _InfeasibleSchedule as exc:
        raise Infeasible(str(exc)) from exc
    return Schedule(start={g.id: starts[g.id] for g in c.gates},
                    dur={g.id: durs[g.id] for g in c.gates})


def solution_from_assignment(c: Circuit, m: GridMachine, cfg: ProblemConfig,
                             cells, junctions, *, tables: DerivedTables | None = None,
                             optimal: bool = True) -> Solution:
    """Materialize a full Solution from placement cells (by qubit id) and junction
    cells (by CNOT order)."""
    tables = tables if tables is not None else build_tables(m)
    scorer = _Scorer(c, m, tables, cfg)
    try:
        starts, durs = scorer.schedule_arrays(cells, junctions)
    except _InfeasibleSchedule as exc:
        raise Infeasible(str(exc)) from exc
    if cfg.variant is Variant.R_SMT_STAR:
        obj = scorer.log_objective(cells, junctions)
    else:
        obj = float(max((starts[i] + durs[i] for i in range(scorer.n_gates)), default=0))
    junction_pos: dict[int, tuple[int, int]] = {}
    rect: dict[int, tuple[int, int, int, int]] = {}
    gate_routes: dict[int, tuple[int, ...]] = {}
    gate_eps: dict[int, float] = {}
    ji = 0
    for g in c.gates:
        if g.kind is GateKind.CNOT:
            a, b = cells[g.operands[0]], cells[g.operands[1]]
            j = junctions[ji]
            ji += 1
            junction_pos[g.id] = m.pos(j)
            (ax, ay), (bx, by) = m.pos(a), m.pos(b)
            rect[g.id] = (min(ax, bx), min(ay, by), max(ax, bx), max(ay, by))
            gate_routes[g.id] = route_cells(m, a, b, j)
            gate_eps[g.id] = scorer.ec[(a, b, j)]
        elif g.kind is GateKind.MEASURE:
            gate_eps[g.id] = float(tables.readout_rel[cells[g.operands[0]]])
    return Solution(
        placement=Placement(loc={q: m.pos(cells[q]) for q in range(c.num_qubits)}),
        routes=RouteAssignment(junction=junction_pos, rect=rect),
        schedule=Schedule(start={g.id: starts[g.id] for g in c.gates},
                          dur={g.id: durs[g.id] for g in c.gates}),
        objective_value=obj,
        optimal=optimal,
        variant=cfg.variant.value,
        routing=cfg.routing.value,
        omega=cfg.omega,
        count_return_swaps=cfg.count_return_swaps,
        gate_eps=gate_eps,
        gate_routes=gate_routes,
    )


def solve_exact(c: Circuit, m: GridMachine, cfg: ProblemConfig, *,
                tables: DerivedTables | None = None) -> Solution:
    """Branch-and-bound over injective placements and junction assignments.

    Placements extend qubit by qubit in descending program-graph degree order;
    complete assignments are scored by the canonical scheduler. Reliability
    pruning bounds unplaced readouts/CNOTs by the machine-wide best entries;
    duration pruning uses a critical-path bound with unplaced CNOTs at
    distance 1. Ties on the objective keep the lexicographically smallest
    (placement cells, junction cells) key, so the result is deterministic and
    matches the brute-force enumerator exactly.
    """
    nq, ncells = c.num_qubits, m.num_cells
    if nq > ncells:
        raise ValueError(f"{nq} program qubits exceed {ncells} hardware cells")
    tables = tables if tables is not None else build_tables(m)
    scorer = _Scorer(c, m, tables, cfg)
    pg = build_program_graph(c)
    order = sorted(range(nq), key=lambda q: (-pg.vertex_degree.get(q, 0), q))
    maximize = cfg.variant is Variant.R_SMT_STAR
    omega = cfg.omega

    n_meas = [0] * nq
    for i in scorer.measure_ids:
        n_meas[c.gates[i].operands[0]] += 1
    cnot_ops = [(c.gates[i].operands[0], c.gates[i].operands[1]) for i in scorer.cnot_ids]
    incident: list[list[int]] = [[] for _ in range(nq)]
    for ci, (qa, qb) in enumerate(cnot_ops):
        incident[qa].append(ci)
        incident[qb].append(ci)

    best_ln_ro = max(scorer.ln_ro) if scorer.measure_ids else 0.0
    min_edge_err = min(e.cnot_error for e in m.edges) if m.edges else 0.0
    best_ln_cx = math.log(1.0 - min_edge_err)
    min_edge_dur = min((e.cnot_duration for e in m.edges), default=m.static_tau_cnot)
    min_ro_dur = min(scorer.ro_dur)
    opt_cx_dur = m.static_tau_cnot if cfg.variant is Variant.T_SMT else min_edge_dur
    pair_best_ln: dict[tuple[int, int], float] = {}

    def best_pair_ln(a: int, b: int) -> float:
        v = pair_best_ln.get((a, b))
        if v is None:
            v = max(scorer.ln_ec((a, b, j)) for j in tables.junctions[(a, b)])
            pair_best_ln[(a, b)] = v
        return v

    cell_of = [-1] * nq
    used = [False] * ncells
    incumbent: list = [None]  # [(objective, key, cells, junctions)]
    deadline = time.monotonic() + cfg.time_limit if cfg.time_limit else None
    leaf_tick = [0]

    def check_time():
        if deadline is not None and time.monotonic() > deadline:
            raise _SearchTimeout()

    def time_bound() -> int:
        # Critical path with optimistic durations for unplaced work.
        fin = [0] * scorer.n_gates
        for g in c.gates:
            i = g.id
            if g.kind is GateKind.CNOT:
                a, b = cell_of[g.operands[0]], cell_of[g.operands[1]]
                d = scorer.cnot_duration(a, b) if a >= 0 and b >= 0 else opt_cx_dur
            elif g.kind is GateKind.MEASURE:
                cell = cell_of[g.operands[0]]
                d = scorer.ro_dur[cell] if cell >= 0 else min_ro_dur
            else:
                d = m.single_qubit_duration
            f = d
            for p_ in scorer.preds[i]:
                if fin[p_] + d > f:
                    f = fin[p_] + d
            fin[i] = f
        return max(fin, default=0)

    def consider(obj, key, cells, junctions):
        inc = incumbent[0]
        if inc is None:
            incumbent[0] = (obj, key, cells, junctions)
            return
        if maximize:
            take = obj > inc[0] or (obj == inc[0] and key < inc[1])
        else:
            take = obj < inc[0] or (obj == inc[0] and key < inc[1])
        if take:
            incumbent[0] = (obj, key, cells, junctions)

    def do_leaf():
        cells = tuple(cell_of)
        cand = [_junction_choices(m, tables, cfg, cells[qa], cells[qb]) for qa, qb in cnot_ops]
        for combo in itertools.product(*cand):
            leaf_tick[0] += 1
            if leaf_tick[0] % 256 == 0:
                check_time()
            try:
                obj, _ = scorer.leaf(cells, combo)
            except _InfeasibleSchedule:
                continue
            consider(obj, (cells, combo), cells, combo)

    def rec(k, sum_ro, n_ro_open, sum_cx, n_cx_open):
        check_time()
        if k == nq:
            do_leaf()
            return
        q = order[k]
        for cell in range(ncells):
            if used[cell]:
                continue
            cell_of[q] = cell
            used[cell] = True
            if maximize:
                s_ro = sum_ro + n_meas[q] * scorer.ln_ro[cell]
                r_open = n_ro_open - n_meas[q]
                s_cx, c_open = sum_cx, n_cx_open
                for ci in incident[q]:
                    qa, qb = cnot_ops[ci]
                    other = cell_of[qb] if qa == q else cell_of[qa]
                    if other >= 0:
                        a = cell if qa == q else other
                        b = other if qa == q else cell
                        s_cx += best_pair_ln(a, b)
                        c_open -= 1
                bound = omega * (s_ro + r_open * best_ln_ro) \
                    + (1.0 - omega) * (s_cx + c_open * best_ln_cx)
                inc = incumbent[0]
                if inc is None or bound >= inc[0] - 1e-9:
                    rec(k + 1, s_ro, r_open, s_cx, c_open)
            else:
                inc = incumbent[0]
                if inc is None or time_bound() <= inc[0]:
                    rec(k + 1, sum_ro, n_ro_open, sum_cx, n_cx_open)
            used[cell] = False
            cell_of[q] = -1

    timed_out = False
    try:
        rec(0, 0.0, len(scorer.measure_ids), 0.0, len(scorer.cnot_ids))
    except _SearchTimeout:
        timed_out = True
    inc = incumbent[0]
    if inc is None:
        if timed_out:
            raise SolverTimeout(f"no feasible solution within {cfg.time_limit} s")
        raise Infeasible("every placement violates a coherence deadline")
    return solution_from_assignment(c, m, cfg, inc[2], inc[3],
                                    tables=tables, optimal=not timed_out)


def check_solution(sol: Solution, c: Circuit, m: GridMachine,
                   cfg: ProblemConfig | None = None,
                   tables: DerivedTables | None = None) -> list[str]:
    """Independent re-verification of every constraint; returns violations (empty = valid)."""
    v: list[str] = []
    variant = cfg.variant.value if cfg is not None else sol.variant
    routing = cfg.routing.value if cfg is not None else sol.routing
    flag = cfg.count_return_swaps if cfg is not None else sol.count_return_swaps
    omega = cfg.omega if cfg is not None else sol.omega
    loc = sol.placement.loc

    for q in range(c.num_qubits):
        if q not in loc:
            v.append(f"qubit {q} unmapped")
        else:
            x, y = loc[q]
            if not (0 <= x < m.mx and 0 <= y < m.my):
                v.append(f"qubit {q} at {loc[q]} off the {m.mx}x{m.my} grid")
    if len(set(loc.values())) != len(loc):
        v.append("placement not injective")
    if v:
        return v

    tables = tables if tables is not None else build_tables(m)
    cells = {q: m.cell_id(loc[q]) for q in loc}
    start, dur = sol.schedule.start, sol.schedule.dur
    missing = [g.id for g in c.gates if g.id not in start or g.id not in dur]
    if missing:
        return v + [f"gates {missing} unscheduled"]

    ec = tables.cnot_rel_return if flag else tables.cnot_rel
    occupied: dict[int, tuple[int, ...]] = {}
    is_static = variant == Variant.T_SMT.value

    for g in c.gates:
        if g.kind is GateKind.CNOT:
            a, b = cells[g.operands[0]], cells[g.operands[1]]
            if a == b:
                v.append(f"CNOT {g.id} endpoints share cell {a}")
                continue
            if routing == Routing.BEST_PATH.value:
                route = sol.gate_routes.get(g.id, ())
                if not route or route[0] != a or route[-1] != b:
                    v.append(f"CNOT {g.id} route does not join its endpoints")
                    continue
                expect_dur = path_duration(m, route)
                expect_eps = path_reliability(route, m, count_return_swaps=flag)
                occupied[g.id] = route
            else:
                jpos = sol.routes.junction.get(g.id)
                if jpos is None:
                    v.append(f"CNOT {g.id} missing junction")
                    continue
                j = m.cell_id(jpos)
                if j not in tables.junctions[(a, b)]:
                    v.append(f"CNOT {g.id} junction {jpos} illegal for its endpoints")
                    continue
                if is_static:
                    expect_dur = static_cnot_duration(manhattan(m.pos(a), m.pos(b)), m)
                else:
                    expect_dur = int(tables.delta[a, b])
                expect_eps = ec[(a, b, j)]
                occupied[g.id] = route_cells(m, a, b, j) if routing == Routing.ONE_BEND.value \
                    else _rect_cells(m, a, b)
            if dur[g.id] != expect_dur:
                v.append(f"gate {g.id} duration {dur[g.id]} != expected {expect_dur}")
            if abs(sol.gate_eps.get(g.id, -1.0) - expect_eps) > 1e-12:
                v.append(f"gate {g.id} reliability inconsistent with tables")
            deadline_ok = start[g.id] + dur[g.id] <= m.static_coherence_bound - 1 if is_static \
                else start[g.id] + dur[g.id] <= min(m.qubits[a].t2, m.qubits[b].t2)
            if not deadline_ok:
                v.append(f"gate {g.id} breaks its coherence deadline")
        else:
            cell = cells[g.operands[0]]
            expect_dur = m.qubits[cell].readout_duration if g.kind is GateKind.MEASURE \
                else m.single_qubit_duration
            if dur[g.id] != expect_dur:
                v.append(f"gate {g.id} duration {dur[g.id]} != expected {expect_dur}")
            occupied[g.id] = (cell,)
            deadline_ok = start[g.id] + dur[g.id] <= m.static_coherence_bound - 1 if is_static \
                else start[g.id] + dur[g.id] <= m.qubits[cell].t2
            if not deadline_ok:
                v.append(f"gate {g.id} breaks its coherence deadline")
            if g.kind is GateKind.MEASURE:
                expect_eps = float(tables.readout_rel[cell])
                if abs(sol.gate_eps.get(g.id, -1.0) - expect_eps) > 1e-12:
                    v.append(f"gate {g.id} readout reliability inconsistent")

    for g1, g2 in sorted(build_dag(c).edges):
        if start[g2] < start[g1] + dur[g1]:
            v.append(f"dependency violated: gate {g2} starts before gate {g1} finishes")

    ids = sorted(occupied)
    for i, g1 in enumerate(ids):
        set1 = set(occupied[g1])
        for g2 in ids[i + 1:]:
            if set1.isdisjoint(occupied[g2]):
                continue
            if start[g1] < start[g2] + dur[g2] and start[g2] < start[g1] + dur[g1]:
                v.append(f"gates {g1} and {g2} overlap in space and time")

    expect_obj = objective(sol, cfg)
    tol = 1e-9 if variant == Variant.R_SMT_STAR.value or routing == Routing.BEST_PATH.value else 0.0
    if abs(sol.objective_value - expect_obj) > tol:
        v.append(f"objective {sol.objective_value} != recomputed {expect_obj}")
    return v


def _smt_real(x: float) -> str:
    s = f"{abs(x):.17f}"
    return f"(- {s})" if x < 0 else s


def _ite_chain(entries: list[tuple[str, str]], fallback: str) -> str:
    expr = fallback
    for cond, val in reversed(entries):
        expr = f"(ite {cond} {val} {expr})"
    return expr


def emit_smtlib(c: Circuit, m: GridMachine, cfg: ProblemConfig) -> str:
    """SMT-LIB2 script for the joint placement/routing/scheduling problem.

    Unlike solve_exact, which fixes start times with the canonical scheduler,
    the script leaves start times free, so an optimizing solver explores the
    full joint space. Intended for desk-scale external verification; lookup
    tables are emitted as ite switches, so script size grows with cell count.
    """
    nq, my = c.num_qubits, m.my
    is_static = cfg.variant is Variant.T_SMT
    reliability = cfg.variant is Variant.R_SMT_STAR
    one_bend = cfg.routing is Routing.ONE_BEND
    tables = None if is_static else build_tables(m)
    ec = None
    if reliability:
        ec = tables.cnot_rel_return if cfg.count_return_swaps else tables.cnot_rel

    edge_durs = {e.cnot_duration for e in m.edges}
    uniform_edge_dur = len(edge_durs) <= 1
    ro_durs = {q.readout_duration for q in m.qubits}
    t2s = {q.t2 for q in m.qubits}
    cells = range(m.num_cells)

    L: list[str] = []
    add = L.append
    add(f"; joint mapping/scheduling encoding: {m.mx}x{m.my} grid, "
        f"variant {cfg.variant.value}, routing {cfg.routing.value}")
    add("; model decoding:")
    add(";   qxI, qyI  grid position of program qubit I")
    add(";   tG        start timeslot of gate G (gate ids follow input order)")
    if one_bend:
        add(";   jxG, jyG  junction of CNOT G; its route is control -> junction -> target.")
        add(";             The two rectangle corners are the candidates; for colinear")
        add(";             endpoints both corners collapse onto the straight segment.")
    if reliability:
        add(";   obj       weighted sum of natural-log gate reliabilities (maximized)")
    else:
        add(";   makespan  circuit duration in timeslots (minimized)")
    add("(set-option :produce-models true)")

    for i in range(nq):
        add(f"(declare-const qx{i} Int)")
        add(f"(declare-const qy{i} Int)")
        add(f"(assert (and (>= qx{i} 0) (< qx{i} {m.mx}) (>= qy{i} 0) (< qy{i} {m.my})))")
        add(f"(define-fun cq{i} () Int (+ (* {my} qx{i}) qy{i}))")
    if nq >= 2:
        add("(assert (distinct " + " ".join(f"cq{i}" for i in range(nq)) + "))")

    def t2_bound(cell_expr: str) -> str:
        if len(t2s) == 1:
            return str(next(iter(t2s)))
        return _ite_chain(
            [(f"(= {cell_expr} {cl})", str(m.qubits[cl].t2)) for cl in cells][:-1],
            str(m.qubits[m.num_cells - 1].t2))

    bboxes: dict[int, list[tuple[str, str, str, str]]] = {}

    for g in c.gates:
        i = g.id
        add(f"(declare-const t{i} Int)")
        add(f"(assert (>= t{i} 0))")
        if g.kind is GateKind.CNOT:
            qa, qb = g.operands
            if is_static or uniform_edge_dur:
                tau = m.static_tau_cnot if is_static else next(iter(edge_durs), m.static_tau_cnot)
                add(f"(define-fun dx{i} () Int (ite (<= qx{qa} qx{qb}) "
                    f"(- qx{qb} qx{qa}) (- qx{qa} qx{qb})))")
                add(f"(define-fun dy{i} () Int (ite (<= qy{qa} qy{qb}) "
                    f"(- qy{qb} qy{qa}) (- qy{qa} qy{qb})))")
                add(f"(define-fun d{i} () Int (- (* {6 * tau} (+ dx{i} dy{i})) {5 * tau}))")
            else:
                entries = []
                for a in cells:
                    for b in cells:
                        if a != b:
                            entries.append((f"(and (= cq{qa} {a}) (= cq{qb} {b}))",
                                            str(int(tables.delta[a, b]))))
                add(f"(define-fun d{i} () Int {_ite_chain(entries[:-1], entries[-1][1])})")
            if one_bend:
                add(f"(declare-const jx{i} Int)")
                add(f"(declare-const jy{i} Int)")
                add(f"(assert (or (and (= jx{i} qx{qa}) (= jy{i} qy{qb})) "
                    f"(and (= jx{i} qx{qb}) (= jy{i} qy{qa}))))")
                add(f"(define-fun cj{i} () Int (+ (* {my} jx{i}) jy{i}))")
                for snum, (px, py) in ((1, (f"qx{qa}", f"qy{qa}")), (2, (f"qx{qb}", f"qy{qb}"))):
                    add(f"(define-fun r{i}s{snum}lx () Int (ite (<= {px} jx{i}) {px} jx{i}))")
                    add(f"(define-fun r{i}s{snum}rx () Int (ite (<= {px} jx{i}) jx{i} {px}))")
                    add(f"(define-fun r{i}s{snum}ly () Int (ite (<= {py} jy{i}) {py} jy{i}))")
                    add(f"(define-fun r{i}s{snum}ry () Int (ite (<= {py} jy{i}) jy{i} {py}))")
                bboxes[i] = [(f"r{i}s1lx", f"r{i}s1rx", f"r{i}s1ly", f"r{i}s1ry"),
                             (f"r{i}s2lx", f"r{i}s2rx", f"r{i}s2ly", f"r{i}s2ry")]
            else:
                add(f"(define-fun r{i}lx () Int (ite (<= qx{qa} qx{qb}) qx{qa} qx{qb}))")
                add(f"(define-fun r{i}rx () Int (ite (<= qx{qa} qx{qb}) qx{qb} qx{qa}))")
                add(f"(define-fun r{i}ly () Int (ite (<= qy{qa} qy{qb}) qy{qa} qy{qb}))")
                add(f"(define-fun r{i}ry () Int (ite (<= qy{qa} qy{qb}) qy{qb} qy{qa}))")
                bboxes[i] = [(f"r{i}lx", f"r{i}rx", f"r{i}ly", f"r{i}ry")]
            if is_static:
                add(f"(assert (< (+ t{i} d{i}) {m.static_coherence_bound}))")
            else:
                add(f"(assert (<= (+ t{i} d{i}) {t2_bound(f'cq{qa}')}))")
                add(f"(assert (<= (+ t{i} d{i}) {t2_bound(f'cq{qb}')}))")
        else:
            q = g.operands[0]
            if g.kind is GateKind.MEASURE:
                if len(ro_durs) == 1:
                    add(f"(define-fun d{i} () Int {next(iter(ro_durs))})")
                else:
                    entries = [(f"(= cq{q} {cl})", str(m.qubits[cl].readout_duration))
                               for cl in cells]
                    add(f"(define-fun d{i} () Int {_ite_chain(entries[:-1], entries[-1][1])})")
            else:
                add(f"(define-fun d{i} () Int {m.single_qubit_duration})")
            bboxes[i] = [(f"qx{q}", f"qx{q}", f"qy{q}", f"qy{q}")]
            if is_static:
                add(f"(assert (< (+ t{i} d{i}) {m.static_coherence_bound}))")
            else:
                add(f"(assert (<= (+ t{i} d{i}) {t2_bound(f'cq{q}')}))")

    for g1, g2 in sorted(build_dag(c).edges):
        add(f"(assert (>= t{g2} (+ t{g1} d{g1})))")

    n = len(c.gates)
    for i in range(n):
        for j in range(i + 1, n):
            tests = []
            for lx1, rx1, ly1, ry1 in bboxes[i]:
                for lx2, rx2, ly2, ry2 in bboxes[j]:
                    tests.append(f"(and (<= {lx1} {rx2}) (<= {lx2} {rx1}) "
                                 f"(<= {ly1} {ry2}) (<= {ly2} {ry1}))")
            ov = tests[0] if len(tests) == 1 else "(or " + " ".join(tests) + ")"
            add(f"(assert (=> {ov} (or (<= (+ t{i} d{i}) t{j}) (<= (+ t{j} d{j}) t{i}))))")

    if reliability:
        ro_terms, cx_terms = [], []
        for g in c.gates:
            i = g.id
            if g.kind is GateKind.MEASURE:
                q = g.operands[0]
                vals = {cl: math.log(float(tables.readout_rel[cl])) for cl in cells}
                if len(set(vals.values())) == 1:
                    add(f"(define-fun lnro{i} () Real {_smt_real(vals[0])})")
                else:
                    entries = [(f"(= cq{q} {cl})", _smt_real(vals[cl])) for cl in cells]
                    add(f"(define-fun lnro{i} () Real "
                        f"{_ite_chain(entries[:-1], entries[-1][1])})")
                ro_terms.append(f"lnro{i}")
            elif g.kind is GateKind.CNOT:
                qa, qb = g.operands
                entries = []
                for a in cells:
                    pa = m.pos(a)
                    for b in cells:
                        if a == b:
                            continue
                        pb = m.pos(b)
                        legal = tables.junctions[(a, b)]
                        for jpos in {(pa[0], pb[1]), (pb[0], pa[1])}:
                            jc = m.cell_id(jpos)
                            # a corner matching an endpoint means colinear cells:
                            # either corner walks the same straight route
                            eps = ec[(a, b, jc)] if jc in legal else ec[(a, b, legal[0])]
                            entries.append(
                                (f"(and (= cq{qa} {a}) (= cq{qb} {b}) (= cj{i} {jc}))",
                                 _smt_real(math.log(eps))))
                add(f"(define-fun lnec{i} () Real "
                    f"{_ite_chain(entries[:-1], entries[-1][1])})")
                cx_terms.append(f"lnec{i}")
        sum_ro = "0.0" if not ro_terms else ro_terms[0] if len(ro_terms) == 1 \
            else "(+ " + " ".join(ro_terms) + ")"
        sum_cx = "0.0" if not cx_terms else cx_terms[0] if len(cx_terms) == 1 \
            else "(+ " + " ".join(cx_terms) + ")"
        add(f"(define-fun obj () Real (+ (* {_smt_real(cfg.omega)} {sum_ro}) "
            f"(* {_smt_real(1.0 - cfg.omega)} {sum_cx})))")
        add("(maximize obj)")
    else:
        add("(declare-const makespan Int)")
        if n == 0:
            add("(assert (= makespan 0))")
        else:
            add("(assert (>= makespan 0))")
            for g in c.gates:
                add(f"(assert (>= makespan (+ t{g.id} d{g.id})))")
        add("(minimize makespan)")

    add("(check-sat)")
    add("(get-objectives)")
    add("; inspect the winning assignment with (get-model)")
    return "\n".join(L) + "\n"
