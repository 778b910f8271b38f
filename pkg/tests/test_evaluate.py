"""Evaluation oracle tests: the simulator is pinned to hand-computed
distributions, the samplers to analytic success probabilities, and the
enumerator to the exact solver."""

import csv
import dataclasses
import json
import math

import pytest

from nisqc.circuit import GateKind, build_circuit, gen_bv, gen_random
from nisqc.codegen import expand
from nisqc.evaluate import (
    EvalReport,
    brute_force_optimal,
    compiled_as_circuit,
    equivalence_check,
    monte_carlo_success,
    reliability_score,
    statevector_sim,
    write_report,
)
from nisqc.machine import build_tables, canonical_junction, load_calibration
from nisqc.optimal import (
    Infeasible,
    ProblemConfig,
    solution_from_assignment,
    solve_exact,
)


def udoc(mx, my, **over):
    d = {
        "t2": 1000, "readout_error": 0.07, "readout_duration": 12,
        "cnot_error": 0.1, "cnot_duration": 2, "single_qubit_duration": 1,
        "single_qubit_error": 0.001, "static_tau_cnot": 2,
        "static_coherence_bound": 1000,
    }
    d.update(over)
    return {"grid": {"mx": mx, "my": my}, "defaults": d}


def assigned(c, m, cells, variant="t-smt-star", **cfg_over):
    cfg = ProblemConfig(variant=variant, **cfg_over)
    junctions = tuple(
        canonical_junction(m, cells[g.operands[0]], cells[g.operands[1]])
        for g in c.gates if g.kind is GateKind.CNOT)
    return solution_from_assignment(c, m, cfg, cells, junctions,
                                    tables=build_tables(m))


def toffoli_with_inputs(a, b):
    ops = [("x", (q,)) for q, bit in ((0, a), (1, b)) if bit]
    ops += [
        ("h", (2,)), ("cx", (1, 2)), ("tdg", (2,)), ("cx", (0, 2)),
        ("t", (2,)), ("cx", (1, 2)), ("tdg", (2,)), ("cx", (0, 2)),
        ("t", (1,)), ("t", (2,)), ("h", (2,)), ("cx", (0, 1)),
        ("t", (0,)), ("tdg", (1,)), ("cx", (0, 1)),
    ]
    ops += [("measure", (q,), q) for q in range(3)]
    return build_circuit(3, 3, ops)


class TestStatevector:
    def test_bv_is_deterministic_on_its_hidden_string(self):
        for s in ("111", "101", "010"):
            dist = statevector_sim(gen_bv(4, s))
            assert dist[s] == pytest.approx(1.0, abs=1e-12)
            assert len(dist) == 1

    def test_hadamard_splits_evenly(self):
        c = build_circuit(1, 1, [("h", (0,)), ("measure", (0,), 0)])
        dist = statevector_sim(c)
        assert dist["0"] == pytest.approx(0.5, abs=1e-12)
        assert dist["1"] == pytest.approx(0.5, abs=1e-12)

    def test_clbit_zero_is_leftmost(self):
        c = build_circuit(2, 2, [("x", (0,)),
                                 ("measure", (0,), 0), ("measure", (1,), 1)])
        assert statevector_sim(c) == pytest.approx({"10": 1.0})

    def test_unwritten_clbits_read_zero(self):
        c = build_circuit(1, 2, [("h", (0,)), ("measure", (0,), 1)])
        dist = statevector_sim(c)
        assert set(dist) == {"00", "01"}
        assert dist["01"] == pytest.approx(0.5, abs=1e-12)

    def test_toffoli_truth_table(self):
        for a in (0, 1):
            for b in (0, 1):
                dist = statevector_sim(toffoli_with_inputs(a, b))
                assert dist[f"{a}{b}{a & b}"] == pytest.approx(1.0, abs=1e-12)

    def test_norm_survives_long_random_circuits(self):
        c = gen_random(10, 2048, seed=5)
        dist = statevector_sim(c)
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)

    def test_qubit_cap(self):
        with pytest.raises(ValueError, match="simulation cap"):
            statevector_sim(build_circuit(15, 0, []))


class TestEquivalence:
    def bell(self):
        return build_circuit(2, 2, [("h", (0,)), ("cx", (0, 1)),
                                    ("measure", (0,), 0), ("measure", (1,), 1)])

    def test_zero_swap_compilation_passes(self):
        m = load_calibration(udoc(3, 3))
        c = gen_bv(4, "111")
        cc = expand(solve_exact(c, m, ProblemConfig(variant="r-smt-star")), c, m)
        assert cc.swap_count == 0
        res = equivalence_check(c, cc)
        assert res.passed and res.total_variation <= 1e-9

    def test_swapped_compilation_passes(self):
        # q3 talks to q2 across a distance-2 route
        m = load_calibration(udoc(1, 4))
        c = gen_bv(4, "111")
        sol = assigned(c, m, (0, 2, 3, 1))
        cc = expand(sol, c, m)
        assert cc.swap_count > 0
        res = equivalence_check(c, cc)
        assert res.passed and res.total_variation <= 1e-9
        assert statevector_sim(compiled_as_circuit(cc))["111"] == \
            pytest.approx(1.0, abs=1e-12)

    def test_dropped_swap_gate_fails(self):
        m = load_calibration(udoc(1, 3))
        c = self.bell()
        cc = expand(assigned(c, m, (0, 2)), c, m)
        assert equivalence_check(c, cc).passed
        swaps = [i for i, pg in enumerate(cc.expanded)
                 if pg.kind is GateKind.CNOT and set(pg.hw_operands) == {0, 1}]
        broken = dataclasses.replace(
            cc, expanded=tuple(pg for i, pg in enumerate(cc.expanded)
                               if i != swaps[1]))
        res = equivalence_check(c, broken)
        assert not res.passed
        assert res.max_deviation > 0.1


class TestReliabilityScore:
    def test_empty_circuit_scores_one(self):
        m = load_calibration(udoc(1, 2))
        c = build_circuit(1, 0, [])
        assert reliability_score(expand(assigned(c, m, (0,)), c, m)) == 1.0

    def test_bv4_zero_swap_value(self):
        m = load_calibration(udoc(3, 3))
        c = gen_bv(4, "111")
        cc = expand(solve_exact(c, m, ProblemConfig(variant="r-smt-star")), c, m)
        assert reliability_score(cc) == pytest.approx(0.586376253, abs=1e-9)

    def test_return_swap_flag(self):
        m = load_calibration(udoc(1, 3))
        c = build_circuit(2, 0, [("cx", (0, 1))])
        cc = expand(assigned(c, m, (0, 2)), c, m)
        assert reliability_score(cc) == pytest.approx(0.6561, abs=1e-12)
        assert reliability_score(cc, count_return_swaps=True) == \
            pytest.approx(0.9 ** 7, abs=1e-15)

    def test_power_chain(self):
        m = load_calibration(udoc(1, 2, cnot_error=0.04))
        for n, side in ((16, 1.0), (17, -1.0)):
            c = build_circuit(2, 0, [("cx", (0, 1))] * n)
            cc = expand(assigned(c, m, (0, 1)), c, m)
            score = reliability_score(cc)
            assert score == pytest.approx(0.96 ** n, abs=1e-15)
            assert side * (score - 0.5) > 1e-9


class TestMonteCarlo:
    def test_perfect_gates_always_succeed(self):
        m = load_calibration(udoc(3, 3, cnot_error=0.0, readout_error=0.0))
        c = gen_bv(4, "111")
        cc = expand(solve_exact(c, m, ProblemConfig(variant="r-smt-star")), c, m)
        assert monte_carlo_success(cc, 2000, seed=1) == (1.0, 0.0)

    def test_tracks_analytic_reliability(self):
        m = load_calibration(udoc(3, 3))
        c = gen_bv(4, "111")
        cc = expand(solve_exact(c, m, ProblemConfig(variant="r-smt-star")), c, m)
        p, se = monte_carlo_success(cc, 100_000, seed=7)
        assert abs(p - cc.reliability) <= 3 * se

    def test_single_coin(self):
        m = load_calibration(udoc(1, 1, readout_error=0.5))
        c = build_circuit(1, 1, [("measure", (0,), 0)])
        cc = expand(assigned(c, m, (0,)), c, m)
        p, se = monte_carlo_success(cc, 1_000_000, seed=13)
        assert se == pytest.approx(math.sqrt(p * (1 - p) / 1_000_000))
        assert abs(p - 0.5) <= 0.0015

    def test_deterministic_per_seed(self):
        m = load_calibration(udoc(3, 3))
        c = gen_bv(4, "111")
        cc = expand(solve_exact(c, m, ProblemConfig(variant="r-smt-star")), c, m)
        assert monte_carlo_success(cc, 50_000, seed=3) == \
            monte_carlo_success(cc, 50_000, seed=3)

    def test_chunked_draws_stay_calibrated(self):
        # 101 scored gates forces multiple sampling chunks at 1e5 trials
        m = load_calibration(udoc(1, 2, cnot_error=0.001, t2=10_000))
        c = build_circuit(2, 0, [("cx", (0, 1))] * 101)
        cc = expand(assigned(c, m, (0, 1)), c, m)
        p, se = monte_carlo_success(cc, 100_000, seed=11)
        assert abs(p - 0.999 ** 101) <= 3 * se

    def test_per_physical_gate_mode(self):
        m = load_calibration(udoc(1, 3))
        c = build_circuit(2, 0, [("cx", (0, 1))])
        cc = expand(assigned(c, m, (0, 2)), c, m)
        p, se = monte_carlo_success(cc, 200_000, seed=17,
                                    m=m, per_physical_gate=True)
        assert abs(p - 0.9 ** 7) <= 3 * se
        with pytest.raises(ValueError, match="machine"):
            monte_carlo_success(cc, 100, seed=1, per_physical_gate=True)

    def test_rejects_zero_trials(self):
        m = load_calibration(udoc(1, 2))
        c = build_circuit(1, 0, [])
        cc = expand(assigned(c, m, (0,)), c, m)
        with pytest.raises(ValueError, match="trials"):
            monte_carlo_success(cc, 0, seed=1)


class TestBruteForce:
    def test_single_measure_lands_on_best_readout(self):
        doc = udoc(1, 3)
        doc["qubits"] = [
            {"x": 0, "y": 0, "readout_error": 0.3},
            {"x": 0, "y": 1, "readout_error": 0.05},
            {"x": 0, "y": 2, "readout_error": 0.3},
        ]
        m = load_calibration(doc)
        c = build_circuit(1, 1, [("measure", (0,), 0)])
        res = brute_force_optimal(c, m, ProblemConfig(variant="r-smt-star"))
        assert res.objective_value == pytest.approx(0.5 * math.log(0.95), abs=1e-15)
        assert res.argmax == (((1,), ()),)

    def test_bv4_target_takes_a_high_degree_cell(self):
        m = load_calibration(udoc(2, 3))
        c = gen_bv(4, "111")
        res = brute_force_optimal(c, m, ProblemConfig(variant="r-smt-star"))
        for cells, _ in res.argmax:
            assert cells[3] in (1, 4)

    def test_matches_solve_exact(self):
        m = load_calibration(udoc(2, 2))
        t = build_tables(m)
        for seed in (21, 22, 23):
            c = gen_random(3, 8, seed)
            for variant, routing in (("t-smt", "rr"), ("t-smt-star", "1bp"),
                                     ("r-smt-star", "1bp")):
                cfg = ProblemConfig(variant=variant, routing=routing)
                bf = brute_force_optimal(c, m, cfg, tables=t)
                sol = solve_exact(c, m, cfg, tables=t)
                assert sol.objective_value == bf.objective_value

    def test_relabeling_keeps_the_optimum(self):
        m = load_calibration(udoc(2, 3))
        cfg = ProblemConfig(variant="r-smt-star")
        base = brute_force_optimal(gen_bv(4, "111"), m, cfg)
        perm = {0: 2, 1: 0, 2: 3, 3: 1}
        c = gen_bv(4, "111")
        relabeled = build_circuit(4, 3, [
            (g.kind, tuple(perm[q] for q in g.operands), g.classical_target)
            for g in c.gates])
        res = brute_force_optimal(relabeled, m, cfg)
        assert res.objective_value == base.objective_value

    def test_budget_guard(self):
        m = load_calibration(udoc(4, 4))
        ops = [("cx", (i % 4, (i + 1) % 4)) for i in range(6)]
        c = build_circuit(4, 0, ops)
        with pytest.raises(ValueError, match="instance too large"):
            brute_force_optimal(c, m, ProblemConfig(variant="r-smt-star"))

    def test_more_qubits_than_cells(self):
        m = load_calibration(udoc(1, 2))
        with pytest.raises(ValueError, match="exceed"):
            brute_force_optimal(build_circuit(3, 0, []), m,
                                ProblemConfig(variant="t-smt"))

    def test_collect_leaves(self):
        m = load_calibration(udoc(1, 2))
        c = build_circuit(2, 0, [("cx", (0, 1))])
        res = brute_force_optimal(c, m, ProblemConfig(variant="r-smt-star"),
                                  collect_leaves=True)
        assert len(res.leaves) == 2
        assert {leaf.cells for leaf in res.leaves} == {(0, 1), (1, 0)}
        assert all(leaf.makespan == 2 for leaf in res.leaves)
        assert all(leaf.objective == pytest.approx(0.5 * math.log(0.9))
                   for leaf in res.leaves)
        assert len(res.argmax) == 2


class TestWriteReport:
    def report(self, tag):
        return EvalReport(benchmark=tag, variant="t-smt", reliability=0.75,
                          mc_success=0.74, stderr=0.001, trials=1000,
                          makespan=42, swaps=2, compile_time_s=0.125,
                          equivalence_passed=True)

    def test_csv_shape_and_float_round_trip(self, tmp_path):
        path = tmp_path / "report.csv"
        csv_path, json_path = write_report(
            [self.report("bv4"), self.report("bv4")], str(path))
        assert csv_path == str(path)
        with open(csv_path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["benchmark", "variant", "reliability", "mc_success",
                           "stderr", "makespan", "swaps", "compile_time_s"]
        assert len(rows) == 3
        assert float(rows[1][2]) == 0.75
        assert rows[1] == rows[2]

    def test_json_dump_round_trips(self, tmp_path):
        csv_path, json_path = write_report(
            [self.report("toffoli")], str(tmp_path / "out"))
        assert csv_path.endswith(".csv") and json_path.endswith(".json")
        with open(json_path) as f:
            docs = json.load(f)
        assert docs == [dataclasses.asdict(self.report("toffoli"))]
