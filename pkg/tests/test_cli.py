"""CLI tests: every subcommand is driven in-process through main(argv) and
checked on its files, stdout summary, and exit code."""

import csv
import json

import pytest

from nisqc.cli import main
from nisqc.machine import synth_calibration


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def uniform_cal(tmp_path, mx, my, name="cal.json", **over):
    d = {
        "t2": 1000, "readout_error": 0.07, "readout_duration": 12,
        "cnot_error": 0.1, "cnot_duration": 2, "single_qubit_duration": 1,
        "single_qubit_error": 0.001, "static_tau_cnot": 2,
        "static_coherence_bound": 1000,
    }
    d.update(over)
    path = tmp_path / name
    path.write_text(json.dumps({"grid": {"mx": mx, "my": my}, "defaults": d}))
    return str(path)


@pytest.fixture
def bv4(tmp_path, capsys):
    code, _, _ = run(capsys, "gen-circuit", "bv", "--qubits", "4",
                     "--out", str(tmp_path / "bv4.qasm"))
    assert code == 0
    return str(tmp_path / "bv4.qasm")


class TestCompile:
    def test_bv4_record_is_optimal(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        out = str(tmp_path / "bv4-r")
        code, stdout, _ = run(capsys, "compile", "--variant", "r-smt-star",
                              bv4, cal, "--out", out)
        assert code == 0
        rec = json.loads((tmp_path / "bv4-r.json").read_text())
        assert rec["optimal"] is True
        assert rec["swap_count"] == 0
        assert rec["variant"] == "r-smt-star"
        assert (tmp_path / "bv4-r.qasm").read_text().splitlines()[3] == "OPENQASM 2.0;"
        assert "optimal=true" in stdout

    def test_reliability_variant_rejects_rectangle_routing(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        code, _, stderr = run(capsys, "compile", "--variant", "r-smt-star",
                              "--routing", "rr", bv4, cal,
                              "--out", str(tmp_path / "x"))
        assert code == 2
        assert json.loads(stderr)["error"] == "UsageError"

    def test_omega_needs_a_reliability_variant(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        code, _, stderr = run(capsys, "compile", "--variant", "t-smt",
                              "--omega", "0.7", bv4, cal,
                              "--out", str(tmp_path / "x"))
        assert code == 2
        assert "omega" in json.loads(stderr)["message"]

    def test_greedy_handles_128_qubits(self, tmp_path, capsys):
        circ = str(tmp_path / "big.qasm")
        assert run(capsys, "gen-circuit", "random", "--qubits", "128",
                   "--gates", "2048", "--seed", "1", "--out", circ)[0] == 0
        cal = str(tmp_path / "big-cal.json")
        assert run(capsys, "gen-cal", "--mx", "12", "--my", "12",
                   "--t2", "100000", "--seed", "2", "--out", cal)[0] == 0
        out = str(tmp_path / "big-e")
        code, stdout, _ = run(capsys, "compile", "--variant", "greedy-e",
                              circ, cal, "--out", out)
        assert code == 0
        rec = json.loads((tmp_path / "big-e.json").read_text())
        assert rec["optimal"] is False
        assert len(rec["gates"]) >= 2048

    def test_emit_smtlib(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        script = tmp_path / "bv4.smt2"
        code, _, _ = run(capsys, "compile", "--variant", "t-smt-star", bv4, cal,
                         "--emit-smtlib", str(script), "--out", str(tmp_path / "y"))
        assert code == 0
        text = script.read_text()
        assert "(declare-const" in text
        assert "(check-sat)" in text and "(get-objectives)" in text
        code, _, stderr = run(capsys, "compile", "--variant", "greedy-v", bv4, cal,
                              "--emit-smtlib", str(script), "--out", str(tmp_path / "z"))
        assert code == 2

    def test_infeasible_exits_3(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3, name="tight.json", t2=5)
        code, _, stderr = run(capsys, "compile", "--variant", "t-smt-star",
                              bv4, cal, "--out", str(tmp_path / "x"))
        assert code == 3
        assert json.loads(stderr)["error"] == "Infeasible"

    def test_timeout_without_solution_exits_4(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        code, _, stderr = run(capsys, "compile", "--variant", "r-smt-star",
                              "--time-limit", "1e-9", bv4, cal,
                              "--out", str(tmp_path / "x"))
        assert code == 4
        assert json.loads(stderr)["error"] == "SolverTimeout"

    def test_bad_calibration_exits_1(self, tmp_path, capsys, bv4):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"defaults": {}}))
        code, _, stderr = run(capsys, "compile", "--variant", "t-smt",
                              bv4, str(bad), "--out", str(tmp_path / "x"))
        assert code == 1
        assert json.loads(stderr)["error"] == "CalibrationError"


class TestEvaluate:
    def test_report_matches_record(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        out = str(tmp_path / "bv4-r")
        assert run(capsys, "compile", "--variant", "r-smt-star", bv4, cal,
                   "--out", out)[0] == 0
        code, stdout, _ = run(capsys, "evaluate", out + ".json", cal,
                              "--trials", "20000", "--seed", "3",
                              "--out", str(tmp_path / "rep"))
        assert code == 0
        assert "equivalence=pass" in stdout
        rows = list(csv.DictReader(open(tmp_path / "rep.csv")))
        rec = json.loads((tmp_path / "bv4-r.json").read_text())
        assert len(rows) == 1
        assert float(rows[0]["reliability"]) == rec["reliability"]
        assert abs(float(rows[0]["mc_success"]) - rec["reliability"]) \
            <= 3 * float(rows[0]["stderr"])
        docs = json.loads((tmp_path / "rep.json").read_text())
        assert docs[0]["equivalence_passed"] is True
        assert docs[0]["optimal"] is True


class TestCompare:
    def test_two_variants_two_rows(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        out = str(tmp_path / "cmp")
        code, _, _ = run(capsys, "compare", bv4, cal,
                         "--variants", "t-smt-star,r-smt-star",
                         "--trials", "2000", "--seed", "1", "--out", out)
        assert code == 0
        rows = list(csv.DictReader(open(tmp_path / "cmp.csv")))
        assert [r["variant"] for r in rows] == ["t-smt-star", "r-smt-star"]
        assert all(r["benchmark"] == "bv4" for r in rows)

    def test_reliability_variant_wins_on_its_objective(self, tmp_path, capsys, bv4):
        cal = tmp_path / "synth.json"
        cal.write_text(json.dumps(synth_calibration(3, 3, 11)))
        out = str(tmp_path / "cmp2")
        assert run(capsys, "compare", bv4, str(cal),
                   "--variants", "t-smt-star,r-smt-star",
                   "--trials", "1000", "--seed", "1", "--out", out)[0] == 0
        docs = json.loads((tmp_path / "cmp2.json").read_text())
        assert all(d["optimal"] for d in docs)
        by_variant = {d["variant"]: d for d in docs}
        assert by_variant["r-smt-star"]["reliability"] >= \
            by_variant["t-smt-star"]["reliability"]

    def test_identical_seeds_identical_output(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        rows = []
        for name in ("a", "b"):
            out = str(tmp_path / name)
            assert run(capsys, "compare", bv4, cal,
                       "--variants", "r-smt-star,greedy-v",
                       "--trials", "2000", "--seed", "9", "--out", out)[0] == 0
            with open(out + ".csv") as f:
                got = list(csv.reader(f))
            for row in got[1:]:
                row[-1] = ""  # wall-clock column
            rows.append(got)
        assert rows[0] == rows[1]

    def test_unknown_variant_exits_2(self, tmp_path, capsys, bv4):
        cal = uniform_cal(tmp_path, 3, 3)
        code, _, stderr = run(capsys, "compare", bv4, cal,
                              "--variants", "r-smt-star,qiskit")
        assert code == 2
        assert "qiskit" in json.loads(stderr)["message"]

    def test_thread_cap_is_validated(self, tmp_path, capsys, bv4, monkeypatch):
        monkeypatch.setenv("NISQC_THREADS", "many")
        cal = uniform_cal(tmp_path, 3, 3)
        code, _, stderr = run(capsys, "compare", bv4, cal)
        assert code == 2
        assert "NISQC_THREADS" in json.loads(stderr)["message"]

    def test_thread_cap_respected(self, tmp_path, capsys, bv4, monkeypatch):
        monkeypatch.setenv("NISQC_THREADS", "2")
        cal = uniform_cal(tmp_path, 3, 3)
        out = str(tmp_path / "cmp3")
        code, _, _ = run(capsys, "compare", bv4, cal,
                         "--variants", "greedy-v,greedy-e",
                         "--trials", "500", "--out", out)
        assert code == 0
        assert len(list(csv.DictReader(open(out + ".csv")))) == 2


class TestBench:
    def test_row_count_is_sizes_times_variants(self, tmp_path, capsys):
        out = str(tmp_path / "bench")
        code, _, _ = run(capsys, "bench", "--sizes", "2:4,3:6",
                         "--variants", "greedy-v,t-smt-star",
                         "--trials", "200", "--time-limit", "10", "--out", out)
        assert code == 0
        rows = list(csv.DictReader(open(out + ".csv")))
        assert len(rows) == 4
        assert [r["benchmark"] for r in rows] == \
            ["rand-2-4", "rand-2-4", "rand-3-6", "rand-3-6"]
        docs = json.loads((tmp_path / "bench.json").read_text())
        for d in docs:
            assert d["compile_time_s"] < 10.0
            if d["variant"] == "t-smt-star":
                assert d["optimal"] is True


class TestGenerators:
    def test_gen_circuit_stdout_is_qasm(self, capsys):
        code, stdout, _ = run(capsys, "gen-circuit", "bv", "--qubits", "5",
                              "--secret", "1010")
        assert code == 0
        assert stdout.startswith("OPENQASM 2.0;")
        assert stdout.count("cx ") == 2

    def test_gen_cal_matches_library_synth(self, tmp_path, capsys):
        out = tmp_path / "c.json"
        code, _, _ = run(capsys, "gen-cal", "--mx", "2", "--my", "4",
                         "--seed", "5", "--out", str(out))
        assert code == 0
        assert json.loads(out.read_text()) == synth_calibration(2, 4, 5)

    def test_gen_cal_rejects_degenerate_grid(self, capsys):
        code, _, stderr = run(capsys, "gen-cal", "--mx", "0", "--my", "2")
        assert code == 2
        assert json.loads(stderr)["error"] == "UsageError"
        with pytest.raises(ValueError, match="at least 1x1"):
            synth_calibration(0, 2, 1)
