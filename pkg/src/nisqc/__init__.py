"""Noise-adaptive compiler backend for grid-coupled NISQ machines."""

from .circuit import (
    Circuit,
    DependencyDag,
    Gate,
    GateKind,
    ParseError,
    ProgramGraph,
    build_dag,
    build_program_graph,
    gen_bv,
    gen_random,
    gen_toffoli,
    parse_circuit,
    to_json,
    to_qasm,
)
from .machine import (
    CalibrationError,
    DerivedTables,
    GridMachine,
    HardwareEdge,
    HardwareQubit,
    build_tables,
    load_calibration,
    manhattan,
    one_bend_junctions,
    path_reliability,
    static_cnot_duration,
    synth_calibration,
)
from .codegen import (
    CodegenError,
    CompiledCircuit,
    PhysGate,
    emit_qasm,
    expand,
    from_record,
    record_to_json,
    to_record,
)
from .evaluate import (
    BruteForceResult,
    EvalReport,
    EquivalenceResult,
    LeafRecord,
    brute_force_optimal,
    compiled_as_circuit,
    equivalence_check,
    monte_carlo_success,
    reliability_score,
    statevector_sim,
    write_report,
)
from .heuristic import (
    GreedyPolicy,
    HeuristicConfig,
    compile_with_placement,
    greedy_edge_map,
    greedy_vertex_map,
    heuristic_compile,
)
from .optimal import (
    Infeasible,
    Placement,
    ProblemConfig,
    RouteAssignment,
    Routing,
    Schedule,
    Solution,
    SolverTimeout,
    Variant,
    canonical_schedule,
    check_solution,
    emit_smtlib,
    gate_duration,
    gate_reliability,
    objective,
    solve_exact,
)

__version__ = "0.1.0"
