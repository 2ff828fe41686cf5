"""Planted MAX-3-XORSAT workbench.

Instances are rank-3 hypergraphs of signed parity constraints with a planted
partial solution.  The package provides the classical quasi-greedy baseline,
a full statevector simulator with diagonal-phase and transverse-mixer layers,
the QAOA / folded-AQC / trial-minimum-annealing protocols, the resummed
perturbation theory for two-well tunneling rates, and batch experiment
orchestration.

Global sign convention: bit 0 of a basis index maps to Pauli-Z eigenvalue +1,
bit 1 to -1.  The least-significant bit of an integer bitstring is variable 0.
"""

from .instances import (
    Constraint,
    Instance,
    ParameterError,
    generate_ppsp,
    hamming_distance,
    raw_energy,
    normalized_energy,
    xor_satisfiable,
)
from .greedy import GreedyConfig, GreedyResult, bit_gain, greedy_descent, restart_search
from .simulator import (
    DiagonalTable,
    MeasureStats,
    ResourceError,
    StateVector,
    apply_mixer,
    apply_phase,
    build_diagonal,
    init_state,
    measure_stats,
)
from .protocols import (
    PROTOCOL_KINDS,
    LoweringHamiltonian,
    Schedule,
    make_lowering,
    run_fold_aqc,
    run_qaoa,
    run_protocol,
    run_tma,
    runtime_average,
)
from .theory import (
    DecayFit,
    NumericError,
    PtasSolution,
    TwoWellParams,
    appendix_exponent_table,
    aqc_overlap_gap,
    avg_flip_energy,
    bare_two_well_energy,
    critical_field,
    dressed_flip_cost,
    fit_decay,
    p2_gap,
    solve_ptas,
    two_well_gap_ed,
    two_well_gap_theory,
)
from .analysis import (
    D_GRID,
    Q_GRID,
    RunSummary,
    ScalingCurve,
    aggregate,
    approx_threshold,
    classify_decay,
    summarize_run,
    write_csv,
)
from .cli import run_experiment, theory_report

__version__ = "0.1.0"
