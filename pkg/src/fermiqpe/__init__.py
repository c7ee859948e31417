"""Phase estimation of fermionic Hamiltonians on a simulated qubit register.

The pipeline runs model -> Jordan-Wigner strings -> native gates ->
state-vector phase estimation, and each stage is checked against an
exact-diagonalization oracle.
"""

from __future__ import annotations

__version__ = "0.1.0"

from fermiqpe.compiler import (
    CPhase,
    CRotZ,
    GateSequence,
    GlobalPhase,
    H,
    Rot,
    ZZ,
    compile_controlled_evolution,
    compile_string_evolution,
    compile_trotter_step,
    count_report,
    count_two_qubit_gates,
    table_count,
)
from fermiqpe.errors import (
    ConfigError,
    ConsistencyError,
    DimensionError,
    FermiQPEError,
    InvalidModelError,
    PauliPrincipleError,
    ResourceError,
    UnsupportedShapeError,
    WiringError,
)
from fermiqpe.fermion_models import (
    FermionHamiltonian,
    LadderTerm,
    build_hubbard,
    build_pairing,
)
from fermiqpe.oracle import (
    EigenSolution,
    eigensolve,
    fock_matrix,
    gate_matrix,
    pauli_matrix,
    pe_exact_distribution,
)
from fermiqpe.pauli import PauliHamiltonian, PauliString, jw_hamiltonian
from fermiqpe.phase_estimation import (
    PEConfig,
    SpectrumHistogram,
    bin_from_energy,
    default_energy_bounds,
    energy_from_bin,
    max_dt,
    multiplicity_profile,
    run_phase_estimation,
    spectrum_scan,
)
from fermiqpe.statevector import (
    RngStream,
    StateVector,
    apply_gate,
    apply_sequence,
    inverse_qft,
    new_basis_state,
    new_random_state,
    sample_work_register,
)

__all__ = [
    "CPhase",
    "CRotZ",
    "ConfigError",
    "ConsistencyError",
    "DimensionError",
    "EigenSolution",
    "FermiQPEError",
    "FermionHamiltonian",
    "GateSequence",
    "GlobalPhase",
    "H",
    "InvalidModelError",
    "LadderTerm",
    "PEConfig",
    "PauliHamiltonian",
    "PauliPrincipleError",
    "PauliString",
    "ResourceError",
    "RngStream",
    "Rot",
    "SpectrumHistogram",
    "StateVector",
    "UnsupportedShapeError",
    "WiringError",
    "ZZ",
    "apply_gate",
    "apply_sequence",
    "bin_from_energy",
    "build_hubbard",
    "build_pairing",
    "compile_controlled_evolution",
    "compile_string_evolution",
    "compile_trotter_step",
    "count_report",
    "count_two_qubit_gates",
    "default_energy_bounds",
    "eigensolve",
    "energy_from_bin",
    "fock_matrix",
    "gate_matrix",
    "inverse_qft",
    "jw_hamiltonian",
    "max_dt",
    "multiplicity_profile",
    "new_basis_state",
    "new_random_state",
    "pauli_matrix",
    "pe_exact_distribution",
    "run_phase_estimation",
    "sample_work_register",
    "spectrum_scan",
    "table_count",
]
