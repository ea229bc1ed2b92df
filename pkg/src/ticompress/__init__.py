"""Variational compression of translationally invariant time evolution
into shallow two-qubit-gate circuits, with provably convergent warm starts,
exact-propagator and Pauli-propagation verification, and the echoed-SDF
B-gate construction."""

__version__ = "0.1.0"

from .circuit import Ansatz, Layer, apply, dense_matrix, gate_counts, repeat_blocks
from .hamiltonian import (
    Hamiltonian,
    exact_propagator,
    heisenberg_field,
    principal_log_ok,
    random_two_local_ti,
    spectral_norm,
)
from .lattice import Lattice, PermutationClass, builtin_lattice, validate
from .optimize import (
    CostSpec,
    DescentConfig,
    OptimizationRun,
    bootstrap,
    cost_haar_sampled,
    cost_ticc,
    cost_trace_norm,
    descend,
    evolution_infidelity,
    gradient,
    init_budget_check,
    tcrit_sweep,
    transfer,
)
from .pauli import PauliString, PauliSum, anticommutes, conjugate_by_gate, multiply
from .pauliprop import PropagationConfig, local_infidelity, overlap, propagate
from .trotter import (
    Partition,
    grouped_trotter_circuit,
    heisenberg_partition,
    trotter_circuit,
    trotter_init_point,
)
from .bgate import decompose_su4_counts, u_b, u_sdf, verify_b

__all__ = [
    "Ansatz",
    "CostSpec",
    "DescentConfig",
    "Hamiltonian",
    "Lattice",
    "Layer",
    "OptimizationRun",
    "Partition",
    "PauliString",
    "PauliSum",
    "PermutationClass",
    "PropagationConfig",
    "anticommutes",
    "apply",
    "bootstrap",
    "builtin_lattice",
    "conjugate_by_gate",
    "cost_haar_sampled",
    "cost_ticc",
    "cost_trace_norm",
    "decompose_su4_counts",
    "dense_matrix",
    "descend",
    "evolution_infidelity",
    "exact_propagator",
    "gate_counts",
    "gradient",
    "grouped_trotter_circuit",
    "heisenberg_field",
    "heisenberg_partition",
    "init_budget_check",
    "local_infidelity",
    "multiply",
    "overlap",
    "principal_log_ok",
    "propagate",
    "random_two_local_ti",
    "repeat_blocks",
    "spectral_norm",
    "tcrit_sweep",
    "transfer",
    "trotter_circuit",
    "trotter_init_point",
    "u_b",
    "u_sdf",
    "validate",
    "verify_b",
]
