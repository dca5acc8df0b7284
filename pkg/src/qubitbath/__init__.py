"""Collective relaxation of a qubit array coupled through a shared
dissipative bath: coupling generation, full-space Lindblad integration,
collective-mode analysis, and the exact two-qubit reduced system."""

from .couplings import (
    CouplingDecomposition,
    CouplingMatrices,
    HoppingAmplitudes,
    build_effective_hamiltonian,
    compute_hoppings,
    decompose_couplings,
    mirror_sites,
    recompose,
    validate,
)
from .engine import (
    DensityMatrix,
    EmissionTrajectory,
    correlation_matrix,
    emission_rates,
    evolve,
    fully_excited_state,
    liouvillian_apply,
    nonreciprocity_metrics,
    single_excitation_block,
)
from .errors import (
    DomainError,
    IntegrationError,
    PositivityWarning,
    QubitBathError,
    ResourceLimitError,
    ValidationError,
)
from .ferromagnet import (
    CharacteristicScales,
    FerroBathParams,
    MaterialBath,
    bessel,
    characteristic_scales,
    coupling_matrices,
    couplings_from_material,
    dispersion,
    gap_at_field,
    load_material,
    qubit_frequency_at_field,
)
from .geometry import QubitArray
from .modes import (
    CollectiveModes,
    ManifoldState,
    diagonalize_decoherence,
    probability_flow,
    project_single_excitation,
    transform_couplings,
)
from .twoqubit import (
    TwoQubitParams,
    TwoQubitState,
    TwoQubitTrajectory,
    reduced_rhs,
    solve_two_qubit,
)

__version__ = "0.1.0"

__all__ = [
    "CharacteristicScales",
    "CollectiveModes",
    "CouplingDecomposition",
    "CouplingMatrices",
    "DensityMatrix",
    "DomainError",
    "EmissionTrajectory",
    "FerroBathParams",
    "HoppingAmplitudes",
    "IntegrationError",
    "ManifoldState",
    "MaterialBath",
    "PositivityWarning",
    "QubitArray",
    "QubitBathError",
    "ResourceLimitError",
    "TwoQubitParams",
    "TwoQubitState",
    "TwoQubitTrajectory",
    "ValidationError",
    "bessel",
    "build_effective_hamiltonian",
    "characteristic_scales",
    "correlation_matrix",
    "coupling_matrices",
    "couplings_from_material",
    "compute_hoppings",
    "decompose_couplings",
    "diagonalize_decoherence",
    "dispersion",
    "emission_rates",
    "evolve",
    "fully_excited_state",
    "gap_at_field",
    "liouvillian_apply",
    "load_material",
    "mirror_sites",
    "nonreciprocity_metrics",
    "probability_flow",
    "project_single_excitation",
    "qubit_frequency_at_field",
    "recompose",
    "reduced_rhs",
    "single_excitation_block",
    "solve_two_qubit",
    "transform_couplings",
    "validate",
]
