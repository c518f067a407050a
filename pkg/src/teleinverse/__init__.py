"""Teleportation-based inversion of black-box single-qubit unitaries.

A desk-scale simulator of the repeat-until-success gate-teleportation
protocol that applies the inverse of an unknown single-qubit gate,
together with its verification pipeline: exact Bell-measurement
statistics, query accounting, depolarizing noise injection, seeded count
simulation, maximum-likelihood process tomography, and process fidelity
against the ideal inverse.
"""

from .noise import NoiseConfig, calibrate_p_for_fidelity, depolarize
from .protocol import (
    BellOutcome,
    ProtocolResult,
    UnitaryOracle,
    bsm_probabilities,
    bsm_project,
    bsm_sample,
    derive_rng,
    exact_success_probability,
    prepare_resource,
    run_inversion,
)
from .qmath import (
    UnitaryParams,
    apply_gate,
    bell_state,
    conjugate_partner,
    global_phase_fidelity,
    is_unitary,
    ket,
    kron,
    partial_trace,
    realize_unitary,
    state_fidelity,
)
from .tomography import (
    CountTable,
    MeasurementSetting,
    MleConvergenceError,
    MleResult,
    apply_channel,
    choi_of_channel,
    choi_of_unitary,
    inverse_channel,
    mle_fit,
    mle_reconstruct,
    process_fidelity,
    simulate_counts,
)

__version__ = "0.1.0"

__all__ = [
    "BellOutcome",
    "CountTable",
    "MeasurementSetting",
    "MleConvergenceError",
    "MleResult",
    "NoiseConfig",
    "ProtocolResult",
    "UnitaryOracle",
    "UnitaryParams",
    "apply_channel",
    "apply_gate",
    "bell_state",
    "bsm_probabilities",
    "bsm_project",
    "bsm_sample",
    "calibrate_p_for_fidelity",
    "choi_of_channel",
    "choi_of_unitary",
    "conjugate_partner",
    "depolarize",
    "derive_rng",
    "exact_success_probability",
    "global_phase_fidelity",
    "inverse_channel",
    "is_unitary",
    "ket",
    "kron",
    "mle_fit",
    "mle_reconstruct",
    "partial_trace",
    "prepare_resource",
    "process_fidelity",
    "realize_unitary",
    "run_inversion",
    "simulate_counts",
    "state_fidelity",
]
