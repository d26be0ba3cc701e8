"""Trapped-ion force sensing: probe models, dynamics, decoupling and sensitivity."""

from .dynamics import HeatingChannel, Kick, PulseSequence, Segment, SignalTrace, evolve, evolve_lindblad
from .hilbert import HilbertSpace, NumericalError, Operator, QuantumState, TruncationWarning
from .models import (
    ProbeParams,
    WeakCouplingWarning,
    build_effective_hamiltonian,
    build_lab_hamiltonian,
    rabi_frequency_axial,
    transverse_force_parameters,
)
from .sensing import (
    ForceEstimate,
    SensitivityReport,
    estimate_axial_force,
    estimate_transverse_force,
    heating_limited_sensitivity,
    sensitivity_from_signal,
    shot_noise_sensitivity,
)

__version__ = "0.1.0"

__all__ = [
    "ForceEstimate",
    "HeatingChannel",
    "HilbertSpace",
    "Kick",
    "NumericalError",
    "Operator",
    "ProbeParams",
    "PulseSequence",
    "QuantumState",
    "Segment",
    "SensitivityReport",
    "SignalTrace",
    "TruncationWarning",
    "WeakCouplingWarning",
    "build_effective_hamiltonian",
    "build_lab_hamiltonian",
    "estimate_axial_force",
    "estimate_transverse_force",
    "evolve",
    "evolve_lindblad",
    "heating_limited_sensitivity",
    "rabi_frequency_axial",
    "sensitivity_from_signal",
    "shot_noise_sensitivity",
    "transverse_force_parameters",
]
