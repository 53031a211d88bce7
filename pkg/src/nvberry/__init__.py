"""Geometric phase of a single NV spin in a mechanically rotating diamond."""

__version__ = "0.1.0"

from .eigen import (
    GaugeChoice,
    PhaseResult,
    analytic_eigenstate,
    berry_connection,
    geometric_phase,
    geometric_phase_from_samples,
    solid_angle,
)
from .evolution import (
    Method,
    PhaseDecomposition,
    PropagationConfig,
    adiabaticity_margin,
    extract_geometric_phase,
    propagate,
)
from .measurement import (
    ReadoutParams,
    SensitivityParams,
    end_to_end_estimate,
    phase_uncertainty,
    relative_sensitivity,
    relative_uncertainty,
    sample_signal,
)
from .physics import (
    MagneticField,
    Orientation,
    PhysicalConstants,
    SpinOperator,
    SpinState,
    interaction_hamiltonian,
    spin1_operators,
    zeeman_hamiltonian,
    zero_field_hamiltonian,
)
from .protocols import DecoherenceModel, ProtocolResult, PulseKind, apply_pulse, run_echo, run_ramsey
from .trajectories import SpindleConfig, Trajectory, echo_trajectory, pi_pulse_times, ramsey_trajectory
