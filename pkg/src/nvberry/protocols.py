"""Ramsey and spin-echo sequences on the rotating NV.

Everything here runs in the microwave-fixed gauge and in the frame of a drive
resonant with the 0 <-> +1 transition, so between pulses each level only
acquires its geometric phase exp(-i Phi_m). Pulses are instantaneous unless
:func:`finite_pulse` is used. The -1 level is assumed spectrally detuned by
the co-rotating splitting field and is never driven.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .eigen import GaugeChoice, berry_connection, geometric_phase
from .errors import NoDrive, NotAdiabatic, SignalDead
from .evolution import MIN_MARGIN, PropagationConfig, adiabaticity_margin, propagate
from .physics import Basis, Orientation, PhysicalConstants, SpinState
from .trajectories import SpindleConfig, Trajectory, echo_trajectory, pi_pulse_times, ramsey_trajectory

# z'-basis index of each m; amplitudes are ordered (+1, 0, -1)
IDX = {1: 0, 0: 1, -1: 2}
MIN_DRIVE = 1e-6
DEAD_SIGNAL_FACTOR = 5.0


class PulseKind(str, Enum):
    HALF_PI = "half_pi"
    PI = "pi"
    READOUT = "readout"

    @property
    def angle(self) -> float:
        return {PulseKind.HALF_PI: math.pi / 2, PulseKind.PI: math.pi}.get(self, 0.0)


@dataclass(frozen=True)
class PulseEvent:
    kind: PulseKind
    time: float
    axis_phase: float = 0.0


class DecoherenceKind(str, Enum):
    GAUSSIAN_T2STAR = "gaussian"
    EXPONENTIAL_T2 = "exponential"


@dataclass(frozen=True)
class DecoherenceModel:
    kind: DecoherenceKind
    timescale: float

    def __post_init__(self):
        object.__setattr__(self, "kind", DecoherenceKind(self.kind))
        if not self.timescale > 0:
            raise ValueError(f"decoherence timescale must be positive, got {self.timescale}")

    @classmethod
    def t2star(cls, timescale: float = 10e-6) -> DecoherenceModel:
        return cls(DecoherenceKind.GAUSSIAN_T2STAR, timescale)

    @classmethod
    def t2(cls, timescale: float = 2e-3) -> DecoherenceModel:
        return cls(DecoherenceKind.EXPONENTIAL_T2, timescale)

    def envelope(self, t: float) -> float:
        x = t / self.timescale
        if self.kind is DecoherenceKind.GAUSSIAN_T2STAR:
            return math.exp(-(x**2))
        return math.exp(-x)


NO_DECOHERENCE = DecoherenceModel(DecoherenceKind.EXPONENTIAL_T2, math.inf)


@dataclass(frozen=True)
class ProtocolResult:
    phase_estimate: float
    population_m0: float
    coherence_factor: float
    pulses: list[PulseEvent] = field(default_factory=list)
    retard: float = 0.0
    duration: float = 0.0

    @property
    def pulse_times(self) -> list[float]:
        return [p.time for p in self.pulses]


def _drive_phase(o: Orientation, gauge: GaugeChoice) -> float:
    # phase of <+1|S_z|0> relative to its value at phi = 0
    return -o.phi if GaugeChoice(gauge) is GaugeChoice.RAW else 0.0


def pulse_unitary(kind: PulseKind, axis_phase: float, o: Orientation, gauge: GaugeChoice = GaugeChoice.RAW) -> np.ndarray:
    """3x3 ideal rotation in the {+1, 0} subspace of the z'-basis."""
    kind = PulseKind(kind)
    if math.sin(o.theta) <= MIN_DRIVE:
        raise NoDrive(f"microwave field along the NV axis does not drive it (theta={o.theta})")
    half = 0.5 * kind.angle
    chi = axis_phase + _drive_phase(o, gauge)
    U = np.eye(3, dtype=complex)
    c, s = math.cos(half), math.sin(half)
    p, z = IDX[1], IDX[0]
    U[p, p] = U[z, z] = c
    U[p, z] = -1j * s * complex(math.cos(chi), math.sin(chi))
    U[z, p] = -1j * s * complex(math.cos(chi), -math.sin(chi))
    return U


def _require_nv_basis(state: SpinState) -> None:
    if state.basis.kind != "nv":
        raise ValueError("pulses act on states expressed in the NV z'-basis")


def apply_pulse(
    state: SpinState,
    kind: PulseKind,
    axis_phase: float,
    o: Orientation,
    gauge: GaugeChoice | None = None,
) -> SpinState:
    """Ideal resonant pulse on the 0 <-> +1 transition.

    The coupling follows the weak-drive form of the z-polarized microwave
    interaction: its strength scales with sin(theta) and, in the raw gauge,
    its phase follows the NV azimuth. In the microwave-fixed gauge it does
    not depend on phi. The -1 amplitude is left alone.
    """
    _require_nv_basis(state)
    gauge = state.basis.gauge if gauge is None else GaugeChoice(gauge)
    U = pulse_unitary(kind, axis_phase, o, gauge)
    return SpinState(U @ state.amplitudes, Basis.nv(o, gauge))


def finite_pulse(
    state: SpinState,
    kind: PulseKind,
    axis_phase: float,
    traj: Trajectory,
    t_start: float,
    rabi_frequency: float,
    gauge: GaugeChoice = GaugeChoice.MICROWAVE_FIXED,
    cfg: PropagationConfig | None = None,
) -> tuple[SpinState, float]:
    """Pulse of finite length while the crystal keeps turning.

    ``rabi_frequency`` (rad/s) is the on-resonance Rabi rate at
    sin(theta) = 1; the pulse lasts angle / (rabi_frequency sin theta).
    Inside the pulse the levels keep acquiring geometric phase at the rate
    connection * dphi/dt. Returns the final state and the end time.
    """
    _require_nv_basis(state)
    kind = PulseKind(kind)
    gauge = GaugeChoice(gauge)
    o0 = traj.orientation(t_start)
    if math.sin(o0.theta) <= MIN_DRIVE:
        raise NoDrive(f"microwave field along the NV axis does not drive it (theta={o0.theta})")
    tau = kind.angle / (rabi_frequency * math.sin(o0.theta))
    p, z = IDX[1], IDX[0]

    def H(times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        th = np.asarray(traj.theta_of_t(times)) * np.ones_like(times)
        ph = np.asarray(traj.phi_of_t(times)) * np.ones_like(times)
        dph = np.asarray(traj.dphi_dt(times)) * np.ones_like(times)
        out = np.zeros((times.size, 3, 3), dtype=complex)
        for m, i in IDX.items():
            out[:, i, i] = berry_connection(m, th, gauge) * dph
        chi = axis_phase - ph if gauge is GaugeChoice.RAW else np.full_like(ph, axis_phase)
        g = 0.5 * rabi_frequency * np.sin(th)
        out[:, p, z] = g * np.exp(1j * chi)
        out[:, z, p] = g * np.exp(-1j * chi)
        return out

    if cfg is None:
        cfg = PropagationConfig(dt=tau / 2000)
    nv_start = SpinState(state.amplitudes, Basis.nv(o0, gauge))
    out = propagate(H, nv_start, t_start, t_start + tau, cfg)
    return SpinState(out.amplitudes, Basis.nv(traj.orientation(t_start + tau), gauge)), t_start + tau


def _free_phases(traj: Trajectory, a: float, b: float) -> dict[int, float]:
    """Geometric phase of each level between times a and b (microwave-fixed gauge)."""
    if b <= a:
        return {m: 0.0 for m in IDX}
    seg = Trajectory(
        theta_of_t=lambda t: traj.theta_of_t(np.asarray(t) + a),
        phi_of_t=lambda t: traj.phi_of_t(np.asarray(t) + a),
        dphi_dt=lambda t: traj.dphi_dt(np.asarray(t) + a),
        duration=b - a,
        closed=False,
        dtheta_dt=None if traj.dtheta_dt is None else (lambda t: traj.dtheta_dt(np.asarray(t) + a)),
    )
    return {m: geometric_phase(seg, m, GaugeChoice.MICROWAVE_FIXED).geometric for m in IDX}


def _free_evolve(amps: np.ndarray, phases: dict[int, float]) -> np.ndarray:
    out = amps.copy()
    for m, i in IDX.items():
        out[i] *= complex(math.cos(phases[m]), -math.sin(phases[m]))
    return out


def _check_alive(duration: float, deco: DecoherenceModel) -> None:
    if duration > DEAD_SIGNAL_FACTOR * deco.timescale:
        raise SignalDead(
            f"sequence of {duration:.3g} s exceeds {DEAD_SIGNAL_FACTOR:g} x the {deco.timescale:.3g} s coherence time"
        )


def _check_adiabatic(traj: Trajectory, constants: PhysicalConstants) -> None:
    margin = adiabaticity_margin(traj, constants)
    if margin < MIN_MARGIN:
        raise NotAdiabatic(f"adiabaticity margin {margin:.3g} is below {MIN_MARGIN}")


def _mix(pure_population: float, coherence: float) -> float:
    return 0.5 + coherence * (pure_population - 0.5)


def run_ramsey(
    cfg: SpindleConfig,
    phi0: float,
    deco: DecoherenceModel = DecoherenceModel.t2star(),
    retard: float = 0.0,
    constants: PhysicalConstants = PhysicalConstants(),
) -> ProtocolResult:
    """pi/2 at phi = 0, free rotation through phi0, pi/2 with phase retard.

    The reported phase is the relative phase Phi_0 - Phi_+1, i.e. how far the
    +1 arm advances against the 0 arm; it equals phi0 cos(theta). The closing
    pulse has axis phase pi - retard, so that population_m0 is
    (1 + c cos(Phi + retard)) / 2.
    """
    if cfg.nv_theta is None:
        raise ValueError("Ramsey geometry needs nv_theta")
    duration = phi0 / cfg.omega
    _check_alive(duration, deco)
    start = Orientation(cfg.nv_theta, 0.0)
    gauge = GaugeChoice.MICROWAVE_FIXED
    state = SpinState(np.array([0, 1, 0], dtype=complex), Basis.nv(start, gauge))
    state = apply_pulse(state, PulseKind.HALF_PI, 0.0, start)

    if phi0 > 0:
        traj = ramsey_trajectory(cfg, phi0)
        _check_adiabatic(traj, constants)
        phases = _free_phases(traj, 0.0, duration)
        end = traj.orientation(duration)
    else:
        phases = {m: 0.0 for m in IDX}
        end = start
    state = SpinState(_free_evolve(state.amplitudes, phases), Basis.nv(end, gauge))
    closing = math.pi - retard
    state = apply_pulse(state, PulseKind.HALF_PI, closing, end)

    coherence = deco.envelope(duration)
    pulses = [
        PulseEvent(PulseKind.HALF_PI, 0.0, 0.0),
        PulseEvent(PulseKind.HALF_PI, duration, closing),
        PulseEvent(PulseKind.READOUT, duration),
    ]
    return ProtocolResult(
        phase_estimate=phases[0] - phases[1],
        population_m0=_mix(float(state.populations[IDX[0]]), coherence),
        coherence_factor=coherence,
        pulses=pulses,
        retard=retard,
        duration=duration,
    )


def run_echo(
    cfg: SpindleConfig,
    rotations: int,
    deco: DecoherenceModel = DecoherenceModel.t2(),
    retard: float = 0.0,
    constants: PhysicalConstants = PhysicalConstants(),
) -> ProtocolResult:
    """pi/2, pi pulses whenever the NV axis is perpendicular to z, pi/2 after n turns.

    Each pi pulse swaps the two arms, so the alternating geometric phase
    adds up. The reported phase is how far the arm that started in +1 lags
    the arm that started in 0 (4 n theta0); with this geometry that has the
    opposite orientation to the Ramsey arm comparison, so the closing pulse
    uses axis phase pi + retard to keep population_m0 = (1 + c cos(Phi + retard)) / 2.
    """
    if cfg.tilt_theta0 is None:
        raise ValueError("echo geometry needs tilt_theta0")
    traj = echo_trajectory(cfg, rotations)
    _check_alive(traj.duration, deco)
    _check_adiabatic(traj, constants)
    gauge = GaugeChoice.MICROWAVE_FIXED
    times = pi_pulse_times(cfg, rotations)

    o = traj.orientation(0.0)
    state = apply_pulse(SpinState(np.array([0, 1, 0], dtype=complex), Basis.nv(o, gauge)), PulseKind.HALF_PI, 0.0, o)
    lag = 0.0
    edges = [0.0, *times, traj.duration]
    for k, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        phases = _free_phases(traj, a, b)
        lag += (1 if k % 2 == 0 else -1) * (phases[1] - phases[0])
        o = traj.orientation(b)
        state = SpinState(_free_evolve(state.amplitudes, phases), Basis.nv(o, gauge))
        if k < len(times):
            state = apply_pulse(state, PulseKind.PI, 0.0, o)
    closing = math.pi + retard
    state = apply_pulse(state, PulseKind.HALF_PI, closing, o)

    coherence = deco.envelope(traj.duration)
    pulses = [PulseEvent(PulseKind.HALF_PI, 0.0, 0.0)]
    pulses += [PulseEvent(PulseKind.PI, t, 0.0) for t in times]
    pulses += [PulseEvent(PulseKind.HALF_PI, traj.duration, closing), PulseEvent(PulseKind.READOUT, traj.duration)]
    return ProtocolResult(
        phase_estimate=lag,
        population_m0=_mix(float(state.populations[IDX[0]]), coherence),
        coherence_factor=coherence,
        pulses=pulses,
        retard=retard,
        duration=traj.duration,
    )
