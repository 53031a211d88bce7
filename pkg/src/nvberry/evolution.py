"""Brute-force Schrodinger propagation and numerical geometric-phase extraction.

This is the independent check on the analytic phases in :mod:`nvberry.eigen`:
the spin is evolved step by step under the rotating zero-field Hamiltonian and
the phase is read off from overlaps with the instantaneous eigenstates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .eigen import GaugeChoice, _check_m, _segments, eigenstate_amplitudes
from .errors import NonHermitian, NormDrift, NotAdiabatic, PhaseUnwrapFailure
from .physics import LAB_Z, PhysicalConstants, SpinOperator, SpinState, zero_field_matrix
from .trajectories import Trajectory

NORM_DRIFT_LIMIT = 1e-10
HERMITIAN_LIMIT = 1e-12
MIN_MARGIN = 10.0
MARGIN_CAP = 1e30
CHUNK_STEPS = 1 << 16
CHECKPOINTS_PER_TURN = 64
MIN_CHECKPOINTS = 256
MIN_OVERLAP = 0.9
# RK4 is not norm preserving; its drift grows like (D dt)^5, so it needs a finer step
RK4_MAX_PHASE_STEP = 0.004


class Method(str, Enum):
    PIECEWISE_EXPONENTIAL = "exp"
    RK4 = "rk4"


@dataclass(frozen=True)
class PropagationConfig:
    dt: float
    method: Method = Method.PIECEWISE_EXPONENTIAL
    tol: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not 0 < self.tol <= 1e-3:
            raise ValueError(f"tol must lie in (0, 1e-3], got {self.tol}")

    @classmethod
    def auto(cls, scale: float, tol: float = 1e-3, method: Method = Method.PIECEWISE_EXPONENTIAL):
        """Step size for a Hamiltonian of spectral scale ``scale`` (rad/s)."""
        step = 0.8 * math.sqrt(tol)
        if Method(method) is Method.RK4:
            step = min(step, RK4_MAX_PHASE_STEP)
        return cls(dt=step / scale, method=method, tol=tol)


@dataclass(frozen=True)
class PhaseDecomposition:
    """Phase lag of a transported eigenstate, split into its parts (rad).

    ``dynamic`` is the adiabatic D m^2 t term plus ``nonadiabatic_shift``,
    the part of the measured phase that is even under mirroring the path.
    """

    total: float
    dynamic: float
    geometric: float
    nonadiabatic_shift: float = 0.0


HamiltonianFn = Callable[[np.ndarray], np.ndarray]


def _sample_hamiltonian(H_of_t, times: np.ndarray) -> np.ndarray:
    try:
        H = H_of_t(times)
        H = H.entries if isinstance(H, SpinOperator) else np.asarray(H, dtype=complex)
    except (TypeError, ValueError):
        H = None
    if H is None or H.shape != (times.size, 3, 3):
        H = np.stack([np.asarray(getattr(h, "entries", h), dtype=complex) for h in map(H_of_t, times)])
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().swapaxes(-1, -2))) > HERMITIAN_LIMIT * scale:
        raise NonHermitian("Hamiltonian sample is not Hermitian")
    return np.ascontiguousarray(H, dtype=np.complex128)


def _evolve(H_of_t, psi: np.ndarray, t0: float, t1: float, dt: float, method: Method) -> np.ndarray:
    span = t1 - t0
    if span == 0:
        return psi
    n = max(1, math.ceil(abs(span) / dt - 1e-9))
    h = span / n
    done = 0
    while done < n:
        k = min(CHUNK_STEPS, n - done)
        start = t0 + done * h
        if method is Method.RK4:
            times = start + 0.5 * h * np.arange(2 * k + 1)
            psi = _kernels.evolve_rk4(_sample_hamiltonian(H_of_t, times), h, psi)
        else:
            times = start + h * (np.arange(k) + 0.5)
            psi = _kernels.evolve_midpoint(_sample_hamiltonian(H_of_t, times), h, psi)
        done += k
    return psi


def _check_norm(psi: np.ndarray) -> None:
    drift = abs(float(np.linalg.norm(psi)) - 1.0)
    if drift > NORM_DRIFT_LIMIT:
        raise NormDrift(f"state norm drifted by {drift:.3g}")


def propagate(H_of_t: HamiltonianFn, psi0: SpinState, t0: float, t1: float, cfg: PropagationConfig) -> SpinState:
    """Evolve ``psi0`` from t0 to t1 under i d/dt psi = H(t) psi.

    ``H_of_t`` should accept an array of times and return an (N, 3, 3) stack;
    scalar-only callables are sampled one time at a time. The exponential
    method applies exp(-i H(t_mid) dt) per step.
    """
    psi = _evolve(H_of_t, np.array(psi0.amplitudes), t0, t1, cfg.dt, cfg.method)
    _check_norm(psi)
    return SpinState(psi / np.linalg.norm(psi), psi0.basis)


def adiabaticity_margin(traj: Trajectory, constants: PhysicalConstants = PhysicalConstants(), samples: int = 4097) -> float:
    """2 D^2 / max_t (theta'^2 + sin^2 theta phi'^2); capped at MARGIN_CAP."""
    t = np.linspace(0.0, traj.duration, samples)
    th = np.asarray(traj.theta_of_t(t), dtype=float) * np.ones_like(t)
    rate = np.asarray(traj.theta_rate(t), dtype=float) ** 2 + (np.sin(th) * np.asarray(traj.dphi_dt(t))) ** 2
    worst = float(np.max(rate))
    if worst <= 2 * constants.D**2 / MARGIN_CAP:
        return MARGIN_CAP
    return 2 * constants.D**2 / worst


def rotating_hamiltonian(traj: Trajectory, constants: PhysicalConstants, splitting: float = 0.0) -> HamiltonianFn:
    """H(t) = D (n(t).S)^2 + splitting n(t).S in the lab basis, vectorized in t."""

    def H(t):
        t = np.asarray(t, dtype=float)
        return zero_field_matrix(traj.theta_of_t(t) * np.ones_like(t), traj.phi_of_t(t), constants.D, splitting)

    return H


def _checkpoint_times(traj: Trajectory, extra: Sequence[float]) -> np.ndarray:
    t = np.linspace(0.0, traj.duration, 2049)
    swept = float(np.trapezoid(np.abs(np.asarray(traj.dphi_dt(t)) * np.ones_like(t)), t))
    n = max(MIN_CHECKPOINTS, CHECKPOINTS_PER_TURN * math.ceil(swept / (2 * math.pi)))
    grid = np.linspace(0.0, traj.duration, n + 1)
    return np.unique(np.concatenate([grid, [x for x in extra if 0.0 < x < traj.duration]]))


def _lag_series(traj, m, constants, cfg, gauge, splitting, checkpoints):
    """Unwrapped geometric lag at each checkpoint for a single run."""
    H = rotating_hamiltonian(traj, constants, splitting)
    energy = constants.D * m * m + splitting * m
    th = np.asarray(traj.theta_of_t(checkpoints), dtype=float) * np.ones_like(checkpoints)
    refs = eigenstate_amplitudes(m, th, traj.phi_of_t(checkpoints), gauge)
    psi = refs[0].copy()
    raw = np.empty(checkpoints.size)
    raw[0] = 0.0
    for j in range(1, checkpoints.size):
        psi = _evolve(H, psi, checkpoints[j - 1], checkpoints[j], cfg.dt, cfg.method)
        ov = np.vdot(refs[j], psi)
        if abs(ov) < MIN_OVERLAP:
            raise NotAdiabatic(f"overlap with the instantaneous eigenstate fell to {abs(ov):.3f}")
        raw[j] = -np.angle(ov) - energy * checkpoints[j]
    _check_norm(psi)
    steps = np.diff(raw)
    wrapped = (steps + math.pi) % (2 * math.pi) - math.pi
    if np.any(np.abs(wrapped) > math.pi / 2):
        raise PhaseUnwrapFailure("phase moved by more than pi/2 between checkpoints")
    return np.concatenate([[0.0], np.cumsum(wrapped)]), energy


def _rectified(series, checkpoints, segments):
    total = 0.0
    for a, b, sign in segments:
        ia = int(np.searchsorted(checkpoints, a))
        ib = int(np.searchsorted(checkpoints, b))
        total += sign * (series[ib] - series[ia])
    return total


def extract_geometric_phase(
    traj: Trajectory,
    m: int,
    cfg: PropagationConfig | None = None,
    constants: PhysicalConstants = PhysicalConstants(),
    gauge: GaugeChoice = GaugeChoice.RAW,
    rectification: Sequence[float] | None = None,
    symmetrize: bool = True,
    splitting: float = 0.0,
) -> PhaseDecomposition:
    """Geometric phase of eigenstate ``m`` transported along ``traj``, by direct propagation.

    The lag -arg<psi_ref|psi> is tracked at dense checkpoints so it can be
    unwrapped past pi, and the adiabatic dynamic phase D m^2 t is removed
    analytically. With ``symmetrize`` the mirrored path (phi -> -phi) is run
    as well: the geometric part flips sign under the mirror while the leading
    non-adiabatic energy shift does not, so half the difference isolates the
    geometric phase. ``rectification`` applies ideal pi-pulse sign flips as in
    :func:`nvberry.eigen.geometric_phase`.
    """
    m = _check_m(m)
    gauge = GaugeChoice(gauge)
    margin = adiabaticity_margin(traj, constants)
    if margin < MIN_MARGIN:
        raise NotAdiabatic(f"adiabaticity margin {margin:.3g} is below {MIN_MARGIN}")
    if cfg is None:
        cfg = PropagationConfig.auto(constants.D + abs(splitting))
    pulses = list(rectification or ())
    checkpoints = _checkpoint_times(traj, pulses)
    segments = _segments(traj.duration, pulses)
    durations = sum(sign * (b - a) for a, b, sign in segments)

    fwd, energy = _lag_series(traj, m, constants, cfg, gauge, splitting, checkpoints)
    g_fwd = _rectified(fwd, checkpoints, segments)
    adiabatic_dynamic = energy * durations
    total = g_fwd + adiabatic_dynamic
    if not symmetrize:
        return PhaseDecomposition(total=total, dynamic=adiabatic_dynamic, geometric=g_fwd)

    mir, _ = _lag_series(traj.mirrored(), m, constants, cfg, gauge, splitting, checkpoints)
    g_mir = _rectified(mir, checkpoints, segments)
    geometric = 0.5 * (g_fwd - g_mir)
    shift = 0.5 * (g_fwd + g_mir)
    return PhaseDecomposition(
        total=total,
        dynamic=adiabatic_dynamic + shift,
        geometric=geometric,
        nonadiabatic_shift=shift,
    )
