"""Instantaneous eigenstates of the zero-field Hamiltonian and geometric phases.

Phases follow the exp(-i Phi) convention: a state transported along a path
picks up the factor exp(-i Phi_m). With this convention the raw analytic
eigenbasis gives the connection m (1 - cos theta) per unit azimuth, and the
microwave-fixed gauge (basis state multiplied by exp(-i m phi)) gives
-m cos theta. The two differ by exactly m per unit azimuth, so closed loops
agree modulo 2 pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import NotClosed, QuadratureFailure, RawGaugeSingularity
from .physics import LAB_Z, SQRT2, GaugeChoice, Orientation, SpinState

__all__ = [
    "GaugeChoice",
    "PhaseResult",
    "analytic_eigenstate",
    "eigenstate_amplitudes",
    "berry_connection",
    "geometric_phase",
    "geometric_phase_from_samples",
    "solid_angle",
    "is_closed",
]

QUAD_RTOL = 1e-9
QUAD_ATOL = 1e-12
CLOSURE_TOL = 1e-9
DIRAC_STRING_CLEARANCE = 1e-6
VALID_M = (-1, 0, 1)


@dataclass(frozen=True)
class PhaseResult:
    geometric: float
    solid_angle: float | None
    gauge: GaugeChoice


def _check_m(m: int) -> int:
    if m not in VALID_M:
        raise ValueError(f"magnetic quantum number must be -1, 0 or +1, got {m!r}")
    return int(m)


def eigenstate_amplitudes(m: int, theta, phi, gauge: GaugeChoice = GaugeChoice.RAW) -> np.ndarray:
    """Lab-basis components of the z'-quantized state |m>; vectorized over angles.

    Returns shape ``broadcast(theta, phi).shape + (3,)``.
    """
    m = _check_m(m)
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    st = np.sin(theta)
    c2 = np.cos(theta / 2) ** 2
    s2 = np.sin(theta / 2) ** 2
    eip = np.exp(1j * phi)
    if m == 1:
        v = np.stack([c2 + 0j, eip * st / SQRT2, eip**2 * s2], axis=-1)
    elif m == 0:
        v = np.stack([-eip.conj() * st / SQRT2, np.cos(theta) + 0j, eip * st / SQRT2], axis=-1)
    else:
        v = np.stack([eip.conj() ** 2 * s2, -eip.conj() * st / SQRT2, c2 + 0j], axis=-1)
    if GaugeChoice(gauge) is GaugeChoice.MICROWAVE_FIXED and m != 0:
        v = v * np.exp(-1j * m * phi)[..., None]
    return v


def analytic_eigenstate(m: int, o: Orientation, gauge: GaugeChoice = GaugeChoice.RAW) -> SpinState:
    return SpinState(eigenstate_amplitudes(m, o.theta, o.phi, gauge), LAB_Z)


def berry_connection(m: int, o: Orientation | float, gauge: GaugeChoice = GaugeChoice.RAW):
    """Geometric phase per unit azimuth, dPhi/dphi, for motion at fixed theta.

    ``o`` may be an Orientation or a polar angle (array-like allowed).
    """
    m = _check_m(m)
    theta = o.theta if isinstance(o, Orientation) else np.asarray(o, dtype=float)
    if GaugeChoice(gauge) is GaugeChoice.RAW:
        return m * (1.0 - np.cos(theta))
    return -m * np.cos(theta)


def _sample_times(traj, n: int = 4097) -> np.ndarray:
    return np.linspace(0.0, traj.duration, n)


def _reject_dirac_string(traj) -> None:
    theta = np.asarray(traj.theta_of_t(_sample_times(traj)))
    if np.max(theta) > math.pi - DIRAC_STRING_CLEARANCE:
        raise RawGaugeSingularity(
            "trajectory passes the theta = pi singularity of the raw gauge; use the microwave-fixed gauge"
        )


def is_closed(traj, tol: float = CLOSURE_TOL) -> bool:
    th0, th1 = float(traj.theta_of_t(0.0)), float(traj.theta_of_t(traj.duration))
    ph0, ph1 = float(traj.phi_of_t(0.0)), float(traj.phi_of_t(traj.duration))
    if abs(th1 - th0) > tol:
        return False
    # at a pole the azimuth is irrelevant
    if min(math.sin(th0), math.sin(th1)) < tol:
        return True
    dphi = ph1 - ph0
    return abs(dphi - 2 * math.pi * round(dphi / (2 * math.pi))) <= tol


def _segments(duration: float, pulses: Sequence[float] | None) -> list[tuple[float, float, int]]:
    cuts = sorted(t for t in (pulses or ()) if 0.0 < t < duration)
    edges = [0.0, *cuts, duration]
    return [(a, b, 1 if k % 2 == 0 else -1) for k, (a, b) in enumerate(zip(edges[:-1], edges[1:]))]


def _quad(f, a: float, b: float) -> float:
    value, abserr = integrate.quad(f, a, b, epsabs=QUAD_ATOL, epsrel=QUAD_RTOL * 0.1, limit=500)
    if not abserr <= max(QUAD_RTOL * abs(value), QUAD_ATOL):
        raise QuadratureFailure(f"quadrature error estimate {abserr:.3g} exceeds tolerance on [{a}, {b}]")
    return value


def geometric_phase(
    traj,
    m: int,
    gauge: GaugeChoice = GaugeChoice.RAW,
    rectification: Sequence[float] | None = None,
) -> PhaseResult:
    """Line integral of the connection along ``traj``.

    ``rectification`` lists ideal pi-pulse times; the sign of the integrand
    flips at each of them, which is how a spin echo turns an alternating
    phase into a cumulative one.
    """
    m = _check_m(m)
    gauge = GaugeChoice(gauge)
    if gauge is GaugeChoice.RAW:
        _reject_dirac_string(traj)

    def integrand(t):
        return float(berry_connection(m, traj.theta_of_t(t), gauge)) * float(traj.dphi_dt(t))

    total = 0.0
    for a, b, sign in _segments(traj.duration, rectification):
        total += sign * _quad(integrand, a, b)
    omega = solid_angle(traj) if is_closed(traj) else None
    return PhaseResult(geometric=total, solid_angle=omega, gauge=gauge)


def solid_angle(traj) -> float:
    """Signed solid angle enclosed by a closed path, from the line integral of (1 - cos theta) dphi."""
    if not is_closed(traj):
        raise NotClosed("solid angle is defined for closed trajectories only")
    return _quad(lambda t: (1.0 - math.cos(float(traj.theta_of_t(t)))) * float(traj.dphi_dt(t)), 0.0, traj.duration)


def geometric_phase_from_samples(
    theta: np.ndarray,
    phi: np.ndarray,
    m: int,
    gauge: GaugeChoice = GaugeChoice.RAW,
    levels: int = 4,
) -> float:
    """Geometric phase from a uniformly time-sampled path.

    Uses the trapezoid rule for the Stieltjes integral of the connection
    against phi, refined by Richardson extrapolation over successively
    halved sample sets. ``len(theta)`` must be ``2**k + 1``.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n = theta.size - 1
    k = int(round(math.log2(n))) if n > 0 else -1
    if n < 2 or 2**k != n or phi.shape != theta.shape:
        raise ValueError("need 2**k + 1 uniformly spaced samples of theta and phi")
    levels = min(levels, k)
    a = berry_connection(m, theta, gauge)

    # trapezoid estimates with strides 2**levels ... 1
    estimates = []
    for j in range(levels, -1, -1):
        s = 2**j
        aa, pp = a[::s], phi[::s]
        estimates.append(float(np.sum(0.5 * (aa[1:] + aa[:-1]) * np.diff(pp))))
    table = estimates
    for order in range(1, len(table)):
        f = 4.0**order
        table = [(f * table[i + 1] - table[i]) / (f - 1) for i in range(len(table) - 1)]
    return table[-1]
