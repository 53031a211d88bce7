"""Orientation paths of the NV axis for the two spindle geometries."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateTilt, DegenerateTiltWarning
from .physics import Orientation

TimeFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Trajectory:
    """Time-parametrized path (theta(t), phi(t)) on [0, duration].

    The callables accept scalars or numpy arrays. ``phi_of_t`` is an
    unwrapped (continuous) branch.
    """

    theta_of_t: TimeFunction
    phi_of_t: TimeFunction
    dphi_dt: TimeFunction
    duration: float
    closed: bool
    dtheta_dt: TimeFunction | None = None
    degenerate: bool = False
    label: str = ""

    def __post_init__(self):
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError(f"duration must be positive and finite, got {self.duration}")

    def orientation(self, t: float) -> Orientation:
        return Orientation(float(self.theta_of_t(t)), float(self.phi_of_t(t)))

    def nv_axis(self, t) -> np.ndarray:
        th, ph = np.asarray(self.theta_of_t(t)), np.asarray(self.phi_of_t(t))
        return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)

    def theta_rate(self, t):
        if self.dtheta_dt is not None:
            return self.dtheta_dt(t)
        h = 1e-6 * self.duration
        return (np.asarray(self.theta_of_t(t + h)) - np.asarray(self.theta_of_t(t - h))) / (2 * h)

    def mirrored(self) -> Trajectory:
        """Reflection phi -> -phi: same polar motion, opposite sense of rotation."""
        th, ph, dph = self.theta_of_t, self.phi_of_t, self.dphi_dt
        return Trajectory(
            theta_of_t=th,
            phi_of_t=lambda t: -np.asarray(ph(t)),
            dphi_dt=lambda t: -np.asarray(dph(t)),
            duration=self.duration,
            closed=self.closed,
            dtheta_dt=self.dtheta_dt,
            degenerate=self.degenerate,
            label=f"{self.label} (mirrored)" if self.label else "mirrored",
        )


@dataclass(frozen=True)
class SpindleConfig:
    """Spindle speed and angles.

    ``nv_theta`` is the NV-to-spindle angle of the Ramsey geometry;
    ``tilt_theta0`` the spindle-to-microwave-axis angle of the echo geometry.
    ``start_angle`` offsets the spindle rotation angle at t = 0.
    """

    omega: float = 4000 * math.pi
    tilt_theta0: float | None = None
    nv_theta: float | None = None
    start_angle: float = 0.0

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"spindle angular speed must be positive, got {self.omega}")
        for name in ("tilt_theta0", "nv_theta"):
            v = getattr(self, name)
            if v is not None and not (0.0 <= v <= math.pi / 2):
                raise ValueError(f"{name} must lie in [0, pi/2], got {v}")

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega


def _const(value: float) -> TimeFunction:
    return lambda t: np.full(np.shape(t), value) if np.ndim(t) else value


def ramsey_trajectory(cfg: SpindleConfig, phi0: float) -> Trajectory:
    """NV axis at fixed polar angle, azimuth phi = omega t, for a spindle rotation of phi0."""
    if cfg.nv_theta is None:
        raise ValueError("Ramsey geometry needs nv_theta")
    if not phi0 > 0:
        raise ValueError(f"rotation angle must be positive, got {phi0}")
    w, th = cfg.omega, cfg.nv_theta
    turns = phi0 / (2 * math.pi)
    return Trajectory(
        theta_of_t=_const(th),
        phi_of_t=lambda t: w * np.asarray(t),
        dphi_dt=_const(w),
        duration=phi0 / w,
        closed=abs(turns - round(turns)) < 1e-12,
        dtheta_dt=_const(0.0),
        label="ramsey",
    )


def echo_trajectory(cfg: SpindleConfig, rotations: int) -> Trajectory:
    """NV axis perpendicular to a spindle tilted by theta0 from z.

    Spindle axis s = (sin t0, 0, cos t0); the NV axis sweeps the great
    circle z'(t) = cos(u) e1 + sin(u) e2 with e1 = (cos t0, 0, -sin t0),
    e2 = (0, 1, 0) and u = omega t + start_angle.
    """
    if cfg.tilt_theta0 is None:
        raise ValueError("echo geometry needs tilt_theta0")
    if rotations < 1:
        raise ValueError(f"need at least one rotation, got {rotations}")
    t0 = cfg.tilt_theta0
    if t0 >= math.pi / 2:
        raise DegenerateTilt("a spindle along x drives the NV axis through the poles")
    degenerate = t0 == 0.0
    if degenerate:
        warnings.warn("untilted spindle: echo trajectory is the equator", DegenerateTiltWarning, stacklevel=2)
    w, u0 = cfg.omega, cfg.start_angle
    s, k = math.sin(t0), math.cos(t0)

    def theta(t):
        return np.arccos(-s * np.cos(w * np.asarray(t) + u0))

    def phi(t):
        u = w * np.asarray(t) + u0
        # continuous branch of atan2(sin u, k cos u)
        return u + np.arctan(np.sin(u) * np.cos(u) * (1 - k) / (k * np.cos(u) ** 2 + np.sin(u) ** 2))

    def dphi(t):
        u = w * np.asarray(t) + u0
        return w * k / (1 - s**2 * np.cos(u) ** 2)

    def dtheta(t):
        u = w * np.asarray(t) + u0
        return -w * s * np.sin(u) / np.sqrt(1 - s**2 * np.cos(u) ** 2)

    return Trajectory(
        theta_of_t=theta,
        phi_of_t=phi,
        dphi_dt=dphi,
        duration=2 * math.pi * rotations / w,
        closed=True,
        dtheta_dt=dtheta,
        degenerate=degenerate,
        label="echo",
    )


def pi_pulse_times(cfg: SpindleConfig, rotations: int) -> list[float]:
    """Instants in [0, 2 pi n / omega) where the NV axis is perpendicular to z."""
    w, u0 = cfg.omega, cfg.start_angle
    duration = 2 * math.pi * rotations / w
    kmin = math.ceil((u0 - math.pi / 2) / math.pi - 1e-12)
    times = []
    k = kmin
    while True:
        t = (math.pi / 2 + k * math.pi - u0) / w
        if t >= duration - 1e-15 * duration:
            break
        if t >= 0:
            times.append(t)
        k += 1
    return times
