"""Spin-1 algebra, state/operator containers and the NV ground-state Hamiltonians.

All Hamiltonians are angular frequencies (rad/s) with hbar = 1. Matrices are
ordered (m=+1, 0, -1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import constants as _sc

from .errors import ApproximationInvalid, BasisMismatch

SQRT2 = math.sqrt(2.0)

MUB_OVER_HBAR = _sc.physical_constants["Bohr magneton"][0] / _sc.hbar  # rad s^-1 T^-1
ZFS_HZ = 2.88e9

HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-12


@dataclass(frozen=True)
class PhysicalConstants:
    D: float = 2 * math.pi * ZFS_HZ
    g: float = 2.0
    muB_over_hbar: float = MUB_OVER_HBAR

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"zero-field splitting must be positive, got {self.D}")

    @property
    def gamma(self) -> float:
        """Gyromagnetic ratio g*muB/hbar in rad s^-1 T^-1."""
        return self.g * self.muB_over_hbar

    def scaled(self, d_over_omega: float, omega: float) -> PhysicalConstants:
        """Copy with D replaced by ``d_over_omega * omega``.

        Used for brute-force propagation at desk-scale step counts; the
        geometric phase depends only on the path, not on D.
        """
        return replace(self, D=d_over_omega * omega)


@dataclass(frozen=True)
class Orientation:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi) or not math.isfinite(self.phi):
            raise ValueError(f"invalid orientation theta={self.theta}, phi={self.phi}")

    @property
    def axis(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


class GaugeChoice(str, Enum):
    """Phase convention of the z'-basis states.

    RAW is the analytic eigenbasis as written for the zero-field Hamiltonian;
    MICROWAVE_FIXED multiplies the m-th state by exp(-i m phi), which removes
    the azimuthal phase from the microwave coupling.
    """

    RAW = "raw"
    MICROWAVE_FIXED = "fixed"


@dataclass(frozen=True)
class Basis:
    """Basis tag: the lab z-basis, or the NV z'-basis at a given orientation."""

    kind: str = "lab"
    orientation: Orientation | None = None
    gauge: GaugeChoice = GaugeChoice.RAW

    def __post_init__(self):
        object.__setattr__(self, "gauge", GaugeChoice(self.gauge))
        if self.kind not in ("lab", "nv"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.kind == "nv" and self.orientation is None:
            raise ValueError("NV basis needs an orientation")

    @classmethod
    def nv(cls, o: Orientation, gauge: GaugeChoice = GaugeChoice.RAW) -> Basis:
        return cls("nv", o, gauge)


LAB_Z = Basis()


def _check_basis(a: Basis, b: Basis) -> None:
    if a != b:
        raise BasisMismatch(f"cannot combine objects in bases {a} and {b}")


@dataclass(frozen=True, eq=False)
class SpinState:
    amplitudes: np.ndarray
    basis: Basis = LAB_Z

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex).reshape(3)
        a.setflags(write=False)
        object.__setattr__(self, "amplitudes", a)
        norm = float(np.vdot(a, a).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm!r}")

    @classmethod
    def normalized(cls, amplitudes, basis: Basis = LAB_Z) -> SpinState:
        a = np.asarray(amplitudes, dtype=complex)
        return cls(a / np.linalg.norm(a), basis)

    def overlap(self, other: SpinState) -> complex:
        """<self|other>."""
        _check_basis(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True, eq=False)
class SpinOperator:
    entries: np.ndarray
    basis: Basis = field(default=LAB_Z)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex).reshape(3, 3)
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        return self.hermiticity_error() <= tol * scale

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def dagger(self) -> SpinOperator:
        return SpinOperator(self.entries.conj().T, self.basis)

    def __matmul__(self, other):
        if isinstance(other, SpinOperator):
            _check_basis(self.basis, other.basis)
            return SpinOperator(self.entries @ other.entries, self.basis)
        if isinstance(other, SpinState):
            _check_basis(self.basis, other.basis)
            return self.entries @ other.amplitudes
        return NotImplemented

    def __add__(self, other: SpinOperator) -> SpinOperator:
        if not isinstance(other, SpinOperator):
            return NotImplemented
        _check_basis(self.basis, other.basis)
        return SpinOperator(self.entries + other.entries, self.basis)

    def __sub__(self, other: SpinOperator) -> SpinOperator:
        if not isinstance(other, SpinOperator):
            return NotImplemented
        _check_basis(self.basis, other.basis)
        return SpinOperator(self.entries - other.entries, self.basis)

    def __mul__(self, scalar) -> SpinOperator:
        if isinstance(scalar, (SpinOperator, SpinState)):
            return NotImplemented
        return SpinOperator(self.entries * scalar, self.basis)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class MagneticField:
    vector: np.ndarray

    def __post_init__(self):
        v = np.array(self.vector, dtype=float).reshape(3)
        if not np.all(np.isfinite(v)):
            raise ValueError("magnetic field components must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)


_SX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQRT2
_SY = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / SQRT2
_SZ = np.diag([1.0, 0.0, -1.0]).astype(complex)
SPIN_MATRICES = np.stack([_SX, _SY, _SZ])
SPIN_MATRICES.setflags(write=False)


def spin1_operators() -> tuple[SpinOperator, SpinOperator, SpinOperator]:
    """S_x, S_y, S_z for spin 1 in the lab z-basis (hbar = 1)."""
    return SpinOperator(_SX), SpinOperator(_SY), SpinOperator(_SZ)


def axis_projection(theta, phi) -> np.ndarray:
    """n.S for n = (sin th cos ph, sin th sin ph, cos th); broadcasts over angle arrays.

    Returns shape ``theta.shape + (3, 3)``.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    n = np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta) + 0 * phi], axis=-1)
    return np.einsum("...i,ijk->...jk", n, SPIN_MATRICES)


def zero_field_matrix(theta, phi, D: float, splitting: float = 0.0) -> np.ndarray:
    """Vectorized D (n.S)^2 + splitting * n.S (lab basis)."""
    ns = axis_projection(theta, phi)
    h = D * (ns @ ns)
    if splitting:
        h = h + splitting * ns
    return h


def zero_field_hamiltonian(o: Orientation, c: PhysicalConstants = PhysicalConstants()) -> SpinOperator:
    """D (S_z')^2 written in the lab z-basis."""
    return SpinOperator(zero_field_matrix(o.theta, o.phi, c.D))


def zeeman_hamiltonian(B: MagneticField, c: PhysicalConstants = PhysicalConstants()) -> SpinOperator:
    return SpinOperator(c.gamma * np.einsum("i,ijk->jk", B.vector, SPIN_MATRICES))


def interaction_hamiltonian(
    B_R: float,
    omega: float,
    t: float,
    o: Orientation,
    c: PhysicalConstants = PhysicalConstants(),
    approximate: bool = False,
) -> SpinOperator:
    """Linearly polarized microwave drive B_R cos(wt) z-hat, in the NV z'-basis.

    ``approximate`` drops the S_z'-proportional diagonal, which requires
    gamma*B_R/omega < 0.1.
    """
    drive = c.gamma * B_R
    if approximate and not (omega > 0 and abs(drive) / omega < 0.1):
        raise ApproximationInvalid(
            f"weak-drive approximation needs gamma*B_R/omega < 0.1, got {abs(drive) / omega if omega else math.inf:.3g}"
        )
    st, ct = math.sin(o.theta), math.cos(o.theta)
    e = complex(math.cos(o.phi), math.sin(o.phi)) * st / SQRT2
    diag = 0.0 if approximate else ct
    m = np.array(
        [
            [diag, e, 0],
            [e.conjugate(), 0, e],
            [0, e.conjugate(), -diag],
        ],
        dtype=complex,
    )
    return SpinOperator(drive * math.cos(omega * t) * m, Basis.nv(o))
