"""Shot-noise-limited fluorescence readout and phase sensitivity.

The normalized signal S is 1 for a pure m=0 state, 0 for pure m=+1, and has
variance 1 / (2 C^2 N_r) over N_r repetitions of the sequence. C = 1 is
ideal readout; C ~ 0.15 is typical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .protocols import ProtocolResult

MIN_REPETITIONS = 100


@dataclass(frozen=True)
class ReadoutParams:
    """Readout model.

    mode="gaussian" draws S from a normal law with the target variance.
    mode="poisson" simulates spin projection and photon counts per shot, with
    m=+1 fluorescing at (1 - contrast) times the m=0 rate; the m=0 rate is
    set so the variance at population 1/2 equals 1 / (2 C^2 N_r).
    """

    N_r: int
    C: float = 0.15
    mode: str = "gaussian"
    contrast: float = 0.3

    def __post_init__(self):
        if int(self.N_r) != self.N_r or self.N_r < 1:
            raise ValueError(f"N_r must be a positive integer, got {self.N_r}")
        if not 0 < self.C <= 1:
            raise ValueError(f"C must lie in (0, 1], got {self.C}")
        if self.mode not in ("gaussian", "poisson"):
            raise ValueError(f"unknown readout mode {self.mode!r}")
        if not 0 < self.contrast <= 1:
            raise ValueError(f"contrast must lie in (0, 1], got {self.contrast}")

    @property
    def variance(self) -> float:
        return 1.0 / (2.0 * self.C**2 * self.N_r)

    @property
    def photon_rates(self) -> tuple[float, float]:
        """Mean photons per shot for m=0 and m=+1 in poisson mode."""
        k = self.contrast
        excess = 1.0 / (2.0 * self.C**2) - 0.25  # >= 1/4 since C <= 1
        bright = (2.0 - k) / (2.0 * k * k * excess)
        return bright, (1.0 - k) * bright


@dataclass(frozen=True)
class SensitivityParams:
    T_M: float
    T_T: float
    a: float
    omega: float
    T2: float
    C: float

    def __post_init__(self):
        if not self.a > 1:
            raise ValueError(f"measurement time must exceed the coherence time (a > 1), got a={self.a}")
        for name in ("T_M", "T_T", "omega", "T2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.C <= 1:
            raise ValueError(f"C must lie in (0, 1], got {self.C}")

    @classmethod
    def from_coherence(cls, T2: float, a: float = 2.0, omega: float = 4000 * math.pi, C: float = 0.15, T_T: float = 3 * 3600.0):
        return cls(T_M=a * T2, T_T=T_T, a=a, omega=omega, T2=T2, C=C)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_signals(true_population: float, rp: ReadoutParams, size: int, seed=None) -> np.ndarray:
    """``size`` independent normalized signals, each from N_r repetitions."""
    if not 0.0 <= true_population <= 1.0:
        raise ValueError(f"population must lie in [0, 1], got {true_population}")
    rng = _rng(seed)
    if rp.mode == "gaussian":
        return rng.normal(true_population, math.sqrt(rp.variance), size)
    bright, dark = rp.photon_rates
    n_bright = rng.binomial(rp.N_r, true_population, size)
    counts = rng.poisson(n_bright * bright + (rp.N_r - n_bright) * dark)
    return (counts / rp.N_r - dark) / (bright - dark)


def sample_signal(true_population: float, rp: ReadoutParams, seed=None) -> float:
    return float(sample_signals(true_population, rp, 1, seed)[0])


def phase_uncertainty(delta_S: float) -> float:
    """Phase error from signal error at the steepest point of the fringe, where dS/dPhi = 1/2."""
    if delta_S < 0:
        raise ValueError("signal uncertainty must be non-negative")
    return 2.0 * delta_S


def predicted_phase_std(rp: ReadoutParams, coherence: float = 1.0) -> float:
    return phase_uncertainty(math.sqrt(rp.variance)) / coherence


def relative_sensitivity(sp: SensitivityParams) -> float:
    """Relative phase uncertainty per root averaging time, in Hz^-1/2."""
    return 2 * math.pi * math.sqrt(2 * sp.a) / (sp.C * sp.omega * math.sqrt(sp.T2))


def relative_uncertainty(sp: SensitivityParams) -> float:
    """Relative phase uncertainty after total averaging time T_T."""
    return 2 * math.pi * math.sqrt(2 * sp.T_M) / (sp.C * sp.omega * sp.T2 * math.sqrt(sp.T_T))


def end_to_end_estimate(
    results: Iterable[ProtocolResult],
    rp: ReadoutParams,
    seed=None,
    predicted_phase: float | None = None,
) -> tuple[float, float]:
    """Mean and spread of the phase recovered from simulated fringe readouts.

    Each result is one repetition block of N_r shots. The closing pulse is
    retarded to pi/2 - prediction (the steepest point of the fringe) and the
    sampled signal is inverted with the small-signal linearization. The
    prediction defaults to each result's own phase, which also fixes the
    2 pi branch.
    """
    rng = _rng(seed)
    estimates = []
    for res in results:
        pred = res.phase_estimate if predicted_phase is None else predicted_phase
        c = res.coherence_factor
        retard = math.pi / 2 - pred
        population = 0.5 * (1.0 + c * math.cos(res.phase_estimate + retard))
        s = sample_signals(population, rp, 1, rng)[0]
        estimates.append(pred + (1.0 - 2.0 * s) / c)
    if len(estimates) < MIN_REPETITIONS:
        raise ValueError(f"need at least {MIN_REPETITIONS} repetitions, got {len(estimates)}")
    est = np.asarray(estimates)
    return float(est.mean()), float(est.std(ddof=1))
