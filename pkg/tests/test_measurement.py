import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvberry.measurement import (
    ReadoutParams,
    SensitivityParams,
    end_to_end_estimate,
    phase_uncertainty,
    predicted_phase_std,
    relative_sensitivity,
    relative_uncertainty,
    sample_signal,
    sample_signals,
)
from nvberry.protocols import run_echo, run_ramsey
from nvberry.trajectories import SpindleConfig

OMEGA = 4000 * math.pi


def test_variance_formula():
    assert ReadoutParams(10_000, C=0.15).variance == pytest.approx(1 / (2 * 0.0225 * 10_000))


@given(st.floats(0.05, 0.9), st.floats(0.05, 1.0), st.floats(0, 1))
def test_poisson_rates_reproduce_target_variance(C, contrast, p):
    # [DERIVED] Var S = [N p(1-p)(b-d)^2 + N (p b + (1-p) d)] / (N (b-d))^2
    rp = ReadoutParams(1000, C=C, mode="poisson", contrast=contrast)
    b, d = rp.photon_rates
    assert d == pytest.approx((1 - contrast) * b)
    var = lambda q: (q * (1 - q) * (b - d) ** 2 + q * b + (1 - q) * d) / (rp.N_r * (b - d) ** 2)
    assert var(0.5) == pytest.approx(rp.variance, rel=1e-9)


@pytest.mark.parametrize("mode", ["gaussian", "poisson"])
@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_sampled_signal_is_unbiased(mode, p):
    rp = ReadoutParams(20_000, mode=mode)
    s = sample_signals(p, rp, 20_000, seed=3)
    assert s.mean() == pytest.approx(p, abs=5 * math.sqrt(rp.variance / s.size) + 1e-12)


def test_seeded_sampling_is_reproducible():
    rp = ReadoutParams(1000)
    assert sample_signal(0.3, rp, seed=5) == sample_signal(0.3, rp, seed=5)
    assert sample_signal(0.3, rp, seed=5) != sample_signal(0.3, rp, seed=6)


def test_input_validation():
    with pytest.raises(ValueError):
        ReadoutParams(0)
    with pytest.raises(ValueError):
        ReadoutParams(10, C=0.0)
    with pytest.raises(ValueError):
        ReadoutParams(10, mode="counting")
    with pytest.raises(ValueError):
        sample_signals(1.2, ReadoutParams(10), 1)
    with pytest.raises(ValueError):
        phase_uncertainty(-1.0)
    with pytest.raises(ValueError):
        SensitivityParams.from_coherence(1e-3, a=1.0)


def test_phase_uncertainty_from_fringe_slope():
    assert phase_uncertainty(0.01) == pytest.approx(0.02)
    rp = ReadoutParams(100_000)
    assert predicted_phase_std(rp, 0.5) == pytest.approx(2 * math.sqrt(rp.variance) / 0.5)


@given(st.floats(1e-6, 1e-2), st.floats(1.01, 10), st.floats(0.01, 1), st.floats(1, 1e5))
def test_uncertainty_after_averaging(T2, a, C, T_T):
    sp = SensitivityParams.from_coherence(T2, a=a, omega=OMEGA, C=C, T_T=T_T)
    assert relative_uncertainty(sp) == pytest.approx(relative_sensitivity(sp) / math.sqrt(T_T), rel=1e-12)


def test_sensitivity_scales_with_root_a():
    s = [relative_sensitivity(SensitivityParams.from_coherence(2e-3, a=a)) for a in (1.5, 2.0, 3.0)]
    assert s[0] < s[1] < s[2]
    assert s[1] / s[0] == pytest.approx(math.sqrt(2.0 / 1.5))


def test_end_to_end_estimate_recovers_phase():
    res = run_echo(SpindleConfig(OMEGA, tilt_theta0=0.25), 4)
    rp = ReadoutParams(100_000)
    mean, std = end_to_end_estimate([res] * 1000, rp, seed=1)
    assert mean == pytest.approx(4.0, abs=4 * std / math.sqrt(1000))
    assert std / predicted_phase_std(rp, res.coherence_factor) == pytest.approx(1.0, abs=0.1)


def test_end_to_end_with_biased_prediction_stays_close():
    res = run_ramsey(SpindleConfig(OMEGA, nv_theta=1.0), 0.1)
    rp = ReadoutParams(10**7)
    mean, _ = end_to_end_estimate([res] * 200, rp, seed=2, predicted_phase=res.phase_estimate + 0.01)
    # linearized inversion: the residual bias is second order in the prediction error
    assert mean == pytest.approx(res.phase_estimate, abs=2e-3)


def test_end_to_end_needs_enough_repetitions():
    res = run_ramsey(SpindleConfig(OMEGA, nv_theta=1.0), 0.1)
    with pytest.raises(ValueError):
        end_to_end_estimate([res] * 99, ReadoutParams(1000))
