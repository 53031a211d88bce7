import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvberry.eigen import (
    GaugeChoice,
    analytic_eigenstate,
    berry_connection,
    eigenstate_amplitudes,
    geometric_phase,
    geometric_phase_from_samples,
    is_closed,
    solid_angle,
)
from nvberry.errors import DegenerateTiltWarning, NotClosed, RawGaugeSingularity
from nvberry.physics import Orientation, axis_projection
from nvberry.trajectories import SpindleConfig, Trajectory, echo_trajectory, pi_pulse_times, ramsey_trajectory

RAW, FIXED = GaugeChoice.RAW, GaugeChoice.MICROWAVE_FIXED
OMEGA = 4000 * math.pi
polar = st.floats(0.01, math.pi - 0.01)
azimuth = st.floats(-7, 7)


@given(polar, azimuth)
def test_eigenstates_of_axis_projection(theta, phi):
    ns = axis_projection(theta, phi)
    vecs = np.stack([eigenstate_amplitudes(m, theta, phi) for m in (1, 0, -1)])
    assert np.allclose(vecs.conj() @ vecs.T, np.eye(3), atol=1e-12)
    for m, v in zip((1, 0, -1), vecs):
        assert np.allclose(ns @ v, m * v, atol=1e-12)


def test_eigenstates_at_pole_are_lab_states():
    for m, idx in ((1, 0), (0, 1), (-1, 2)):
        assert np.allclose(analytic_eigenstate(m, Orientation(0.0)).amplitudes, np.eye(3)[idx])


@given(polar, azimuth)
def test_fixed_gauge_is_phase_rotation(theta, phi):
    for m in (-1, 0, 1):
        raw = eigenstate_amplitudes(m, theta, phi, RAW)
        fixed = eigenstate_amplitudes(m, theta, phi, FIXED)
        assert np.allclose(fixed, raw * np.exp(-1j * m * phi))


@given(polar, azimuth)
def test_connection_from_finite_difference(theta, phi):
    # [DERIVED] dPhi/dphi = -i <m|d/dphi m> for a state carrying exp(-i Phi)
    h = 1e-5
    for gauge in (RAW, FIXED):
        for m in (-1, 0, 1):
            v = eigenstate_amplitudes(m, theta, phi, gauge)
            dv = (eigenstate_amplitudes(m, theta, phi + h, gauge) - eigenstate_amplitudes(m, theta, phi - h, gauge)) / (2 * h)
            expected = (-1j * np.vdot(v, dv)).real
            assert berry_connection(m, theta, gauge) == pytest.approx(expected, abs=1e-8)


def test_connection_values():
    o = Orientation(math.pi / 3, 0.4)
    assert berry_connection(1, o, RAW) == pytest.approx(0.5)
    assert berry_connection(-1, o, FIXED) == pytest.approx(0.5)
    assert berry_connection(1, o, FIXED) == pytest.approx(-0.5)
    assert berry_connection(0, o, RAW) == 0
    with pytest.raises(ValueError):
        berry_connection(2, o)


@given(st.floats(0.05, 1.55), st.floats(0.01, 20))
def test_fixed_theta_phase(theta, phi0):
    traj = ramsey_trajectory(SpindleConfig(OMEGA, nv_theta=theta), phi0)
    assert geometric_phase(traj, 1, RAW).geometric == pytest.approx(phi0 * (1 - math.cos(theta)), rel=1e-9, abs=1e-12)
    assert geometric_phase(traj, 1, FIXED).geometric == pytest.approx(-phi0 * math.cos(theta), rel=1e-9, abs=1e-12)
    assert geometric_phase(traj, -1, RAW).geometric == pytest.approx(-phi0 * (1 - math.cos(theta)), rel=1e-9, abs=1e-12)


@given(st.floats(0.01, 1.5), st.integers(1, 5))
def test_rectified_echo_phase(theta0, n):
    # [DERIVED] each half turn between pulses contributes 2 theta0 in magnitude
    cfg = SpindleConfig(OMEGA, tilt_theta0=theta0)
    traj = echo_trajectory(cfg, n)
    for gauge in (RAW, FIXED):
        res = geometric_phase(traj, 1, gauge, pi_pulse_times(cfg, n))
        assert res.geometric == pytest.approx(4 * n * theta0, rel=1e-9)


def test_closed_loop_reports_solid_angle():
    traj = ramsey_trajectory(SpindleConfig(OMEGA, nv_theta=1.0), 2 * math.pi)
    res = geometric_phase(traj, 1)
    assert res.solid_angle == pytest.approx(2 * math.pi * (1 - math.cos(1.0)))
    open_traj = ramsey_trajectory(SpindleConfig(OMEGA, nv_theta=1.0), 1.0)
    assert geometric_phase(open_traj, 1).solid_angle is None
    assert not is_closed(open_traj)
    with pytest.raises(NotClosed):
        solid_angle(open_traj)


def test_untilted_echo_encloses_hemisphere():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTiltWarning)
        traj = echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=0.0), 1)
    assert solid_angle(traj) == pytest.approx(2 * math.pi)


def test_raw_gauge_rejects_south_pole():
    traj = Trajectory(
        theta_of_t=lambda t: math.pi - 0 * np.asarray(t, dtype=float),
        phi_of_t=lambda t: np.asarray(t, dtype=float),
        dphi_dt=lambda t: 1.0 + 0 * np.asarray(t, dtype=float),
        duration=1.0,
        closed=False,
    )
    with pytest.raises(RawGaugeSingularity):
        geometric_phase(traj, 1, RAW)
    assert geometric_phase(traj, 1, FIXED).geometric == pytest.approx(1.0)


@given(st.floats(0.05, 1.5))
def test_sampled_phase_matches_quadrature(theta0):
    cfg = SpindleConfig(OMEGA, tilt_theta0=theta0)
    traj = echo_trajectory(cfg, 1)
    t = np.linspace(0, traj.duration, 2**10 + 1)
    sampled = geometric_phase_from_samples(traj.theta_of_t(t), traj.phi_of_t(t), 1, RAW)
    assert sampled == pytest.approx(geometric_phase(traj, 1, RAW).geometric, abs=1e-8)


def test_sampled_phase_needs_dyadic_grid():
    with pytest.raises(ValueError):
        geometric_phase_from_samples(np.zeros(10), np.zeros(10), 1)
