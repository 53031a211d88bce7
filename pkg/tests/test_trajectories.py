import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nvberry.errors import DegenerateTilt, DegenerateTiltWarning
from nvberry.trajectories import SpindleConfig, echo_trajectory, pi_pulse_times, ramsey_trajectory

OMEGA = 4000 * math.pi


@given(st.floats(0.0, 1.5), st.floats(0, 2 * math.pi))
def test_echo_axis_stays_perpendicular_to_spindle(theta0, start):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTiltWarning)
        traj = echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=theta0, start_angle=start), 2)
    spindle = np.array([math.sin(theta0), 0, math.cos(theta0)])
    t = np.linspace(0, traj.duration, 501)
    n = traj.nv_axis(t)
    assert np.allclose(n @ spindle, 0, atol=1e-12)
    assert np.allclose(np.linalg.norm(n, axis=1), 1)


@given(st.floats(0.01, 1.5), st.floats(0, 2 * math.pi))
def test_echo_rates_match_finite_differences(theta0, start):
    traj = echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=theta0, start_angle=start), 1)
    t = np.linspace(0.01, 0.99, 97) * traj.duration
    h = 1e-9 * traj.duration
    dphi = (traj.phi_of_t(t + h) - traj.phi_of_t(t - h)) / (2 * h)
    dtheta = (traj.theta_of_t(t + h) - traj.theta_of_t(t - h)) / (2 * h)
    assert np.allclose(traj.dphi_dt(t), dphi, rtol=1e-5, atol=1e-3 * OMEGA)
    assert np.allclose(traj.dtheta_dt(t), dtheta, rtol=1e-5, atol=1e-3 * OMEGA)


def test_echo_azimuth_is_continuous_and_winds_once():
    traj = echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=0.8), 3)
    t = np.linspace(0, traj.duration, 30001)
    phi = traj.phi_of_t(t)
    assert np.max(np.abs(np.diff(phi))) < 0.01
    assert phi[-1] - phi[0] == pytest.approx(3 * 2 * math.pi)
    assert traj.closed


def test_echo_starts_on_first_axis():
    theta0 = 0.25
    traj = echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=theta0), 1)
    assert np.allclose(traj.nv_axis(0.0), [math.cos(theta0), 0, -math.sin(theta0)])


@given(st.floats(0.01, 1.5), st.integers(1, 4), st.floats(0, 6.2))
def test_pi_pulses_where_axis_is_horizontal(theta0, n, start):
    cfg = SpindleConfig(OMEGA, tilt_theta0=theta0, start_angle=start)
    traj = echo_trajectory(cfg, n)
    times = pi_pulse_times(cfg, n)
    assert len(times) == 2 * n
    assert all(0 <= a < b < traj.duration for a, b in zip(times, times[1:]))
    assert np.allclose(traj.theta_of_t(np.array(times)), math.pi / 2, atol=1e-9)


def test_default_pulse_times():
    cfg = SpindleConfig(OMEGA, tilt_theta0=0.25)
    assert pi_pulse_times(cfg, 1) == pytest.approx([0.25 * cfg.period, 0.75 * cfg.period])


def test_tilt_limits():
    with pytest.raises(DegenerateTilt):
        echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=math.pi / 2), 1)
    with pytest.warns(DegenerateTiltWarning):
        traj = echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=0.0), 1)
    assert traj.degenerate
    with pytest.raises(ValueError):
        SpindleConfig(OMEGA, tilt_theta0=2.0)
    with pytest.raises(ValueError):
        SpindleConfig(-1.0)
    with pytest.raises(ValueError):
        echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=0.3), 0)


def test_ramsey_path():
    cfg = SpindleConfig(OMEGA, nv_theta=0.7)
    traj = ramsey_trajectory(cfg, 3.0)
    assert traj.duration == pytest.approx(3.0 / OMEGA)
    assert not traj.closed
    assert ramsey_trajectory(cfg, 4 * math.pi).closed
    assert traj.orientation(traj.duration).phi == pytest.approx(3.0)
    assert traj.theta_rate(0.5 * traj.duration) == 0
    with pytest.raises(ValueError):
        ramsey_trajectory(cfg, 0.0)
    with pytest.raises(ValueError):
        ramsey_trajectory(SpindleConfig(OMEGA, tilt_theta0=0.3), 1.0)


def test_mirror_reverses_azimuth_only():
    traj = echo_trajectory(SpindleConfig(OMEGA, tilt_theta0=0.4), 1)
    mir = traj.mirrored()
    t = np.linspace(0, traj.duration, 11)
    assert np.allclose(mir.theta_of_t(t), traj.theta_of_t(t))
    assert np.allclose(mir.phi_of_t(t), -traj.phi_of_t(t))
    assert np.allclose(mir.dphi_dt(t), -traj.dphi_dt(t))
