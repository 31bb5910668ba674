import math

import numpy as np
import pytest

import evuas as ev

from oracles import linear_trajectory


def test_constant_solution():
    traj = ev.integrate(lambda t, x: np.zeros_like(x), 0.0,
                        np.array([3.0, -1.0]), 10.0, tol=1e-9)
    assert np.all(traj.states == traj.states[0])
    assert traj.times[0] == 0.0
    assert traj.times[-1] == 10.0


def test_scalar_exponential():
    traj = ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 1.0, tol=1e-10)
    assert traj.states[-1, 0] == pytest.approx(math.exp(-1.0), abs=1e-8)


def test_triangular_system_closed_form():
    a = np.array([[-1.0, 2.0], [0.0, -1.5]])
    ts = np.linspace(0.0, 1.0, 11)
    traj = ev.integrate(lambda t, x: a @ x, 0.0, np.array([-1.0, 1.5]), 1.0,
                        tol=1e-10, sample_times=ts)
    e1 = 5 * np.exp(-ts) - 6 * np.exp(-1.5 * ts)
    e2 = 1.5 * np.exp(-1.5 * ts)
    assert np.max(np.abs(traj.states[:, 0] - e1)) < 1e-6
    assert np.max(np.abs(traj.states[:, 1] - e2)) < 1e-6
    assert traj.states[-1, 0] == pytest.approx(0.500616, abs=2e-6)
    assert traj.states[-1, 1] == pytest.approx(0.334695, abs=2e-6)


def test_global_error_scales_with_tol():
    for tol in (1e-4, 1e-6, 1e-8, 1e-10):
        traj = ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 1.0,
                            tol=tol)
        err = abs(traj.states[-1, 0] - math.exp(-1.0))
        assert err <= tol


def test_matrix_exponential_oracle(rng):
    # compared at the accepted step points, where no interpolation enters
    for _ in range(5):
        a = rng.standard_normal((3, 3))
        a -= (np.max(np.linalg.eigvals(a).real) + 0.5) * np.eye(3)
        x0 = rng.standard_normal(3)
        tol = 1e-8
        traj = ev.integrate(lambda t, x: a @ x, 0.0, x0, 2.0, tol=tol)
        exact = linear_trajectory(a, x0, traj.times)
        assert np.max(np.abs(traj.states - exact)) <= 10 * tol * max(
            1.0, float(np.max(np.abs(exact))))


def test_tolerance_refinement_consistency():
    coarse = 1e-6
    t1 = ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 1.0, tol=coarse)
    t2 = ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 1.0,
                      tol=coarse / 2)
    assert abs(t1.states[-1, 0] - t2.states[-1, 0]) <= 10 * coarse


def test_dense_output_between_steps():
    # interpolation is 4th order in the step, so its error dominates the
    # per-step tolerance here; bound pinned from the step sizes this run takes
    ts = np.linspace(0.0, 1.0, 257)
    traj = ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 1.0,
                        tol=1e-9, sample_times=ts)
    assert np.array_equal(traj.times, ts)
    assert np.max(np.abs(traj.states[:, 0] - np.exp(-ts))) < 2e-7


def test_freq_hint_caps_the_step():
    # without the cap the controller skips across the fast oscillation
    omega = 2000.0
    rhs = lambda t, x: np.array([math.cos(omega * t)])
    capped = ev.integrate(rhs, 0.0, np.zeros(1), 1.0, tol=1e-6,
                          freq_hint=omega)
    period8 = (2 * math.pi / omega) / 8.0
    assert capped.diagnostics["min_step"] <= period8 + 1e-12
    assert capped.states[-1, 0] == pytest.approx(math.sin(omega) / omega,
                                                 abs=1e-8)


def test_time_varying_freq_hint():
    sig = ev.make_signal("t_cos_t4")
    rhs = lambda t, x: np.array([float(sig.fn(t))])
    traj = ev.integrate(rhs, 5.0, np.zeros(1), 6.0, tol=1e-7,
                        freq_hint=sig.freq_hint)
    # stationary-phase scale: |int_5^t tau cos(tau^4)| ~ 1/(4 t^2) ~ 0.01
    assert np.max(np.abs(traj.states)) < 0.02


def test_non_finite_rhs_reports_time():
    def rhs(t, x):
        return np.array([1.0 / (1.0 - t) if t < 1.0 else np.nan])
    with pytest.raises(ev.IntegrationError) as exc:
        ev.integrate(rhs, 0.0, np.zeros(1), 2.0, tol=1e-6)
    assert exc.value.t_last is not None
    assert exc.value.x_last is not None


def test_step_underflow_near_singularity():
    rhs = lambda t, x: np.array([1.0 / (1.0 - t)])
    with pytest.raises(ev.IntegrationError) as exc:
        ev.integrate(rhs, 0.0, np.zeros(1), 2.0, tol=1e-10)
    assert exc.value.reason in ("step-underflow", "non-finite")
    assert exc.value.t_last < 1.0 + 1e-6


def test_step_budget():
    with pytest.raises(ev.IntegrationError, match="budget"):
        ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 10.0, tol=1e-10,
                     max_steps=5)


def test_rejects_bad_windows():
    with pytest.raises(ValueError):
        ev.integrate(lambda t, x: -x, 1.0, np.array([1.0]), 1.0)
    with pytest.raises(ValueError):
        ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 1.0, tol=-1.0)
    with pytest.raises(ValueError):
        ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 1.0,
                     sample_times=[0.0, 2.0])


def test_diagnostics_populated():
    traj = ev.integrate(lambda t, x: -x, 0.0, np.array([1.0]), 1.0, tol=1e-8)
    d = traj.diagnostics
    assert d["n_accepted"] == traj.times.size - 1
    assert d["n_rhs"] >= 6 * d["n_accepted"]
    assert 0.0 < d["min_step"] <= 1.0
