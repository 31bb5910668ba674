import numpy as np
import pytest

import evuas as ev

A_H = [[-1.0, 2.0], [0.0, -1.5]]


def _chain_controller():
    model = ev.make_model("chain", m=1, n=2)
    ctrl = ev.synthesize_feedback(model, ev.build_gamma([[-1.0]], 2),
                                  ev.build_hurwitz([[-1.0]]))
    return model, ctrl


def test_error_dynamics_unforced_closed_form():
    traj = ev.simulate_error_dynamics(
        ev.build_hurwitz(A_H), None, [-1.0, 1.5], 0.0, 5.0, tol=1e-9,
        sample_times=np.linspace(0.0, 5.0, 201))
    t = traj.times
    exact = np.stack([5 * np.exp(-t) - 6 * np.exp(-1.5 * t),
                      1.5 * np.exp(-1.5 * t)], axis=1)
    assert np.max(np.abs(traj.states - exact)) < 1e-6


def test_error_dynamics_constant_forcing_settles_at_equilibrium():
    pert = ev.make_perturbation("const_e1", dim=2)
    traj = ev.simulate_error_dynamics(ev.build_hurwitz(A_H), pert,
                                      [-1.0, 1.5], 0.0, 15.0, tol=1e-8)
    assert np.allclose(traj.states[-1], [1.0, 0.0], atol=1e-5)


def test_error_dynamics_unbounded_perturbation_decays():
    # qualitative reproduction: growing-amplitude forcing, decaying error
    pert = ev.make_perturbation("example1_unbounded")
    traj = ev.simulate_error_dynamics(ev.build_hurwitz(A_H), pert,
                                      [-1.0, 1.5], 0.0, 6.0, tol=1e-6)
    norms = traj.norms()
    assert norms[-1] < 0.05
    assert float(np.max(norms[traj.times >= 5.0])) < 0.05


def test_closed_loop_equilibrium_stays_put():
    model, ctrl = _chain_controller()
    traj = ev.simulate_closed_loop(model, ctrl, None, np.zeros(2), 0.0, 5.0,
                                   tol=1e-9)
    assert np.all(traj.states == 0.0)
    assert np.all(traj.inputs == 0.0)


def test_closed_loop_linear_decay():
    model, ctrl = _chain_controller()
    traj = ev.simulate_closed_loop(model, ctrl, None, np.array([0.5, 0.0]),
                                   0.0, 20.0, tol=1e-9)
    assert traj.norms()[-1] < 1e-4
    # closed loop is x1' = x2, x2' = -x1 - 2 x2; spot-check the input column
    assert np.allclose(traj.inputs[:, 0],
                       -traj.states[:, 0] - 2.0 * traj.states[:, 1],
                       atol=1e-9)


def test_closed_loop_with_oscillating_perturbation_stays_small():
    model, ctrl = _chain_controller()
    pert = ev.make_perturbation("cos_exp")
    traj = ev.simulate_closed_loop(model, ctrl, pert, np.array([0.5, 0.0]),
                                   0.0, 8.0, tol=1e-8)
    norms = traj.norms()
    assert float(np.max(norms)) < 0.6          # bounded throughout
    assert norms[-1] < 5e-3                    # pinned from a reference run


def test_closed_loop_shift_consistency():
    model, ctrl = _chain_controller()
    ts = np.linspace(0.0, 10.0, 2001)
    traj = ev.simulate_closed_loop(model, ctrl, None, np.array([0.7, -0.2]),
                                   0.0, 10.0, tol=1e-10, sample_times=ts)
    dt = ts[1] - ts[0]
    d_col1 = np.gradient(traj.states[:, 0], dt)
    err = np.max(np.abs(d_col1[2:-2] - traj.states[2:-2, 1]))
    assert err < 10.0 * dt ** 2


def test_closed_loop_controller_failure_surfaces_state():
    model = ev.make_model("tanh")
    ctrl = ev.synthesize_feedback(model, ev.build_gamma([[-1.0]], 2),
                                  ev.default_hurwitz(1))
    with pytest.raises(ev.ControllerEvaluationError) as exc:
        ev.simulate_closed_loop(model, ctrl, None, np.array([3.0, 0.0]),
                                0.0, 5.0, tol=1e-8)
    assert exc.value.t is not None
    assert exc.value.x is not None
    assert exc.value.residual is not None


def test_tracking_zero_reference_reduces_to_stabilization():
    model, ctrl = _chain_controller()
    x0 = np.array([0.37, -0.21])
    ts = np.linspace(0.0, 3.0, 61)
    loop = ev.simulate_closed_loop(model, ctrl, None, x0, 0.0, 3.0, tol=1e-9,
                                   sample_times=ts)
    track = ev.simulate_tracking(
        model, ev.build_gamma([[-1.0]], 2), ev.build_hurwitz([[-1.0]]),
        ev.make_reference("zero", m=1, n=2), None, x0, 0.0, 3.0, tol=1e-9,
        sample_times=ts)
    assert np.array_equal(loop.states, track.states)
    assert np.array_equal(loop.inputs, track.inputs)


def test_tracking_sine_reference():
    model = ev.make_model("chain", m=1, n=2)
    traj = ev.simulate_tracking(
        model, ev.build_gamma([[-1.0]], 2), ev.default_hurwitz(1),
        ev.make_reference("sin_cos"), None, np.array([0.3, 1.0]), 0.0, 20.0,
        tol=1e-9)
    assert np.allclose(traj.states[0], [0.3, 0.0], atol=1e-12)
    assert traj.norms()[-1] < 1e-6


def test_tracking_with_diminishing_perturbation_decays():
    model = ev.make_model("chain", m=1, n=2)
    pert = ev.make_perturbation("cos_exp")
    traj = ev.simulate_tracking(
        model, ev.build_gamma([[-1.0]], 2), ev.default_hurwitz(1),
        ev.make_reference("sin_cos"), pert, np.array([0.3, 1.0]), 0.0, 8.0,
        tol=1e-8)
    assert traj.norms()[-1] < 5e-3             # pinned from a reference run


def test_tracking_rejects_inadmissible_reference():
    model = ev.SystemModel(1, 2, lambda x, u: np.array([x[0] + u[0]]),
                           name="state_coupled")
    with pytest.raises(ValueError, match="inadmissible"):
        ev.simulate_tracking(
            model, ev.build_gamma([[-1.0]], 2), ev.default_hurwitz(1),
            ev.make_reference("sin_cos"), None, np.array([0.3, 1.0]),
            0.0, 5.0, tol=1e-8)


def test_tracking_rejects_inconsistent_reference():
    bad = ev.TrackingSpec(lambda t: np.array([[np.sin(t), np.sin(t)]]),
                          lambda t: np.array([-np.sin(t)]), m=1, n=2)
    model = ev.make_model("chain", m=1, n=2)
    with pytest.raises(ValueError, match="derivative"):
        ev.simulate_tracking(model, ev.build_gamma([[-1.0]], 2),
                             ev.default_hurwitz(1), bad, None,
                             np.array([0.3, 1.0]), 0.0, 5.0, tol=1e-8)


def test_trajectory_csv_round_trip(tmp_path):
    import csv
    model, ctrl = _chain_controller()
    ts = np.linspace(0.0, 2.0, 21)
    traj = ev.simulate_closed_loop(model, ctrl, None, np.array([0.5, 0.0]),
                                   0.0, 2.0, tol=1e-9, sample_times=ts)
    path = tmp_path / "traj.csv"
    ev.trajectory_to_csv(traj, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x_1", "x_2", "u_1", "norm"]
    assert len(rows) == 22
    back = np.array([[float(v) for v in row] for row in rows[1:]])
    assert np.array_equal(back[:, 0], ts)        # 17 digits round-trip floats
    assert np.array_equal(back[:, 1:3], traj.states)
    raw = open(path, "rb").read()
    assert b"\r\n" in raw                        # RFC-4180 line endings


def test_trajectory_diagnostics_sidecar(tmp_path):
    import json
    traj = ev.simulate_error_dynamics(ev.build_hurwitz(A_H), None,
                                      [1.0, 0.0], 0.0, 1.0, tol=1e-8)
    path = tmp_path / "diag.json"
    ev.diagnostics_to_json(traj, path)
    d = json.load(open(path))
    assert d["n_accepted"] > 0 and d["tol"] == 1e-8


def test_concurrent_trajectories_share_controller():
    # interleaved runs from one controller instance give identical results
    model, ctrl = _chain_controller()
    a1 = ev.simulate_closed_loop(model, ctrl, None, np.array([0.5, 0.0]),
                                 0.0, 3.0, tol=1e-9)
    b1 = ev.simulate_closed_loop(model, ctrl, None, np.array([-0.2, 0.4]),
                                 0.0, 3.0, tol=1e-9)
    a2 = ev.simulate_closed_loop(model, ctrl, None, np.array([0.5, 0.0]),
                                 0.0, 3.0, tol=1e-9)
    assert np.array_equal(a1.states, a2.states)
    assert not np.array_equal(a1.states[-1], b1.states[-1])
