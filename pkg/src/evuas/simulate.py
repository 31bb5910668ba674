"""Closed-loop, error-dynamics and tracking simulations.

All three wrap :func:`evuas.integrate.integrate`.  Closed-loop runs
evaluate the feedback inside the right-hand side with the previous input as
a warm start; that cache lives in the enclosing run, never on the shared
controller, so concurrent trajectories stay independent.  The feedback
solve is treated as exact inside the RHS (its residual tolerance sits far
below any integrator tolerance used here).
"""

import csv
import json

import numpy as np

from .errors import ControllerEvaluationError, NewtonError
from .integrate import integrate
from .model import evaluate_dynamics, flatten_state

_CSV_FMT = "%.17g"


def simulate_error_dynamics(hurwitz, pert, e0, t0, t_end, tol=1e-8,
                            sample_times=None, norm="euclidean",
                            max_steps=None):
    """Integrate the error system e' = A_H e + W(t, e)."""
    a_h = hurwitz.a_h
    e0 = np.asarray(e0, dtype=float)
    if pert is None or pert.kind == "zero":
        def rhs(t, e):
            return a_h @ e
        hint = None
    elif pert.kind == "time":
        # direct signal call: the integrator's finite check covers failures
        w = pert.w

        def rhs(t, e):
            return a_h @ e + w(t)
        hint = pert.freq_hint
    else:
        d, k = pert.d, pert.k

        def rhs(t, e):
            return a_h @ e + np.asarray(d(t), dtype=float) @ k(e)
        hint = pert.freq_hint
    kwargs = {} if max_steps is None else {"max_steps": max_steps}
    return integrate(rhs, t0, e0, t_end, tol=tol, freq_hint=hint,
                     sample_times=sample_times, norm=norm, **kwargs)


def simulate_closed_loop(model, ctrl, pert, x0, t0, t_end, tol=1e-8,
                         sample_times=None, norm="euclidean",
                         max_steps=None):
    """Integrate the first-order form under U = G(X).

    A feedback-solve failure mid-run aborts the trajectory and surfaces
    the time, state and residual (the state left the controller's domain
    of validity).
    """
    x0 = np.asarray(x0, dtype=float)
    x0_flat = flatten_state(x0) if x0.ndim == 2 else x0
    warm = {"u": None}

    def rhs(t, x):
        try:
            u = ctrl.solve(x, u0=warm["u"])
        except NewtonError as exc:
            raise ControllerEvaluationError(
                f"feedback solve failed at t={t}: {exc}", t=float(t),
                x=np.array(x), residual=exc.residual) from exc
        warm["u"] = u
        return evaluate_dynamics(model, pert, t, x, u)

    hint = None if (pert is None or pert.kind == "zero") else pert.freq_hint
    kwargs = {} if max_steps is None else {"max_steps": max_steps}
    traj = integrate(rhs, t0, x0_flat, t_end, tol=tol, freq_hint=hint,
                     sample_times=sample_times, norm=norm, **kwargs)

    inputs = np.empty((traj.times.size, model.m))
    u_prev = None
    for i in range(traj.times.size):
        u_prev = ctrl.solve(traj.states[i], u0=u_prev)
        inputs[i] = u_prev
    traj.inputs = inputs
    traj.diagnostics["controller_failures"] = len(
        getattr(getattr(ctrl, "validity", None), "failures", []) or [])
    return traj


class TrackingSpec:
    """Reference trajectory with all derivative columns.

    x_d maps time to the (m, n) reference state matrix, y_d_n to the m
    first derivatives of its last column.  ``validate`` spot-checks the
    derivative consistency of adjacent columns at seeded random times and
    the admissibility condition F(X_d(t), 0) = 0 on a sample grid.
    """

    def __init__(self, x_d, y_d_n, m, n, name=None):
        self.x_d = x_d
        self.y_d_n = y_d_n
        self.m = int(m)
        self.n = int(n)
        self.name = name

    def value(self, t):
        mat = np.asarray(self.x_d(t), dtype=float)
        if mat.shape != (self.m, self.n):
            raise ValueError(
                f"x_d(t) must have shape ({self.m}, {self.n}), got {mat.shape}")
        return mat

    def check_consistency(self, t0, t_end, rel_tol=1e-4, seed=0):
        rng = np.random.default_rng(seed)
        span = t_end - t0
        dt = 1e-5 * max(1.0, span)
        for t in t0 + span * rng.random(10):
            fwd = self.value(t + dt)
            bwd = self.value(t - dt)
            mid = self.value(t)
            deriv = (fwd - bwd) / (2 * dt)
            for i in range(self.n - 1):
                scale = max(1.0, float(np.max(np.abs(deriv[:, i]))))
                err = float(np.max(np.abs(deriv[:, i] - mid[:, i + 1])))
                if err > rel_tol * scale:
                    raise ValueError(
                        f"reference column {i + 1} is not the derivative of "
                        f"column {i} at t={t:.4f} (error {err:.2e})")

    def check_admissible(self, model, t0, t_end, tol=1e-8, n_grid=17):
        for t in np.linspace(t0, t_end, n_grid):
            resid = float(np.linalg.norm(
                model.eval_f(flatten_state(self.value(t)), np.zeros(self.m))))
            if resid > tol:
                raise ValueError(
                    f"reference is inadmissible: |F(X_d({t:.4f}), 0)| = "
                    f"{resid:.2e} exceeds {tol:.1e}")


def simulate_tracking(model, design, hurwitz, track, pert, x0, t0, t_end,
                      tol=1e-8, sample_times=None, norm="euclidean",
                      max_steps=None, validate=True):
    """Integrate the deviation from a reference under the tracking feedback.

    The feedback solves the time-dependent closing residual in U with the
    reference's nth derivative as feedforward; the returned trajectory is
    of the deviation Delta = X - X_d(t).  With the zero reference this
    reduces exactly to the stabilization loop.
    """
    from .synthesis import ImplicitController

    m, n = model.m, model.n
    if validate:
        track.check_consistency(t0, t_end)
        track.check_admissible(model, t0, t_end)
    ctrl = ImplicitController(model, design, hurwitz)
    x0 = np.asarray(x0, dtype=float)
    x0_flat = flatten_state(x0) if x0.ndim == 2 else x0
    delta0 = x0_flat - flatten_state(track.value(t0))
    warm = {"u": None}

    def rhs(t, delta):
        xd_flat = flatten_state(track.value(t))
        ydn = np.asarray(track.y_d_n(t), dtype=float)
        x_total = delta + xd_flat
        try:
            u = ctrl.solve_shifted(delta, x_total, -ydn, u0=warm["u"])
        except NewtonError as exc:
            raise ControllerEvaluationError(
                f"tracking feedback failed at t={t}: {exc}", t=float(t),
                x=np.array(delta), residual=exc.residual) from exc
        warm["u"] = u
        out = np.empty(m * n)
        out[:(n - 1) * m] = delta[m:]
        last = model.eval_f(x_total, u)
        if pert is not None and pert.kind != "zero":
            last = last + pert.evaluate(t, x_total)
        out[(n - 1) * m:] = last - ydn
        return out

    hint = None if (pert is None or pert.kind == "zero") else pert.freq_hint
    kwargs = {} if max_steps is None else {"max_steps": max_steps}
    traj = integrate(rhs, t0, delta0, t_end, tol=tol, freq_hint=hint,
                     sample_times=sample_times, norm=norm, **kwargs)

    inputs = np.empty((traj.times.size, m))
    u_prev = None
    for i, t in enumerate(traj.times):
        xd_flat = flatten_state(track.value(t))
        ydn = np.asarray(track.y_d_n(t), dtype=float)
        u_prev = ctrl.solve_shifted(traj.states[i], traj.states[i] + xd_flat,
                                    -ydn, u0=u_prev)
        inputs[i] = u_prev
    traj.inputs = inputs
    return traj


# reference catalog for tracking scenarios

def _sin_cos_reference():
    return TrackingSpec(
        lambda t: np.array([[np.sin(t), np.cos(t)]]),
        lambda t: np.array([-np.sin(t)]),
        m=1, n=2, name="sin_cos")


def _zero_reference(m, n):
    return TrackingSpec(lambda t: np.zeros((m, n)),
                        lambda t: np.zeros(m), m=m, n=n, name="zero")


REFERENCE_CATALOG = {
    "sin_cos": (lambda m=1, n=2: _sin_cos_reference(),
                "scalar second-order reference (sin t, cos t)"),
    "zero": (_zero_reference, "identically zero reference"),
}


def make_reference(name, m=1, n=2):
    if name not in REFERENCE_CATALOG:
        raise KeyError(
            f"unknown reference {name!r}; catalog: {sorted(REFERENCE_CATALOG)}")
    factory = REFERENCE_CATALOG[name][0]
    return factory(m, n) if name == "zero" else factory(m=m, n=n)


# ---------------------------------------------------------------------------
# trajectory export


def trajectory_to_csv(traj, path, norm=None):
    """RFC-4180 CSV: t, x_1..x_k, u_1..u_m (when present), norm."""
    norm = norm or traj.norm_used
    norms = traj.norms(norm)
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        header = ["t"] + [f"x_{i + 1}" for i in range(traj.dim)]
        if traj.inputs is not None:
            header += [f"u_{i + 1}" for i in range(traj.inputs.shape[1])]
        header.append("norm")
        writer.writerow(header)
        for i in range(traj.times.size):
            row = [_CSV_FMT % traj.times[i]]
            row += [_CSV_FMT % v for v in traj.states[i]]
            if traj.inputs is not None:
                row += [_CSV_FMT % v for v in traj.inputs[i]]
            row.append(_CSV_FMT % norms[i])
            writer.writerow(row)


def diagnostics_to_json(traj, path):
    """Sidecar with the integrator diagnostics."""
    with open(path, "w", encoding="ascii") as fh:
        json.dump(traj.diagnostics, fh, indent=2, sort_keys=True)
        fh.write("\n")
