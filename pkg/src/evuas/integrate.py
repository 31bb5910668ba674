"""Adaptive embedded Runge-Kutta integration with dense output.

A Dormand-Prince 5(4) pair drives all simulations: fifth-order propagation,
fourth-order embedded error estimate, FSAL, step-size control on a mixed
absolute/relative per-step tolerance.  When the right-hand side carries a
high-frequency oscillation the caller passes its angular frequency (a
constant or a function of t) and the step is additionally capped at an
eighth of the local period, which keeps the controller from blindly
marching across whole oscillation periods of phases like t**4.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IntegrationError
from .norms import vector_norm

# Dormand-Prince coefficients
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = (9017 / 3168, -355 / 33, 46732 / 5247,
                                49 / 176, -5103 / 18656)
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth-minus-fourth-order weights for the error estimate
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                                -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_DEFAULT_MAX_STEPS = 10_000_000


@dataclass
class Trajectory:
    """Time-stamped samples of one integration run.

    states has one row per sample; inputs (when the run was closed loop)
    likewise.  diagnostics carries accepted/rejected step counts, the
    smallest accepted step and the RHS evaluation count.
    """

    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)
    norm_used: str = "euclidean"

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def dim(self):
        return self.states.shape[1]

    def norms(self, norm=None):
        return vector_norm(self.states, norm or self.norm_used)

    def terminal_state(self):
        return self.states[-1]


def _step_cap(freq_hint, t):
    if freq_hint is None:
        return math.inf
    omega = abs(freq_hint(t)) if callable(freq_hint) else abs(freq_hint)
    if omega <= 0.0:
        return math.inf
    return (2.0 * math.pi / omega) / 8.0


def _hermite(t, t0, h, y0, y1, f0, f1):
    # cubic Hermite in theta; O(h^4) between accepted steps
    theta = (t - t0) / h
    a = theta * (theta - 1.0)
    return ((1.0 - theta) * y0 + theta * y1
            + a * ((1.0 - 2.0 * theta) * (y1 - y0)
                   + (theta - 1.0) * h * f0 + theta * h * f1))


def _initial_step(rhs, t0, y0, f0, t_end, tol, cap):
    scale = tol + tol * np.abs(y0)
    d0 = math.sqrt(float(np.mean((y0 / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0, cap)
    y1 = y0 + h0 * f0
    f1 = np.asarray(rhs(t0 + h0, y1), dtype=float)
    d2 = math.sqrt(float(np.mean(((f1 - f0) / scale) ** 2))) / h0
    if not math.isfinite(d2):
        return h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end - t0, cap)


def integrate(rhs, t0, x0, t_end, tol=1e-8, freq_hint=None, sample_times=None,
              max_steps=_DEFAULT_MAX_STEPS, norm="euclidean"):
    """Integrate x' = rhs(t, x) from t0 to t_end.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, x) -> ndarray``.
    t0, t_end : float
        t_end must exceed t0.
    tol : float
        Per-step error tolerance, applied mixed (absolute and relative).
    freq_hint : float or callable, optional
        Angular frequency of the fastest forcing; caps the step at an
        eighth of its period.
    sample_times : array_like, optional
        Dense-output sample times; defaults to the accepted step points.
        t0 is always included as the first sample.
    max_steps : int
        Step budget before giving up.
    norm : str
        Stored on the trajectory for downstream reporting.

    Raises
    ------
    IntegrationError
        On step underflow, non-finite states, or an exhausted budget; the
        error carries the last good (t, x).
    """
    t0 = float(t0)
    t_end = float(t_end)
    if not t_end > t0:
        raise ValueError(f"t_end={t_end} must exceed t0={t0}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    y = np.array(x0, dtype=float)
    if y.ndim != 1:
        y = y.ravel()
    dim = y.size

    if sample_times is not None:
        samples = np.asarray(sample_times, dtype=float)
        if samples.ndim != 1 or np.any(np.diff(samples) <= 0):
            raise ValueError("sample_times must be strictly increasing")
        if samples[0] < t0 - 1e-12 or samples[-1] > t_end + 1e-12:
            raise ValueError("sample_times must lie within [t0, t_end]")
        if abs(samples[0] - t0) > 1e-12:
            samples = np.concatenate(([t0], samples))
        else:
            samples = samples.copy()
            samples[0] = t0
    else:
        samples = None

    out_t = [t0]
    out_y = [y.copy()]
    sample_ptr = 1 if samples is not None else None

    t = t0
    f = np.asarray(rhs(t, y), dtype=float)
    if f.shape != y.shape:
        raise ValueError(f"rhs returned shape {f.shape}, expected {y.shape}")
    if not np.all(np.isfinite(f)):
        raise IntegrationError(f"non-finite derivative at t={t}", t_last=t,
                               x_last=y.copy(), reason="non-finite")
    n_rhs = 2  # f0 plus the initial-step probe
    cap = _step_cap(freq_hint, t)
    h = _initial_step(rhs, t, y, f, t_end, tol, cap)

    n_accepted = 0
    n_rejected = 0
    min_step = math.inf
    rejected_last = False

    while t < t_end:
        h_eff = min(h, _step_cap(freq_hint, t),
                    _step_cap(freq_hint, min(t + h, t_end)))
        if h_eff >= t_end - t:
            h_eff = t_end - t
            t_new = t_end
        else:
            t_new = t + h_eff
        if h_eff < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError(
                f"step underflow at t={t} (h={h_eff:.3e})", t_last=t,
                x_last=y.copy(), reason="step-underflow")
        if n_accepted + n_rejected >= max_steps:
            raise IntegrationError(
                f"step budget {max_steps} exhausted at t={t}", t_last=t,
                x_last=y.copy(), reason="budget")

        hh = h_eff
        k1 = f
        k2 = np.asarray(rhs(t + _C[1] * hh, y + hh * (_A21 * k1)), dtype=float)
        k3 = np.asarray(rhs(t + _C[2] * hh, y + hh * (_A31 * k1 + _A32 * k2)),
                        dtype=float)
        k4 = np.asarray(rhs(t + _C[3] * hh,
                            y + hh * (_A41 * k1 + _A42 * k2 + _A43 * k3)),
                        dtype=float)
        k5 = np.asarray(rhs(t + _C[4] * hh,
                            y + hh * (_A51 * k1 + _A52 * k2 + _A53 * k3
                                      + _A54 * k4)), dtype=float)
        k6 = np.asarray(rhs(t_new,
                            y + hh * (_A61 * k1 + _A62 * k2 + _A63 * k3
                                      + _A64 * k4 + _A65 * k5)), dtype=float)
        y_new = y + hh * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = np.asarray(rhs(t_new, y_new), dtype=float)
        n_rhs += 6

        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(k7))):
            raise IntegrationError(
                f"non-finite state at t={t_new}", t_last=t, x_last=y.copy(),
                reason="non-finite")

        err_vec = hh * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6
                        + _E7 * k7)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))

        if err <= 1.0:
            if samples is not None:
                while (sample_ptr < samples.size
                       and samples[sample_ptr] <= t_new + 1e-13):
                    ts = min(samples[sample_ptr], t_new)
                    out_t.append(float(samples[sample_ptr]))
                    out_y.append(_hermite(ts, t, hh, y, y_new, k1, k7))
                    sample_ptr += 1
            else:
                out_t.append(t_new)
                out_y.append(y_new.copy())
            n_accepted += 1
            min_step = min(min_step, hh)
            t, y, f = t_new, y_new, k7
            factor = _MAX_FACTOR if err == 0.0 else min(
                _MAX_FACTOR, _SAFETY * err ** -0.2)
            if rejected_last:
                factor = min(factor, 1.0)
            h = hh * max(_MIN_FACTOR, factor)
            rejected_last = False
        else:
            n_rejected += 1
            h = hh * max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            rejected_last = True

    times = np.asarray(out_t)
    states = np.asarray(out_y)
    if samples is not None:
        # exact-end bookkeeping: the final requested sample is t_end itself
        states[-1] = y if abs(times[-1] - t_end) <= 1e-12 else states[-1]
    diagnostics = {"n_accepted": n_accepted, "n_rejected": n_rejected,
                   "n_rhs": n_rhs,
                   "min_step": min_step if math.isfinite(min_step) else 0.0,
                   "tol": tol}
    return Trajectory(times=times, states=states, diagnostics=diagnostics,
                      norm_used=norm)
