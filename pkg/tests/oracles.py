"""Independent reference computations used to pin expected test values.

These deliberately share no code with the package: uniform composite
Simpson quadrature for the windowed-integral metric and the matrix
exponential for linear trajectories.
"""

import math

import numpy as np
import scipy.linalg


def window_sup_simpson(fn, t, freq_max, min_panels=65536):
    """Sup of |running integral| over the unit window by uniform Simpson.

    The mesh keeps at least 128 points per oscillation period (panel step
    <= period/64); the sup is taken on the even Simpson nodes only, so the
    lambda resolution is 1/panels.
    """
    n = max(min_panels, int(math.ceil(64.0 * freq_max / (2.0 * math.pi))))
    h = 1.0 / (2 * n)
    tau = t + h * np.arange(2 * n + 1)
    vals = np.atleast_2d(np.asarray(fn(tau), dtype=float))
    if vals.shape[0] == tau.size:
        vals = vals.T
    seg = (h / 3.0) * (vals[:, 0:-2:2] + 4.0 * vals[:, 1::2] + vals[:, 2::2])
    cum = np.concatenate([np.zeros((vals.shape[0], 1)),
                          np.cumsum(seg, axis=1)], axis=1)
    return float(np.max(np.linalg.norm(cum, axis=0)))


def linear_trajectory(a, x0, ts):
    """Exact solution of x' = a x at the given times (t relative to ts[0])."""
    x0 = np.asarray(x0, dtype=float)
    return np.stack([scipy.linalg.expm(a * (t - ts[0])) @ x0 for t in ts])
