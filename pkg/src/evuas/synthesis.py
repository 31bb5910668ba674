"""Stabilizing feedback construction and its design-constant bookkeeping.

The construction closes the loop through an m-vector of per-channel tracking
errors

    e_j = gamma_{1,j} y_j + gamma_{2,j} y_j' + ... + y_j^(n-1),

with each column of the (n-1)-by-m coefficient matrix Gamma encoding a
monic polynomial whose roots all lie in the open left half plane, so e -> 0
forces the full state to 0.  The feedback U = G(X) is the implicit solution
of

    shift_term(X) + F(X, U) - A_H e(X) = 0,

solved pointwise by a damped Newton iteration; A_H is any Hurwitz m-by-m
matrix and shapes the error dynamics.  A linear-gain alternative places the
closed-loop poles of the linearization directly.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import model as _model
from .errors import DesignError, NewtonError, ShapeError

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
NEWTON_MAX_HALVINGS = 6

_POLE_TOL = 1e-9          # conjugate-closure matching tolerance
_HURWITZ_MARGIN = -1e-12  # eigenvalue real parts must stay below this


# ---------------------------------------------------------------------------
# error-coordinate design


@dataclass
class GammaDesign:
    """Per-channel error-polynomial coefficients and derived constants.

    gamma has shape (n-1, m); column j holds the low-order coefficients of
    the monic polynomial gamma_1 + gamma_2 z + ... + z^(n-1).  gamma_star
    is the largest coefficient magnitude (at least 1), mu_gamma the decay
    rate of the slowest pole across columns, kappa a numerically estimated
    overshoot constant of the companion subsystem the error drives.
    """

    gamma: np.ndarray
    poles: list
    n: int
    m: int
    gamma_star: float
    mu_gamma: float
    kappa: float

    def column_polynomial(self, j):
        """Monic coefficient vector (ascending order) of column j."""
        return np.append(self.gamma[:, j], 1.0)

    def to_dict(self):
        return {
            "n": self.n, "m": self.m,
            "gamma": self.gamma.tolist(),
            "poles": [[(complex(p).real, complex(p).imag) for p in col]
                      for col in self.poles],
            "gamma_star": self.gamma_star,
            "mu_gamma": self.mu_gamma,
            "kappa": self.kappa,
        }


def _check_conjugate_closed(roots, what):
    pending = list(roots)
    while pending:
        r = pending.pop()
        if abs(r.imag) <= _POLE_TOL:
            continue
        for i, s in enumerate(pending):
            if abs(s - np.conj(r)) <= _POLE_TOL * max(1.0, abs(r)):
                pending.pop(i)
                break
        else:
            raise DesignError(
                f"{what}: complex pole {r} lacks its conjugate partner")


def companion_matrix(coeffs_ascending):
    """Companion matrix of a monic polynomial given ascending coefficients."""
    coeffs = np.asarray(coeffs_ascending, dtype=float)
    deg = coeffs.size - 1
    comp = np.zeros((deg, deg))
    if deg > 1:
        comp[:-1, 1:] = np.eye(deg - 1)
    comp[-1, :] = -coeffs[:-1]
    return comp


def _estimate_overshoot(design_gamma, mu_gamma):
    """Numerical overshoot constant of the block companion subsystem.

    Samples the induced 2-norm of the transition matrix on [0, 20/mu] and
    applies a 1.05 safety factor; clamped to at least 1.
    """
    n_minus_1, m = design_gamma.shape
    blocks = [companion_matrix(np.append(design_gamma[:, j], 1.0))
              for j in range(m)]
    a = scipy.linalg.block_diag(*blocks)
    t_max = 20.0 / mu_gamma
    sup = 1.0
    for t in np.linspace(0.0, t_max, 201):
        sup = max(sup, float(np.linalg.norm(scipy.linalg.expm(a * t), 2)))
    return max(1.0, 1.05 * sup)


def build_gamma(poles_per_column, n):
    """Expand per-column pole multisets into a GammaDesign.

    Parameters
    ----------
    poles_per_column : sequence of m sequences
        Each inner sequence holds exactly n-1 poles, closed under complex
        conjugation, with strictly negative real parts.
    n : int
        Derivative order of the system; must exceed 1.
    """
    if n <= 1:
        raise DesignError(f"order n must exceed 1, got {n}")
    m = len(poles_per_column)
    if m < 1:
        raise DesignError("need at least one pole column")
    gamma = np.zeros((n - 1, m))
    poles = []
    worst_real = -np.inf
    for j, col in enumerate(poles_per_column):
        roots = [complex(p) for p in col]
        if len(roots) != n - 1:
            raise DesignError(
                f"column {j}: expected {n - 1} poles, got {len(roots)}")
        for r in roots:
            if r.real >= 0.0:
                raise DesignError(
                    f"column {j}: pole {r} has nonnegative real part")
        _check_conjugate_closed(roots, f"column {j}")
        coeffs = np.poly(roots)           # descending, monic
        if np.max(np.abs(coeffs.imag)) > 1e-10:
            raise DesignError(f"column {j}: expansion is not real")
        gamma[:, j] = coeffs.real[1:][::-1]
        poles.append(roots)
        worst_real = max(worst_real, max(r.real for r in roots))
    gamma_star = max(1.0, float(np.max(np.abs(gamma))))
    mu_gamma = -worst_real
    kappa = _estimate_overshoot(gamma, mu_gamma)
    return GammaDesign(gamma=gamma, poles=poles, n=n, m=m,
                       gamma_star=gamma_star, mu_gamma=mu_gamma, kappa=kappa)


@dataclass
class HurwitzMatrix:
    """A square matrix certified to have all eigenvalue real parts negative."""

    a_h: np.ndarray
    eigenvalues: np.ndarray
    max_real_part: float

    def to_dict(self):
        return {"a_h": self.a_h.tolist(),
                "eigenvalues": [(z.real, z.imag) for z in self.eigenvalues],
                "max_real_part": self.max_real_part}


def build_hurwitz(a_h):
    a_h = np.asarray(a_h, dtype=float)
    if a_h.ndim != 2 or a_h.shape[0] != a_h.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a_h.shape}")
    eig = np.linalg.eigvals(a_h)
    worst = int(np.argmax(eig.real))
    if eig.real[worst] >= _HURWITZ_MARGIN:
        raise DesignError(
            f"matrix is not Hurwitz: eigenvalue {eig[worst]} has "
            f"real part {eig.real[worst]:.3e}")
    return HurwitzMatrix(a_h=a_h, eigenvalues=eig,
                         max_real_part=float(np.max(eig.real)))


def default_hurwitz(m):
    """-identity, the default error-shaping matrix."""
    return build_hurwitz(-np.eye(m))


@dataclass
class NonSingularityReport:
    levy_desplanques: bool
    numeric_nonsingular: bool
    condition_estimate: float

    def to_dict(self):
        return {"levy_desplanques": self.levy_desplanques,
                "numeric_nonsingular": self.numeric_nonsingular,
                "condition_estimate": self.condition_estimate}


def check_nonsingular(b):
    """Strict diagonal dominance test plus a numeric condition estimate.

    Strict diagonal dominance (|b_ii| greater than the off-diagonal row
    sum, every row) is sufficient for non-singularity, so a true
    levy_desplanques verdict always comes with a true numeric verdict.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {b.shape}")
    diag = np.abs(np.diag(b))
    off = np.sum(np.abs(b), axis=1) - diag
    sdd = bool(np.all(diag > off))
    try:
        cond = float(np.linalg.cond(b, 2))
    except np.linalg.LinAlgError:
        cond = np.inf
    numeric = bool(np.isfinite(cond) and cond < 1e12)
    return NonSingularityReport(levy_desplanques=sdd,
                                numeric_nonsingular=numeric,
                                condition_estimate=cond)


# ---------------------------------------------------------------------------
# error coordinates and the implicit feedback


def tracking_error(x_flat, gamma, m, n):
    """Per-channel error vector e = Diag(X [Gamma; 1])."""
    xmat = np.asarray(x_flat, dtype=float).reshape((m, n), order="F")
    return (xmat[:, :n - 1] * gamma.T).sum(axis=1) + xmat[:, n - 1]


def _shift_term(xmat, gamma, n):
    # Diag(X [0; Gamma]): the error derivative's input-free part
    return (xmat[:, 1:] * gamma.T).sum(axis=1)


def input_free_term(x_flat, gamma, a_h, m, n):
    """The U-independent part of the closing residual at state X."""
    xmat = np.asarray(x_flat, dtype=float).reshape((m, n), order="F")
    err = (xmat[:, :n - 1] * gamma.T).sum(axis=1) + xmat[:, n - 1]
    return _shift_term(xmat, gamma, n) - a_h @ err


@dataclass
class ValidityLog:
    """Domain-of-validity bookkeeping for an implicit controller."""

    max_good_radius: float = 0.0
    failures: list = field(default_factory=list)

    def record_success(self, radius):
        if radius > self.max_good_radius:
            self.max_good_radius = radius

    def record_failure(self, info):
        if len(self.failures) < 50:
            self.failures.append(info)


class ImplicitController:
    """State feedback obtained by solving the closing residual for U.

    Evaluation runs a damped Newton iteration on U with the state frozen;
    the cold start is U = 0 (so the feedback is exactly zero at the
    origin), and trajectory integrators pass the previous input as a warm
    start.  The controller itself is immutable apart from the validity
    log, so one instance can serve many concurrent trajectories as long as
    warm starts are kept per trajectory.
    """

    mode = "implicit-newton"

    def __init__(self, model, design, hurwitz, tol=NEWTON_TOL,
                 max_iter=NEWTON_MAX_ITER, max_halvings=NEWTON_MAX_HALVINGS):
        if design.m != model.m or design.n != model.n:
            raise DesignError(
                f"design is (m={design.m}, n={design.n}) but the model is "
                f"(m={model.m}, n={model.n})")
        if hurwitz.a_h.shape != (model.m, model.m):
            raise DesignError(
                f"A_H must be {model.m}x{model.m}, got {hurwitz.a_h.shape}")
        self.model = model
        self.design = design
        self.hurwitz = hurwitz
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.max_halvings = int(max_halvings)
        self.validity = ValidityLog()

    def residual(self, x_flat, u):
        """Closing residual at (X, U); zero defines the feedback."""
        free = input_free_term(x_flat, self.design.gamma, self.hurwitz.a_h,
                               self.model.m, self.model.n)
        return free + self.model.eval_f(x_flat, u)

    def solve(self, x_flat, u0=None):
        """Feedback value at a state, Newton-solved to the residual tolerance."""
        return self._solve(np.asarray(x_flat, dtype=float), u0=u0)

    def solve_shifted(self, delta_flat, f_state, offset, u0=None):
        """Tracking variant: error terms in the deviation, F at the true state.

        Solves shift_term(delta) + F(f_state, U) + offset - A_H e(delta) = 0;
        the offset carries the reference feedforward.
        """
        return self._solve(np.asarray(delta_flat, dtype=float), u0=u0,
                           f_state=np.asarray(f_state, dtype=float),
                           offset=offset)

    def _solve(self, x_flat, u0=None, f_state=None, offset=None):
        model = self.model
        free = input_free_term(x_flat, self.design.gamma, self.hurwitz.a_h,
                               model.m, model.n)
        if offset is not None:
            free = free + offset
        x_eval = x_flat if f_state is None else f_state

        u = np.zeros(model.m) if u0 is None else np.array(u0, dtype=float)
        r = free + model.eval_f(x_eval, u)
        rn = float(np.linalg.norm(r))
        for it in range(self.max_iter):
            if rn <= self.tol:
                self.validity.record_success(float(np.linalg.norm(x_flat)))
                return u
            jac = _model.jacobian_F_U(model, x_eval, u)
            try:
                step = np.linalg.solve(jac, -r)
            except np.linalg.LinAlgError:
                info = {"x": x_flat.copy(), "residual": rn, "iterations": it,
                        "singular": True}
                self.validity.record_failure(info)
                raise NewtonError(
                    f"singular input Jacobian after {it} iterations "
                    f"(residual {rn:.3e})", x=x_flat.copy(), residual=rn,
                    iterations=it, singular=True)
            lam = 1.0
            improved = False
            for _ in range(self.max_halvings + 1):
                u_try = u + lam * step
                r_try = free + model.eval_f(x_eval, u_try)
                rn_try = float(np.linalg.norm(r_try))
                if np.isfinite(rn_try) and rn_try < rn:
                    improved = True
                    break
                lam *= 0.5
            if not improved:
                info = {"x": x_flat.copy(), "residual": rn,
                        "iterations": it, "singular": False}
                self.validity.record_failure(info)
                raise NewtonError(
                    f"no descent after {self.max_halvings} halvings "
                    f"(residual {rn:.3e})", x=x_flat.copy(), residual=rn,
                    iterations=it)
            u, r, rn = u_try, r_try, rn_try
        if rn <= self.tol:
            self.validity.record_success(float(np.linalg.norm(x_flat)))
            return u
        info = {"x": x_flat.copy(), "residual": rn,
                "iterations": self.max_iter, "singular": False}
        self.validity.record_failure(info)
        raise NewtonError(
            f"no convergence in {self.max_iter} iterations "
            f"(residual {rn:.3e})", x=x_flat.copy(), residual=rn,
            iterations=self.max_iter)

    def __call__(self, x_flat, u0=None):
        return self.solve(x_flat, u0=u0)

    def to_summary(self):
        return {
            "mode": self.mode,
            "m": self.model.m, "n": self.model.n,
            "model": self.model.name,
            "design": self.design.to_dict(),
            "a_h": self.hurwitz.a_h.tolist(),
            "newton": {"tol": self.tol, "max_iter": self.max_iter,
                       "max_halvings": self.max_halvings},
        }


class LinearController:
    """Constant-gain feedback U = G x on the flat state."""

    mode = "linear-gain"

    def __init__(self, gain, model=None, placed_poles=None):
        self.gain = np.asarray(gain, dtype=float)
        self.model = model
        self.placed_poles = placed_poles

    def solve(self, x_flat, u0=None):
        return self.gain @ np.asarray(x_flat, dtype=float)

    def __call__(self, x_flat, u0=None):
        return self.solve(x_flat)

    def to_summary(self):
        return {
            "mode": self.mode,
            "gain": self.gain.tolist(),
            "model": getattr(self.model, "name", None),
            "placed_poles": [(complex(p).real, complex(p).imag)
                             for p in (self.placed_poles or [])],
        }


def synthesize_feedback(model, design, hurwitz, tol=NEWTON_TOL,
                        max_iter=NEWTON_MAX_ITER,
                        max_halvings=NEWTON_MAX_HALVINGS):
    """Build the implicit Newton-backed feedback for a model.

    Checks the origin equilibrium and the non-singularity of the input
    Jacobian at the origin before handing out the controller.
    """
    model.check_origin_equilibrium()
    report = check_nonsingular(_model.jacobian_F_U(
        model, np.zeros(model.state_dim), np.zeros(model.m)))
    if not report.numeric_nonsingular:
        raise DesignError(
            "input Jacobian at the origin is numerically singular "
            f"(condition estimate {report.condition_estimate:.3e})")
    return ImplicitController(model, design, hurwitz, tol=tol,
                              max_iter=max_iter, max_halvings=max_halvings)


# ---------------------------------------------------------------------------
# coercivity probe

_COERCIVITY_GROWTH = 10.0     # required min/max growth across the radius span
_PLATEAU_RTOL = 1e-3          # relative growth below this is a plateau


def input_cost(model, x_flat, u):
    """Half squared residual magnitude of F at fixed state, as a function of U."""
    return 0.5 * float(np.linalg.norm(model.eval_f(x_flat, u)) ** 2)


def coercivity_probe(model, x_samples, ray_count=16, radii=(1.0, 10.0, 100.0, 1000.0),
                     seed=0):
    """Sampled-growth evidence for coercivity of the input cost.

    Walks random input rays outward at the given radii for every probe
    state.  "coercive-evidence" requires the smallest cost at the largest
    radius to exceed the largest cost at the smallest radius by a factor of
    10; a plateau (or decay) on the outermost two radii on every ray yields
    "non-coercive-evidence"; anything else is inconclusive.  Finite
    sampling proves nothing either way, hence the naming.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be at least 3 increasing values")
    rng = np.random.default_rng(seed)
    rays = rng.standard_normal((ray_count, model.m))
    rays /= np.linalg.norm(rays, axis=1, keepdims=True)

    data = []       # (state index, ray index) -> cost per radius
    excluded = []
    for xi, x in enumerate(x_samples):
        x = np.asarray(x, dtype=float)
        for ri, d in enumerate(rays):
            costs = []
            try:
                for r in radii:
                    costs.append(input_cost(model, x, r * d))
            except Exception:
                excluded.append((xi, ri))
                continue
            data.append(costs)
    if not data:
        return {"verdict": "inconclusive", "radii": radii.tolist(),
                "costs": [], "excluded": excluded}
    costs = np.asarray(data)
    min_outer = float(np.min(costs[:, -1]))
    max_inner = float(np.max(costs[:, 0]))
    plateau = bool(np.all(costs[:, -1] <= costs[:, -2] * (1.0 + _PLATEAU_RTOL)
                          + 1e-15))
    if min_outer >= _COERCIVITY_GROWTH * max_inner and min_outer > 0.0:
        verdict = "coercive-evidence"
    elif plateau:
        verdict = "non-coercive-evidence"
    else:
        verdict = "inconclusive"
    return {"verdict": verdict, "radii": radii.tolist(),
            "costs": costs.tolist(), "excluded": excluded,
            "min_outer": min_outer, "max_inner": max_inner}


# ---------------------------------------------------------------------------
# linear alternative: pole placement on the linearization


def _partition_poles(poles, m, n):
    """Deterministically split mn poles into m conjugate-closed groups of n.

    Conjugate pairs are kept together.  Pairs and reals are sorted by
    (real part, |imag|) and dealt greedily into the lowest-index channel
    with enough remaining capacity.
    """
    poles = [complex(p) for p in poles]
    if len(poles) != m * n:
        raise DesignError(f"expected {m * n} poles, got {len(poles)}")
    _check_conjugate_closed(poles, "desired poles")
    for p in poles:
        if p.real >= 0.0:
            raise DesignError(f"pole {p} has nonnegative real part")

    used = [False] * len(poles)
    groups = []           # list of (sort key, [poles])
    order = sorted(range(len(poles)),
                   key=lambda i: (poles[i].real, abs(poles[i].imag)))
    for i in order:
        if used[i]:
            continue
        p = poles[i]
        used[i] = True
        if abs(p.imag) <= _POLE_TOL:
            groups.append(((p.real, 0.0), [complex(p.real, 0.0)]))
            continue
        for jj in order:
            if not used[jj] and abs(poles[jj] - np.conj(p)) <= \
                    _POLE_TOL * max(1.0, abs(p)):
                used[jj] = True
                break
        groups.append(((p.real, abs(p.imag)), [p, np.conj(p)]))

    groups.sort(key=lambda g: (-len(g[1]), g[0]))
    channels = [[] for _ in range(m)]
    for _, grp in groups:
        for ch in channels:
            if len(ch) + len(grp) <= n:
                ch.extend(grp)
                break
        else:
            raise DesignError(
                "cannot split the poles into per-channel conjugate-closed "
                f"groups of {n}")
    return channels


def linearization(model):
    """(A, B) of the first-order form at the origin."""
    m, n = model.m, model.n
    x0 = np.zeros(model.state_dim)
    u0 = np.zeros(m)
    a = np.zeros((m * n, m * n))
    if n > 1:
        a[:(n - 1) * m, m:] = np.eye((n - 1) * m)
    a[(n - 1) * m:, :] = _model.jacobian_F_X(model, x0, u0)
    b = np.zeros((m * n, m))
    b[(n - 1) * m:, :] = _model.jacobian_F_U(model, x0, u0)
    return a, b


def controllability_rank(a, b):
    dim = a.shape[0]
    blocks = [b]
    for _ in range(dim - 1):
        blocks.append(a @ blocks[-1])
    return int(np.linalg.matrix_rank(np.hstack(blocks)))


def linearize_and_place(model, desired_poles):
    """Linear gain whose closed-loop linearization has the desired spectrum.

    The first-order form interleaves derivative blocks, so grouping each
    channel's own chain (the permutation flat index i*m + j <-> channel j,
    derivative i) exposes one controllable companion block per channel.
    Cancelling the state coupling through the input Jacobian and imposing
    the per-channel characteristic polynomials then places all poles
    exactly.
    """
    m, n = model.m, model.n
    a, b = linearization(model)
    rank = controllability_rank(a, b)
    if rank < m * n:
        raise DesignError(
            f"linearization is uncontrollable: controllability rank {rank} "
            f"< {m * n}")
    report = check_nonsingular(b[(n - 1) * m:, :])
    if not report.numeric_nonsingular:
        raise DesignError(
            "input Jacobian at the origin is numerically singular "
            f"(condition estimate {report.condition_estimate:.3e})")

    channels = _partition_poles(desired_poles, m, n)
    gain_v = np.zeros((m, m * n))   # virtual gain in companion coordinates
    for j, ch in enumerate(channels):
        coeffs = np.poly(ch)
        if np.max(np.abs(np.asarray(coeffs).imag)) > 1e-10:
            raise DesignError(f"channel {j}: pole expansion is not real")
        ascending = np.real(coeffs)[1:][::-1]       # a_0 ... a_{n-1}
        for i in range(n):
            gain_v[j, i * m + j] = -ascending[i]
    ju = b[(n - 1) * m:, :]
    jx = a[(n - 1) * m:, :]
    gain = np.linalg.solve(ju, gain_v - jx)

    closed = a + b @ gain
    placed = np.sort_complex(np.linalg.eigvals(closed))
    wanted = np.sort_complex(np.asarray([complex(p) for p in desired_poles]))
    if np.max(np.abs(placed - wanted)) > 1e-8 * max(1.0, np.max(np.abs(wanted))):
        raise DesignError(
            f"pole placement mismatch: got {placed}, wanted {wanted}")
    return LinearController(gain, model=model, placed_poles=list(wanted))


# ---------------------------------------------------------------------------
# region-of-attraction arithmetic


@dataclass
class RoaEstimate:
    """Guaranteed initial-state radius from the design constants."""

    r_max: float
    epsilon: float
    delta_E_of_eps: float
    theta1: float
    theta2: float
    delta_star_E: float
    delta_star_X: float
    delta_star: float

    def to_dict(self):
        return {k: getattr(self, k) for k in (
            "r_max", "epsilon", "delta_E_of_eps", "theta1", "theta2",
            "delta_star_E", "delta_star_X", "delta_star")}


def estimate_roa(design, r_max, epsilon, delta_E_of_eps, theta1=1.0,
                 theta2=1.0, m=None):
    """Initial-state radius guaranteeing the trajectory stays in the
    synthesis domain.

    delta*_E scales the error-system margin back through the error map
    (theta1 / (gamma* theta2 sqrt(m)) factor); delta*_X keeps the state
    inside the radius-r_max ball via the companion-subsystem decay,
    requiring epsilon < r_max * mu_gamma.
    """
    if m is None:
        m = design.m
    for nm, v in (("r_max", r_max), ("epsilon", epsilon),
                  ("delta_E_of_eps", delta_E_of_eps), ("theta1", theta1),
                  ("theta2", theta2)):
        if v <= 0:
            raise ValueError(f"{nm} must be positive, got {v}")
    if epsilon >= r_max * design.mu_gamma:
        raise DesignError(
            f"epsilon {epsilon} must be below r_max*mu_gamma = "
            f"{r_max * design.mu_gamma}")
    delta_star_e = theta1 / (design.gamma_star * theta2 * math.sqrt(m)) \
        * delta_E_of_eps
    delta_star_x = (r_max - epsilon / design.mu_gamma) / design.kappa
    return RoaEstimate(r_max=r_max, epsilon=epsilon,
                       delta_E_of_eps=delta_E_of_eps, theta1=theta1,
                       theta2=theta2, delta_star_E=delta_star_e,
                       delta_star_X=delta_star_x,
                       delta_star=min(delta_star_e, delta_star_x))
