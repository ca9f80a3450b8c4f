"""Static regularization by the final time T of a linear-quadratic control sweep.

Two independent routes to the same reconstruction:

* the closed-form spectral filter u_T built from 1/cosh(sqrt(lambda) T), and
* backward RK4 integration of the matrix Riccati equation
  Q' = -I + Q F F^T Q, Q(T) = 0, followed by a forward sweep of
  u' = -F^T Q(t) (F u - y).

Their agreement is one of the main correctness checks of the package.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .linalg import svd, symmetrize


@dataclass
class StaticProblem:
    F: np.ndarray          # m x n forward operator
    y: np.ndarray          # data, length m
    u0: np.ndarray         # initial guess, length n
    delta: float = 0.0     # known noise bound, 0 = exact data

    def __post_init__(self):
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.u0 = np.asarray(self.u0, dtype=float).ravel()
        m, n = self.F.shape
        if self.y.size != m or self.u0.size != n:
            raise ValueError(
                f"inconsistent sizes: F is {m}x{n}, y has {self.y.size}, "
                f"u0 has {self.u0.size}"
            )
        if self.delta < 0:
            raise ValueError("noise bound must be >= 0")


@dataclass
class FilterResult:
    u_T: np.ndarray
    T: float
    residual_norm: float
    method_tag: str


def _sech(x):
    """1/cosh(x), overflow-safe for large arguments."""
    x = np.abs(np.asarray(x, dtype=float))
    e = np.exp(-np.minimum(x, 700.0))
    return 2.0 * e / (1.0 + e * e)


def _one_minus_sech(x):
    """1 - sech(x) without cancellation: 2 sinh(x/2)^2 / cosh(x)."""
    x = np.abs(np.asarray(x, dtype=float))
    out = np.ones_like(x)
    small = x < 350.0
    xs = x[small]
    out[small] = 2.0 * np.sinh(0.5 * xs) ** 2 / np.cosh(xs)
    return out


def q_filter(t, T, lam):
    """Scalar Riccati solution tanh(sqrt(lam)(T-t))/sqrt(lam), limit T-t at 0."""
    if t > T:
        raise ValueError(f"need t <= T, got t={t}, T={T}")
    if lam < 0:
        raise ValueError(f"spectral value must be >= 0, got {lam}")
    dt = T - t
    s = np.sqrt(lam) * dt
    if s < 1e-6:
        # tanh(s)/s = 1 - s^2/3 + O(s^4)
        return dt * (1.0 - s * s / 3.0)
    return np.tanh(s) / np.sqrt(lam)


def static_filter_solve(p, T):
    """Closed-form regularized solution via the SVD of F.

    With lam_i = sigma_i^2, the data components are filtered by
    (1 - sech(sigma_i T)) / lam_i and the initial-guess components by
    sech(sigma_i T); components of u0 outside the row space of F pass
    through unchanged (the filter is 1 at lambda = 0).
    """
    if T < 0:
        raise ValueError("final time must be >= 0")
    dec = svd(p.F)
    U, s, V = dec.left_vectors, dec.singular_values, dec.right_vectors
    sech = _sech(s * T)
    data_filter = _one_minus_sech(s * T) / s**2
    # <F^T y, v_i> = sigma_i <y, u_i>
    data_coeff = s * (U.T @ p.y)
    u0_coeff = V.T @ p.u0
    u_T = p.u0 - V @ u0_coeff          # null-space part of u0, untouched
    u_T = u_T + V @ (data_filter * data_coeff + sech * u0_coeff)
    res = float(np.linalg.norm(p.F @ u_T - p.y))
    return FilterResult(u_T=u_T, T=float(T), residual_norm=res,
                        method_tag="spectral")


@dataclass
class StaticRiccatiTrajectory:
    """Backward Riccati sweep sampled on a uniform grid over [0, T].

    Q is stored at the 2*steps+1 half-step grid points so that the forward
    RK4 sweep of the state has exact midpoint values available.
    """
    T: float
    steps: int
    Q_fine: np.ndarray = field(repr=False)   # (2*steps+1, m, m)

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.steps + 1)

    @property
    def Q(self):
        """Q at the coarse grid t_j = j T / steps."""
        return self.Q_fine[::2]


def riccati_ode_solve(F, T, steps):
    """Integrate Q' = -I + Q F F^T Q backward from Q(T) = 0 with RK4.

    Substituting s = T - t turns this into the forward problem
    dQ/ds = I - Q F F^T Q, Q(0) = 0, integrated with 2*steps half-steps.
    """
    if steps < 1:
        raise ValueError("need at least one step")
    F = np.atleast_2d(np.asarray(F, dtype=float))
    m = F.shape[0]
    FFt = F @ F.T
    I = np.eye(m)

    def rhs(Q):
        return I - Q @ FFt @ Q

    nfine = 2 * steps
    h = T / nfine
    traj = np.empty((nfine + 1, m, m))
    Q = np.zeros((m, m))
    traj[nfine] = Q                       # s = 0 is t = T
    for j in range(nfine):
        k1 = rhs(Q)
        k2 = rhs(Q + 0.5 * h * k1)
        k3 = rhs(Q + 0.5 * h * k2)
        k4 = rhs(Q + h * k3)
        Q = symmetrize(Q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4))
        if not np.all(np.isfinite(Q)):
            raise FloatingPointError(f"Riccati sweep blew up at step {j + 1}")
        traj[nfine - 1 - j] = Q           # store by increasing t
    return StaticRiccatiTrajectory(T=float(T), steps=steps, Q_fine=traj)


def evolve_u(p, Q_traj, T):
    """Forward RK4 sweep of u' = -F^T Q(t) (F u - y) using a stored Q path."""
    if abs(Q_traj.T - T) > 1e-12 * max(1.0, T):
        raise ValueError(f"trajectory built for T={Q_traj.T}, asked for T={T}")
    if Q_traj.Q_fine.shape[1] != p.F.shape[0]:
        raise ValueError("trajectory dimension does not match the operator")
    F, Ft, y = p.F, p.F.T, p.y
    steps = Q_traj.steps
    h = T / steps
    u = p.u0.copy()
    for j in range(steps):
        Q0 = Q_traj.Q_fine[2 * j]
        Qh = Q_traj.Q_fine[2 * j + 1]
        Q1 = Q_traj.Q_fine[2 * j + 2]
        k1 = -Ft @ (Q0 @ (F @ u - y))
        k2 = -Ft @ (Qh @ (F @ (u + 0.5 * h * k1) - y))
        k3 = -Ft @ (Qh @ (F @ (u + 0.5 * h * k2) - y))
        k4 = -Ft @ (Q1 @ (F @ (u + h * k3) - y))
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    res = float(np.linalg.norm(F @ u - y))
    return FilterResult(u_T=u, T=float(T), residual_norm=res,
                        method_tag="riccati_ode")


def choose_T(delta, mu, c=1.0):
    """A-priori stopping time T = c * delta^(-1/(2 mu + 1))."""
    if delta <= 0:
        raise ValueError("noise bound must be > 0 for the a-priori choice")
    if mu <= 0 or c <= 0:
        raise ValueError("mu and c must be > 0")
    return c * delta ** (-1.0 / (2.0 * mu + 1.0))


@dataclass
class SourceConditionInstance:
    """Diagonal test problem with u_dagger = (F^T F)^mu omega built in.

    F = diag(singular_values) acting on R^n, so the source condition holds
    by construction: u_dagger_i = sigma_i^(2 mu) * omega_i.
    """
    singular_values: np.ndarray
    omega: np.ndarray
    mu: float

    def __post_init__(self):
        self.singular_values = np.asarray(self.singular_values, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        if self.singular_values.size != self.omega.size:
            raise ValueError("sigma and omega must have equal length")
        if np.any(self.singular_values <= 0) or self.mu <= 0:
            raise ValueError("need positive singular values and mu > 0")

    @property
    def u_dagger(self):
        return self.singular_values ** (2.0 * self.mu) * self.omega

    @property
    def y_exact(self):
        return self.singular_values * self.u_dagger

    def problem(self, y):
        n = self.singular_values.size
        return StaticProblem(F=np.diag(self.singular_values), y=y,
                             u0=np.zeros(n))


def rate_study(inst, deltas, seed, c=1.0):
    """Empirical convergence-rate table for the a-priori parameter choice.

    For each noise level the exact data are perturbed by a seeded Gaussian
    vector rescaled to norm exactly delta, solved at T = choose_T(delta, mu),
    and the error against u_dagger recorded.  Returns (rows, slope) where
    rows is a list of (delta, T, error) and slope the least-squares fit of
    log(error) against log(delta).  Per-level RNG streams keep the table
    reproducible regardless of evaluation order.
    """
    deltas = [float(d) for d in deltas]
    if len(deltas) < 4 or max(deltas) / min(deltas) < 100.0:
        raise ValueError("need >= 4 noise levels spanning >= 2 decades")
    u_dag = inst.u_dagger
    y_exact = inst.y_exact
    rows = []
    for i, delta in enumerate(deltas):
        rng = np.random.default_rng([int(seed), i])
        noise = rng.standard_normal(y_exact.size)
        noise *= delta / np.linalg.norm(noise)
        T = choose_T(delta, inst.mu, c)
        result = static_filter_solve(inst.problem(y_exact + noise), T)
        err = float(np.linalg.norm(result.u_T - u_dag))
        rows.append((delta, T, err))
    errs = np.array([r[2] for r in rows])
    if np.all(errs < 1e-14):
        raise ArithmeticError("rate study saturated: all errors below 1e-14")
    slope = float(np.polyfit(np.log(deltas), np.log(errs), 1)[0])
    return rows, slope


def rate_study_csv(rows, slope):
    """CSV rendering with the fitted slope appended as a comment line."""
    buf = io.StringIO()
    buf.write("delta,T,error\n")
    for delta, T, err in rows:
        buf.write(f"{delta:.17g},{T:.17g},{err:.17g}\n")
    buf.write(f"# slope={slope:.6f}\n")
    return buf.getvalue()
