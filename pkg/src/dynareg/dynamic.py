"""Discrete and continuous dynamic regularization by backward/forward sweeps.

The discrete path minimizes

    J(u) = 1/2 sum_k [ <F_k u_k - y_k, L_k (F_k u_k - y_k)>
                       + alpha ||u_k - u_{k-1}||^2 ],   u_0 fixed,

via two backward recursions on (Q_k, b_k) and one forward recursion on u_k.
A dense space-time Tikhonov solve and the discrete Euler-Lagrange system act
as independent oracles certifying that the sweeps return the minimizer.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .linalg import solve_sym, symmetrize, dump_matrix

ORACLE_CAP = 4096  # max N*n unknowns for the dense space-time solve


@dataclass
class DynamicProblem:
    F_list: list                # N forward operators, each m x n
    y_list: list                # N data vectors, length m
    alpha: float                # temporal regularization weight
    u0: np.ndarray              # initial guess, length n
    L_list: list = None         # N symmetric PSD data weights, default identity

    def __post_init__(self):
        self.F_list = [np.atleast_2d(np.asarray(F, dtype=float))
                       for F in self.F_list]
        self.y_list = [np.asarray(y, dtype=float).ravel() for y in self.y_list]
        self.u0 = np.asarray(self.u0, dtype=float).ravel()
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if len(self.F_list) != len(self.y_list) or not self.F_list:
            raise ValueError("need matching, nonempty F_list and y_list")
        m, n = self.F_list[0].shape
        if self.L_list is None:
            # None entries mean identity weight; kept implicit to avoid
            # materializing large identity matrices.
            self.L_list = [None] * self.N
        else:
            self.L_list = [None if L is None
                           else np.atleast_2d(np.asarray(L, dtype=float))
                           for L in self.L_list]
        for k in range(self.N):
            if self.F_list[k].shape != (m, n):
                raise ValueError(f"F_{k + 1} has shape {self.F_list[k].shape}, "
                                 f"expected {(m, n)}")
            if self.y_list[k].size != m:
                raise ValueError(f"data size mismatch at step {k + 1}")
            L = self.L_list[k]
            if L is not None and L.shape != (m, m):
                raise ValueError(f"weight size mismatch at step {k + 1}")
        if self.u0.size != n:
            raise ValueError(f"u0 has length {self.u0.size}, expected {n}")

    @property
    def N(self):
        return len(self.F_list)

    @property
    def n(self):
        return self.F_list[0].shape[1]

    @property
    def m(self):
        return self.F_list[0].shape[0]

    def normal_blocks(self):
        """Per-step F_k^T L_k F_k and F_k^T L_k y_k, cached by operator identity."""
        cache = {}
        blocks = []
        for F, L, y in zip(self.F_list, self.L_list, self.y_list):
            key = (id(F), id(L))
            if key not in cache:
                FtL = F.T if L is None else F.T @ L
                cache[key] = (FtL @ F, FtL)
            FtLF, FtL = cache[key]
            blocks.append((FtLF, FtL @ y))
        return blocks


@dataclass
class RiccatiTrajectory:
    """Backward sequences Q_1..Q_{N+1}, b_1..b_{N+1}; index k-1 holds step k."""
    Q_list: list
    b_list: list
    problem: DynamicProblem = field(repr=False, default=None)


@dataclass
class ReconstructionSeries:
    u_list: list
    functional_value: float
    per_step_residuals: list
    functional_cumulative: list = None


def backward_sweep(p):
    """Backward recursions for Q and b, from Q_{N+1} = 0, b_{N+1} = 0."""
    n = p.n
    eye = np.eye(n)
    blocks = p.normal_blocks()
    Q_list = [None] * (p.N + 1)
    b_list = [None] * (p.N + 1)
    Q_list[p.N] = np.zeros((n, n))
    b_list[p.N] = np.zeros(n)
    for k in range(p.N, 0, -1):
        Q_next = Q_list[k]
        b_next = b_list[k]
        # (I + Q_k/alpha)^{-1} applied to Q_k and b_k; this is the value-
        # function propagation consistent with the forward step
        # u_k = (Q_k + alpha I)^{-1} (alpha u_{k-1} - b_k).
        shifted = eye + Q_next / p.alpha
        FtLF, FtLy = blocks[k - 1]
        Q = symmetrize(solve_sym(shifted, Q_next) + FtLF)
        b = solve_sym(shifted, b_next) - FtLy
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(b))):
            raise FloatingPointError(f"backward sweep non-finite at step {k}")
        Q_list[k - 1] = Q
        b_list[k - 1] = b
    return RiccatiTrajectory(Q_list=Q_list, b_list=b_list, problem=p)


def forward_sweep(p, traj):
    """Forward recursion u_k = (Q_k + alpha I)^{-1} (alpha u_{k-1} - b_k)."""
    if traj.problem is not p:
        if len(traj.Q_list) != p.N + 1 or traj.Q_list[0].shape[0] != p.n:
            raise ValueError("trajectory does not match the problem")
    a_eye = p.alpha * np.eye(p.n)
    u = p.u0
    u_list = []
    for k in range(1, p.N + 1):
        u = solve_sym(traj.Q_list[k - 1] + a_eye, p.alpha * u - traj.b_list[k - 1])
        u_list.append(u)
    return _make_series(p, u_list)


def dp_solve(p):
    """Backward plus forward sweep in one call."""
    return forward_sweep(p, backward_sweep(p))


def functional_value(p, u_list):
    """J(u) = 1/2 sum_k [ residual energy + alpha ||u_k - u_{k-1}||^2 ]."""
    total = 0.0
    prev = p.u0
    for k in range(p.N):
        r = p.F_list[k] @ u_list[k] - p.y_list[k]
        L = p.L_list[k]
        total += float(r @ r) if L is None else float(r @ (L @ r))
        total += p.alpha * float(np.sum((u_list[k] - prev) ** 2))
        prev = u_list[k]
    return 0.5 * total


def _make_series(p, u_list):
    residuals = []
    cumulative = []
    total = 0.0
    prev = p.u0
    for k in range(p.N):
        r = p.F_list[k] @ u_list[k] - p.y_list[k]
        residuals.append(float(np.linalg.norm(r)))
        L = p.L_list[k]
        energy = float(r @ r) if L is None else float(r @ (L @ r))
        total += 0.5 * (energy
                        + p.alpha * float(np.sum((u_list[k] - prev) ** 2)))
        cumulative.append(total)
        prev = u_list[k]
    return ReconstructionSeries(u_list=u_list, functional_value=total,
                                per_step_residuals=residuals,
                                functional_cumulative=cumulative)


def tikhonov_oracle(p):
    """Dense space-time normal-equations solve of the same functional.

    Assembles the (N n) x (N n) block-tridiagonal SPD system obtained by
    differentiating J and solves it in one shot.  Verification only; refuses
    problems above ORACLE_CAP unknowns.
    """
    N, n = p.N, p.n
    if N * n > ORACLE_CAP:
        raise ValueError(f"oracle cap exceeded: {N * n} > {ORACLE_CAP} unknowns")
    A = np.zeros((N * n, N * n))
    rhs = np.zeros(N * n)
    blocks = p.normal_blocks()
    eye = np.eye(n)
    for k in range(N):
        sl = slice(k * n, (k + 1) * n)
        FtLF, FtLy = blocks[k]
        diag_weight = 2.0 if k < N - 1 else 1.0
        A[sl, sl] = FtLF + diag_weight * p.alpha * eye
        if k < N - 1:
            sl_next = slice((k + 1) * n, (k + 2) * n)
            A[sl, sl_next] = -p.alpha * eye
            A[sl_next, sl] = -p.alpha * eye
        rhs[sl] = FtLy
    rhs[:n] += p.alpha * p.u0
    x = solve_sym(A, rhs)
    return _make_series(p, [x[k * n:(k + 1) * n] for k in range(N)])


def euler_lagrange_residual(p, series):
    """Residuals of the discrete Euler-Lagrange system at a candidate series.

    Interior row k (1 <= k <= N-1, with u_0 the fixed initial guess):
        F_k^T L_k (F_k u_k - y_k) - alpha (u_{k+1} - 2 u_k + u_{k-1}) = 0.
    Terminal row (discrete analogue of u'(T) = 0):
        F_N^T L_N (F_N u_N - y_N) + alpha (u_N - u_{N-1}) = 0.

    Returns (interior_max, terminal, scale) where scale is the magnitude of
    the data terms entering the rows.
    """
    if p.N < 2:
        raise ValueError("need at least two time steps")
    u = [p.u0] + list(series.u_list)
    blocks = p.normal_blocks()
    scale = max(1.0, max(np.linalg.norm(FtLy) for _, FtLy in blocks),
                p.alpha * max(np.linalg.norm(v) for v in u))
    interior = 0.0
    for k in range(1, p.N):
        FtLF, FtLy = blocks[k - 1]
        r = FtLF @ u[k] - FtLy - p.alpha * (u[k + 1] - 2.0 * u[k] + u[k - 1])
        interior = max(interior, float(np.linalg.norm(r)))
    FtLF, FtLy = blocks[p.N - 1]
    terminal = float(np.linalg.norm(
        FtLF @ u[p.N] - FtLy + p.alpha * (u[p.N] - u[p.N - 1])))
    return interior, terminal, scale


@dataclass
class ContinuousSolution:
    times: np.ndarray
    u: np.ndarray               # (n_T, n) state samples
    Q: np.ndarray               # (n_T, n, n) Riccati samples at grid times
    b: np.ndarray               # (n_T, n)


def continuous_riccati_solve(Ffun, Lfun, yfun, alpha, T, u0, n_T):
    """Continuous-time analogue: backward (Q, b) sweep, then forward u sweep.

    Ffun, Lfun, yfun are callables of t providing the time-indexed operator
    family; both sweeps use classical RK4 on the uniform grid of n_T points
    (n_T - 1 intervals), with coefficient evaluations at half steps.
    """
    if n_T < 2:
        raise ValueError("need at least two grid points")
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    u0 = np.asarray(u0, dtype=float).ravel()
    n = u0.size
    times = np.linspace(0.0, T, n_T)
    h = times[1] - times[0]

    def coeffs(t):
        F = np.atleast_2d(np.asarray(Ffun(t), dtype=float))
        L = np.atleast_2d(np.asarray(Lfun(t), dtype=float))
        y = np.asarray(yfun(t), dtype=float).ravel()
        FtL = F.T @ L
        return FtL @ F, FtL @ y

    # backward sweep: Q' = Q a^{-1} Q - F^T L F, b' = Q a^{-1} b + F^T L y.
    # Integrated on the doubled (half-step) grid so the forward sweep has
    # exact midpoint samples and keeps 4th order.
    def qb_rhs(t, Q, b):
        FtLF, FtLy = coeffs(t)
        return Q @ Q / alpha - FtLF, Q @ b / alpha + FtLy

    nfine = 2 * (n_T - 1)
    hf = 0.5 * h
    t_fine = np.linspace(0.0, T, nfine + 1)
    Q = np.zeros((n, n))
    b = np.zeros(n)
    Q_fine = np.empty((nfine + 1, n, n))
    b_fine = np.empty((nfine + 1, n))
    Q_fine[-1] = Q
    b_fine[-1] = b
    for j in range(nfine, 0, -1):
        t1, t0 = t_fine[j], t_fine[j - 1]
        tm = 0.5 * (t0 + t1)
        k1Q, k1b = qb_rhs(t1, Q, b)
        k2Q, k2b = qb_rhs(tm, Q - 0.5 * hf * k1Q, b - 0.5 * hf * k1b)
        k3Q, k3b = qb_rhs(tm, Q - 0.5 * hf * k2Q, b - 0.5 * hf * k2b)
        k4Q, k4b = qb_rhs(t0, Q - hf * k3Q, b - hf * k3b)
        Q = symmetrize(Q - (hf / 6.0) * (k1Q + 2 * k2Q + 2 * k3Q + k4Q))
        b = b - (hf / 6.0) * (k1b + 2 * k2b + 2 * k3b + k4b)
        if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(b))):
            raise FloatingPointError(f"continuous sweep non-finite at t={t0}")
        Q_fine[j - 1] = Q
        b_fine[j - 1] = b

    # forward sweep: u' = -alpha^{-1} (Q u + b)
    u = u0.copy()
    u_grid = np.empty((n_T, n))
    u_grid[0] = u
    for j in range(n_T - 1):
        Q0, b0 = Q_fine[2 * j], b_fine[2 * j]
        Qm, bm = Q_fine[2 * j + 1], b_fine[2 * j + 1]
        Q1, b1 = Q_fine[2 * j + 2], b_fine[2 * j + 2]
        k1 = -(Q0 @ u + b0) / alpha
        k2 = -(Qm @ (u + 0.5 * h * k1) + bm) / alpha
        k3 = -(Qm @ (u + 0.5 * h * k2) + bm) / alpha
        k4 = -(Q1 @ (u + h * k3) + b1) / alpha
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        u_grid[j + 1] = u
    return ContinuousSolution(times=times, u=u_grid, Q=Q_fine[::2], b=b_fine[::2])


def series_csv(series):
    """CSV export "k,residual,functional_cumulative" for a solution series."""
    buf = io.StringIO()
    buf.write("k,residual,functional_cumulative\n")
    for k, (res, cum) in enumerate(zip(series.per_step_residuals,
                                       series.functional_cumulative), start=1):
        buf.write(f"{k},{res:.17g},{cum:.17g}\n")
    return buf.getvalue()


def dump_series_vectors(series, path):
    """Per-step solution vectors as one matrix text dump (row k = u_k)."""
    dump_matrix(np.stack(series.u_list), path)
