"""Dynamic EIT test bed on the unit disk.

Discrete Neumann-to-Dirichlet (ND) maps are built from the Schur complement
of the P1 stiffness matrix with respect to the interior nodes.  The pure
Neumann problem is singular on constants, so the maps live on the mean-zero
boundary subspace; we express them in the mass-orthonormalized boundary
basis,

    G = P M^{1/2} S^+ M^{1/2} P,

which is exactly symmetric for every conductivity (discrete reciprocity)
and annihilates constants.  The linearized forward operator is the exact
derivative of this map at background conductivity 1, assembled column by
column from per-triangle indicator perturbations.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamic import DynamicProblem, dp_solve
from .mesh import assemble_stiffness, boundary_mass, _p1_element


@dataclass
class NDMap:
    G: np.ndarray
    gauge: str = "mean-zero projection, mass-orthonormal boundary basis"


def hs_inner(G1, G2):
    """Hilbert-Schmidt inner product trace(G1^T G2)."""
    G1 = np.asarray(G1, dtype=float)
    G2 = np.asarray(G2, dtype=float)
    if G1.shape != G2.shape:
        raise ValueError(f"shape mismatch: {G1.shape} vs {G2.shape}")
    return float(np.sum(G1 * G2))


def hs_norm(G):
    return np.sqrt(hs_inner(G, G))


class BoundaryGauge:
    """Cached boundary-space factors for a fixed mesh: P, M^(1/2), splits."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.nb = mesh.n_boundary
        self.P = np.eye(self.nb) - np.ones((self.nb, self.nb)) / self.nb
        M = boundary_mass(mesh)
        w, V = np.linalg.eigh(M)
        if w.min() <= 0:
            raise ValueError("boundary mass matrix not positive definite")
        self.M = M
        self.M_sqrt = (V * np.sqrt(w)) @ V.T

    def schur(self, sigma):
        """Schur complement S = A22 - A21 A11^{-1} A12 on the boundary nodes."""
        mesh = self.mesh
        A = assemble_stiffness(mesh, sigma)
        bi, ii = mesh.boundary, mesh.interior
        A11 = A[np.ix_(ii, ii)]
        A12 = A[np.ix_(ii, bi)]
        A22 = A[np.ix_(bi, bi)]
        S = A22 - A12.T @ scipy.linalg.solve(A11, A12, assume_a="pos")
        return 0.5 * (S + S.T)

    def grounded_inverse(self, S):
        """S^+ on the mean-zero subspace via a rank-one grounding shift."""
        shift = np.trace(S) / self.nb**2
        try:
            Sinv = scipy.linalg.inv(S + shift * np.ones((self.nb, self.nb)))
        except scipy.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                "Schur complement singular on the mean-zero subspace") from exc
        return self.P @ Sinv @ self.P


def nd_map(mesh, sigma, gauge=None):
    """Discrete ND map for piecewise-constant conductivity sigma > 0."""
    sigma = np.asarray(sigma, dtype=float).ravel()
    if np.any(sigma <= 0):
        raise ValueError("conductivity must be positive on every triangle")
    g = gauge if gauge is not None else BoundaryGauge(mesh)
    Splus = g.grounded_inverse(g.schur(sigma))
    G = g.P @ g.M_sqrt @ Splus @ g.M_sqrt @ g.P
    return NDMap(G=0.5 * (G + G.T))


class LinearizedForward:
    """Exact derivative of the discrete ND map at background sigma = 1.

    Since the stiffness matrix is linear in sigma, the derivative of the
    Schur complement in direction gamma is

        dS[gamma] = Z^T A(gamma) Z,   Z = [-A11^{-1} A12; I],

    and dG[gamma] = -W dS[gamma] W^T with W = P M^{1/2} S(1)^+.  Columns are
    assembled from per-triangle indicators, giving the matrix representation
    of gamma |-> dG with respect to the piecewise-constant basis.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.gauge = BoundaryGauge(mesh)
        g = self.gauge
        bi, ii = mesh.boundary, mesh.interior
        A = assemble_stiffness(mesh, np.ones(mesh.n_triangles))
        A11 = A[np.ix_(ii, ii)]
        A12 = A[np.ix_(ii, bi)]
        S1 = A[np.ix_(bi, bi)] - A12.T @ scipy.linalg.solve(A11, A12,
                                                            assume_a="pos")
        self.S1_plus = g.grounded_inverse(0.5 * (S1 + S1.T))
        self.G1 = NDMap(G=g.P @ g.M_sqrt @ self.S1_plus @ g.M_sqrt @ g.P)
        W = g.P @ g.M_sqrt @ self.S1_plus                    # nb x nb
        # Z W^T per global node: boundary rows pick W columns, interior
        # rows carry -A11^{-1} A12.
        X = scipy.linalg.solve(A11, A12, assume_a="pos")     # n_int x nb
        ZWt = np.empty((mesh.n_nodes, g.nb))
        ZWt[bi] = W.T
        ZWt[ii] = -X @ W.T
        self._ZWt = ZWt
        self._matrix = None

    @property
    def nb(self):
        return self.gauge.nb

    def apply(self, gamma):
        """dG for a full piecewise-constant field gamma (any sign)."""
        gamma = np.asarray(gamma, dtype=float).ravel()
        mesh = self.mesh
        if gamma.size != mesh.n_triangles:
            raise ValueError("one value per triangle required")
        dG = np.zeros((self.nb, self.nb))
        for e in np.flatnonzero(gamma):
            dG -= gamma[e] * self._column_block(e)
        return 0.5 * (dG + dG.T)

    def _column_block(self, e):
        tri = self.mesh.triangles[e]
        grads, area = _p1_element(self.mesh.nodes[tri])
        Ke = area * (grads @ grads.T)
        B = self._ZWt[tri]                                   # 3 x nb
        return B.T @ Ke @ B

    def matrix(self):
        """Dense nb^2 x n_triangles matrix of the flattened linearization."""
        if self._matrix is None:
            mesh = self.mesh
            F = np.empty((self.nb * self.nb, mesh.n_triangles))
            for e in range(mesh.n_triangles):
                F[:, e] = -self._column_block(e).ravel()
            self._matrix = F
        return self._matrix

    def adjoint_apply(self, W):
        """Adjoint w.r.t. the area-weighted parameter inner product."""
        W = np.asarray(W, dtype=float)
        F = self.matrix()
        return (F.T @ W.ravel()) / self.mesh.areas


def linearized_forward(mesh):
    return LinearizedForward(mesh)


@dataclass
class PhantomSpec:
    """Two circular inclusions: one fixed, one orbiting and growing."""
    contrast: float = 1.0
    fixed_center: tuple = (0.0, 0.0)
    fixed_radius: float = 0.1
    orbit_radius: float = 0.5
    moving_radius_start: float = 0.10
    moving_radius_end: float = 0.18

    def __post_init__(self):
        if self.contrast <= -1.0:
            raise ValueError("contrast must be > -1 to keep sigma positive")
        cx, cy = self.fixed_center
        if np.hypot(cx, cy) + self.fixed_radius >= 1.0:
            raise ValueError("fixed inclusion escapes the unit disk")
        r_max = max(self.moving_radius_start, self.moving_radius_end)
        if self.orbit_radius + r_max >= 1.0:
            raise ValueError("moving inclusion escapes the unit disk")
        if self.moving_radius_end < self.moving_radius_start:
            raise ValueError("moving radius law must be nondecreasing")

    def moving_center(self, t):
        th = 2.0 * np.pi * t
        return np.array([self.orbit_radius * np.cos(th),
                         self.orbit_radius * np.sin(th)])

    def moving_radius(self, t):
        return (self.moving_radius_start
                + (self.moving_radius_end - self.moving_radius_start) * t)


def make_phantom(spec, t, mesh):
    """Per-triangle inhomogeneity gamma(t); sigma = 1 + gamma."""
    c = mesh.centroids
    gamma = np.zeros(mesh.n_triangles)
    fixed = np.asarray(spec.fixed_center)
    inside_fixed = np.hypot(*(c - fixed).T) <= spec.fixed_radius
    inside_moving = np.hypot(*(c - spec.moving_center(t)).T) <= spec.moving_radius(t)
    gamma[inside_fixed | inside_moving] = spec.contrast
    return gamma


def simulate_data(mesh, spec, mode, n_steps, noise_pct, seed, alpha=1.0,
                  forward=None):
    """Synthesize a dynamic EIT problem with flattened ND-map data.

    mode="linear": y_k = flatten(F'(1) gamma(t_k)); mode="nonlinear":
    y_k = flatten(G(1 + gamma(t_k)) - G(1)), so the linearization error
    rides along as data error.  Per-step Gaussian noise is rescaled to
    exactly noise_pct percent of the step's data norm; the RNG stream is
    derived from (seed, k) so steps are order independent.

    Returns (problem, gammas, times) where problem.F_list share the single
    flattened linearized operator.
    """
    if mode not in ("linear", "nonlinear"):
        raise ValueError(f"mode must be 'linear' or 'nonlinear', got {mode!r}")
    if n_steps < 1 or noise_pct < 0:
        raise ValueError("need n_steps >= 1 and noise_pct >= 0")
    fwd = forward if forward is not None else LinearizedForward(mesh)
    F = fwd.matrix()
    times = np.linspace(0.0, 1.0, n_steps) if n_steps > 1 else np.array([0.0])
    gammas = [make_phantom(spec, t, mesh) for t in times]
    y_list = []
    for k, gamma in enumerate(gammas):
        if mode == "linear":
            y = F @ gamma
        else:
            y = (nd_map(mesh, 1.0 + gamma, gauge=fwd.gauge).G - fwd.G1.G).ravel()
        if noise_pct > 0:
            rng = np.random.default_rng([int(seed), k])
            noise = rng.standard_normal(y.size)
            scale = np.linalg.norm(y)
            if scale > 0:
                noise *= (noise_pct / 100.0) * scale / np.linalg.norm(noise)
                y = y + noise
        y_list.append(y)
    problem = DynamicProblem(F_list=[F] * n_steps, y_list=y_list,
                             alpha=alpha, u0=np.zeros(mesh.n_triangles))
    return problem, gammas, times


def reconstruct_series(mesh, problem):
    """DP reconstruction of gamma frames in the area-weighted L2 geometry.

    The temporal penalty of the DP functional is Euclidean on the parameter
    vector; with piecewise-constant elements of varying size that distorts
    amplitudes toward small triangles.  Substituting u~ = D^(1/2) u with
    D = diag(areas) makes the penalty the L2(disk) norm.  The data-space
    residuals are unchanged by the substitution.

    Returns (gamma_frames, series) with series in the transformed variables.
    """
    d = np.sqrt(mesh.areas)
    F = problem.F_list[0] / d[None, :]
    scaled = DynamicProblem(F_list=[F] * problem.N, y_list=problem.y_list,
                            alpha=problem.alpha, u0=problem.u0 * d,
                            L_list=problem.L_list)
    series = dp_solve(scaled)
    return [u / d for u in series.u_list], series


def blob_centroid(mesh, gamma, top_fraction=0.1):
    """Area- and value-weighted centroid of the strongest positive values.

    Triangles whose value reaches the (1 - top_fraction) quantile of the
    positive part are selected; returns None for an all-nonpositive field.
    """
    gamma = np.asarray(gamma, dtype=float).ravel()
    pos = gamma[gamma > 0]
    if pos.size == 0:
        return None
    threshold = np.quantile(pos, 1.0 - top_fraction)
    sel = gamma >= threshold
    w = gamma[sel] * mesh.areas[sel]
    return (mesh.centroids[sel] * w[:, None]).sum(axis=0) / w.sum()
