"""End-to-end acceptance gate: one test per release criterion.

Each test prints a single PASS/FAIL line in the terminal summary (see
conftest.py) and enforces the stated tolerance and runtime budget.
"""

import time

import numpy as np
import pytest

from dynareg import artifacts, cli, dynamic, eit, static
from dynareg.mesh import build_disk_mesh
from conftest import record_acceptance


def _check(number, label, passed, detail=""):
    record_acceptance(number, label, passed, detail)
    assert passed, f"criterion {number} failed: {label} {detail}"


def _oracle_instances():
    """The 50 seeded instances shared by criteria 2 and 3."""
    out = []
    for trial in range(50):
        rng = np.random.default_rng([2026, trial])
        n = int(rng.integers(1, 9))
        m = int(rng.integers(1, 9))
        N = int(rng.integers(2, 13))
        alpha = float(rng.choice([1e-2, 1.0, 1e2]))
        out.append(dynamic.DynamicProblem(
            F_list=[rng.standard_normal((m, n)) for _ in range(N)],
            y_list=[rng.standard_normal(m) for _ in range(N)],
            alpha=alpha, u0=rng.standard_normal(n)))
    return out


def test_criterion_1_scalar_hand_cases():
    t0 = time.perf_counter()
    p1 = dynamic.DynamicProblem(F_list=[np.eye(1)], y_list=[[2.0]],
                                alpha=1.0, u0=np.zeros(1))
    u1 = dynamic.dp_solve(p1).u_list[0][0]
    p2 = dynamic.DynamicProblem(F_list=[np.eye(1)] * 2, y_list=[[2.0]] * 2,
                                alpha=1.0, u0=np.zeros(1))
    s2 = dynamic.dp_solve(p2)
    err = max(abs(u1 - 1.0), abs(s2.u_list[0][0] - 1.2),
              abs(s2.u_list[1][0] - 1.6))
    elapsed = time.perf_counter() - t0
    _check(1, "scalar DP hand cases exact", err <= 1e-12 and elapsed < 1.0,
           f"max dev {err:.2e}, {elapsed:.2f}s")


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for p in _oracle_instances():
        dp = dynamic.dp_solve(p)
        oracle = dynamic.tikhonov_oracle(p)
        num = max(np.max(np.abs(a - b))
                  for a, b in zip(dp.u_list, oracle.u_list))
        den = 1.0 + max(np.max(np.abs(u)) for u in oracle.u_list)
        worst = max(worst, num / den)
    elapsed = time.perf_counter() - t0
    _check(2, "DP equals space-time Tikhonov oracle on 50 instances",
           worst <= 1e-8 and elapsed < 30.0,
           f"worst rel {worst:.2e}, {elapsed:.1f}s")


def test_criterion_3_euler_lagrange_certification():
    worst = 0.0
    for p in _oracle_instances():
        s = dynamic.dp_solve(p)
        interior, _, scale = dynamic.euler_lagrange_residual(p, s)
        worst = max(worst, interior / scale)
    _check(3, "interior Euler-Lagrange residual below 1e-8*scale",
           worst <= 1e-8, f"worst {worst:.2e}")


def test_criterion_4_static_cross_method_agreement():
    worst = 0.0
    bound_ok = True
    for trial in range(20):
        rng = np.random.default_rng([4, trial])
        n = int(rng.integers(1, 17))
        m = int(rng.integers(1, 17))
        T = float(rng.uniform(0.5, 5.0))
        p = static.StaticProblem(F=rng.standard_normal((m, n)),
                                 y=rng.standard_normal(m),
                                 u0=rng.standard_normal(n))
        traj = static.riccati_ode_solve(p.F, T, 400)
        r_ode = static.evolve_u(p, traj, T)
        r_spec = static.static_filter_solve(p, T)
        denom = max(1.0, np.linalg.norm(r_spec.u_T))
        worst = max(worst, np.linalg.norm(r_ode.u_T - r_spec.u_T) / denom)
        opnorm = np.linalg.norm(p.F, 2)
        for t, Q in zip(traj.times, traj.Q):
            eigs = np.linalg.eigvalsh(Q)
            lo = (static.q_filter(t, T, opnorm ** 2) - 1e-6
                  if opnorm > 0 else T - t - 1e-6)
            if eigs.min() < lo or eigs.max() > (T - t) + 1e-6:
                bound_ok = False
    _check(4, "spectral filter vs Riccati-ODE path on 20 problems",
           worst <= 1e-6 and bound_ok,
           f"worst dev {worst:.2e}, spectrum bound {'ok' if bound_ok else 'violated'}")


def test_criterion_5_noise_free_decay():
    t0 = time.perf_counter()
    inst = cli.default_rate_instance(mu=1.0)
    errors = []
    for T in (5.0, 10.0, 20.0, 40.0):
        r = static.static_filter_solve(inst.problem(inst.y_exact), T)
        errors.append(np.linalg.norm(r.u_T - inst.u_dagger))
    ratios = [b / a for a, b in zip(errors, errors[1:])]
    ok = all(0.25 / 1.5 <= r <= 0.25 * 1.5 for r in ratios)
    elapsed = time.perf_counter() - t0
    _check(5, "exact-data error decays like T^-2 at mu=1",
           ok and elapsed < 10.0,
           "ratios " + ",".join(f"{r:.3f}" for r in ratios))


def test_criterion_6_noisy_rate_study():
    t0 = time.perf_counter()
    inst = cli.default_rate_instance(mu=0.5)
    _, slope = static.rate_study(inst, [1e-1, 1e-2, 1e-3, 1e-4], seed=6)
    elapsed = time.perf_counter() - t0
    _check(6, "noisy rate slope within 0.15 of 1/2",
           abs(slope - 0.5) <= 0.15 and elapsed < 60.0,
           f"slope {slope:.3f}, {elapsed:.1f}s")


def test_criterion_7_linearization_order():
    t0 = time.perf_counter()
    mesh = build_disk_mesh(8)
    fwd = eit.linearized_forward(mesh)
    rng = np.random.default_rng(7)
    gamma = rng.uniform(-0.5, 0.5, mesh.n_triangles)
    G0 = eit.nd_map(mesh, np.ones(mesh.n_triangles)).G
    dG = fwd.apply(gamma)
    rem = [eit.hs_norm(eit.nd_map(mesh, 1.0 + h * gamma).G - G0 - h * dG)
           for h in (1e-1, 1e-2, 1e-3)]
    orders = [np.log10(rem[i] / rem[i + 1]) for i in range(2)]
    elapsed = time.perf_counter() - t0
    _check(7, "ND-map linearization Taylor order >= 1.9",
           min(orders) >= 1.9 and elapsed < 60.0,
           "orders " + ",".join(f"{o:.2f}" for o in orders))


def test_criterion_8_eit_reconstruction_experiment():
    t0 = time.perf_counter()
    mesh = build_disk_mesh(8)
    spec = eit.PhantomSpec()
    details = []
    ok = True
    for mode, noise_pct in (("linear", 0.0), ("nonlinear", 1.0)):
        prob, _, times = eit.simulate_data(mesh, spec, mode=mode, n_steps=50,
                                           noise_pct=noise_pct, seed=7,
                                           alpha=cli.default_eit_alpha(8))
        frames, series = eit.reconstruct_series(mesh, prob)
        hits = 0
        for k, t in enumerate(times):
            c = eit.blob_centroid(mesh, frames[k])
            if c is not None and np.linalg.norm(
                    np.asarray(c) - spec.moving_center(t)) <= 0.2:
                hits += 1
        ok = ok and hits >= 45
        details.append(f"{mode}: {hits}/50")
        if noise_pct > 0:
            clean, _, _ = eit.simulate_data(mesh, spec, mode=mode, n_steps=50,
                                            noise_pct=0.0, seed=7,
                                            alpha=cli.default_eit_alpha(8))
            noise = np.mean([np.linalg.norm(a - b) for a, b in
                             zip(prob.y_list, clean.y_list)])
            ratio = np.mean(series.per_step_residuals) / noise
            ok = ok and ratio <= 3.0
            details.append(f"avg residual/noise {ratio:.2f}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 900.0
    _check(8, "two-circle phantom tracked in >= 45/50 frames",
           ok, "; ".join(details) + f", {elapsed:.0f}s")


def test_criterion_9_complexity_scaling():
    report = cli.bench_scaling([64, 128, 256, 512], n=32, m=32, seed=9,
                               reps=15)
    ratios = [b / a for a, b in zip(report.median_times,
                                    report.median_times[1:])]
    ok = 0.8 <= report.exponent <= 1.3 and all(r <= 2.5 for r in ratios)
    _check(9, "DP sweep runtime linear in the number of time steps", ok,
           f"exponent {report.exponent:.2f}, doubling ratios "
           + ",".join(f"{r:.2f}" for r in ratios))


def test_criterion_10_invariant_suites():
    t0 = time.perf_counter()
    # PSD of every Q_k across the shared instance pool
    min_eig = min(np.linalg.eigvalsh(Q).min()
                  for p in _oracle_instances()[:20]
                  for Q in dynamic.backward_sweep(p).Q_list)
    # q-filter ODE consistency q' = -1 + lam q^2 at 100 random points
    rng = np.random.default_rng(10)
    h = 1e-5
    worst_ode = 0.0
    for _ in range(100):
        T = rng.uniform(0.5, 3.0)
        t = rng.uniform(0.0, T - 10 * h)
        lam = rng.uniform(0.0, 4.0)
        dq = (static.q_filter(t + h, T, lam)
              - static.q_filter(t - h, T, lam)) / (2 * h)
        q = static.q_filter(t, T, lam)
        worst_ode = max(worst_ode, abs(dq - (-1.0 + lam * q * q)))
    # adjoint consistency of the linearized EIT forward map
    mesh = build_disk_mesh(4)
    fwd = eit.linearized_forward(mesh)
    worst_adj = 0.0
    for _ in range(5):
        g = rng.standard_normal(mesh.n_triangles)
        W = rng.standard_normal((fwd.nb, fwd.nb))
        lhs = eit.hs_inner(fwd.apply(g), W)
        rhs = np.sum(mesh.areas * g * fwd.adjoint_apply(W))
        worst_adj = max(worst_adj, abs(lhs - rhs) / max(1.0, abs(lhs)))
    # gauge identity G 1 = 0
    sigma = 1.0 + 0.5 * rng.uniform(-1, 1, mesh.n_triangles)
    G = eit.nd_map(mesh, sigma).G
    gauge = np.max(np.abs(G @ np.ones(G.shape[0])))
    elapsed = time.perf_counter() - t0
    ok = (min_eig >= -1e-8 and worst_ode <= 1e-4 and worst_adj <= 1e-8
          and gauge <= 1e-10 and elapsed < 120.0)
    _check(10, "invariant suites (PSD, q-filter ODE, adjoint, gauge)",
           ok, f"min eig {min_eig:.1e}, ode {worst_ode:.1e}, "
               f"adj {worst_adj:.1e}, gauge {gauge:.1e}, {elapsed:.0f}s")
