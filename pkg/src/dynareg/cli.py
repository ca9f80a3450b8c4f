"""Experiment harness: config-driven runs, artifact emission, benchmarks.

Subcommands:

    dynareg run --config cfg.json --out outdir
    dynareg bench --sizes 64,128,256 --n 32 --m 32 --seed 7

Exit codes: 0 success, 2 config error, 3 numeric failure.  Every stochastic
run requires an explicit seed and produces a manifest with content hashes,
so artifacts are regenerable byte-identically.
"""

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from . import artifacts, dynamic, eit, mesh as meshmod, static

KINDS = ("static-rate", "dyn-oracle-check", "eit-recon", "bench-scaling")

# allowed config keys per experiment kind (unknown keys are rejected)
_SCHEMA = {
    "static-rate": {"kind", "seed", "mu", "deltas", "c", "n", "sigma_min"},
    "dyn-oracle-check": {"kind", "seed", "n", "m", "N", "alpha", "trials"},
    "eit-recon": {"kind", "seed", "n_rings", "n_steps", "noise_pct", "mode",
                  "alpha", "contrast"},
    "bench-scaling": {"kind", "seed", "sizes", "n", "m", "reps"},
}
_REQUIRED = {
    "static-rate": {"kind", "seed", "mu", "deltas"},
    "dyn-oracle-check": {"kind", "seed", "n", "m", "N", "alpha"},
    "eit-recon": {"kind", "seed", "n_rings", "n_steps", "noise_pct", "mode"},
    "bench-scaling": {"kind", "seed", "sizes", "n", "m"},
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    kind: str
    params: dict

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        kind = raw.get("kind")
        if kind not in KINDS:
            raise ConfigError(f"field 'kind' must be one of {KINDS}, got {kind!r}")
        unknown = set(raw) - _SCHEMA[kind]
        if unknown:
            raise ConfigError(f"unknown config keys for {kind}: {sorted(unknown)}")
        missing = _REQUIRED[kind] - set(raw)
        if missing:
            raise ConfigError(f"missing config keys for {kind}: {sorted(missing)}")
        if not isinstance(raw["seed"], int):
            raise ConfigError("field 'seed' must be an integer")
        return cls(kind=kind, params=dict(raw))

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON (line {exc.lineno}, "
                              f"column {exc.colno}): {exc.msg}") from exc
        return cls.from_dict(raw)


def run(config, out_dir):
    """Execute one experiment; returns the list of produced artifact names."""
    os.makedirs(out_dir, exist_ok=True)
    produced = []   # shared with the runner so failures can be cleaned up
    try:
        if config.kind == "static-rate":
            _run_static_rate(config.params, out_dir, produced)
        elif config.kind == "dyn-oracle-check":
            _run_oracle_check(config.params, out_dir, produced)
        elif config.kind == "eit-recon":
            _run_eit_recon(config.params, out_dir, produced)
        else:
            _run_bench(config.params, out_dir, produced)
    except Exception:
        for name in produced:
            path = os.path.join(out_dir, name)
            if os.path.exists(path):
                os.remove(path)
        raise
    artifacts.write_manifest(out_dir, config.params, produced)
    return produced


def _write(out_dir, name, text, produced):
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)
    produced.append(name)


def default_rate_instance(mu, n=256, sigma_min=1e-4):
    """Log-spaced diagonal spectrum with unit source coefficients."""
    sigmas = np.logspace(0.0, np.log10(sigma_min), n)
    return static.SourceConditionInstance(singular_values=sigmas,
                                          omega=np.ones(n), mu=mu)


def _run_static_rate(params, out_dir, produced):
    inst = default_rate_instance(params["mu"], n=params.get("n", 256),
                                 sigma_min=params.get("sigma_min", 1e-4))
    rows, slope = static.rate_study(inst, params["deltas"], params["seed"],
                                    c=params.get("c", 1.0))
    _write(out_dir, "rates.csv", static.rate_study_csv(rows, slope), produced)


def random_dynamic_problem(rng, n, m, N, alpha):
    F_list = [rng.standard_normal((m, n)) for _ in range(N)]
    y_list = [rng.standard_normal(m) for _ in range(N)]
    return dynamic.DynamicProblem(F_list=F_list, y_list=y_list, alpha=alpha,
                                  u0=rng.standard_normal(n))


def _run_oracle_check(params, out_dir, produced):
    trials = params.get("trials", 10)
    lines = ["trial,rel_error,interior_el_residual"]
    for t in range(trials):
        rng = np.random.default_rng([params["seed"], t])
        p = random_dynamic_problem(rng, params["n"], params["m"], params["N"],
                                   params["alpha"])
        dp = dynamic.dp_solve(p)
        oracle = dynamic.tikhonov_oracle(p)
        num = max(np.max(np.abs(a - b))
                  for a, b in zip(dp.u_list, oracle.u_list))
        den = 1.0 + max(np.max(np.abs(u)) for u in oracle.u_list)
        interior, _, scale = dynamic.euler_lagrange_residual(p, dp)
        lines.append(f"{t},{num / den:.17g},{interior / scale:.17g}")
    _write(out_dir, "oracle_check.csv", "\n".join(lines) + "\n", produced)


def _run_eit_recon(params, out_dir, produced):
    n_steps = params["n_steps"]
    disk = meshmod.build_disk_mesh(params["n_rings"])
    spec = eit.PhantomSpec(contrast=params.get("contrast", 1.0))
    alpha = params.get("alpha", default_eit_alpha(params["n_rings"]))
    problem, gammas, times = eit.simulate_data(
        disk, spec, params["mode"], n_steps, params["noise_pct"],
        params["seed"], alpha=alpha)
    frames, series = eit.reconstruct_series(disk, problem)
    vmax = max(float(np.max(np.abs(u))) for u in frames)
    for k, u in enumerate(frames):
        name = f"frame_{k:03d}.pgm"
        eitpath = os.path.join(out_dir, name)
        artifacts.write_field_pgm(disk, u, eitpath, vmax_abs=vmax)
        produced.append(name)
    lines = ["k,t,residual,data_norm"]
    for k in range(n_steps):
        lines.append(f"{k},{times[k]:.17g},{series.per_step_residuals[k]:.17g},"
                     f"{np.linalg.norm(problem.y_list[k]):.17g}")
    _write(out_dir, "residuals.csv", "\n".join(lines) + "\n", produced)
    _write(out_dir, "series.csv", dynamic.series_csv(series), produced)


def default_eit_alpha(n_rings):
    """Regularization weight tuned on the desk-scale two-circle phantom."""
    return 1e-4


@dataclass
class BenchReport:
    sizes: list
    median_times: list
    exponent: float
    reps: int
    batched: bool


def bench_scaling(n_list, n, m, seed, reps=3):
    """Median wall time of the DP sweeps against the number of time steps.

    If a single run is under 10 ms the measurement is batched (several
    sweeps per timing) to beat timer resolution; the report notes it.
    """
    n_list = list(n_list)
    if len(n_list) < 3 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("need >= 3 strictly increasing time lengths")
    rng = np.random.default_rng(seed)
    reps = max(3, reps)
    batched = False
    # single-threaded BLAS while timing: thread sync overhead on the small
    # per-step matrices otherwise dominates the variance
    with threadpool_limits(limits=1):
        return _bench_measure(rng, n_list, n, m, reps, batched)


def _bench_measure(rng, n_list, n, m, reps, batched):
    problems = []
    batches = []
    for n_T in n_list:
        p = random_dynamic_problem(rng, n, m, n_T, 1.0)
        dynamic.dp_solve(p)              # warmup: allocator and BLAS caches
        # calibrate a batch size so each timed measurement lasts >= 100 ms,
        # beating both timer resolution and scheduler jitter
        batch = 1
        while True:
            t0 = time.perf_counter()
            for _ in range(batch):
                dynamic.dp_solve(p)
            elapsed = time.perf_counter() - t0
            if elapsed >= 0.1 or batch >= 4096:
                break
            batch = max(batch * 2,
                        int(np.ceil(0.12 * batch / max(elapsed, 1e-9))))
            batched = True
        problems.append(p)
        batches.append(batch)
    # interleave the repetitions round-robin so slow machine-load drift
    # affects every size about equally instead of biasing the fit
    runs = [[] for _ in n_list]
    for _ in range(reps):
        for i, (p, batch) in enumerate(zip(problems, batches)):
            t0 = time.perf_counter()
            for _ in range(batch):
                dynamic.dp_solve(p)
            runs[i].append((time.perf_counter() - t0) / batch)
    medians = [float(np.median(r)) for r in runs]
    exponent = float(np.polyfit(np.log(n_list), np.log(medians), 1)[0])
    return BenchReport(sizes=n_list, median_times=medians, exponent=exponent,
                       reps=reps, batched=batched)


def bench_csv(report):
    lines = ["n_T,median_seconds"]
    for n_T, t in zip(report.sizes, report.median_times):
        lines.append(f"{n_T},{t:.9f}")
    lines.append(f"# exponent={report.exponent:.4f} reps={report.reps} "
                 f"batched={report.batched}")
    return "\n".join(lines) + "\n"


def _run_bench(params, out_dir, produced):
    report = bench_scaling(params["sizes"], params["n"], params["m"],
                           params["seed"], reps=params.get("reps", 3))
    _write(out_dir, "bench.csv", bench_csv(report), produced)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="dynareg")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a configured experiment")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_bench = sub.add_parser("bench", help="runtime scaling in the time length")
    p_bench.add_argument("--sizes", required=True,
                         help="comma-separated time lengths, e.g. 64,128,256")
    p_bench.add_argument("--n", type=int, required=True)
    p_bench.add_argument("--m", type=int, required=True)
    p_bench.add_argument("--seed", type=int, required=True)
    p_bench.add_argument("--reps", type=int, default=3)
    p_bench.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            config = RunConfig.from_file(args.config)
            run(config, args.out)
        else:
            sizes = [int(tok) for tok in args.sizes.split(",") if tok]
            report = bench_scaling(sizes, args.n, args.m, args.seed,
                                   reps=args.reps)
            text = bench_csv(report)
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                with open(os.path.join(args.out, "bench.csv"), "w") as fh:
                    fh.write(text)
            sys.stdout.write(text)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
