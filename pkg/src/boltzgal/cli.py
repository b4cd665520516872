"""Experiment runner: bkw / moments / bench / verify subcommands.

Flag precedence is CLI > --config file (JSON or key=value lines) > built-in
defaults. Every CSV gets a JSON manifest written next to it; reruns with the
same manifest and worker count are byte identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, bases, collision, dynamics, oracle
from .collision import SpectralDensity, evaluate_collision
from .dynamics import (ExperimentConfig, analytic_moments_maxwell, bkw_eval,
                       error_norms, format_float, initial_condition,
                       project_initial, read_trajectory_csv, rk4_integrate,
                       write_trajectory_csv)
from .kernel import build_kernel
from .specfun import gauss_hermite

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

WORKERS_ENV = "BOLTZGAL_WORKERS"


def _default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _load_config(path: str) -> dict:
    with open(path) as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        out = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
        return out


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit CLI flags."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        merged.update(_load_config(args.config))
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _write_manifest(out_path: str, command: str, cfg: dict, workers: int,
                    phases: dict, outputs: list[str]) -> None:
    manifest = {
        "command": command,
        "config": cfg,
        "version": __version__,
        "workers": workers,
        "wall_times": phases,
        "outputs": outputs,
    }
    path = os.path.splitext(out_path)[0] + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _run_experiment(command: str, cfg: dict, reference=None,
                    analytic=None) -> int:
    """Shared driver: project IC, integrate, write CSV + manifest."""
    N = int(cfg["N"])
    n_ip = int(cfg["nip"]) if cfg.get("nip") else N
    workers = int(cfg.get("workers") or _default_workers())
    out_path = cfg.get("out") or f"{command}_N{N}.csv"

    t_build0 = time.perf_counter()
    ts = bases.build_transform_set(N, cache_dir=cfg.get("cache_dir"))
    kern = build_kernel(cfg["kernel"], ts.maps)
    t_build = time.perf_counter() - t_build0

    exp = ExperimentConfig(kernel=cfg["kernel"], N=N, n_ip=n_ip,
                           dt=float(cfg["dt"]), t0=float(cfg["t0"]),
                           t_end=float(cfg["tend"]), initial=cfg["initial"])
    f_init, tbar, vbar = initial_condition(exp)
    f0 = project_initial(f_init, N, tbar, vbar)

    errors: list[tuple[float, ...]] = []

    def callback(t, f):
        if reference is not None:
            errors.append(error_norms(f, reference, t))

    t_run0 = time.perf_counter()
    traj, _ = rk4_integrate(f0, kern, ts, exp.dt, exp.t0, exp.t_end,
                            n_ip=n_ip, workers=workers, callback=callback)
    t_run = time.perf_counter() - t_run0

    extra_cols: tuple[str, ...] = ()
    extras = None
    if reference is not None:
        extra_cols = ("err_L2", "err_Linf")
        extras = errors
    write_trajectory_csv(out_path, traj, extra_cols, extras)

    n_colls = 4 * max(1, len(traj) - 1)
    phases = {"build_transforms_s": t_build, "integrate_s": t_run,
              "per_collision_s": t_run / n_colls,
              "total_s": t_build + t_run}
    _write_manifest(out_path, command, cfg, workers, phases, [out_path])

    if reference is not None:
        e = np.asarray(errors)
        print(f"max_t err_L2   = {format_float(float(e[:, 0].max()))}")
        print(f"max_t err_Linf = {format_float(float(e[:, 1].max()))}")
    if analytic is not None:
        dev = analytic(traj)
        print(f"max_t |moments - analytic| = {format_float(dev)}")
    drift = _conservation_drift(traj)
    print(f"conservation drift (rho, V, E) = "
          f"{', '.join(format_float(d) for d in drift)}")
    print(f"wrote {out_path}")
    return EXIT_OK


def _conservation_drift(traj) -> tuple[float, float, float]:
    m0 = traj[0]
    rho = max(abs(m.rho - m0.rho) for m in traj) / abs(m0.rho)
    vref = max(1.0, float(np.max(np.abs(m0.V))))
    v = max(float(np.max(np.abs(m.V - m0.V))) for m in traj) / vref
    e = max(abs(m.E - m0.E) for m in traj) / abs(m0.E)
    return rho, v, e


def _maxwell_deviation(traj) -> float:
    worst = 0.0
    for m in traj:
        a = analytic_moments_maxwell(m.t)
        worst = max(
            worst,
            abs(m.P[0, 0] - a.P[0, 0]), abs(m.P[1, 1] - a.P[1, 1]),
            abs(m.P[2, 2] - a.P[2, 2]), abs(m.P[0, 1] - a.P[0, 1]),
            abs(m.q[0] - a.q[0]), abs(m.q[1] - a.q[1]))
    return worst


# ------------------------------------------------------------------ commands

def cmd_bkw(args) -> int:
    defaults = dict(N=8, nip=None, dt=0.1, t0=5.5, tend=8.5,
                    kernel="maxwell", out=None, workers=None,
                    cache_dir=None, initial="bkw")
    cfg = _resolve(args, defaults)
    if int(cfg["N"]) < 2:
        print("error: N must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    return _run_experiment("bkw", cfg, reference=bkw_eval)


def cmd_moments(args) -> int:
    defaults = dict(N=8, nip=None, dt=None, t0=0.0, tend=12.0,
                    kernel="maxwell", out=None, workers=None,
                    cache_dir=None, initial="two_maxwellians",
                    reference=None)
    cfg = _resolve(args, defaults)
    if int(cfg["N"]) < 2:
        print("error: N must be at least 2", file=sys.stderr)
        return EXIT_USAGE
    kern_name = str(cfg["kernel"]).split(":")[0]
    if kern_name not in ("maxwell", "hardsphere", "angular", "vhs"):
        print(f"error: unknown kernel {cfg['kernel']!r}", file=sys.stderr)
        return EXIT_USAGE
    if cfg["dt"] is None:
        cfg["dt"] = 0.1 if kern_name == "maxwell" else 0.01
    analytic = _maxwell_deviation if kern_name == "maxwell" else None
    code = _run_experiment("moments", cfg, analytic=analytic)
    if code == EXIT_OK and cfg.get("reference"):
        _report_reference_errors(cfg)
    return code


def _report_reference_errors(cfg) -> None:
    out_path = cfg.get("out") or f"moments_N{cfg['N']}.csv"
    header, run = read_trajectory_csv(out_path)
    _, ref = read_trajectory_csv(cfg["reference"])
    cols = [header.index(k) for k in
            ("P11", "P22", "P33", "P12", "q1", "q2")]
    worst = 0.0
    ref_t = ref[:, 0]
    for row in run:
        i = int(np.argmin(np.abs(ref_t - row[0])))
        if abs(ref_t[i] - row[0]) > 1e-9:
            continue
        for c in cols:
            worst = max(worst, abs(row[c] - ref[i, c]))
    print(f"max_t |moments - reference| = {format_float(worst)}")


def cmd_bench(args) -> int:
    n_list = [int(x) for x in (args.N_list or "8,16,24").split(",")]
    thread_list = [int(x) for x in (args.threads_list or "1").split(",")]
    n_ip = args.nip
    results = []
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        threadpool_limits = None
    print("N,threads,seconds")
    for N in n_list:
        ts = bases.build_transform_set(N, cache_dir=args.cache_dir)
        kern = build_kernel(args.kernel or "maxwell", ts.maps)
        rng = np.random.default_rng(args.seed or 0)
        c = 1.0 + 0.1 * rng.standard_normal((N + 1) ** 3)
        f = SpectralDensity(N, 2.0, np.zeros(3), c)
        nip = int(n_ip) if n_ip else N
        base_time = None
        for workers in thread_list:
            evaluate_collision(f, kern, ts, n_ip=min(2, nip), workers=workers)
            t0 = time.perf_counter()
            if threadpool_limits is not None:
                with threadpool_limits(limits=1):
                    evaluate_collision(f, kern, ts, n_ip=nip, workers=workers)
            else:
                evaluate_collision(f, kern, ts, n_ip=nip, workers=workers)
            dt = time.perf_counter() - t0
            if workers == thread_list[0]:
                base_time = dt
            speed = f" (speedup {base_time / dt:.2f})" if workers != thread_list[0] else ""
            print(f"{N},{workers},{dt:.4f}{speed}")
            results.append((N, workers, dt))
    singles = [(N, dt) for N, w, dt in results if w == thread_list[0]]
    if len(singles) >= 2:
        lx = np.log([n for n, _ in singles])
        ly = np.log([t for _, t in singles])
        slope = float(np.polyfit(lx, ly, 1)[0])
        print(f"fitted log-log slope: {slope:.3f}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("N,threads,seconds\n")
            for N, w, dt in results:
                fh.write(f"{N},{w},{format_float(dt)}\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify
    seed = args.seed if args.seed is not None else 0
    ok = verify.run_suite(kernel=args.kernel or "maxwell", seed=seed,
                          cache_dir=args.cache_dir)
    return EXIT_OK if ok else EXIT_NUMERICAL


# --------------------------------------------------------------------- parser

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--nip", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--tend", type=float, default=None)
    p.add_argument("--kernel", type=str, default=None)
    p.add_argument("--threads", dest="workers", type=int, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--cache-dir", dest="cache_dir", type=str, default=None)
    p.add_argument("--config", type=str, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="boltzgal",
        description="Spectral Petrov-Galerkin Boltzmann collision solver")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bkw", help="relaxation benchmark vs the exact solution")
    _add_common(p)
    p.set_defaults(func=cmd_bkw)

    p = sub.add_parser("moments", help="two-Maxwellian moment evolution")
    _add_common(p)
    p.add_argument("--reference", type=str, default=None,
                   help="CSV trajectory to compare against")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("bench", help="collision application timing study")
    p.add_argument("--N-list", type=str, default="8,16,24")
    p.add_argument("--threads-list", type=str, default="1")
    p.add_argument("--nip", type=int, default=None)
    p.add_argument("--kernel", type=str, default="maxwell")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--cache-dir", dest="cache_dir", type=str, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="oracle, conservation, transform checks")
    p.add_argument("--kernel", type=str, default="maxwell")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache-dir", dest="cache_dir", type=str, default=None)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, RuntimeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
