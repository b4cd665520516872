"""Self-check suite behind the `verify` subcommand: prints one pass/fail line
per invariant and reports overall success."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import bases, collision, oracle
from .collision import (SpectralDensity, evaluate_collision,
                        exact_mode_params)
from .kernel import build_kernel, build_radial_mult
from .specfun import gauss_hermite


def _check(name: str, ok: bool, detail: str = "") -> bool:
    tag = "PASS" if ok else "FAIL"
    extra = f"  ({detail})" if detail else ""
    print(f"[{tag}] {name}{extra}")
    return ok


def _tested_moment_residuals(q: np.ndarray, N: int) -> tuple[float, float, float]:
    rule = gauss_hermite(N + 1)
    pts, _ = rule.tensor3()
    scale = np.sum(np.abs(q)) + 1e-300
    mass = abs(np.sum(q)) / scale
    mom = float(np.max(np.abs(pts.T @ q))) / scale
    en = abs(float(np.sum(pts * pts, axis=1) @ q)) / scale
    return mass, mom, en


def run_suite(kernel: str = "maxwell", seed: int = 0,
              cache_dir: str | None = None) -> bool:
    rng = np.random.default_rng(seed)
    ok = True

    # transform invariants at a mid-size N
    N = 8
    ts = bases.build_transform_set(N, cache_dir=cache_dir)
    d = ts.hier_dim
    eye_ht = (ts.csr_HT @ ts.csr_HT_t).toarray() - np.eye(d)
    eye_tp = (ts.csr_TP @ ts.csr_TP_t).toarray() - np.eye(d)
    ok &= _check("hermite->cylinder orthogonality",
                 np.max(np.abs(eye_ht)) < 1e-11,
                 f"max dev {np.max(np.abs(eye_ht)):.2e}")
    ok &= _check("cylinder->spherical orthogonality",
                 np.max(np.abs(eye_tp)) < 1e-11,
                 f"max dev {np.max(np.abs(eye_tp)):.2e}")
    h = rng.standard_normal(d)
    rt = bases.cylinder_to_hermite(ts, bases.hermite_to_cylinder(ts, h))
    ok &= _check("hierarchical round trip",
                 np.max(np.abs(rt - h)) < 1e-11 * max(1, np.max(np.abs(h))))
    ph = bases.cylinder_to_spherical(ts, bases.hermite_to_cylinder(ts, h))
    ok &= _check("full chain isometry",
                 abs(np.linalg.norm(ph) - np.linalg.norm(h)) < 1e-11
                 * np.linalg.norm(h))

    # conservation for seeded random densities
    kern = build_kernel(kernel, ts.maps)
    worst = 0.0
    for _ in range(5):
        c = 1.0 + 0.3 * rng.standard_normal((N + 1) ** 3)
        f = SpectralDensity(N, 2.0, np.zeros(3), c)
        q = evaluate_collision(f, kern, ts, n_ip=N)
        worst = max(worst, *_tested_moment_residuals(q, N))
    ok &= _check(f"conservation of mass/momentum/energy ({kernel})",
                 worst < 1e-10, f"worst residual {worst:.2e}")

    # radial stage checks
    if kern.beta > 0:
        for l, blk in kern.radial_blocks.items():
            if np.max(np.abs(blk - blk.T)) > 1e-12:
                ok &= _check("radial matrices symmetric", False,
                             f"l={l}")
                break
        else:
            ok &= _check("radial matrices symmetric", True)
    csr0, _ = build_radial_mult(0.0, ts.maps)
    dev = abs(csr0 - sp.eye(d)).max()
    ok &= _check("radial stage is identity at beta=0", dev < 1e-13,
                 f"max dev {dev:.2e}")

    # oracle comparison at N=2 (and N=3 for hard spheres)
    configs = [(2, "maxwell", 1e-8)]
    if kernel == "hardsphere":
        configs.append((3, "hardsphere", 1e-6))
    for No, kspec, tol in configs:
        M, G, n_ip = exact_mode_params(No)
        ts_x = bases.build_transform_set(No, trunc_degree=M, fine_order=G)
        kern_x = build_kernel(kspec, ts_x.maps)
        # verify-grade oracle: moderate refinement budget
        tensor = oracle.build_oracle(No, kern_x, refine_tol=tol,
                                     max_quad_order=2 * No + 8)
        rel = 0.0
        for _ in range(3):
            c = 1.0 + 0.2 * rng.standard_normal((No + 1) ** 3)
            f = SpectralDensity(No, 1.0, np.zeros(3), c)
            q_fast = evaluate_collision(f, kern_x, ts_x, n_ip=n_ip)
            q_ref = oracle.oracle_apply(tensor, c, tbar=1.0)
            rel = max(rel, np.max(np.abs(q_fast - q_ref))
                      / max(np.max(np.abs(q_ref)), 1e-300))
        bound = max(tol * 50, tensor.achieved_tol * 10 + 1e-9)
        ok &= _check(f"oracle agreement N={No} ({kspec})", rel < bound,
                     f"rel dev {rel:.2e}")
    return bool(ok)
