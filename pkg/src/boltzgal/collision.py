"""Evaluation of the tested collision operator for a spectral density.

The outer mean-velocity integral runs over a tensor Gauss-Hermite rule; for
each node the quadratic product is formed on the fine grid, pushed through
the basis chain to the Spherical Laguerre frame where the inner operator is
diagonal, multiplied by the radial law, and pulled back through the
transposed chain onto the Lagrange test functions. Work per node is O(N^4),
storage O(N^4), the node loop gives O(N^7) total.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bases
from .bases import TransformSet
from .kernel import CollisionKernel
from .specfun import gauss_hermite, lagrange_matrix_at

_WORKSPACE_BUDGET = 48_000_000  # bytes of fine-grid batch scratch per worker


@dataclass
class SpectralDensity:
    """Nodal representation f(v) = e^{-|vt|^2} sum_j c_j L_j(vt) with
    vt = (v - Vbar)/sqrt(Tbar)."""

    N: int
    Tbar: float
    Vbar: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.Vbar = np.asarray(self.Vbar, dtype=float).reshape(3)
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        if self.c.shape[0] != (self.N + 1) ** 3:
            raise ValueError("coefficient vector has wrong length")
        if self.Tbar <= 0:
            raise ValueError("Tbar must be positive")

    def copy(self) -> "SpectralDensity":
        return SpectralDensity(self.N, self.Tbar, self.Vbar.copy(),
                               self.c.copy())


def compute_f2(shifted: np.ndarray) -> np.ndarray:
    """Quadratic product values e_j = p(vbar+mu_j) p(vbar-mu_j); the node set
    is symmetric, so the reflected factor is the flat reversal."""
    return shifted * shifted[::-1] if shifted.ndim == 1 \
        else shifted * shifted[::-1, :]


def apply_inner_operator(phi: np.ndarray, d_table: np.ndarray) -> np.ndarray:
    """Diagonal inner collision operator on Spherical Laguerre coefficients."""
    if phi.shape[0] != d_table.shape[0]:
        raise ValueError("coefficient/d-table length mismatch")
    return phi * d_table if phi.ndim == 1 else phi * d_table[:, None]


@dataclass
class CollisionWorkspace:
    """Per-worker scratch for a stretch of outer nodes (fixed first axis)."""

    n_ip: int
    chunk: int
    S_stack: np.ndarray = field(repr=False)    # (n_ip*G, N+1) stacked shifts
    Sw_stack: np.ndarray = field(repr=False)   # (G, n_ip, N+1) weighted
    q_partial: np.ndarray = field(repr=False)

    def storage_bytes(self) -> int:
        return self.S_stack.nbytes + self.Sw_stack.nbytes + self.q_partial.nbytes


def _chunk_size(G: int, n_ip: int) -> int:
    per_col = G ** 3 * 8 * 6
    return max(1, min(n_ip, _WORKSPACE_BUDGET // per_col))


def _pipeline(ts: TransformSet, kern: CollisionKernel,
              E: np.ndarray) -> np.ndarray:
    """Fine-grid product values -> tested fine-grid values (batched)."""
    h = bases.nodal_to_hermite(ts, E)
    th = ts.csr_HT @ h
    ph = ts.csr_TP @ th
    if kern.radial_csr is not None:
        ph = kern.radial_csr @ ph
    ph = apply_inner_operator(ph, kern.d_table)
    th = ts.csr_TP_t @ ph
    h = ts.csr_HT_t @ th
    return bases.nodal_to_hermite_t(ts, h)


def evaluate_collision(f: SpectralDensity, kern: CollisionKernel,
                       ts: TransformSet, n_ip: int | None = None,
                       workers: int = 1) -> np.ndarray:
    """Tested collision integrals q_n = int Q(f) L_n((v-Vbar)/sqrt(Tbar)) dv
    for all (N+1)^3 Lagrange test functions.

    n_ip is the number of outer Gauss-Hermite points per axis (default N).
    The result carries every global constant: the mean/relative substitution,
    the 2^{beta/2} radial argument factor and the Tbar^{3+beta/2} rescaling.
    """
    if f.N != ts.N:
        raise ValueError("density and transform set disagree on N")
    if kern.d_table.shape[0] != ts.hier_dim:
        raise ValueError("kernel was built for a different truncation degree")
    if not np.all(np.isfinite(f.c)):
        raise ValueError("density coefficients contain non-finite values")
    n_ip = ts.N if n_ip is None else int(n_ip)
    if n_ip < 1:
        raise ValueError("n_ip must be at least 1")

    N1 = ts.N + 1
    G = ts.fine_order
    outer = gauss_hermite(n_ip)
    sqrt2 = math.sqrt(2.0)
    # 1D shift matrices for every outer node component (shared across axes)
    S_list = [bases.build_shift_1d(ts.N, v / sqrt2, G) for v in outer.nodes]
    S_stack = np.concatenate(S_list, axis=0)                 # (n_ip*G, N1)
    Sw = np.stack(S_list, axis=1)                            # (G, n_ip, N1)
    Sw = Sw * outer.weights[None, :, None]
    chunk = _chunk_size(G, n_ip)
    ws = CollisionWorkspace(n_ip=n_ip, chunk=chunk, S_stack=S_stack,
                            Sw_stack=Sw, q_partial=np.zeros((N1, N1, N1)))

    c3 = f.c.reshape(N1, N1, N1)

    def do_axis_a(a: int) -> np.ndarray:
        Xa = np.tensordot(S_list[a], c3, axes=(1, 0))        # (G, n2, n3)
        Ya = np.zeros((G, N1, N1))                           # (G1, n3, n2)
        for b in range(n_ip):
            Xab = np.tensordot(S_list[b], Xa, axes=(1, 1))   # (G2, G1, n3)
            Xab = np.moveaxis(Xab, 0, 1)                     # (G1, G2, n3)
            Zab = np.zeros((G * G, N1))
            flat = Xab.reshape(G * G, N1)
            for c0 in range(0, n_ip, chunk):
                c1 = min(n_ip, c0 + chunk)
                nb = c1 - c0
                Sc = S_stack.reshape(n_ip, G, N1)[c0:c1]     # (nb, G, N1)
                Sc2 = Sc.reshape(nb * G, N1)
                shifted = flat @ Sc2.T                       # (G^2, nb*G)
                shifted = shifted.reshape(G, G, nb, G)
                shifted = np.moveaxis(shifted, 2, 3)         # (G1,G2,G3,nb)
                S = shifted.reshape(G ** 3, nb)
                E = compute_f2(S)
                out = _pipeline(ts, kern, E)                 # (G^3, nb)
                ncb = out.reshape(G, G, G * nb)
                Swc = Sw[:, c0:c1, :].reshape(G * nb, N1)
                Zab += ncb.reshape(G * G, G * nb) @ Swc
            Zab3 = Zab.reshape(G, G, N1)
            Ya += outer.weights[b] * np.tensordot(Zab3, S_list[b],
                                                  axes=(1, 0))
        qa = np.tensordot(Ya, S_list[a], axes=(0, 0))        # (n3, n2, n1)
        return outer.weights[a] * qa.transpose(2, 1, 0)

    if workers <= 1:
        for a in range(n_ip):
            ws.q_partial += do_axis_a(a)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(do_axis_a, range(n_ip)))
        for part in parts:                 # fixed order: bitwise stable
            ws.q_partial += part

    scale = kern.radial_scale * kern.tbar_prefactor(f.Tbar)
    q = scale * ws.q_partial.reshape(-1)
    if not np.all(np.isfinite(q)):
        raise FloatingPointError("collision evaluation produced non-finite values")
    return q


def galerkin_rhs(q: np.ndarray, ts: TransformSet, Tbar: float) -> np.ndarray:
    """Diagonal mass solve: dc_n/dt = q_n / (w_n^(3) Tbar^{3/2})."""
    w = ts.own_rule.weights
    w3 = (w[:, None, None] * w[None, :, None] * w[None, None, :]).reshape(-1)
    return q / (w3 * Tbar ** 1.5)


def exact_mode_params(N: int) -> tuple[int, int, int]:
    """(trunc_degree, fine_order, n_ip) at which the discrete pipeline equals
    the untruncated weak form: every quadrature is exact for the polynomial
    integrands. Intended for small-N validation against the brute oracle."""
    M = 6 * N
    G = max(2 * N + 1, (M + 2 * N + 2) // 2)
    n_ip = (3 * N + 2) // 2 + 1
    return M, G, n_ip


def storage_report(N: int, n_ip: int | None = None,
                   kernel_spec: str = "hardsphere",
                   ts: TransformSet | None = None) -> dict:
    """Byte counts of transforms + kernel + shift/workspace scratch for one
    collision application at the given sizes."""
    from .kernel import build_kernel
    if ts is None:
        ts = bases.build_transform_set(N)
    n_ip = N if n_ip is None else n_ip
    kern = build_kernel(kernel_spec, ts.maps)
    G = ts.fine_order
    N1 = N + 1
    chunk = _chunk_size(G, n_ip)
    shift_bytes = n_ip * G * N1 * 8 * 2
    workspace = 6 * chunk * G ** 3 * 8 + 6 * chunk * ts.hier_dim * 8
    state = N1 ** 3 * 8 * 2
    report = {
        "N": N,
        "n_ip": n_ip,
        "chunk": chunk,
        "transform_bytes": ts.storage_bytes(),
        "kernel_bytes": kern.storage_bytes(),
        "shift_bytes": shift_bytes,
        "workspace_bytes": workspace + state,
    }
    report["total_bytes"] = (report["transform_bytes"] + report["kernel_bytes"]
                             + report["shift_bytes"] + report["workspace_bytes"])
    return report
