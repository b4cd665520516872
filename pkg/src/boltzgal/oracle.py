"""Brute-force reference for the collision bilinear form at tiny N.

Evaluates q_{n,m,j} = int int int B e^{-|v|^2-|w|^2} L_n(v) L_m(w)
[L_j(v') - L_j(v)] de' dw dv directly: tensor Gauss-Hermite in (v, w)
(absorbing the two trial Maxwellians) and a Gauss-Legendre x trapezoid
product rule on the collision sphere. Nothing is shared with the fast
pipeline except the Lagrange basis itself.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass

import numpy as np

from .kernel import CollisionKernel
from .specfun import gauss_hermite, gauss_legendre, lagrange_matrix_at

_ORACLE_N_MAX = 4


@dataclass
class OracleTensor:
    """Dense q_{n,m,j} tensor for the centred unit-temperature frame."""

    N: int
    beta: float
    tag: str
    q_tensor: np.ndarray          # (ndof, ndof, ndof)
    quad_order: int
    sphere_order: int
    achieved_tol: float           # refinement estimate (abs, on q entries)

    @property
    def ndof(self) -> int:
        return (self.N + 1) ** 3


def sphere_rule(sphere_order: int) -> tuple[np.ndarray, np.ndarray]:
    """Product rule on S^2: Gauss-Legendre in cos(theta) with sphere_order
    points, uniform (periodic trapezoid) in phi with 2*sphere_order points.
    Returns (directions (n,3), weights summing to 4 pi)."""
    gl = gauss_legendre(sphere_order)
    nphi = 2 * sphere_order
    phi = 2.0 * math.pi * np.arange(nphi) / nphi
    mu = gl.nodes[:, None] * np.ones((1, nphi))
    s = np.sqrt(1.0 - mu * mu)
    dirs = np.stack([s * np.cos(phi)[None, :], s * np.sin(phi)[None, :],
                     mu * np.ones_like(phi)[None, :]], axis=-1).reshape(-1, 3)
    w = (gl.weights[:, None] * np.full((1, nphi), 2.0 * math.pi / nphi))
    return dirs, w.reshape(-1)


def _assemble(N: int, kern: CollisionKernel, quad_order: int,
              sphere_order: int) -> np.ndarray:
    ndof = (N + 1) ** 3
    n1 = N + 1
    rule = gauss_hermite(quad_order)
    pts1 = rule.nodes
    A1 = lagrange_matrix_at(N + 1, pts1)            # (N+1, Q)

    # all 3D quadrature points and the trial-basis values on them
    Q = quad_order
    idx = np.arange(Q)
    I, J, K = np.meshgrid(idx, idx, idx, indexing="ij")
    pts3 = np.stack([pts1[I], pts1[J], pts1[K]], axis=-1).reshape(-1, 3)
    w3 = (rule.weights[I] * rule.weights[J] * rule.weights[K]).reshape(-1)
    nq = Q ** 3
    L3 = _tensor_values(A1[:, I.reshape(-1)], A1[:, J.reshape(-1)],
                        A1[:, K.reshape(-1)])

    dirs, wsph = sphere_rule(sphere_order)
    nsph = len(wsph)
    lam0 = float(kern.lam[0])
    tst = np.linspace(-0.97, 0.97, 13)
    bt_even = bool(np.allclose(kern.b_theta(tst), kern.b_theta(-tst)))

    # unordered pairs: the geometry is shared between (v,w) and (w,v)
    iu, ju = np.triu_indices(nq)
    npairs = len(iu)
    pair_chunk = max(256, int(16e6 / (ndof * ndof * 8)))
    q = np.zeros((ndof * ndof, ndof))
    for start in range(0, npairs, pair_chunk):
        stop = min(npairs, start + pair_chunk)
        ia, ib = iu[start:stop], ju[start:stop]
        nb = stop - start
        v = pts3[ia]
        w = pts3[ib]
        vbar = 0.5 * (v + w)
        vhat = 0.5 * (v - w)
        r = np.sqrt(np.sum(vhat * vhat, axis=1))
        br = (2.0 * r) ** kern.beta if kern.beta != 0.0 else np.ones_like(r)
        safe_r = np.where(r > 0, r, 1.0)
        ehat = vhat / safe_r[:, None]
        ehat[r == 0] = np.array([0.0, 0.0, 1.0])

        # test transform a_j = int btheta(ehat.e') L_j(vbar + e' r) de',
        # contracted per pair as a batched (n1^2 x nsph) @ (nsph x n1) product
        mu = ehat @ dirs.T                              # (nb, nsph)
        bw = np.asarray(kern.b_theta(mu), dtype=float)
        bw = np.broadcast_to(bw, mu.shape) * wsph[None, :]
        vp = vbar[:, None, :] + r[:, None, None] * dirs[None, :, :]
        Pa = lagrange_matrix_at(n1, vp[..., 0].reshape(-1))
        Pb = lagrange_matrix_at(n1, vp[..., 1].reshape(-1))
        Pc = lagrange_matrix_at(n1, vp[..., 2].reshape(-1))
        Pa = np.moveaxis(Pa.reshape(n1, nb, nsph), 0, 1)
        Pb = np.moveaxis(Pb.reshape(n1, nb, nsph), 0, 1)
        Pc = np.moveaxis(Pc.reshape(n1, nb, nsph), 0, 1)  # (nb, n1, nsph)
        AB = Pa[:, :, None, :] * Pb[:, None, :, :]
        AB = AB.reshape(nb, n1 * n1, nsph)
        a_j = np.matmul(AB, np.swapaxes(Pc * bw[:, None, :], 1, 2))
        a_j = a_j.reshape(nb, ndof)

        if bt_even:
            a_sym = a_j
        else:
            # the swapped ordering sees the deflection cosine negated
            bw2 = np.asarray(kern.b_theta(-mu), dtype=float)
            bw2 = np.broadcast_to(bw2, mu.shape) * wsph[None, :]
            a_sw = np.matmul(AB, np.swapaxes(Pc * bw2[:, None, :], 1, 2))
            a_sym = 0.5 * (a_j + a_sw.reshape(nb, ndof))

        ww = w3[ia] * w3[ib] * br
        Lv, Lw = L3[:, ia], L3[:, ib]
        # (v,w)-symmetrized test bracket: same contraction values, but the
        # integrand kink at v = w weakens by one order, so the hard-sphere
        # quadrature converges visibly faster
        Y = a_sym - 0.5 * lam0 * (Lv + Lw).T
        X = (Lv * ww[None, :])[:, None, :] * Lw[None, :, :]
        q += X.reshape(ndof * ndof, nb) @ Y
        off = ia != ib
        if np.any(off):
            Xs = (Lw[:, off] * ww[None, off])[:, None, :] * Lv[None, :, off]
            q += Xs.reshape(ndof * ndof, int(off.sum())) @ Y[off]
    return q.reshape(ndof, ndof, ndof)


def _tensor_values(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Row-wise tensor product values: out[(i,j,k), p] = a[i,p] b[j,p] c[k,p]."""
    n1, p = a.shape
    ab = (a[:, None, :] * b[None, :, :]).reshape(n1 * n1, p)
    return (ab[:, None, :] * c[None, :, :]).reshape(n1 ** 3, p)


def _eval_basis(N: int, pts: np.ndarray) -> np.ndarray:
    """All (N+1)^3 tensor Lagrange values at arbitrary 3D points."""
    a = lagrange_matrix_at(N + 1, pts[:, 0])
    b = lagrange_matrix_at(N + 1, pts[:, 1])
    c = lagrange_matrix_at(N + 1, pts[:, 2])
    return _tensor_values(a, b, c)


def build_oracle(N: int, kern: CollisionKernel, quad_order: int | None = None,
                 sphere_order: int | None = None, refine_tol: float = 1e-7,
                 max_quad_order: int = 20, verbose: bool = False) -> OracleTensor:
    """Assemble the reference tensor, refining the (v, w) quadrature until
    successive refinements agree (relevant for the hard-sphere |v-w| factor,
    which is only piecewise smooth; the achieved tolerance is reported)."""
    if N > _ORACLE_N_MAX:
        raise ValueError(f"oracle is limited to N <= {_ORACLE_N_MAX}")
    q0 = 2 * N + 4 if quad_order is None else quad_order
    if sphere_order is None:
        sphere_order = max(2, (3 * N + 2) // 2 + 1)

    q_prev = _assemble(N, kern, q0, sphere_order)
    achieved = math.inf
    order = q0
    if kern.beta == 0.0:
        # integrand is polynomial x Gaussian: the base order is already exact
        achieved = 0.0
    else:
        while order + 2 <= max_quad_order:
            order += 2
            q_next = _assemble(N, kern, order, sphere_order)
            achieved = float(np.max(np.abs(q_next - q_prev)))
            q_prev = q_next
            if verbose:
                print(f"  oracle refinement quad_order={order}: "
                      f"delta={achieved:.3e}")
            if achieved < refine_tol:
                break
    return OracleTensor(N=N, beta=kern.beta, tag=kern.tag, q_tensor=q_prev,
                        quad_order=order, sphere_order=sphere_order,
                        achieved_tol=achieved)


def oracle_apply(tensor: OracleTensor, c: np.ndarray,
                 tbar: float = 1.0) -> np.ndarray:
    """Double contraction sum_{n,m} c_n c_m q_{n,m,j}, rescaled to trial
    temperature tbar so it is directly comparable to evaluate_collision."""
    c = np.asarray(c, dtype=float).reshape(-1)
    if c.shape[0] != tensor.ndof:
        raise ValueError("coefficient length does not match the oracle")
    out = np.einsum("n,m,nmj->j", c, c, tensor.q_tensor, optimize=True)
    return tbar ** (3.0 + 0.5 * tensor.beta) * out


# ------------------------------------------------------------------ cache

_MAGIC = b"BGOR"
_VERSION = 2


def save_oracle(path: str, tensor: OracleTensor) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<II", _VERSION, tensor.N))
        f.write(struct.pack("<dII d", tensor.beta, tensor.quad_order,
                            tensor.sphere_order, tensor.achieved_tol))
        tag = tensor.tag.encode()
        f.write(struct.pack("<I", len(tag)))
        f.write(tag)
        a = np.ascontiguousarray(tensor.q_tensor, dtype=np.float64)
        f.write(struct.pack("<QQQ", *a.shape))
        f.write(a.tobytes())


def load_oracle(path: str) -> OracleTensor | None:
    if not os.path.exists(path):
        return None
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            return None
        ver, N = struct.unpack("<II", f.read(8))
        if ver != _VERSION:
            return None
        beta, qo, so, tol = struct.unpack("<dII d", f.read(24))
        (tlen,) = struct.unpack("<I", f.read(4))
        tag = f.read(tlen).decode()
        shape = struct.unpack("<QQQ", f.read(24))
        data = np.frombuffer(f.read(8 * shape[0] * shape[1] * shape[2]),
                             dtype=np.float64).reshape(shape).copy()
    return OracleTensor(N=N, beta=beta, tag=tag, q_tensor=data,
                        quad_order=qo, sphere_order=so, achieved_tol=tol)
