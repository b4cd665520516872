"""Index sets and transform matrices between the four polynomial bases.

The chain runs nodal Lagrange (on the fine Gauss-Hermite grid) -> total-degree
Hermite -> Cylinder Hermite -> Spherical Laguerre. Both hierarchical maps are
changes between orthonormal bases under the weight e^{-|v|^2}, stored as the
dense blocks the degree/order selection rules produce plus one global sparse
matrix each for application. Shift matrices re-expand a trial polynomial
around a mean velocity on the fine grid.
"""

from __future__ import annotations

import io
import math
import os
import struct
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import specfun
from .specfun import (eval_assoc_laguerre_all, eval_hermite_all,
                      gauss_hermite, gauss_laguerre, gauss_legendre,
                      norm_assoc_legendre_all)

COS, SIN = 0, 1


def hier_dim(N: int) -> int:
    """Number of 3D polynomials of total degree <= N."""
    return (N + 1) * (N + 2) * (N + 3) // 6


def angular_index(i: int, j: int) -> int:
    """Azimuthal order I(i,j) = 2j + (i mod 2) of the polar basis."""
    return 2 * j + (i % 2)


def angular_degree(i: int, k: int) -> int:
    """Spherical-harmonic degree K(i,k) = 2i + (k mod 2) of mode (k,i)."""
    return 2 * i + (k % 2)


@dataclass
class BasisIndexMaps:
    """Flat enumerations of the hierarchical bases for max total degree N.

    Hermite modes are grouped by (degree k', planar degree i' = i+j), cylinder
    modes by (k', i'), spherical modes by (k', order j', trig t); the grouping
    makes every transform block act on contiguous or gather-indexed slices.
    """

    N: int
    hermite_ijk: np.ndarray = field(repr=False)     # (dim, 3) int
    cylinder_kijt: np.ndarray = field(repr=False)   # (dim, 4) int
    spherical_kljt: np.ndarray = field(repr=False)  # (dim, 4) int: k, l, j, t
    sph_l: np.ndarray = field(repr=False)           # (dim,) angular degree l

    def __init__(self, N: int):
        self.N = N
        herm = []
        cyl = []
        for kp in range(N + 1):
            for ip in range(kp + 1):
                for i in range(ip + 1):
                    herm.append((i, ip - i, kp - ip))
                for j in range(ip // 2 + 1):
                    cyl.append((kp, ip, j, COS))
                for j in range(ip // 2 + 1):
                    if angular_index(ip, j) != 0:
                        cyl.append((kp, ip, j, SIN))
        sph = []
        for kp in range(N + 1):
            for jp in range(kp + 1):
                lmin = jp if (jp % 2) == (kp % 2) else jp + 1
                for t in (COS, SIN):
                    if t == SIN and jp == 0:
                        continue
                    for l in range(lmin, kp + 1, 2):
                        sph.append((kp, l, jp, t))
        self.hermite_ijk = np.asarray(herm, dtype=np.int64)
        self.cylinder_kijt = np.asarray(cyl, dtype=np.int64)
        self.spherical_kljt = np.asarray(sph, dtype=np.int64)
        self.sph_l = self.spherical_kljt[:, 1].copy()
        d = hier_dim(N)
        assert len(herm) == d and len(cyl) == d and len(sph) == d

    @property
    def dim(self) -> int:
        return hier_dim(self.N)


def _polar_gamma(I: int) -> float:
    # orthonormality of the polar basis fixes these (see ledger: the printed
    # values in the source derivation are inconsistent with its own lemma)
    return math.sqrt(1.0 / math.pi) if I == 0 else math.sqrt(2.0 / math.pi)


def _htheta_block(ip: int, quad_n: int) -> np.ndarray:
    """Dense (ip+1)x(ip+1) block of <h_i h_{ip-i}, Psi^t_{ip,j}> over R^2.

    Rows follow the cylinder enumeration for planar degree ip (cos group then
    sin group), columns run i = 0..ip. Independent of the axial degree.
    """
    rule = gauss_hermite(quad_n)
    v1 = rule.nodes[:, None] * np.ones((1, quad_n))
    v2 = np.ones((quad_n, 1)) * rule.nodes[None, :]
    w2 = rule.weights[:, None] * rule.weights[None, :]
    r2 = v1 * v1 + v2 * v2
    phi = np.arctan2(v2, v1)
    h = eval_hermite_all(ip, rule.nodes)

    rows = []
    for t in (COS, SIN):
        for j in range(ip // 2 + 1):
            I = angular_index(ip, j)
            if t == SIN and I == 0:
                continue
            lag = eval_assoc_laguerre_all((ip - I) // 2, float(I), r2)[-1]
            ang = np.cos(I * phi) if t == COS else np.sin(I * phi)
            psi = _polar_gamma(I) * ang * r2 ** (I / 2.0) * lag
            rows.append((t, j, psi))
    # reorder rows to the cylinder enumeration: cos ascending j, then sin
    rows.sort(key=lambda r: (r[0], r[1]))
    block = np.empty((ip + 1, ip + 1))
    for rpos, (_, _, psi) in enumerate(rows):
        integ = w2 * psi
        for i in range(ip + 1):
            block[rpos, i] = np.sum(integ * np.outer(h[i], h[ip - i]))
    return block


def _thetaphi_block(kp: int, jp: int, N_quad: int) -> tuple[np.ndarray, list[int], list[int]]:
    """Dense block coupling cylinder modes of degree kp with planar order jp
    to spherical modes of degree kp with harmonic order jp (one trig class;
    cos and sin blocks coincide).

    Returns (block, i_list, l_list): rows are spherical modes (angular degree
    l ascending), columns cylinder modes (planar degree i ascending).
    """
    i_list = [i for i in range(jp, kp + 1) if (i - jp) % 2 == 0]
    lmin = jp if (jp % 2) == (kp % 2) else jp + 1
    l_list = list(range(lmin, kp + 1, 2))
    nb = len(i_list)
    assert nb == len(l_list)
    if nb == 0:
        return np.zeros((0, 0)), i_list, l_list

    gl = gauss_laguerre(N_quad, 0.5)       # weight e^{-r} sqrt(r), r = radius^2
    gx = gauss_legendre(N_quad)
    rt = gl.nodes[:, None] * np.ones((1, N_quad))     # r~ = r^2
    x = np.ones((N_quad, 1)) * gx.nodes[None, :]      # x = cos(theta)
    w = 0.5 * gl.weights[:, None] * gx.weights[None, :]
    s2 = 1.0 - x * x                                   # sin^2(theta)
    rho2 = rt * s2                                     # (r sin)^2
    z = np.sqrt(rt) * x                                # v3 = r cos(theta)
    nrm = norm_assoc_legendre_all(kp, x)

    sqrt2 = math.sqrt(2.0)
    sj = 1.0 if jp == 0 else sqrt2
    pifac = 2.0 * math.pi if jp == 0 else math.pi

    block = np.empty((nb, nb))
    for col, i in enumerate(i_list):
        a2 = (i - jp) // 2
        lag2 = eval_assoc_laguerre_all(a2, float(jp), rho2)[-1]
        herm = eval_hermite_all(kp - i, z)[-1]
        cyl_part = (_polar_gamma(jp) * rho2 ** (jp / 2.0) * lag2 * herm)
        for row, l in enumerate(l_list):
            a3 = (l - jp)  # not the radial index; radial index below
            rad = eval_assoc_laguerre_all((kp - l) // 2, l + 0.5, rt)[-1]
            sph_part = (sqrt2 * sj * nrm[l, jp] * rt ** (l / 2.0) * rad)
            block[row, col] = pifac * np.sum(w * cyl_part * sph_part)
    return block, i_list, l_list


@dataclass
class TransformSet:
    """Precomputed transform matrices for state degree N.

    trunc_degree M (default N) is the total degree the hierarchical stages
    keep; fine_order G (default 2N+1) the per-axis size of the product grid
    the quadratic term lives on. P_LH is (M+1) x G with entries w_j h_i(v_j).
    """

    N: int
    trunc_degree: int
    fine_order: int
    maps: BasisIndexMaps
    P_LH: np.ndarray
    htheta_blocks: list[np.ndarray]
    thetaphi_blocks: dict[tuple[int, int], np.ndarray]
    csr_HT: sp.csr_matrix
    csr_TP: sp.csr_matrix
    csr_HT_t: sp.csr_matrix
    csr_TP_t: sp.csr_matrix
    hier_gather: np.ndarray      # flat indices into the (M+1)^3 tensor
    own_rule: specfun.QuadratureRule
    fine_rule: specfun.QuadratureRule

    @property
    def nodal_dim(self) -> int:
        return (self.N + 1) ** 3

    @property
    def hier_dim(self) -> int:
        return hier_dim(self.trunc_degree)

    def storage_bytes(self) -> int:
        total = self.P_LH.nbytes
        total += sum(b.nbytes for b in self.htheta_blocks)
        total += sum(b.nbytes for b in self.thetaphi_blocks.values())
        for m in (self.csr_HT, self.csr_TP, self.csr_HT_t, self.csr_TP_t):
            total += m.data.nbytes + m.indices.nbytes + m.indptr.nbytes
        total += self.hier_gather.nbytes
        return total


def build_transform_set(N: int, trunc_degree: int | None = None,
                        fine_order: int | None = None,
                        cache_dir: str | None = None) -> TransformSet:
    """Assemble all transforms for state degree N.

    N >= 2 is required so the collision invariants fit the test space.
    """
    if N < 2:
        raise ValueError(f"need N >= 2 for the collision invariants, got {N}")
    M = N if trunc_degree is None else int(trunc_degree)
    G = (2 * N + 1) if fine_order is None else int(fine_order)
    if G < 2 * N + 1:
        raise ValueError("fine_order must be at least 2N+1")

    if cache_dir is not None:
        cached = _load_cache(cache_dir, N, M, G)
        if cached is not None:
            return cached

    maps = BasisIndexMaps(M)
    fine = gauss_hermite(G)
    own = gauss_hermite(N + 1)

    h_at_fine = eval_hermite_all(M, fine.nodes)           # (M+1, G)
    P_LH = h_at_fine * fine.weights[None, :]

    quad2 = M + 2
    htheta_blocks = [_htheta_block(ip, quad2) for ip in range(M + 1)]
    thetaphi_blocks: dict[tuple[int, int], np.ndarray] = {}
    for kp in range(M + 1):
        for jp in range(kp + 1):
            blk, _, _ = _thetaphi_block(kp, jp, M + 2)
            thetaphi_blocks[(kp, jp)] = blk

    ts = _finalize(N, M, G, maps, P_LH, htheta_blocks, thetaphi_blocks,
                   own, fine)
    if cache_dir is not None:
        _save_cache(cache_dir, ts)
    return ts


def _finalize(N, M, G, maps, P_LH, htheta_blocks, thetaphi_blocks, own, fine):
    csr_HT = _assemble_ht(maps, htheta_blocks)
    csr_TP = _assemble_tp(maps, thetaphi_blocks)
    gather = _hier_gather(maps, M)
    return TransformSet(
        N=N, trunc_degree=M, fine_order=G, maps=maps, P_LH=P_LH,
        htheta_blocks=htheta_blocks, thetaphi_blocks=thetaphi_blocks,
        csr_HT=csr_HT, csr_TP=csr_TP,
        csr_HT_t=csr_HT.T.tocsr(), csr_TP_t=csr_TP.T.tocsr(),
        hier_gather=gather, own_rule=own, fine_rule=fine)


def _hier_gather(maps: BasisIndexMaps, M: int) -> np.ndarray:
    ijk = maps.hermite_ijk
    return (ijk[:, 0] * (M + 1) ** 2 + ijk[:, 1] * (M + 1) + ijk[:, 2]).copy()


def _group_positions(maps: BasisIndexMaps):
    """Position lookup tables for block assembly."""
    M = maps.N
    herm_pos = {}
    for pos, (i, j, k) in enumerate(maps.hermite_ijk):
        herm_pos[(int(i), int(j), int(k))] = pos
    cyl_pos = {}
    for pos, (kp, ip, j, t) in enumerate(maps.cylinder_kijt):
        cyl_pos[(int(kp), int(ip), int(j), int(t))] = pos
    sph_pos = {}
    for pos, (kp, l, jp, t) in enumerate(maps.spherical_kljt):
        sph_pos[(int(kp), int(l), int(jp), int(t))] = pos
    return herm_pos, cyl_pos, sph_pos


def _assemble_ht(maps: BasisIndexMaps, blocks) -> sp.csr_matrix:
    """Global cylinder <- Hermite map as CSR (rows cylinder, cols Hermite)."""
    M = maps.N
    herm_pos, cyl_pos, _ = _group_positions(maps)
    rows, cols, vals = [], [], []
    for kp in range(M + 1):
        for ip in range(kp + 1):
            blk = blocks[ip]
            rlist = []
            for t in (COS, SIN):
                for j in range(ip // 2 + 1):
                    if t == SIN and angular_index(ip, j) == 0:
                        continue
                    rlist.append(cyl_pos[(kp, ip, j, t)])
            clist = [herm_pos[(i, ip - i, kp - ip)] for i in range(ip + 1)]
            for a, r in enumerate(rlist):
                for b, c in enumerate(clist):
                    rows.append(r)
                    cols.append(c)
                    vals.append(blk[a, b])
    d = maps.dim
    return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))


def _assemble_tp(maps: BasisIndexMaps, blocks) -> sp.csr_matrix:
    """Global spherical <- cylinder map as CSR."""
    M = maps.N
    _, cyl_pos, sph_pos = _group_positions(maps)
    rows, cols, vals = [], [], []
    for kp in range(M + 1):
        for jp in range(kp + 1):
            blk = blocks[(kp, jp)]
            if blk.size == 0:
                continue
            i_list = [i for i in range(jp, kp + 1) if (i - jp) % 2 == 0]
            lmin = jp if (jp % 2) == (kp % 2) else jp + 1
            l_list = list(range(lmin, kp + 1, 2))
            for t in (COS, SIN):
                if t == SIN and jp == 0:
                    continue
                rlist = [sph_pos[(kp, l, jp, t)] for l in l_list]
                clist = [cyl_pos[(kp, i, (jp - i % 2) // 2, t)]
                         for i in i_list]
                for a, r in enumerate(rlist):
                    for b, c in enumerate(clist):
                        rows.append(r)
                        cols.append(c)
                        vals.append(blk[a, b])
    d = maps.dim
    return sp.csr_matrix((vals, (rows, cols)), shape=(d, d))


# ----------------------------------------------------------------- transforms

def nodal_to_hermite(ts: TransformSet, e: np.ndarray) -> np.ndarray:
    """Project fine-grid nodal values (G^3 flat or batched (G^3, B)) onto the
    Hermite modes of total degree <= trunc_degree. Three axis contractions."""
    G = ts.fine_order
    M1 = ts.trunc_degree + 1
    batched = e.ndim == 2
    B = e.shape[1] if batched else 1
    if e.shape[0] != G ** 3:
        raise ValueError(f"expected {G ** 3} nodal values, got {e.shape[0]}")
    t = e.reshape(G, G, G, B) if batched else e.reshape(G, G, G, 1)
    t = np.tensordot(ts.P_LH, t, axes=(1, 0))        # (M1, G, G, B)
    t = np.tensordot(ts.P_LH, t, axes=(1, 1))        # (M1, M1, G, B)
    t = np.tensordot(ts.P_LH, t, axes=(1, 2))        # (M1, M1, M1, B)
    t = np.moveaxis(t, 0, 2)                          # i, j, k order
    t = np.moveaxis(t, 0, 1)
    full = t.reshape(M1 ** 3, B)
    out = full[ts.hier_gather]
    return out if batched else out[:, 0]


def nodal_to_hermite_t(ts: TransformSet, h: np.ndarray) -> np.ndarray:
    """Adjoint of nodal_to_hermite (fine nodal values from Hermite-tested)."""
    G = ts.fine_order
    M1 = ts.trunc_degree + 1
    batched = h.ndim == 2
    B = h.shape[1] if batched else 1
    hh = h.reshape(-1, B)
    full = np.zeros((M1 ** 3, B))
    full[ts.hier_gather] = hh
    t = full.reshape(M1, M1, M1, B)
    t = np.tensordot(ts.P_LH, t, axes=(0, 0))        # (G, j, k, B) via sum_i
    t = np.tensordot(ts.P_LH, t, axes=(0, 1))        # (G, G, k, B)
    t = np.tensordot(ts.P_LH, t, axes=(0, 2))        # (G, G, G, B)
    t = np.moveaxis(t, 0, 2)
    t = np.moveaxis(t, 0, 1)
    out = t.reshape(G ** 3, B)
    return out if batched else out[:, 0]


def hermite_to_cylinder(ts: TransformSet, h: np.ndarray) -> np.ndarray:
    if h.shape[0] != ts.hier_dim:
        raise ValueError("Hermite coefficient length mismatch")
    return ts.csr_HT @ h


def cylinder_to_hermite(ts: TransformSet, th: np.ndarray) -> np.ndarray:
    """Transpose (= inverse, by orthogonality) of hermite_to_cylinder."""
    if th.shape[0] != ts.hier_dim:
        raise ValueError("cylinder coefficient length mismatch")
    return ts.csr_HT_t @ th


def cylinder_to_spherical(ts: TransformSet, th: np.ndarray) -> np.ndarray:
    if th.shape[0] != ts.hier_dim:
        raise ValueError("cylinder coefficient length mismatch")
    return ts.csr_TP @ th


def spherical_to_cylinder(ts: TransformSet, ph: np.ndarray) -> np.ndarray:
    if ph.shape[0] != ts.hier_dim:
        raise ValueError("spherical coefficient length mismatch")
    return ts.csr_TP_t @ ph


# --------------------------------------------------------------------- shifts

def build_shift_1d(N: int, vbar_component: float,
                   fine_order: int | None = None) -> np.ndarray:
    """Shift matrix S with S[j, i] = l_i(vbar + mu_j), where l_i are the
    (N+1)-node Lagrange polynomials and mu_j = v_j / sqrt(2) over the fine
    Gauss-Hermite nodes (order 2N+1 unless overridden)."""
    G = (2 * N + 1) if fine_order is None else int(fine_order)
    mu = gauss_hermite(G).nodes / math.sqrt(2.0)
    return specfun.lagrange_matrix_at(N + 1, vbar_component + mu).T


def shift_3d(c: np.ndarray, shift_mats: tuple[np.ndarray, np.ndarray, np.ndarray]) -> np.ndarray:
    """Evaluate the trial polynomial at all shifted fine nodes.

    c is the (N+1)^3 flat nodal coefficient tensor; shift_mats are the three
    per-axis matrices from build_shift_1d. Returns G^3 flat values."""
    S1, S2, S3 = shift_mats
    n1 = S1.shape[1]
    if c.shape[0] != n1 ** 3:
        raise ValueError("nodal coefficient length mismatch")
    t = c.reshape(n1, n1, n1)
    t = np.tensordot(S1, t, axes=(1, 0))
    t = np.tensordot(S2, t, axes=(1, 1))
    t = np.tensordot(S3, t, axes=(1, 2))
    t = np.moveaxis(t, 0, 2)
    t = np.moveaxis(t, 0, 1)
    return t.reshape(-1)


# ---------------------------------------------------------------- cache (I/O)

_MAGIC = b"BGTS"
_VERSION = 2


def _cache_path(cache_dir: str, N: int, M: int, G: int) -> str:
    return os.path.join(cache_dir, f"transforms_N{N}_M{M}_G{G}.bgts")


def _write_mat(f, a: np.ndarray) -> None:
    a = np.ascontiguousarray(a, dtype=np.float64)
    f.write(struct.pack("<QQ", a.shape[0], a.shape[1] if a.ndim > 1 else 1))
    f.write(a.tobytes())


def _read_mat(f) -> np.ndarray:
    r, c = struct.unpack("<QQ", f.read(16))
    a = np.frombuffer(f.read(8 * r * c), dtype=np.float64).reshape(r, c)
    return a.copy()


def _save_cache(cache_dir: str, ts: TransformSet) -> None:
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir, ts.N, ts.trunc_degree, ts.fine_order)
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<III", _VERSION, ts.N, 0))
        f.write(struct.pack("<II", ts.trunc_degree, ts.fine_order))
        _write_mat(f, ts.P_LH)
        for blk in ts.htheta_blocks:
            _write_mat(f, blk)
        M = ts.trunc_degree
        for kp in range(M + 1):
            for jp in range(kp + 1):
                _write_mat(f, ts.thetaphi_blocks[(kp, jp)])
    os.replace(tmp, path)


def _load_cache(cache_dir: str, N: int, M: int, G: int) -> TransformSet | None:
    path = _cache_path(cache_dir, N, M, G)
    if not os.path.exists(path):
        return None
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            return None
        ver, n_stored, _ = struct.unpack("<III", f.read(12))
        if ver != _VERSION or n_stored != N:
            return None
        m_stored, g_stored = struct.unpack("<II", f.read(8))
        if m_stored != M or g_stored != G:
            return None
        P_LH = _read_mat(f)
        htheta = [_read_mat(f) for _ in range(M + 1)]
        thetaphi = {}
        for kp in range(M + 1):
            for jp in range(kp + 1):
                thetaphi[(kp, jp)] = _read_mat(f)
    maps = BasisIndexMaps(M)
    return _finalize(N, M, G, maps, P_LH, htheta, thetaphi,
                     gauss_hermite(N + 1), gauss_hermite(G))
