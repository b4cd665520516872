"""Collision kernels B = b_r * b_theta and their spectral data.

b_r(|v-w|) = |v-w|^beta with beta in [0, 1]; b_theta acts on the cosine of
the deflection angle. The angular part enters only through its Legendre
transform (Funk-Hecke eigenvalues), the radial part through per-degree
multiplication matrices in the spherical radial chains.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .bases import BasisIndexMaps
from .specfun import (eval_assoc_laguerre_all, eval_hermite_all,
                      gauss_laguerre, gauss_legendre)

FOUR_PI_INV = 1.0 / (4.0 * math.pi)


def funk_hecke_lambdas(b_theta: Callable[[np.ndarray], np.ndarray],
                       L_max: int, order: int | None = None) -> np.ndarray:
    """Eigenvalues lambda_l = 2 pi * int_{-1}^{1} b_theta(mu) P_l(mu) d mu
    for l = 0..L_max, by Gauss-Legendre quadrature."""
    n = max(L_max + 8, 64) if order is None else order
    rule = gauss_legendre(n)
    bt = np.asarray(b_theta(rule.nodes), dtype=float)
    bt = np.broadcast_to(bt, rule.nodes.shape)
    # Legendre values P_l at the nodes by recurrence
    p = np.empty((L_max + 1, n))
    p[0] = 1.0
    if L_max >= 1:
        p[1] = rule.nodes
    for l in range(1, L_max):
        p[l + 1] = ((2 * l + 1) * rule.nodes * p[l] - l * p[l - 1]) / (l + 1)
    return 2.0 * math.pi * (p * (rule.weights * bt)[None, :]).sum(axis=1)


def _lambdas_adaptive(b_theta, L_max: int) -> np.ndarray:
    """Escalate the quadrature order until the eigenvalues settle, for
    angular laws that are not polynomial (e.g. (1+mu)^p end-point behaviour)."""
    lam = funk_hecke_lambdas(b_theta, L_max, order=64)
    for order in (128, 256, 512, 1024):
        nxt = funk_hecke_lambdas(b_theta, L_max, order=order)
        if np.max(np.abs(nxt - lam)) < 1e-12:
            return nxt
        lam = nxt
    return lam


@dataclass
class CollisionKernel:
    """Spectral data of one collision kernel for a given index map."""

    beta: float
    b_theta: Callable
    tag: str
    lam: np.ndarray                     # Funk-Hecke eigenvalues, l = 0..L
    d_table: np.ndarray                 # lambda_l - lambda_0 per spherical mode
    radial_csr: sp.csr_matrix | None    # None means identity (beta == 0)
    radial_blocks: dict = field(default_factory=dict, repr=False)

    @property
    def radial_scale(self) -> float:
        """b_r(sqrt(2) r) = 2^{beta/2} r^beta; the constant rides here."""
        return 2.0 ** (0.5 * self.beta)

    def tbar_prefactor(self, tbar: float) -> float:
        """Rescaling factor of the collision integrals for trial temperature
        parameter tbar (centred problem is solved at unit scale)."""
        return tbar ** (3.0 + 0.5 * self.beta)

    def storage_bytes(self) -> int:
        total = self.lam.nbytes + self.d_table.nbytes
        if self.radial_csr is not None:
            m = self.radial_csr
            total += m.data.nbytes + m.indices.nbytes + m.indptr.nbytes
        return total


def build_collision_eigenvalues(lam: np.ndarray,
                                maps: BasisIndexMaps) -> np.ndarray:
    """d_{k,i,j} = lambda_l - lambda_0 with l the angular degree of the mode;
    zero on angular degree 0, which is what conservation hinges on."""
    return lam[maps.sph_l] - lam[0]


def build_radial_mult(beta: float, maps: BasisIndexMaps) -> tuple[sp.csr_matrix, dict]:
    """Multiplication by r^beta as a sparse matrix on spherical coefficients.

    For each angular degree l the radial chain (same harmonic, Laguerre index
    a = (k-l)/2) picks up the dense symmetric matrix
    R^(l)[a', a] = int_0^inf e^-x x^(l+0.5(1+beta)) L_a^(l+0.5) L_a'^(l+0.5) dx,
    evaluated exactly by generalized Gauss-Laguerre quadrature.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    M = maps.N
    blocks = {}
    for l in range(M + 1):
        amax = (M - l) // 2
        n_quad = amax + 2
        rule = gauss_laguerre(n_quad, l + 0.5 * (1.0 + beta))
        lag = eval_assoc_laguerre_all(amax, l + 0.5, rule.nodes)  # (amax+1, n)
        blocks[l] = (lag * rule.weights[None, :]) @ lag.T
    rows, cols, vals = [], [], []
    kljt = maps.spherical_kljt
    chains: dict[tuple[int, int, int], list[tuple[int, int]]] = {}
    for pos, (k, l, j, t) in enumerate(kljt):
        chains.setdefault((int(l), int(j), int(t)), []).append(
            (int(k - l) // 2, pos))
    for (l, j, t), members in chains.items():
        members.sort()
        R = blocks[l]
        for a_out, p_out in members:
            for a_in, p_in in members:
                rows.append(p_out)
                cols.append(p_in)
                vals.append(R[a_out, a_in])
    d = maps.dim
    return sp.csr_matrix((vals, (rows, cols)), shape=(d, d)), blocks


_TAG_RE = re.compile(r"^(maxwell|hardsphere|vhs|angular)(?::(.*))?$")


def parse_kernel_params(spec: str) -> dict:
    """Parse a kernel selection string.

    Supported: "maxwell", "hardsphere", "vhs:beta=<x>",
    "angular:beta=<x>,p=<y>[,c=<z>|c=1/4pi]".
    """
    m = _TAG_RE.match(spec.strip().lower())
    if not m:
        raise ValueError(f"unknown kernel spec: {spec!r}")
    name, rest = m.group(1), m.group(2) or ""
    params = {}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, _, val = item.partition("=")
        params[key.strip()] = val.strip()
    out = {"name": name}
    if name == "maxwell":
        out["beta"] = 0.0
    elif name == "hardsphere":
        out["beta"] = 1.0
    elif name == "vhs":
        if "beta" not in params:
            raise ValueError("vhs kernel needs beta=<value>")
        out["beta"] = float(params["beta"])
    elif name == "angular":
        out["beta"] = float(params.get("beta", 0.38))
        out["p"] = float(params.get("p", 0.4))
        c = params.get("c", "1/4pi")
        out["c"] = FOUR_PI_INV if c in ("1/4pi", "1/4π") else float(c)
    return out


def build_kernel(spec: str | dict, maps: BasisIndexMaps) -> CollisionKernel:
    """Construct the spectral kernel data for the given index maps."""
    params = parse_kernel_params(spec) if isinstance(spec, str) else dict(spec)
    name = params["name"]
    beta = float(params["beta"])
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    L_max = maps.N + 1

    if name in ("maxwell", "hardsphere", "vhs"):
        b_theta = lambda mu: np.full(np.shape(mu), FOUR_PI_INV)  # noqa: E731
        lam = funk_hecke_lambdas(b_theta, L_max)
        tag = name
    elif name == "angular":
        c, p = params["c"], params["p"]
        b_theta = lambda mu: c * (1.0 + mu) ** p                 # noqa: E731
        lam = _lambdas_adaptive(b_theta, L_max)
        tag = f"angular(beta={beta},p={p})"
    else:
        raise ValueError(f"unknown kernel name: {name}")

    d_table = build_collision_eigenvalues(lam, maps)
    if beta == 0.0:
        radial_csr, radial_blocks = None, {}
    else:
        radial_csr, radial_blocks = build_radial_mult(beta, maps)
    return CollisionKernel(beta=beta, b_theta=b_theta, tag=tag, lam=lam,
                           d_table=d_table, radial_csr=radial_csr,
                           radial_blocks=radial_blocks)
