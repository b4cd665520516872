"""Gauss quadrature rules and orthonormal special-function evaluation.

All polynomial families are scaled to be orthonormal against their natural
weight: Hermite against e^{-v^2} on R, associated Laguerre against e^{-x}x^a
on (0,inf), real spherical harmonics against the surface measure on S^2.
Everything is evaluated by forward recurrences; no explicit factorials.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln


class QuadKind(enum.Enum):
    HERMITE = "hermite"
    GENERALIZED_LAGUERRE = "generalized_laguerre"
    LEGENDRE = "legendre"


@dataclass(frozen=True)
class QuadratureRule:
    """A 1D Gauss rule; weights include the weight function."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: QuadKind
    order: int
    alpha: float = 0.0

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    def tensor3(self) -> tuple[np.ndarray, np.ndarray]:
        """3D tensorized view: nodes (n^3, 3) in C order, weights (n^3,)."""
        n = self.order
        ii, jj, kk = np.meshgrid(np.arange(n), np.arange(n), np.arange(n),
                                 indexing="ij")
        pts = np.stack([self.nodes[ii], self.nodes[jj], self.nodes[kk]],
                       axis=-1).reshape(-1, 3)
        w = (self.weights[ii] * self.weights[jj] *
             self.weights[kk]).reshape(-1)
        return pts, w


def _golub_welsch(alpha_diag, beta_off, mu0):
    """Nodes/weights from the Jacobi matrix of a monic three-term recurrence."""
    if len(alpha_diag) == 1:
        return np.array(alpha_diag, dtype=float), np.array([mu0])
    nodes, vecs = eigh_tridiagonal(np.asarray(alpha_diag, dtype=float),
                                   np.sqrt(np.asarray(beta_off, dtype=float)))
    weights = mu0 * vecs[0] ** 2
    return nodes, weights


def _golub_welsch_nodes(alpha_diag, beta_off):
    if len(alpha_diag) == 1:
        return np.asarray(alpha_diag, dtype=float)
    return eigh_tridiagonal(np.asarray(alpha_diag, dtype=float),
                            np.sqrt(np.asarray(beta_off, dtype=float)),
                            eigvals_only=True)


def _freeze(rule: QuadratureRule) -> QuadratureRule:
    rule.nodes.setflags(write=False)
    rule.weights.setflags(write=False)
    return rule


@lru_cache(maxsize=256)
def gauss_hermite(n: int) -> QuadratureRule:
    """n-point Gauss-Hermite rule for the weight e^{-v^2} on R.

    Nodes from the Golub-Welsch Jacobi matrix; weights from the Christoffel
    function of the orthonormal family, which stays accurate for the extreme
    nodes where the eigenvector components underflow.
    """
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got n={n}")
    # monic recurrence for e^{-x^2}: a_k = 0, b_k = k/2
    k = np.arange(1, n)
    nodes = _golub_welsch_nodes(np.zeros(n), k / 2.0)
    # enforce exact +/- symmetry of the rule
    nodes = 0.5 * (nodes - nodes[::-1])
    h = eval_hermite_all(n - 1, nodes)
    weights = 1.0 / np.sum(h * h, axis=0)
    weights = 0.5 * (weights + weights[::-1])
    return _freeze(QuadratureRule(nodes, weights, QuadKind.HERMITE, n))


@lru_cache(maxsize=256)
def gauss_laguerre(n: int, alpha: float) -> QuadratureRule:
    """n-point generalized Gauss-Laguerre rule for e^{-x}x^alpha on (0,inf)."""
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got n={n}")
    if alpha <= -1.0:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    alpha = float(alpha)
    k = np.arange(n, dtype=float)
    diag = 2.0 * k + alpha + 1.0
    k1 = np.arange(1, n, dtype=float)
    off = k1 * (k1 + alpha)
    nodes = _golub_welsch_nodes(diag, off)
    lag = eval_assoc_laguerre_all(n - 1, alpha, nodes)
    weights = 1.0 / np.sum(lag * lag, axis=0)
    return _freeze(QuadratureRule(nodes, weights,
                                  QuadKind.GENERALIZED_LAGUERRE, n, alpha))


@lru_cache(maxsize=256)
def gauss_legendre(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [-1, 1], weight 1."""
    if n < 1:
        raise ValueError(f"need at least one quadrature point, got n={n}")
    k = np.arange(1, n, dtype=float)
    off = k * k / (4.0 * k * k - 1.0)
    nodes, weights = _golub_welsch(np.zeros(n), off, 2.0)
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    return _freeze(QuadratureRule(nodes, weights, QuadKind.LEGENDRE, n))


def eval_hermite_all(N: int, v) -> np.ndarray:
    """Orthonormal Hermite values [h_0(v), ..., h_N(v)], weight e^{-v^2}.

    `v` may be a scalar or an array; the family axis comes first.
    """
    v = np.asarray(v, dtype=float)
    out = np.empty((N + 1,) + v.shape)
    out[0] = math.pi ** -0.25
    if N >= 1:
        out[1] = math.sqrt(2.0) * v * out[0]
    for i in range(1, N):
        out[i + 1] = (math.sqrt(2.0 / (i + 1)) * v * out[i]
                      - math.sqrt(i / (i + 1.0)) * out[i - 1])
    return out


def eval_assoc_laguerre_all(K: int, alpha: float, x) -> np.ndarray:
    """Orthonormal generalized Laguerre values [L_0^a(x), ..., L_K^a(x)].

    Orthonormal against e^{-x}x^alpha; x >= 0 required.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("Laguerre argument must be nonnegative")
    if alpha <= -1.0:
        raise ValueError(f"alpha must exceed -1, got {alpha}")
    out = np.empty((K + 1,) + x.shape)
    out[0] = math.exp(-0.5 * gammaln(alpha + 1.0))
    if K >= 1:
        out[1] = (alpha + 1.0 - x) * out[0] / math.sqrt(alpha + 1.0)
    for i in range(1, K):
        a = (2 * i + 1 + alpha - x) * out[i]
        b = math.sqrt(i * (i + alpha)) * out[i - 1]
        out[i + 1] = (a - b) / math.sqrt((i + 1) * (i + 1 + alpha))
    return out


def norm_assoc_legendre_all(L: int, x) -> np.ndarray:
    """Normalized associated Legendre table N_l^m for 0 <= m <= l <= L.

    N_l^m = sqrt((2l+1)/(4pi) * (l-m)!/(l+m)!) P_l^m(x) without the
    Condon-Shortley phase. Returns shape (L+1, L+1) + x.shape, index [l, m];
    entries with m > l are zero.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((L + 1, L + 1) + x.shape)
    out[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, L + 1):
        out[m, m] = math.sqrt(1.0 + 0.5 / m) * s * out[m - 1, m - 1]
    for m in range(0, L + 1):
        if m + 1 <= L:
            out[m + 1, m] = math.sqrt(2.0 * m + 3.0) * x * out[m, m]
        for l in range(m + 2, L + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[l, m] = a * (x * out[l - 1, m] - b * out[l - 2, m])
    return out


def sph_harm_index(L: int) -> list[tuple[int, int, str]]:
    """Flat ordering (l, j, t) used by eval_real_sph_harm: per degree l,
    (l,0,cos), then (l,j,cos),(l,j,sin) for j=1..l. Total (L+1)^2 entries."""
    idx = []
    for l in range(L + 1):
        idx.append((l, 0, "cos"))
        for j in range(1, l + 1):
            idx.append((l, j, "cos"))
            idx.append((l, j, "sin"))
    return idx


def eval_real_sph_harm(L: int, theta, phi) -> np.ndarray:
    """All real spherical harmonics Y_l^{j,t} for l <= L at (theta, phi).

    Ordering per sph_harm_index. Orthonormal on S^2; the j != 0 entries carry
    the sqrt(2) factor of the real convention.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if np.any(theta < 0) or np.any(theta > math.pi):
        raise ValueError("theta must lie in [0, pi]")
    nlm = norm_assoc_legendre_all(L, np.cos(theta))
    out = np.empty(((L + 1) ** 2,) + theta.shape)
    pos = 0
    sqrt2 = math.sqrt(2.0)
    for l in range(L + 1):
        out[pos] = nlm[l, 0]
        pos += 1
        for j in range(1, l + 1):
            out[pos] = sqrt2 * nlm[l, j] * np.cos(j * phi)
            out[pos + 1] = sqrt2 * nlm[l, j] * np.sin(j * phi)
            pos += 2
    return out


def barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    """Barycentric weights for Lagrange interpolation on `nodes`, normalized
    to unit max magnitude (the interpolation formula is scale invariant)."""
    n = len(nodes)
    w = np.ones(n)
    for i in range(n):
        w[i] = 1.0 / np.prod(nodes[i] - np.delete(nodes, i))
    return w / np.max(np.abs(w))


def eval_lagrange_all(N: int, scale: float, v) -> np.ndarray:
    """Values [l_0(v/scale), ..., l_N(v/scale)] of the Lagrange collocation
    basis on the (N+1)-point Gauss-Hermite nodes; l_j(node_i) = delta_ij."""
    if scale <= 0:
        raise ValueError("scale must be positive")
    nodes = gauss_hermite(N + 1).nodes
    return _lagrange_matrix(nodes, np.asarray(v, dtype=float) / scale)


def _lagrange_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Barycentric evaluation of all Lagrange basis polynomials.

    Returns shape (len(nodes),) + x.shape.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    shape = x.shape
    xf = x.reshape(-1)
    w = barycentric_weights(nodes)
    diff = xf[:, None] - nodes[None, :]          # (nx, n)
    exact = diff == 0.0
    hit = exact.any(axis=1)
    if hit.any():
        diff[exact] = 1.0
    terms = w[None, :] / diff
    vals = terms / np.sum(terms, axis=1, keepdims=True)
    if hit.any():
        vals[hit] = exact[hit]
    return vals.T.reshape((len(nodes),) + shape)


def lagrange_matrix_at(n_basis: int, x: np.ndarray) -> np.ndarray:
    """Matrix A with A[i, q] = l_i(x_q) for the n_basis-point Gauss-Hermite
    collocation basis (unit scale)."""
    return _lagrange_matrix(gauss_hermite(n_basis).nodes, x)
