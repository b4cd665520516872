"""Time integration of the homogeneous equation and its verification data.

Holds the analytic relaxation solution for the constant kernel, the
two-Maxwellian initial condition with its closed-form momentum-flow / energy-
flux histories, interpolatory projection of initial data, moment extraction,
the RK4 stepper and the error norms used by the convergence studies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import bases, collision
from .bases import TransformSet
from .collision import SpectralDensity, evaluate_collision, galerkin_rhs
from .kernel import CollisionKernel
from .specfun import gauss_hermite, lagrange_matrix_at

BKW_T0_MIN = 6.0 * math.log(2.5)

# two-Maxwellian defaults; the x-flip relative to the stated vectors makes
# the closed-form P12/q1 histories below come out with the right sign
TWO_MAXWELLIAN_DEFAULTS = dict(
    rho1=0.5, rho2=0.5,
    V1=(-2.0, 2.0, 0.0), V2=(2.0, 0.0, 0.0),
    T1=1.0, T2=1.0,
)

CSV_COLUMNS = ["t", "rho", "Vx", "Vy", "Vz", "E", "T",
               "P11", "P22", "P33", "P12", "P13", "P23",
               "q1", "q2", "q3"]


@dataclass
class MomentSet:
    """Macroscopic moments of a density at one instant."""

    rho: float
    V: np.ndarray
    E: float
    T: float
    P: np.ndarray          # momentum flow int v_i v_j f
    q: np.ndarray          # energy flux 0.5 int v_i |v|^2 f
    t: float = 0.0

    def row(self, extra: tuple[float, ...] = ()) -> list[float]:
        return [self.t, self.rho, *self.V, self.E, self.T,
                self.P[0, 0], self.P[1, 1], self.P[2, 2],
                self.P[0, 1], self.P[0, 2], self.P[1, 2],
                *self.q, *extra]


@dataclass
class ExperimentConfig:
    kernel: str = "maxwell"
    N: int = 8
    n_ip: int | None = None
    dt: float = 0.1
    t0: float = 0.0
    t_end: float = 12.0
    initial: str = "two_maxwellians"
    ic_params: dict = dc_field(default_factory=dict)
    Tbar: float | None = None
    Vbar: tuple[float, float, float] | None = None
    out: str | None = None
    workers: int = 1
    seed: int = 0
    cache_dir: str | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= self.t0:
            raise ValueError("t_end must exceed t0")
        if self.N < 2:
            raise ValueError("N must be at least 2")


# ------------------------------------------------------------------ BKW

def bkw_K(t: float) -> float:
    return 1.0 - math.exp(-t / 6.0)


def bkw_eval(t: float, v: np.ndarray) -> np.ndarray:
    """Relaxation-to-Maxwellian exact solution for the constant kernel
    B = 1/(4 pi); density 1, mean velocity 0, temperature 1 at all times."""
    if t < BKW_T0_MIN:
        warnings.warn(f"t={t} is below the nonnegativity threshold "
                      f"{BKW_T0_MIN:.4f}; the profile takes negative values")
    K = bkw_K(t)
    v = np.asarray(v, dtype=float)
    v2 = np.sum(v * v, axis=-1)
    pref = 1.0 / (2.0 * (2.0 * math.pi * K) ** 1.5)
    return pref * ((5.0 * K - 3.0) / K + (1.0 - K) / K ** 2 * v2) \
        * np.exp(-v2 / (2.0 * K))


def two_maxwellians(v: np.ndarray, rho1, rho2, V1, V2, T1, T2) -> np.ndarray:
    """Sum of two Maxwellians, each normalized to its partial density."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1])
    for rho, V, T in ((rho1, V1, T1), (rho2, V2, T2)):
        d2 = np.sum((v - np.asarray(V, dtype=float)) ** 2, axis=-1)
        out = out + rho / (2.0 * math.pi * T) ** 1.5 * np.exp(-d2 / (2.0 * T))
    return out


def analytic_moments_maxwell(t: float) -> MomentSet:
    """Closed-form moment histories for the two-Maxwellian initial condition
    under the constant kernel. Entries not listed analytically are the
    stationary values."""
    e = math.exp(-0.5 * t)
    P = np.array([
        [7.0 / 3.0 * e + 8.0 / 3.0, -2.0 * e, 0.0],
        [-2.0 * e, -2.0 / 3.0 * e + 11.0 / 3.0, 0.0],
        [0.0, 0.0, -5.0 / 3.0 * e + 8.0 / 3.0],
    ])
    q = np.array([-2.0 * e, -2.0 / 3.0 * e + 43.0 / 6.0, 0.0])
    rho, V = 1.0, np.array([0.0, 1.0, 0.0])
    E = 4.5
    T = (2.0 * E / rho - float(V @ V)) / 3.0
    return MomentSet(rho=rho, V=V, E=E, T=T, P=P, q=q, t=t)


# --------------------------------------------------------- projection/moments

def project_initial(f_callable, N: int, Tbar: float,
                    Vbar) -> SpectralDensity:
    """Interpolatory projection: c_j = e^{+|vt_j|^2} f(sqrt(Tbar) vt_j + Vbar)
    on the (N+1)^3 tensor Gauss-Hermite nodes."""
    Vbar = np.asarray(Vbar, dtype=float).reshape(3)
    rule = gauss_hermite(N + 1)
    pts, _ = rule.tensor3()
    phys = math.sqrt(Tbar) * pts + Vbar[None, :]
    vals = np.asarray(f_callable(phys), dtype=float).reshape(-1)
    c = np.exp(np.sum(pts * pts, axis=1)) * vals
    if not np.all(np.isfinite(c)):
        raise ValueError("initial condition produced non-finite samples")
    return SpectralDensity(N=N, Tbar=float(Tbar), Vbar=Vbar, c=c)


def _p_on_grid(f: SpectralDensity, n_grid: int) -> tuple[np.ndarray, ...]:
    """Polynomial part of f evaluated on an n_grid^3 Gauss-Hermite lattice in
    the scaled frame; returns (values, rule)."""
    rule = gauss_hermite(n_grid)
    A = lagrange_matrix_at(f.N + 1, rule.nodes)    # (N+1, n_grid)
    N1 = f.N + 1
    t = f.c.reshape(N1, N1, N1)
    t = np.tensordot(A, t, axes=(0, 0))            # (g1, j, k)
    t = np.tensordot(A, t, axes=(0, 1))            # (g2, g1, k)
    t = np.tensordot(A, t, axes=(0, 2))            # (g3, g2, g1)
    return t.transpose(2, 1, 0).reshape(-1), rule


def compute_moments(f: SpectralDensity, t: float = 0.0) -> MomentSet:
    """Moments by Gauss-Hermite quadrature in the scaled frame, order N+2."""
    n = f.N + 2
    p, rule = _p_on_grid(f, n)
    pts, w = rule.tensor3()
    phys = math.sqrt(f.Tbar) * pts + f.Vbar[None, :]
    jac = f.Tbar ** 1.5
    wp = jac * w * p
    rho = float(np.sum(wp))
    mom = phys.T @ wp
    V = mom / rho
    v2 = np.sum(phys * phys, axis=1)
    E = 0.5 * float(v2 @ wp)
    P = (phys.T * wp) @ phys
    q = 0.5 * (phys.T @ (wp * v2))
    T = (2.0 * E / rho - float(V @ V)) / 3.0
    return MomentSet(rho=rho, V=V, E=E, T=T, P=P, q=q, t=t)


def error_norms(f: SpectralDensity, reference, t: float) -> tuple[float, float]:
    """(L2, Linf) distance between f and reference(t, v) on the fixed tensor
    Gauss-Hermite lattice of order 2N+1 mapped to the physical frame."""
    n = 2 * f.N + 1
    p, rule = _p_on_grid(f, n)
    pts, w = rule.tensor3()
    s2 = np.sum(pts * pts, axis=1)
    fh = np.exp(-s2) * p
    phys = math.sqrt(f.Tbar) * pts + f.Vbar[None, :]
    fr = np.asarray(reference(t, phys), dtype=float).reshape(-1)
    diff = fh - fr
    linf = float(np.max(np.abs(diff)))
    l2 = math.sqrt(f.Tbar ** 1.5 * float(np.sum(w * np.exp(s2) * diff * diff)))
    return l2, linf


# ------------------------------------------------------------------- stepping

def rk4_integrate(f0: SpectralDensity, kern: CollisionKernel,
                  ts: TransformSet, dt: float, t0: float, t_end: float,
                  n_ip: int | None = None, workers: int = 1,
                  callback=None) -> tuple[list[MomentSet], SpectralDensity]:
    """Classical RK4 on dc/dt = M^{-1} q(c). Moments are recorded at every
    step (including t0); callback(t, density) runs after each record."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    f = f0.copy()
    n_steps = int(round((t_end - t0) / dt))

    def rhs(c: np.ndarray) -> np.ndarray:
        g = SpectralDensity(f.N, f.Tbar, f.Vbar, c)
        q = evaluate_collision(g, kern, ts, n_ip=n_ip, workers=workers)
        return galerkin_rhs(q, ts, f.Tbar)

    trajectory = [compute_moments(f, t=t0)]
    if callback is not None:
        callback(t0, f)
    t = t0
    for step in range(n_steps):
        c = f.c
        try:
            k1 = rhs(c)
            k2 = rhs(c + 0.5 * dt * k1)
            k3 = rhs(c + 0.5 * dt * k2)
            k4 = rhs(c + dt * k3)
        except (FloatingPointError, ValueError) as exc:
            raise RuntimeError(
                f"integration aborted at t={t:.6g} (step {step}): {exc}")
        f.c = c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(f.c)):
            raise RuntimeError(
                f"integration aborted at t={t:.6g} (step {step}): "
                "state became non-finite")
        t = t0 + (step + 1) * dt
        trajectory.append(compute_moments(f, t=t))
        if callback is not None:
            callback(t, f)
    return trajectory, f


# ------------------------------------------------------------------ CSV / IO

def format_float(x: float) -> str:
    """Shortest decimal that round-trips the IEEE-754 value."""
    return repr(float(x))


def write_trajectory_csv(path: str, trajectory: list[MomentSet],
                         extra_cols: tuple[str, ...] = (),
                         extras: list[tuple[float, ...]] | None = None) -> None:
    cols = CSV_COLUMNS + list(extra_cols)
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i, m in enumerate(trajectory):
            row = m.row(extras[i] if extras is not None else ())
            fh.write(",".join(format_float(x) for x in row) + "\n")


def read_trajectory_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return header, data


# --------------------------------------------------------------- experiments

def initial_condition(cfg: ExperimentConfig):
    """Resolve (callable, Tbar, Vbar) for the configured initial state.

    The trial Maxwellian matches the data: Tbar = 2 T_physical, Vbar = V."""
    if cfg.initial == "bkw":
        tbar = cfg.Tbar if cfg.Tbar is not None else 2.0
        vbar = cfg.Vbar if cfg.Vbar is not None else (0.0, 0.0, 0.0)
        return (lambda v: bkw_eval(cfg.t0, v)), tbar, vbar
    if cfg.initial == "two_maxwellians":
        params = dict(TWO_MAXWELLIAN_DEFAULTS)
        params.update(cfg.ic_params)
        tbar = cfg.Tbar if cfg.Tbar is not None else 2.0 * (8.0 / 3.0)
        vbar = cfg.Vbar if cfg.Vbar is not None else (0.0, 1.0, 0.0)
        return (lambda v: two_maxwellians(v, **params)), tbar, vbar
    raise ValueError(f"unknown initial condition tag: {cfg.initial}")
