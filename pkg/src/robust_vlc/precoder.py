"""Minimum-power precoders with per-user SNIR targets over channel regions.

The robust design asks every user's SNIR target to hold at every corner of
its uncertainty box, which by convexity covers the whole box.  Each corner
h of user k contributes one second-order cone

    || (sigma_k, rho w_i^T h  for i != k) ||_2  <=  rho / sqrt(gamma_k) * w_k^T h

plus the linear row w_k^T h >= 0.  The per-LED swing sum_k A_k |W[l, k]| is
bounded by the headroom v, and v itself by min(beta, P_max - beta), so the
instantaneous optical power of every LED stays in [0, P_max].

Decision vector layout: vec(W) column by column (user k occupies
``k*L:(k+1)*L``), then the matching absolute-value bounds t, then v.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import metrics
from .region import UncertaintyBox, enumerate_vertices, unique_rows
from .socp import ConeProgram, SolverSettings, Status, solve
from .socp.cone import NONNEG, SOC


class DesignStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class DesignSpec:
    """Per-user SNIR targets (linear), noise variances and power limits."""

    gamma: np.ndarray
    sigma2: np.ndarray
    rho: float = 0.4
    amplitude_A: np.ndarray | None = None
    beta: float = 10.0
    p_max: float = 20.0

    def __post_init__(self):
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        k = gamma.size
        sigma2 = np.broadcast_to(np.asarray(self.sigma2, dtype=float), (k,)).copy()
        amp = 1.0 if self.amplitude_A is None else self.amplitude_A
        amp = np.broadcast_to(np.asarray(amp, dtype=float), (k,)).copy()
        if np.any(gamma <= 0) or np.any(sigma2 <= 0) or np.any(amp <= 0) or self.rho <= 0:
            raise ValueError("targets, noise variances, amplitudes and rho must be positive")
        if not 0 < self.beta < self.p_max:
            raise ValueError("need 0 < beta < p_max")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "amplitude_A", amp)

    @classmethod
    def uniform(cls, k: int, target_snir_db: float = 15.0, noise_var: float = 1e-13,
                rho: float = 0.4, amplitude: float = 1.0, p_max: float = 20.0,
                beta: float | None = None) -> "DesignSpec":
        beta = p_max / 2 if beta is None else beta
        return cls(np.full(k, 10 ** (target_snir_db / 10)), np.full(k, noise_var),
                   rho, np.full(k, amplitude), beta, p_max)

    @property
    def k(self) -> int:
        return self.gamma.size

    @property
    def headroom_max(self) -> float:
        return min(self.beta, self.p_max - self.beta)

    def subset(self, users) -> "DesignSpec":
        users = np.asarray(users)
        return replace(self, gamma=self.gamma[users], sigma2=self.sigma2[users],
                       amplitude_A=self.amplitude_A[users])


@dataclass(frozen=True)
class DesignParams:
    """User-independent design settings; :meth:`spec` expands them for K users."""

    target_snir_db: float = 15.0
    noise_var: float = 1e-13
    amplitude: float = 1.0
    p_max: float = 20.0
    beta: float | None = None     # None: p_max / 2

    def spec(self, k: int, rho: float) -> DesignSpec:
        return DesignSpec.uniform(k, self.target_snir_db, self.noise_var, rho,
                                  self.amplitude, self.p_max, self.beta)


@dataclass
class DesignSettings:
    solver: SolverSettings = field(default_factory=SolverSettings)
    verify_tol: float = 1e-6
    rescale: bool = True


@dataclass
class DesignOutcome:
    status: DesignStatus
    W: np.ndarray | None          # L x K, column k is w_k
    v: float
    solver_stats: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == DesignStatus.OPTIMAL


def _vertex_sets(regions) -> list[np.ndarray]:
    out = []
    for reg in regions:
        if isinstance(reg, UncertaintyBox):
            v = enumerate_vertices(reg)
        else:
            v = np.atleast_2d(np.asarray(reg, dtype=float))
        if v.size == 0:
            raise ValueError("empty vertex set")
        out.append(unique_rows(v))
    return out


def build_program(spec: DesignSpec, vertex_sets, rescale: bool = True) -> ConeProgram:
    """Assemble the cone program for per-user vertex sets (each J_k x L)."""
    vsets = _vertex_sets(vertex_sets)
    K = spec.k
    if len(vsets) != K:
        raise ValueError(f"spec has {K} users but {len(vsets)} regions were given")
    L = vsets[0].shape[1]
    if any(v.shape[1] != L for v in vsets):
        raise ValueError("vertex sets disagree on the number of LEDs")
    if np.any(np.concatenate(vsets) < 0):
        raise ValueError("channel vertices must be nonnegative")

    hmax = max(float(v.max()) for v in vsets)
    scale = 1.0 / hmax if (rescale and hmax > 0) else 1.0
    vsets = [v * scale for v in vsets]
    sigma = np.sqrt(spec.sigma2) * scale
    rho = spec.rho

    KL = K * L
    n = 2 * KL + 1
    iv = 2 * KL
    wcol = lambda k: np.arange(k * L, (k + 1) * L)  # noqa: E731

    rows, cols, vals = [], [], []
    b = []

    def add(r, c, v):
        r, c, v = np.broadcast_arrays(np.atleast_1d(r), np.atleast_1d(c),
                                      np.atleast_1d(np.asarray(v, dtype=float)))
        rows.append(r)
        cols.append(c)
        vals.append(v)

    r = 0
    ar = np.arange(KL)
    # +-W[l,k] - t[l,k] <= 0
    add(r + ar, ar, 1.0); add(r + ar, KL + ar, -1.0); r += KL
    add(r + ar, ar, -1.0); add(r + ar, KL + ar, -1.0); r += KL
    b += [0.0] * (2 * KL)
    # sum_k A_k t[l,k] - v <= 0
    for l in range(L):
        add(np.full(K, r), KL + np.arange(K) * L + l, spec.amplitude_A)
        add(r, iv, -1.0)
        r += 1
    b += [0.0] * L
    # 0 <= v <= min(beta, P_max - beta)
    add(r, iv, -1.0); add(r + 1, iv, 1.0); r += 2
    b += [0.0, spec.headroom_max]
    # w_k^T h >= 0 at every vertex
    for k, V in enumerate(vsets):
        J = V.shape[0]
        add(np.repeat(r + np.arange(J), L), np.tile(wcol(k), J), -V.ravel())
        r += J
        b += [0.0] * J
    n_lin = r

    # SNIR cones
    coef = rho / np.sqrt(spec.gamma)
    others = [np.array([i for i in range(K) if i != k], dtype=int) for k in range(K)]
    for k, V in enumerate(vsets):
        J = V.shape[0]
        blk0 = r + np.arange(J) * (K + 1)
        add(np.repeat(blk0, L), np.tile(wcol(k), J), -coef[k] * V.ravel())
        for pos, i in enumerate(others[k]):
            add(np.repeat(blk0 + 2 + pos, L), np.tile(wcol(i), J), -rho * V.ravel())
        for _ in range(J):
            b += [0.0, sigma[k]] + [0.0] * (K - 1)
        r += J * (K + 1)

    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(r, n))
    c = np.zeros(n)
    c[iv] = 1.0
    n_soc = sum(v.shape[0] for v in vsets)
    cones = ((NONNEG, n_lin),) + ((SOC, K + 1),) * n_soc
    meta = {"K": K, "L": L, "scale": scale, "n_vertices": [v.shape[0] for v in vsets]}
    return ConeProgram(c=c, A=A, b=np.asarray(b), cones=cones, meta=meta)


def build_robust(spec: DesignSpec, regions, rescale: bool = True) -> ConeProgram:
    """Program whose SNIR cones cover every corner of every user's region."""
    return build_program(spec, regions, rescale)


def build_nonrobust(spec: DesignSpec, centroids, rescale: bool = True) -> ConeProgram:
    """Program that trusts the reported (reconstructed) channels as exact."""
    centroids = np.atleast_2d(np.asarray(centroids, dtype=float))
    if np.any(centroids < 0) or np.any(centroids.max(axis=1) <= 0):
        raise ValueError("reconstructed channels must be nonnegative and not all zero")
    return build_program(spec, [row[None, :] for row in centroids], rescale)


def check_constraints(spec: DesignSpec, vertex_sets, W: np.ndarray, v: float) -> dict:
    """Relative violation of each constraint family (0 means satisfied)."""
    vsets = _vertex_sets(vertex_sets)
    swing = np.abs(W) @ spec.amplitude_A
    out = {
        "snir": 0.0,
        "swing": float(max(0.0, (swing.max() - v) / max(1.0, v))),
        "headroom": float(max(0.0, -v, v - spec.headroom_max) / max(1.0, spec.headroom_max)),
        "sign": 0.0,
    }
    for k, V in enumerate(vsets):
        s = metrics.snir_many(V, W, k, spec.sigma2[k], spec.rho)
        out["snir"] = max(out["snir"], float(np.max(1.0 - s / spec.gamma[k])))
        proj = V @ W[:, k]
        scale = np.abs(V).max() * np.abs(W[:, k]).sum()
        out["sign"] = max(out["sign"], float(np.max(-proj) / scale) if scale > 0 else 0.0)
    return out


def design(spec: DesignSpec, channels, settings: DesignSettings | None = None) -> DesignOutcome:
    """Solve for the precoders.

    ``channels`` is either a K x L array of reconstructed channels (the
    non-robust design) or a sequence of K regions, given as
    :class:`UncertaintyBox` objects or explicit vertex arrays.
    """
    settings = settings or DesignSettings()
    if isinstance(channels, np.ndarray) and channels.ndim == 2:
        prog = build_nonrobust(spec, channels, settings.rescale)
        vsets = [row[None, :] for row in channels]
    else:
        vsets = _vertex_sets(channels)
        prog = build_robust(spec, vsets, settings.rescale)
    K, L = prog.meta["K"], prog.meta["L"]
    res = solve(prog, settings.solver)
    stats = {
        "solver_status": res.status.value,
        "iterations": res.iterations,
        **{f"residual_{k}": v for k, v in res.residuals.items()},
        "n_variables": prog.shape[1],
        "n_rows": prog.shape[0],
        "n_cones": len(prog.soc_dims),
    }
    if res.status == Status.PRIMAL_INFEASIBLE:
        stats["certificate_residual"] = res.certificate_residual
        return DesignOutcome(DesignStatus.INFEASIBLE, None, np.nan, stats)
    if res.status != Status.OPTIMAL:
        return DesignOutcome(DesignStatus.NUMERICAL_FAILURE, None, np.nan, stats)

    W = res.x[:K * L].reshape(K, L).T.copy()
    v = float(res.x[-1])
    viol = check_constraints(spec, vsets, W, v)
    status = DesignStatus.OPTIMAL
    if max(viol.values()) > settings.verify_tol:
        status = DesignStatus.NUMERICAL_FAILURE
    return DesignOutcome(status, W, v, stats, viol)


def normalize_sign(outcome: DesignOutcome, regions) -> DesignOutcome:
    """Flip any column w_k with negative response at its region's first vertex.

    Power and SNIR see w_k only through |w_k^T h| and |W[l, k]|, so a flip
    changes neither the headroom nor any SNIR.
    """
    if not outcome.feasible:
        raise ValueError("only optimal outcomes can be sign-normalized")
    vsets = _vertex_sets(regions)
    W = outcome.W.copy()
    for k, V in enumerate(vsets):
        if V[0] @ W[:, k] < 0:
            W[:, k] = -W[:, k]
    return replace(outcome, W=W)
