"""Primal-dual interior point method for :class:`ConeProgram`.

The iteration runs on the homogeneous self-dual embedding

    0 = A^T z + c tau,    s = -A x + b tau,    kappa = -c^T x - b^T z,

with Nesterov-Todd scaling and a Mehrotra predictor-corrector step.  An
optimal pair is recovered as (x, s, z) / tau; when tau vanishes the
iterate carries a Farkas ray certifying primal or dual infeasibility.
Newton systems are reduced to the dense normal matrix (W^{-1} A)^T (W^{-1} A),
factorized through a QR decomposition of W^{-1} A, followed by iterative
refinement on the full KKT system.  The data are equilibrated first; all
stopping tests are evaluated on the original, unscaled program.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .cone import NONNEG, ConeLayout, ConeProgram, NTScaling

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    MAX_ITERATIONS = "MaxIterations"


@dataclass
class SolverSettings:
    tol: float = 1e-8
    max_iter: int = 100
    step_fraction: float = 0.99
    refine_steps: int = 2
    presolve: bool = True
    verbose: bool = False


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    objective_value: float
    dual_objective: float
    residuals: dict
    iterations: int
    certificate: np.ndarray | None = None
    certificate_residual: float = np.nan
    diagnostics: dict = field(default_factory=dict)

    @property
    def primal_x(self) -> np.ndarray:
        return self.x


@dataclass
class _Reduced:
    """Program after presolve; ``keep`` maps reduced rows to original rows."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    cones: list
    keep: np.ndarray


def presolve(prog: ConeProgram) -> _Reduced:
    """Drop zero rows and duplicate rows of the nonnegative blocks.

    A zero row with nonnegative rhs is redundant.  Among identical rows only
    the tightest (smallest rhs) is kept; dropped rows get a zero dual.  Rows
    inside second-order cones are never touched.
    """
    A = prog.A.toarray()
    b = prog.b
    m = A.shape[0]
    nn = prog.layout().nonneg
    drop = np.zeros(m, dtype=bool)
    if nn.size:
        rows = A[nn]
        zero = ~rows.any(axis=1) & (b[nn] >= 0)
        drop[nn[zero]] = True
        best: dict[bytes, int] = {}
        for i, r in zip(nn[~zero], rows[~zero]):
            key = r.tobytes()
            j = best.get(key)
            if j is None:
                best[key] = i
            elif b[i] < b[j]:
                drop[j] = True
                best[key] = i
            else:
                drop[i] = True

    cones = []
    row = 0
    for kind, size in prog.cones:
        if kind == NONNEG:
            kept = int((~drop[row:row + size]).sum())
            if kept:
                cones.append((NONNEG, kept))
        else:
            cones.append((kind, size))
        row += size
    keep = np.flatnonzero(~drop)
    return _Reduced(A[keep], b[keep], prog.c.copy(), cones, keep)


def equilibrate(A: np.ndarray, lay: ConeLayout, passes: int = 10):
    """Ruiz scaling: returns (E A D, d, e) with row scales ``e``, column scales ``d``.

    Rows of one second-order cone share a single scale so the cone is kept.
    """
    m, n = A.shape
    d, e = np.ones(n), np.ones(m)
    M = A.copy()
    for _ in range(passes):
        rn = np.abs(M).max(axis=1) if n else np.ones(m)
        for idx in lay.soc.values():
            rn[idx] = rn[idx].max(axis=1, keepdims=True)
        cn = np.abs(M).max(axis=0) if m else np.ones(n)
        rs = 1.0 / np.sqrt(np.where(rn > 0, rn, 1.0))
        cs = 1.0 / np.sqrt(np.where(cn > 0, cn, 1.0))
        M = rs[:, None] * M * cs[None, :]
        e *= rs
        d *= cs
    return M, d, e


def conditioning(A: np.ndarray) -> dict:
    """Cheap diagnostics on the scaling of the constraint matrix."""
    rn = np.linalg.norm(A, axis=1)
    cn = np.linalg.norm(A, axis=0)
    rn, cn = rn[rn > 0], cn[cn > 0]
    return {
        "row_norm_ratio": float(rn.max() / rn.min()) if rn.size else 1.0,
        "col_norm_ratio": float(cn.max() / cn.min()) if cn.size else 1.0,
        "max_abs_entry": float(np.abs(A).max()) if A.size else 0.0,
    }


class _KKT:
    """Factorization of [[0, A^T], [A, -W^2]] for one NT scaling."""

    def __init__(self, A: np.ndarray, W: NTScaling, refine: int):
        self.A = A
        self.W = W
        self.refine = refine
        self.At = W.apply(A, inverse=True)  # W^{-1} A
        # R from a QR of W^{-1} A gives the normal matrix R^T R without
        # squaring the condition number of W^{-1} A
        R = sla.qr(self.At, mode="r", check_finite=False)[0][: A.shape[1]]
        d = np.abs(np.diag(R))
        tiny = d <= 1e-13 * max(d.max(initial=0.0), 1.0)
        if tiny.any():
            R = R.copy()
            R[tiny, tiny] = 1e-13 * max(d.max(initial=0.0), 1.0)
        self.R = R

    def _normal(self, rhs):
        return sla.cho_solve((self.R, False), rhs, check_finite=False)

    def _solve_once(self, r1, r2):
        Winv_r2 = self.W.apply(r2, inverse=True)
        x = self._normal(r1 + self.At.T @ Winv_r2)
        z = self.W.apply(self.At @ x - Winv_r2, inverse=True)
        return x, z

    def solve(self, r1: np.ndarray, r2: np.ndarray):
        x, z = self._solve_once(r1, r2)
        rnorm = np.linalg.norm(r1) + np.linalg.norm(r2)
        for _ in range(self.refine):
            e1 = r1 - self.A.T @ z
            e2 = r2 - (self.A @ x - self.W.apply(self.W.apply(z)))
            if np.linalg.norm(e1) + np.linalg.norm(e2) <= 1e-15 * rnorm:
                break
            dx, dz = self._solve_once(e1, e2)
            x += dx
            z += dz
        return x, z


def _initial_point(A, b, c, lay: ConeLayout):
    m, n = A.shape
    # least-squares primal and least-norm dual starts
    if n:
        x, *_ = np.linalg.lstsq(A, b, rcond=None)
        z, *_ = np.linalg.lstsq(A.T, -c, rcond=None)
    else:
        x = np.zeros(0)
        z = np.zeros(m)
    s = b - A @ x
    e = lay.identity()
    for v in (s, z):
        shift = -lay.min_eig(v)
        if shift >= -1e-8 * max(np.linalg.norm(v), 1.0):
            v += (1.0 + shift) * e
    return x, s, z


def solve(prog: ConeProgram, settings: SolverSettings | None = None) -> SolveResult:
    """Solve a cone program; see :class:`Status` for the possible outcomes."""
    settings = settings or SolverSettings()
    m0, n = prog.shape
    if settings.presolve:
        red = presolve(prog)
    else:
        red = _Reduced(prog.A.toarray(), prog.b.copy(), prog.c.copy(),
                       list(prog.cones), np.arange(m0))
    lay = ConeLayout.from_cones(red.cones)
    A0, b0, c0 = red.A, red.b, red.c
    A, dcol, erow = equilibrate(A0, lay)
    b, c = erow * b0, dcol * c0
    m = A.shape[0]
    diag = conditioning(A0)
    diag["rows_removed"] = int(m0 - m)

    tol = settings.tol
    nu = lay.degree
    bnorm = float(np.linalg.norm(b0))
    cnorm = float(np.linalg.norm(c0))

    x, s, z = _initial_point(A, b, c, lay)
    tau = kappa = 1.0
    status = Status.MAX_ITERATIONS
    cert = None
    cert_res = np.nan
    it = 0
    res = {}
    best = None
    stall = 0

    for it in range(settings.max_iter + 1):
        rx = A.T @ z + c * tau
        rz = A @ x + s - b * tau
        cx, bz = float(c @ x), float(b @ z)
        rt = kappa + cx + bz
        sz = float(s @ z)
        mu = (sz + tau * kappa) / (nu + 1)

        # stopping tests on the unscaled program, residuals relative to the
        # data and the iterate as in common conic interior point codes
        xo, so, zo = dcol * x, s / erow, erow * z
        Atz = A0.T @ zo
        pcost, dcost = cx / tau, -bz / tau
        pres = np.linalg.norm(rz / erow) / max(1.0, bnorm + (np.linalg.norm(xo) + np.linalg.norm(so)) / tau) / tau
        dres = np.linalg.norm(rx / dcol) / max(1.0, cnorm + np.linalg.norm(Atz) / tau) / tau
        gap = sz / tau**2
        relgap = gap / max(abs(pcost), abs(dcost)) if min(abs(pcost), abs(dcost)) > 0 else np.inf
        cur = {"primal": float(pres), "dual": float(dres), "gap": float(min(gap, relgap))}
        if settings.verbose:
            log.info("%3d pcost=% .8e dcost=% .8e pres=%.2e dres=%.2e gap=%.2e tau=%.2e kap=%.2e",
                     it, pcost, dcost, pres, dres, gap, tau, kappa)

        if max(cur.values()) <= tol:
            status, res = Status.OPTIMAL, cur
            break
        # remember the most accurate iterate; near the boundary the Newton
        # systems lose accuracy and residuals can start to grow again
        merit = max(cur.values())
        if best is None or merit < best[0]:
            best = (merit, x.copy(), s.copy(), z.copy(), tau, cur)
            stall = 0
        elif best[0] < 1e3 * tol:
            stall += 1
            if stall >= 5:
                break
        if bz < 0:
            r = np.linalg.norm(Atz) / -bz
            if r <= tol:
                status, cert, cert_res = Status.PRIMAL_INFEASIBLE, zo / -bz, float(r)
                break
        if cx < 0:
            r = np.linalg.norm(A0 @ xo + so) / -cx
            if r <= tol:
                status, cert, cert_res = Status.DUAL_INFEASIBLE, xo / -cx, float(r)
                break
        if it == settings.max_iter:
            break

        try:
            W = NTScaling(lay, s, z)
            lam = W.apply(z)
            kkt = _KKT(A, W, settings.refine_steps)
        except (FloatingPointError, ValueError, np.linalg.LinAlgError):
            break
        if not np.all(np.isfinite(lam)):
            break
        x1, z1 = kkt.solve(-c, b)
        denom_base = float(c @ x1 + b @ z1)

        def direction(sigma, ds_target, dtk):
            u = lay.divide(lam, ds_target)
            r1 = -(1.0 - sigma) * rx
            r2 = -(1.0 - sigma) * rz - W.apply(u)
            rtt = -(1.0 - sigma) * rt
            x2, z2 = kkt.solve(r1, r2)
            dtau = (rtt - dtk / tau - c @ x2 - b @ z2) / (denom_base - kappa / tau)
            dx = x2 + dtau * x1
            dz = z2 + dtau * z1
            dz_s = W.apply(dz)          # W dz
            ds_s = u - dz_s             # W^{-1} ds
            dkap = (dtk - kappa * dtau) / tau
            return dx, dz, ds_s, dz_s, dtau, dkap

        def step_length(ds_s, dz_s, dtau, dkap):
            a = min(lay.max_step(lam, ds_s), lay.max_step(lam, dz_s))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkap < 0:
                a = min(a, -kappa / dkap)
            return a

        # predictor
        lamsq = lay.product(lam, lam)
        _, _, ds_a, dz_a, dtau_a, dkap_a = direction(0.0, -lamsq, -tau * kappa)
        alpha_a = min(1.0, step_length(ds_a, dz_a, dtau_a, dkap_a))
        sigma = float(np.clip((1.0 - alpha_a) ** 3, 0.0, 1.0))

        # corrector
        e = lay.identity()
        target = -lamsq - lay.product(ds_a, dz_a) + sigma * mu * e
        dtk = -tau * kappa - dtau_a * dkap_a + sigma * mu
        dx, dz, ds_s, dz_s, dtau, dkap = direction(sigma, target, dtk)
        alpha = min(1.0, settings.step_fraction * step_length(ds_s, dz_s, dtau, dkap))

        ds = W.apply(ds_s)
        x = x + alpha * dx
        s = s + alpha * ds
        z = z + alpha * dz
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkap
        if not (np.all(np.isfinite(x)) and np.isfinite(tau)) or lay.min_eig(s) <= 0 or lay.min_eig(z) <= 0:
            break

    if status == Status.MAX_ITERATIONS and best is not None:
        _, x, s, z, tau, res = best

    # undo the equilibration and map reduced rows back to original rows
    x, z = dcol * x, erow * z
    z_full = np.zeros(m0)
    if status == Status.PRIMAL_INFEASIBLE:
        z_full[red.keep] = cert
        cert = z_full
        xo = x / tau
        s_full = prog.b - prog.A @ xo
    elif status == Status.DUAL_INFEASIBLE:
        z_full[red.keep] = z / tau
        xo = cert
        s_full = -(prog.A @ xo)
    else:
        z_full[red.keep] = z / tau
        xo = x / tau
        s_full = prog.b - prog.A @ xo
    return SolveResult(
        status=status,
        x=xo,
        s=s_full,
        z=z_full,
        objective_value=float(prog.c @ xo),
        dual_objective=float(-prog.b @ z_full),
        residuals=res,
        iterations=it,
        certificate=cert,
        certificate_residual=cert_res,
        diagnostics=diag,
    )
