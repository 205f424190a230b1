"""Cone programs in inequality form and the algebra of their cones.

A program is

    minimize    c^T x
    subject to  A x + s = b,   s in K

where K is a Cartesian product of nonnegative orthants and second-order
cones, listed in row order by ``cones``.  A second-order cone block of
dimension d holds vectors (u0, u1) with ||u1|| <= u0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

NONNEG = "nonneg"
SOC = "soc"


@dataclass(frozen=True)
class ConeProgram:
    """Linear objective, inequality constraints and the cone they live in.

    ``cones`` is an ordered list of ``("nonneg", count)`` and ``("soc", dim)``
    blocks whose sizes sum to the number of rows of ``A``.
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    cones: tuple[tuple[str, int], ...]
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        A = sp.csr_matrix(self.A, dtype=float)
        cones = tuple((str(kind), int(size)) for kind, size in self.cones)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "cones", cones)
        m, n = A.shape
        if c.shape != (n,):
            raise ValueError(f"objective has length {c.size}, A has {n} columns")
        if b.shape != (m,):
            raise ValueError(f"rhs has length {b.size}, A has {m} rows")
        total = 0
        for kind, size in cones:
            if kind == NONNEG:
                if size < 0:
                    raise ValueError("nonneg block with negative size")
            elif kind == SOC:
                if size < 2:
                    raise ValueError(f"second-order cone of dimension {size} < 2")
            else:
                raise ValueError(f"unknown cone kind {kind!r}")
            total += size
        if total != m:
            raise ValueError(f"cone blocks cover {total} rows, A has {m}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def n_nonneg(self) -> int:
        return sum(size for kind, size in self.cones if kind == NONNEG)

    @property
    def soc_dims(self) -> list[int]:
        return [size for kind, size in self.cones if kind == SOC]

    def layout(self) -> "ConeLayout":
        return ConeLayout.from_cones(self.cones)


def _as_slice(idx: np.ndarray):
    if idx.size and np.array_equal(idx, np.arange(idx[0], idx[0] + idx.size)):
        return slice(int(idx[0]), int(idx[0]) + idx.size)
    return idx


class ConeLayout:
    """Row indices of a cone product, with SOC blocks grouped by dimension.

    Grouping lets every cone operation run as one batched numpy call per
    distinct SOC dimension.
    """

    def __init__(self, m: int, nonneg: np.ndarray, soc: dict[int, np.ndarray]):
        self.m = m
        self.nonneg = nonneg
        self.soc = soc
        # contiguous row ranges become slices, so blocks are reshaped views
        self._nn_rows = _as_slice(nonneg.ravel())
        self._soc_rows = {d: _as_slice(idx.ravel()) for d, idx in soc.items()}

    def block(self, u: np.ndarray, dim: int) -> np.ndarray:
        """Rows of the dim-``dim`` SOC blocks of ``u`` as (nb, dim, ...)."""
        nb = self.soc[dim].shape[0]
        return u[self._soc_rows[dim]].reshape((nb, dim) + u.shape[1:])

    def set_block(self, out: np.ndarray, dim: int, val: np.ndarray) -> None:
        out[self._soc_rows[dim]] = val.reshape((-1,) + out.shape[1:])

    def nonneg_part(self, u: np.ndarray) -> np.ndarray:
        return u[self._nn_rows]

    @classmethod
    def from_cones(cls, cones: Sequence[tuple[str, int]]) -> "ConeLayout":
        nonneg: list[int] = []
        soc: dict[int, list[np.ndarray]] = {}
        row = 0
        for kind, size in cones:
            rows = np.arange(row, row + size)
            if kind == NONNEG:
                nonneg.extend(rows)
            else:
                soc.setdefault(size, []).append(rows)
            row += size
        return cls(
            row,
            np.asarray(nonneg, dtype=np.intp),
            {d: np.vstack(blocks) for d, blocks in sorted(soc.items())},
        )

    @property
    def degree(self) -> int:
        return self.nonneg.size + sum(idx.shape[0] for idx in self.soc.values())

    def identity(self) -> np.ndarray:
        e = np.zeros(self.m)
        e[self.nonneg] = 1.0
        for idx in self.soc.values():
            e[idx[:, 0]] = 1.0
        return e

    # -- Jordan algebra ------------------------------------------------------

    def min_eig(self, u: np.ndarray) -> float:
        """Smallest Jordan eigenvalue of ``u`` (``u`` is in K iff this is >= 0)."""
        vals = [np.inf]
        if self.nonneg.size:
            vals.append(u[self.nonneg].min())
        for idx in self.soc.values():
            blk = u[idx]
            vals.append((blk[:, 0] - np.linalg.norm(blk[:, 1:], axis=1)).min())
        return float(min(vals))

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Jordan product u o v."""
        out = np.empty(self.m)
        out[self.nonneg] = u[self.nonneg] * v[self.nonneg]
        for idx in self.soc.values():
            ub, vb = u[idx], v[idx]
            out[idx[:, 0]] = np.einsum("ij,ij->i", ub, vb)
            out[idx[:, 1:]] = ub[:, :1] * vb[:, 1:] + vb[:, :1] * ub[:, 1:]
        return out

    def divide(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Solve lam o u = d for u (``lam`` in the interior of K)."""
        out = np.empty(self.m)
        out[self.nonneg] = d[self.nonneg] / lam[self.nonneg]
        for idx in self.soc.values():
            lb, db = lam[idx], d[idx]
            l0, l1 = lb[:, 0], lb[:, 1:]
            det = _jdet(lb)
            u0 = (l0 * db[:, 0] - np.einsum("ij,ij->i", l1, db[:, 1:])) / det
            out[idx[:, 0]] = u0
            out[idx[:, 1:]] = (db[:, 1:] - u0[:, None] * l1) / l0[:, None]
        return out

    def max_step(self, lam: np.ndarray, d: np.ndarray) -> float:
        """Largest t with lam + t*d in K; ``inf`` when unbounded."""
        worst = 0.0
        if self.nonneg.size:
            worst = max(worst, float(np.max(-d[self.nonneg] / lam[self.nonneg])))
        for idx in self.soc.values():
            lb, db = lam[idx], d[idx]
            nrm = np.sqrt(_jdet(lb))
            lbar = lb / nrm[:, None]
            rho0 = lbar[:, 0] * db[:, 0] - np.einsum("ij,ij->i", lbar[:, 1:], db[:, 1:])
            coef = (rho0 + db[:, 0]) / (lbar[:, 0] + 1.0)
            rho1 = db[:, 1:] - coef[:, None] * lbar[:, 1:]
            t = (np.linalg.norm(rho1, axis=1) - rho0) / nrm
            worst = max(worst, float(t.max()))
        return np.inf if worst <= 0.0 else 1.0 / worst


def _jdet(blk: np.ndarray) -> np.ndarray:
    """u0^2 - ||u1||^2 per row, factored to limit cancellation."""
    r = np.linalg.norm(blk[:, 1:], axis=1)
    return (blk[:, 0] - r) * (blk[:, 0] + r)


class NTScaling:
    """Nesterov-Todd scaling W with W z = W^{-1} s = lambda.

    For the orthant W is diagonal, sqrt(s/z).  For a second-order cone
    block W = beta * (2 v v^T - J) with J = diag(1, -1, ..., -1), which is
    symmetric; its inverse is (2 J v v^T J - J) / beta.
    """

    def __init__(self, layout: ConeLayout, s: np.ndarray, z: np.ndarray):
        self.layout = layout
        nn = layout.nonneg
        self.d = np.sqrt(s[nn] / z[nn])
        self.blocks = {}
        for dim, idx in layout.soc.items():
            sb, zb = s[idx], z[idx]
            sn = np.sqrt(_jdet(sb))
            zn = np.sqrt(_jdet(zb))
            sbar = sb / sn[:, None]
            zbar = zb / zn[:, None]
            gamma = np.sqrt((1.0 + np.einsum("ij,ij->i", sbar, zbar)) / 2.0)
            wbar = sbar.copy()
            wbar[:, 0] += zbar[:, 0]
            wbar[:, 1:] -= zbar[:, 1:]
            wbar /= (2.0 * gamma)[:, None]
            v = wbar.copy()
            v[:, 0] += 1.0
            v /= np.sqrt(2.0 * v[:, 0])[:, None]
            beta = np.sqrt(sn / zn)
            jv = v.copy()
            jv[:, 1:] *= -1.0
            sign = np.ones(dim)
            sign[1:] = -1.0
            # W u = 2 beta v (v^T u) - beta J u, and the inverse with J v, 1/beta
            fwd = (v, 2.0 * beta[:, None] * v, beta[:, None] * sign)
            inv = (jv, 2.0 / beta[:, None] * jv, sign / beta[:, None])
            self.blocks[dim] = (fwd, inv)

    def apply(self, u: np.ndarray, inverse: bool = False) -> np.ndarray:
        """W u (or W^{-1} u); ``u`` may be a vector or an (m, p) matrix."""
        lay = self.layout
        out = np.empty_like(u)
        scale = 1.0 / self.d if inverse else self.d
        out[lay._nn_rows] = scale.reshape((-1,) + (1,) * (u.ndim - 1)) * lay.nonneg_part(u)
        for dim, (fwd, inv) in self.blocks.items():
            vec, two_bv, bj = inv if inverse else fwd
            blk = lay.block(u, dim)  # (nb, dim) or (nb, dim, p)
            if u.ndim == 1:
                res = two_bv * np.einsum("ij,ij->i", vec, blk)[:, None] - bj * blk
            else:
                proj = np.einsum("ij,ijk->ik", vec, blk)
                res = two_bv[:, :, None] * proj[:, None, :] - bj[:, :, None] * blk
            lay.set_block(out, dim, res)
        return out
