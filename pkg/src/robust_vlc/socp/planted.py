"""Random cone programs with a known answer.

``planted_optimal`` picks a primal-dual pair (x*, s*, z*) with s*, z* in the
cone and s*^T z* = 0, then builds b = A x* + s* and c = -A^T z*.  The pair
satisfies the KKT conditions, so c^T x* is the optimal value.

``planted_infeasible`` builds A, b around a ray z in the cone with
A^T z = 0 and b^T z = -1, which is a Farkas certificate of primal
infeasibility.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .cone import NONNEG, SOC, ConeLayout, ConeProgram


def random_cones(rng: np.random.Generator, n_nonneg=(2, 10), n_soc=(1, 6), soc_dim=(2, 6)):
    cones = [(NONNEG, int(rng.integers(*n_nonneg)))]
    for _ in range(int(rng.integers(*n_soc))):
        cones.append((SOC, int(rng.integers(*soc_dim))))
    rng.shuffle(cones)
    return cones


def _complementary_pair(rng, cones):
    s, z = [], []
    for kind, size in cones:
        if kind == NONNEG:
            active = rng.random(size) < 0.5
            s.append(np.where(active, 0.0, rng.uniform(0.5, 2.0, size)))
            z.append(np.where(active, rng.uniform(0.5, 2.0, size), 0.0))
            continue
        mode = rng.integers(3)
        if mode == 0:  # both on the boundary, opposite rays
            u = rng.normal(size=size - 1)
            u /= np.linalg.norm(u)
            r, q = rng.uniform(0.5, 2.0, 2)
            s.append(np.concatenate([[r], r * u]))
            z.append(np.concatenate([[q], -q * u]))
        else:  # one strictly interior, the other zero
            t = rng.normal(size=size - 1)
            inner = np.concatenate([[np.linalg.norm(t) + rng.uniform(0.5, 2.0)], t])
            if mode == 1:
                s.append(inner)
                z.append(np.zeros(size))
            else:
                s.append(np.zeros(size))
                z.append(inner)
    return np.concatenate(s), np.concatenate(z)


def planted_optimal(rng: np.random.Generator, n: int | None = None, cones=None):
    """Return ``(program, x_star, optimal_value)``."""
    cones = cones or random_cones(rng)
    m = sum(size for _, size in cones)
    n = n or int(rng.integers(2, max(3, m // 2 + 1)))
    n = min(n, m)
    A = rng.normal(size=(m, n))
    x = rng.normal(size=n)
    s, z = _complementary_pair(rng, cones)
    b = A @ x + s
    c = -A.T @ z
    prog = ConeProgram(c=c, A=sp.csr_matrix(A), b=b, cones=tuple(cones))
    return prog, x, float(c @ x)


def planted_infeasible(rng: np.random.Generator, n: int | None = None, cones=None):
    """Return ``(program, farkas_ray)`` for a primal-infeasible program."""
    cones = cones or random_cones(rng)
    lay = ConeLayout.from_cones(cones)
    m = lay.m
    n = n or int(rng.integers(2, max(3, m // 2 + 1)))
    n = min(n, m - 1)
    z = rng.normal(size=m)
    z += (1.0 - lay.min_eig(z)) * lay.identity()
    A = rng.normal(size=(m, n))
    A -= np.outer(z, z @ A) / (z @ z)
    b = rng.normal(size=m)
    b -= z * (z @ b + 1.0) / (z @ z)
    prog = ConeProgram(c=rng.normal(size=n), A=sp.csr_matrix(A), b=b, cones=tuple(cones))
    return prog, z
