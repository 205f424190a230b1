"""Plain-text dump of a cone program, for debugging against other solvers.

Layout (whitespace separated, ``#`` starts a comment)::

    m n nnz
    cones <count>
    nonneg 12
    soc 3
    ...
    c
    <n values>
    b
    <m values>
    A
    <nnz lines: row col value>   (0-based)
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .cone import ConeProgram


def write_program(prog: ConeProgram, path) -> None:
    A = prog.A.tocoo()
    m, n = A.shape
    lines = [f"{m} {n} {A.nnz}", f"cones {len(prog.cones)}"]
    lines += [f"{kind} {size}" for kind, size in prog.cones]
    lines.append("c")
    lines += [repr(float(v)) for v in prog.c]
    lines.append("b")
    lines += [repr(float(v)) for v in prog.b]
    lines.append("A")
    lines += [f"{i} {j} {float(v)!r}" for i, j, v in zip(A.row, A.col, A.data)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_program(path) -> ConeProgram:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    it = iter(tokens)

    def expect(word):
        got = next(it)
        if got != word:
            raise ValueError(f"expected {word!r}, found {got!r}")

    m, n, nnz = int(next(it)), int(next(it)), int(next(it))
    expect("cones")
    cones = [(next(it), int(next(it))) for _ in range(int(next(it)))]
    expect("c")
    c = np.array([float(next(it)) for _ in range(n)])
    expect("b")
    b = np.array([float(next(it)) for _ in range(m)])
    expect("A")
    rows, cols, vals = [], [], []
    for _ in range(nnz):
        rows.append(int(next(it)))
        cols.append(int(next(it)))
        vals.append(float(next(it)))
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    return ConeProgram(c=c, A=A, b=b, cones=tuple(cones))
