"""Rectangular uncertainty regions around scalar-quantized channels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantizer import QuantizerConfig, cell_bounds_linear


@dataclass(frozen=True)
class UncertaintyBox:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=float).ravel()
        hi = np.array(self.hi, dtype=float).ravel()
        if lo.shape != hi.shape:
            raise ValueError("box bounds differ in length")
        if np.any(lo < 0) or np.any(lo > hi):
            raise ValueError("box needs 0 <= lo <= hi componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    def contains(self, h, tol: float = 0.0) -> np.ndarray:
        h = np.atleast_2d(h)
        return np.all((h >= self.lo - tol) & (h <= self.hi + tol), axis=-1)


def box_from_quantized(indices, q: QuantizerConfig, floor_zero: bool = False) -> UncertaintyBox:
    """Box of all channels consistent with one user's reported cell indices.

    With ``floor_zero`` the lowest cell extends down to 0, so the box is the
    full preimage of the quantizer (zero and below-range gains also map to
    cell 0).
    """
    idx = np.asarray(indices, dtype=np.int64).ravel()
    lo, hi = cell_bounds_linear(idx, q)
    lo = np.array(lo, dtype=float)
    if floor_zero:
        lo[idx == 0] = 0.0
    return UncertaintyBox(lo, np.asarray(hi, dtype=float))


def enumerate_vertices(box: UncertaintyBox) -> np.ndarray:
    """All 2^L corners, ordered as a binary counter with component 0 most significant."""
    L = box.dim
    j = np.arange(2**L)[:, None]
    bits = (j >> np.arange(L - 1, -1, -1)[None, :]) & 1
    return np.where(bits == 1, box.hi[None, :], box.lo[None, :])


def unique_rows(v: np.ndarray) -> np.ndarray:
    """Drop repeated rows, keeping first occurrences in order."""
    _, first = np.unique(v, axis=0, return_index=True)
    return v[np.sort(first)]


def sample_in_box(box: UncertaintyBox, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 0:
        raise ValueError("sample count must be nonnegative")
    u = rng.random((n, box.dim))
    return box.lo + u * (box.hi - box.lo)
