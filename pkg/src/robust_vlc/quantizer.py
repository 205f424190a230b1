"""Uniform scalar quantization of channel gains in the dB domain.

Cells are half-open in dB, [min + i*step, min + (i+1)*step), with the last
cell closed at ``max_db``.  Decisions are taken against the linear cell
edges themselves, so ``cell_bounds_linear(quantize(h))`` always brackets
the clamped gain exactly, with no rounding slack.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .channel import OpticalParams, gain_matrix
from .scenario import RoomConfig, place_leds, sample_users


class CalibrationError(ValueError):
    """Sampled gains do not define a usable dynamic range."""


@dataclass(frozen=True)
class QuantizerConfig:
    bits_B: int
    min_db: float
    max_db: float
    db_factor: float = 10.0   # 10*log10 of the gain; 20 treats it as an amplitude

    def __post_init__(self):
        if int(self.bits_B) != self.bits_B or self.bits_B < 1:
            raise ValueError("quantizer needs at least one bit")
        if not self.min_db < self.max_db:
            raise ValueError(f"degenerate quantizer range [{self.min_db}, {self.max_db}] dB")

    @property
    def levels(self) -> int:
        return 2 ** int(self.bits_B)

    @property
    def step_db(self) -> float:
        return (self.max_db - self.min_db) / self.levels

    def edge_db(self, i):
        i = np.asarray(i)
        return np.where(i >= self.levels, self.max_db, self.min_db + i * self.step_db)

    def edge_linear(self, i):
        return 10.0 ** (self.edge_db(i) / self.db_factor)

    def to_db(self, h):
        with np.errstate(divide="ignore"):
            return self.db_factor * np.log10(h)


def quantize_array(h, q: QuantizerConfig) -> np.ndarray:
    """Vectorized :func:`quantize`; nonpositive gains fall in cell 0."""
    h = np.asarray(h, dtype=float)
    n = q.levels
    pos = h > 0
    hdb = np.where(pos, q.to_db(np.where(pos, h, 1.0)), -np.inf)
    guess = np.floor((hdb - q.min_db) / q.step_db)
    idx = np.clip(np.nan_to_num(guess, neginf=0, posinf=n - 1), 0, n - 1).astype(np.int64)
    # settle against the exact linear edges
    for _ in range(4):
        down = (idx > 0) & (h < q.edge_linear(idx))
        up = (idx < n - 1) & (h >= q.edge_linear(idx + 1))
        if not (down.any() or up.any()):
            break
        idx = idx - down + up
    return idx


def quantize(h: float, q: QuantizerConfig) -> int:
    return int(quantize_array(h, q))


def cell_bounds_linear(index, q: QuantizerConfig) -> tuple:
    """Linear-domain bounds (lo, hi) of cell ``index`` (scalar or array)."""
    idx = np.asarray(index)
    if np.any(idx < 0) or np.any(idx >= q.levels):
        raise IndexError(f"cell index out of range [0, {q.levels})")
    lo, hi = q.edge_linear(idx), q.edge_linear(idx + 1)
    if idx.ndim == 0:
        return float(lo), float(hi)
    return lo, hi


def centroid_linear(index, q: QuantizerConfig, floor_zero: bool = False):
    """Reconstruction value: the linear gain at the cell's dB midpoint.

    With ``floor_zero`` cell 0 stands for [0, first edge) and is
    reconstructed as 0; out-of-view zeros dominate that cell.
    """
    idx = np.asarray(index)
    if np.any(idx < 0) or np.any(idx >= q.levels):
        raise IndexError(f"cell index out of range [0, {q.levels})")
    mid = q.min_db + (idx + 0.5) * q.step_db
    out = 10.0 ** (mid / q.db_factor)
    if floor_zero:
        out = np.where(idx == 0, 0.0, out)
    return float(out) if idx.ndim == 0 else out


@dataclass(frozen=True)
class DynamicRange:
    min_db: float
    max_db: float
    draws: int
    seed: int | None = None
    db_factor: float = 10.0

    def quantizer(self, bits: int) -> QuantizerConfig:
        return QuantizerConfig(bits, self.min_db, self.max_db, self.db_factor)


def range_from_gains(gains, db_factor: float = 10.0) -> tuple[float, float]:
    """(min_db, max_db) over the strictly positive entries of ``gains``."""
    g = np.asarray(gains, dtype=float).ravel()
    g = g[g > 0]
    if g.size == 0:
        raise CalibrationError("all sampled gains are zero")
    lo, hi = db_factor * np.log10(g.min()), db_factor * np.log10(g.max())
    if not lo < hi:
        raise CalibrationError(f"degenerate dynamic range: {lo} dB to {hi} dB")
    return float(lo), float(hi)


def calibrate(room: RoomConfig, params: OpticalParams, draws: int,
              rng: np.random.Generator, leds: np.ndarray | None = None,
              db_factor: float = 10.0, chunk: int = 100_000) -> DynamicRange:
    """Dynamic range of the quantizer from ``draws`` random user positions.

    Each draw places one photodiode and contributes its gains to every LED.
    """
    if draws < 1:
        raise ValueError("need at least one draw")
    leds = place_leds(room, 6) if leds is None else np.asarray(leds, dtype=float)
    lo, hi = np.inf, -np.inf
    done = 0
    while done < draws:
        n = min(chunk, draws - done)
        h = gain_matrix(leds, sample_users(room, n, rng), params)
        h = h[h > 0]
        if h.size:
            lo, hi = min(lo, h.min()), max(hi, h.max())
        done += n
    if not np.isfinite(lo):
        raise CalibrationError("all sampled gains are zero")
    min_db, max_db = db_factor * np.log10(lo), db_factor * np.log10(hi)
    if not min_db < max_db:
        raise CalibrationError(f"degenerate dynamic range: {min_db} dB to {max_db} dB")
    return DynamicRange(float(min_db), float(max_db), draws, None, db_factor)


def calibration_key(room, params, leds, draws, seed, db_factor=10.0) -> str:
    payload = json.dumps({
        "room": asdict(room), "optics": asdict(params),
        "leds": np.asarray(leds, dtype=float).round(12).tolist(),
        "draws": int(draws), "seed": int(seed), "db_factor": float(db_factor),
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:20]


def cached_calibrate(room: RoomConfig, params: OpticalParams, draws: int, seed: int,
                     leds: np.ndarray | None = None, db_factor: float = 10.0,
                     cache_dir=None) -> DynamicRange:
    """:func:`calibrate` with results memoized as JSON files in ``cache_dir``."""
    leds = place_leds(room, 6) if leds is None else np.asarray(leds, dtype=float)
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / f"calibration-{calibration_key(room, params, leds, draws, seed, db_factor)}.json"
        if path.exists():
            data = json.loads(path.read_text())
            return DynamicRange(**data)
    rng = np.random.default_rng(seed)
    dr = calibrate(room, params, draws, rng, leds=leds, db_factor=db_factor)
    dr = DynamicRange(dr.min_db, dr.max_db, draws, seed, db_factor)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(asdict(dr), indent=2))
        tmp.replace(path)
    return dr
