"""Run configuration: dataclass sections loaded from YAML.

Precedence is command-line flags > config file > the defaults below.  The
defaults describe the reference indoor setup (5 m x 5 m room, six ceiling
LEDs at 2.4 m, photodiodes uniform in [0.5, 1] m height, 15 dB target,
20 W peak optical power), so running without a file reproduces it.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .channel import OpticalParams
from .experiments import SweepConfig
from .precoder import DesignParams, DesignSettings
from .quantizer import DynamicRange, cached_calibrate
from .scenario import RoomConfig, place_leds
from .socp import SolverSettings


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range configuration."""


@dataclass
class OpticsSection:
    """Optical constants; the field of view is given in degrees here."""

    lambertian_order_m: float = 1.0
    pd_area_m2: float = 1e-4
    fov_semi_angle_deg: float = 70.0
    filter_gain: float = 1.0
    concentrator_index: float = 1.5
    responsivity_rho_A_per_W: float = 0.4

    def params(self) -> OpticalParams:
        return OpticalParams(self.lambertian_order_m, self.pd_area_m2,
                             math.radians(self.fov_semi_angle_deg), self.filter_gain,
                             self.concentrator_index, self.responsivity_rho_A_per_W)


@dataclass
class LedSection:
    count: int = 6
    positions: list | None = None   # explicit [[x, y, z], ...] overrides the grid


@dataclass
class QuantizerSection:
    # a fixed range skips calibration when both ends are given
    min_db: float | None = None
    max_db: float | None = None
    draws: int = 1_000_000
    calibration_seed: int = 0
    db_factor: float = 10.0
    floor_zero: bool = True
    cache_dir: str | None = "~/.cache/robust-vlc"


@dataclass
class ScenarioSection:
    k: int = 3
    bits: int = 8
    channel_file: str | None = None


@dataclass
class SweepSection:
    k_values: list = field(default_factory=lambda: [2, 3, 4, 5, 6, 7])
    b_values: list = field(default_factory=lambda: [4, 8, 16])
    trials: int = 500
    workers: int | None = None      # None: one per CPU
    plots: bool = False


@dataclass
class SolverSection:
    tol: float = 1e-8
    max_iter: int = 100
    verify_tol: float = 1e-6


@dataclass
class RunConfig:
    room: RoomConfig = field(default_factory=RoomConfig)
    optics: OpticsSection = field(default_factory=OpticsSection)
    leds: LedSection = field(default_factory=LedSection)
    design: DesignParams = field(default_factory=DesignParams)
    quantizer: QuantizerSection = field(default_factory=QuantizerSection)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    solver: SolverSection = field(default_factory=SolverSection)
    seed: int = 0
    out: str = "results"

    # -- derived objects -------------------------------------------------

    def optical_params(self) -> OpticalParams:
        return self.optics.params()

    def led_positions(self) -> np.ndarray:
        if self.leds.positions is not None:
            pos = np.asarray(self.leds.positions, dtype=float)
            if pos.ndim != 2 or pos.shape[1] != 3:
                raise ConfigError("leds.positions must be a list of [x, y, z] triples")
            return pos
        return place_leds(self.room, self.leds.count)

    def design_settings(self) -> DesignSettings:
        return DesignSettings(SolverSettings(tol=self.solver.tol, max_iter=self.solver.max_iter),
                              verify_tol=self.solver.verify_tol)

    def dynamic_range(self) -> DynamicRange:
        q = self.quantizer
        if q.min_db is not None and q.max_db is not None:
            return DynamicRange(float(q.min_db), float(q.max_db), 0, None, q.db_factor)
        cache = None if q.cache_dir is None else Path(q.cache_dir).expanduser()
        return cached_calibrate(self.room, self.optical_params(), q.draws, q.calibration_seed,
                                self.led_positions(), q.db_factor, cache)

    def sweep_config(self, dynamic_range: DynamicRange | None = None) -> SweepConfig:
        return SweepConfig(
            k_values=tuple(self.sweep.k_values), b_values=tuple(self.sweep.b_values),
            trials=self.sweep.trials, seed=self.seed, design=self.design, room=self.room,
            optics=self.optical_params(),
            dynamic_range=dynamic_range or self.dynamic_range(),
            leds=self.led_positions(), floor_zero=self.quantizer.floor_zero,
            settings=self.design_settings(),
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_SECTION_TYPES = {
    "room": RoomConfig, "optics": OpticsSection, "leds": LedSection, "design": DesignParams,
    "quantizer": QuantizerSection, "scenario": ScenarioSection, "sweep": SweepSection,
    "solver": SolverSection,
}


def _build(cls, data, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section '{where}' must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in '{where}': {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{where}' section: {exc}") from exc


def from_dict(data: dict | None) -> RunConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    unknown = sorted(set(data) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    kw = {name: _build(cls, data.get(name), name) for name, cls in _SECTION_TYPES.items()}
    try:
        seed = int(data.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed must be an integer: {exc}") from exc
    cfg = RunConfig(**kw, seed=seed, out=str(data.get("out", "results")))
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    if cfg.scenario.k < 1 or cfg.scenario.bits < 1:
        raise ConfigError("scenario.k and scenario.bits must be positive")
    if cfg.leds.count < 1:
        raise ConfigError("leds.count must be positive")
    if cfg.quantizer.draws < 1:
        raise ConfigError("quantizer.draws must be positive")
    if (cfg.quantizer.min_db is None) != (cfg.quantizer.max_db is None):
        raise ConfigError("give both quantizer.min_db and quantizer.max_db, or neither")
    if cfg.sweep.trials < 1:
        raise ConfigError("sweep.trials must be at least 1")
    if not cfg.sweep.k_values or not cfg.sweep.b_values:
        raise ConfigError("sweep.k_values and sweep.b_values must be non-empty")
    if min(cfg.sweep.k_values) < 1 or min(cfg.sweep.b_values) < 1:
        raise ConfigError("sweep K and B values must be positive")
    try:
        cfg.optical_params()
        cfg.design.spec(1, cfg.optics.responsivity_rho_A_per_W)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.led_positions()


def load(path) -> RunConfig:
    """Read a YAML config; ``OSError`` if unreadable, ``ConfigError`` if invalid."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return from_dict(data)


def dump(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)


def with_overrides(cfg: RunConfig, **flags) -> RunConfig:
    """Apply command-line overrides; ``None`` values leave the file value."""
    data = cfg.to_dict()
    if flags.get("seed") is not None:
        data["seed"] = flags["seed"]
    if flags.get("out") is not None:
        data["out"] = str(flags["out"])
    if flags.get("trials") is not None:
        data["sweep"]["trials"] = flags["trials"]
    if flags.get("workers") is not None:
        data["sweep"]["workers"] = flags["workers"]
    if flags.get("draws") is not None:
        data["quantizer"]["draws"] = flags["draws"]
    k, bits = flags.get("k"), flags.get("bits")
    if k is not None:
        ks = list(k) if isinstance(k, (list, tuple)) else [k]
        data["scenario"]["k"] = ks[0]
        data["sweep"]["k_values"] = ks
    if bits is not None:
        bs = list(bits) if isinstance(bits, (list, tuple)) else [bits]
        data["scenario"]["bits"] = bs[0]
        data["sweep"]["b_values"] = bs
    if flags.get("channel_file") is not None:
        data["scenario"]["channel_file"] = str(flags["channel_file"])
    return from_dict(data)
