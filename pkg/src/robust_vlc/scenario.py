"""Room geometry, ceiling LED grid and random photodiode placement."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RoomConfig:
    width_m: float = 5.0
    depth_m: float = 5.0
    led_height_m: float = 2.4
    pd_height_min_m: float = 0.5
    pd_height_max_m: float = 1.0

    def __post_init__(self):
        dims = (self.width_m, self.depth_m, self.led_height_m,
                self.pd_height_min_m, self.pd_height_max_m)
        if min(dims) <= 0:
            raise ValueError(f"room dimensions must be positive, got {dims}")
        if self.pd_height_min_m > self.pd_height_max_m:
            raise ValueError("pd_height_min_m exceeds pd_height_max_m")
        if self.pd_height_max_m >= self.led_height_m:
            raise ValueError("photodiodes must sit below the LED plane")


@dataclass(frozen=True)
class Scenario:
    """One realization: fixed LEDs and K user photodiodes.

    Arrays are stored read-only so a scenario can be shared between workers.
    """

    led_positions: np.ndarray
    user_positions: np.ndarray
    seed: int | None = None
    room: RoomConfig = field(default_factory=RoomConfig)

    def __post_init__(self):
        leds = np.array(self.led_positions, dtype=float).reshape(-1, 3)
        users = np.array(self.user_positions, dtype=float).reshape(-1, 3)
        if len(leds) < 1 or len(users) < 1:
            raise ValueError("a scenario needs at least one LED and one user")
        if not np.allclose(leds[:, 2], self.room.led_height_m):
            raise ValueError("every LED must sit at the room's LED height")
        lo = np.zeros(3)
        hi = np.array([self.room.width_m, self.room.depth_m, self.room.led_height_m])
        if np.any(users < lo) or np.any(users > hi):
            raise ValueError("user positions must lie inside the room")
        leds.setflags(write=False)
        users.setflags(write=False)
        object.__setattr__(self, "led_positions", leds)
        object.__setattr__(self, "user_positions", users)

    @property
    def n_leds(self) -> int:
        return len(self.led_positions)

    @property
    def n_users(self) -> int:
        return len(self.user_positions)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "leds": self.led_positions.tolist(),
            "users": self.user_positions.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict, room: RoomConfig | None = None) -> "Scenario":
        return cls(np.asarray(data["leds"]), np.asarray(data["users"]),
                   data.get("seed"), room or RoomConfig())


def _grid_shape(count: int) -> tuple[int, int]:
    rows = int(np.floor(np.sqrt(count)))
    while count % rows:
        rows -= 1
    return rows, count // rows


def place_leds(room: RoomConfig, count: int) -> np.ndarray:
    """Centered near-square grid of ``count`` LEDs on the ceiling plane.

    The grid uses the factor pair rows x cols of ``count`` closest to square
    (rows <= cols); LEDs are inset from the walls by half a cell.
    """
    if count < 1:
        raise ValueError("need at least one LED")
    rows, cols = _grid_shape(count)
    xs = (np.arange(cols) + 0.5) * room.width_m / cols
    ys = (np.arange(rows) + 0.5) * room.depth_m / rows
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel(), np.full(count, room.led_height_m)])


def sample_users(room: RoomConfig, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``k`` photodiode positions uniformly over the floor area and height band.

    Positions are drawn user by user, so the first ``k`` users of a stream
    do not depend on how many are requested in total.
    """
    if k < 1:
        raise ValueError("need at least one user")
    low = np.array([0.0, 0.0, room.pd_height_min_m])
    high = np.array([room.width_m, room.depth_m, room.pd_height_max_m])
    u = rng.random((k, 3))
    return low + u * (high - low)


def make_scenario(room: RoomConfig, leds: np.ndarray, k: int, seed: int) -> Scenario:
    rng = np.random.default_rng(seed)
    return Scenario(leds, sample_users(room, k, rng), seed, room)
