"""Line-of-sight Lambertian optical channel gains."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

LED_NORMAL = np.array([0.0, 0.0, -1.0])
PD_NORMAL = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class OpticalParams:
    lambertian_order_m: float = 1.0
    pd_area_m2: float = 1e-4
    fov_semi_angle_rad: float = float(np.deg2rad(70.0))
    filter_gain: float = 1.0
    concentrator_index: float = 1.5
    responsivity_rho_A_per_W: float = 0.4

    def __post_init__(self):
        if min(self.lambertian_order_m, self.pd_area_m2, self.filter_gain,
               self.responsivity_rho_A_per_W, self.fov_semi_angle_rad) <= 0:
            raise ValueError("optical parameters must be strictly positive")
        if self.fov_semi_angle_rad > np.pi / 2 + 1e-12:
            raise ValueError("field of view semi-angle must not exceed pi/2")
        if self.concentrator_index < 1:
            raise ValueError("concentrator refractive index must be >= 1")

    @property
    def concentrator_gain(self) -> float:
        return self.concentrator_index**2 / np.sin(self.fov_semi_angle_rad) ** 2


def gain_matrix(leds: np.ndarray, pds: np.ndarray, params: OpticalParams) -> np.ndarray:
    """Gains h[k, l] from LED ``l`` to photodiode ``k`` (shape K x L).

    h = (m+1) A / (2 pi d^2) * cos^m(phi) * T_f * g * cos(psi) inside the
    field of view and 0 outside it.
    """
    leds = np.asarray(leds, dtype=float).reshape(-1, 3)
    pds = np.asarray(pds, dtype=float).reshape(-1, 3)
    diff = leds[None, :, :] - pds[:, None, :]          # PD -> LED
    d2 = np.einsum("klj,klj->kl", diff, diff)
    if np.any(d2 <= 0):
        raise ValueError("LED and photodiode positions coincide")
    d = np.sqrt(d2)
    cos_irr = np.einsum("klj,j->kl", -diff, LED_NORMAL) / d
    cos_inc = np.einsum("klj,j->kl", diff, PD_NORMAL) / d
    m = params.lambertian_order_m
    base = (m + 1) * params.pd_area_m2 / (2 * np.pi * d2)
    with np.errstate(invalid="ignore"):
        h = base * np.clip(cos_irr, 0, None) ** m * params.filter_gain \
            * params.concentrator_gain * cos_inc
    inside = (cos_inc > 0) & (np.arccos(np.clip(cos_inc, -1, 1)) <= params.fov_semi_angle_rad)
    return np.where(inside & (cos_irr > 0), h, 0.0)


def gain(led_pos, pd_pos, params: OpticalParams) -> float:
    led_pos = np.asarray(led_pos, dtype=float)
    pd_pos = np.asarray(pd_pos, dtype=float)
    if led_pos[2] <= pd_pos[2]:
        raise ValueError("the LED must be above the photodiode")
    return float(gain_matrix(led_pos, pd_pos, params)[0, 0])


def channel_matrix(scenario: Scenario, params: OpticalParams) -> np.ndarray:
    return gain_matrix(scenario.led_positions, scenario.user_positions, params)


def validate_channel(h) -> np.ndarray:
    """Coerce to a finite, nonnegative 2-D array or raise ``ValueError``."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    if h.ndim != 2:
        raise ValueError("channel matrix must be two-dimensional")
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    if np.any(h < 0):
        raise ValueError("channel gains must be nonnegative")
    return h


def save_channel_csv(h: np.ndarray, path) -> None:
    np.savetxt(path, h, delimiter=",", fmt="%.17g")


def load_channel_csv(path) -> np.ndarray:
    return validate_channel(np.loadtxt(path, delimiter=",", ndmin=2))
