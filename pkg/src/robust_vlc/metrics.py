"""SNIR, worst-corner SNIR and per-LED optical power of a designed precoder."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .region import UncertaintyBox, enumerate_vertices


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def snir_many(H: np.ndarray, W: np.ndarray, k: int, sigma2_k: float, rho: float) -> np.ndarray:
    """SNIR of user ``k`` for each row of ``H`` (channels, shape n x L).

    The DC term rho * beta * h^T 1 is removed by the receiver and plays no part.
    """
    proj = np.atleast_2d(H) @ W                     # n x K
    p2 = (rho * proj) ** 2
    signal = p2[:, k]
    interference = p2.sum(axis=1) - signal
    return signal / (sigma2_k + interference)


def snir(h_k, W: np.ndarray, k: int, sigma2_k: float, rho: float) -> float:
    return float(snir_many(np.asarray(h_k, dtype=float)[None, :], W, k, sigma2_k, rho)[0])


def per_user_snir(H: np.ndarray, W: np.ndarray, spec) -> np.ndarray:
    """SNIR of every user k evaluated at its own channel row H[k]."""
    return np.array([snir(H[k], W, k, spec.sigma2[k], spec.rho) for k in range(H.shape[0])])


def _vertices(region) -> np.ndarray:
    if isinstance(region, UncertaintyBox):
        return enumerate_vertices(region)
    return np.atleast_2d(np.asarray(region, dtype=float))


def corner_snir(regions, W: np.ndarray, spec) -> list[np.ndarray]:
    """SNIR at every vertex of every user's region."""
    return [snir_many(_vertices(reg), W, k, spec.sigma2[k], spec.rho)
            for k, reg in enumerate(regions)]


def worst_corner_snir(regions, W: np.ndarray, spec) -> float:
    """Minimum SNIR over all users and all corners of their regions (linear)."""
    return float(min(s.min() for s in corner_snir(regions, W, spec)))


def peak_power_per_led(W: np.ndarray, spec) -> np.ndarray:
    """Largest instantaneous optical power of each LED, beta + sum_k A_k |W[l, k]|."""
    return spec.beta + np.abs(W) @ spec.amplitude_A


def instantaneous_power(W: np.ndarray, symbols: np.ndarray, beta: float) -> np.ndarray:
    """Per-LED optical power x = W s + beta for symbol vectors (rows of ``symbols``)."""
    return np.atleast_2d(symbols) @ W.T + beta


@dataclass
class EvaluationReport:
    per_user_snir_db: np.ndarray
    worst_user_snir_db: float
    worst_corner_snir_db: float
    per_led_peak_power_W: np.ndarray
    feasible: bool


def evaluate(W: np.ndarray, H_actual: np.ndarray, regions, spec, feasible: bool = True) -> EvaluationReport:
    per_user = to_db(per_user_snir(H_actual, W, spec))
    return EvaluationReport(
        per_user_snir_db=per_user,
        worst_user_snir_db=float(per_user.min()),
        worst_corner_snir_db=float(to_db(worst_corner_snir(regions, W, spec))),
        per_led_peak_power_W=peak_power_per_led(W, spec),
        feasible=feasible,
    )
