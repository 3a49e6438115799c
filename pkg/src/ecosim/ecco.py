"""Energy-residual error indicator and I-controller for the macro step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EccoConfig:
    alpha_s: float = 0.8
    dt_min: float = 10e-6
    dt_max: float = 10e-3
    theta_min: float = 0.2
    theta_max: float = 1.5
    E0: float | tuple[float, ...] = 750.0
    r: float | tuple[float, ...] = 1e-6
    gain_numerator: float = 0.3
    # k_I = gain_numerator / (order + 2 + gain_denominator_offset)
    gain_denominator_offset: int = 0
    order: int = 0
    eps_floor: float = 1e-12

    def __post_init__(self):
        if not 0 < self.alpha_s <= 1:
            raise ValueError("alpha_s must lie in (0, 1]")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_max")
        if not 0 < self.theta_min < 1 < self.theta_max:
            raise ValueError("need 0 < theta_min < 1 < theta_max")
        if np.any(np.asarray(self.r) <= 0) or np.any(np.asarray(self.E0) <= 0):
            raise ValueError("tolerances and energy scales must be positive")

    @property
    def k_I(self) -> float:
        return self.gain_numerator / (self.order + 2 + self.gain_denominator_offset)


def error_indicator(dE, E, r, E0) -> float:
    """RMS over bonds of ``dE_k / (r_k (E0_k + |E_k|))``."""
    dE = np.atleast_1d(np.asarray(dE, dtype=float))
    E = np.broadcast_to(np.abs(np.asarray(E, dtype=float)), dE.shape)
    scaled = dE / (np.broadcast_to(r, dE.shape) * (np.broadcast_to(E0, dE.shape) + E))
    return float(np.sqrt(np.mean(scaled ** 2)))


def next_step_size(eps: float, dt: float, config: EccoConfig, remaining: float | None = None) -> float:
    """Step proposal for the next interval.

    The ratio clamp is applied before the range clamp so ``dt_min``/``dt_max``
    always hold.  With ``remaining`` given, the result is truncated so the
    run lands exactly on its end time.
    """
    ratio = config.alpha_s * max(eps, config.eps_floor) ** (-config.k_I)
    ratio = min(max(ratio, config.theta_min), config.theta_max)
    new = min(max(ratio * dt, config.dt_min), config.dt_max)
    if remaining is not None:
        if new >= remaining or remaining < 2 * config.dt_min:
            new = remaining
        elif remaining - new < config.dt_min:
            # never leave a final sliver shorter than dt_min
            new = remaining - config.dt_min
    return new
