"""Energy-conservation-based input corrections (NEPCE).

The correction applied over ``(t_i, t_i+1]`` feeds back the coupling defect
``int (L y - u~) dtau`` of the previous interval, optionally pre-multiplied by
``(I - L J)^-1`` to account for direct feed-through.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .coupling import InputHistory
from .errors import NonPositiveStep, SingularMatrix


class CorrectionMode(str, Enum):
    OFF = "off"
    PLAIN = "plain"
    FEEDTHROUGH = "feedthrough"


@dataclass(frozen=True)
class NepceConfig:
    alpha: float = 0.0
    mode: CorrectionMode = CorrectionMode.OFF
    # "trapezoid" or "rectangle" (right endpoint) for the output integral
    defect_rule: str = "trapezoid"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        object.__setattr__(self, "mode", CorrectionMode(self.mode))
        if self.defect_rule not in ("trapezoid", "rectangle"):
            raise ValueError(f"unknown defect rule {self.defect_rule!r}")


def coupling_defect(history: InputHistory, rule: str = "trapezoid") -> np.ndarray | None:
    """Integral of ``L y - u~`` over the last complete interval.

    Returns ``None`` when no complete interval has been recorded yet; callers
    treat that as a zero correction.
    """
    if len(history.samples) < 2 or not history.applied:
        return None
    (t0, Ly0), (t1, Ly1) = history.samples
    applied = history.applied[-1]
    dt = t1 - t0
    if rule == "trapezoid":
        out = 0.5 * dt * (Ly0 + Ly1)
    else:
        out = dt * Ly1
    return out - applied.integral()


def plain_correction(defect: np.ndarray, alpha: float, dt: float) -> np.ndarray:
    if not dt > 0:
        raise NonPositiveStep(f"macro step must be positive, got {dt}")
    return (alpha / dt) * np.asarray(defect, dtype=float)


def feedthrough_gain(L: np.ndarray, J: np.ndarray) -> np.ndarray:
    A = np.eye(L.shape[0]) - L @ J
    try:
        gain = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SingularMatrix("I - L J is singular; the graph has an algebraic loop") from exc
    if not np.all(np.isfinite(gain)):
        raise SingularMatrix("I - L J is numerically singular")
    return gain


def feedthrough_correction(defect: np.ndarray, alpha: float, dt: float, gain: np.ndarray) -> np.ndarray:
    if not dt > 0:
        raise NonPositiveStep(f"macro step must be positive, got {dt}")
    return (alpha / dt) * (gain @ np.asarray(defect, dtype=float))
