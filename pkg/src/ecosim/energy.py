"""Residual and transmitted power on power bonds, plus run-level error metrics."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import NonPositiveStep


def residual_power(u1, y1, u2, y2):
    """Power created by the coupling, ``-(u1*y1 + u2*y2)``.  Works elementwise."""
    return -(np.asarray(u1) * y1 + np.asarray(u2) * y2)


def residual_energy_step(dP, dt: float):
    if not dt > 0:
        raise NonPositiveStep(f"macro step must be positive, got {dt}")
    return dP * dt


def transmitted_power(sigma, y1, y2):
    """Power flowing from the first to the second simulator of a bond."""
    return sigma * np.asarray(y1) * y2


@dataclass(frozen=True)
class BondEnergyRecord:
    """Running energy bookkeeping for one bond (or an array of bonds).

    ``dP_avg`` is the transmitted-power error accumulated as
    ``sum |P12 - P12_ref| * dt / T``; ``E_acc`` the accumulated residual energy.
    """

    dP: float | np.ndarray = 0.0
    dE: float | np.ndarray = 0.0
    P12: float | np.ndarray = 0.0
    E: float | np.ndarray = 0.0
    E_acc: float | np.ndarray = 0.0
    dP_avg: float | np.ndarray = 0.0


def update_metrics(record: BondEnergyRecord, P12, P12_ref, dP, dt: float, T: float) -> BondEnergyRecord:
    dE = residual_energy_step(dP, dt)
    dP_avg = record.dP_avg
    if P12_ref is not None:
        dP_avg = dP_avg + np.abs(P12 - P12_ref) * dt / T
    return replace(
        record,
        dP=dP,
        dE=dE,
        P12=P12,
        E=P12 * dt,
        E_acc=record.E_acc + dE,
        dP_avg=dP_avg,
    )
