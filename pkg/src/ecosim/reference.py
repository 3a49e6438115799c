"""Monolithic reference solution of the quarter car.

The un-split 4-state model is integrated with classical RK4 at a micro step
of at most 1 us.  States are checkpointed on a fixed grid; a query at an
arbitrary time restarts from the preceding checkpoint and integrates exactly
up to that time, so sampling adds no interpolation error.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from numba import njit

from .quartercar import QuarterCarParams, QuarterCarState, _rhs, transmitted_reference_power

log = logging.getLogger(__name__)

H_MAX = 1e-6
CHECKPOINT = 1e-4


@njit(cache=True, nogil=True)
def _rk4(x, span, n, m_c, m_w, k_c, k_w, d_c, p, eps_v):
    if n == 0:
        return
    h = span / n
    k1 = np.empty(4)
    k2 = np.empty(4)
    k3 = np.empty(4)
    k4 = np.empty(4)
    tmp = np.empty(4)
    for _ in range(n):
        _rhs(x, k1, m_c, m_w, k_c, k_w, d_c, p, eps_v)
        for j in range(4):
            tmp[j] = x[j] + 0.5 * h * k1[j]
        _rhs(tmp, k2, m_c, m_w, k_c, k_w, d_c, p, eps_v)
        for j in range(4):
            tmp[j] = x[j] + 0.5 * h * k2[j]
        _rhs(tmp, k3, m_c, m_w, k_c, k_w, d_c, p, eps_v)
        for j in range(4):
            tmp[j] = x[j] + h * k3[j]
        _rhs(tmp, k4, m_c, m_w, k_c, k_w, d_c, p, eps_v)
        for j in range(4):
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])


@njit(cache=True, nogil=True)
def _checkpoints(x0, n_ck, per_ck, spacing, m_c, m_w, k_c, k_w, d_c, p, eps_v):
    out = np.empty((n_ck + 1, 4))
    x = x0.copy()
    out[0] = x
    for i in range(n_ck):
        _rk4(x, spacing, per_ck, m_c, m_w, k_c, k_w, d_c, p, eps_v)
        out[i + 1] = x
    return out


@njit(cache=True, nogil=True)
def _sample(ck, spacing, h_max, times, m_c, m_w, k_c, k_w, d_c, p, eps_v):
    out = np.empty((times.shape[0], 4))
    x = np.empty(4)
    last = ck.shape[0] - 1
    for i in range(times.shape[0]):
        k = min(int(math.floor(times[i] / spacing)), last)
        rest = times[i] - k * spacing
        x[:] = ck[k]
        if rest > 0.0:
            _rk4(x, rest, int(math.ceil(rest / h_max - 1e-9)), m_c, m_w, k_c, k_w, d_c, p, eps_v)
        out[i] = x
    return out


@dataclass
class ReferenceSolution:
    params: QuarterCarParams
    init: QuarterCarState
    T: float
    checkpoints: np.ndarray
    spacing: float = CHECKPOINT
    h_max: float = H_MAX

    @classmethod
    def compute(cls, params, init, T, h_max=H_MAX, spacing=CHECKPOINT) -> "ReferenceSolution":
        if h_max > spacing:
            raise ValueError("reference micro step must not exceed the checkpoint spacing")
        n_ck = max(int(math.ceil(T / spacing - 1e-9)), 0)
        per_ck = int(math.ceil(spacing / h_max - 1e-9))
        ck = _checkpoints(init.as_array(), n_ck, per_ck, spacing, *params.as_tuple())
        return cls(params, init, T, ck, spacing, h_max)

    def states(self, times) -> np.ndarray:
        times = np.atleast_1d(np.asarray(times, dtype=float))
        return _sample(self.checkpoints, self.spacing, self.h_max, times, *self.params.as_tuple())

    def power(self, times, variant: int) -> np.ndarray:
        return transmitted_reference_power(self.states(times), self.params, variant)

    def key(self) -> str:
        return reference_key(self.params, self.init, self.T, self.h_max, self.spacing)


def reference_key(params, init, T, h_max=H_MAX, spacing=CHECKPOINT) -> str:
    blob = json.dumps(
        {"params": asdict(params), "init": asdict(init), "T": T, "h": h_max, "ck": spacing},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:20]


def reference_solution(
    params: QuarterCarParams,
    init: QuarterCarState,
    T: float,
    cache_dir: str | Path | None = None,
    force: bool = False,
) -> ReferenceSolution:
    """Reference for one scenario, loaded from ``cache_dir`` when present."""
    if cache_dir is None:
        return ReferenceSolution.compute(params, init, T)
    path = Path(cache_dir) / f"reference-{reference_key(params, init, T)}.npy"
    if path.exists() and not force:
        log.debug("loading cached reference %s", path)
        return ReferenceSolution(params, init, T, np.load(path))
    ref = ReferenceSolution.compute(params, init, T)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, ref.checkpoints)
    log.info("wrote reference %s", path)
    return ref
