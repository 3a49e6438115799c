"""Non-iterative co-simulation master.

Each macro step runs, in this order: extrapolate inputs, compute the NEPCE
correction, apply inputs, advance all slaves, read outputs, exchange
``u = L y``, account residual and transmitted power, propose the next step.
Steps are never repeated.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .coupling import CouplingGraph, InputHistory, extrapolant
from .ecco import EccoConfig, error_indicator, next_step_size
from .energy import BondEnergyRecord, residual_power, transmitted_power, update_metrics
from .errors import NonPositiveStep, SlaveFailure
from .nepce import (
    CorrectionMode,
    NepceConfig,
    coupling_defect,
    feedthrough_correction,
    feedthrough_gain,
    plain_correction,
)

log = logging.getLogger(__name__)

ReferencePower = Callable[[float], np.ndarray]


@dataclass(frozen=True)
class MasterPolicy:
    """How a run is stepped.  With ``ecco`` set the step is adaptive and
    starts at ``ecco.dt_min``; otherwise ``dt`` is held constant."""

    T: float
    dt: float = 1e-3
    order: int = 0
    nepce: NepceConfig = field(default_factory=NepceConfig)
    ecco: EccoConfig | None = None
    dt_cap: float | None = None
    # residual power sampled with end-of-step ("end") or start-of-step ("start") outputs
    residual_sampling: str = "end"
    parallel: bool = False

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("duration must be non-negative")
        if self.ecco is None and not self.dt > 0:
            raise NonPositiveStep(f"constant macro step must be positive, got {self.dt}")
        if self.order not in (0, 1):
            raise ValueError("extrapolation order must be 0 or 1")
        if self.residual_sampling not in ("end", "start"):
            raise ValueError(f"unknown residual sampling {self.residual_sampling!r}")

    @property
    def planned_steps(self) -> int | None:
        if self.ecco is not None:
            return None
        return int(math.ceil(self.T / self.dt - 1e-9))

    def controller(self) -> EccoConfig | None:
        if self.ecco is None:
            return None
        cfg = replace(self.ecco, order=self.order)
        if self.dt_cap is not None:
            cfg = replace(cfg, dt_max=min(cfg.dt_max, self.dt_cap))
        return cfg


@dataclass(frozen=True)
class StepRecord:
    index: int
    t: float
    t_next: float
    dt: float
    u: np.ndarray
    du: np.ndarray
    y: np.ndarray
    dP: np.ndarray
    dE: np.ndarray
    P12: np.ndarray
    P12_ref: np.ndarray | None
    E_acc: np.ndarray
    dP_avg: np.ndarray
    eps: float
    dt_next: float
    probe: np.ndarray | None = None


@dataclass
class CosimResult:
    records: list[StepRecord]
    metrics: BondEnergyRecord
    policy: MasterPolicy

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


class CosimMaster:
    def __init__(
        self,
        graph: CouplingGraph,
        policy: MasterPolicy,
        reference: ReferencePower | None = None,
        probe: Callable[[], np.ndarray] | None = None,
        t0: float = 0.0,
    ):
        self.graph = graph
        self.policy = policy
        self.reference = reference
        self.probe = probe
        self.controller = policy.controller()
        self.t = t0
        self.t_end = t0 + policy.T
        self.index = 0
        self.history = InputHistory()
        self.metrics = BondEnergyRecord(*(np.zeros(len(graph.bonds)) for _ in range(6)))
        self._pool = None
        self._initial_exchange()

    def _initial_exchange(self) -> None:
        # one pass per slave settles one-sided feed-through chains
        g = self.graph
        u = np.zeros(g.n)
        for _ in range(len(g.slaves)):
            for s, ui in zip(g.slaves, g.split(u)):
                s.set_inputs(ui)
            self.y = self._outputs()
            u = g.L @ self.y
        self.u_applied = u
        self.history.record_sample(self.t, u)

    def _outputs(self) -> np.ndarray:
        return np.concatenate([np.asarray(s.get_outputs(), dtype=float) for s in self.graph.slaves])

    def _advance(self, dt: float) -> None:
        slaves = self.graph.slaves

        def step(k):
            try:
                slaves[k].do_step(dt)
            except Exception as exc:  # noqa: BLE001 - reported with context
                raise SlaveFailure(self.index, k, exc) from exc

        if self.policy.parallel and len(slaves) > 1:
            if self._pool is None:
                self._pool = ThreadPoolExecutor(max_workers=len(slaves))
            for f in [self._pool.submit(step, k) for k in range(len(slaves))]:
                f.result()
        else:
            for k in range(len(slaves)):
                step(k)

    def correction(self, dt: float) -> np.ndarray:
        cfg = self.policy.nepce
        if cfg.mode is CorrectionMode.OFF:
            return np.zeros(self.graph.n)
        defect = coupling_defect(self.history, cfg.defect_rule)
        if defect is None:
            return np.zeros(self.graph.n)
        if cfg.mode is CorrectionMode.PLAIN:
            return plain_correction(defect, cfg.alpha, dt)
        gain = feedthrough_gain(self.graph.L, self.graph.jacobian())
        return feedthrough_correction(defect, cfg.alpha, dt, gain)

    def macro_step(self, dt: float) -> StepRecord:
        g, pol = self.graph, self.policy
        t_i = self.t
        t_next = t_i + dt
        if abs(self.t_end - t_next) <= 1e-12 * max(1.0, abs(self.t_end)):
            t_next = self.t_end
            dt = t_next - t_i

        order = min(pol.order, len(self.history) - 1)
        ex = replace(extrapolant(self.history, order), dt=dt)
        du = self.correction(dt)
        start = ex.value + du
        for s, v, sl in zip(g.slaves, g.split(start), g.split(ex.slope)):
            s.set_inputs(v, sl)
        y_start = self.y

        self._advance(dt)
        y = self._outputs()
        u_exch = g.L @ y
        u_end = ex(t_next) + du

        if pol.residual_sampling == "end":
            up, yp = g.bond_pairs(u_end), g.bond_pairs(y)
        else:
            up, yp = g.bond_pairs(start), g.bond_pairs(y_start)
        dP = residual_power(up[:, 0], yp[:, 0], up[:, 1], yp[:, 1])
        pairs = g.bond_pairs(y)
        P12 = transmitted_power(g.sigma, pairs[:, 0], pairs[:, 1])
        P_ref = None if self.reference is None else np.asarray(self.reference(t_next), dtype=float)
        T = pol.T if pol.T > 0 else 1.0
        self.metrics = update_metrics(self.metrics, P12, P_ref, dP, dt, T)

        ctl = self.controller
        remaining = self.t_end - t_next
        if ctl is not None:
            eps = error_indicator(self.metrics.dE, self.metrics.E, ctl.r, ctl.E0)
            dt_next = next_step_size(eps, dt, ctl, remaining=remaining) if remaining > 0 else 0.0
        else:
            eps = math.nan
            dt_next = min(pol.dt, remaining)

        rec = StepRecord(
            index=self.index,
            t=t_i,
            t_next=t_next,
            dt=dt,
            u=u_end,
            du=du,
            y=y,
            dP=dP,
            dE=self.metrics.dE,
            P12=P12,
            P12_ref=P_ref,
            E_acc=self.metrics.E_acc,
            dP_avg=self.metrics.dP_avg,
            eps=eps,
            dt_next=dt_next,
            probe=None if self.probe is None else np.array(self.probe(), dtype=float),
        )
        self.history.record_applied(ex)
        self.history.record_sample(t_next, u_exch)
        self.y = y
        self.u_applied = u_end
        self.t = t_next
        self.index += 1
        return rec

    def run(self) -> CosimResult:
        records: list[StepRecord] = []
        dt = self.controller.dt_min if self.controller is not None else self.policy.dt
        try:
            while self.t < self.t_end and dt > 0:
                dt = min(dt, self.t_end - self.t)
                rec = self.macro_step(dt)
                records.append(rec)
                dt = rec.dt_next
        finally:
            if self._pool is not None:
                self._pool.shutdown()
                self._pool = None
        return CosimResult(records, self.metrics, self.policy)


def run_cosimulation(
    graph: CouplingGraph,
    policy: MasterPolicy,
    reference: ReferencePower | None = None,
    probe: Callable[[], np.ndarray] | None = None,
) -> CosimResult:
    return CosimMaster(graph, policy, reference, probe).run()
