"""Simulator interface, power-bond wiring and input extrapolation.

Every slave exposes the same number of inputs and outputs; input ``j`` and
output ``j`` of a slave together form one power port, so ``u[j] * y[j]`` is
the power leaving the slave through that port.
"""

from __future__ import annotations

import abc
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    AlgebraicLoop,
    DanglingPort,
    DimensionMismatch,
    GraphError,
    InsufficientHistory,
    SignConvention,
)


class SimulatorSlave(abc.ABC):
    """A coupled subsystem seen only through its ports.

    Between communication points the slave integrates on its own, with the
    input evaluated as ``value + slope * (t - t_i)``.  Outputs are read only
    at communication points.
    """

    #: number of power ports (inputs == outputs)
    n_ports: int

    @property
    @abc.abstractmethod
    def feedthrough(self) -> tuple[bool, ...]:
        """Per port: does output ``j`` depend instantaneously on input ``j``?"""

    @abc.abstractmethod
    def set_inputs(self, value: np.ndarray, slope: np.ndarray | None = None) -> None:
        ...

    @abc.abstractmethod
    def do_step(self, dt: float) -> None:
        """Advance the internal state by one macro step ``dt``."""

    @abc.abstractmethod
    def get_outputs(self) -> np.ndarray:
        ...

    def jacobian(self) -> np.ndarray:
        """Interface Jacobian dy/du at the current state and input.

        Slaves without feed-through keep this default, which is exactly zero.
        """
        return np.zeros((self.n_ports, self.n_ports))


@dataclass(frozen=True, order=True)
class Port:
    slave: int
    index: int


@dataclass(frozen=True)
class PowerBond:
    """Connects ``first`` and ``second``; power is counted from first to second.

    At communication points ``u_first = l12 * y_second`` and
    ``u_second = l21 * y_first``.
    """

    first: Port
    second: Port
    l12: int = -1
    l21: int = 1

    @property
    def sigma(self) -> int:
        return (self.l12 - self.l21) // 2


@dataclass
class CouplingGraph:
    slaves: list[SimulatorSlave]
    bonds: list[PowerBond]
    offsets: list[int]
    L: np.ndarray
    sigma: np.ndarray
    bond_feedthrough: list[tuple[bool, bool]]

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def global_index(self, port: Port) -> int:
        return self.offsets[port.slave] + port.index

    def split(self, vec: np.ndarray) -> list[np.ndarray]:
        return [vec[o:o + s.n_ports] for o, s in zip(self.offsets, self.slaves)]

    def bond_pairs(self, vec: np.ndarray) -> np.ndarray:
        """Shape ``(n_bonds, 2)``: the (first, second) entries of ``vec`` per bond."""
        idx = np.array(
            [[self.global_index(b.first), self.global_index(b.second)] for b in self.bonds],
            dtype=int,
        ).reshape(-1, 2)
        return vec[idx]

    def jacobian(self) -> np.ndarray:
        """Block-diagonal interface Jacobian of all slaves."""
        J = np.zeros((self.n, self.n))
        for o, s in zip(self.offsets, self.slaves):
            J[o:o + s.n_ports, o:o + s.n_ports] = s.jacobian()
        return J


def validate_graph(slaves: Sequence[SimulatorSlave], bonds: Sequence[PowerBond]) -> CouplingGraph:
    offsets = []
    n = 0
    for s in slaves:
        offsets.append(n)
        n += s.n_ports

    used: set[Port] = set()
    for b in bonds:
        for p in (b.first, b.second):
            if not (0 <= p.slave < len(slaves)) or not (0 <= p.index < slaves[p.slave].n_ports):
                raise DanglingPort(f"bond references missing port {p}")
            if p in used:
                raise GraphError(f"port {p} is used by more than one bond")
            used.add(p)
        if b.first == b.second:
            raise GraphError(f"bond connects port {b.first} to itself")
        if b.l12 * b.l21 != -1 or abs(b.l12) != 1:
            raise SignConvention(f"bond {b.first}->{b.second}: need l12*l21 == -1, got {b.l12}, {b.l21}")

    # canonical bond order so the graph does not depend on listing order
    ordered = sorted(bonds, key=lambda b: (b.first, b.second))

    L = np.zeros((n, n))
    flags = []
    for b in ordered:
        i1 = offsets[b.first.slave] + b.first.index
        i2 = offsets[b.second.slave] + b.second.index
        L[i1, i2] = b.l12
        L[i2, i1] = b.l21
        ft = (
            slaves[b.first.slave].feedthrough[b.first.index],
            slaves[b.second.slave].feedthrough[b.second.index],
        )
        if all(ft):
            raise AlgebraicLoop(
                f"both sides of bond {b.first}->{b.second} have direct feed-through"
            )
        flags.append(ft)

    sigma = np.array([b.sigma for b in ordered], dtype=float)
    return CouplingGraph(list(slaves), ordered, offsets, L, sigma, flags)


def map_outputs_to_inputs(L: np.ndarray, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if L.ndim != 2 or y.shape != (L.shape[1],):
        raise DimensionMismatch(f"L is {L.shape}, y is {y.shape}")
    return L @ y


@dataclass(frozen=True)
class Extrapolant:
    """Input polynomial applied over ``(t_start, t_start + dt]``."""

    t_start: float
    dt: float
    value: np.ndarray
    slope: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        return self.value + self.slope * (t - self.t_start)

    def integral(self) -> np.ndarray:
        return self.dt * (self.value + 0.5 * self.slope * self.dt)


@dataclass
class InputHistory:
    """Coupling data of the last two macro intervals.

    ``samples`` holds ``(t, L y(t))`` at the last communication points and
    ``applied`` the extrapolants used over the intervals between them.
    """

    samples: deque = field(default_factory=lambda: deque(maxlen=2))
    applied: deque = field(default_factory=lambda: deque(maxlen=2))

    def record_sample(self, t: float, u: np.ndarray) -> None:
        self.samples.append((t, np.array(u, dtype=float)))

    def record_applied(self, ex: Extrapolant) -> None:
        self.applied.append(ex)

    def __len__(self) -> int:
        return len(self.samples)


def extrapolant(history: InputHistory, order: int) -> Extrapolant:
    """Input polynomial for the interval starting at the latest sample."""
    if order not in (0, 1):
        raise ValueError(f"extrapolation order must be 0 or 1, got {order}")
    if len(history.samples) < order + 1:
        raise InsufficientHistory(f"order {order} needs {order + 1} samples, have {len(history.samples)}")
    t_i, u_i = history.samples[-1]
    if order == 0:
        slope = np.zeros_like(u_i)
    else:
        t_prev, u_prev = history.samples[-2]
        slope = (u_i - u_prev) / (t_i - t_prev)
    return Extrapolant(t_i, 0.0, u_i, slope)


def extrapolate_inputs(history: InputHistory, order: int, t: float) -> np.ndarray:
    return extrapolant(history, order)(t)
