"""Quarter car benchmark: chassis and wheel masses, suspension spring/damper, tire spring.

Coordinates are measured from static equilibrium (no gravity, no road input).
Two splits into co-simulation slaves are provided:

* variant 1: S1 = chassis (force in, velocity out);
  S2 = suspension + wheel + tire (velocity in, force out, feed-through).
* variant 2: S1 = chassis + suspension (velocity in, force out, feed-through);
  S2 = wheel + tire (force in, velocity out).

For every slave ``u * y`` is the power leaving the slave, and both variants
use the bond ``u1 = -y2``, ``u2 = y1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .coupling import Port, PowerBond, SimulatorSlave
from .errors import UnknownVariant

EPS_V = 1e-6
# Lower bound on |dv| when reporting the feed-through Jacobian of a
# sub-linear damper, whose slope grows without bound near dv = 0.
JACOBIAN_FLOOR = 1e-3


@dataclass(frozen=True)
class QuarterCarParams:
    m_c: float = 400.0
    m_w: float = 40.0
    k_c: float = 15000.0
    k_w: float = 150000.0
    d_c: float = 1000.0
    p: float = 1.0
    # descriptive label only; the force law uses p
    n_d: float = 0.5
    eps_v: float = EPS_V

    def __post_init__(self):
        if min(self.m_c, self.m_w, self.k_c, self.k_w) <= 0:
            raise ValueError("masses and stiffnesses must be positive")
        if self.p <= 0 or self.d_c < 0 or self.eps_v <= 0:
            raise ValueError("need p > 0, d_c >= 0, eps_v > 0")

    @classmethod
    def linear(cls, **overrides) -> "QuarterCarParams":
        return replace(cls(), **overrides)

    @classmethod
    def nonlinear(cls, **overrides) -> "QuarterCarParams":
        return replace(cls(d_c=900.0, p=0.5, n_d=1.5), **overrides)

    def as_tuple(self) -> tuple[float, ...]:
        return (self.m_c, self.m_w, self.k_c, self.k_w, self.d_c, self.p, self.eps_v)


@dataclass(frozen=True)
class QuarterCarState:
    z_c: float = 0.0
    v_c: float = 0.0
    z_w: float = 0.0
    v_w: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.z_c, self.v_c, self.z_w, self.v_w])

    @classmethod
    def from_array(cls, x) -> "QuarterCarState":
        return cls(*(float(v) for v in x))

    def energy(self, params: QuarterCarParams) -> float:
        return (
            0.5 * params.m_c * self.v_c ** 2
            + 0.5 * params.m_w * self.v_w ** 2
            + 0.5 * params.k_c * (self.z_c - self.z_w) ** 2
            + 0.5 * params.k_w * self.z_w ** 2
        )


@njit(cache=True, nogil=True)
def _damper(dv, d, p, eps_v):
    a = abs(dv)
    if a < eps_v:
        return d * eps_v ** (p - 1.0) * dv
    return math.copysign(d * a ** p, dv)


@njit(cache=True, nogil=True)
def _damper_slope(dv, d, p, eps_v):
    a = abs(dv)
    if a < eps_v:
        return d * eps_v ** (p - 1.0)
    return d * p * a ** (p - 1.0)


def damper_force(dv: float, params: QuarterCarParams) -> float:
    """Force ``d_c sign(dv) |dv|^p``, linear through zero for ``|dv| < eps_v``."""
    return float(_damper(float(dv), params.d_c, params.p, params.eps_v))


def damper_slope(dv: float, params: QuarterCarParams, floor: float | None = None) -> float:
    """d(force)/d(dv).  With ``floor`` the slope is evaluated at ``max(|dv|, floor)``."""
    dv = float(dv)
    if floor is not None and abs(dv) < floor:
        dv = floor
    return float(_damper_slope(dv, params.d_c, params.p, params.eps_v))


def _damper_array(dv: np.ndarray, params: QuarterCarParams) -> np.ndarray:
    a = np.abs(dv)
    d, p, eps = params.d_c, params.p, params.eps_v
    return np.where(a < eps, d * eps ** (p - 1.0) * dv, np.sign(dv) * d * np.maximum(a, eps) ** p)


# Forward Euler micro integration.  ``u(t) = u0 + slope * t`` with t measured
# from the start of the macro step.  Parameter order follows
# QuarterCarParams.as_tuple().

@njit(cache=True, nogil=True)
def _step_chassis(x, u0, slope, h, n, m_c, m_w, k_c, k_w, d_c, p, eps_v):
    z, v = x[0], x[1]
    for k in range(n):
        u = u0 + slope * (k * h)
        z, v = z + h * v, v - h * u / m_c
    x[0], x[1] = z, v


@njit(cache=True, nogil=True)
def _step_suspension_wheel(x, u0, slope, h, n, m_c, m_w, k_c, k_w, d_c, p, eps_v):
    s, z, v = x[0], x[1], x[2]
    for k in range(n):
        u = u0 + slope * (k * h)
        f = k_c * s + _damper(u - v, d_c, p, eps_v)
        s, z, v = s + h * (u - v), z + h * v, v + h * (f - k_w * z) / m_w
    x[0], x[1], x[2] = s, z, v


@njit(cache=True, nogil=True)
def _step_chassis_suspension(x, u0, slope, h, n, m_c, m_w, k_c, k_w, d_c, p, eps_v):
    z, v, s = x[0], x[1], x[2]
    for k in range(n):
        u = u0 + slope * (k * h)
        f = k_c * s + _damper(v - u, d_c, p, eps_v)
        z, v, s = z + h * v, v - h * f / m_c, s + h * (v - u)
    x[0], x[1], x[2] = z, v, s


@njit(cache=True, nogil=True)
def _step_wheel(x, u0, slope, h, n, m_c, m_w, k_c, k_w, d_c, p, eps_v):
    z, v = x[0], x[1]
    for k in range(n):
        u = u0 + slope * (k * h)
        z, v = z + h * v, v + h * (u - k_w * z) / m_w
    x[0], x[1] = z, v


class _QuarterCarSlave(SimulatorSlave):
    n_ports = 1
    _kernel = None
    _feedthrough: tuple[bool, ...] = (False,)

    def __init__(self, params: QuarterCarParams, x0, micro_steps: int = 256,
                 jacobian_floor: float | None = JACOBIAN_FLOOR):
        if micro_steps < 1:
            raise ValueError("micro_steps must be >= 1")
        self.params = params
        self.jacobian_floor = jacobian_floor
        self.micro_steps = int(micro_steps)
        self.x = np.array(x0, dtype=float)
        self._u0 = 0.0
        self._slope = 0.0
        self._u = 0.0

    @property
    def feedthrough(self):
        return self._feedthrough

    def set_inputs(self, value, slope=None):
        self._u0 = float(np.asarray(value).reshape(-1)[0])
        self._slope = 0.0 if slope is None else float(np.asarray(slope).reshape(-1)[0])
        self._u = self._u0

    def do_step(self, dt):
        if not dt > 0:
            raise ValueError(f"non-positive macro step {dt}")
        n = self.micro_steps
        type(self)._kernel(self.x, self._u0, self._slope, dt / n, n, *self.params.as_tuple())
        self._u = self._u0 + self._slope * dt
        if not np.all(np.isfinite(self.x)):
            raise FloatingPointError("state became non-finite")

    def get_outputs(self):
        return np.array([self._output(self._u)])

    def jacobian(self):
        return np.array([[self._du_slope(self._u)]])

    def _output(self, u):
        raise NotImplementedError

    def _du_slope(self, u):
        return 0.0


class Chassis(_QuarterCarSlave):
    """State ``(z_c, v_c)``; input: force the chassis exerts on the suspension."""

    _kernel = staticmethod(_step_chassis)

    def _output(self, u):
        return self.x[1]


class SuspensionWheel(_QuarterCarSlave):
    """State ``(z_c - z_w, z_w, v_w)``; input: chassis velocity.

    Output is the suspension force acting on the chassis.
    """

    _kernel = staticmethod(_step_suspension_wheel)
    _feedthrough = (True,)

    def _output(self, u):
        s, _, v = self.x
        return -(self.params.k_c * s + damper_force(u - v, self.params))

    def _du_slope(self, u):
        return -damper_slope(u - self.x[2], self.params, self.jacobian_floor)


class ChassisSuspension(_QuarterCarSlave):
    """State ``(z_c, v_c, z_c - z_w)``; input: wheel velocity.

    Output is the suspension force acting on the wheel.
    """

    _kernel = staticmethod(_step_chassis_suspension)
    _feedthrough = (True,)

    def _output(self, u):
        _, v, s = self.x
        return self.params.k_c * s + damper_force(v - u, self.params)

    def _du_slope(self, u):
        return -damper_slope(self.x[1] - u, self.params, self.jacobian_floor)


class Wheel(_QuarterCarSlave):
    """State ``(z_w, v_w)``; input: suspension force on the wheel.  Output: ``-v_w``."""

    _kernel = staticmethod(_step_wheel)

    def _output(self, u):
        return -self.x[1]


def make_reticulation(
    params: QuarterCarParams,
    variant: int,
    micro_steps: int = 256,
    init: QuarterCarState | None = None,
    jacobian_floor: float | None = JACOBIAN_FLOOR,
) -> tuple[SimulatorSlave, SimulatorSlave, PowerBond]:
    s = init or QuarterCarState()
    bond = PowerBond(Port(0, 0), Port(1, 0), l12=-1, l21=1)
    kw = dict(micro_steps=micro_steps, jacobian_floor=jacobian_floor)
    if variant == 1:
        s1 = Chassis(params, [s.z_c, s.v_c], **kw)
        s2 = SuspensionWheel(params, [s.z_c - s.z_w, s.z_w, s.v_w], **kw)
    elif variant == 2:
        s1 = ChassisSuspension(params, [s.z_c, s.v_c, s.z_c - s.z_w], **kw)
        s2 = Wheel(params, [s.z_w, s.v_w], **kw)
    else:
        raise UnknownVariant(f"reticulation must be 1 or 2, got {variant}")
    return s1, s2, bond


def assemble_state(s1: SimulatorSlave, s2: SimulatorSlave, variant: int) -> QuarterCarState:
    """Best available global state from the two slaves' internal states."""
    if variant == 1:
        z_c, v_c = s1.x
        s, z_w, v_w = s2.x
        return QuarterCarState(z_w + s, v_c, z_w, v_w)
    if variant == 2:
        z_c, v_c, _ = s1.x
        z_w, v_w = s2.x
        return QuarterCarState(z_c, v_c, z_w, v_w)
    raise UnknownVariant(f"reticulation must be 1 or 2, got {variant}")


def interface_jacobian(
    state: QuarterCarState,
    params: QuarterCarParams,
    variant: int,
    floor: float | None = JACOBIAN_FLOOR,
) -> float:
    """Feed-through entry d(force out)/d(velocity in) of the slave owning the damper.

    Both variants give ``-d F_d / d dv`` since the damper force opposes the
    relative velocity the feed-through slave receives as input.
    """
    if variant not in (1, 2):
        raise UnknownVariant(f"reticulation must be 1 or 2, got {variant}")
    return -damper_slope(state.v_c - state.v_w, params, floor)


EXCITATIONS = ("tire_deflection", "chassis_velocity")


def initial_state(
    energy: float,
    params: QuarterCarParams,
    excitation: str = "tire_deflection",
) -> QuarterCarState:
    """Initial state at rest except for ``energy`` joules of excitation.

    ``tire_deflection`` lifts chassis and wheel together so only the tire
    spring is loaded; ``chassis_velocity`` gives the chassis pure kinetic energy.
    """
    if energy < 0:
        raise ValueError("excitation energy must be non-negative")
    if excitation == "tire_deflection":
        z = math.sqrt(2.0 * energy / params.k_w)
        return QuarterCarState(z_c=z, z_w=z)
    if excitation == "chassis_velocity":
        return QuarterCarState(v_c=math.sqrt(2.0 * energy / params.m_c))
    raise ValueError(f"unknown excitation {excitation!r}; expected one of {EXCITATIONS}")


@njit(cache=True, nogil=True)
def _rhs(x, out, m_c, m_w, k_c, k_w, d_c, p, eps_v):
    f = k_c * (x[0] - x[2]) + _damper(x[1] - x[3], d_c, p, eps_v)
    out[0] = x[1]
    out[1] = -f / m_c
    out[2] = x[3]
    out[3] = (f - k_w * x[2]) / m_w


def monolithic_derivatives(state, params: QuarterCarParams) -> np.ndarray:
    """Time derivative of ``(z_c, v_c, z_w, v_w)`` for the un-split model."""
    x = state.as_array() if isinstance(state, QuarterCarState) else np.asarray(state, dtype=float)
    out = np.empty(4)
    _rhs(x, out, *params.as_tuple())
    return out


def transmitted_reference_power(x: np.ndarray, params: QuarterCarParams, variant: int) -> np.ndarray:
    """``P12`` of an exactly coupled split, from monolithic states of shape ``(..., 4)``."""
    x = np.asarray(x, dtype=float)
    z_c, v_c, z_w, v_w = np.moveaxis(x, -1, 0)
    dv = v_c - v_w
    f = params.k_c * (z_c - z_w) + _damper_array(dv, params)
    if variant == 1:
        return v_c * f
    if variant == 2:
        return f * v_w
    raise UnknownVariant(f"reticulation must be 1 or 2, got {variant}")
