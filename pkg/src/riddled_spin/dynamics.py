"""Vector fields and potentials of the forced twin-well oscillator.

The longitudinal coordinate x lives in a quartic twin well and is driven
periodically; the transverse coordinate y couples to x through a weak
sinusoidal potential and is integrated in rescaled units (physical
transverse displacement divided by the coupling scale epsilon).  In these
units the invariant manifolds sit at y = 0, pi/2, pi independently of
epsilon, and epsilon survives only in the O(eps^2) back-reaction on x.

Everything here is a pure function of its arguments; this module is the
single source of truth for the equations of motion that the integrator,
basin classifier and measurement layers consume.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAU = 2.0 * math.pi
HALF_TAU = TAU / 2.0

# Critical transverse-stability offset: below this value the y = 0 manifold
# stops being attracting on average.  A property of the parameter family,
# not a tunable.
XBAR_CRITICAL = 1.7887


def reduce_angle(z: float) -> float:
    """Reduce z to the equivalent angle in [-pi, pi].

    Uses fmod, which is exact, followed by Sterbenz-exact corrections; the
    reduction therefore commutes bit-for-bit with sign flips and with
    shifts by the floating-point value of 2*pi.  Centralized so that the
    vector field and all classification entry points share one reduction.
    """
    r = math.fmod(z, TAU)
    if r > HALF_TAU:
        r -= TAU
    elif r < -HALF_TAU:
        r += TAU
    return r


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the governing equations.

    gamma:   friction coefficient (> 0)
    p:       forcing amplitude
    omega:   forcing angular frequency (> 0)
    epsilon: transverse coupling scale (> 0)
    xbar:    transverse-stability offset; riddling requires values close
             to, but above, XBAR_CRITICAL
    """

    gamma: float = 0.05
    p: float = 2.3
    omega: float = 3.5
    epsilon: float = 0.01
    xbar: float = 1.81

    # Fixed constant of the parameter family (see XBAR_CRITICAL).
    xbar_cr: float = XBAR_CRITICAL

    def __post_init__(self) -> None:
        if not (self.gamma > 0 and self.omega > 0 and self.epsilon > 0):
            raise ValueError("gamma, omega and epsilon must be positive")
        if self.xbar_cr != XBAR_CRITICAL:
            raise ValueError("xbar_cr is a fixed constant, not a tunable")

    @property
    def period(self) -> float:
        """One forcing period, 2*pi/omega."""
        return TAU / self.omega


@dataclass(frozen=True)
class PhaseState:
    """Instantaneous state (t, x, dx/dt, y, dy/dt), y in rescaled units.

    y is stored unwrapped; angular reduction happens only inside the
    vector field and at classification time.
    """

    t: float
    x: float
    vx: float
    y: float
    vy: float

    def __post_init__(self) -> None:
        for name in ("t", "x", "vx", "y", "vy"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite state component {name!r}")

    def to_array(self) -> np.ndarray:
        """Dynamic components (x, vx, y, vy) as an array."""
        return np.array([self.x, self.vx, self.y, self.vy])

    @classmethod
    def from_array(cls, t: float, u: np.ndarray) -> "PhaseState":
        return cls(t=t, x=u[0], vx=u[1], y=u[2], vy=u[3])


def potential_vd(x: float) -> float:
    """Twin-well quartic potential (1 - x^2)^2."""
    return (1.0 - x * x) ** 2


def potential_vq(x: float, y: float, params: SystemParams) -> float:
    """Coupled potential (1 - x^2)^2 + eps^2 (x + xbar) sin^2(y).

    y is the rescaled transverse coordinate.
    """
    e2 = params.epsilon * params.epsilon
    sy = math.sin(reduce_angle(y))
    return (1.0 - x * x) ** 2 + e2 * (x + params.xbar) * sy * sy


def _duffing_ax(t: float, x: float, vx: float, params: SystemParams) -> float:
    # Shared by rhs_duffing and rhs_full so that the eps -> 0 limit is
    # bit-identical between the two.
    return -params.gamma * vx + 4.0 * x * (1.0 - x * x) + params.p * math.sin(params.omega * t)


def rhs_duffing(t: float, x: float, vx: float, params: SystemParams) -> np.ndarray:
    """Time derivative (dx/dt, d2x/dt2) of the decoupled twin-well oscillator."""
    return np.array([vx, _duffing_ax(t, x, vx, params)])


def rhs_full(state: PhaseState, params: SystemParams) -> np.ndarray:
    """Time derivative of the full state, ordered (dt, dx, dvx, dy, dvy).

    The transverse torque and the back-coupling on x are evaluated from the
    reduced angle 2y so that the two mirror-related field symmetries hold
    exactly in floating point: the y-components at (x, y, vy) and at
    (x, pi - y, -vy) are exact negatives and the x-components are equal,
    whenever pi - y is itself exact.
    """
    r = reduce_angle(2.0 * state.y)
    coupling = 0.5 - 0.5 * math.cos(r)  # == sin^2(y), even under y -> pi - y
    e2 = params.epsilon * params.epsilon
    ax = _duffing_ax(state.t, state.x, state.vx, params) - e2 * coupling
    ay = -params.gamma * state.vy - (state.x + params.xbar) * math.sin(r)
    return np.array([1.0, state.vx, ax, state.vy, ay])


def transverse_jacobian(x: float, params: SystemParams) -> tuple[float, float]:
    """Coefficients (damping, stiffness) of the transverse linearization.

    Perturbations about y = 0 obey  d2u/dt2 = damping * du/dt + stiffness * u
    with damping = -gamma and stiffness = -2 (x + xbar).
    """
    return (-params.gamma, -2.0 * (x + params.xbar))


def field_full(params: SystemParams):
    """Vector field f(t, u) for u = (x, vx, y, vy), for the generic integrator."""

    gamma, p, omega, xbar = params.gamma, params.p, params.omega, params.xbar
    e2 = params.epsilon * params.epsilon

    def f(t: float, u: np.ndarray) -> np.ndarray:
        x, vx, y, vy = u[0], u[1], u[2], u[3]
        r = reduce_angle(2.0 * y)
        coupling = 0.5 - 0.5 * math.cos(r)
        ax = (-gamma * vx + 4.0 * x * (1.0 - x * x) + p * math.sin(omega * t)) - e2 * coupling
        ay = -gamma * vy - (x + xbar) * math.sin(r)
        return np.array([vx, ax, vy, ay])

    return f


def field_duffing(params: SystemParams):
    """Vector field f(t, u) for the decoupled subsystem u = (x, vx)."""

    gamma, p, omega = params.gamma, params.p, params.omega

    def f(t: float, u: np.ndarray) -> np.ndarray:
        x, vx = u[0], u[1]
        ax = -gamma * vx + 4.0 * x * (1.0 - x * x) + p * math.sin(omega * t)
        return np.array([vx, ax])

    return f


def field_tangent(params: SystemParams, frozen_x: float | None = None):
    """Vector field for the base orbit plus its transverse linearization.

    State u = (x, vx, uy, uvy) where (uy, uvy) is an infinitesimal
    transverse perturbation advected along the orbit.  With frozen_x set,
    the base orbit is pinned (validation hook: the tangent flow reduces to
    a damped linear oscillator with known decay rate -gamma/2).
    """

    gamma, p, omega, xbar = params.gamma, params.p, params.omega, params.xbar

    def f(t: float, u: np.ndarray) -> np.ndarray:
        x, vx, uy, uvy = u[0], u[1], u[2], u[3]
        if frozen_x is None:
            dx, dvx = vx, -gamma * vx + 4.0 * x * (1.0 - x * x) + p * math.sin(omega * t)
        else:
            x, dx, dvx = frozen_x, 0.0, 0.0
        auy = -gamma * uvy - 2.0 * (x + xbar) * uy
        return np.array([dx, dvx, uvy, auy])

    return f
