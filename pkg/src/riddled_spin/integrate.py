"""Time integration: fixed RK4, adaptive Dormand-Prince 5(4), forcing-phase
sections, attractor sampling and transverse Lyapunov statistics.

The accuracy knob is the per-step local error tolerance `tol`; the indexed
family tol0 / n realizes a monotone ladder of nominal accuracies.  A step
is accepted when the embedded error estimate does not exceed
tol * (1 + max-norm of the state); the step-size update factor is
0.9 * (tol / err)^(1/5), clamped to [0.2, 5.0], with the step itself
clamped to [h_min, h_max].

Expensive trajectory work is delegated to the compiled kernels in
`_kernels`; the generic callable-field integrator here follows the exact
same arithmetic (a test pins the two to bit-identical trajectories) and is
what validation oracles run against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import _kernels
from .dynamics import PhaseState, SystemParams, field_full
from .errors import NonFiniteError, StepUnderflowError, UnboundedError

_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_C1, _C3, _C4, _C5, _C6, _C7 = (
    5179.0 / 57600.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
)
_D2, _D3, _D4, _D5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0


class IntegrationStatus(Enum):
    COMPLETED = "completed"
    STOPPED = "stopped"
    STEP_UNDERFLOW = "step_underflow"


@dataclass(frozen=True)
class StepControl:
    """Stepper configuration.

    tol is the working tolerance; tol0 anchors the indexed family
    tol0 / n.  t_max is the hard horizon in forcing periods.
    """

    mode: str = "adaptive"
    tol: float = 1e-4
    tol0: float = 1e-4
    h_init: float = 1e-2
    h_min: float = 1e-10
    h_max: float = 0.2
    t_max: float = 5000.0

    def __post_init__(self) -> None:
        if self.mode not in ("adaptive", "fixed"):
            raise ValueError(f"unknown stepper mode {self.mode!r}")
        if not (0.0 < self.h_min <= self.h_init <= self.h_max):
            raise ValueError("require 0 < h_min <= h_init <= h_max")
        if not (self.tol > 0.0 and self.tol0 > 0.0):
            raise ValueError("tolerances must be positive")
        if not self.t_max > 0.0:
            raise ValueError("t_max must be positive")

    def tol_for_index(self, n: int) -> float:
        """Tolerance of the n-th member of the accuracy ladder, tol0 / n."""
        if not (isinstance(n, (int, np.integer)) and n >= 1):
            raise ValueError("tolerance index must be an integer >= 1")
        return self.tol0 / n

    def with_tol_index(self, n: int) -> "StepControl":
        return replace(self, tol=self.tol_for_index(n))


@dataclass(frozen=True)
class SectionState:
    """State sampled at forcing phase zero (omega * t = 0 mod 2*pi)."""

    state: PhaseState
    index: int


@dataclass(frozen=True)
class LyapunovStats:
    """Finite-window transverse growth statistics along the chaotic orbit.

    h_perp_mean: mean window exponent; sigma2: variance of the window
    exponents; d_coeff: diffusivity sigma2 * window / 2; eta_pred: the
    escape-exponent prediction |h_perp_mean| / d_coeff.
    """

    window: float
    n_windows: int
    h_perp_mean: float
    sigma2: float
    d_coeff: float
    eta_pred: float


def spawn_rng(seed: int, *stream) -> np.random.Generator:
    """Deterministic per-task generator derived from (seed, stream ids).

    Independent of scheduling: the stream key, not call order, fixes the
    draw sequence.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed,) + stream)))


def step_fixed(state: PhaseState, h: float, field) -> PhaseState:
    """One classical RK4 step of size h under field(t, u)."""
    if not h > 0.0:
        raise ValueError("step size must be positive")
    t = state.t
    u = state.to_array()
    k1 = field(t, u)
    k2 = field(t + 0.5 * h, u + (0.5 * h) * k1)
    k3 = field(t + 0.5 * h, u + (0.5 * h) * k2)
    k4 = field(t + h, u + h * k3)
    u1 = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.isfinite(u1).all():
        raise NonFiniteError(f"non-finite state after RK4 step from t={t}")
    return PhaseState.from_array(t + h, u1)


def _dp_step(field, t, u, h, f0):
    """One Dormand-Prince 5(4) trial step; returns the 5th-order solution,
    its derivative (FSAL) and the raw embedded error in max-norm."""
    k1 = f0
    k2 = field(t + _D2 * h, u + h * (_A21 * k1))
    k3 = field(t + _D3 * h, u + h * (_A31 * k1 + _A32 * k2))
    k4 = field(t + _D4 * h, u + h * (_A41 * k1 + _A42 * k2 + _A43 * k3))
    k5 = field(t + _D5 * h, u + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4))
    k6 = field(t + h, u + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5))
    u5 = u + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
    k7 = field(t + h, u5)
    u4 = u + h * (_C1 * k1 + _C3 * k3 + _C4 * k4 + _C5 * k5 + _C6 * k6 + _C7 * k7)
    err = float(np.abs(u5 - u4).max())
    return u5, k7, err


def _controller_factor(tol: float, enorm: float) -> float:
    if enorm == 0.0:
        return 5.0
    fac = 0.9 * (tol / enorm) ** 0.2
    if fac < 0.2:
        return 0.2
    if fac > 5.0:
        return 5.0
    return fac


def integrate_adaptive(
    state: PhaseState,
    params: SystemParams,
    control: StepControl,
    stop=None,
    field=None,
) -> tuple[PhaseState, IntegrationStatus]:
    """Advance the state until the stop condition fires, the horizon
    state.t + control.t_max forcing periods is reached, or the step size
    underflows h_min.

    field defaults to the full coupled vector field; a different callable
    (t, u) -> du of the same state shape may be supplied, which is how the
    analytic validation oracles are driven.  stop is evaluated on the
    initial state and after every accepted step.
    """
    f = field if field is not None else field_full(params)
    if stop is not None and stop(state):
        return state, IntegrationStatus.STOPPED

    t_end = state.t + control.t_max * params.period
    t = state.t
    u = state.to_array()
    f0 = f(t, u)
    h = control.h_init
    fixed = control.mode == "fixed"

    while t < t_end:
        h_try = h
        last = False
        if t_end - t <= h_try:
            h_try = t_end - t
            last = True
        if fixed:
            k1 = f0
            k2 = f(t + 0.5 * h_try, u + (0.5 * h_try) * k1)
            k3 = f(t + 0.5 * h_try, u + (0.5 * h_try) * k2)
            k4 = f(t + h_try, u + h_try * k3)
            u_new = u + (h_try / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            enorm = 0.0
            accept = True
        else:
            u_new, k7, err = _dp_step(f, t, u, h_try, f0)
            sn = float(np.abs(u).max())
            enorm = err / (1.0 + sn)
            accept = enorm <= control.tol
        if accept:
            if not np.isfinite(u_new).all():
                raise NonFiniteError(f"non-finite state near t={t}")
            t = t_end if last else t + h_try
            u = u_new
            f0 = f(t, u) if fixed else k7
            st = PhaseState.from_array(t, u)
            if stop is not None and stop(st):
                return st, IntegrationStatus.STOPPED
        if not fixed and not (accept and last):
            h = min(h_try * _controller_factor(control.tol, enorm), control.h_max)
            if h < control.h_min:
                return PhaseState.from_array(t, u), IntegrationStatus.STEP_UNDERFLOW

    return PhaseState.from_array(t, u), IntegrationStatus.COMPLETED


def _check_kernel_status(status: int, context: str) -> None:
    if status == _kernels.STATUS_NONFINITE:
        raise NonFiniteError(context)
    if status == _kernels.STATUS_UNDERFLOW:
        raise StepUnderflowError(context)
    if status == _kernels.STATUS_UNBOUNDED:
        raise UnboundedError(context)


def poincare_orbit(
    initial: PhaseState,
    params: SystemParams,
    control: StepControl,
    n_sections: int,
    burn_in: int = 0,
) -> list[SectionState]:
    """Record the state at the first n_sections forcing-phase-zero crossings
    strictly after the initial time, discarding burn_in crossings first."""
    if n_sections < 1:
        raise ValueError("n_sections must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    out = np.empty((n_sections, 5))
    status, n_written, *_ = _kernels.full_sections_kernel(
        initial.t,
        initial.x,
        initial.vx,
        initial.y,
        initial.vy,
        params.gamma,
        params.p,
        params.omega,
        params.epsilon,
        params.xbar,
        control.mode == "fixed",
        control.tol,
        control.h_init,
        control.h_min,
        control.h_max,
        n_sections,
        burn_in,
        out,
    )
    _check_kernel_status(status, "while recording section states")
    sections = []
    for i in range(n_written):
        st = PhaseState(t=out[i, 0], x=out[i, 1], vx=out[i, 2], y=out[i, 3], vy=out[i, 4])
        sections.append(SectionState(state=st, index=burn_in + i))
    return sections


_DEFAULT_CONTROL = StepControl()


def sample_attractor(
    params: SystemParams,
    n_samples: int,
    burn_in: int = 200,
    seed: int = 0,
    control: StepControl | None = None,
) -> np.ndarray:
    """Section-sampled (x, vx) points of the decoupled chaotic orbit,
    approximating its invariant measure.  The seed randomizes the initial
    condition inside the bounded-motion region; output shape (n_samples, 2).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    control = control or _DEFAULT_CONTROL
    rng = spawn_rng(seed, 0)
    x0, vx0 = rng.uniform(-1.0, 1.0, size=2)
    out = np.empty((n_samples, 2))
    status, n_written = _kernels.duffing_sections_kernel(
        x0,
        vx0,
        params.gamma,
        params.p,
        params.omega,
        control.tol,
        control.h_init,
        control.h_min,
        control.h_max,
        n_samples,
        burn_in,
        out,
    )
    _check_kernel_status(status, f"attractor sampling from ({x0:.3f}, {vx0:.3f})")
    return out


def sample_turning_points(
    params: SystemParams,
    n_samples: int,
    burn_in: int = 400,
    seed: int = 0,
    control: StepControl | None = None,
) -> np.ndarray:
    """x values of the decoupled orbit at its dx/dt = 0 crossings (both
    directions), interpolated on the accepted steps; this is the sampling
    density used to weight resting initial conditions.  burn_in counts
    discarded crossings."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    control = control or _DEFAULT_CONTROL
    rng = spawn_rng(seed, 0)
    x0, vx0 = rng.uniform(-1.0, 1.0, size=2)
    out = np.empty(n_samples)
    status, n_written = _kernels.duffing_turning_points_kernel(
        x0,
        vx0,
        params.gamma,
        params.p,
        params.omega,
        control.tol,
        control.h_init,
        control.h_min,
        control.h_max,
        n_samples,
        burn_in,
        out,
    )
    _check_kernel_status(status, f"turning-point sampling from ({x0:.3f}, {vx0:.3f})")
    return out


def transverse_lyapunov_stats(
    params: SystemParams,
    window: float,
    n_windows: int,
    seed: int = 0,
    control: StepControl | None = None,
    burn_in_periods: float = 200.0,
    frozen_x: float | None = None,
) -> LyapunovStats:
    """Mean and variance of finite-window transverse growth exponents.

    A unit transverse perturbation is advected along the chaotic orbit
    through the linearized transverse equation and renormalized every
    `window` time units; each window contributes ln(growth)/window.
    frozen_x pins the base orbit (validation hook: the exponent of the
    frozen system is the damped-oscillator decay rate -gamma/2).
    """
    if window < params.period:
        raise ValueError("window must be at least one forcing period")
    if n_windows < 2:
        raise ValueError("n_windows must be >= 2")
    control = control or _DEFAULT_CONTROL
    rng = spawn_rng(seed, 0)
    x0, vx0 = rng.uniform(-1.0, 1.0, size=2)
    out = np.empty(n_windows)
    status, n_done = _kernels.tangent_windows_kernel(
        x0,
        vx0,
        params.gamma,
        params.p,
        params.omega,
        params.xbar,
        control.tol,
        control.h_init,
        control.h_min,
        control.h_max,
        burn_in_periods * params.period,
        window,
        n_windows,
        frozen_x is not None,
        0.0 if frozen_x is None else frozen_x,
        out,
    )
    _check_kernel_status(status, "transverse tangent integration")
    mean = float(out.mean())
    sigma2 = float(out.var(ddof=1))
    d_coeff = sigma2 * window / 2.0
    eta_pred = abs(mean) / d_coeff if d_coeff > 0.0 else math.inf
    return LyapunovStats(
        window=window,
        n_windows=n_windows,
        h_perp_mean=mean,
        sigma2=sigma2,
        d_coeff=d_coeff,
        eta_pred=eta_pred,
    )
