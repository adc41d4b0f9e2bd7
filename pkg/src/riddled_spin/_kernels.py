"""Compiled integration kernels.

Scalar-state Dormand-Prince 5(4) steppers specialized to the production
vector fields, with cubic-Hermite dense output for forcing-phase sections
and turning points.  The stage combinations, error norm and step-size
update are written with exactly the same operation order as the generic
array-based integrator in `integrate`, and a test pins the two paths to
bit-identical trajectories.

When numba is unavailable the kernels run as plain Python (slow but
correct); with numba they are compiled nogil, so thread pools achieve real
cell-level parallelism.
"""
from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def deco(fn):
            return fn

        return deco

TAU = 2.0 * math.pi
HALF_TAU = TAU / 2.0

# Status codes shared with the Python layer.
STATUS_RESOLVED = 0
STATUS_HORIZON = 1
STATUS_UNDERFLOW = 2
STATUS_NONFINITE = 3
STATUS_UNBOUNDED = 4

# Step-size controller constants (order-5 error exponent).
_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0

# Dormand-Prince 5(4) tableau.
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
_D2, _D3, _D4, _D5, _D6, _D8 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0


@njit(cache=True, nogil=True)
def _rem_tau(z):
    # Exact reduction to [-pi, pi]; mirrors dynamics.reduce_angle.
    r = np.fmod(z, TAU)
    if r > HALF_TAU:
        r -= TAU
    elif r < -HALF_TAU:
        r += TAU
    return r


@njit(cache=True, nogil=True)
def _accel_full(t, x, vx, y, vy, gamma, p, omega, e2, xbar):
    r = _rem_tau(2.0 * y)
    coupling = 0.5 - 0.5 * math.cos(r)
    ax = (-gamma * vx + 4.0 * x * (1.0 - x * x) + p * math.sin(omega * t)) - e2 * coupling
    ay = -gamma * vy - (x + xbar) * math.sin(r)
    return ax, ay


@njit(cache=True, nogil=True)
def _accel_duffing(t, x, vx, gamma, p, omega):
    return -gamma * vx + 4.0 * x * (1.0 - x * x) + p * math.sin(omega * t)


@njit(cache=True, nogil=True)
def _step_full(t, x, vx, y, vy, h, k1x, k1vx, k1y, k1vy, gamma, p, omega, e2, xbar):
    """One DP5(4) trial step of the full field; returns the 5th-order state,
    the derivative there (FSAL stage) and the raw embedded error (max norm)."""
    u2x = x + h * (_A21 * k1x)
    u2vx = vx + h * (_A21 * k1vx)
    u2y = y + h * (_A21 * k1y)
    u2vy = vy + h * (_A21 * k1vy)
    a, b = _accel_full(t + _D2 * h, u2x, u2vx, u2y, u2vy, gamma, p, omega, e2, xbar)
    k2x, k2vx, k2y, k2vy = u2vx, a, u2vy, b

    u3x = x + h * (_A31 * k1x + _A32 * k2x)
    u3vx = vx + h * (_A31 * k1vx + _A32 * k2vx)
    u3y = y + h * (_A31 * k1y + _A32 * k2y)
    u3vy = vy + h * (_A31 * k1vy + _A32 * k2vy)
    a, b = _accel_full(t + _D3 * h, u3x, u3vx, u3y, u3vy, gamma, p, omega, e2, xbar)
    k3x, k3vx, k3y, k3vy = u3vx, a, u3vy, b

    u4x = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
    u4vx = vx + h * (_A41 * k1vx + _A42 * k2vx + _A43 * k3vx)
    u4y = y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y)
    u4vy = vy + h * (_A41 * k1vy + _A42 * k2vy + _A43 * k3vy)
    a, b = _accel_full(t + _D4 * h, u4x, u4vx, u4y, u4vy, gamma, p, omega, e2, xbar)
    k4x, k4vx, k4y, k4vy = u4vx, a, u4vy, b

    u5x = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
    u5vx = vx + h * (_A51 * k1vx + _A52 * k2vx + _A53 * k3vx + _A54 * k4vx)
    u5y = y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y)
    u5vy = vy + h * (_A51 * k1vy + _A52 * k2vy + _A53 * k3vy + _A54 * k4vy)
    a, b = _accel_full(t + _D5 * h, u5x, u5vx, u5y, u5vy, gamma, p, omega, e2, xbar)
    k5x, k5vx, k5y, k5vy = u5vx, a, u5vy, b

    u6x = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x)
    u6vx = vx + h * (_A61 * k1vx + _A62 * k2vx + _A63 * k3vx + _A64 * k4vx + _A65 * k5vx)
    u6y = y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y)
    u6vy = vy + h * (_A61 * k1vy + _A62 * k2vy + _A63 * k3vy + _A64 * k4vy + _A65 * k5vy)
    a, b = _accel_full(t + _D6 * h, u6x, u6vx, u6y, u6vy, gamma, p, omega, e2, xbar)
    k6x, k6vx, k6y, k6vy = u6vx, a, u6vy, b

    nx = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
    nvx = vx + h * (_B1 * k1vx + _B3 * k3vx + _B4 * k4vx + _B5 * k5vx + _B6 * k6vx)
    ny = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
    nvy = vy + h * (_B1 * k1vy + _B3 * k3vy + _B4 * k4vy + _B5 * k5vy + _B6 * k6vy)
    a, b = _accel_full(t + _D8 * h, nx, nvx, ny, nvy, gamma, p, omega, e2, xbar)
    k7x, k7vx, k7y, k7vy = nvx, a, nvy, b

    lx = x + h * (_C1 * k1x + _C3 * k3x + _C4 * k4x + _C5 * k5x + _C6 * k6x + _C7 * k7x)
    lvx = vx + h * (_C1 * k1vx + _C3 * k3vx + _C4 * k4vx + _C5 * k5vx + _C6 * k6vx + _C7 * k7vx)
    ly = y + h * (_C1 * k1y + _C3 * k3y + _C4 * k4y + _C5 * k5y + _C6 * k6y + _C7 * k7y)
    lvy = vy + h * (_C1 * k1vy + _C3 * k3vy + _C4 * k4vy + _C5 * k5vy + _C6 * k6vy + _C7 * k7vy)

    err = abs(nx - lx)
    e = abs(nvx - lvx)
    if e > err:
        err = e
    e = abs(ny - ly)
    if e > err:
        err = e
    e = abs(nvy - lvy)
    if e > err:
        err = e
    return nx, nvx, ny, nvy, k7x, k7vx, k7y, k7vy, err


@njit(cache=True, nogil=True)
def _rk4_step_full(t, x, vx, y, vy, h, k1x, k1vx, k1y, k1vy, gamma, p, omega, e2, xbar):
    """Classical fixed RK4 step plus the end-point derivative for dense output."""
    u2x = x + (0.5 * h) * k1x
    u2vx = vx + (0.5 * h) * k1vx
    u2y = y + (0.5 * h) * k1y
    u2vy = vy + (0.5 * h) * k1vy
    a, b = _accel_full(t + 0.5 * h, u2x, u2vx, u2y, u2vy, gamma, p, omega, e2, xbar)
    k2x, k2vx, k2y, k2vy = u2vx, a, u2vy, b

    u3x = x + (0.5 * h) * k2x
    u3vx = vx + (0.5 * h) * k2vx
    u3y = y + (0.5 * h) * k2y
    u3vy = vy + (0.5 * h) * k2vy
    a, b = _accel_full(t + 0.5 * h, u3x, u3vx, u3y, u3vy, gamma, p, omega, e2, xbar)
    k3x, k3vx, k3y, k3vy = u3vx, a, u3vy, b

    u4x = x + h * k3x
    u4vx = vx + h * k3vx
    u4y = y + h * k3y
    u4vy = vy + h * k3vy
    a, b = _accel_full(t + h, u4x, u4vx, u4y, u4vy, gamma, p, omega, e2, xbar)
    k4x, k4vx, k4y, k4vy = u4vx, a, u4vy, b

    nx = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    nvx = vx + (h / 6.0) * (k1vx + 2.0 * k2vx + 2.0 * k3vx + k4vx)
    ny = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    nvy = vy + (h / 6.0) * (k1vy + 2.0 * k2vy + 2.0 * k3vy + k4vy)
    a, b = _accel_full(t + h, nx, nvx, ny, nvy, gamma, p, omega, e2, xbar)
    return nx, nvx, ny, nvy, nvx, a, nvy, b


@njit(cache=True, nogil=True)
def _hermite(s, h, u0, f0, u1, f1):
    # Cubic Hermite basis on the accepted step, s in [0, 1].
    h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s)
    h10 = s * (1.0 - s) * (1.0 - s)
    h01 = s * s * (3.0 - 2.0 * s)
    h11 = s * s * (s - 1.0)
    return h00 * u0 + h10 * h * f0 + h01 * u1 + h11 * h * f1


@njit(cache=True, nogil=True)
def classify_kernel(
    x0,
    vx0,
    y0,
    vy0,
    gamma,
    p,
    omega,
    epsilon,
    xbar,
    fixed_mode,
    tol,
    h_init,
    h_min,
    h_max,
    delta_y,
    delta_v,
    k_sections,
    t_max_periods,
):
    """Integrate from (x0, vx0, y0, vy0) at t = 0 until the transverse
    coordinate is captured by one of the attracting manifolds.

    Capture: at k_sections consecutive forcing-phase sections, the folded
    distance of y to an even (label +1) or odd (label -1) multiple of pi
    and |vy| both stay below (delta_y, delta_v).

    Returns (label, status, t_resolve, x, vx, y, vy, n_steps); the state is
    the section-interpolated state at resolution (or the last integrator
    state when unresolved).
    """
    e2 = epsilon * epsilon
    period = TAU / omega
    t_end = t_max_periods * period

    t = 0.0
    x, vx, y, vy = x0, vx0, y0, vy0
    h = h_init
    ax, ay = _accel_full(t, x, vx, y, vy, gamma, p, omega, e2, xbar)
    f0x, f0vx, f0y, f0vy = vx, ax, vy, ay

    k_next = 1
    cnt_p = 0
    cnt_m = 0
    n_steps = 0

    while t < t_end:
        h_try = h
        last = False
        if t_end - t <= h_try:
            h_try = t_end - t
            last = True
        if fixed_mode:
            nx, nvx, ny, nvy, g0, g1, g2, g3 = _rk4_step_full(
                t, x, vx, y, vy, h_try, f0x, f0vx, f0y, f0vy, gamma, p, omega, e2, xbar
            )
            enorm = 0.0
            accept = True
        else:
            nx, nvx, ny, nvy, g0, g1, g2, g3, err = _step_full(
                t, x, vx, y, vy, h_try, f0x, f0vx, f0y, f0vy, gamma, p, omega, e2, xbar
            )
            sn = abs(x)
            e = abs(vx)
            if e > sn:
                sn = e
            e = abs(y)
            if e > sn:
                sn = e
            e = abs(vy)
            if e > sn:
                sn = e
            enorm = err / (1.0 + sn)
            accept = enorm <= tol
        n_steps += 1

        if accept:
            if not (math.isfinite(nx) and math.isfinite(nvx) and math.isfinite(ny) and math.isfinite(nvy)):
                return 0, STATUS_NONFINITE, t, x, vx, y, vy, n_steps
            t1 = t_end if last else t + h_try
            while True:
                ts = k_next * period
                if ts > t1 + 1e-12:
                    break
                s = (ts - t) / h_try
                ys = _hermite(s, h_try, y, f0y, ny, g2)
                vys = _hermite(s, h_try, vy, f0vy, nvy, g3)
                d0 = abs(_rem_tau(ys))
                dpi = HALF_TAU - d0
                if d0 < delta_y and abs(vys) < delta_v:
                    cnt_p += 1
                else:
                    cnt_p = 0
                if dpi < delta_y and abs(vys) < delta_v:
                    cnt_m += 1
                else:
                    cnt_m = 0
                if cnt_p >= k_sections or cnt_m >= k_sections:
                    xs = _hermite(s, h_try, x, f0x, nx, g0)
                    vxs = _hermite(s, h_try, vx, f0vx, nvx, g1)
                    label = 1 if cnt_p >= k_sections else -1
                    return label, STATUS_RESOLVED, ts, xs, vxs, ys, vys, n_steps
                k_next += 1
            t = t1
            x, vx, y, vy = nx, nvx, ny, nvy
            f0x, f0vx, f0y, f0vy = g0, g1, g2, g3

        # Controller: skipped in fixed mode and after an accepted step that
        # was clamped to the horizon (keeps the adapted h intact).
        if not fixed_mode and not (accept and last):
            if enorm == 0.0:
                fac = _FAC_MAX
            else:
                fac = _SAFETY * (tol / enorm) ** 0.2
                if fac < _FAC_MIN:
                    fac = _FAC_MIN
                elif fac > _FAC_MAX:
                    fac = _FAC_MAX
            h = h_try * fac
            if h > h_max:
                h = h_max
            if h < h_min:
                return 0, STATUS_UNDERFLOW, t, x, vx, y, vy, n_steps

    return 0, STATUS_HORIZON, t, x, vx, y, vy, n_steps


@njit(cache=True, nogil=True)
def full_sections_kernel(
    t0,
    x0,
    vx0,
    y0,
    vy0,
    gamma,
    p,
    omega,
    epsilon,
    xbar,
    fixed_mode,
    tol,
    h_init,
    h_min,
    h_max,
    n_record,
    burn_in,
    out,
):
    """Record (t, x, vx, y, vy) at forcing-phase sections strictly after t0,
    discarding the first burn_in crossings.  out has shape (n_record, 5).

    Returns (status, n_written, t, x, vx, y, vy) with the final integrator
    state; status HORIZON is only reachable through the safety horizon of
    1e9 time units.
    """
    e2 = epsilon * epsilon
    period = TAU / omega
    t_end = 1e9

    t = t0
    x, vx, y, vy = x0, vx0, y0, vy0
    h = h_init
    ax, ay = _accel_full(t, x, vx, y, vy, gamma, p, omega, e2, xbar)
    f0x, f0vx, f0y, f0vy = vx, ax, vy, ay

    k_next = int(math.floor(t0 / period + 1e-9)) + 1
    n_seen = 0
    n_written = 0

    while n_written < n_record and t < t_end:
        h_try = h
        if fixed_mode:
            nx, nvx, ny, nvy, g0, g1, g2, g3 = _rk4_step_full(
                t, x, vx, y, vy, h_try, f0x, f0vx, f0y, f0vy, gamma, p, omega, e2, xbar
            )
            enorm = 0.0
            accept = True
        else:
            nx, nvx, ny, nvy, g0, g1, g2, g3, err = _step_full(
                t, x, vx, y, vy, h_try, f0x, f0vx, f0y, f0vy, gamma, p, omega, e2, xbar
            )
            sn = abs(x)
            e = abs(vx)
            if e > sn:
                sn = e
            e = abs(y)
            if e > sn:
                sn = e
            e = abs(vy)
            if e > sn:
                sn = e
            enorm = err / (1.0 + sn)
            accept = enorm <= tol

        if accept:
            if not (math.isfinite(nx) and math.isfinite(nvx) and math.isfinite(ny) and math.isfinite(nvy)):
                return STATUS_NONFINITE, n_written, t, x, vx, y, vy
            t1 = t + h_try
            while n_written < n_record:
                ts = k_next * period
                if ts > t1 + 1e-12:
                    break
                if n_seen >= burn_in:
                    s = (ts - t) / h_try
                    out[n_written, 0] = ts
                    out[n_written, 1] = _hermite(s, h_try, x, f0x, nx, g0)
                    out[n_written, 2] = _hermite(s, h_try, vx, f0vx, nvx, g1)
                    out[n_written, 3] = _hermite(s, h_try, y, f0y, ny, g2)
                    out[n_written, 4] = _hermite(s, h_try, vy, f0vy, nvy, g3)
                    n_written += 1
                n_seen += 1
                k_next += 1
            t = t1
            x, vx, y, vy = nx, nvx, ny, nvy
            f0x, f0vx, f0y, f0vy = g0, g1, g2, g3

        if not fixed_mode:
            if enorm == 0.0:
                fac = _FAC_MAX
            else:
                fac = _SAFETY * (tol / enorm) ** 0.2
                if fac < _FAC_MIN:
                    fac = _FAC_MIN
                elif fac > _FAC_MAX:
                    fac = _FAC_MAX
            h = h_try * fac
            if h > h_max:
                h = h_max
            if h < h_min:
                return STATUS_UNDERFLOW, n_written, t, x, vx, y, vy

    return STATUS_RESOLVED, n_written, t, x, vx, y, vy


@njit(cache=True, nogil=True)
def _accel_tangent(t, x, vx, uy, uvy, gamma, p, omega, xbar, frozen):
    if frozen:
        dx = 0.0
        dvx = 0.0
    else:
        dx = vx
        dvx = _accel_duffing(t, x, vx, gamma, p, omega)
    duvy = -gamma * uvy - 2.0 * (x + xbar) * uy
    return dx, dvx, uvy, duvy


@njit(cache=True, nogil=True)
def _step_tangent(t, x, vx, uy, uvy, h, k1a, k1b, k1c, k1d, gamma, p, omega, xbar, frozen):
    u2a = x + h * (_A21 * k1a)
    u2b = vx + h * (_A21 * k1b)
    u2c = uy + h * (_A21 * k1c)
    u2d = uvy + h * (_A21 * k1d)
    k2a, k2b, k2c, k2d = _accel_tangent(t + _D2 * h, u2a, u2b, u2c, u2d, gamma, p, omega, xbar, frozen)

    u3a = x + h * (_A31 * k1a + _A32 * k2a)
    u3b = vx + h * (_A31 * k1b + _A32 * k2b)
    u3c = uy + h * (_A31 * k1c + _A32 * k2c)
    u3d = uvy + h * (_A31 * k1d + _A32 * k2d)
    k3a, k3b, k3c, k3d = _accel_tangent(t + _D3 * h, u3a, u3b, u3c, u3d, gamma, p, omega, xbar, frozen)

    u4a = x + h * (_A41 * k1a + _A42 * k2a + _A43 * k3a)
    u4b = vx + h * (_A41 * k1b + _A42 * k2b + _A43 * k3b)
    u4c = uy + h * (_A41 * k1c + _A42 * k2c + _A43 * k3c)
    u4d = uvy + h * (_A41 * k1d + _A42 * k2d + _A43 * k3d)
    k4a, k4b, k4c, k4d = _accel_tangent(t + _D4 * h, u4a, u4b, u4c, u4d, gamma, p, omega, xbar, frozen)

    u5a = x + h * (_A51 * k1a + _A52 * k2a + _A53 * k3a + _A54 * k4a)
    u5b = vx + h * (_A51 * k1b + _A52 * k2b + _A53 * k3b + _A54 * k4b)
    u5c = uy + h * (_A51 * k1c + _A52 * k2c + _A53 * k3c + _A54 * k4c)
    u5d = uvy + h * (_A51 * k1d + _A52 * k2d + _A53 * k3d + _A54 * k4d)
    k5a, k5b, k5c, k5d = _accel_tangent(t + _D5 * h, u5a, u5b, u5c, u5d, gamma, p, omega, xbar, frozen)

    u6a = x + h * (_A61 * k1a + _A62 * k2a + _A63 * k3a + _A64 * k4a + _A65 * k5a)
    u6b = vx + h * (_A61 * k1b + _A62 * k2b + _A63 * k3b + _A64 * k4b + _A65 * k5b)
    u6c = uy + h * (_A61 * k1c + _A62 * k2c + _A63 * k3c + _A64 * k4c + _A65 * k5c)
    u6d = uvy + h * (_A61 * k1d + _A62 * k2d + _A63 * k3d + _A64 * k4d + _A65 * k5d)
    k6a, k6b, k6c, k6d = _accel_tangent(t + _D6 * h, u6a, u6b, u6c, u6d, gamma, p, omega, xbar, frozen)

    na = x + h * (_B1 * k1a + _B3 * k3a + _B4 * k4a + _B5 * k5a + _B6 * k6a)
    nb = vx + h * (_B1 * k1b + _B3 * k3b + _B4 * k4b + _B5 * k5b + _B6 * k6b)
    nc = uy + h * (_B1 * k1c + _B3 * k3c + _B4 * k4c + _B5 * k5c + _B6 * k6c)
    nd = uvy + h * (_B1 * k1d + _B3 * k3d + _B4 * k4d + _B5 * k5d + _B6 * k6d)
    k7a, k7b, k7c, k7d = _accel_tangent(t + _D8 * h, na, nb, nc, nd, gamma, p, omega, xbar, frozen)

    la = x + h * (_C1 * k1a + _C3 * k3a + _C4 * k4a + _C5 * k5a + _C6 * k6a + _C7 * k7a)
    lb = vx + h * (_C1 * k1b + _C3 * k3b + _C4 * k4b + _C5 * k5b + _C6 * k6b + _C7 * k7b)
    lc = uy + h * (_C1 * k1c + _C3 * k3c + _C4 * k4c + _C5 * k5c + _C6 * k6c + _C7 * k7c)
    ld = uvy + h * (_C1 * k1d + _C3 * k3d + _C4 * k4d + _C5 * k5d + _C6 * k6d + _C7 * k7d)

    err = abs(na - la)
    e = abs(nb - lb)
    if e > err:
        err = e
    e = abs(nc - lc)
    if e > err:
        err = e
    e = abs(nd - ld)
    if e > err:
        err = e
    return na, nb, nc, nd, k7a, k7b, k7c, k7d, err


@njit(cache=True, nogil=True)
def tangent_windows_kernel(
    x0,
    vx0,
    gamma,
    p,
    omega,
    xbar,
    tol,
    h_init,
    h_min,
    h_max,
    burn_time,
    window,
    n_windows,
    frozen,
    frozen_x,
    out,
):
    """Finite-window growth exponents of a transverse perturbation carried
    along the base orbit.  out receives n_windows exponents; the tangent
    vector is renormalized at each window boundary.

    Returns (status, n_done).
    """
    t = 0.0
    x = frozen_x if frozen else x0
    vx = 0.0 if frozen else vx0
    uy, uvy = 1.0, 0.0
    h = h_init

    da, db, dc, dd = _accel_tangent(t, x, vx, uy, uvy, gamma, p, omega, xbar, frozen)

    n_done = 0
    # target times: burn_time, then burn_time + k*window
    t_target = burn_time
    norm_prev = math.sqrt(uy * uy + uvy * uvy)

    while n_done < n_windows:
        h_try = h
        last = False
        if t_target - t <= h_try:
            h_try = t_target - t
            last = True
        na, nb, nc, nd, g0, g1, g2, g3, err = _step_tangent(
            t, x, vx, uy, uvy, h_try, da, db, dc, dd, gamma, p, omega, xbar, frozen
        )
        sn = abs(x)
        e = abs(vx)
        if e > sn:
            sn = e
        e = abs(uy)
        if e > sn:
            sn = e
        e = abs(uvy)
        if e > sn:
            sn = e
        enorm = err / (1.0 + sn)

        accept = enorm <= tol
        if accept:
            if not (math.isfinite(na) and math.isfinite(nb) and math.isfinite(nc) and math.isfinite(nd)):
                return STATUS_NONFINITE, n_done
            x, vx, uy, uvy = na, nb, nc, nd
            if last:
                t = t_target
                if t_target > burn_time:
                    norm_now = math.sqrt(uy * uy + uvy * uvy)
                    out[n_done] = math.log(norm_now / norm_prev) / window
                    n_done += 1
                # renormalize for the next window
                norm_now = math.sqrt(uy * uy + uvy * uvy)
                uy /= norm_now
                uvy /= norm_now
                norm_prev = 1.0
                da, db, dc, dd = _accel_tangent(t, x, vx, uy, uvy, gamma, p, omega, xbar, frozen)
                t_target = t + window
            else:
                t = t + h_try
                da, db, dc, dd = g0, g1, g2, g3

        if not (accept and last):
            if enorm == 0.0:
                fac = _FAC_MAX
            else:
                fac = _SAFETY * (tol / enorm) ** 0.2
                if fac < _FAC_MIN:
                    fac = _FAC_MIN
                elif fac > _FAC_MAX:
                    fac = _FAC_MAX
            h = h_try * fac
            if h > h_max:
                h = h_max
            if h < h_min:
                return STATUS_UNDERFLOW, n_done

    return STATUS_RESOLVED, n_done


@njit(cache=True, nogil=True)
def _step_duffing(t, x, vx, h, k1x, k1v, gamma, p, omega):
    u2x = x + h * (_A21 * k1x)
    u2v = vx + h * (_A21 * k1v)
    k2x, k2v = u2v, _accel_duffing(t + _D2 * h, u2x, u2v, gamma, p, omega)

    u3x = x + h * (_A31 * k1x + _A32 * k2x)
    u3v = vx + h * (_A31 * k1v + _A32 * k2v)
    k3x, k3v = u3v, _accel_duffing(t + _D3 * h, u3x, u3v, gamma, p, omega)

    u4x = x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x)
    u4v = vx + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v)
    k4x, k4v = u4v, _accel_duffing(t + _D4 * h, u4x, u4v, gamma, p, omega)

    u5x = x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x)
    u5v = vx + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v)
    k5x, k5v = u5v, _accel_duffing(t + _D5 * h, u5x, u5v, gamma, p, omega)

    u6x = x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x)
    u6v = vx + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v)
    k6x, k6v = u6v, _accel_duffing(t + _D6 * h, u6x, u6v, gamma, p, omega)

    nx = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
    nv = vx + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
    k7x, k7v = nv, _accel_duffing(t + _D8 * h, nx, nv, gamma, p, omega)

    lx = x + h * (_C1 * k1x + _C3 * k3x + _C4 * k4x + _C5 * k5x + _C6 * k6x + _C7 * k7x)
    lv = vx + h * (_C1 * k1v + _C3 * k3v + _C4 * k4v + _C5 * k5v + _C6 * k6v + _C7 * k7v)

    err = abs(nx - lx)
    e = abs(nv - lv)
    if e > err:
        err = e
    return nx, nv, k7x, k7v, err


@njit(cache=True, nogil=True)
def duffing_sections_kernel(
    x0, vx0, gamma, p, omega, tol, h_init, h_min, h_max, n_record, burn_in, out
):
    """Poincare-section samples (x, vx) of the decoupled twin-well orbit.

    out has shape (n_record, 2).  Returns (status, n_written).
    """
    period = TAU / omega
    t = 0.0
    x, vx = x0, vx0
    h = h_init
    f0x, f0v = vx, _accel_duffing(t, x, vx, gamma, p, omega)

    k_next = 1
    n_seen = 0
    n_written = 0

    while n_written < n_record:
        h_try = h
        nx, nv, g0, g1, err = _step_duffing(t, x, vx, h_try, f0x, f0v, gamma, p, omega)
        sn = abs(x)
        e = abs(vx)
        if e > sn:
            sn = e
        enorm = err / (1.0 + sn)

        if enorm <= tol:
            if not (math.isfinite(nx) and math.isfinite(nv)):
                return STATUS_NONFINITE, n_written
            if abs(nx) > 10.0:
                return STATUS_UNBOUNDED, n_written
            t1 = t + h_try
            while n_written < n_record:
                ts = k_next * period
                if ts > t1 + 1e-12:
                    break
                if n_seen >= burn_in:
                    s = (ts - t) / h_try
                    out[n_written, 0] = _hermite(s, h_try, x, f0x, nx, g0)
                    out[n_written, 1] = _hermite(s, h_try, vx, f0v, nv, g1)
                    n_written += 1
                n_seen += 1
                k_next += 1
            t = t1
            x, vx = nx, nv
            f0x, f0v = g0, g1

        if enorm == 0.0:
            fac = _FAC_MAX
        else:
            fac = _SAFETY * (tol / enorm) ** 0.2
            if fac < _FAC_MIN:
                fac = _FAC_MIN
            elif fac > _FAC_MAX:
                fac = _FAC_MAX
        h = h_try * fac
        if h > h_max:
            h = h_max
        if h < h_min:
            return STATUS_UNDERFLOW, n_written

    return STATUS_RESOLVED, n_written


@njit(cache=True, nogil=True)
def duffing_turning_points_kernel(
    x0, vx0, gamma, p, omega, tol, h_init, h_min, h_max, n_record, burn_in, out
):
    """x values at interpolated vx = 0 crossings (both directions) of the
    decoupled orbit.  out has shape (n_record,).  Returns (status, n_written).
    """
    t = 0.0
    x, vx = x0, vx0
    h = h_init
    f0x, f0v = vx, _accel_duffing(t, x, vx, gamma, p, omega)

    n_seen = 0
    n_written = 0

    while n_written < n_record:
        h_try = h
        nx, nv, g0, g1, err = _step_duffing(t, x, vx, h_try, f0x, f0v, gamma, p, omega)
        sn = abs(x)
        e = abs(vx)
        if e > sn:
            sn = e
        enorm = err / (1.0 + sn)

        if enorm <= tol:
            if not (math.isfinite(nx) and math.isfinite(nv)):
                return STATUS_NONFINITE, n_written
            if abs(nx) > 10.0:
                return STATUS_UNBOUNDED, n_written
            # scan the Hermite interpolant of vx for sign changes
            sprev = 0.0
            vprev = vx
            for j in range(1, 5):
                scur = 0.25 * j
                vcur = nv if j == 4 else _hermite(scur, h_try, vx, f0v, nv, g1)
                if (vprev > 0.0 and vcur <= 0.0) or (vprev < 0.0 and vcur >= 0.0):
                    lo, vlo = sprev, vprev
                    hi = scur
                    for _ in range(60):
                        mid = 0.5 * (lo + hi)
                        vmid = _hermite(mid, h_try, vx, f0v, nv, g1)
                        if (vlo > 0.0 and vmid <= 0.0) or (vlo < 0.0 and vmid >= 0.0):
                            hi = mid
                        else:
                            lo, vlo = mid, vmid
                    sroot = 0.5 * (lo + hi)
                    if n_seen >= burn_in:
                        out[n_written] = _hermite(sroot, h_try, x, f0x, nx, g0)
                        n_written += 1
                        if n_written >= n_record:
                            break
                    n_seen += 1
                sprev, vprev = scur, vcur
            t = t + h_try
            x, vx = nx, nv
            f0x, f0v = g0, g1

        if enorm == 0.0:
            fac = _FAC_MAX
        else:
            fac = _SAFETY * (tol / enorm) ** 0.2
            if fac < _FAC_MIN:
                fac = _FAC_MIN
            elif fac > _FAC_MAX:
                fac = _FAC_MAX
        h = h_try * fac
        if h > h_max:
            h = h_max
        if h < h_min:
            return STATUS_UNDERFLOW, n_written

    return STATUS_RESOLVED, n_written
