"""Spin-1/2 measurement statistics built on basin classification.

A particle-plus-apparatus state is a pair (point on the chaotic attractor,
angle of the state vector).  Measuring at apparatus orientation theta
integrates the coupled system from a transverse offset derived from the
angle difference, warped so that the capture fraction at the warped
coordinate reproduces the quantum probability cos^2(delta/2); the outcome
is the basin label, and the post-measurement state collapses onto the
apparatus axis with a fresh, deterministically-unpredictable attractor
point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from ._parallel import parallel_map
from .basin import CaptureCriterion, classify_detailed
from .dynamics import SystemParams
from .errors import DegenerateSampleError, DomainError
from .integrate import StepControl, sample_attractor, spawn_rng

_PI = math.pi
_HALF_PI = math.pi / 2.0
_TAU = math.tau


def wrap_angle(a: float) -> float:
    """Wrap an angle to [0, 2*pi)."""
    r = math.fmod(a, _TAU)
    return r + _TAU if r < 0.0 else r


def fold_angle(a: float) -> float:
    """Fold an angle difference to [0, pi] using evenness."""
    return abs(math.remainder(a, _TAU))


def _pava_decreasing(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted isotonic regression onto nonincreasing sequences."""
    blocks: list[list[float]] = []  # [value, weight, count]
    for v, w in zip(values, weights):
        blocks.append([float(v), float(w), 1])
        while len(blocks) > 1 and blocks[-2][0] < blocks[-1][0]:
            v1, w1, c1 = blocks.pop()
            v0, w0, c0 = blocks.pop()
            w = w0 + w1
            blocks.append([(v0 * w0 + v1 * w1) / w, w, c0 + c1])
    out = np.empty(len(values))
    i = 0
    for v, _, c in blocks:
        out[i : i + c] = v
        i += c
    return out


@dataclass(frozen=True)
class WarpModel:
    """The reparameterization y -> y+ matching capture fractions to cos^2.

    Analytic mode inverts the model power law with exponent eta in closed
    form.  Empirical mode inverts a measured, isotonically cleaned table
    of (y+, capture fraction) knots by monotone interpolation.
    """

    mode: str
    eta: float | None = None
    table_y: np.ndarray | None = None
    table_fraction: np.ndarray | None = None

    @classmethod
    def analytic(cls, eta: float) -> "WarpModel":
        if not eta > 0.0:
            raise DomainError("eta must be positive")
        return cls(mode="analytic", eta=eta)

    @classmethod
    def empirical(cls, y_values, fractions) -> "WarpModel":
        """Build a table model from measured capture fractions.

        The points are merged with the exact anchor knots (0, 1),
        (pi/2, 1/2), (pi, 0), made nonincreasing by pool-adjacent-violators
        and made strictly decreasing by collapsing flat runs; saturated
        runs at 1 and 0 collapse toward the respective manifold.
        """
        ys = np.concatenate([np.asarray(y_values, dtype=float), [0.0, _HALF_PI, _PI]])
        fr = np.concatenate([np.asarray(fractions, dtype=float), [1.0, 0.5, 0.0]])
        if ys.shape != fr.shape:
            raise ValueError("y_values and fractions must have equal length")
        if np.any((ys < 0.0) | (ys > _PI)):
            raise DomainError("table knots must lie in [0, pi]")
        if np.any((fr < 0.0) | (fr > 1.0)):
            raise DomainError("fractions must lie in [0, 1]")
        order = np.argsort(ys, kind="stable")
        ys, fr = ys[order], fr[order]
        # average duplicate y knots
        uy, inv, cnt = np.unique(ys, return_inverse=True, return_counts=True)
        acc = np.zeros_like(uy)
        np.add.at(acc, inv, fr)
        ys, fr = uy, acc / cnt
        fr = _pava_decreasing(fr, np.ones_like(fr))
        # collapse flat runs to single strictly-decreasing knots
        knot_y: list[float] = []
        knot_f: list[float] = []
        i = 0
        while i < len(fr):
            j = i
            while j + 1 < len(fr) and fr[j + 1] == fr[i]:
                j += 1
            if fr[i] == 1.0:
                yk = ys[i]  # saturated at certainty: pin to the smallest y
            elif fr[i] == 0.0:
                yk = ys[j]
            else:
                yk = float(ys[i : j + 1].mean())
            knot_y.append(yk)
            knot_f.append(float(fr[i]))
            i = j + 1
        return cls(
            mode="empirical",
            table_y=np.asarray(knot_y),
            table_fraction=np.asarray(knot_f),
        )

    def __post_init__(self) -> None:
        if self.mode not in ("analytic", "empirical"):
            raise ValueError(f"unknown warp mode {self.mode!r}")
        if self.mode == "analytic" and not (self.eta or 0.0) > 0.0:
            raise DomainError("analytic mode requires eta > 0")
        if self.mode == "empirical":
            if self.table_y is None or self.table_fraction is None:
                raise ValueError("empirical mode requires a table")


def warp(y: float, model: WarpModel) -> float:
    """Solve capture_fraction(y+) = cos^2(y/2) for y+ in [0, pi]."""
    if not 0.0 <= y <= _PI:
        raise DomainError(f"y = {y} outside [0, pi]")
    if y == _HALF_PI:
        return _HALF_PI
    if model.mode == "analytic":
        inv = 1.0 / model.eta
        if y < _HALF_PI:
            s = math.sin(0.5 * y)
            return _HALF_PI * (2.0 * s * s) ** inv
        c = math.cos(0.5 * y)
        return _PI - _HALF_PI * (2.0 * c * c) ** inv
    c = math.cos(0.5 * y)
    target = c * c
    # invert the strictly decreasing table by interpolating on fractions
    xp = model.table_fraction[::-1]
    fp = model.table_y[::-1]
    return float(np.interp(target, xp, fp))


@dataclass(frozen=True)
class SpinState:
    """Pre-measurement state: attractor point plus state-vector angle."""

    point: tuple[float, float]
    angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "angle", wrap_angle(self.angle))


@dataclass(frozen=True)
class Isotropic:
    """Unprepared stream: angles uniform on the circle."""


@dataclass(frozen=True)
class Prepared:
    """Stream from one output channel of an apparatus at angle phi."""

    phi: float


@dataclass(frozen=True)
class Superposition:
    """Stream prepared at phi, then passed through an apparatus at theta0:
    a two-point angle distribution at theta0 and theta0 + pi with the
    cos^2 / sin^2 weights."""

    phi: float
    theta0: float


AngleDistribution = Union[Isotropic, Prepared, Superposition]


@dataclass(frozen=True)
class EnsembleSpec:
    """Ensemble description: angle distribution, size, and the burn-in used
    when sampling attractor points."""

    rho_theta: AngleDistribution = field(default_factory=Isotropic)
    n: int = 1000
    burn_in: int = 200

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("ensemble size must be >= 1")


class MeasurementOutcome(NamedTuple):
    sign: int
    post_state: SpinState | None
    resolved: bool


class UpDownCounts(NamedTuple):
    n_plus: int
    n_minus: int
    n_unresolved: int


def spin_value(
    state: SpinState,
    orientation: float,
    model: WarpModel,
    params: SystemParams,
    control: StepControl,
    criterion: CaptureCriterion,
) -> int:
    """Deterministic measurement sign (+1 up, -1 down, 0 unresolved) of the
    state at the given apparatus orientation."""
    y_fold = fold_angle(state.angle - orientation)
    return classify_detailed(
        state.point[0], state.point[1], warp(y_fold, model), params, control, criterion
    ).label.s


def measure(
    state: SpinState,
    orientation: float,
    model: WarpModel,
    params: SystemParams,
    control: StepControl,
    criterion: CaptureCriterion,
) -> MeasurementOutcome:
    """Measure and collapse: the post state carries the apparatus angle (or
    its antipode) and the attractor point where the classifying trajectory
    was captured.  The pre-measurement angle is not recoverable from the
    outcome."""
    y_fold = fold_angle(state.angle - orientation)
    out = classify_detailed(
        state.point[0], state.point[1], warp(y_fold, model), params, control, criterion
    )
    if not out.label.resolved:
        return MeasurementOutcome(sign=0, post_state=None, resolved=False)
    sign = out.label.s
    post_angle = orientation if sign == 1 else wrap_angle(orientation + _PI)
    post = SpinState(point=(out.final_state[0], out.final_state[1]), angle=post_angle)
    return MeasurementOutcome(sign=sign, post_state=post, resolved=True)


def prob_up_analytic(spec: EnsembleSpec, theta: float) -> float:
    """Closed-form probability of the +1 outcome at orientation theta."""
    rho = spec.rho_theta
    if isinstance(rho, Isotropic):
        return 0.5
    if isinstance(rho, Prepared):
        c = math.cos(0.5 * (rho.phi - theta))
        return c * c
    if isinstance(rho, Superposition):
        cw = math.cos(0.5 * (rho.phi - rho.theta0))
        sw = math.sin(0.5 * (rho.phi - rho.theta0))
        c0 = math.cos(0.5 * (rho.theta0 - theta))
        c1 = math.cos(0.5 * (rho.theta0 + _PI - theta))
        return cw * cw * (c0 * c0) + sw * sw * (c1 * c1)
    raise TypeError(f"unknown angle distribution {rho!r}")


def generate_ensemble(
    spec: EnsembleSpec,
    params: SystemParams,
    seed: int,
    control: StepControl | None = None,
) -> list[SpinState]:
    """Draw an ensemble of states: attractor points from the section-sampled
    invariant measure, angles from the requested distribution."""
    points = sample_attractor(params, spec.n, spec.burn_in, seed=seed, control=control)
    rho = spec.rho_theta
    rng = spawn_rng(seed, 1)
    if isinstance(rho, Isotropic):
        angles = rng.uniform(0.0, _TAU, size=spec.n)
    elif isinstance(rho, Prepared):
        angles = np.full(spec.n, wrap_angle(rho.phi))
    elif isinstance(rho, Superposition):
        cw = math.cos(0.5 * (rho.phi - rho.theta0))
        weight_up = cw * cw
        up = rng.random(spec.n) < weight_up
        angles = np.where(up, wrap_angle(rho.theta0), wrap_angle(rho.theta0 + _PI))
    else:
        raise TypeError(f"unknown angle distribution {rho!r}")
    return [
        SpinState(point=(float(points[i, 0]), float(points[i, 1])), angle=float(angles[i]))
        for i in range(spec.n)
    ]


def prob_up_empirical(
    spec: EnsembleSpec,
    theta: float,
    model: WarpModel,
    params: SystemParams,
    control: StepControl,
    criterion: CaptureCriterion,
    seed: int,
    threads: int | None = None,
) -> tuple[float, UpDownCounts]:
    """Monte Carlo probability of the +1 outcome: the resolved fraction of
    +1 measurement signs over a generated ensemble."""
    ensemble = generate_ensemble(spec, params, seed, control=control)
    signs = parallel_map(
        lambda st: spin_value(st, theta, model, params, control, criterion),
        ensemble,
        threads=threads,
    )
    signs = np.asarray(signs)
    n_plus = int((signs == 1).sum())
    n_minus = int((signs == -1).sum())
    n_unres = int((signs == 0).sum())
    if n_plus + n_minus == 0:
        raise DegenerateSampleError("no ensemble member resolved")
    return n_plus / (n_plus + n_minus), UpDownCounts(n_plus, n_minus, n_unres)
