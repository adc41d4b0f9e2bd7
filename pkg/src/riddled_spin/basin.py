"""Basin classification of initial conditions and the grid experiments.

A trajectory started at rest is integrated until its transverse coordinate
settles onto an even multiple of pi (label +1) or an odd multiple (label
-1), decided by sustained proximity at consecutive forcing-phase sections.
Classification canonicalizes the initial transverse coordinate into
[0, pi/2] through the exact symmetries of the vector field (periodicity,
evenness, and the label-flipping mirror y -> pi - y) and snaps it to a
fixed fine grid.  The snap spacing (~5e-8) is far below any physically
meaningful resolution but guarantees that symmetry-related inputs map to
bit-identical trajectories, so the symmetry identities hold without
exceptions instead of merely statistically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _kernels
from ._parallel import parallel_map
from .dynamics import SystemParams
from .integrate import StepControl

_PI = math.pi
_HALF_PI = math.pi / 2.0

# Canonical-coordinate snap grid: pi/2 is exactly 2**25 cells, so 0, pi/4,
# pi/2 are themselves grid points.
_QUANT = math.pi / 2.0 / 2.0**25


class BasinLabel(IntEnum):
    """Classification outcome; the integer value is the sign encoding S."""

    CPLUS = 1
    CMINUS = -1
    UNRESOLVED = 0

    @property
    def s(self) -> int:
        """Sign encoding: +1, -1, or 0 when unresolved."""
        return int(self)

    @property
    def s_plus(self) -> int:
        """Indicator of capture by the y = 0 attractor (0 when unresolved)."""
        return 1 if self is BasinLabel.CPLUS else 0

    @property
    def s_minus(self) -> int:
        """Indicator of capture by the y = pi attractor (0 when unresolved)."""
        return 1 if self is BasinLabel.CMINUS else 0

    @property
    def resolved(self) -> bool:
        return self is not BasinLabel.UNRESOLVED

    def flipped(self) -> "BasinLabel":
        return BasinLabel(-int(self))


@dataclass(frozen=True)
class CaptureCriterion:
    """Concrete meaning of "the trajectory has settled onto an attractor".

    delta_y: capture distance in the rescaled transverse coordinate;
    delta_v: bound on |dy/dt|; k_sections: consecutive section crossings
    that must satisfy both bounds; t_max_periods: horizon in forcing
    periods after which the point is reported unresolved.
    """

    delta_y: float = 1e-3
    delta_v: float = 1e-3
    k_sections: int = 20
    t_max_periods: float = 5000.0

    def __post_init__(self) -> None:
        if not (self.delta_y > 0 and self.delta_v > 0 and self.t_max_periods > 0):
            raise ValueError("criterion scales must be positive")
        if self.k_sections < 1:
            raise ValueError("k_sections must be >= 1")


@dataclass(frozen=True)
class ClassifyOutcome:
    """Classification label plus the integration bookkeeping behind it.

    final_state is the section-interpolated (x, vx, y, vy) at the moment
    the capture criterion was met (in the canonical mirror frame), or the
    last integrator state when unresolved.  status is one of "resolved",
    "horizon", "step_underflow", "nonfinite".
    """

    label: BasinLabel
    status: str
    t_resolve: float
    final_state: tuple[float, float, float, float]
    n_steps: int
    mirrored: bool


_STATUS_NAMES = {
    _kernels.STATUS_RESOLVED: "resolved",
    _kernels.STATUS_HORIZON: "horizon",
    _kernels.STATUS_UNDERFLOW: "step_underflow",
    _kernels.STATUS_NONFINITE: "nonfinite",
}


def canonical_transverse(y: float) -> tuple[float, bool]:
    """Map y to its canonical representative in [0, pi/2].

    Returns (canonical value, mirrored) where mirrored means the point was
    reflected through pi/2 and its label must be flipped.  Reduction uses
    the exact IEEE remainder, |.| and a Sterbenz-exact subtraction, then a
    snap to the fixed grid; symmetry partners therefore canonicalize to the
    same float.
    """
    r = math.remainder(y, math.tau)
    yc = abs(r)
    mirrored = yc > _HALF_PI
    if mirrored:
        yc = _PI - yc
    j = round(yc / _QUANT)
    return j * _QUANT, mirrored


def classify_detailed(
    x0: float,
    vx0: float,
    y0: float,
    params: SystemParams,
    control: StepControl,
    criterion: CaptureCriterion,
) -> ClassifyOutcome:
    """Classify the trajectory from (x0, vx0, y0, 0) at t = 0."""
    yq, mirrored = canonical_transverse(y0)
    label, status, t_res, xf, vxf, yf, vyf, n_steps = _kernels.classify_kernel(
        x0,
        vx0,
        yq,
        0.0,
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
        criterion.delta_y,
        criterion.delta_v,
        criterion.k_sections,
        criterion.t_max_periods,
    )
    out = BasinLabel(label)
    if mirrored:
        out = out.flipped()
    return ClassifyOutcome(
        label=out,
        status=_STATUS_NAMES[status],
        t_resolve=t_res,
        final_state=(xf, vxf, yf, vyf),
        n_steps=n_steps,
        mirrored=mirrored,
    )


def classify_rest(
    x0: float,
    y0: float,
    params: SystemParams,
    control: StepControl,
    criterion: CaptureCriterion,
) -> BasinLabel:
    """Basin label of the resting initial condition (x0, 0, y0, 0)."""
    return classify_detailed(x0, 0.0, y0, params, control, criterion).label


def classify_from_state(
    point: tuple[float, float],
    y: float,
    params: SystemParams,
    control: StepControl,
    criterion: CaptureCriterion,
) -> BasinLabel:
    """Basin label of (x, vx, y, 0) for a phase-space point (x, vx),
    normally taken on the chaotic attractor of the decoupled subsystem."""
    return classify_detailed(point[0], point[1], y, params, control, criterion).label


@dataclass(frozen=True)
class GridSpec:
    """Regular classification grid; axes are inclusive of both endpoints."""

    x_min: float = -1.0
    x_max: float = 1.0
    nx: int = 100
    y_min: float = 0.0
    y_max: float = _HALF_PI
    ny: int = 100
    tol_index: int = 1
    criterion: CaptureCriterion = field(default_factory=CaptureCriterion)

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid must have nx, ny >= 1")
        if self.tol_index < 1:
            raise ValueError("tol_index must be >= 1")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.ny)


@dataclass(frozen=True)
class GridResult:
    """Row-major label matrix (rows indexed by y, columns by x) with the
    per-cell resolution times and a run manifest."""

    spec: GridSpec
    labels: np.ndarray  # (ny, nx) int8, values +1 / -1 / 0
    t_resolve: np.ndarray  # (ny, nx), horizon time when unresolved
    manifest: dict

    @property
    def n_unresolved(self) -> int:
        return int((self.labels == 0).sum())

    def row_fraction_plus(self) -> np.ndarray:
        """Per-row fraction of +1 among resolved cells (nan for empty rows)."""
        plus = (self.labels == 1).sum(axis=1)
        resolved = (self.labels != 0).sum(axis=1)
        with np.errstate(invalid="ignore"):
            return np.where(resolved > 0, plus / resolved, np.nan)


def _params_dict(params: SystemParams) -> dict:
    return {
        "gamma": params.gamma,
        "p": params.p,
        "omega": params.omega,
        "epsilon": params.epsilon,
        "xbar": params.xbar,
    }


def _criterion_dict(criterion: CaptureCriterion) -> dict:
    return {
        "delta_y": criterion.delta_y,
        "delta_v": criterion.delta_v,
        "k_sections": criterion.k_sections,
        "t_max_periods": criterion.t_max_periods,
    }


def grid_scan(
    spec: GridSpec,
    params: SystemParams,
    seed: int = 0,
    control: StepControl | None = None,
    threads: int | None = None,
) -> GridResult:
    """Classify every grid cell; cells are independent and evaluated in
    parallel, written into a preallocated matrix by index.  The result is
    deterministic (the seed is recorded for provenance only)."""
    base = control or StepControl()
    run_control = base.with_tol_index(spec.tol_index)
    xs, ys = spec.xs, spec.ys
    labels = np.zeros((spec.ny, spec.nx), dtype=np.int8)
    t_resolve = np.zeros((spec.ny, spec.nx))
    statuses = np.zeros((spec.ny, spec.nx), dtype=np.int8)

    def run_row(iy: int) -> None:
        y0 = ys[iy]
        for ix in range(spec.nx):
            out = classify_detailed(xs[ix], 0.0, y0, params, run_control, spec.criterion)
            labels[iy, ix] = out.label.s
            t_resolve[iy, ix] = out.t_resolve
            statuses[iy, ix] = 0 if out.status == "resolved" else (2 if out.status == "step_underflow" else 1)

    parallel_map(run_row, range(spec.ny), threads=threads)

    has_half_pi_row = bool(np.any(np.isclose(ys, _HALF_PI, rtol=0.0, atol=1e-15)))
    manifest = {
        "params": _params_dict(params),
        "criterion": _criterion_dict(spec.criterion),
        "tol_index": spec.tol_index,
        "tol": run_control.tol,
        "seed": seed,
        "grid": {
            "x_min": spec.x_min,
            "x_max": spec.x_max,
            "nx": spec.nx,
            "y_min": spec.y_min,
            "y_max": spec.y_max,
            "ny": spec.ny,
        },
        "n_unresolved": int((labels == 0).sum()),
        "n_step_underflow": int((statuses == 2).sum()),
        "contains_exact_half_pi_row": has_half_pi_row,
        "canonical_snap": _QUANT,
    }
    return GridResult(spec=spec, labels=labels, t_resolve=t_resolve, manifest=manifest)


def tol_scan(
    x_points: int,
    y0: float = 0.4 * math.pi,
    n_max: int = 20,
    params: SystemParams | None = None,
    criterion: CaptureCriterion | None = None,
    control: StepControl | None = None,
    threads: int | None = None,
) -> np.ndarray:
    """Label matrix indexed (tolerance index n, x) at fixed transverse
    offset y0: row n-1 classifies x on a regular grid at tolerance tol0/n.

    The columns of the result do not converge as n grows; that
    non-convergence, quantified by `statistics.tol_correlation`, is the
    point of the experiment.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    if x_points < 1:
        raise ValueError("x_points must be >= 1")
    params = params or SystemParams()
    criterion = criterion or CaptureCriterion()
    base = control or StepControl()
    xs = np.linspace(-1.0, 1.0, x_points)
    labels = np.zeros((n_max, x_points), dtype=np.int8)

    tasks = [(n, ix) for n in range(1, n_max + 1) for ix in range(x_points)]

    def run_cell(task: tuple[int, int]) -> None:
        n, ix = task
        lab = classify_rest(xs[ix], y0, params, base.with_tol_index(n), criterion)
        labels[n - 1, ix] = lab.s

    parallel_map(run_cell, tasks, threads=threads)
    return labels
