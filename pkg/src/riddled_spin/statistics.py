"""Basin-fraction statistics: capture-fraction curves over the sampled
initial-condition density, the power-law fit of the near-manifold escape
fraction, and the correlation between label rows at different tolerance
indices.

The model law for the capture fraction is
    F(y) = 1 - (1/2) (2 y / pi)^eta        for 0 <= y <= pi/2
with the complementary mirror branch on [pi/2, pi]; eta is the escape
exponent that the diffusive picture predicts as |h_perp| / D.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._parallel import parallel_map
from .basin import CaptureCriterion, classify_rest
from .dynamics import SystemParams
from .errors import DegenerateSampleError, DomainError, InsufficientDataError
from .integrate import StepControl

_PI = math.pi
_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class FractionCurve:
    """Capture fraction of the y = 0 attractor per transverse offset.

    fraction[i] = n_plus[i] / (n_plus[i] + n_minus[i]); unresolved runs
    are excluded from both numerator and denominator and reported in
    n_unresolved.
    """

    y: np.ndarray
    fraction: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    n_unresolved: np.ndarray


@dataclass(frozen=True)
class EtaFit:
    """Least-squares fit of log(escape fraction) against log(2y/pi)."""

    eta: float
    intercept: float
    r2: float
    y_window: tuple[float, float]


def basin_fraction_curve(
    y_values,
    x_samples,
    params: SystemParams,
    control: StepControl,
    criterion: CaptureCriterion,
    threads: int | None = None,
) -> FractionCurve:
    """Classify every (x, y) resting initial condition and tabulate the
    fraction captured by the y = 0 attractor for each y.

    x_samples should come from `integrate.sample_turning_points` so the
    fractions are weighted by the invariant density on the dx/dt = 0 line.
    """
    y_values = np.asarray(y_values, dtype=float)
    x_samples = np.asarray(x_samples, dtype=float)
    if x_samples.size == 0:
        raise ValueError("x_samples must be nonempty")
    if np.any((y_values <= 0.0) | (y_values >= _PI)):
        raise DomainError("y values must lie strictly inside (0, pi)")

    def run_y(iy: int) -> tuple[int, int, int]:
        n_plus = n_minus = n_unres = 0
        for x0 in x_samples:
            lab = classify_rest(float(x0), float(y_values[iy]), params, control, criterion)
            if lab.s == 1:
                n_plus += 1
            elif lab.s == -1:
                n_minus += 1
            else:
                n_unres += 1
        return n_plus, n_minus, n_unres

    counts = parallel_map(run_y, range(len(y_values)), threads=threads)
    n_plus = np.array([c[0] for c in counts])
    n_minus = np.array([c[1] for c in counts])
    n_unres = np.array([c[2] for c in counts])
    resolved = n_plus + n_minus
    if np.any(resolved == 0):
        bad = y_values[resolved == 0]
        raise DegenerateSampleError(f"no resolved runs at y = {bad.tolist()}")
    return FractionCurve(
        y=y_values,
        fraction=n_plus / resolved,
        n_plus=n_plus,
        n_minus=n_minus,
        n_unresolved=n_unres,
    )


def analytic_fraction(y: float, eta: float) -> float:
    """Model capture fraction of the y = 0 attractor at transverse offset y.

    The upper branch is evaluated as the exact complement of the mirrored
    lower branch, so the identity F(y) + F(pi - y) = 1 holds bit-for-bit
    on exactly mirrored arguments.
    """
    if not eta > 0.0:
        raise DomainError("eta must be positive")
    if not 0.0 <= y <= _PI:
        raise DomainError(f"y = {y} outside [0, pi]")
    if y <= _HALF_PI:
        return 1.0 - 0.5 * (2.0 * y / _PI) ** eta
    # 1 - F(pi - y); Sterbenz-exact because F of the lower branch is in [1/2, 1]
    return 1.0 - analytic_fraction(_PI - y, eta)


def fit_eta(curve: FractionCurve, y_window: tuple[float, float] = (0.02, _HALF_PI)) -> EtaFit:
    """Ordinary least squares of log(1 - fraction) on log(2y/pi) over the
    window; the slope estimates the escape exponent."""
    lo, hi = y_window
    if not (0.0 < lo < hi <= _HALF_PI):
        raise DomainError("y_window must satisfy 0 < lo < hi <= pi/2")
    mask = (curve.y >= lo) & (curve.y <= hi) & (curve.fraction > 0.0) & (curve.fraction < 1.0)
    if mask.sum() < 5:
        raise InsufficientDataError(
            f"{int(mask.sum())} usable points in window [{lo}, {hi}]; need >= 5"
        )
    lx = np.log(2.0 * curve.y[mask] / _PI)
    ly = np.log(1.0 - curve.fraction[mask])
    design = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_res = float((resid**2).sum())
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return EtaFit(eta=float(slope), intercept=float(intercept), r2=r2, y_window=(lo, hi))


def tol_correlation(labels: np.ndarray, n: int, m: int) -> float:
    """Negated mean sign product between tolerance rows n and m (1-based)
    of a `basin.tol_scan` matrix, over cells resolved in both rows.

    Identical rows give exactly -1; rows at different tolerance indices
    stay away from -1, which is the non-convergence signature.
    """
    labels = np.asarray(labels)
    n_rows = labels.shape[0]
    if not (1 <= n <= n_rows and 1 <= m <= n_rows):
        raise DomainError(f"row indices ({n}, {m}) outside 1..{n_rows}")
    row_n = labels[n - 1].astype(np.int64)
    row_m = labels[m - 1].astype(np.int64)
    mask = (row_n != 0) & (row_m != 0)
    if not mask.any():
        raise DegenerateSampleError(f"no cells resolved in both rows {n} and {m}")
    return -float((row_n[mask] * row_m[mask]).mean())
