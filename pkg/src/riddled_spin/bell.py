"""EPR pair generation, correlation functions and the Bell inequality.

A zero-angular-momentum source emits pairs sharing one attractor point
with antipodal angles.  The pair correlation at orientations (0, theta_b)
is estimated two ways per pair: directly on the second member, and through
the antipodal antisymmetry on the first member; the two per-pair products
are verified to agree.  The deterministic shared-ensemble bound
|C(phi) - C(theta)| - C_cross <= 1 holds whenever all three sign lists
come from one list of pairs, while the quantum reference -cos(theta)
violates it; both facts are exercised by the report tooling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._parallel import parallel_map
from .basin import CaptureCriterion
from .dynamics import SystemParams
from .errors import DegenerateSampleError, RiddledSpinError
from .integrate import StepControl
from .spin import (
    AngleDistribution,
    EnsembleSpec,
    Isotropic,
    SpinState,
    WarpModel,
    generate_ensemble,
    spin_value,
    wrap_angle,
)

_PI = math.pi


@dataclass(frozen=True)
class EprPair:
    """Correlated pair: identical attractor point, angles offset by pi."""

    first: SpinState
    second: SpinState


class CorrelationEstimate(NamedTuple):
    c: float
    stderr: float
    n_resolved: int


@dataclass(frozen=True)
class SharedTripleResult:
    """Correlations measured on one shared list of sign triples
    (orientations 0, phi, theta), conditioned on all three resolving."""

    c_phi: float
    c_theta: float
    c_cross: float
    lhs: float
    n_used: int


@dataclass(frozen=True)
class CorrelationReport:
    """Angle sweep summary assembled by the report front end."""

    angles: list[float]
    c_shared: list[float]
    c_shared_stderr: list[float]
    c_distinct: list[float]
    c_distinct_stderr: list[float]
    bell_lhs_shared: list[float]
    bell_lhs_quantum: list[float]
    quantum: list[float]
    n_resolved_shared: list[int]
    n_resolved_distinct: list[int]
    tol_index: int


def generate_pairs(
    n: int,
    rho_theta: AngleDistribution | None = None,
    params: SystemParams | None = None,
    seed: int = 0,
    burn_in: int = 200,
    control: StepControl | None = None,
) -> list[EprPair]:
    """Draw n correlated pairs; the first stream follows rho_theta
    (isotropic by default), the second mirrors it with a pi angle offset."""
    params = params or SystemParams()
    spec = EnsembleSpec(rho_theta=rho_theta or Isotropic(), n=n, burn_in=burn_in)
    firsts = generate_ensemble(spec, params, seed, control=control)
    pairs = []
    for st in firsts:
        partner = SpinState(point=st.point, angle=wrap_angle(st.angle + _PI))
        pairs.append(EprPair(first=st, second=partner))
    return pairs


def _pair_signs(pairs, theta_a, theta_b, model, params, control, criterion, threads):
    """Per-pair signs (s_a on first at theta_a, s_b on second at theta_b,
    s_b_mirror on first at theta_b)."""

    def run(pair: EprPair):
        s_a = spin_value(pair.first, theta_a, model, params, control, criterion)
        s_b = spin_value(pair.second, theta_b, model, params, control, criterion)
        s_bm = spin_value(pair.first, theta_b, model, params, control, criterion)
        return s_a, s_b, s_bm

    out = parallel_map(run, pairs, threads=threads)
    return np.array(out, dtype=np.int64)


def correlation(
    pairs: list[EprPair],
    theta_a: float = 0.0,
    theta_b: float = 0.0,
    model: WarpModel | None = None,
    params: SystemParams | None = None,
    control: StepControl | None = None,
    criterion: CaptureCriterion | None = None,
    threads: int | None = None,
) -> CorrelationEstimate:
    """Pair correlation between stations at theta_a and theta_b.

    The estimate is the resolved-only mean of the per-pair sign products
    on the two physical streams; each product is cross-checked against the
    single-stream antipodal form (with the sign negated), which must agree
    pair by pair.
    """
    if not pairs:
        raise DegenerateSampleError("empty pair list")
    model = model or WarpModel.analytic(0.2)
    params = params or SystemParams()
    control = control or StepControl()
    criterion = criterion or CaptureCriterion()
    signs = _pair_signs(pairs, theta_a, theta_b, model, params, control, criterion, threads)
    s_a, s_b, s_bm = signs[:, 0], signs[:, 1], signs[:, 2]
    both = (s_a != 0) & (s_b != 0)
    triple = both & (s_bm != 0)
    if np.any(s_a[triple] * s_b[triple] != -(s_a[triple] * s_bm[triple])):
        raise RiddledSpinError("two-stream and mirrored correlation forms disagree")
    if not both.any():
        raise DegenerateSampleError("no pair resolved at both stations")
    products = (s_a[both] * s_b[both]).astype(float)
    n_res = int(both.sum())
    c = float(products.mean())
    stderr = float(products.std(ddof=1) / math.sqrt(n_res)) if n_res > 1 else 0.0
    return CorrelationEstimate(c=c, stderr=stderr, n_resolved=n_res)


def counterfactual_correlation(
    pairs: list[EprPair],
    theta_b_actual: float,
    theta_b_counterfactual: float,
    model: WarpModel | None = None,
    params: SystemParams | None = None,
    control: StepControl | None = None,
    criterion: CaptureCriterion | None = None,
    control_counterfactual: StepControl | None = None,
    threads: int | None = None,
) -> tuple[CorrelationEstimate, CorrelationEstimate]:
    """Correlations of the same pair list at the performed orientation and
    at an orientation that was never performed.

    Re-running the very same states under a different setting is exactly
    the operation a physical experiment cannot realize; a simulator with
    state access can, which is what makes the comparison interesting.
    """
    actual = correlation(
        pairs, 0.0, theta_b_actual, model, params, control, criterion, threads=threads
    )
    cf = correlation(
        pairs,
        0.0,
        theta_b_counterfactual,
        model,
        params,
        control_counterfactual or control,
        criterion,
        threads=threads,
    )
    return actual, cf


def shared_triple_correlations(
    pairs: list[EprPair],
    phi: float,
    theta: float,
    model: WarpModel | None = None,
    params: SystemParams | None = None,
    control: StepControl | None = None,
    criterion: CaptureCriterion | None = None,
    threads: int | None = None,
) -> SharedTripleResult:
    """Measure sign triples (0, phi, theta) on the first stream of every
    pair and form the three correlations on the shared triple-resolved
    subset; the returned lhs obeys the deterministic bound <= 1."""
    if not pairs:
        raise DegenerateSampleError("empty pair list")
    model = model or WarpModel.analytic(0.2)
    params = params or SystemParams()
    control = control or StepControl()
    criterion = criterion or CaptureCriterion()

    def run(pair: EprPair):
        s0 = spin_value(pair.first, 0.0, model, params, control, criterion)
        sp = spin_value(pair.first, phi, model, params, control, criterion)
        st = spin_value(pair.first, theta, model, params, control, criterion)
        return s0, sp, st

    signs = np.array(parallel_map(run, pairs, threads=threads), dtype=np.int64)
    ok = (signs != 0).all(axis=1)
    if not ok.any():
        raise DegenerateSampleError("no pair resolved at all three orientations")
    s0, sp, st = signs[ok, 0], signs[ok, 1], signs[ok, 2]
    c_phi = -float((s0 * sp).mean())
    c_theta = -float((s0 * st).mean())
    c_cross = -float((sp * st).mean())
    return SharedTripleResult(
        c_phi=c_phi,
        c_theta=c_theta,
        c_cross=c_cross,
        lhs=bell_lhs(c_phi, c_theta, c_cross),
        n_used=int(ok.sum()),
    )


def bell_lhs(c_phi: float, c_theta: float, c_theta_minus_phi: float) -> float:
    """Left-hand side |C(phi) - C(theta)| - C(theta - phi) of the Bell
    inequality; deterministic shared-variable triples bound it by 1."""
    for v in (c_phi, c_theta, c_theta_minus_phi):
        if not -1.0 <= v <= 1.0:
            raise ValueError(f"correlation {v} outside [-1, 1]")
    return abs(c_phi - c_theta) - c_theta_minus_phi


def quantum_correlation(theta: float) -> float:
    """The observed two-station correlation, -cos(theta)."""
    return -math.cos(theta)


def distinct_ensemble_correlation(
    n: int,
    theta: float,
    rho_theta: AngleDistribution | None = None,
    model: WarpModel | None = None,
    params: SystemParams | None = None,
    control: StepControl | None = None,
    criterion: CaptureCriterion | None = None,
    seed: int = 0,
    threads: int | None = None,
) -> CorrelationEstimate:
    """Correlation at (0, theta) on a fresh, independent pair ensemble.

    Every orientation pair measured this way consumes its own ensemble;
    no state is ever measured at a third orientation, so no shared sign
    triple exists in this mode.
    """
    pairs = generate_pairs(n, rho_theta, params, seed=seed, control=control)
    return correlation(pairs, 0.0, theta, model, params, control, criterion, threads=threads)
