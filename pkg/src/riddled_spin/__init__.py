"""Forced twin-well oscillator with intertwined attractor basins.

Simulation library and CLI for basin classification of the transverse
degree of freedom, basin-fraction scaling laws, tolerance-sensitivity
experiments, and the spin-measurement / EPR-correlation statistics built
on top of them.
"""

__version__ = "0.1.0"

from .basin import (
    BasinLabel,
    CaptureCriterion,
    ClassifyOutcome,
    GridResult,
    GridSpec,
    classify_detailed,
    classify_from_state,
    classify_rest,
    grid_scan,
    tol_scan,
)
from .dynamics import (
    PhaseState,
    SystemParams,
    potential_vd,
    potential_vq,
    rhs_duffing,
    rhs_full,
    transverse_jacobian,
)
from .integrate import (
    IntegrationStatus,
    LyapunovStats,
    SectionState,
    StepControl,
    integrate_adaptive,
    poincare_orbit,
    sample_attractor,
    sample_turning_points,
    spawn_rng,
    step_fixed,
    transverse_lyapunov_stats,
)
from .spin import (
    EnsembleSpec,
    Isotropic,
    MeasurementOutcome,
    Prepared,
    SpinState,
    Superposition,
    WarpModel,
    generate_ensemble,
    measure,
    prob_up_analytic,
    prob_up_empirical,
    spin_value,
    warp,
)
from .statistics import (
    EtaFit,
    FractionCurve,
    analytic_fraction,
    basin_fraction_curve,
    fit_eta,
    tol_correlation,
)
from .bell import (
    CorrelationEstimate,
    CorrelationReport,
    EprPair,
    SharedTripleResult,
    bell_lhs,
    correlation,
    counterfactual_correlation,
    distinct_ensemble_correlation,
    generate_pairs,
    quantum_correlation,
    shared_triple_correlations,
)

__all__ = [name for name in dir() if not name.startswith("_")]
