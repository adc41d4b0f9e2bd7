"""Batch front door: experiment subcommands driven by a JSON config.

    riddled-spin <subcommand> <config.json> [--out DIR] [--threads N]

Subcommands: duffing, basin-grid, tol-scan, fraction, spin, bell.  Every
run writes its tables (CSV), grids (binary PGM) and fits (JSON) plus a
manifest with a content hash per output file.  Given one platform, a
(config, seed) pair reproduces the data files byte for byte; the manifest
additionally records the wall time, which is the one non-deterministic
field.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 degenerate
statistics.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats as scipy_stats

from . import __version__
from ._io import write_csv, write_json, write_label_pgm, write_manifest
from ._parallel import parallel_map, resolve_threads
from .basin import CaptureCriterion, GridSpec, classify_rest, grid_scan, tol_scan
from .bell import (
    bell_lhs,
    correlation,
    generate_pairs,
    quantum_correlation,
    shared_triple_correlations,
    distinct_ensemble_correlation,
)
from .dynamics import SystemParams
from .errors import (
    ConfigError,
    DegenerateSampleError,
    InsufficientDataError,
    NonFiniteError,
    RiddledSpinError,
    StepUnderflowError,
    UnboundedError,
)
from .integrate import (
    StepControl,
    sample_attractor,
    sample_turning_points,
    transverse_lyapunov_stats,
)
from .spin import (
    EnsembleSpec,
    Isotropic,
    Prepared,
    Superposition,
    WarpModel,
    prob_up_analytic,
    prob_up_empirical,
    warp,
)
from .statistics import basin_fraction_curve, fit_eta, tol_correlation

_DEFAULT_BELL_ANGLES = [k * math.pi / 12.0 for k in range(13)]
_DEFAULT_SPIN_ANGLES = [k * math.pi / 8.0 for k in range(1, 9)]


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration shared by all subcommands."""

    seed: int
    out_dir: Path
    threads: int
    params: SystemParams
    control: StepControl
    criterion: CaptureCriterion
    experiment: dict
    echo: dict


def _expect_mapping(obj, ctx: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{ctx} must be a JSON object, got {type(obj).__name__}")
    return obj


def _reject_unknown(d: dict, allowed, ctx: str) -> None:
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {ctx}: {sorted(unknown)}")


def _get_number(d: dict, key: str, default, ctx: str) -> float:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{ctx}.{key} must be a number")
    return float(v)


def _get_int(d: dict, key: str, default, ctx: str) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{ctx}.{key} must be an integer")
    return v


def _build_params(d: dict) -> SystemParams:
    d = _expect_mapping(d, "params")
    allowed = ("gamma", "p", "omega", "epsilon", "xbar")
    _reject_unknown(d, allowed, "params")
    defaults = SystemParams()
    try:
        return SystemParams(**{k: _get_number(d, k, getattr(defaults, k), "params") for k in allowed})
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_control(d: dict) -> StepControl:
    d = _expect_mapping(d, "control")
    allowed = ("mode", "tol", "tol0", "h_init", "h_min", "h_max", "t_max")
    _reject_unknown(d, allowed, "control")
    defaults = StepControl()
    mode = d.get("mode", defaults.mode)
    if not isinstance(mode, str):
        raise ConfigError("control.mode must be a string")
    try:
        return StepControl(
            mode=mode,
            **{k: _get_number(d, k, getattr(defaults, k), "control") for k in allowed[1:]},
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_criterion(d: dict) -> CaptureCriterion:
    d = _expect_mapping(d, "criterion")
    allowed = ("delta_y", "delta_v", "k_sections", "t_max_periods")
    _reject_unknown(d, allowed, "criterion")
    defaults = CaptureCriterion()
    try:
        return CaptureCriterion(
            delta_y=_get_number(d, "delta_y", defaults.delta_y, "criterion"),
            delta_v=_get_number(d, "delta_v", defaults.delta_v, "criterion"),
            k_sections=_get_int(d, "k_sections", defaults.k_sections, "criterion"),
            t_max_periods=_get_number(d, "t_max_periods", defaults.t_max_periods, "criterion"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_warp(d: dict) -> WarpModel:
    d = _expect_mapping(d, "warp")
    _reject_unknown(d, ("mode", "eta", "table_y", "table_fraction"), "warp")
    mode = d.get("mode", "analytic")
    if mode == "analytic":
        return WarpModel.analytic(_get_number(d, "eta", 0.2, "warp"))
    if mode == "empirical":
        if "table_y" not in d or "table_fraction" not in d:
            raise ConfigError("empirical warp requires table_y and table_fraction")
        return WarpModel.empirical(d["table_y"], d["table_fraction"])
    raise ConfigError(f"unknown warp mode {mode!r}")


def _build_ensemble(d: dict) -> EnsembleSpec:
    d = _expect_mapping(d, "ensemble")
    _reject_unknown(d, ("kind", "phi", "theta0", "n", "burn_in"), "ensemble")
    kind = d.get("kind", "isotropic")
    n = _get_int(d, "n", 2000, "ensemble")
    burn_in = _get_int(d, "burn_in", 200, "ensemble")
    if kind == "isotropic":
        rho = Isotropic()
    elif kind == "prepared":
        rho = Prepared(phi=_get_number(d, "phi", 0.0, "ensemble"))
    elif kind == "superposition":
        rho = Superposition(
            phi=_get_number(d, "phi", 0.0, "ensemble"),
            theta0=_get_number(d, "theta0", 0.0, "ensemble"),
        )
    else:
        raise ConfigError(f"unknown ensemble kind {kind!r}")
    try:
        return EnsembleSpec(rho_theta=rho, n=n, burn_in=burn_in)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: Path, out_override: str | None, threads_override: int | None) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    raw = _expect_mapping(raw, "config")
    allowed = ("seed", "out_dir", "threads", "params", "control", "criterion", "experiment")
    _reject_unknown(raw, allowed, "config")

    seed = _get_int(raw, "seed", 0, "config")
    out_dir = out_override or raw.get("out_dir")
    if out_dir is None:
        raise ConfigError("output directory required (config out_dir or --out)")
    if threads_override is not None:
        threads = threads_override
    elif "threads" in raw:
        threads = _get_int(raw, "threads", None, "config")
    else:
        threads = resolve_threads(None)
    if threads < 1:
        raise ConfigError("threads must be >= 1")

    params = _build_params(raw.get("params", {}))
    control = _build_control(raw.get("control", {}))
    criterion = _build_criterion(raw.get("criterion", {}))
    experiment = _expect_mapping(raw.get("experiment", {}), "experiment")
    return RunConfig(
        seed=seed,
        out_dir=Path(out_dir),
        threads=threads,
        params=params,
        control=control,
        criterion=criterion,
        experiment=experiment,
        echo=raw,
    )


def _spearman_row_trend(labels: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    """Spearman rank correlation of per-row +1 fraction against y."""
    plus = (labels == 1).sum(axis=1)
    resolved = (labels != 0).sum(axis=1)
    ok = resolved > 0
    frac = plus[ok] / resolved[ok]
    rho, pvalue = scipy_stats.spearmanr(ys[ok], frac)
    return float(rho), float(pvalue)


def cmd_duffing(config: RunConfig) -> dict:
    """Section point cloud (x, dx/dt) of the decoupled chaotic orbit."""
    exp = config.experiment
    _reject_unknown(exp, ("n_sections", "burn_in"), "experiment")
    n_sections = _get_int(exp, "n_sections", 5000, "experiment")
    burn_in = _get_int(exp, "burn_in", 200, "experiment")
    if n_sections < 1:
        raise ConfigError("n_sections must be >= 1")
    points = sample_attractor(
        config.params, n_sections, burn_in, seed=config.seed, control=config.control
    )
    write_csv(config.out_dir / "sections.csv", ["x", "vx"], points)
    return {
        "n_sections": n_sections,
        "x_min": float(points[:, 0].min()),
        "x_max": float(points[:, 0].max()),
        "vx_min": float(points[:, 1].min()),
        "vx_max": float(points[:, 1].max()),
    }


def cmd_basin_grid(config: RunConfig) -> dict:
    """Label grid over a rectangle of resting initial conditions."""
    exp = config.experiment
    allowed = ("x_min", "x_max", "nx", "y_min", "y_max", "ny", "tol_index")
    _reject_unknown(exp, allowed, "experiment")
    try:
        spec = GridSpec(
            x_min=_get_number(exp, "x_min", -1.0, "experiment"),
            x_max=_get_number(exp, "x_max", 1.0, "experiment"),
            nx=_get_int(exp, "nx", 100, "experiment"),
            y_min=_get_number(exp, "y_min", 0.0, "experiment"),
            y_max=_get_number(exp, "y_max", math.pi / 2.0, "experiment"),
            ny=_get_int(exp, "ny", 100, "experiment"),
            tol_index=_get_int(exp, "tol_index", 1, "experiment"),
            criterion=config.criterion,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = grid_scan(spec, config.params, seed=config.seed, control=config.control, threads=config.threads)
    write_csv(
        config.out_dir / "labels.csv",
        [f"x{i}" for i in range(spec.nx)],
        result.labels,
    )
    write_csv(
        config.out_dir / "times.csv",
        [f"x{i}" for i in range(spec.nx)],
        result.t_resolve,
    )
    write_label_pgm(config.out_dir / "grid.pgm", result.labels)
    rho, pvalue = _spearman_row_trend(result.labels, spec.ys)
    return {
        "grid_manifest": result.manifest,
        "n_unresolved": result.n_unresolved,
        "unresolved_fraction": result.n_unresolved / (spec.nx * spec.ny),
        "row_trend_spearman_rho": rho,
        "row_trend_spearman_p": pvalue,
    }


def cmd_tol_scan(config: RunConfig) -> dict:
    """Label matrix across the tolerance ladder plus its correlation table."""
    exp = config.experiment
    _reject_unknown(exp, ("x_points", "y0", "n_max"), "experiment")
    x_points = _get_int(exp, "x_points", 100, "experiment")
    y0 = _get_number(exp, "y0", 0.4 * math.pi, "experiment")
    n_max = _get_int(exp, "n_max", 20, "experiment")
    if n_max < 2 or x_points < 1:
        raise ConfigError("need n_max >= 2 and x_points >= 1")
    labels = tol_scan(
        x_points,
        y0=y0,
        n_max=n_max,
        params=config.params,
        criterion=config.criterion,
        control=config.control,
        threads=config.threads,
    )
    corr = np.empty((n_max, n_max))
    for i in range(1, n_max + 1):
        for j in range(1, n_max + 1):
            corr[i - 1, j - 1] = tol_correlation(labels, i, j)
    write_csv(config.out_dir / "labels.csv", [f"x{i}" for i in range(x_points)], labels)
    write_csv(config.out_dir / "correlation.csv", [f"n{j+1}" for j in range(n_max)], corr)
    off_diag = corr[~np.eye(n_max, dtype=bool)]
    has_plus = (labels == 1).any(axis=0)
    has_minus = (labels == -1).any(axis=0)
    non_constant_cols = int((has_plus & has_minus).sum())
    return {
        "y0": y0,
        "n_max": n_max,
        "x_points": x_points,
        "diag_all_minus_one": bool(np.all(np.diag(corr) == -1.0)),
        "max_off_diagonal": float(off_diag.max()),
        "n_non_constant_columns": non_constant_cols,
        "n_unresolved": int((labels == 0).sum()),
    }


def cmd_fraction(config: RunConfig) -> dict:
    """Capture-fraction curve, power-law fit, and the diffusive cross-check."""
    exp = config.experiment
    allowed = (
        "n_x_samples",
        "n_y",
        "y_min",
        "y_max",
        "fit_window",
        "lyap_window_periods",
        "lyap_n_windows",
    )
    _reject_unknown(exp, allowed, "experiment")
    n_x = _get_int(exp, "n_x_samples", 200, "experiment")
    n_y = _get_int(exp, "n_y", 20, "experiment")
    y_min = _get_number(exp, "y_min", 0.02, "experiment")
    y_max = _get_number(exp, "y_max", math.pi / 2.0, "experiment")
    window = exp.get("fit_window", [y_min, y_max])
    if not (isinstance(window, (list, tuple)) and len(window) == 2):
        raise ConfigError("fit_window must be a [lo, hi] pair")
    lyap_window = _get_number(exp, "lyap_window_periods", 100.0, "experiment")
    lyap_n = _get_int(exp, "lyap_n_windows", 200, "experiment")
    if n_x < 1 or n_y < 2 or not (0.0 < y_min < y_max < math.pi):
        raise ConfigError("invalid fraction experiment geometry")

    xs = sample_turning_points(config.params, n_x, seed=config.seed, control=config.control)
    ys = np.exp(np.linspace(math.log(y_min), math.log(y_max), n_y))
    curve = basin_fraction_curve(
        ys, xs, config.params, config.control, config.criterion, threads=config.threads
    )
    fit = fit_eta(curve, (float(window[0]), float(window[1])))
    lyap = transverse_lyapunov_stats(
        config.params,
        lyap_window * config.params.period,
        lyap_n,
        seed=config.seed,
        control=config.control,
    )
    write_csv(
        config.out_dir / "curve.csv",
        ["y", "fraction", "n_plus", "n_minus", "n_unresolved"],
        zip(curve.y, curve.fraction, curve.n_plus, curve.n_minus, curve.n_unresolved),
    )
    mask = (curve.fraction > 0) & (curve.fraction < 1)
    write_csv(
        config.out_dir / "loglog.csv",
        ["log_2y_over_pi", "log_escape_fraction"],
        zip(np.log(2.0 * curve.y[mask] / math.pi), np.log(1.0 - curve.fraction[mask])),
    )
    fit_doc = {
        "eta": fit.eta,
        "intercept": fit.intercept,
        "r2": fit.r2,
        "y_window": list(fit.y_window),
        "eta_pred_from_lyapunov": lyap.eta_pred,
        "lyapunov": {
            "window": lyap.window,
            "n_windows": lyap.n_windows,
            "h_perp_mean": lyap.h_perp_mean,
            "sigma2": lyap.sigma2,
            "d_coeff": lyap.d_coeff,
        },
    }
    write_json(config.out_dir / "fit.json", fit_doc)
    return fit_doc


def cmd_spin(config: RunConfig) -> dict:
    """Warped-coordinate label grid plus measurement probability table."""
    exp = config.experiment
    allowed = ("warp", "ensemble", "angles", "nx", "ny", "tol_index")
    _reject_unknown(exp, allowed, "experiment")
    model = _build_warp(exp.get("warp", {}))
    spec = _build_ensemble(exp.get("ensemble", {"kind": "prepared", "phi": 0.0}))
    angles = exp.get("angles", _DEFAULT_SPIN_ANGLES)
    if not isinstance(angles, list) or not angles:
        raise ConfigError("angles must be a nonempty list")
    nx = _get_int(exp, "nx", 100, "experiment")
    ny = _get_int(exp, "ny", 100, "experiment")
    tol_index = _get_int(exp, "tol_index", 1, "experiment")
    if nx < 1 or ny < 1:
        raise ConfigError("grid must have nx, ny >= 1")
    run_control = config.control.with_tol_index(tol_index)

    # label grid in warped transverse coordinates
    xs = np.linspace(-1.0, 1.0, nx)
    ys = np.linspace(0.0, math.pi / 2.0, ny)
    labels = np.zeros((ny, nx), dtype=np.int8)

    def run_row(iy: int) -> None:
        yw = warp(float(ys[iy]), model)
        for ix in range(nx):
            labels[iy, ix] = classify_rest(
                float(xs[ix]), yw, config.params, run_control, config.criterion
            ).s

    parallel_map(run_row, range(ny), threads=config.threads)
    write_csv(config.out_dir / "sp_grid.csv", [f"x{i}" for i in range(nx)], labels)
    write_label_pgm(config.out_dir / "sp_grid.pgm", labels)
    rho, pvalue = _spearman_row_trend(labels, ys)

    rows = []
    for k, theta in enumerate(angles):
        theta = float(theta)
        analytic = prob_up_analytic(spec, theta)
        frac, counts = prob_up_empirical(
            spec,
            theta,
            model,
            config.params,
            run_control,
            config.criterion,
            seed=config.seed + k,
            threads=config.threads,
        )
        n_res = counts.n_plus + counts.n_minus
        stderr = math.sqrt(frac * (1.0 - frac) / n_res) if n_res else float("nan")
        rows.append(
            (theta, analytic, frac, stderr, counts.n_plus, counts.n_minus, counts.n_unresolved)
        )
    write_csv(
        config.out_dir / "prob_up.csv",
        ["theta", "analytic", "empirical", "stderr", "n_plus", "n_minus", "n_unresolved"],
        rows,
    )
    max_dev_sigma = 0.0
    for theta, analytic, frac, stderr, np_, nm_, nu_ in rows:
        if stderr and stderr > 0:
            max_dev_sigma = max(max_dev_sigma, abs(frac - analytic) / stderr)
    return {
        "grid_rows_spearman_rho": rho,
        "grid_rows_spearman_p": pvalue,
        "n_angles": len(rows),
        "max_probability_deviation_sigmas": max_dev_sigma,
        "ensemble_n": spec.n,
    }


def cmd_bell(config: RunConfig) -> dict:
    """Correlation sweep: shared-ensemble and distinct-ensemble estimates,
    the quantum reference, and the inequality left-hand sides."""
    exp = config.experiment
    allowed = ("n_pairs", "angles", "warp", "tol_index")
    _reject_unknown(exp, allowed, "experiment")
    n_pairs = _get_int(exp, "n_pairs", 200, "experiment")
    angles = exp.get("angles", _DEFAULT_BELL_ANGLES)
    if not isinstance(angles, list) or not angles:
        raise ConfigError("angles must be a nonempty list")
    model = _build_warp(exp.get("warp", {}))
    tol_index = _get_int(exp, "tol_index", 1, "experiment")
    if n_pairs < 1:
        raise ConfigError("n_pairs must be >= 1")
    run_control = config.control.with_tol_index(tol_index)

    pairs = generate_pairs(
        n_pairs, Isotropic(), config.params, seed=config.seed, control=config.control
    )
    rows = []
    n_violations_shared = 0
    for k, theta in enumerate(angles):
        theta = float(theta)
        est = correlation(
            pairs, 0.0, theta, model, config.params, run_control, config.criterion,
            threads=config.threads,
        )
        shared = shared_triple_correlations(
            pairs, theta / 2.0, theta, model, config.params, run_control, config.criterion,
            threads=config.threads,
        )
        distinct = distinct_ensemble_correlation(
            n_pairs,
            theta,
            Isotropic(),
            model,
            config.params,
            run_control,
            config.criterion,
            seed=config.seed + 1000 + k,
            threads=config.threads,
        )
        lhs_quantum = bell_lhs(
            quantum_correlation(theta / 2.0),
            quantum_correlation(theta),
            quantum_correlation(theta - theta / 2.0),
        )
        if shared.lhs > 1.0 + 1e-12:
            n_violations_shared += 1
        rows.append(
            {
                "theta": theta,
                "c_pair": est.c,
                "c_pair_stderr": est.stderr,
                "n_pair_resolved": est.n_resolved,
                "c_shared_phi": shared.c_phi,
                "c_shared_theta": shared.c_theta,
                "c_shared_cross": shared.c_cross,
                "bell_lhs_shared": shared.lhs,
                "n_shared_used": shared.n_used,
                "c_distinct": distinct.c,
                "c_distinct_stderr": distinct.stderr,
                "n_distinct_resolved": distinct.n_resolved,
                "quantum": quantum_correlation(theta),
                "bell_lhs_quantum": lhs_quantum,
            }
        )

    write_csv(
        config.out_dir / "report.csv",
        list(rows[0].keys()),
        [tuple(r.values()) for r in rows],
    )
    report = {
        "mode_note": (
            "shared columns reuse one pair list across all three orientations; "
            "distinct columns consume a fresh ensemble per orientation and never "
            "construct a three-orientation sign triple"
        ),
        "tol_index": tol_index,
        "n_pairs": n_pairs,
        "angles": [float(a) for a in angles],
        "rows": rows,
        "n_shared_bound_violations": n_violations_shared,
    }
    write_json(config.out_dir / "report.json", report)
    return {
        "n_angles": len(rows),
        "n_shared_bound_violations": n_violations_shared,
        "max_bell_lhs_shared": max(r["bell_lhs_shared"] for r in rows),
        "max_bell_lhs_quantum": max(r["bell_lhs_quantum"] for r in rows),
    }


_COMMANDS = {
    "duffing": cmd_duffing,
    "basin-grid": cmd_basin_grid,
    "tol-scan": cmd_tol_scan,
    "fraction": cmd_fraction,
    "spin": cmd_spin,
    "bell": cmd_bell,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="riddled-spin",
        description="Twin-well intertwined-basin experiments (grids, scaling fits, spin and EPR statistics).",
    )
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("config", type=Path, help="JSON run configuration")
    parser.add_argument("--out", default=None, help="output directory (overrides config)")
    parser.add_argument("--threads", type=int, default=None, help="worker count (overrides config)")
    args = parser.parse_args(argv)

    t0 = time.monotonic()
    try:
        config = load_config(args.config, args.out, args.threads)
        config.out_dir.mkdir(parents=True, exist_ok=True)
        summary = _COMMANDS[args.subcommand](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NonFiniteError, StepUnderflowError, UnboundedError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DegenerateSampleError, InsufficientDataError) as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return 4
    except RiddledSpinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    write_manifest(
        config.out_dir,
        config_echo=config.echo,
        version=__version__,
        wall_time_s=time.monotonic() - t0,
        summary=summary,
    )
    print(f"{args.subcommand}: wrote {config.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
