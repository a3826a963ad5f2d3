"""Experiment runners: analytic curves side by side with Monte Carlo estimates, written as CSV."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .analytic import (
    is_exp_drift_case,
    mfpt_closed_form,
    stationary_cf,
    stationary_density_exp_drift,
)
from .config import ExperimentConfig
from .inversion import (
    char_function_t_unconditional,
    mfpt_general_unconditional,
    survival_closed_form_unconditional,
    survival_general_unconditional,
)
from .model import ExponentialJumps, ModelParams
from .optimize import Regime, minimize_mfpt_numeric, optimal_rate_exp_jumps, optimal_rate_pure_drift
from .simulate import (
    derive_seed,
    estimate_char_function,
    estimate_mfpt,
    estimate_stationary,
    estimate_survival,
)


AGREEMENT_SIGMAS = 4.0
CURVE_COLUMNS = ("analytic", "mc_mean", "mc_stderr", "n", "censored", "z")


@dataclass
class RunReport:
    files: list[Path] = field(default_factory=list)
    points: int = 0
    agreeing: int = 0
    censored_rows: int = 0
    notes: list[str] = field(default_factory=list)

    def merge(self, other: "RunReport") -> None:
        self.files += other.files
        self.points += other.points
        self.agreeing += other.agreeing
        self.censored_rows += other.censored_rows
        self.notes += other.notes


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def analytic_mfpt(p: ModelParams, level: float) -> float:
    value = mfpt_closed_form(p, level)
    return mfpt_general_unconditional(p, level) if value is None else value


def analytic_survival(p: ModelParams, level: float, t: float) -> float:
    if t == 0:
        return 1.0
    if mfpt_closed_form(p, level) is not None:
        return survival_closed_form_unconditional(p, level, t)
    return survival_general_unconditional(p, level, t)


def _z(mean, stderr, analytic):
    if stderr is None or analytic is None or not math.isfinite(analytic) or not stderr > 0:
        return None
    return (mean - analytic) / stderr


def mfpt_curve(
    make_params: Callable[[float], ModelParams],
    xs: Sequence[float],
    level: float,
    n_paths: int,
    seed,
    workers: int | None = None,
    time_unit: float = 1.0,
) -> tuple[list[list], RunReport]:
    """Rows of ``(x, analytic, mc_mean, mc_stderr, n, censored, z)`` for an MFPT sweep.

    Times are divided by ``time_unit``. Rows with censored paths keep their
    estimate but get no ``z`` and are left out of the agreement count.
    """
    rows, report = [], RunReport()
    for i, x in enumerate(xs):
        p = make_params(x)
        exact = analytic_mfpt(p, level)
        est = estimate_mfpt(p, level, n_paths, seed=derive_seed(seed, i), workers=workers)
        mean, err = est.mean / time_unit, est.stderr / time_unit
        exact_u = exact / time_unit
        z = None if est.censored else _z(mean, err, exact_u)
        report.points += 1
        if est.censored:
            report.censored_rows += 1
            report.notes.append(f"x={x:g}: {est.censored} censored paths, row excluded from agreement")
        elif z is not None and abs(z) <= AGREEMENT_SIGMAS:
            report.agreeing += 1
        elif z is None and mean == exact_u:
            report.agreeing += 1
        rows.append([x, exact_u, mean, err, est.n, est.censored, z])
    return rows, report


def has_interior_minimum(values: Sequence[float]) -> bool:
    k = int(np.argmin(values))
    return 0 < k < len(values) - 1


# ---------------------------------------------------------------------------
# figures


@dataclass(frozen=True)
class FigureSpec:
    name: str
    title: str
    x_name: str
    rhos: tuple[float, ...]
    grid: tuple[float, ...]
    make_params: Callable[[float, float], ModelParams]
    level: float = 1.0
    time_unit: float = 1.0


def _pure_drift(scaled_rate: float, rho: float) -> ModelParams:
    # speed = level = 1, so rates are in speed/level units and times in level/speed
    return ModelParams(scaled_rate, rho, speed_plus=1.0, speed_minus=1.0)


def _exp_jumps(gamma_level: float):
    def make(rate_ratio: float, rho: float) -> ModelParams:
        law = ExponentialJumps(gamma_level)
        return ModelParams(rate_ratio, rho, jump_rate_plus=1.0, jump_rate_minus=1.0, jump_law_plus=law, jump_law_minus=law)

    return make


def _geom(lo, hi, n):
    return tuple(float(v) for v in np.geomspace(lo, hi, n))


FIGURES = {
    "fig2": FigureSpec(
        "fig2", "MFPT vs reset rate, pure drift", "reset_rate_scaled",
        (0.25, 0.5, 0.75, 1.0), _geom(0.05, 5.0, 15), _pure_drift,
    ),
    "fig4": FigureSpec(
        "fig4", "MFPT vs reset/jump rate ratio, exponential jumps with gamma*level = 4", "rate_ratio",
        (0.1, 0.25, 0.5, 0.75, 0.9), _geom(0.01, 3.0, 15), _exp_jumps(4.0),
    ),
    "fig6": FigureSpec(
        "fig6", "MFPT vs reset/jump rate ratio, exponential jumps with gamma*level = 0.5", "rate_ratio",
        (0.25, 0.5, 0.75, 0.9), _geom(0.01, 100.0, 17), _exp_jumps(0.5),
    ),
}


def run_figure(
    name: str,
    out_dir: Path,
    n_paths: int,
    seed: int = 0,
    rhos: Sequence[float] | None = None,
    grid: Sequence[float] | None = None,
    workers: int | None = None,
) -> RunReport:
    """One CSV per direction-probability curve, named ``<fig>_rho<rho>.csv``."""
    spec = FIGURES[name]
    rhos = tuple(rhos or spec.rhos)
    grid = tuple(grid or spec.grid)
    report = RunReport()
    header = (spec.x_name,) + CURVE_COLUMNS
    for c, rho in enumerate(rhos):
        rows, part = mfpt_curve(
            lambda x: spec.make_params(x, rho), grid, spec.level, n_paths,
            derive_seed(seed, c), workers, spec.time_unit,
        )
        path = write_csv(Path(out_dir) / f"{name}_rho{rho:g}.csv", header, rows)
        part.files.append(path)
        shape = "interior minimum" if has_interior_minimum([r[1] for r in rows]) else "no interior minimum"
        part.notes.append(
            f"{name} rho={rho:g}: {shape}; MC within {AGREEMENT_SIGMAS:g} stderr at {part.agreeing}/{part.points} points"
        )
        report.merge(part)
    return report


# ---------------------------------------------------------------------------
# config-driven runs


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> RunReport:
    runner = {
        "mfpt-curve": _run_mfpt_curve,
        "survival-curve": _run_survival_curve,
        "stationary": _run_stationary,
        "optimize": _run_optimize,
        "figure": _run_figure_cfg,
    }[cfg.kind]
    return runner(cfg, workers)


def _stem(cfg: ExperimentConfig) -> str:
    return cfg.source.stem if cfg.source is not None else cfg.kind


def _run_figure_cfg(cfg, workers):
    return run_figure(cfg.figure, cfg.output, cfg.n_paths, cfg.seed, cfg.direction_probs or None, cfg.reset_rates or None, workers)


def _run_mfpt_curve(cfg, workers):
    report = RunReport()
    for c, rho in enumerate(cfg.curves()):
        template = cfg.model.with_direction_prob(rho)
        rows, part = mfpt_curve(
            template.with_reset_rate, cfg.reset_rates, cfg.level, cfg.n_paths, derive_seed(cfg.seed, c), workers
        )
        part.files.append(write_csv(cfg.output / f"{_stem(cfg)}_rho{rho:g}.csv", ("reset_rate",) + CURVE_COLUMNS, rows))
        part.notes.append(f"rho={rho:g}: MC within {AGREEMENT_SIGMAS:g} stderr at {part.agreeing}/{part.points} points")
        report.merge(part)
    return report


def _run_survival_curve(cfg, workers):
    report = RunReport()
    for c, rho in enumerate(cfg.curves()):
        p = cfg.model.with_direction_prob(rho)
        est = estimate_survival(p, cfg.level, cfg.times, cfg.n_paths, seed=derive_seed(cfg.seed, c), workers=workers)
        rows, part = [], RunReport()
        for t, e in est:
            exact = analytic_survival(p, cfg.level, t)
            z = _z(e.mean, e.stderr, exact)
            part.points += 1
            if (z is None and abs(e.mean - exact) < 1e-6) or (z is not None and abs(z) <= AGREEMENT_SIGMAS):
                part.agreeing += 1
            rows.append([t, exact, e.mean, e.stderr, e.n, 0, z])
        part.files.append(write_csv(cfg.output / f"{_stem(cfg)}_rho{rho:g}.csv", ("time",) + CURVE_COLUMNS, rows))
        part.notes.append(f"rho={rho:g}: MC within {AGREEMENT_SIGMAS:g} stderr at {part.agreeing}/{part.points} times")
        report.merge(part)
    return report


def _run_stationary(cfg, workers):
    p, report = cfg.model, RunReport()
    est = estimate_stationary(p, cfg.n_paths, cfg.t_snapshot, cfg.seed, cfg.bins, cfg.x_range, workers)
    centers = 0.5 * (est.edges[1:] + est.edges[:-1])
    widths = np.diff(est.edges)
    density_err = np.sqrt(est.density * widths * cfg.n_paths) / (cfg.n_paths * widths)
    exact_density, exact_atom = None, None
    if is_exp_drift_case(p):
        exact_density, exact_atom = stationary_density_exp_drift(
            p.reset_rate, p.jump_rate_plus, p.jump_law_plus.gamma, p.speed_minus, p.direction_prob, centers
        )
    rows = []
    for i, x in enumerate(centers):
        exact = None if exact_density is None else float(exact_density[i])
        rows.append([x, exact, est.density[i], density_err[i], est.n, 0, _z(est.density[i], density_err[i], exact)])
    stem = _stem(cfg)
    report.files.append(write_csv(cfg.output / f"{stem}_density.csv", ("x",) + CURVE_COLUMNS, rows))
    atom_z = _z(est.atom.mean, est.atom.stderr, exact_atom)
    report.files.append(
        write_csv(
            cfg.output / f"{stem}_atom.csv", ("quantity",) + CURVE_COLUMNS,
            [["atom_at_zero", exact_atom, est.atom.mean, est.atom.stderr, est.n, 0, atom_z]],
        )
    )
    if exact_density is not None:
        l1 = float(np.sum(np.abs(est.density - exact_density) * widths))
        report.notes.append(f"L1 distance of continuous part to closed form: {l1:.4g}")
    if exact_atom is not None:
        report.notes.append(f"atom {est.atom.mean:.5f} +- {est.atom.stderr:.5f} (closed form {exact_atom:.5f})")
    if cfg.omegas:
        rows = []
        for j, w in enumerate(cfg.omegas):
            exact = char_function_t_unconditional(p, w, est.t_snapshot)
            mc = estimate_char_function(p, w, est.t_snapshot, cfg.n_paths, seed=derive_seed(cfg.seed, 1, j), workers=workers)
            rows.append([w, exact.real, exact.imag, mc.mean.real, mc.mean.imag, mc.stderr, mc.n, 0, complex(stationary_cf(p, w)).real])
        header = ("omega", "analytic_re", "analytic_im", "mc_re", "mc_im", "mc_stderr", "n", "censored", "stationary_re")
        report.files.append(write_csv(cfg.output / f"{stem}_cf.csv", header, rows))
    return report


def _run_optimize(cfg, workers):
    report, rows = RunReport(), []
    for c, rho in enumerate(cfg.curves()):
        template = cfg.model.with_direction_prob(rho)
        closed = None
        if mfpt_closed_form(template, cfg.level) is not None and rho > 0:
            if template.speed_plus > 0:
                closed = optimal_rate_pure_drift(template.speed_plus, cfg.level, rho)
            else:
                closed = optimal_rate_exp_jumps(template.jump_rate_plus, template.jump_law_plus.gamma, cfg.level, rho)
        numeric = minimize_mfpt_numeric(template, cfg.level, cfg.bracket)
        best = closed or numeric
        mc = None
        if best.regime is Regime.INTERIOR_MINIMUM:
            mc = estimate_mfpt(
                template.with_reset_rate(best.lambda_star), cfg.level, cfg.n_paths,
                seed=derive_seed(cfg.seed, c), workers=workers,
            )
            report.points += 1
            if mc.censored:
                report.censored_rows += 1
            elif abs(mc.mean - best.mfpt_star) <= AGREEMENT_SIGMAS * mc.stderr:
                report.agreeing += 1
        rows.append([
            rho, best.regime.value, best.lambda_star, numeric.lambda_star, best.mfpt_star,
            mc.mean if mc else None, mc.stderr if mc else None, mc.n if mc else None, mc.censored if mc else None,
            None if mc is None or mc.censored else _z(mc.mean, mc.stderr, best.mfpt_star),
        ])
        report.notes.append(f"rho={rho:g}: {best.regime.value}, rate* = {best.lambda_star}, mfpt* = {best.mfpt_star:.6g}")
    header = ("direction_prob", "regime", "lambda_star", "lambda_star_numeric") + CURVE_COLUMNS
    report.files.append(write_csv(cfg.output / f"{_stem(cfg)}.csv", header, rows))
    return report
