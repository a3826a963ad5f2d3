"""Optimal reset rates: the transcendental root, closed-form optima and a numeric minimizer."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable

from .analytic import mfpt_exp_jumps, mfpt_pure_drift_unconditional
from .inversion import InversionConfig, mfpt_general_unconditional
from .model import ModelParams, ParameterError, validate_params

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
DEFAULT_BRACKET = (1e-3, 1e3)


class Regime(enum.Enum):
    INTERIOR_MINIMUM = "interior-minimum"
    MONOTONE_DECREASING = "monotone-decreasing"  # best as reset rate -> infinity
    MONOTONE_INCREASING = "monotone-increasing"  # best as reset rate -> 0


class ApproxRegime(enum.Enum):
    SMALL_RHO = "small-rho"
    LARGE_RHO = "large-rho"


class Example(enum.Enum):
    PURE_DRIFT = "pure-drift"
    EXP_JUMPS = "exp-jumps"


@dataclass(frozen=True)
class OptimumReport:
    lambda_star: float | None
    mfpt_star: float
    regime: Regime
    residual: float = 0.0

    def __post_init__(self):
        interior = self.regime is Regime.INTERIOR_MINIMUM
        if interior != (self.lambda_star is not None):
            raise ValueError("lambda_star must be set exactly for interior minima")


def _xi_equation(xi: float, rho: float) -> float:
    return math.exp(xi) * (xi - 1.0) + rho


def xi_root(rho: float) -> float:
    """Root in ``[0, 1]`` of ``exp(xi) * (xi - 1) + rho = 0``.

    The left side is increasing on ``[0, 1]`` (derivative ``xi * exp(xi)``),
    so a bracketing Newton iteration cannot lose the root.
    """
    if not 0.0 <= rho <= 1.0:
        raise ParameterError(f"direction probability out of range [0, 1]: {rho!r}")
    if rho == 0.0:
        return 1.0
    if rho == 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    # start from the small-rho or large-rho expansion, whichever is closer
    xi = 1.0 - rho / math.e if rho < 0.5 else math.sqrt(2.0 * (1.0 - rho))
    for _ in range(200):
        f = _xi_equation(xi, rho)
        if f == 0.0:
            return xi
        if f < 0:
            lo = xi
        else:
            hi = xi
        slope = xi * math.exp(xi)
        step = xi - f / slope if slope > 0 else math.nan
        xi = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo < 4e-16 or abs(f) < 1e-15:
            break
    # polish: pick the best of the final candidates
    return min((xi, lo, hi), key=lambda v: abs(_xi_equation(v, rho)))


def xi_residual(rho: float, xi: float | None = None) -> float:
    xi = xi_root(rho) if xi is None else xi
    return abs(_xi_equation(xi, rho))


def _check_rho(rho: float) -> None:
    if not 0.0 < rho <= 1.0:
        raise ParameterError(f"optimum needs a direction probability in (0, 1], got {rho!r}")


def optimal_rate_pure_drift(speed: float, level: float, rho: float) -> OptimumReport:
    """Optimal reset rate for pure drift (no jumps) towards the level."""
    _check_rho(rho)
    if not (speed > 0 and level > 0):
        raise ParameterError("speed and level must be positive")
    if rho == 1.0:
        return OptimumReport(None, level / speed, Regime.MONOTONE_INCREASING, 0.0)
    xi = xi_root(rho)
    lam = speed * xi / level
    return OptimumReport(lam, mfpt_pure_drift_unconditional(lam, speed, rho, level), Regime.INTERIOR_MINIMUM, xi_residual(rho, xi))


def optimal_rate_exp_jumps(jump_rate: float, gamma: float, level: float, rho: float) -> OptimumReport:
    """Optimal reset rate for exponential jumps (rate ``gamma``) without drift."""
    _check_rho(rho)
    if not (jump_rate > 0 and gamma > 0 and level > 0):
        raise ParameterError("jump_rate, gamma and level must be positive")
    g = gamma * level
    if rho == 1.0:
        return OptimumReport(None, (1.0 + g) / jump_rate, Regime.MONOTONE_INCREASING, 0.0)
    xi = xi_root(rho)
    res = xi_residual(rho, xi)
    if xi >= g:
        return OptimumReport(None, math.exp(g) / (jump_rate * rho), Regime.MONOTONE_DECREASING, res)
    lam = jump_rate * xi / (g - xi)
    _, _, mfpt = mfpt_exp_jumps(lam, jump_rate, gamma, rho, level)
    return OptimumReport(lam, mfpt, Regime.INTERIOR_MINIMUM, res)


def approx_optimal(
    regime: ApproxRegime | str,
    example: Example | str,
    rho: float,
    level: float,
    speed: float | None = None,
    jump_rate: float | None = None,
    gamma: float | None = None,
) -> tuple[float, float]:
    """Leading-order ``(rate, mfpt)`` optimum for ``rho`` near 0 or near 1."""
    regime, example = ApproxRegime(regime), Example(example)
    if example is Example.PURE_DRIFT:
        if speed is None:
            raise ParameterError("pure-drift approximation needs speed")
        unit_rate, unit_time = speed / level, level / speed
        if regime is ApproxRegime.SMALL_RHO:
            return unit_rate * (1.0 - rho / math.e), unit_time * math.e / rho
        root = math.sqrt(2.0 * (1.0 - rho))
        return unit_rate * root, unit_time / (1.0 - root)
    if jump_rate is None or gamma is None:
        raise ParameterError("exp-jumps approximation needs jump_rate and gamma")
    g = gamma * level
    if regime is ApproxRegime.SMALL_RHO:
        ratio = (math.e - rho) / ((g - 1.0) * math.e + rho)
        return jump_rate * ratio, (g / jump_rate) * (math.e / rho)
    root = math.sqrt(2.0 * (1.0 - rho))
    return jump_rate * root / (g - root), (g / (1.0 - root) + 1.0) / jump_rate


def natural_rate(p: ModelParams, level: float) -> float:
    """Rate scale used for default brackets: speed/level, else the jump rate."""
    if p.speed_plus > 0:
        return p.speed_plus / level
    if p.jump_rate_plus > 0:
        return p.jump_rate_plus
    raise ParameterError("the rightward phase neither drifts nor jumps")


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float) -> tuple[float, float, float]:
    """Minimize ``f`` on ``[lo, hi]``; returns ``(x, f(x), final half-width)``.

    The endpoints themselves are never evaluated.
    """
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc <= fd else (d, fd)
    return x, fx, 0.5 * (b - a)


def minimize_mfpt_numeric(
    template: ModelParams,
    level: float,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-7,
    cfg: InversionConfig | None = None,
) -> OptimumReport:
    """Minimize the unconditional MFPT over the reset rate by golden section in log-rate.

    ``bracket`` is in absolute rate units; by default it spans
    ``DEFAULT_BRACKET`` times :func:`natural_rate`. ``tol`` is the target
    relative precision of the rate. A minimizer that ends within a few
    tolerances of a bracket end is reported as a monotone regime.
    """
    validate_params(replace(template, reset_rate=1.0))
    if bracket is None:
        unit = natural_rate(template, level)
        bracket = (DEFAULT_BRACKET[0] * unit, DEFAULT_BRACKET[1] * unit)
    lo, hi = map(float, bracket)
    if not 0 < lo < hi:
        raise ValueError(f"bracket must satisfy 0 < lo < hi, got {bracket}")

    def objective(u: float) -> float:
        return mfpt_general_unconditional(template.with_reset_rate(math.exp(u)), level, cfg=cfg)

    u_lo, u_hi = math.log(lo), math.log(hi)
    u, fu, half = golden_section(objective, u_lo, u_hi, tol)
    edge = 10.0 * tol
    if u - u_lo <= edge:
        return OptimumReport(None, objective(u_lo), Regime.MONOTONE_INCREASING, half)
    if u_hi - u <= edge:
        return OptimumReport(None, objective(u_hi), Regime.MONOTONE_DECREASING, half)
    return OptimumReport(math.exp(u), fu, Regime.INTERIOR_MINIMUM, half)
