"""Closed-form results for the alternating reset walk.

Transform conventions: a hat is the Laplace transform in time (variable
``s``), the Fourier transform in space uses ``E[exp(+i omega X)]``, and the
one-sided spatial Laplace transform uses ``exp(-r x)``.

Survival transforms and MFPTs are for the first exit from ``(-inf, level]``
starting at the origin or at ``x`` with a given direction of motion. Only
the rightward parameters matter for them, so the functions here take the
rightward speed, jump rate and jump parameter as plain numbers.
"""

from __future__ import annotations

import math

import numpy as np

from .model import Direction, ExponentialJumps, JumpLaw, ModelParams, ZeroJumps

_REAL_TOL = 1e-12


def _real_if_real_input(value, s):
    """Return a real result for real ``s``, checking the imaginary part is negligible."""
    if np.iscomplexobj(s):
        return value
    value = np.asarray(value)
    scale = np.maximum(np.abs(value), 1.0)
    if np.any(np.abs(value.imag) > _REAL_TOL * scale):
        raise ArithmeticError("transform expected to be real for real s")
    out = value.real
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# propagator


def monotonic_propagator_laplace(r, s, x0: float, reset_rate: float, jump_rate: float, speed: float, law: JumpLaw):
    """Double-Laplace propagator of the one-directional walk that always resets rightwards.

    ``(L/s + exp(-r x0)) / (s + L + lam [1 - h(r)] + G r)``
    """
    r = np.asarray(r, dtype=complex)
    s = np.asarray(s, dtype=complex)
    return (reset_rate / s + np.exp(-r * x0)) / (s + reset_rate + jump_rate * (1.0 - law.laplace(r)) + speed * r)


def _phase_denominator(p: ModelParams, omega, s, direction: Direction):
    sign = direction.sign
    h = p.jump_law(direction).fourier(omega, direction)
    return s + p.reset_rate + p.jump_rate(direction) * (1.0 - h) - sign * 1j * omega * p.speed(direction)


def propagator_fl(p: ModelParams, omega, s, x0: float = 0.0, direction: Direction | str = Direction.PLUS):
    """Fourier-Laplace transform of the propagator from ``(x0, direction)``.

    Sum of the inertial term (no reset yet) and the two post-reset branches,
    each a resolvent ``1/(s + L + lam[1 - h(omega)] -+ i omega G)``.
    """
    direction = Direction.parse(direction)
    if x0 * direction.sign < 0:
        raise ValueError(f"start x0={x0} incompatible with direction {direction.name}")
    omega = np.asarray(omega, dtype=float)
    s = np.asarray(s, dtype=complex)
    rho, lam_reset = p.direction_prob, p.reset_rate
    inertial = np.exp(1j * omega * x0) / _phase_denominator(p, omega, s, direction)
    plus = 1.0 / _phase_denominator(p, omega, s, Direction.PLUS)
    minus = 1.0 / _phase_denominator(p, omega, s, Direction.MINUS)
    return inertial + (lam_reset / s) * (rho * plus + (1.0 - rho) * minus)


def propagator_fl_unconditional(p: ModelParams, omega, s):
    """Propagator transform from the origin with a random initial direction."""
    rho = p.direction_prob
    return rho * propagator_fl(p, omega, s, 0.0, Direction.PLUS) + (1 - rho) * propagator_fl(p, omega, s, 0.0, Direction.MINUS)


def propagator_poles(p: ModelParams, omega: float) -> np.ndarray:
    """Poles in ``s`` of the propagator transform at fixed ``omega``."""
    poles = [0.0 + 0j]
    for d in Direction:
        poles.append(complex(-_phase_denominator(p, omega, 0.0, d)))
    return np.array(poles)


def stationary_cf(p: ModelParams, omega):
    """Characteristic function of the stationary law (limit of ``s`` times the propagator)."""
    if not p.reset_rate > 0:
        raise ValueError("no stationary state without resets (reset_rate must be > 0)")
    rho, lam_reset = p.direction_prob, p.reset_rate
    plus = _phase_denominator(p, omega, 0.0, Direction.PLUS)
    minus = _phase_denominator(p, omega, 0.0, Direction.MINUS)
    return lam_reset * rho / plus + lam_reset * (1.0 - rho) / minus


def is_exp_drift_case(p: ModelParams) -> bool:
    """Rightward: exponential jumps only. Leftward: pure drift."""
    return (
        p.speed_plus == 0
        and p.jump_rate_plus > 0
        and isinstance(p.jump_law_plus, ExponentialJumps)
        and p.jump_rate_minus == 0
        and p.speed_minus > 0
    )


def stationary_density_exp_drift(reset_rate, jump_rate, gamma, speed, rho, x):
    """Stationary law when rightward motion is by exponential jumps and leftward by drift.

    Returns ``(density, atom)``: the continuous density at ``x`` and the
    weight of the point mass at the origin.
    """
    if not (reset_rate > 0 and jump_rate > 0 and gamma > 0 and speed > 0 and 0 <= rho <= 1):
        raise ValueError("stationary_density_exp_drift needs positive rates, speed, gamma and rho in [0, 1]")
    x = np.asarray(x, dtype=float)
    total = reset_rate + jump_rate
    atom = reset_rate * rho / total
    right = atom * gamma * jump_rate / total * np.exp(-reset_rate * gamma * np.where(x > 0, x, 0.0) / total)
    left = reset_rate * (1 - rho) / speed * np.exp(reset_rate * np.where(x < 0, x, 0.0) / speed)
    density = np.where(x > 0, right, np.where(x < 0, left, 0.0))
    return (float(density) if density.ndim == 0 else density), atom


def stationary_cdf_exp_drift(reset_rate, jump_rate, gamma, speed, rho, x):
    """Mass of the continuous part on ``(-inf, x]`` (atom excluded)."""
    x = np.asarray(x, dtype=float)
    total = reset_rate + jump_rate
    left_mass = 1.0 - rho
    right_mass = rho * jump_rate / total
    right_rate = reset_rate * gamma / total
    left_rate = reset_rate / speed
    below = left_mass * np.exp(left_rate * np.minimum(x, 0.0))
    above = right_mass * -np.expm1(-right_rate * np.maximum(x, 0.0))
    return np.where(x <= 0, below, left_mass + above)


# ---------------------------------------------------------------------------
# small helpers


def tail_exponent_beta(reset_rate: float, speed: float, jump_rate: float, mean_jump: float) -> float:
    """Power-law tail exponent of ``exp(X)`` for the one-directional reset walk."""
    denom = speed + jump_rate * mean_jump
    if not denom > 0:
        raise ZeroDivisionError("speed + jump_rate * mean_jump must be positive")
    return reset_rate / denom


def mfpt_rational(level: float, speed: float, rho: float) -> float:
    """MFPT of the agent who resets deterministically after the ballistic transit time."""
    if not speed > 0:
        raise ValueError("speed must be positive")
    if rho == 0:
        return math.inf
    return level / (speed * rho)


# ---------------------------------------------------------------------------
# pure drift (no jumps)


def _check_start(x, direction, level):
    direction = Direction.parse(direction)
    if direction is Direction.PLUS and not 0 <= x <= level:
        raise ValueError(f"rightward start must satisfy 0 <= x <= level, got x={x}")
    if direction is Direction.MINUS and x > 0:
        raise ValueError(f"leftward start must satisfy x <= 0, got x={x}")
    return direction


def sp_laplace_pure_drift(s, x, direction, reset_rate, speed, rho, level):
    """Laplace transform in time of the survival probability, drift only.

    ``s = 0`` gives the MFPT.
    """
    direction = _check_start(x, direction, level)
    sc = np.asarray(s, dtype=complex)
    decay = np.exp(-(sc + reset_rate) * level / speed)
    denom = sc + reset_rate * rho * decay
    if direction is Direction.PLUS:
        value = -np.expm1(-(sc + reset_rate) * (level - x) / speed) / denom
    else:
        value = 1.0 / denom
    return _real_if_real_input(value, s)


def mfpt_pure_drift(x, direction, reset_rate, speed, rho, level) -> float:
    direction = _check_start(x, direction, level)
    if rho == 0:
        return math.inf
    if reset_rate == 0:
        if direction is Direction.MINUS:
            return math.inf
        return (level - x) / speed
    u_level = reset_rate * level / speed
    if direction is Direction.PLUS:
        # (e^{L l/G} - e^{L x/G}) / (L rho), written to stay accurate as L -> 0
        return math.exp(reset_rate * x / speed) * math.expm1(reset_rate * (level - x) / speed) / (reset_rate * rho)
    return math.exp(u_level) / (reset_rate * rho)


def mfpt_pure_drift_unconditional(reset_rate, speed, rho, level) -> float:
    """MFPT from the origin, direction drawn with probability ``rho``."""
    if rho == 0:
        return math.inf
    if reset_rate == 0:
        return level / speed if rho == 1 else math.inf
    u = reset_rate * level / speed
    return (math.expm1(u) / rho + (1.0 - rho) / rho) / reset_rate


# ---------------------------------------------------------------------------
# exponential jumps, no drift


def _alpha(s, reset_rate, jump_rate, gamma):
    return gamma * (s + reset_rate) / (s + reset_rate + jump_rate)


def sp_laplace_exp_jumps(s, x, direction, reset_rate, jump_rate, gamma, rho, level):
    """Laplace transform in time of the survival probability, exponential jumps without drift."""
    direction = _check_start(x, direction, level)
    sc = np.asarray(s, dtype=complex)
    total = sc + reset_rate + jump_rate
    alpha = _alpha(sc, reset_rate, jump_rate, gamma)
    decay = np.exp(-alpha * level)
    origin = (total - jump_rate * decay) / (sc * total + reset_rate * jump_rate * rho * decay)
    renewal = (1.0 + reset_rate * rho * origin) / (sc + reset_rate * rho)
    if direction is Direction.PLUS:
        value = renewal * (1.0 - jump_rate * np.exp(-alpha * (level - x)) / total)
    else:
        value = renewal
    return _real_if_real_input(value, s)


def mfpt_exp_jumps(reset_rate, jump_rate, gamma, rho, level):
    """``(T(0,+), T(0,-), T(0))`` for exponential jumps without drift."""
    if rho == 0 or jump_rate == 0:
        return math.inf, math.inf, math.inf
    if reset_rate == 0:
        plus = (1.0 + gamma * level) / jump_rate
        if rho < 1:
            return plus, math.inf, math.inf
        return plus, math.inf, plus
    a = gamma * level * reset_rate / (reset_rate + jump_rate)
    # ((L+lam)/lam) e^a - 1 = expm1(a) + (L/lam) e^a
    bracket = math.expm1(a) + reset_rate / jump_rate * math.exp(a)
    plus = bracket / (reset_rate * rho)
    minus = (reset_rate + jump_rate) * math.exp(a) / (reset_rate * jump_rate * rho)
    unconditional = (bracket / rho + (1.0 - rho) / rho) / reset_rate
    return plus, minus, unconditional


# ---------------------------------------------------------------------------
# recognising the closed-form families


def closed_form_family(p: ModelParams) -> str | None:
    """``"pure-drift"``, ``"exp-jumps"`` or ``None`` for the rightward dynamics of ``p``."""
    no_jumps = p.jump_rate_plus == 0 or isinstance(p.jump_law_plus, ZeroJumps)
    if no_jumps and p.speed_plus > 0:
        return "pure-drift"
    if p.speed_plus == 0 and p.jump_rate_plus > 0 and isinstance(p.jump_law_plus, ExponentialJumps):
        return "exp-jumps"
    return None


def mfpt_closed_form(p: ModelParams, level: float) -> float | None:
    """Unconditional MFPT from the closed forms, or ``None`` if no family applies."""
    family = closed_form_family(p)
    if family == "pure-drift":
        return mfpt_pure_drift_unconditional(p.reset_rate, p.speed_plus, p.direction_prob, level)
    if family == "exp-jumps":
        return mfpt_exp_jumps(p.reset_rate, p.jump_rate_plus, p.jump_law_plus.gamma, p.direction_prob, level)[2]
    return None


def sp_laplace_closed_form(p: ModelParams, level: float, s, x: float = 0.0, direction=Direction.PLUS):
    family = closed_form_family(p)
    if family == "pure-drift":
        return sp_laplace_pure_drift(s, x, direction, p.reset_rate, p.speed_plus, p.direction_prob, level)
    if family == "exp-jumps":
        return sp_laplace_exp_jumps(
            s, x, direction, p.reset_rate, p.jump_rate_plus, p.jump_law_plus.gamma, p.direction_prob, level
        )
    raise ValueError("parameters are not in a closed-form family")
