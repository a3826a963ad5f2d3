"""Numerical Laplace inversion and the general first-passage pipeline.

Three inverters are provided:

``stehfest``
    Gaver-Stehfest; real abscissas only. Cheap, but its truncation error sits
    around 1e-6..1e-5 in double precision.
``talbot``
    Fixed Talbot contour (Abate-Valko). Near machine precision for transforms
    whose singularities lie on or near the negative real axis. Unsuitable when
    the transform carries delay factors ``exp(-s*tau)``.
``euler``
    Fourier series on a Bromwich line with Euler summation (Abate-Whitt).
    Handles delay factors and discontinuous originals; used for survival
    probabilities in time and for spatial kernels of jump laws with atoms.

The first-passage quantities follow from the closed double-Laplace solution
``1 / (r * (s + L + lam*(1 - h(r)) + G*r))`` of the survival renewal problem,
inverted in the spatial variable ``r`` and closed by a scalar
self-consistency condition.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .model import Direction, ModelParams, ParameterError, validate_params

log = logging.getLogger(__name__)

METHODS = ("stehfest", "talbot", "euler")
_RESONANCE_DECAY = 40.0  # exp(-40) ~ 4e-18, below double precision


class InversionError(ArithmeticError):
    """The numerical solution broke down (e.g. a self-consistency denominator <= 0)."""


@dataclass(frozen=True)
class InversionConfig:
    """Inverter choice and its knobs.

    ``order`` is the Gaver-Stehfest order (even, 4..20); ``nodes`` the number
    of Talbot contour nodes; ``euler_terms``/``euler_average`` the raw and
    binomially averaged term counts of the Euler method and ``euler_shift`` its
    abscissa parameter ``A`` (discretisation error ~ exp(-A)).
    """

    method: str = "talbot"
    order: int = 14
    nodes: int = 32
    euler_terms: int = 300
    euler_average: int = 40
    euler_shift: float = 18.4

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown inversion method {self.method!r}; expected one of {METHODS}")
        if self.order % 2 or not 4 <= self.order <= 20:
            raise ValueError(
                f"Gaver-Stehfest order must be even and within [4, 20] "
                f"(larger orders overflow double precision), got {self.order}"
            )
        if self.nodes < 4:
            raise ValueError("Talbot needs at least 4 nodes")
        if self.euler_terms < 1 or self.euler_average < 0:
            raise ValueError("Euler term counts must be positive")


STEHFEST = InversionConfig(method="stehfest")
TALBOT = InversionConfig(method="talbot")
EULER = InversionConfig(method="euler")


@lru_cache(maxsize=None)
def stehfest_weights(order: int) -> tuple[float, ...]:
    if order % 2 or not 4 <= order <= 20:
        raise ValueError(f"Gaver-Stehfest order must be even and within [4, 20], got {order}")
    half = order // 2
    fac = math.factorial
    weights = []
    for k in range(1, order + 1):
        # exact rational arithmetic; only the final weight is rounded
        total = sum(
            Fraction(
                j**half * fac(2 * j),
                fac(half - j) * fac(j) * fac(j - 1) * fac(k - j) * fac(2 * j - k),
            )
            for j in range((k + 1) // 2, min(k, half) + 1)
        )
        weights.append(float((-1) ** (k + half) * total))
    return tuple(weights)


def _evaluate(fhat: Callable, s: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(fhat(s))
        if out.shape == s.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([fhat(v) for v in s.ravel()]).reshape(s.shape)


def _stehfest(fhat, t, order, complex_valued):
    a = math.log(2.0) / t
    w = np.array(stehfest_weights(order))
    vals = _evaluate(fhat, a * np.arange(1, order + 1, dtype=float))
    out = a * np.dot(w, vals)
    return complex(out) if complex_valued else float(np.real(out))


def talbot_nodes(t: float, nodes: int):
    """Contour abscissas ``s_k`` and weights ``w_k`` with ``f(t) ~ sum Re(w_k F(s_k))``."""
    r = 2.0 * nodes / (5.0 * t)
    theta = np.arange(1, nodes) * np.pi / nodes
    cot = 1.0 / np.tan(theta)
    s = np.concatenate(([r + 0j], r * theta * (cot + 1j)))
    sigma = theta + (theta * cot - 1.0) * cot
    w = np.concatenate(([0.5 * np.exp(r * t) + 0j], np.exp(t * s[1:]) * (1.0 + 1j * sigma)))
    return s, w * (r / nodes)


def talbot_encloses(poles, t: float, nodes: int) -> bool:
    """Whether every pole lies strictly inside the fixed Talbot contour."""
    r = 2.0 * nodes / (5.0 * t)
    for p in np.atleast_1d(poles):
        a, b = float(np.real(p)), abs(float(np.imag(p)))
        if b == 0.0:
            if a >= r:
                return False
            continue
        theta = b / r
        if theta >= np.pi * 0.95 or a >= b / math.tan(theta) - 1e-9:
            return False
    return True


def _talbot(fhat, t, nodes, complex_valued):
    s, w = talbot_nodes(t, nodes)
    vals = _evaluate(fhat, s)
    if not complex_valued:
        return float(np.sum(np.real(w * vals)))
    conj_vals = _evaluate(fhat, np.conj(s[1:]))
    r = 2.0 * nodes / (5.0 * t)
    theta = np.arange(1, nodes) * np.pi / nodes
    cot = 1.0 / np.tan(theta)
    sigma = theta + (theta * cot - 1.0) * cot
    w_conj = np.exp(t * np.conj(s[1:])) * (1.0 - 1j * sigma) * (r / nodes)
    return complex(w[0] * vals[0] + 0.5 * np.sum(w[1:] * vals[1:] + w_conj * conj_vals))


def euler_nodes(t: float, terms: int, average: int, shift: float, two_sided: bool = False):
    kmax = terms + average
    k = np.arange(-kmax if two_sided else 0, kmax + 1)
    return k, (shift + 2j * np.pi * k) / (2.0 * t)


def euler_sum(values: np.ndarray, k: np.ndarray, t: float, terms: int, average: int, shift: float):
    """Euler-accelerated Bromwich sum over the last axis of ``values``.

    ``k`` either runs over ``0..K`` (real original, uses real parts) or over
    ``-K..K`` (complex original).
    """
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    scale = math.exp(shift / 2.0) / t
    kmax = int(np.max(k))
    if k[0] < 0:
        centre = kmax
        pos = values[..., centre:] * sign[centre:]
        neg = values[..., centre::-1] * sign[centre::-1]
        terms_k = pos + neg
        terms_k[..., 0] *= 0.5
        terms_k = 0.5 * terms_k
    else:
        terms_k = np.real(values) * sign
        terms_k[..., 0] *= 0.5
    partial = np.cumsum(terms_k, axis=-1)
    binom = np.array([math.comb(average, j) for j in range(average + 1)], dtype=float) / 2.0**average
    return scale * np.tensordot(partial[..., terms : terms + average + 1], binom, axes=([-1], [0]))


def _euler(fhat, t, cfg: InversionConfig, complex_valued, extra_terms=0):
    n = cfg.euler_terms + extra_terms
    k, s = euler_nodes(t, n, cfg.euler_average, cfg.euler_shift, two_sided=complex_valued)
    vals = _evaluate(fhat, s)
    out = euler_sum(vals, k, t, n, cfg.euler_average, cfg.euler_shift)
    return complex(out) if complex_valued else float(out)


def laplace_invert(fhat: Callable, t: float, cfg: InversionConfig | None = None, complex_valued: bool = False):
    """Invert the Laplace transform ``fhat`` at ``t > 0``.

    ``fhat`` should accept a numpy array of (possibly complex) abscissas; a
    scalar-only callable also works, just slower. Set ``complex_valued`` when
    the original function is complex (e.g. a characteristic function).
    """
    cfg = cfg or TALBOT
    if not t > 0:
        raise ValueError(f"inversion time must be positive, got {t}")
    if cfg.method == "stehfest":
        return _stehfest(fhat, t, cfg.order, complex_valued)
    if cfg.method == "talbot":
        return _talbot(fhat, t, cfg.nodes, complex_valued)
    return _euler(fhat, t, cfg, complex_valued)


# ---------------------------------------------------------------------------
# first-passage kernel


def _rightward(p: ModelParams):
    return p.reset_rate, p.direction_prob, p.speed_plus, p.jump_rate_plus, p.jump_law_plus


def _check_rightward(p: ModelParams):
    validate_params(p)
    if not p.moves(Direction.PLUS):
        raise ParameterError("rightward motion is frozen: the level can never be crossed")


def _kernel_transforms(p: ModelParams, s, r):
    """Spatial transforms of the kernel ``G(s; z)`` and of ``1 - (s+L) G(s; z)``."""
    lam_reset, _, speed, rate, law = _rightward(p)
    motion = rate * (1.0 - law.laplace(r)) + speed * r
    denom = r * (s + lam_reset + motion)
    return 1.0 / denom, motion / denom


def kernel_config(p: ModelParams, cfg: InversionConfig | None = None) -> InversionConfig:
    """Inverter for the spatial kernel.

    Talbot by default; Euler when the rightward jump law has an atom, since
    the Talbot contour enters the left half-plane where such transforms
    overflow.
    """
    atomic = p.jump_rate_plus > 0 and p.jump_law_plus.atomic
    if cfg is None:
        return EULER if atomic else TALBOT
    if atomic and cfg.method == "talbot":
        raise InversionError("Talbot cannot invert kernels of jump laws with atoms; use euler or stehfest")
    return cfg


def first_passage_kernel(p: ModelParams, z: float, cfg: InversionConfig | None = None) -> float:
    """``G(0; z)``: inverse spatial transform of ``1/(r[L + lam(1-h(r)) + G r])`` at ``z``."""
    return laplace_invert(lambda r: _kernel_transforms(p, 0.0, r)[0], z, kernel_config(p, cfg))


def _complement_kernel(p: ModelParams, z: float, cfg: InversionConfig | None = None) -> float:
    # 1 - L*G(0; z) computed without cancellation
    return laplace_invert(lambda r: _kernel_transforms(p, 0.0, r)[1], z, kernel_config(p, cfg))


def _check_level(level, x, direction):
    if not level > 0:
        raise ValueError(f"level must be positive, got {level}")
    direction = Direction.parse(direction)
    if direction is Direction.PLUS and not 0.0 <= x <= level:
        raise ValueError(f"rightward start must satisfy 0 <= x <= level, got x={x}")
    if direction is Direction.MINUS and x > 0:
        raise ValueError(f"leftward start must satisfy x <= 0, got x={x}")
    return direction


def mfpt_general(
    p: ModelParams,
    level: float,
    x: float = 0.0,
    direction: Direction | str = Direction.PLUS,
    cfg: InversionConfig | None = None,
) -> float:
    """Mean first-passage time over ``level`` from ``(x, direction)``, any jump law.

    Returns ``inf`` when the level is never reached almost surely (rightward
    probability zero, or a leftward start without resets).
    """
    direction = _check_level(level, x, direction)
    _check_rightward(p)
    lam_reset, rho = p.reset_rate, p.direction_prob
    if lam_reset == 0.0:
        if direction is Direction.MINUS:
            return math.inf
        return first_passage_kernel(p, level - x, cfg) if x < level else 0.0
    if rho == 0.0:
        return 0.0 if (direction is Direction.PLUS and x == level and p.speed_plus > 0) else math.inf
    complement = _complement_kernel(p, level, cfg)
    if not complement > 0:
        raise InversionError(
            f"self-consistency breakdown: 1 - L*G(0; level) = {complement:.3e} <= 0 "
            "(reset rate too large for double precision at this level?)"
        )
    amplitude = 1.0 / (rho * complement)
    if direction is Direction.MINUS:
        return 1.0 / (lam_reset * rho) + amplitude * first_passage_kernel(p, level, cfg)
    if x == level:
        return amplitude * float(np.real(_kernel_at_boundary(p, 0.0)))
    return amplitude * first_passage_kernel(p, level - x, cfg)


def _kernel_at_boundary(p: ModelParams, s):
    """``G(s; 0+)``: zero with drift, otherwise the no-event survival transform."""
    lam_reset, _, speed, rate, law = _rightward(p)
    if speed > 0:
        return np.zeros_like(np.asarray(s, dtype=complex))
    # h(inf) = P(J = 0)
    return 1.0 / (s + lam_reset + rate * (1.0 - float(np.real(law.laplace(1e300)))))


def mfpt_general_unconditional(p: ModelParams, level: float, cfg: InversionConfig | None = None) -> float:
    """MFPT from the origin with the initial direction drawn like after a reset."""
    rho = p.direction_prob
    total = 0.0
    if rho > 0:
        total += rho * mfpt_general(p, level, 0.0, Direction.PLUS, cfg)
    if rho < 1:
        total += (1 - rho) * mfpt_general(p, level, 0.0, Direction.MINUS, cfg)
    return total


# ---------------------------------------------------------------------------
# survival probability


def _euler_complex_inverse(fhat_matrix, z, terms, average, shift):
    k, r = euler_nodes(z, terms, average, shift, two_sided=True)
    return euler_sum(fhat_matrix(r), k, z, terms, average, shift)


def survival_laplace_general(
    p: ModelParams,
    level: float,
    s,
    x: float = 0.0,
    direction: Direction | str = Direction.PLUS,
    cfg: InversionConfig | None = None,
):
    """Time-Laplace transform of the survival probability, by spatial inversion.

    ``s`` may be an array of complex abscissas with ``Re(s) > 0``.
    """
    direction = _check_level(level, x, direction)
    _check_rightward(p)
    cfg = cfg or EULER
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    lam_reset, rho, speed, rate, law = _rightward(p)

    def inverse(z, which):
        # the kernel oscillates in z with frequency ~Im(s)/speed; add terms past that
        # resonance. Its amplitude is exp(-Re(s) z/speed): once that underflows the
        # resonance is broad and the Euler average already cancels it.
        extra = 0
        if speed > 0 and float(np.min(s.real)) * z / speed < _RESONANCE_DECAY:
            extra = int(math.ceil(float(np.max(np.abs(s.imag))) * z / (math.pi * speed)))
        terms = cfg.euler_terms + extra
        return _euler_complex_inverse(
            lambda r: _kernel_transforms(p, s[:, None], r[None, :])[which],
            z, terms, cfg.euler_average, cfg.euler_shift,
        )

    g_level = inverse(level, 0)
    h_level = inverse(level, 1)
    # A(s) from the self-consistency A = (s+L)/(s+Lr) [1 + L r A G(s; level)]
    amplitude = (s + lam_reset) / (s + lam_reset * rho * h_level)
    surv_plus_origin = amplitude * g_level
    if direction is Direction.MINUS:
        return (1.0 + lam_reset * rho * surv_plus_origin) / (s + lam_reset * rho)
    if x == level:
        return amplitude * _kernel_at_boundary(p, s)
    g_x = g_level if x == 0 else inverse(level - x, 0)
    return amplitude * g_x


def survival_from_laplace(
    phat: Callable,
    t: float,
    cfg: InversionConfig | None = None,
    ballistic_time: float | None = None,
    no_event_rate: float = 0.0,
    weight: float = 1.0,
) -> float:
    """Invert a survival transform, removing a known jump discontinuity first.

    When a rightward start can cross ballistically at ``ballistic_time`` (no
    event before then), the survival curve drops by ``weight *
    exp(-no_event_rate * ballistic_time)`` at that instant. That term is
    inverted exactly and only the continuous remainder goes through the
    Bromwich sum.
    """
    cfg = cfg or EULER
    if ballistic_time is None or not math.isfinite(ballistic_time):
        return laplace_invert(phat, t, cfg)
    kappa, tau = no_event_rate, ballistic_time

    def remainder(s):
        return phat(s) - weight * (1.0 - np.exp(-(s + kappa) * tau)) / (s + kappa)

    direct = weight * math.exp(-kappa * t) if t < tau else 0.0
    return direct + laplace_invert(remainder, t, cfg)


def _clamp(value: float, what: str) -> float:
    if value < -1e-4 or value > 1 + 1e-4:
        log.warning("%s = %.6g outside [0, 1] beyond tolerance; clamping", what, value)
    return min(1.0, max(0.0, value))


def survival_general(
    p: ModelParams,
    level: float,
    x: float,
    direction: Direction | str,
    t: float,
    cfg: InversionConfig | None = None,
) -> float:
    """Survival probability up to time ``t`` from ``(x, direction)`` by double inversion."""
    direction = _check_level(level, x, direction)
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    cfg = cfg or EULER
    if cfg.method != "euler":
        raise ValueError("survival inversion needs the euler method (delay terms defeat the others)")
    if direction is Direction.PLUS and x == level and p.speed_plus > 0:
        return 0.0
    tau = None
    if direction is Direction.PLUS and p.speed_plus > 0:
        tau = (level - x) / p.speed_plus
    value = survival_from_laplace(
        lambda s: survival_laplace_general(p, level, s, x, direction, cfg),
        t, cfg, ballistic_time=tau, no_event_rate=_interrupt_rate(p),
    )
    return _clamp(value, f"survival(t={t})")


def _interrupt_rate(p: ModelParams) -> float:
    # zero-size jumps do not interrupt a ballistic run to the level
    return p.reset_rate + (p.jump_rate_plus if p.jump_law_plus.mean() > 0 else 0.0)


def survival_closed_form(
    p: ModelParams,
    level: float,
    t: float,
    x: float = 0.0,
    direction: Direction | str = Direction.PLUS,
    cfg: InversionConfig | None = None,
) -> float:
    """Survival probability by single inversion of the closed-form transforms."""
    from .analytic import sp_laplace_closed_form

    direction = _check_level(level, x, direction)
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    cfg = cfg or EULER
    tau = None
    if direction is Direction.PLUS and p.speed_plus > 0:
        if x == level:
            return 0.0
        tau = (level - x) / p.speed_plus
    value = survival_from_laplace(
        lambda s: sp_laplace_closed_form(p, level, s, x, direction),
        t, cfg, ballistic_time=tau, no_event_rate=_interrupt_rate(p),
    )
    return _clamp(value, f"survival(t={t})")


def survival_closed_form_unconditional(p: ModelParams, level: float, t: float, cfg: InversionConfig | None = None) -> float:
    rho = p.direction_prob
    total = 0.0
    if rho > 0:
        total += rho * survival_closed_form(p, level, t, 0.0, Direction.PLUS, cfg)
    if rho < 1:
        total += (1 - rho) * survival_closed_form(p, level, t, 0.0, Direction.MINUS, cfg)
    return total


def survival_general_unconditional(p: ModelParams, level: float, t: float, cfg: InversionConfig | None = None) -> float:
    """Survival from the origin with the initial direction drawn with probability ``rho``."""
    rho = p.direction_prob
    total = 0.0
    if rho > 0:
        total += rho * survival_general(p, level, 0.0, Direction.PLUS, t, cfg)
    if rho < 1:
        total += (1 - rho) * survival_general(p, level, 0.0, Direction.MINUS, t, cfg)
    return total


# ---------------------------------------------------------------------------
# characteristic function in time


def char_function_t(
    p: ModelParams,
    omega: float,
    t: float,
    x0: float = 0.0,
    direction: Direction | str = Direction.PLUS,
    cfg: InversionConfig | None = None,
) -> complex:
    """``E[exp(i omega X(t))]`` from ``(x0, direction)``, inverting the Fourier-Laplace propagator."""
    from .analytic import propagator_fl, propagator_poles

    direction = Direction.parse(direction)
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    fhat = lambda s: propagator_fl(p, omega, s, x0, direction)  # noqa: E731
    return _invert_rational(fhat, propagator_poles(p, omega), t, cfg)


def char_function_t_unconditional(p: ModelParams, omega: float, t: float, cfg: InversionConfig | None = None) -> complex:
    from .analytic import propagator_fl_unconditional, propagator_poles

    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    fhat = lambda s: propagator_fl_unconditional(p, omega, s)  # noqa: E731
    return _invert_rational(fhat, propagator_poles(p, omega), t, cfg)


def _invert_rational(fhat, poles, t, cfg):
    cfg = cfg or TALBOT
    if cfg.method != "talbot":
        return laplace_invert(fhat, t, cfg, complex_valued=True)
    # more nodes enlarge the contour, but exp(2*nodes/5) roundoff caps it near 40
    for nodes in (cfg.nodes, 36, 40):
        if nodes >= cfg.nodes and talbot_encloses(poles, t, nodes):
            return _talbot(fhat, t, nodes, True)
    # poles too far off the real axis for the Talbot contour; fall back to a Bromwich line
    extra = int(math.ceil(t * max(abs(np.imag(poles))) / math.pi))
    return _euler(fhat, t, EULER, True, extra_terms=extra)
