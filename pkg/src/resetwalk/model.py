"""Process parameters and jump-size laws for the alternating reset walk.

The walker starts at the origin. After every reset (Poissonian, rate
``reset_rate``) it is relocated to 0 and picks a direction: rightwards with
probability ``direction_prob``, leftwards otherwise. While moving in a given
direction it drifts at a constant speed and performs positive-size jumps at
the direction's Poisson rate, always in the direction of motion.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np


class Direction(enum.Enum):
    PLUS = 1
    MINUS = -1

    @property
    def sign(self) -> int:
        return self.value

    @classmethod
    def parse(cls, value: "Direction | str | int") -> "Direction":
        if isinstance(value, Direction):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("+", "plus", "right", "+1"):
                return cls.PLUS
            if key in ("-", "minus", "left", "-1"):
                return cls.MINUS
        elif value in (1, -1):
            return cls(value)
        raise ValueError(f"unknown direction {value!r}")


class ParameterError(ValueError):
    """Raised when a parameter set violates the model invariants."""


class JumpLaw:
    """A jump-size distribution supported on ``[0, inf)``.

    Subclasses provide sampling, the mean, and the one-sided Laplace transform
    ``laplace(r) = E[exp(-r J)]``, which must accept complex ``r`` with
    ``Re(r) >= 0`` (and wherever the analytic continuation is defined). The
    Fourier transform is derived from it.
    """

    kind: str = "abstract"

    @property
    def atomic(self) -> bool:
        """True if the law puts positive mass on a nonzero size.

        Such laws make first-passage kernels discontinuous in space, and
        their transforms blow up in the left half-plane.
        """
        return False

    def sample(self, rng: np.random.Generator, size: int | None = None):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def laplace(self, r):
        raise NotImplementedError

    def fourier(self, omega, direction: Direction = Direction.PLUS):
        """``E[exp(+-i omega J)]``, the sign following ``direction``."""
        sign = Direction.parse(direction).sign
        return self.laplace(-1j * sign * np.asarray(omega, dtype=complex))

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ExponentialJumps(JumpLaw):
    """Exponential jump sizes with rate ``gamma`` (mean ``1/gamma``)."""

    gamma: float
    kind: str = field(default="exp", init=False, repr=False)

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ParameterError(f"exponential jump rate must be positive, got {self.gamma}")

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.gamma, size)

    def mean(self):
        return 1.0 / self.gamma

    def laplace(self, r):
        return self.gamma / (self.gamma + r)

    def to_dict(self):
        return {"kind": "exp", "gamma": self.gamma}


@dataclass(frozen=True)
class DeterministicJumps(JumpLaw):
    """Every jump has the same size ``size``."""

    size: float
    kind: str = field(default="fixed", init=False, repr=False)

    def __post_init__(self):
        if not (self.size >= 0 and math.isfinite(self.size)):
            raise ParameterError(f"deterministic jump size must be >= 0, got {self.size}")

    @property
    def atomic(self) -> bool:
        return self.size > 0

    def sample(self, rng, size=None):
        if size is None:
            return float(self.size)
        return np.full(size, float(self.size))

    def mean(self):
        return float(self.size)

    def laplace(self, r):
        return np.exp(-self.size * np.asarray(r))

    def to_dict(self):
        return {"kind": "fixed", "size": self.size}


@dataclass(frozen=True)
class ZeroJumps(JumpLaw):
    """Jumps of size exactly zero; jump events happen but never displace."""

    kind: str = field(default="zero", init=False, repr=False)

    def sample(self, rng, size=None):
        if size is None:
            return 0.0
        return np.zeros(size)

    def mean(self):
        return 0.0

    def laplace(self, r):
        r = np.asarray(r)
        return np.ones(r.shape, dtype=np.result_type(r, float))[()]

    def to_dict(self):
        return {"kind": "zero"}


def jump_law_from_dict(spec: dict) -> JumpLaw:
    """Build a law from ``{"kind": "exp", "gamma": 2.0}``-style mappings."""
    spec = dict(spec)
    kind = str(spec.pop("kind", "")).lower()
    try:
        if kind in ("exp", "exponential"):
            law = ExponentialJumps(float(spec.pop("gamma")))
        elif kind in ("fixed", "deterministic", "delta"):
            law = DeterministicJumps(float(spec.pop("size")))
        elif kind in ("zero", "none"):
            law = ZeroJumps()
        else:
            raise ParameterError(f"unknown jump law kind {kind!r} (expected exp, fixed or zero)")
    except KeyError as exc:
        raise ParameterError(f"jump law {kind!r} is missing parameter {exc.args[0]!r}") from None
    if spec:
        raise ParameterError(f"unexpected jump law fields: {sorted(spec)}")
    return law


def jump_laplace(law: JumpLaw, r):
    return law.laplace(r)


def jump_fourier(law: JumpLaw, omega, direction: Direction = Direction.PLUS):
    return law.fourier(omega, direction)


def jump_sample(law: JumpLaw, rng: np.random.Generator, size: int | None = None):
    return law.sample(rng, size)


def jump_mean(law: JumpLaw) -> float:
    return law.mean()


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the alternating reset walk.

    Speeds are moduli: the leftward phase moves at ``-speed_minus``.
    """

    reset_rate: float
    direction_prob: float
    speed_plus: float = 0.0
    speed_minus: float = 0.0
    jump_rate_plus: float = 0.0
    jump_rate_minus: float = 0.0
    jump_law_plus: JumpLaw = field(default_factory=ZeroJumps)
    jump_law_minus: JumpLaw = field(default_factory=ZeroJumps)

    def speed(self, direction: Direction) -> float:
        return self.speed_plus if direction is Direction.PLUS else self.speed_minus

    def jump_rate(self, direction: Direction) -> float:
        return self.jump_rate_plus if direction is Direction.PLUS else self.jump_rate_minus

    def jump_law(self, direction: Direction) -> JumpLaw:
        return self.jump_law_plus if direction is Direction.PLUS else self.jump_law_minus

    def moves(self, direction: Direction) -> bool:
        """True if the walker can leave the origin while in ``direction``."""
        return self.speed(direction) > 0 or (self.jump_rate(direction) > 0 and self.jump_law(direction).mean() > 0)

    def with_reset_rate(self, reset_rate: float) -> "ModelParams":
        return replace(self, reset_rate=reset_rate)

    def with_direction_prob(self, direction_prob: float) -> "ModelParams":
        return replace(self, direction_prob=direction_prob)

    def to_dict(self) -> dict:
        return {
            "reset_rate": self.reset_rate,
            "direction_prob": self.direction_prob,
            "speed_plus": self.speed_plus,
            "speed_minus": self.speed_minus,
            "jump_rate_plus": self.jump_rate_plus,
            "jump_rate_minus": self.jump_rate_minus,
            "jump_law_plus": self.jump_law_plus.to_dict(),
            "jump_law_minus": self.jump_law_minus.to_dict(),
        }


def validate_params(p: ModelParams) -> ModelParams:
    """Return ``p`` unchanged if it describes a well-posed process.

    A direction that can be selected after a reset must be able to move:
    either a positive speed or a positive jump rate.
    """
    for name in ("reset_rate", "speed_plus", "speed_minus", "jump_rate_plus", "jump_rate_minus"):
        value = getattr(p, name)
        if not isinstance(value, (int, float)) or math.isnan(value) or value < 0 or math.isinf(value):
            raise ParameterError(f"{name} must be a finite nonnegative number, got {value!r}")
    if not (0.0 <= p.direction_prob <= 1.0):
        raise ParameterError(f"direction probability out of range [0, 1]: {p.direction_prob!r}")
    for name in ("jump_law_plus", "jump_law_minus"):
        if not isinstance(getattr(p, name), JumpLaw):
            raise ParameterError(f"{name} must be a JumpLaw")
    if p.direction_prob > 0 and p.speed_plus == 0 and p.jump_rate_plus == 0:
        raise ParameterError("frozen + direction reachable: speed_plus and jump_rate_plus are both zero")
    if p.direction_prob < 1 and p.speed_minus == 0 and p.jump_rate_minus == 0:
        raise ParameterError("frozen - direction reachable: speed_minus and jump_rate_minus are both zero")
    return p


def params_from_dict(data: dict) -> ModelParams:
    """Build validated params from a flat mapping (as read from a config file)."""
    kwargs = {}
    for key in ("reset_rate", "direction_prob", "speed_plus", "speed_minus", "jump_rate_plus", "jump_rate_minus"):
        if key in data:
            kwargs[key] = float(data[key])
    for key in ("jump_law_plus", "jump_law_minus"):
        if key in data:
            kwargs[key] = jump_law_from_dict(data[key])
    missing = {"reset_rate", "direction_prob"} - kwargs.keys()
    if missing:
        raise ParameterError(f"missing required parameter(s): {', '.join(sorted(missing))}")
    return validate_params(ModelParams(**kwargs))
