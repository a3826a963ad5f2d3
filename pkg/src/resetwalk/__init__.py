"""Alternating continuous-time random walks with Poissonian resets."""

from .model import (
    DeterministicJumps,
    Direction,
    ExponentialJumps,
    JumpLaw,
    ModelParams,
    ParameterError,
    ZeroJumps,
    validate_params,
)

__all__ = [
    "DeterministicJumps",
    "Direction",
    "ExponentialJumps",
    "JumpLaw",
    "ModelParams",
    "ParameterError",
    "ZeroJumps",
    "validate_params",
]

__version__ = "0.1.0"
