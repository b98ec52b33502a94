"""Gaussian optical circuits with conditional photodetection.

Circuits are lowered to a squeezed vacuum ``exp(+(a^dag, B a^dag)/2)|0>``;
detection outcomes become multi-dimensional Hermite polynomials in the
undetected modes. A truncated Fock-space oracle cross-checks every step.
"""

from .circfile import CircuitFileError, load_circuit, parse_circuit, serialize_circuit
from .circuit import (
    CircuitError,
    CircuitSpec,
    GaussianVacuumState,
    ModeLabel,
    PrecisionError,
    build_circuit,
    lower_circuit,
    make_component,
    takagi,
)
from .detection import DetectionEvent, DetectorModel, attach_loss, condition, condition_superposed
from .mdhp import gaussian_diff, hermite_at_zero, hermite_table
from .polycore import SparsePoly

__version__ = "0.1.0"

__all__ = [
    "CircuitError",
    "CircuitFileError",
    "CircuitSpec",
    "DetectionEvent",
    "DetectorModel",
    "GaussianVacuumState",
    "ModeLabel",
    "PrecisionError",
    "SparsePoly",
    "attach_loss",
    "build_circuit",
    "condition",
    "condition_superposed",
    "gaussian_diff",
    "hermite_at_zero",
    "hermite_table",
    "load_circuit",
    "lower_circuit",
    "make_component",
    "parse_circuit",
    "serialize_circuit",
    "takagi",
]
