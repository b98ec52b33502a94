"""Polarization teleportation with two type-II down-converters.

Modes are ``a_x, a_y, b_x, b_y, c_x, c_y, d_x, d_y``. Each down-converter
pairs ``(a, b)`` and ``(c, d)``; mode ``a`` is rotated by ``theta``, ``b`` and
``c`` meet on a 50:50 beam splitter, ``a`` is read by a polarization-resolving
detector and ``b``, ``c`` by polarization-blind ones. A coincidence between
``b`` and ``c`` is the antisymmetric combination
``d_bx d_cy - d_by d_cx`` of derivatives.
"""

from __future__ import annotations

import math

import numpy as np

from .circuit import CircuitSpec, ModeLabel, make_component
from .detection import DetectBlock, DetectionEvent

LABELS = ("a_x", "a_y", "b_x", "b_y", "c_x", "c_y", "d_x", "d_y")
DETECTED = LABELS[:6]


def exponent_matrix(theta: float) -> np.ndarray:
    """The unitary symmetric ``A`` with ``B = xi A`` for the lowered state."""
    s, c = math.sin(theta), math.cos(theta)
    upper = {
        (0, 2): -s, (0, 3): c, (0, 4): -s, (0, 5): c,
        (1, 2): c, (1, 3): s, (1, 4): c, (1, 5): s,
        (2, 7): -1.0, (3, 6): -1.0, (4, 7): 1.0, (5, 6): 1.0,
    }
    A = np.zeros((8, 8))
    for (i, j), v in upper.items():
        A[i, j] = A[j, i] = v / math.sqrt(2)
    return A


def xi(tau: complex) -> complex:
    """Normal-ordered coupling ``tau tanh|tau| / |tau|``."""
    tau = complex(tau)
    if tau == 0:
        raise ValueError("coupling must be non-zero")
    return tau * math.tanh(abs(tau)) / abs(tau)


def detector_ops(hit: str = "a_x") -> tuple:
    """``d_hit (d_bx d_cy - d_by d_cx)`` with every other detected mode at zero."""
    base = {l: 0 for l in DETECTED}
    first = {**base, hit: 1, "b_x": 1, "c_y": 1}
    second = {**base, hit: 1, "b_y": 1, "c_x": 1}
    return ((1.0, first), (-1.0, second))


def teleport_spec(theta: float = 0.3, tau: complex = 0.1) -> CircuitSpec:
    modes = tuple(ModeLabel(s, p) for s in "abcd" for p in "xy")
    comps = (
        make_component("down_converter", ["a", "b"], {"strength": complex(tau)}),
        make_component("down_converter", ["c", "d"], {"strength": complex(tau)}),
        make_component("polarization_rotation", ["a"], {"theta": float(theta)}),
        # port order (c, b) with the standard splitter matrix matches the published A
        make_component("beam_splitter", ["c", "b"], {"theta": math.pi / 4}),
    )
    detect = DetectBlock(DetectionEvent(detector_ops=detector_ops()))
    return CircuitSpec(modes, comps, detect, {"cutoff": 8})
