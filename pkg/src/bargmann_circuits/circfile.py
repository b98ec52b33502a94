"""CIRC-JSON circuit files: parsing with collected validation errors, and serialization.

Layout::

    {
      "modes": [{"name": "a", "pol": "x"}, ...],
      "components": [{"kind": "beam_splitter", "modes": ["b", "c"], "params": {"theta": 0.785}}],
      "detect": {"signature": {"a_x": 1}}                       # or
      "detect": {"operators": [{"sign": 1, "orders": {"a_x": 1}}],
                 "detectors": {"efficiency": {"a_x": 0.8},
                               "confusion": {"a_x": {"1": 0.7, "2": 0.3}}}},
      "options": {"cutoff": 8}
    }

Complex numbers are ``{"re": ..., "im": ...}`` objects (plain numbers are
accepted on input); angles are in radians. A confusion entry gives
``p(n | k)`` over true counts ``n`` for the count ``k`` in the signature.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .circuit import (
    ACTIVE_KINDS,
    PASSIVE_KINDS,
    POLARIZATIONS,
    CircuitSpec,
    ModeLabel,
    make_component,
)
from .detection import DARK_COUNT_MESSAGE, DetectBlock, DetectionEvent

FLOAT_DIGITS = 12
COMPLEX_PARAMS = ("strength",)
MATRIX_PARAMS = ("R", "matrix")
REAL_PARAMS = ("theta", "phi")
OPTION_KEYS = ("cutoff", "loss_cutoff", "tolerance", "emit", "guard")
MAX_CUTOFF = 12


class CircuitFileError(ValueError):
    """One or more problems found while reading a circuit file."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


def _complex(value, where: str, errors: list[str]) -> complex | None:
    if isinstance(value, bool):
        errors.append(f"{where}: expected a number")
        return None
    if isinstance(value, (int, float)):
        z = complex(value)
    elif isinstance(value, dict) and set(value) <= {"re", "im"}:
        try:
            z = complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
        except (TypeError, ValueError):
            errors.append(f"{where}: re/im must be numbers")
            return None
    else:
        errors.append(f"{where}: expected a number or {{\"re\", \"im\"}} object")
        return None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        errors.append(f"{where}: non-finite value")
        return None
    return z


def _real(value, where: str, errors: list[str]) -> float | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        errors.append(f"{where}: expected a finite real number")
        return None
    return float(value)


def _matrix(value, where: str, errors: list[str]):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        errors.append(f"{where}: expected a non-empty list of rows")
        return None
    n = len(value)
    if any(len(r) != n for r in value):
        errors.append(f"{where}: matrix must be square")
        return None
    out = []
    for i, row in enumerate(value):
        out.append([_complex(v, f"{where}[{i}][{j}]", errors) for j, v in enumerate(row)])
    if any(v is None for r in out for v in r):
        return None
    return out


def _load_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFileError([f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None


def parse_matrix(text: str) -> np.ndarray:
    """Read a matrix document: ``{"matrix": [[...]]}`` or a bare list of rows."""
    doc = _load_json(text)
    if isinstance(doc, dict):
        if "matrix" not in doc:
            raise CircuitFileError(["matrix: missing 'matrix' key"])
        doc = doc["matrix"]
    errors: list[str] = []
    M = _matrix(doc, "matrix", errors)
    if errors:
        raise CircuitFileError(errors)
    return np.array(M, dtype=complex)


def parse_circuit(text: str) -> CircuitSpec:
    """Parse and validate a CIRC-JSON document, reporting every problem at once."""
    doc = _load_json(text)
    errors: list[str] = []
    if not isinstance(doc, dict):
        raise CircuitFileError(["document: expected a JSON object"])
    unknown = set(doc) - {"modes", "components", "detect", "options", "traced"}
    for key in sorted(unknown):
        errors.append(f"{key}: unknown top-level key")

    modes = []
    raw_modes = doc.get("modes")
    if not isinstance(raw_modes, list) or not raw_modes:
        errors.append("modes: expected a non-empty list")
        raw_modes = []
    for k, m in enumerate(raw_modes):
        where = f"modes[{k}]"
        if not isinstance(m, dict) or not isinstance(m.get("name"), str) or not m.get("name"):
            errors.append(f"{where}: expected {{\"name\": str, \"pol\": ...}}")
            continue
        pol = m.get("pol", "none")
        if pol not in POLARIZATIONS:
            errors.append(f"{where}.pol: must be one of {list(POLARIZATIONS)}, got {pol!r}")
            continue
        modes.append(ModeLabel(m["name"], pol))
    labels = [m.name for m in modes]
    seen = set()
    for l in labels:
        if l in seen:
            errors.append(f"modes: duplicate label {l!r}")
        seen.add(l)
    spatial = {m.spatial for m in modes if m.pol != "none"}

    def known(ref: str) -> bool:
        return ref in labels or ref in spatial

    components = []
    raw_comps = doc.get("components", [])
    if not isinstance(raw_comps, list):
        errors.append("components: expected a list")
        raw_comps = []
    for k, c in enumerate(raw_comps):
        where = f"components[{k}]"
        if not isinstance(c, dict):
            errors.append(f"{where}: expected an object")
            continue
        kind = c.get("kind")
        if kind not in PASSIVE_KINDS + ACTIVE_KINDS:
            errors.append(f"{where}.kind: unknown component kind {kind!r}")
            continue
        refs = c.get("modes")
        if not isinstance(refs, list) or not refs or not all(isinstance(r, str) for r in refs):
            errors.append(f"{where}.modes: expected a non-empty list of mode names")
            continue
        bad = [r for r in refs if not known(r)]
        for j, r in enumerate(refs):
            if r in bad:
                errors.append(f"{where}.modes[{j}]: undeclared mode {r!r}")
        params_in = c.get("params", {})
        if not isinstance(params_in, dict):
            errors.append(f"{where}.params: expected an object")
            continue
        params = {}
        n_err = len(errors)
        for key, value in params_in.items():
            pw = f"{where}.params.{key}"
            if key in COMPLEX_PARAMS:
                params[key] = _complex(value, pw, errors)
            elif key in REAL_PARAMS:
                params[key] = _real(value, pw, errors)
            elif key in MATRIX_PARAMS:
                params[key] = _matrix(value, pw, errors)
            else:
                errors.append(f"{pw}: unknown parameter")
        if kind in ACTIVE_KINDS and "strength" not in params:
            errors.append(f"{where}.params.strength: required for {kind}")
        if kind == "polarization_rotation" and "theta" not in params:
            errors.append(f"{where}.params.theta: required for polarization_rotation")
        if kind == "phase_shift" and "phi" not in params:
            errors.append(f"{where}.params.phi: required for phase_shift")
        if kind == "custom_unitary" and "matrix" not in params:
            errors.append(f"{where}.params.matrix: required for custom_unitary")
        if kind == "active" and "R" not in params:
            errors.append(f"{where}.params.R: required for active")
        if bad or len(errors) > n_err:
            continue
        components.append(make_component(kind, refs, params))

    traced = doc.get("traced", [])
    if not isinstance(traced, list) or not all(isinstance(t, str) for t in traced):
        errors.append("traced: expected a list of mode labels")
        traced = []
    for j, t in enumerate(traced):
        if t not in labels:
            errors.append(f"traced[{j}]: undeclared mode {t!r}")

    options = _parse_options(doc.get("options", {}), errors)
    detect = None
    if "detect" in doc:
        detect = _parse_detect(doc["detect"], labels, errors)
        if detect is not None:
            hidden = set(detect.event.detected) | set(traced)
            if not set(labels) - hidden:
                errors.append("detect: at least one mode must stay undetected")
            if set(detect.event.detected) & set(traced):
                errors.append("detect: a traced mode cannot also be detected")

    if errors:
        raise CircuitFileError(errors)
    spec = CircuitSpec(tuple(modes), tuple(components), detect, options, tuple(traced))
    problems = spec.validate()
    if problems:
        raise CircuitFileError(problems)
    return spec


def _parse_options(raw, errors: list[str]) -> dict:
    if not isinstance(raw, dict):
        errors.append("options: expected an object")
        return {}
    out = {}
    for key, value in raw.items():
        where = f"options.{key}"
        if key not in OPTION_KEYS:
            errors.append(f"{where}: unknown option")
        elif key in ("cutoff", "loss_cutoff", "guard"):
            if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= MAX_CUTOFF:
                errors.append(f"{where}: expected an integer in 0..{MAX_CUTOFF}")
            else:
                out[key] = value
        elif key == "tolerance":
            v = _real(value, where, errors)
            if v is not None and not 0 < v < 1:
                errors.append(f"{where}: must lie in (0, 1)")
            elif v is not None:
                out[key] = v
        elif key == "emit":
            if value not in ("text", "json"):
                errors.append(f"{where}: must be 'text' or 'json'")
            else:
                out[key] = value
    return out


def _counts(raw, where: str, labels, errors) -> dict | None:
    if not isinstance(raw, dict) or not raw:
        errors.append(f"{where}: expected a non-empty object of mode -> count")
        return None
    out = {}
    for label, c in raw.items():
        if label not in labels:
            errors.append(f"{where}.{label}: undeclared mode {label!r}")
        elif isinstance(c, bool) or not isinstance(c, int) or c < 0:
            errors.append(f"{where}.{label}: photon count must be a non-negative integer")
        else:
            out[label] = c
    return out


def _parse_detect(raw, labels, errors) -> DetectBlock | None:
    if not isinstance(raw, dict):
        errors.append("detect: expected an object")
        return None
    unknown = set(raw) - {"signature", "operators", "detectors"}
    for key in sorted(unknown):
        errors.append(f"detect.{key}: unknown key")
    if ("signature" in raw) == ("operators" in raw):
        errors.append("detect: give exactly one of 'signature' or 'operators'")
        return None
    n_err = len(errors)
    if "signature" in raw:
        sig = _counts(raw["signature"], "detect.signature", labels, errors)
        event = DetectionEvent(sig) if sig is not None else None
    else:
        ops = raw["operators"]
        parsed = []
        if not isinstance(ops, list) or not ops:
            errors.append("detect.operators: expected a non-empty list")
            ops = []
        for k, op in enumerate(ops):
            where = f"detect.operators[{k}]"
            if not isinstance(op, dict):
                errors.append(f"{where}: expected an object")
                continue
            sign = _complex(op.get("sign", 1), f"{where}.sign", errors)
            orders = _counts(op.get("orders"), f"{where}.orders", labels, errors)
            if sign is not None and orders is not None:
                parsed.append((sign, orders))
        event = DetectionEvent(detector_ops=tuple(parsed)) if parsed else None

    efficiency, confusion = {}, {}
    dets = raw.get("detectors", {})
    if not isinstance(dets, dict):
        errors.append("detect.detectors: expected an object")
        dets = {}
    for key in sorted(set(dets) - {"efficiency", "confusion"}):
        if key in ("dark_counts", "dark_count"):
            errors.append(f"detect.detectors.{key}: {DARK_COUNT_MESSAGE}")
        else:
            errors.append(f"detect.detectors.{key}: unknown key")
    for label, eta in dets.get("efficiency", {}).items():
        where = f"detect.detectors.efficiency.{label}"
        v = _real(eta, where, errors)
        if label not in labels:
            errors.append(f"{where}: undeclared mode {label!r}")
        elif v is not None and not 0.0 <= v <= 1.0:
            errors.append(f"{where}: efficiency must lie in [0, 1]")
        elif v is not None:
            efficiency[label] = v
    for label, row in dets.get("confusion", {}).items():
        where = f"detect.detectors.confusion.{label}"
        if label not in labels:
            errors.append(f"{where}: undeclared mode {label!r}")
            continue
        if "operators" in raw:
            errors.append(f"{where}: confusion rows need a plain signature")
            continue
        if not isinstance(row, dict) or not row:
            errors.append(f"{where}: expected an object of true count -> probability")
            continue
        parsed_row = {}
        for n, p in row.items():
            try:
                n_int = int(n)
            except ValueError:
                errors.append(f"{where}.{n}: true count must be an integer")
                continue
            v = _real(p, f"{where}.{n}", errors)
            if v is not None and v < 0:
                errors.append(f"{where}.{n}: probability must be non-negative")
            elif v is not None and n_int >= 0:
                parsed_row[n_int] = v
        if parsed_row and sum(parsed_row.values()) <= 0:
            errors.append(f"{where}: row is all zero")
        confusion[label] = parsed_row
    if event is None or len(errors) > n_err:
        return None
    if event.detector_ops is None:
        for label in confusion:
            if label not in event.signature:
                errors.append(f"detect.detectors.confusion.{label}: mode is not in the signature")
    return DetectBlock(event, efficiency, confusion)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _num(x: float) -> float | int:
    v = float(f"{float(x):.{FLOAT_DIGITS}g}")
    return 0.0 if v == 0 else v


def complex_json(z: complex) -> dict:
    z = complex(z)
    return {"re": _num(z.real), "im": _num(z.imag)}


def matrix_json(M) -> list:
    return [[complex_json(v) for v in row] for row in np.asarray(M)]


def _params_json(params) -> dict:
    out = {}
    for key, value in params.items():
        if key in COMPLEX_PARAMS:
            out[key] = complex_json(value)
        elif key in MATRIX_PARAMS:
            out[key] = matrix_json(value)
        else:
            out[key] = _num(value)
    return out


def to_document(spec: CircuitSpec) -> dict:
    doc: dict = {
        "modes": [{"name": m.spatial, "pol": m.pol} for m in spec.modes],
        "components": [
            {"kind": c.kind, "modes": list(c.modes), "params": _params_json(c.params)} for c in spec.components
        ],
    }
    if spec.detect is not None:
        ev = spec.detect.event
        if ev.detector_ops:
            det: dict = {
                "operators": [
                    {"sign": _num(c.real) if c.imag == 0 else complex_json(c), "orders": dict(sig)}
                    for c, sig in ev.operators()
                ]
            }
        else:
            det = {"signature": dict(ev.signature)}
        dets = {}
        if spec.detect.efficiency:
            dets["efficiency"] = {k: _num(v) for k, v in spec.detect.efficiency.items()}
        if spec.detect.confusion:
            dets["confusion"] = {
                k: {str(n): _num(p) for n, p in sorted(row.items())} for k, row in spec.detect.confusion.items()
            }
        if dets:
            det["detectors"] = dets
        doc["detect"] = det
    if spec.options:
        doc["options"] = {k: (_num(v) if isinstance(v, float) else v) for k, v in spec.options.items()}
    if spec.traced:
        doc["traced"] = list(spec.traced)
    return doc


def serialize_circuit(spec: CircuitSpec) -> str:
    return json.dumps(to_document(spec), indent=2, sort_keys=True) + "\n"


def load_circuit(path: str | Path) -> CircuitSpec:
    """Read a circuit file; a bare bundled name such as ``teleport`` is also accepted."""
    return parse_circuit(read_text(path))


def read_text(path: str | Path) -> str:
    p = Path(path)
    if p.exists():
        return p.read_text(encoding="utf-8")
    name = p.name if p.name.endswith(".circ.json") else f"{p.name}.circ.json"
    bundled = resources.files("bargmann_circuits") / "examples" / name
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise FileNotFoundError(f"no such circuit file: {path}")


def bundled_examples() -> list[str]:
    root = resources.files("bargmann_circuits") / "examples"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".circ.json"))
