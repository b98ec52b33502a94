"""Command line front end.

    bargmann-circuits simulate FILE [--verify] [--cutoff N] [--emit text|json]
    bargmann-circuits mdhp --matrix FILE --order 1,0,2 [--method M] [--check]
    bargmann-circuits verify FILE [--cutoff N]
    bargmann-circuits example teleport [--theta T] [--tau RE,IM]

Exit codes: 0 success, 1 usage error, 2 invalid circuit file, 3 a numerical
check exceeded its tolerance.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import fockoracle, mdhp
from .circfile import CircuitFileError, load_circuit, matrix_json, parse_matrix, read_text
from .circuit import CircuitError, CircuitSpec, Lowering, PrecisionError, lower_circuit
from .detection import (
    DetectionEvent,
    DetectorModel,
    OutputState,
    attach_loss,
    condition,
    mix_by_confusion,
    trace_out_ensemble,
)
from .polycore import _compositions, format_complex, grlex_key
from .teleport import teleport_spec, xi

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_CUTOFF = 8
DEFAULT_LOSS_CUTOFF = 4
DEFAULT_GUARD = 4
DEFAULT_TOLERANCE = 1e-6
BRIDGE_TOL = 1e-9
MIN_BRANCH_PROBABILITY = 1e-14
SUPPORT_TOL = 1e-12


def _g(x: float) -> str:
    x = float(x)
    return f"{0.0 if x == 0 else x:.12g}"


@dataclass
class Check:
    name: str
    value: float | None
    tolerance: float | None
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": None if self.value is None else float(f"{self.value:.12g}"),
            "tolerance": self.tolerance,
            "passed": self.passed,
            "note": self.note,
        }

    def line(self) -> str:
        status = "ok" if self.passed else "FAIL"
        if self.value is None:
            return f"  [{status}] {self.name}: {self.note}"
        tail = f" (tolerance {self.tolerance:g})" if self.tolerance is not None else ""
        note = f"  {self.note}" if self.note else ""
        return f"  [{status}] {self.name} = {self.value:.3e}{tail}{note}"


@dataclass
class Branch:
    event: DetectionEvent
    probability: float
    weight: float
    state: OutputState

    def to_dict(self) -> dict:
        labels = list(self.state.undetected_labels)
        return {
            "event": self.event.describe(),
            "probability": float(_g(self.probability)),
            "weight": float(_g(self.weight)),
            "modes": labels,
            "prefactor": self.state.local_prefactor().to_text(labels),
            "exponent": matrix_json(self.state.sign * np.asarray(self.state.exponent)),
        }


@dataclass
class RunReport:
    """Everything a run produced, in a deterministic order."""

    modes: list[str]
    lowering: Lowering
    branches: list[Branch] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict[str, Any]:
        low = self.lowering
        return {
            "modes": self.modes,
            "exponent": matrix_json(low.state.plus_form),
            "takagi_values": [float(_g(v)) for v in low.takagi_values],
            "norm_squared": float(_g(low.state.norm_squared())),
            "residuals": {
                "symplectic": float(f"{low.symplectic_residual:.3e}"),
                "asymmetry": float(f"{low.asymmetry:.3e}"),
                "takagi": float(f"{low.takagi_residual:.3e}"),
            },
            "branches": [b.to_dict() for b in self.branches],
            "checks": [c.to_dict() for c in self.checks],
            "notes": list(self.notes),
            "ok": self.ok,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        low = self.lowering
        out = [f"modes: {' '.join(self.modes)}", "lowered state exp(+(a^dag, B a^dag)/2)|0>, B ="]
        for row in low.state.plus_form:
            out.append("  " + "  ".join(format_complex(v) for v in row))
        out.append("takagi values: " + " ".join(_g(v) for v in low.takagi_values))
        out.append(f"norm squared: {_g(low.state.norm_squared())}")
        out.append(
            f"residuals: symplectic {low.symplectic_residual:.3e}, asymmetry {low.asymmetry:.3e}, "
            f"takagi {low.takagi_residual:.3e}"
        )
        for k, b in enumerate(self.branches, 1):
            labels = list(b.state.undetected_labels)
            out.append(f"branch {k}: {b.event.describe()}")
            out.append(f"  probability {_g(b.probability)}  weight {_g(b.weight)}")
            out.append(f"  prefactor over [{' '.join(labels)}]: {b.state.local_prefactor().to_text(labels)}")
        if self.checks:
            out.append("checks:")
            out.extend(c.line() for c in self.checks)
        out.extend(f"note: {n}" for n in self.notes)
        return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


def _option(spec: CircuitSpec, key: str, default):
    return spec.options.get(key, default) if spec.options else default


def _branches(spec: CircuitSpec, state, cutoff: int) -> list[Branch]:
    block = spec.detect
    lost = list(spec.traced)
    loss_cutoff = _option(spec, "loss_cutoff", DEFAULT_LOSS_CUTOFF)

    def pure(event: DetectionEvent) -> list[tuple[float, DetectionEvent, OutputState]]:
        if not lost:
            out = condition(state, event)
            return [(out.probability(cutoff), event, out)]
        ensemble = trace_out_ensemble(state, event, lost, loss_cutoff, cutoff)
        # trace_out_ensemble lists loss patterns in graded-lex order
        patterns = _loss_patterns(len(lost), loss_cutoff)
        return [(w, event.with_extra(dict(zip(lost, k))), out) for (w, out), k in zip(ensemble, patterns)]

    if not block.confusion:
        rows = pure(block.event)
        total = sum(w for w, _, _ in rows)
        return [Branch(ev, w, w / total if total > 0 else 0.0, out) for w, ev, out in rows]

    # imperfect number resolution: mix over true counts n with p(n | indicated)
    labels = sorted(block.confusion, key=spec.index)
    sig = dict(block.event.signature)
    if len(labels) == 1 and not lost:
        label = labels[0]
        row = block.confusion[label]
        width = max(max(row), sig[label]) + 1
        C = np.zeros((width, width))
        C[sig[label], list(row)] = list(row.values())
        model = DetectorModel(1.0, C)
        pure_states = {n: condition(state, DetectionEvent({**sig, label: n})) for n in row}
        mixed = mix_by_confusion(pure_states, model, sig[label])
        by_id = {id(s): n for n, s in pure_states.items()}
        out = []
        for w, s in mixed:
            ev = DetectionEvent({**sig, label: by_id[id(s)]})
            out.append(Branch(ev, s.probability(cutoff), w, s))
        return out
    combos = []
    for counts in itertools.product(*(sorted(block.confusion[l].items()) for l in labels)):
        p = math.prod(q for _, q in counts)
        if p > 1e-12:
            combos.append((p, {l: n for l, (n, _) in zip(labels, counts)}))
    norm = sum(p for p, _ in combos)
    out = []
    for p, true in combos:
        rows = pure(DetectionEvent({**sig, **true}))
        total = sum(w for w, _, _ in rows)
        for w, ev, s in rows:
            out.append(Branch(ev, w, (p / norm) * (w / total if total > 0 else 0.0), s))
    return out


def _loss_patterns(nlost: int, cutoff: int) -> list[tuple[int, ...]]:
    pats = []
    for d in range(cutoff + 1):
        pats.extend(sorted(_compositions(d, nlost), key=grlex_key))
    return pats


def _oracle_checks(spec: CircuitSpec, lowering: Lowering, branches, cutoff: int, tolerance: float) -> list[Check]:
    guard = _option(spec, "guard", DEFAULT_GUARD)
    checks = []
    try:
        evolved = fockoracle.evolve_truncated(spec, cutoff, guard)
    except fockoracle.OracleError as exc:
        return [Check("oracle evolution", None, None, False, str(exc))]
    series = fockoracle.gaussian_amplitudes(lowering.state, cutoff)
    dev = 1.0 - fockoracle.fidelity(evolved, series)
    checks.append(Check("lowered state vs direct evolution, 1-F", dev, tolerance, dev <= tolerance))
    for k, b in enumerate(branches, 1):
        det_total = max(sum(s.values()) for _, s in b.event.operators())
        if det_total > cutoff or b.probability < MIN_BRANCH_PROBABILITY:
            continue
        cond = fockoracle.project_amplitudes(evolved, b.event)
        mine = b.state.to_fock(cond.cutoff)
        prob = cond.norm_squared()
        if prob == 0 and mine.norm_squared() == 0:
            # the outcome carries more photons than the oracle keeps
            continue
        if prob == 0 or mine.norm_squared() == 0:
            checks.append(Check(f"branch {k} vs oracle", None, None, False, "support mismatch within the cutoff"))
            continue
        dev = 1.0 - fockoracle.fidelity(cond, mine)
        note = f"oracle probability {_g(prob)}"
        checks.append(Check(f"branch {k} conditional state vs oracle, 1-F", dev, tolerance, dev <= tolerance, note))
    return checks


def run_simulate(spec: CircuitSpec, verify: bool = False, cutoff: int | None = None) -> RunReport:
    """Lower ``spec``, condition on its detection block and optionally cross-check."""
    cutoff = _option(spec, "cutoff", DEFAULT_CUTOFF) if cutoff is None else cutoff
    tolerance = _option(spec, "tolerance", DEFAULT_TOLERANCE)
    work = spec
    if spec.detect is not None and spec.detect.efficiency:
        work = attach_loss(spec, spec.detect.efficiency)
    lowering = lower_circuit(work)
    report = RunReport(work.labels, lowering)
    if work.traced:
        report.notes.append(f"traced-out modes: {' '.join(work.traced)}")
    if work.detect is not None:
        report.branches = _branches(work, lowering.state, cutoff)
    if verify:
        report.checks.extend(_oracle_checks(work, lowering, report.branches, cutoff, tolerance))
    return report


def bridge_check(state, cutoff: int) -> Check:
    """Series amplitudes against ``(-1)^|n| H_n(0) / sqrt(n!)`` for all ``|n| <= cutoff``."""
    B = state.minus_form
    series = fockoracle.gaussian_amplitudes(B, cutoff)
    h = mdhp.hermite_at_zero(B, cutoff)
    worst = 0.0
    for n, hn in h.items():
        pred = (-1) ** sum(n) * hn / math.sqrt(math.prod(math.factorial(k) for k in n))
        worst = max(worst, abs(series[n] - pred))
    return Check("Fock amplitudes vs Hermite values at zero, max abs", worst, BRIDGE_TOL, worst <= BRIDGE_TOL)


def run_verify(spec: CircuitSpec, cutoff: int | None = None) -> RunReport:
    report = run_simulate(spec, verify=True, cutoff=cutoff)
    cutoff = _option(spec, "cutoff", DEFAULT_CUTOFF) if cutoff is None else cutoff
    state = report.lowering.state
    report.checks.insert(0, bridge_check(state, cutoff))
    closed = fockoracle.vacuum_norm_squared(state)
    series = fockoracle.gaussian_amplitudes(state, cutoff).norm_squared()
    report.notes.append(f"norm squared: closed form {_g(closed)}, series to cutoff {cutoff} {_g(series)}")
    return report


def teleport_checks(report: RunReport, theta: float, tau: complex) -> None:
    """Output shape and coefficients of the teleported polarization state."""
    branch = report.branches[0]
    labels = list(branch.state.undetected_labels)
    poly = branch.state.local_prefactor()
    cx = poly.coefficient((1, 0))
    cy = poly.coefficient((0, 1))
    inside = max(abs(cx), abs(cy))
    outside = max((abs(c) for e, c in poly.terms.items() if e not in ((1, 0), (0, 1))), default=0.0)
    rel = outside / inside if inside > 0 else math.inf
    report.checks.append(
        Check(f"output prefactor linear in {' '.join(labels)} only, relative residue", rel, SUPPORT_TOL, rel <= SUPPORT_TOL)
    )
    x2 = xi(tau) ** 2
    report.notes.append(f"output prefactor: ({format_complex(cx)}) {labels[0]} + ({format_complex(cy)}) {labels[1]}")
    report.notes.append(
        f"closed form -xi^2 (sin theta, cos theta) = ({format_complex(-x2 * math.sin(theta))}, "
        f"{format_complex(-x2 * math.cos(theta))})"
    )
    if cx != 0:
        ratio = cy / cx
        report.notes.append(
            f"ratio c_y/c_x = {format_complex(ratio)}; tan theta = {_g(math.tan(theta))}, cot theta = "
            f"{_g(1 / math.tan(theta)) if math.tan(theta) else 'inf'}"
        )
    # the input photon is cos(theta) x - sin(theta) y after the rotation of mode a
    vin = np.array([math.cos(theta), -math.sin(theta)])
    vout = np.array([cx, cy]) / math.hypot(abs(cx), abs(cy))
    direct = abs(np.vdot(vin, vout)) ** 2
    flipped = abs(np.vdot(np.array([vin[1], -vin[0]]), vout)) ** 2
    report.notes.append(
        f"overlap with input polarization {_g(direct)}; with input after i sigma_y {_g(flipped)}"
    )


def run_example_teleport(theta: float = 0.3, tau: complex = 0.1, cutoff: int = DEFAULT_CUTOFF) -> RunReport:
    spec = teleport_spec(theta, tau)
    report = run_simulate(spec, verify=True, cutoff=cutoff)
    teleport_checks(report, theta, complex(tau))
    return report


def run_mdhp(B: np.ndarray, order: Sequence[int], method: str = "recursion", check: bool = False) -> tuple[str, list[Check]]:
    B = np.asarray(B, dtype=complex)
    order = tuple(int(k) for k in order)
    labels = [f"x{i}" for i in range(B.shape[0])]
    n_full = order + (0,) * (B.shape[0] - len(order))
    total = sum(order)
    table = mdhp.hermite_table(B, total, method, nmodes=len(order))
    poly = table[order]
    text = f"H_{list(order)} = {poly.to_text(labels)}\n"
    checks = []
    if check:
        scale = max(1.0, max((abs(c) for c in poly.terms.values()), default=1.0))
        tol = BRIDGE_TOL * scale
        for other in mdhp.METHODS:
            if other == method:
                continue
            t2 = mdhp.hermite_table(B, total, other, nmodes=len(order))
            d = mdhp.max_table_difference(table, t2)
            checks.append(Check(f"{method} vs {other}, max coefficient gap", d, tol, d <= tol))
        direct = mdhp.gaussian_diff(B, n_full)
        d = poly.max_abs_diff(direct)
        checks.append(Check("table entry vs direct differentiation", d, tol, d <= tol))
        worst = 0.0
        for n in table.keys():
            for i in range(len(order)):
                worst = max(worst, mdhp.check_diff_recursion(table, n, i))
                if sum(n) < total:
                    worst = max(worst, mdhp.check_three_term_recursion(table, n, i))
        checks.append(Check("recursion residuals, max", worst, tol, worst <= tol))
        text += "checks:\n" + "\n".join(c.line() for c in checks) + "\n"
    return text, checks


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_order(text: str) -> tuple[int, ...]:
    try:
        order = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"order must be comma-separated integers, got {text!r}") from None
    if not order or any(k < 0 for k in order):
        raise argparse.ArgumentTypeError("orders must be non-negative")
    return order


def _parse_complex(text: str) -> complex:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]))
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"expected RE or RE,IM, got {text!r}")


def _cutoff(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cutoff must be an integer, got {text!r}") from None
    if not 0 <= v <= fockoracle.MAX_EVOLVE_CUTOFF:
        raise argparse.ArgumentTypeError(f"cutoff must lie in 0..{fockoracle.MAX_EVOLVE_CUTOFF}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bargmann-circuits", description="Gaussian optical circuits with conditional photodetection.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="lower a circuit file and condition on its detection block")
    s.add_argument("file")
    s.add_argument("--verify", action="store_true", help="cross-check against the truncated Fock oracle")
    s.add_argument("--cutoff", type=_cutoff)
    s.add_argument("--emit", choices=("text", "json"))

    m = sub.add_parser("mdhp", help="print one multi-dimensional Hermite polynomial")
    m.add_argument("--matrix", required=True, help="JSON file holding the symmetric matrix")
    m.add_argument("--order", required=True, type=_parse_order)
    m.add_argument("--method", choices=mdhp.METHODS, default="recursion")
    m.add_argument("--check", action="store_true", help="compare methods and recursion residuals")

    v = sub.add_parser("verify", help="run the oracle bridge checks on a circuit file")
    v.add_argument("file")
    v.add_argument("--cutoff", type=_cutoff)
    v.add_argument("--emit", choices=("text", "json"), default="text")

    e = sub.add_parser("example", help="run a built-in worked example")
    e.add_argument("name", choices=("teleport",))
    e.add_argument("--theta", type=float, default=0.3)
    e.add_argument("--tau", type=_parse_complex, default=complex(0.1))
    e.add_argument("--emit", choices=("text", "json"), default="text")
    return p


def _emit(report: RunReport, how: str) -> None:
    sys.stdout.write(report.to_json() if how == "json" else report.to_text())


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            spec = load_circuit(args.file)
            report = run_simulate(spec, args.verify, args.cutoff)
            _emit(report, args.emit or spec.options.get("emit", "text"))
            return EXIT_OK if report.ok else EXIT_NUMERIC
        if args.command == "verify":
            report = run_verify(load_circuit(args.file), args.cutoff)
            _emit(report, args.emit)
            return EXIT_OK if report.ok else EXIT_NUMERIC
        if args.command == "mdhp":
            B = parse_matrix(read_text(args.matrix))
            text, checks = run_mdhp(B, args.order, args.method, args.check)
            sys.stdout.write(text)
            return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC
        if args.command == "example":
            report = run_example_teleport(args.theta, args.tau)
            _emit(report, args.emit)
            return EXIT_OK if report.ok else EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PrecisionError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CircuitFileError as exc:
        for line in exc.errors:
            print(f"invalid circuit: {line}", file=sys.stderr)
        return EXIT_INVALID
    except CircuitError as exc:
        print(f"invalid circuit: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (fockoracle.OracleError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
