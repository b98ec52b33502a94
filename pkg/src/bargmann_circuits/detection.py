"""Conditional photodetection on multi-mode squeezed vacua.

Detecting ``n`` photons on a subset of modes of ``exp(-(alpha, B alpha)/2)``
leaves the remaining modes in

    c_n (-1)^|n| H_n^B(alpha) exp(-(alpha, B alpha)/2)  at alpha_detected = 0,

with ``c_n = (n_1! ... n_M!)^(-1/2)``. Imperfect detectors are handled by
mixing: losses through a beam splitter into traced-out ancillas, and limited
photon-number resolution through a confusion matrix ``p(n|k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from . import fockoracle
from .circuit import CircuitError, CircuitSpec, GaussianVacuumState, ModeLabel, make_component
from .mdhp import gaussian_diff
from .polycore import SparsePoly, _compositions, grlex_key

DEFAULT_FOCK_CUTOFF = 8
TAIL_TOL = 1e-6
DARK_COUNT_MESSAGE = (
    "dark counts are not modelled: thermal noise is not a squeezed vacuum, and "
    "they can be neglected for detectors gated on a narrow time window"
)


@dataclass(frozen=True)
class DetectionEvent:
    """Photon counts on detected modes, or a signed superposition of them.

    When ``detector_ops`` is given it replaces ``signature``; every label
    appearing in any operator (including with count 0) counts as detected.
    """

    signature: Mapping[str, int] = field(default_factory=dict)
    detector_ops: tuple | None = None

    def __post_init__(self):
        for _, sig in self.operators():
            for label, c in sig.items():
                if int(c) != c or c < 0:
                    raise ValueError(f"invalid photon count {c!r} for {label!r}")

    def operators(self) -> list[tuple[complex, dict]]:
        if self.detector_ops:
            return [(complex(c), dict(sig)) for c, sig in self.detector_ops]
        return [(1.0 + 0j, dict(self.signature))]

    @property
    def detected(self) -> tuple[str, ...]:
        seen: dict = {}
        for _, sig in self.operators():
            for label in sig:
                seen.setdefault(label, None)
        return tuple(seen)

    def with_extra(self, extra: Mapping[str, int]) -> "DetectionEvent":
        """Same event with additional detected modes appended to every operator."""
        if self.detector_ops:
            ops = tuple((c, {**sig, **extra}) for c, sig in self.operators())
            return DetectionEvent(detector_ops=ops)
        return DetectionEvent({**self.signature, **extra})

    def describe(self) -> str:
        parts = []
        for c, sig in self.operators():
            body = ",".join(f"{l}={n}" for l, n in sig.items())
            parts.append(body if len(self.operators()) == 1 else f"({c.real:+g}{c.imag:+g}i)[{body}]")
        return " ".join(parts)


@dataclass(frozen=True)
class DetectorModel:
    """Efficiency ``eta`` and confusion rows ``p(n | k)`` (row k indicated, column n true)."""

    efficiency: float = 1.0
    confusion: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency {self.efficiency} outside [0, 1]")
        if self.confusion is not None:
            C = np.asarray(self.confusion, dtype=float)
            if C.ndim != 2 or np.any(C < 0) or not np.all(np.isfinite(C)):
                raise ValueError("confusion matrix must be a finite non-negative 2-D array")
            object.__setattr__(self, "confusion", C)

    @classmethod
    def binomial(cls, eta: float, max_count: int) -> "DetectorModel":
        """Rows ``p(n|k)`` proportional to ``C(n,k) eta^k (1-eta)^(n-k)`` (flat prior on n)."""
        C = np.zeros((max_count + 1, max_count + 1))
        for k in range(max_count + 1):
            for n in range(k, max_count + 1):
                C[k, n] = math.comb(n, k) * eta**k * (1 - eta) ** (n - k)
            if C[k].sum() > 0:
                C[k] /= C[k].sum()
        return cls(eta, C)

    def row(self, k: int) -> dict[int, float]:
        if self.confusion is None:
            return {k: 1.0}
        if k >= self.confusion.shape[0]:
            raise KeyError(f"no confusion row for indicated count {k}")
        return {n: float(p) for n, p in enumerate(self.confusion[k]) if p > 0}


@dataclass(frozen=True)
class DetectBlock:
    """The ``detect`` section of a circuit file."""

    event: DetectionEvent
    efficiency: Mapping[str, float] = field(default_factory=dict)
    confusion: Mapping[str, Mapping[int, float]] = field(default_factory=dict)


@dataclass(frozen=True)
class OutputState:
    """Unnormalized conditional state ``prefactor * exp(sign (alpha, exponent alpha)/2)``.

    ``prefactor`` is a polynomial over all the parent state's variables with
    no support on detected ones; ``exponent`` is the parent matrix restricted
    to the undetected modes. ``prior_norm_squared`` is the squared norm of the
    parent state, so Fock-expansion norms divided by it are probabilities.
    """

    prefactor: SparsePoly
    exponent: np.ndarray
    modes: tuple[str, ...]
    undetected: tuple[int, ...]
    sign: int = 1
    order_tag: str = "exact"
    prior_norm_squared: float = 1.0
    event: str = ""

    @property
    def undetected_labels(self) -> tuple[str, ...]:
        return tuple(self.modes[k] for k in self.undetected)

    def local_prefactor(self) -> SparsePoly:
        """The prefactor re-indexed over the undetected variables only."""
        u = self.undetected
        terms = {tuple(e[k] for k in u): c for e, c in self.prefactor.terms.items()}
        return SparsePoly(terms, len(u))

    def lowest_order(self) -> "OutputState":
        """Drop the Gaussian factor, keeping only the polynomial."""
        zero = np.zeros_like(self.exponent)
        return replace(self, exponent=zero, order_tag="lowest_order")

    def to_fock(self, cutoff: int = DEFAULT_FOCK_CUTOFF) -> fockoracle.TruncatedState:
        """Fock amplitudes on the undetected modes with total <= cutoff."""
        n = len(self.undetected)
        K = self.sign * np.asarray(self.exponent)
        quad = {}
        for i in range(n):
            for j in range(i, n):
                if K[i, j] != 0:
                    e = [0] * n
                    e[i] += 1
                    e[j] += 1
                    quad[tuple(e)] = K[i, j] * (0.5 if i == j else 1.0)
        Q = SparsePoly(quad, n)
        series = SparsePoly.constant(1.0, n)
        term = SparsePoly.constant(1.0, n)
        for k in range(1, cutoff // 2 + 1):
            term = (term * Q).truncate(cutoff).scale(1.0 / k)
            series = series + term
        f = (self.local_prefactor() * series).truncate(cutoff)
        amps = {e: c * math.sqrt(math.prod(math.factorial(x) for x in e)) for e, c in f.terms.items()}
        return fockoracle.TruncatedState(self.undetected_labels, cutoff, amps)

    def probability(self, cutoff: int = DEFAULT_FOCK_CUTOFF) -> float:
        return self.to_fock(cutoff).norm_squared() / self.prior_norm_squared

    def to_text(self) -> str:
        return self.prefactor.to_text(list(self.modes))


def _split_modes(state: GaussianVacuumState, detected: Sequence[str]) -> tuple[list[int], tuple[int, ...]]:
    det_idx = [state.index(l) for l in detected]
    undetected = tuple(k for k in range(state.nmodes) if k not in det_idx)
    if not undetected:
        raise CircuitError("all modes are detected; no output state remains")
    return det_idx, undetected


def _single_prefactor(state: GaussianVacuumState, signature: Mapping[str, int], det_idx) -> SparsePoly:
    n = [0] * state.nmodes
    for label, c in signature.items():
        n[state.index(label)] = int(c)
    total = sum(n)
    c_n = 1.0 / math.sqrt(math.prod(math.factorial(k) for k in n))
    H = gaussian_diff(state.minus_form, n)
    return H.restrict_zero(det_idx).scale(c_n * (-1) ** total)


def condition_superposed(state: GaussianVacuumState, ops, detected: Sequence[str] | None = None) -> OutputState:
    """Signed sum of single-signature conditionings sharing one exponent."""
    ops = [(complex(c), dict(sig)) for c, sig in ops]
    if not ops:
        raise ValueError("no detector operators given")
    union = list(dict.fromkeys(l for _, sig in ops for l in sig))
    if detected is None:
        detected = union
    else:
        stray = [l for l in union if l not in detected]
        if stray:
            raise CircuitError(f"operator touches undetected modes {stray}")
    det_idx, undetected = _split_modes(state, detected)
    prefactor = SparsePoly.zero(state.nmodes)
    for c, sig in ops:
        prefactor = prefactor + _single_prefactor(state, sig, det_idx).scale(c)
    exponent = state.B[np.ix_(undetected, undetected)]
    return OutputState(
        prefactor,
        exponent,
        state.modes,
        undetected,
        state.sign,
        "exact",
        state.norm_squared(),
        DetectionEvent(detector_ops=tuple(ops)).describe() if len(ops) > 1 else DetectionEvent(ops[0][1]).describe(),
    )


def condition(state: GaussianVacuumState, event: DetectionEvent | Mapping[str, int]) -> OutputState:
    """Conditional output state for a detection event."""
    if not isinstance(event, DetectionEvent):
        event = DetectionEvent(dict(event))
    for label in event.detected:
        state.index(label)
    return condition_superposed(state, event.operators(), event.detected)


def loss_label(label: str) -> str:
    return f"loss_{label}"


def attach_loss(spec: CircuitSpec, efficiencies: Mapping[str, float]) -> CircuitSpec:
    """Insert a beam splitter of power transmission ``eta`` before each listed detector.

    Each reflected port is a fresh vacuum ancilla named ``loss_<label>``,
    recorded in ``spec.traced``.
    """
    modes = list(spec.modes)
    comps = list(spec.components)
    traced = list(spec.traced)
    for label, eta in efficiencies.items():
        eta = float(eta)
        if not 0.0 <= eta <= 1.0:
            raise ValueError(f"efficiency {eta} for {label!r} outside [0, 1]")
        spec.index(label)
        anc = loss_label(label)
        if spec.has_label(anc):
            raise CircuitError(f"ancilla name {anc!r} already in use")
        modes.append(ModeLabel(anc))
        comps.append(make_component("beam_splitter", [label, anc], {"theta": math.acos(math.sqrt(eta))}))
        traced.append(anc)
    return CircuitSpec(tuple(modes), tuple(comps), spec.detect, dict(spec.options), tuple(traced))


def trace_out_ensemble(
    state: GaussianVacuumState,
    event: DetectionEvent,
    lost_modes: Sequence[str],
    cutoff: int,
    fock_cutoff: int = DEFAULT_FOCK_CUTOFF,
) -> list[tuple[float, OutputState]]:
    """Branches over photon numbers lost to ``lost_modes``, with joint probabilities.

    Each branch conditions on the event plus a loss pattern ``k`` with
    ``|k| <= cutoff``. Weights are probabilities of the joint outcome, taken
    from the Fock expansion of the branch; they sum to the probability of the
    event up to the truncation. Branches come back in graded-lex order of ``k``.
    """
    if not isinstance(event, DetectionEvent):
        event = DetectionEvent(dict(event))
    lost_modes = list(lost_modes)
    clash = set(lost_modes) & set(event.detected)
    if clash:
        raise CircuitError(f"modes {sorted(clash)} are both detected and lost")
    detected_total = max(sum(sig.values()) for _, sig in event.operators())
    if cutoff < detected_total:
        raise ValueError(f"cutoff {cutoff} below the detected photon number {detected_total}")
    patterns = []
    for d in range(cutoff + 1):
        patterns.extend(sorted(_compositions(d, len(lost_modes)), key=grlex_key))
    branches = []
    tail = 0.0
    for k in patterns:
        ev = event.with_extra(dict(zip(lost_modes, k)))
        out = condition(state, ev)
        w = out.probability(fock_cutoff)
        branches.append((w, out))
        if lost_modes and sum(k) == cutoff:
            tail += w
    if tail > TAIL_TOL:
        raise ValueError(f"loss cutoff {cutoff} too small: weight {tail:.3g} in the last shell")
    return branches


def mix_by_confusion(
    branches: Mapping[int, OutputState], model: DetectorModel, indicated: int
) -> list[tuple[float, OutputState]]:
    """Weight pure branches by ``p(n | indicated)``, renormalized to sum to one."""
    if not branches:
        raise ValueError("empty branch set")
    row = model.row(indicated)
    total = sum(row.values())
    if total <= 0:
        raise ValueError(f"confusion row {indicated} is all zero")
    missing = [n for n, p in row.items() if p > 1e-12 and n not in branches]
    if missing:
        raise KeyError(f"no branch for true counts {missing}")
    used = {n: p for n, p in row.items() if p > 1e-12}
    norm = sum(used.values())
    return [(p / norm, branches[n]) for n, p in sorted(used.items())]


def ensemble_density(ensemble, cutoff: int = DEFAULT_FOCK_CUTOFF) -> tuple[list, np.ndarray]:
    """Normalized density matrix of a weighted ensemble of output states."""
    ensemble = list(ensemble)
    nmodes = len(ensemble[0][1].undetected)
    basis = fockoracle.fock_basis(nmodes, cutoff)
    rho = fockoracle.density_matrix(((w, s.to_fock(cutoff)) for w, s in ensemble), basis)
    return basis, rho / np.trace(rho).real
