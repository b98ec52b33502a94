"""Brute-force truncated Fock-space reference.

Everything here works on explicit photon-number amplitudes and shares no code
with the Hermite-polynomial path: squeezed vacua are expanded as a power
series in creation operators, and circuits are evolved by exponentiating
their generators on a truncated basis. The cutoff is always on the *total*
photon number across modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply

from ._validation import DimensionError, as_symmetric
from .polycore import _compositions, grlex_key

MAX_SERIES_CUTOFF = 14
MAX_EVOLVE_CUTOFF = 12
MAX_BASIS = 2_000_000
MAX_NORM_DEFICIT = 1e-3


class OracleError(RuntimeError):
    pass


def fock_basis(nmodes: int, cutoff: int) -> list[tuple[int, ...]]:
    """All occupation vectors with total <= cutoff, graded-lex order (low degree first)."""
    out = []
    for d in range(cutoff + 1):
        out.extend(sorted(_compositions(d, nmodes), key=grlex_key))
    return out


@dataclass
class TruncatedState:
    """Amplitudes ``<n|psi>`` for occupation vectors with total <= ``cutoff``."""

    modes: tuple[str, ...]
    cutoff: int
    amplitudes: dict = field(default_factory=dict)

    def __post_init__(self):
        self.modes = tuple(self.modes)
        for n in self.amplitudes:
            if len(n) != len(self.modes) or sum(n) > self.cutoff:
                raise DimensionError(f"occupation {n} incompatible with modes/cutoff")

    def __getitem__(self, n) -> complex:
        return self.amplitudes.get(tuple(n), 0j)

    def norm_squared(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalized(self, norm_squared: float | None = None) -> "TruncatedState":
        ns = self.norm_squared() if norm_squared is None else norm_squared
        if ns <= 0:
            raise OracleError("zero-norm state")
        f = 1.0 / math.sqrt(ns)
        return TruncatedState(self.modes, self.cutoff, {k: v * f for k, v in self.amplitudes.items()})

    def truncated(self, cutoff: int) -> "TruncatedState":
        amps = {k: v for k, v in self.amplitudes.items() if sum(k) <= cutoff}
        return TruncatedState(self.modes, cutoff, amps)

    def vector(self, basis: Sequence[tuple[int, ...]]) -> np.ndarray:
        return np.array([self[n] for n in basis], dtype=complex)

    def photon_parities(self) -> set[int]:
        return {sum(n) % 2 for n, a in self.amplitudes.items() if abs(a) > 0}


# ---------------------------------------------------------------------------
# Gaussian series expansion
# ---------------------------------------------------------------------------


def gaussian_amplitudes(B, cutoff: int, modes: Sequence[str] | None = None) -> TruncatedState:
    """Amplitudes of ``exp(-(a^dag, B a^dag)/2)|0>``, unnormalized.

    ``B`` may also be a :class:`~bargmann_circuits.circuit.GaussianVacuumState`,
    in which case its own sign convention and mode labels are used.
    """
    if hasattr(B, "minus_form"):
        modes = B.modes if modes is None else modes
        B = B.minus_form
    B = as_symmetric(B)
    N = B.shape[0]
    modes = tuple(modes) if modes is not None else tuple(f"m{k}" for k in range(N))
    if cutoff > MAX_SERIES_CUTOFF:
        raise OracleError(f"cutoff {cutoff} above the series limit {MAX_SERIES_CUTOFF}")
    if B.size and np.linalg.norm(B, 2) >= 1.0:
        raise OracleError("B is not normalizable (largest singular value >= 1)")
    pairs = [(i, j, B[i, j] if i == j else 2 * B[i, j]) for i in range(N) for j in range(i, N) if B[i, j] != 0]
    zero = (0,) * N
    total = {zero: 1.0 + 0j}
    term = {zero: 1.0 + 0j}
    for k in range(1, cutoff // 2 + 1):
        nxt: dict = {}
        for n, amp in term.items():
            for i, j, b in pairs:
                m = list(n)
                m[i] += 1
                m[j] += 1
                if i == j:
                    f = math.sqrt((n[i] + 1) * (n[i] + 2))
                else:
                    f = math.sqrt((n[i] + 1) * (n[j] + 1))
                key = tuple(m)
                nxt[key] = nxt.get(key, 0j) + (-0.5 / k) * b * f * amp
        term = nxt
        for n, amp in term.items():
            total[n] = total.get(n, 0j) + amp
    return TruncatedState(modes, cutoff, {n: a for n, a in total.items() if a != 0})


def vacuum_norm_squared(B) -> float:
    """Closed form ``det(I - B B^*)^(-1/2)`` for the squeezed vacuum norm."""
    if hasattr(B, "minus_form"):
        B = B.minus_form
    B = np.asarray(B, dtype=complex)
    return float(1.0 / math.sqrt(np.linalg.det(np.eye(len(B)) - B @ B.conj()).real))


# ---------------------------------------------------------------------------
# Direct evolution
# ---------------------------------------------------------------------------


class _Ladder:
    """Sparse creation operators on a truncated basis."""

    def __init__(self, nmodes: int, cutoff: int):
        n_states = math.comb(cutoff + nmodes, nmodes)
        if n_states > MAX_BASIS:
            raise OracleError(f"basis of {n_states} states exceeds {MAX_BASIS}")
        self.basis = fock_basis(nmodes, cutoff)
        self.index = {n: k for k, n in enumerate(self.basis)}
        self.create = []
        for i in range(nmodes):
            rows, cols, vals = [], [], []
            for k, n in enumerate(self.basis):
                if sum(n) < cutoff:
                    m = n[:i] + (n[i] + 1,) + n[i + 1 :]
                    rows.append(self.index[m])
                    cols.append(k)
                    vals.append(math.sqrt(n[i] + 1))
            size = len(self.basis)
            self.create.append(sp.csr_matrix((vals, (rows, cols)), shape=(size, size), dtype=complex))

    def passive(self, h: np.ndarray) -> sp.csr_matrix:
        out = sp.csr_matrix(self.create[0].shape, dtype=complex)
        for j, k in zip(*np.nonzero(np.abs(h) > 1e-15)):
            out = out + h[j, k] * (self.create[j] @ self.create[k].conj().T)
        return out

    def active(self, R: np.ndarray, s: complex) -> sp.csr_matrix:
        X = sp.csr_matrix(self.create[0].shape, dtype=complex)
        for k, l in zip(*np.nonzero(R)):
            X = X + R[k, l] * (self.create[k] @ self.create[l])
        X = 0.5 * s * X
        return X - X.conj().T


def evolve_truncated(spec, cutoff: int, guard: int = 4, max_deficit: float = MAX_NORM_DEFICIT) -> TruncatedState:
    """Evolve the vacuum through ``spec`` component by component.

    The evolution runs on a basis of ``cutoff + guard`` photons so that the
    truncated generators do not distort the amplitudes that are returned;
    the result keeps only totals ``<= cutoff``. Raises when more than
    ``max_deficit`` of the norm lies above ``cutoff``.
    """
    if cutoff > MAX_EVOLVE_CUTOFF:
        raise OracleError(f"cutoff {cutoff} above the evolution limit {MAX_EVOLVE_CUTOFF}")
    from .circuit import PassiveComponent

    N = spec.nmodes
    ladder = _Ladder(N, cutoff + guard)
    psi = np.zeros(len(ladder.basis), dtype=complex)
    psi[0] = 1.0
    for comp in spec.components:
        if isinstance(comp, PassiveComponent):
            gen = ladder.passive(scipy.linalg.logm(comp.matrix(spec)))
        else:
            gen = ladder.active(comp.exponent(spec), comp.strength)
        if gen.nnz:
            psi = expm_multiply(gen, psi)
    amps = {n: psi[k] for k, n in enumerate(ladder.basis) if sum(n) <= cutoff and psi[k] != 0}
    state = TruncatedState(spec.labels, cutoff, amps)
    deficit = 1.0 - state.norm_squared()
    if deficit > max_deficit:
        raise OracleError(f"norm deficit {deficit:.3g} above {max_deficit}; raise the cutoff")
    return state


# ---------------------------------------------------------------------------
# Projection and comparison
# ---------------------------------------------------------------------------


def _operators(event) -> list[tuple[complex, dict]]:
    if hasattr(event, "operators"):
        return [(complex(c), dict(sig)) for c, sig in event.operators()]
    return [(1.0 + 0j, dict(event))]


def project_amplitudes(state: TruncatedState, event) -> TruncatedState:
    """Unnormalized ``sum_ops c <n_op| psi>`` on the undetected modes."""
    ops = _operators(event)
    detected = sorted({label for _, sig in ops for label in sig}, key=state.modes.index)
    for label in detected:
        if label not in state.modes:
            raise OracleError(f"unknown mode {label!r}")
    det_idx = [state.modes.index(l) for l in detected]
    keep = [k for k in range(len(state.modes)) if k not in det_idx]
    targets = [(c, tuple(sig.get(l, 0) for l in detected)) for c, sig in ops]
    det_min = min(sum(t) for _, t in targets)
    out: dict = {}
    for n, amp in state.amplitudes.items():
        seen = tuple(n[k] for k in det_idx)
        for c, t in targets:
            if seen == t:
                rest = tuple(n[k] for k in keep)
                out[rest] = out.get(rest, 0j) + c * amp
    modes = tuple(state.modes[k] for k in keep)
    return TruncatedState(modes, state.cutoff - det_min, {k: v for k, v in out.items() if v != 0})


def project_signature(state: TruncatedState, event) -> tuple[float, TruncatedState]:
    """Probability of ``event`` and the renormalized conditional state.

    ``event`` is a mapping label -> count, or an object with an
    ``operators()`` method listing ``(coefficient, signature)`` pairs for
    superposed detector responses.
    """
    cond = project_amplitudes(state, event)
    prob = cond.norm_squared()
    if prob <= 0:
        raise OracleError("event has zero probability; conditional state undefined")
    return prob, cond.normalized()


def signature_distribution(state: TruncatedState, fixed: Mapping[str, int], over: Sequence[str]) -> dict:
    """Joint probabilities ``P(fixed, k)`` for every occupation ``k`` of the ``over`` modes.

    Undetected modes are summed out, so this is the diagonal of the reduced
    density matrix of the ``over`` modes restricted to the ``fixed`` outcome.
    """
    fix_idx = {state.modes.index(l): c for l, c in fixed.items()}
    over_idx = [state.modes.index(l) for l in over]
    out: dict = {}
    for n, amp in state.amplitudes.items():
        if all(n[k] == c for k, c in fix_idx.items()):
            key = tuple(n[k] for k in over_idx)
            out[key] = out.get(key, 0.0) + abs(amp) ** 2
    return out


def fidelity(s1: TruncatedState, s2: TruncatedState) -> float:
    if tuple(s1.modes) != tuple(s2.modes):
        raise DimensionError(f"mode sets differ: {s1.modes} vs {s2.modes}")
    n1, n2 = s1.norm_squared(), s2.norm_squared()
    if n1 == 0 or n2 == 0:
        raise OracleError("zero-norm input")
    overlap = sum(np.conj(a) * s2[k] for k, a in s1.amplitudes.items())
    return float(abs(overlap) ** 2 / (n1 * n2))


def density_matrix(ensemble: Iterable[tuple[float, TruncatedState]], basis: Sequence[tuple[int, ...]]) -> np.ndarray:
    """``sum_w w |psi><psi| / <psi|psi>`` in the given basis."""
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for w, s in ensemble:
        v = s.vector(basis)
        rho += w * np.outer(v, v.conj()) / np.vdot(v, v).real
    return rho


def mixed_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``."""
    w, V = np.linalg.eigh(rho)
    root = V @ np.diag(np.sqrt(np.clip(w, 0, None))) @ V.conj().T
    inner = np.linalg.eigvalsh(root @ sigma @ root)
    return float(np.sum(np.sqrt(np.clip(inner, 0, None))) ** 2)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    return float(0.5 * np.abs(np.linalg.eigvalsh(rho - sigma)).sum())
