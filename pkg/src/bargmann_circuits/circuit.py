"""Optical circuits of passive elements and quadratic sources, lowered to a
multi-mode squeezed vacuum.

Conventions
-----------
* A passive element with matrix ``M`` sends ``a_i^dag -> sum_j M[j, i] a_j^dag``;
  in the Heisenberg picture ``a -> M a``.
* An active element with local matrix ``R`` and complex strength ``s`` is the
  unitary ``exp(s (a^dag, R a^dag)/2 - s* (a, R* a)/2)``.
* A Bogoliubov map ``(E, F)`` is the Heisenberg action ``a -> E a + F a^dag`` of
  the whole circuit. Maps compose by ordinary 2N x 2N products.
* The lowered state is ``exp(sign * (a^dag, B a^dag)/2)|0>``. The default
  ``sign=+1`` makes a real squeezer of strength ``r`` give ``B = tanh r``;
  ``sign=-1`` is the ``exp(-(a^dag, B a^dag)/2)`` form used by the Hermite
  and Fock-oracle code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Mapping, Sequence

import numpy as np
import scipy.linalg

from ._validation import DimensionError, as_symmetric, check_finite

if TYPE_CHECKING:
    from .detection import DetectBlock

POLARIZATIONS = ("x", "y", "none")
PASSIVE_KINDS = ("beam_splitter", "phase_shift", "polarization_rotation", "custom_unitary")
ACTIVE_KINDS = ("squeezer", "down_converter", "active")

UNITARY_TOL = 1e-12
SYMPLECTIC_TOL = 1e-8
ASYMMETRY_TOL = 1e-8


class CircuitError(ValueError):
    """A circuit description that cannot be lowered."""


class PrecisionError(CircuitError, ArithmeticError):
    """Lowering lost too much precision (a residual check failed)."""


@dataclass(frozen=True)
class ModeLabel:
    spatial: str
    pol: str = "none"

    def __post_init__(self):
        if self.pol not in POLARIZATIONS:
            raise ValueError(f"polarization must be one of {POLARIZATIONS}, got {self.pol!r}")
        if not self.spatial:
            raise ValueError("empty mode name")

    @property
    def name(self) -> str:
        return self.spatial if self.pol == "none" else f"{self.spatial}_{self.pol}"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class PassiveComponent:
    """Photon-number-preserving element acting on the referenced modes.

    ``modes`` holds full labels (``"a_x"``) or spatial names (``"a"``). A
    spatial name stands for all its polarizations; two-port elements given
    spatial names act identically on each polarization.
    """

    kind: str
    modes: tuple[str, ...]
    params: Mapping[str, Any] = field(default_factory=dict)

    def local_matrix(self) -> np.ndarray:
        p = self.params
        if self.kind == "beam_splitter":
            t = float(p.get("theta", math.pi / 4))
            ph = np.exp(1j * float(p.get("phi", 0.0)))
            return np.array([[math.cos(t), ph * math.sin(t)], [-np.conj(ph) * math.sin(t), math.cos(t)]])
        if self.kind == "polarization_rotation":
            t = float(p["theta"])
            return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]], dtype=complex)
        if self.kind == "phase_shift":
            return np.array([[np.exp(1j * float(p["phi"]))]])
        if self.kind == "custom_unitary":
            U = np.array(p["matrix"], dtype=complex)
            check_finite(U, "custom unitary")
            if U.ndim != 2 or U.shape[0] != U.shape[1]:
                raise CircuitError("custom_unitary matrix must be square")
            if np.abs(U.conj().T @ U - np.eye(len(U))).max() > UNITARY_TOL:
                raise CircuitError("custom_unitary matrix is not unitary")
            return U
        raise CircuitError(f"unknown passive kind {self.kind!r}")

    def blocks(self, spec: "CircuitSpec") -> list[list[int]]:
        """Global mode indices of each block the local matrix acts on."""
        if self.kind == "polarization_rotation":
            if len(self.modes) == 1:
                group = spec.spatial_group(self.modes[0])
                if [spec.modes[k].pol for k in group] != ["x", "y"]:
                    raise CircuitError(f"polarization_rotation needs x and y modes for {self.modes[0]!r}")
                return [group]
            return [[spec.index(m) for m in self.modes]]
        if self.kind == "phase_shift":
            return [[k] for ref in self.modes for k in spec.expand(ref)]
        return spec.parallel_blocks(self.modes)

    def matrix(self, spec: "CircuitSpec") -> np.ndarray:
        """Full ``N x N`` unitary, identity off the touched modes."""
        U = np.eye(spec.nmodes, dtype=complex)
        local = self.local_matrix()
        for block in self.blocks(spec):
            if len(block) != local.shape[0]:
                raise CircuitError(f"{self.kind} expects {local.shape[0]} modes per block, got {len(block)}")
            sub = np.eye(spec.nmodes, dtype=complex)
            sub[np.ix_(block, block)] = local
            U = sub @ U
        return U


@dataclass(frozen=True)
class ActiveComponent:
    """Quadratic source ``exp(s (a^dag, R a^dag)/2 - h.c.)`` on the referenced modes."""

    kind: str
    modes: tuple[str, ...]
    params: Mapping[str, Any] = field(default_factory=dict)

    @property
    def strength(self) -> complex:
        s = complex(self.params.get("strength", 0.0))
        if not (math.isfinite(s.real) and math.isfinite(s.imag)):
            raise CircuitError("non-finite strength")
        return s

    def exponent(self, spec: "CircuitSpec") -> np.ndarray:
        """Full ``N x N`` symmetric matrix ``R`` supported on the touched modes."""
        R = np.zeros((spec.nmodes, spec.nmodes), dtype=complex)
        if self.kind == "squeezer":
            if len(self.modes) != 1:
                raise CircuitError("squeezer acts on exactly one mode reference")
            for k in spec.expand(self.modes[0]):
                R[k, k] = 1.0
            return R
        if self.kind == "down_converter":
            if len(self.modes) != 2:
                raise CircuitError("down_converter needs two mode references")
            g1, g2 = spec.expand(self.modes[0]), spec.expand(self.modes[1])
            if len(g1) == 1 and len(g2) == 1:
                R[g1[0], g2[0]] = R[g2[0], g1[0]] = 1.0
            elif len(g1) == 2 and len(g2) == 2:
                # type-II: (1x, 2y) and (1y, 2x) pairs
                for p, q in ((g1[0], g2[1]), (g1[1], g2[0])):
                    R[p, q] = R[q, p] = 1.0
            else:
                raise CircuitError("down_converter modes must both be single modes or both x/y pairs")
            return R
        if self.kind == "active":
            idx = [spec.index(m) for m in self.modes]
            local = as_symmetric(self.params["R"])
            if local.shape[0] != len(idx):
                raise CircuitError("R size does not match the mode list")
            R[np.ix_(idx, idx)] = local
            return R
        raise CircuitError(f"unknown active kind {self.kind!r}")


Component = PassiveComponent | ActiveComponent


def make_component(kind: str, modes: Sequence[str], params: Mapping[str, Any] | None = None) -> Component:
    params = dict(params or {})
    if kind in PASSIVE_KINDS:
        return PassiveComponent(kind, tuple(modes), params)
    if kind in ACTIVE_KINDS:
        return ActiveComponent(kind, tuple(modes), params)
    raise CircuitError(f"unknown component kind {kind!r}")


@dataclass(frozen=True)
class CircuitSpec:
    """Declared modes, ordered components and an optional detection block.

    ``traced`` lists ancilla modes that are discarded rather than detected
    (added by :func:`bargmann_circuits.detection.attach_loss`).
    """

    modes: tuple[ModeLabel, ...]
    components: tuple[Component, ...] = ()
    detect: "DetectBlock | None" = None
    options: Mapping[str, Any] = field(default_factory=dict)
    traced: tuple[str, ...] = ()

    @property
    def nmodes(self) -> int:
        return len(self.modes)

    @property
    def labels(self) -> list[str]:
        return [m.name for m in self.modes]

    def index(self, label: str) -> int:
        for k, m in enumerate(self.modes):
            if m.name == label:
                return k
        raise CircuitError(f"undeclared mode {label!r}")

    def has_label(self, label: str) -> bool:
        return any(m.name == label for m in self.modes)

    def spatial_group(self, spatial: str) -> list[int]:
        group = [k for k, m in enumerate(self.modes) if m.spatial == spatial and m.pol != "none"]
        if not group:
            raise CircuitError(f"undeclared mode {spatial!r}")
        return sorted(group, key=lambda k: self.modes[k].pol)

    def expand(self, ref: str) -> list[int]:
        """Indices named by ``ref``: one full label, or every polarization of a spatial name."""
        if self.has_label(ref):
            return [self.index(ref)]
        return self.spatial_group(ref)

    def parallel_blocks(self, refs: Sequence[str]) -> list[list[int]]:
        groups = [self.expand(r) for r in refs]
        sizes = {len(g) for g in groups}
        if len(sizes) != 1:
            raise CircuitError(f"mode references {list(refs)} mix single modes and polarization pairs")
        return [list(block) for block in zip(*groups)]

    def validate(self) -> list[str]:
        """Human-readable problems; empty when the spec can be lowered."""
        errors = []
        names = self.labels
        if len(set(names)) != len(names):
            errors.append("duplicate mode labels")
        for k, comp in enumerate(self.components):
            where = f"components[{k}] ({comp.kind})"
            try:
                if isinstance(comp, PassiveComponent):
                    comp.matrix(self)
                else:
                    comp.exponent(self)
                    comp.strength
            except (CircuitError, KeyError, ValueError, TypeError) as exc:
                errors.append(f"{where}: {exc}")
        for t in self.traced:
            if not self.has_label(t):
                errors.append(f"traced: undeclared mode {t!r}")
        return errors


# ---------------------------------------------------------------------------
# Bogoliubov maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BogoliubovMap:
    """Heisenberg action ``a -> E a + F a^dag``."""

    E: np.ndarray
    F: np.ndarray

    @classmethod
    def identity(cls, n: int) -> "BogoliubovMap":
        return cls(np.eye(n, dtype=complex), np.zeros((n, n), dtype=complex))

    @property
    def nmodes(self) -> int:
        return self.E.shape[0]

    def as_matrix(self) -> np.ndarray:
        return np.block([[self.E, self.F], [self.F.conj(), self.E.conj()]])

    @classmethod
    def from_matrix(cls, S: np.ndarray) -> "BogoliubovMap":
        n = S.shape[0] // 2
        return cls(S[:n, :n].copy(), S[:n, n:].copy())

    def symplectic_residual(self) -> float:
        """Max deviation from ``E E^dag - F F^dag = I`` and ``E F^T = F E^T``."""
        E, F = self.E, self.F
        r1 = np.abs(E @ E.conj().T - F @ F.conj().T - np.eye(self.nmodes)).max(initial=0.0)
        EF = E @ F.T
        r2 = np.abs(EF - EF.T).max(initial=0.0)
        return float(max(r1, r2))


def component_to_bogoliubov(component: Component, spec: CircuitSpec) -> BogoliubovMap:
    if isinstance(component, PassiveComponent):
        U = component.matrix(spec)
        return BogoliubovMap(U, np.zeros_like(U))
    R = component.exponent(spec)
    s = component.strength
    n = spec.nmodes
    gen = np.block([[np.zeros((n, n)), s * R], [np.conj(s) * R.conj(), np.zeros((n, n))]])
    return BogoliubovMap.from_matrix(scipy.linalg.expm(gen))


def compose(maps: Sequence[BogoliubovMap]) -> BogoliubovMap:
    """Compose maps listed in the order they act on the state."""
    if not maps:
        raise ValueError("compose needs at least one map")
    n = maps[0].nmodes
    S = np.eye(2 * n, dtype=complex)
    for m in maps:
        if m.nmodes != n:
            raise DimensionError("maps act on different numbers of modes")
        S = m.as_matrix() @ S
    out = BogoliubovMap.from_matrix(S)
    res = out.symplectic_residual()
    if res > SYMPLECTIC_TOL:
        raise PrecisionError(f"symplectic residual {res:.3g} exceeds {SYMPLECTIC_TOL}")
    return out


@dataclass(frozen=True)
class GaussianVacuumState:
    """``exp(sign * (a^dag, B a^dag)/2)|0>`` over the labelled modes."""

    B: np.ndarray
    modes: tuple[str, ...]
    sign: int = 1

    def __post_init__(self):
        B = as_symmetric(self.B)
        object.__setattr__(self, "B", B)
        if B.shape[0] != len(self.modes):
            raise DimensionError("B size does not match the mode list")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if B.size and np.linalg.norm(B, 2) >= 1.0:
            raise CircuitError("spectral radius of B* B must be below 1 for a normalizable state")

    @property
    def nmodes(self) -> int:
        return len(self.modes)

    @property
    def plus_form(self) -> np.ndarray:
        """``K`` with state ``exp(+(a^dag, K a^dag)/2)|0>``."""
        return self.sign * self.B

    @property
    def minus_form(self) -> np.ndarray:
        """``B'`` with state ``exp(-(a^dag, B' a^dag)/2)|0>``."""
        return -self.sign * self.B

    def with_sign(self, sign: int) -> "GaussianVacuumState":
        return GaussianVacuumState(sign * self.plus_form, self.modes, sign)

    def index(self, label: str) -> int:
        try:
            return self.modes.index(label)
        except ValueError:
            raise CircuitError(f"unknown mode {label!r}") from None

    def norm_squared(self) -> float:
        """``<psi|psi> = det(I - B B^*)^(-1/2)``."""
        K = self.B
        return float(1.0 / np.sqrt(np.linalg.det(np.eye(self.nmodes) - K @ K.conj()).real))


def vacuum_exponent(m: BogoliubovMap, modes: Sequence[str] | None = None, sign: int = 1):
    """Exponent matrix of ``W|0>`` for the circuit unitary ``W`` with map ``m``.

    Returns ``(state, asymmetry)``; the state is annihilated by
    ``W a W^dag = E^dag a - F^T a^dag``, which fixes ``K = F (E^*)^-1``.
    """
    n = m.nmodes
    modes = tuple(modes) if modes is not None else tuple(f"m{k}" for k in range(n))
    if np.linalg.cond(m.E) > 1e12:
        raise PrecisionError("E is singular; the state is not normalizable")
    K = np.linalg.solve(m.E.conj().T, m.F.T)
    scale = max(1.0, float(np.abs(K).max(initial=0.0)))
    asym = float(np.abs(K - K.T).max(initial=0.0))
    if asym > ASYMMETRY_TOL * scale:
        raise PrecisionError(f"lowered exponent asymmetric by {asym:.3g}")
    K = 0.5 * (K + K.T)
    return GaussianVacuumState(sign * K, modes, sign), asym


def takagi(A, cluster_tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Takagi factorization ``A = U diag(lam) U^T`` of a complex symmetric matrix.

    Singular values come out in descending order. Degenerate clusters are
    handled by a symmetric square root of the unitary linking left and right
    singular vectors within the cluster.
    """
    A = as_symmetric(A)
    n = A.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros(0)
    V, sv, Wh = np.linalg.svd(A)
    W = Wh.conj().T
    U = V.astype(complex).copy()
    scale = max(1.0, sv[0])
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and sv[start] - sv[stop] <= cluster_tol * scale:
            stop += 1
        block = slice(start, stop)
        if sv[start] > cluster_tol * scale:
            # A = A^T forces V_c = W_c^* Z with Z = W_c^T V_c symmetric unitary
            Z = W[:, block].T @ V[:, block]
            Z = 0.5 * (Z + Z.T)
            U[:, block] = V[:, block] @ _unitary_sqrt(Z.conj())
        start = stop
    # column sign is the only freedom left; make the largest entry's real part positive
    for k in range(n):
        j = np.argmax(np.abs(U[:, k]))
        if U[j, k].real < 0:
            U[:, k] *= -1
    return U, sv


def _unitary_sqrt(Z: np.ndarray) -> np.ndarray:
    if Z.shape == (1, 1):
        return np.sqrt(Z)
    # Z is normal: a Schur form is diagonal, so take principal roots of its eigenvalues
    T, Q = scipy.linalg.schur(Z, output="complex")
    w = np.diag(T)
    # put the branch cut in the widest gap between eigenvalue phases, so that
    # a degenerate eigenvalue split by rounding gets one root, not two
    ang = np.sort(np.angle(w))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    cut = ang[k] + gaps[k] / 2
    phase = np.mod(np.angle(w) - cut, 2 * np.pi) + cut - 2 * np.pi
    roots = np.sqrt(np.abs(w)) * np.exp(0.5j * phase)
    root = Q @ np.diag(roots) @ Q.conj().T
    return 0.5 * (root + root.T)


@dataclass(frozen=True)
class Lowering:
    """Result of lowering a circuit, with diagnostics for reports."""

    state: GaussianVacuumState
    bogoliubov: BogoliubovMap
    takagi_unitary: np.ndarray
    takagi_values: np.ndarray
    symplectic_residual: float
    asymmetry: float

    @property
    def takagi_residual(self) -> float:
        U, lam = self.takagi_unitary, self.takagi_values
        return float(np.abs(self.state.B - U @ np.diag(lam) @ U.T).max(initial=0.0))


def lower_circuit(spec: CircuitSpec, sign: int = 1) -> Lowering:
    errors = spec.validate()
    if errors:
        raise CircuitError("; ".join(errors))
    n = spec.nmodes
    maps = [component_to_bogoliubov(c, spec) for c in spec.components]
    total = compose(maps) if maps else BogoliubovMap.identity(n)
    state, asym = vacuum_exponent(total, spec.labels, sign)
    U, lam = takagi(state.B)
    return Lowering(state, total, U, lam, total.symplectic_residual(), asym)


def build_circuit(spec: CircuitSpec, sign: int = 1) -> GaussianVacuumState:
    return lower_circuit(spec, sign).state
