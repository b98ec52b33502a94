"""Multi-dimensional Hermite polynomials (MDHPs) for complex symmetric matrices.

For an ``N x N`` complex symmetric ``B`` and a photon-count vector ``n`` over
the first ``M <= N`` variables,

    H_n^B(alpha) = (-1)^|n| exp(+(alpha, B alpha)/2) d^n exp(-(alpha, B alpha)/2).

Three independent constructions are provided: repeated differentiation of
the Gaussian (``rodrigues``), coefficient extraction from the generating
function ``exp[(alpha, B beta) - (beta, B beta)/2]`` (``genfunc``), and the
three-term recursion (``recursion``). Each returns identical polynomials up
to rounding; :func:`check_diff_recursion` and
:func:`check_three_term_recursion` measure the residuals of the two
recursion relations.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial.hermite import hermgauss

from ._validation import DimensionError, as_symmetric, multi_index, pad_index
from .polycore import MonomialBasis, SparsePoly, _compositions

METHODS = ("rodrigues", "genfunc", "recursion")

QUADRATURE_NODES = 40
QUADRATURE_TOL = 1e-9
MAX_QUADRATURE_DIM = 3


@functools.lru_cache(maxsize=64)
def _basis(nvars: int, degree: int) -> MonomialBasis:
    return MonomialBasis(nvars, degree)


def _last_nonzero(n: Sequence[int]) -> int:
    for i in range(len(n) - 1, -1, -1):
        if n[i]:
            return i
    raise ValueError("zero multi-index has no predecessor")


def _minus(n: tuple[int, ...], j: int) -> tuple[int, ...]:
    return n[:j] + (n[j] - 1,) + n[j + 1 :]


def _plus(n: tuple[int, ...], j: int) -> tuple[int, ...]:
    return n[:j] + (n[j] + 1,) + n[j + 1 :]


def _simplex(nmodes: int, max_order: int) -> list[tuple[int, ...]]:
    """All multi-indices with total <= max_order, ordered by total degree."""
    return [n for d in range(max_order + 1) for n in sorted(_compositions(d, nmodes), reverse=True)]


def _check_order(B: np.ndarray, n) -> tuple[int, ...]:
    n = multi_index(n)
    if len(n) > B.shape[0]:
        raise DimensionError(f"signature length {len(n)} exceeds matrix dimension {B.shape[0]}")
    return n


@dataclass(frozen=True)
class HermiteTable:
    """A family ``{H_n^B}`` keyed by multi-indices over the first ``nmodes`` variables.

    Entries are stored as dense coefficient vectors in :attr:`basis`; indexing
    the table returns :class:`SparsePoly` objects over all ``N`` variables.
    """

    matrix: np.ndarray
    nmodes: int
    basis: MonomialBasis
    entries: dict = field(repr=False)

    @property
    def nvars(self) -> int:
        return self.matrix.shape[0]

    @property
    def max_order(self) -> int:
        return max((sum(n) for n in self.entries), default=0)

    def __contains__(self, n) -> bool:
        return tuple(n) in self.entries

    def __getitem__(self, n) -> SparsePoly:
        return self.basis.to_poly(self.entries[tuple(n)])

    def keys(self):
        return self.entries.keys()

    def dense(self, n) -> np.ndarray:
        try:
            return self.entries[tuple(n)]
        except KeyError:
            raise KeyError(f"table has no entry for {tuple(n)}") from None

    def with_capacity(self, degree: int) -> "HermiteTable":
        """Re-embed the entries into a basis that holds ``degree``."""
        if degree <= self.basis.degree:
            return self
        new = _basis(self.nvars, degree)
        remap = np.array([new.index[tuple(e)] for e in self.basis.exponents.tolist()])
        entries = {}
        for n, vec in self.entries.items():
            v = new.zeros()
            v[remap] = vec
            entries[n] = v
        return HermiteTable(self.matrix, self.nmodes, new, entries)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def _rodrigues_step(basis: MonomialBasis, B: np.ndarray, P: np.ndarray, i: int) -> np.ndarray:
    # d_i [P e^{-(a,Ba)/2}] = [d_i P - P (B a)_i] e^{-(a,Ba)/2}
    return basis.diff(P, i) - basis.times_linear(P, B[i])


def gaussian_diff(B, n) -> SparsePoly:
    """``H_n^B`` by differentiating ``exp(-(alpha, B alpha)/2)`` directly.

    >>> gaussian_diff([[1.0]], (3,)).to_text(["x"])
    '(1+0i)*x^3 + (-3+0i)*x'
    """
    B = as_symmetric(B)
    n = _check_order(B, n)
    total = sum(n)
    basis = _basis(B.shape[0], total)
    P = basis.one()
    for i, k in enumerate(n):
        for _ in range(k):
            P = _rodrigues_step(basis, B, P, i)
    return basis.to_poly((-1) ** total * P)


def _quadratic_series(Bsub: np.ndarray, degree: int) -> tuple[MonomialBasis, np.ndarray]:
    """Taylor coefficients of ``exp(-(beta, Bsub beta)/2)`` up to total ``degree``."""
    m = Bsub.shape[0]
    bb = _basis(m, degree)
    eye = np.eye(m)

    def apply_q(v):
        out = bb.zeros()
        for j in range(m):
            out += bb.times_linear(bb.times_linear(v, Bsub[j]), eye[j])
        return -0.5 * out

    total = bb.one()
    term = bb.one()
    for k in range(1, degree // 2 + 1):
        term = apply_q(term) / k
        total = total + term
    return bb, total


def _genfunc_entries(B: np.ndarray, nmodes: int, orders: Iterable[tuple[int, ...]], degree: int):
    orders = list(orders)
    top = max((sum(n) for n in orders), default=0)
    basis = _basis(B.shape[0], degree)
    beta_basis, gauss = _quadratic_series(B[:nmodes, :nmodes], top)
    # exp((alpha, B beta)) = prod_j exp(beta_j y_j) with y_j = (B alpha)_j:
    # its beta^m coefficient is prod_j y_j^{m_j} / m_j!
    ypow = np.zeros((beta_basis.size, basis.size), dtype=complex)
    for k in np.argsort(beta_basis.degrees, kind="stable"):
        m = tuple(int(x) for x in beta_basis.exponents[k])
        if not any(m):
            ypow[k] = basis.one()
            continue
        j = _last_nonzero(m)
        prev = beta_basis.index[_minus(m, j)]
        ypow[k] = basis.times_linear(ypow[prev], B[j]) / m[j]
    entries = {}
    for n in orders:
        acc = basis.zeros()
        for m in np.ndindex(*(k + 1 for k in n)):
            rest = tuple(a - b for a, b in zip(n, m))
            acc += gauss[beta_basis.index[rest]] * ypow[beta_basis.index[m]]
        entries[n] = math.prod(math.factorial(k) for k in n) * acc
    return basis, entries


def hermite_via_generating(B, n) -> SparsePoly:
    """``H_n^B`` as ``n!`` times the ``beta^n`` coefficient of the generating function."""
    B = as_symmetric(B)
    n = _check_order(B, n)
    basis, entries = _genfunc_entries(B, len(n), [n], sum(n))
    return basis.to_poly(entries[n])


def hermite_table(B, max_order: int, method: str = "recursion", nmodes: int | None = None) -> HermiteTable:
    """All ``H_n^B`` with ``|n| <= max_order`` over the first ``nmodes`` variables."""
    B = as_symmetric(B)
    N = B.shape[0]
    nmodes = N if nmodes is None else nmodes
    if not 0 <= nmodes <= N:
        raise DimensionError(f"nmodes={nmodes} outside 0..{N}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    orders = _simplex(nmodes, max_order)
    # one spare degree so the table can be extended without re-embedding
    degree = max_order + 1
    if method == "genfunc":
        basis, entries = _genfunc_entries(B, nmodes, orders, degree)
        return HermiteTable(B, nmodes, basis, entries)

    basis = _basis(N, degree)
    zero = (0,) * nmodes
    entries = {zero: basis.one()}
    if method == "rodrigues":
        raw = {zero: basis.one()}
        for n in orders[1:]:
            i = _last_nonzero(n)
            raw[n] = _rodrigues_step(basis, B, raw[_minus(n, i)], i)
            entries[n] = (-1) ** sum(n) * raw[n]
    else:
        for n in orders[1:]:
            i = _last_nonzero(n)
            entries[n] = _three_term(basis, B, entries, _minus(n, i), i)
    return HermiteTable(B, nmodes, basis, entries)


def _three_term(basis, B, entries, n, i):
    # H_{n+e_i} = (B alpha)_i H_n - sum_j B_ij n_j H_{n-e_j}
    out = basis.times_linear(entries[n], B[i])
    for j, k in enumerate(n):
        if k and B[i, j] != 0:
            prev = _minus(n, j)
            if prev not in entries:
                raise KeyError(f"missing prerequisite H_{prev}")
            out -= B[i, j] * k * entries[prev]
    return out


def recursion_build(table: HermiteTable, i: int) -> HermiteTable:
    """Extend ``table`` with ``H_{n+e_i}`` for every stored ``n``.

    Raises ``KeyError`` when a lower-order neighbour ``H_{n-e_j}`` needed by
    the recursion is absent.
    """
    if not 0 <= i < table.nmodes:
        raise IndexError(f"mode {i} outside 0..{table.nmodes - 1}")
    table = table.with_capacity(table.max_order + 1)
    entries = dict(table.entries)
    for n in sorted(table.entries, key=sum):
        target = _plus(n, i)
        if target in entries:
            continue
        entries[target] = _three_term(table.basis, table.matrix, table.entries, n, i)
    return HermiteTable(table.matrix, table.nmodes, table.basis, entries)


def check_diff_recursion(table: HermiteTable, n, i: int) -> float:
    """Max coefficient of ``d_i H_n - sum_j B_ij n_j H_{n-e_j}``."""
    n = multi_index(n)
    B, basis = table.matrix, table.basis
    if not 0 <= i < table.nvars:
        raise IndexError(f"variable {i} out of range")
    lhs = basis.diff(table.dense(n), i)
    rhs = basis.zeros()
    for j, k in enumerate(n):
        if k:
            rhs += B[i, j] * k * table.dense(_minus(n, j))
    return float(np.abs(lhs - rhs).max(initial=0.0))


def check_three_term_recursion(table: HermiteTable, n, i: int) -> float:
    """Max coefficient of ``H_{n+e_i} - (B alpha)_i H_n + sum_j B_ij n_j H_{n-e_j}``."""
    n = multi_index(n)
    B, basis = table.matrix, table.basis
    out = table.dense(_plus(n, i)) - basis.times_linear(table.dense(n), B[i])
    for j, k in enumerate(n):
        if k:
            out += B[i, j] * k * table.dense(_minus(n, j))
    return float(np.abs(out).max(initial=0.0))


def max_table_difference(t1: HermiteTable, t2: HermiteTable) -> float:
    """Largest per-coefficient gap between two tables over their common keys."""
    worst = 0.0
    for n in t1.keys() & t2.keys():
        worst = max(worst, t1[n].max_abs_diff(t2[n]))
    return worst


def hermite_at_zero(B, max_order: int) -> dict[tuple[int, ...], complex]:
    """``H_n^B(0)`` for every ``|n| <= max_order``, from the recursion with ``alpha = 0``.

    Only the constant terms are carried, so this scales to all modes of a
    circuit where a full polynomial table would not fit in memory.
    """
    B = as_symmetric(B)
    N = B.shape[0]
    out = {(0,) * N: 1.0 + 0j}
    for n in _simplex(N, max_order)[1:]:
        i = _last_nonzero(n)
        prev = _minus(n, i)
        out[n] = -complex(sum(B[i, j] * k * out[_minus(prev, j)] for j, k in enumerate(prev) if k))
    return out


# ---------------------------------------------------------------------------
# orthogonality and normalization
# ---------------------------------------------------------------------------


def _require_positive_real_part(B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    evals, evecs = np.linalg.eigh(B.real)
    if evals.min() <= 1e-12:
        raise ValueError("Re(B) is not positive definite")
    return evals, evecs


def _gauss_hermite_integral(f, evals, evecs, kappa: float, nodes: int) -> complex:
    # x = Q t / sqrt(kappa d) maps exp(-kappa x.ReB x) onto exp(-|t|^2)
    t, w = hermgauss(nodes)
    dim = len(evals)
    grids = np.meshgrid(*([t] * dim), indexing="ij")
    weights = np.ones_like(grids[0])
    for wg in np.meshgrid(*([w] * dim), indexing="ij"):
        weights = weights * wg
    T = np.stack([g.ravel() for g in grids], axis=1)
    X = (T / np.sqrt(kappa * evals)) @ evecs.T
    jac = np.prod(1.0 / np.sqrt(kappa * evals))
    return complex(jac * np.sum(weights.ravel() * f(X)))


def orthogonality_integral(B, n, m, weight_halved: bool = True) -> complex:
    """``int w(x) H_n^{B*}(x) H_m^B(x) dx`` over real ``x``.

    The weight is ``exp(-(x, Re B x)/2)`` when ``weight_halved`` is set and
    ``exp(-(x, Re B x))`` otherwise. Tensor-product Gauss-Hermite quadrature
    is used after rotating onto the eigenbasis of ``Re B``; the node count
    starts at 40 per axis and is doubled until two successive values agree.
    """
    B = as_symmetric(B)
    N = B.shape[0]
    if N > MAX_QUADRATURE_DIM:
        raise ValueError(f"quadrature limited to N <= {MAX_QUADRATURE_DIM}, got {N}")
    n, m = pad_index(n, N), pad_index(m, N)
    evals, evecs = _require_positive_real_part(B)
    hn = gaussian_diff(B.conj(), n)
    hm = gaussian_diff(B, m)

    def integrand(X):
        return hn.evaluate_many(X) * hm.evaluate_many(X)

    kappa = 0.5 if weight_halved else 1.0
    nodes = QUADRATURE_NODES
    value = _gauss_hermite_integral(integrand, evals, evecs, kappa, nodes)
    while True:
        nodes *= 2
        refined = _gauss_hermite_integral(integrand, evals, evecs, kappa, nodes)
        if abs(refined - value) <= QUADRATURE_TOL * max(1.0, abs(refined)):
            return refined
        if nodes ** N > 4_000_000:
            raise RuntimeError("quadrature did not converge within the node budget")
        value = refined


def claimed_normalization(B, n) -> complex:
    """The closed-form constant ``2^|n| prod B_ii^n_i prod n_i! |B/pi|^(-1/2)``.

    Evaluated as written, for comparison against :func:`orthogonality_integral`.
    """
    B = as_symmetric(B)
    n = multi_index(n)
    if len(n) != B.shape[0]:
        raise DimensionError("signature length must equal the matrix dimension")
    det = np.linalg.det(B / np.pi)
    if abs(det) < 1e-300:
        raise ValueError("B is singular")
    value = 2.0 ** sum(n) * np.prod([B[i, i] ** k * math.factorial(k) for i, k in enumerate(n)])
    return complex(value / np.sqrt(complex(det)))


def normalization_report(B, n) -> dict:
    """Diagonal quadrature values under both weights next to the closed form."""
    return {
        "order": tuple(n),
        "quadrature_halved": orthogonality_integral(B, n, n, weight_halved=True),
        "quadrature_full": orthogonality_integral(B, n, n, weight_halved=False),
        "claimed": claimed_normalization(B, n),
    }
