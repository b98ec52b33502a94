"""Sparse multivariate polynomials with complex coefficients.

Polynomials are immutable maps from exponent tuples to complex coefficients.
They carry Bargmann-picture wavefunction prefactors, so variable ``i`` stands
for the creation operator of mode ``i`` and ``diff(i)`` for its annihilation
operator.

:class:`MonomialBasis` is a dense companion used by the Hermite constructions,
where thousands of polynomials over the same variables are built at once.
"""

from __future__ import annotations

import itertools
import math
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._validation import DimensionError, check_finite

ZERO_TOL = 1e-14

Exponent = tuple[int, ...]


def grlex_key(exponent: Sequence[int]):
    """Sort key putting higher total degree first, then lexicographically larger."""
    return (-sum(exponent), tuple(-e for e in exponent))


def format_complex(z: complex, digits: int = 12) -> str:
    re, im = float(z.real), float(z.imag)
    # avoid "-0" noise in golden output
    re = 0.0 if re == 0 else re
    im = 0.0 if im == 0 else im
    return f"{re:.{digits}g}{im:+.{digits}g}i"


class SparsePoly:
    """Immutable polynomial in ``nvars`` complex variables.

    Coefficients with magnitude below ``tol`` are dropped on construction,
    which keeps cancellation residue out of the support.

    >>> a = SparsePoly.variable(0, 2)
    >>> (a * a + 1).degree
    2
    """

    __slots__ = ("_terms", "_nvars", "_tol")

    def __init__(self, terms: Mapping[Exponent, complex], nvars: int, tol: float = ZERO_TOL):
        if nvars < 0:
            raise DimensionError("nvars must be non-negative")
        clean = {}
        for exp, coeff in terms.items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != nvars:
                raise DimensionError(f"exponent {exp} does not have {nvars} entries")
            if any(e < 0 for e in exp):
                raise ValueError(f"negative exponent {exp}")
            coeff = complex(coeff)
            if not (math.isfinite(coeff.real) and math.isfinite(coeff.imag)):
                raise ValueError("non-finite coefficient")
            if abs(coeff) >= tol:
                clean[exp] = coeff
        self._terms = MappingProxyType(clean)
        self._nvars = nvars
        self._tol = tol

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, nvars: int) -> "SparsePoly":
        return cls({}, nvars)

    @classmethod
    def constant(cls, value: complex, nvars: int) -> "SparsePoly":
        return cls({(0,) * nvars: value}, nvars)

    @classmethod
    def variable(cls, i: int, nvars: int, coeff: complex = 1.0) -> "SparsePoly":
        _check_var(i, nvars)
        exp = [0] * nvars
        exp[i] = 1
        return cls({tuple(exp): coeff}, nvars)

    @classmethod
    def linear(cls, coeffs: Sequence[complex]) -> "SparsePoly":
        """The linear form ``sum_j coeffs[j] * alpha_j``."""
        n = len(coeffs)
        terms = {}
        for j, c in enumerate(coeffs):
            exp = [0] * n
            exp[j] = 1
            terms[tuple(exp)] = c
        return cls(terms, n)

    # -- basic access -----------------------------------------------------
    @property
    def nvars(self) -> int:
        return self._nvars

    @property
    def terms(self) -> Mapping[Exponent, complex]:
        return self._terms

    @property
    def tol(self) -> float:
        return self._tol

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, exponent: Sequence[int]) -> complex:
        return self._terms.get(tuple(exponent), 0j)

    def support(self) -> set[int]:
        """Indices of variables appearing with positive exponent."""
        return {i for exp in self._terms for i, e in enumerate(exp) if e}

    def sorted_terms(self) -> list[tuple[Exponent, complex]]:
        return sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]))

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        return f"SparsePoly({self.to_text()}, nvars={self._nvars})"

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "SparsePoly":
        if isinstance(other, SparsePoly):
            if other.nvars != self._nvars:
                raise DimensionError(f"variable-count mismatch: {self._nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return SparsePoly.constant(other, self._nvars)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for exp, c in other.terms.items():
            out[exp] = out.get(exp, 0j) + c
        return SparsePoly(out, self._nvars, self._tol)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly({e: -c for e, c in self._terms.items()}, self._nvars, self._tol)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor: complex) -> "SparsePoly":
        factor = complex(factor)
        return SparsePoly({e: c * factor for e, c in self._terms.items()}, self._nvars, self._tol)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: dict[Exponent, complex] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other.terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                out[exp] = out.get(exp, 0j) + c1 * c2
        return SparsePoly(out, self._nvars, self._tol)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "SparsePoly":
        if k < 0:
            raise ValueError("negative power")
        result = SparsePoly.constant(1.0, self._nvars)
        for _ in range(k):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparsePoly):
            return NotImplemented
        return self._nvars == other.nvars and dict(self._terms) == dict(other.terms)

    def __hash__(self):
        return hash((self._nvars, frozenset(self._terms.items())))

    def max_abs_diff(self, other: "SparsePoly") -> float:
        """Largest per-coefficient magnitude of ``self - other``."""
        other = self._coerce(other)
        keys = set(self._terms) | set(other.terms)
        return max((abs(self.coefficient(k) - other.coefficient(k)) for k in keys), default=0.0)

    def allclose(self, other: "SparsePoly", atol: float = 1e-10) -> bool:
        return self.max_abs_diff(other) < atol

    # -- calculus and evaluation ------------------------------------------
    def diff(self, i: int) -> "SparsePoly":
        _check_var(i, self._nvars)
        out = {}
        for exp, c in self._terms.items():
            if exp[i]:
                new = list(exp)
                new[i] -= 1
                out[tuple(new)] = c * exp[i]
        return SparsePoly(out, self._nvars, self._tol)

    def restrict_zero(self, variables: Iterable[int]) -> "SparsePoly":
        variables = set(variables)
        for i in variables:
            _check_var(i, self._nvars)
        out = {e: c for e, c in self._terms.items() if not any(e[i] for i in variables)}
        return SparsePoly(out, self._nvars, self._tol)

    def truncate(self, max_degree: int) -> "SparsePoly":
        out = {e: c for e, c in self._terms.items() if sum(e) <= max_degree}
        return SparsePoly(out, self._nvars, self._tol)

    def __call__(self, point: Sequence[complex]) -> complex:
        point = np.asarray(point, dtype=complex)
        if point.shape != (self._nvars,):
            raise DimensionError(f"point has shape {point.shape}, expected ({self._nvars},)")
        check_finite(point, "evaluation point")
        total = 0j
        for exp, c in self._terms.items():
            total += c * np.prod(point ** np.array(exp))
        return complex(total)

    def evaluate_many(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at each row of ``points`` (shape ``(k, nvars)``)."""
        points = np.asarray(points, dtype=complex)
        if points.ndim != 2 or points.shape[1] != self._nvars:
            raise DimensionError(f"points must have shape (k, {self._nvars})")
        out = np.zeros(points.shape[0], dtype=complex)
        # per-variable power tables keep this O(terms * points)
        top = max((max(e) for e in self._terms), default=0)
        powers = [points[:, i, None] ** np.arange(top + 1) for i in range(self._nvars)]
        for exp, c in self._terms.items():
            term = np.full(points.shape[0], c, dtype=complex)
            for i, e in enumerate(exp):
                if e:
                    term *= powers[i][:, e]
            out += term
        return out

    def to_text(self, labels: Sequence[str] | None = None, digits: int = 12) -> str:
        """Render in graded-lex order, e.g. ``(1+0i)*a_x^2 + (-0.5+0i)``."""
        if labels is None:
            labels = [f"x{i}" for i in range(self._nvars)]
        if len(labels) != self._nvars:
            raise DimensionError("label count does not match nvars")
        if not self._terms:
            return "0"
        parts = []
        for exp, c in self.sorted_terms():
            factors = [f"({format_complex(c, digits)})"]
            for name, e in zip(labels, exp):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}^{e}")
            parts.append("*".join(factors))
        return " + ".join(parts)


def _check_var(i: int, nvars: int) -> None:
    if not 0 <= i < nvars:
        raise IndexError(f"variable index {i} out of range for {nvars} variables")


def poly_add(p: SparsePoly, q: SparsePoly) -> SparsePoly:
    if p.nvars != q.nvars:
        raise DimensionError(f"variable-count mismatch: {p.nvars} vs {q.nvars}")
    return p + q


def poly_mul(p: SparsePoly, q: SparsePoly) -> SparsePoly:
    if p.nvars != q.nvars:
        raise DimensionError(f"variable-count mismatch: {p.nvars} vs {q.nvars}")
    return p * q


def poly_diff(p: SparsePoly, i: int) -> SparsePoly:
    return p.diff(i)


def restrict_zero(p: SparsePoly, variables: Iterable[int]) -> SparsePoly:
    return p.restrict_zero(variables)


def poly_eval(p: SparsePoly, point: Sequence[complex]) -> complex:
    return p(point)


class MonomialBasis:
    """Dense coordinates for all monomials of total degree ``<= degree``.

    Monomials are stored in graded-lex order. Polynomials become complex
    vectors indexed by this basis, so multiplication by a linear form and
    differentiation are vectorized gathers/scatters.
    """

    def __init__(self, nvars: int, degree: int):
        self.nvars = nvars
        self.degree = degree
        exps = [
            e
            for d in range(degree + 1)
            for e in _compositions(d, nvars)
        ]
        exps.sort(key=grlex_key)
        self.exponents = np.array(exps, dtype=np.int64).reshape(len(exps), nvars)
        self.index = {e: k for k, e in enumerate(exps)}
        self.size = len(exps)
        self.degrees = self.exponents.sum(axis=1)
        # raise_map[j][k] = index of monomial k times alpha_j, or -1 past the top degree
        self.raise_map = np.full((nvars, self.size), -1, dtype=np.int64)
        for k, e in enumerate(exps):
            if sum(e) < degree:
                for j in range(nvars):
                    up = list(e)
                    up[j] += 1
                    self.raise_map[j, k] = self.index[tuple(up)]

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size, dtype=complex)

    def one(self) -> np.ndarray:
        v = self.zeros()
        v[self.index[(0,) * self.nvars]] = 1.0
        return v

    def times_linear(self, coeffs: np.ndarray, form: np.ndarray) -> np.ndarray:
        """Multiply by ``sum_j form[j] * alpha_j``."""
        out = self.zeros()
        for j in range(self.nvars):
            if form[j] == 0:
                continue
            dest = self.raise_map[j]
            ok = dest >= 0
            if np.any(coeffs[~ok]):
                raise OverflowError("product exceeds the basis degree")
            out[dest[ok]] += form[j] * coeffs[ok]
        return out

    def diff(self, coeffs: np.ndarray, i: int) -> np.ndarray:
        out = self.zeros()
        src = self.raise_map[i]
        ok = src >= 0
        out[ok] = coeffs[src[ok]] * (self.exponents[ok, i] + 1)
        return out

    def to_poly(self, coeffs: np.ndarray, tol: float = ZERO_TOL) -> SparsePoly:
        nz = np.nonzero(np.abs(coeffs) >= tol)[0]
        return SparsePoly(
            {tuple(int(x) for x in self.exponents[k]): coeffs[k] for k in nz}, self.nvars, tol
        )

    def from_poly(self, p: SparsePoly) -> np.ndarray:
        if p.nvars != self.nvars:
            raise DimensionError("variable-count mismatch")
        out = self.zeros()
        for exp, c in p.terms.items():
            if exp not in self.index:
                raise OverflowError("polynomial degree exceeds the basis")
            out[self.index[exp]] = c
        return out


def _compositions(total: int, parts: int):
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)
