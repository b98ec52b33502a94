"""Input validation helpers shared across modules."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

SYMMETRY_TOL = 1e-10


class DimensionError(ValueError):
    """Raised when array shapes or variable counts do not line up."""


def check_finite(arr, what: str = "input") -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains NaN or Inf")


def as_symmetric(B, tol: float = SYMMETRY_TOL) -> np.ndarray:
    """Return ``B`` as a read-only complex symmetric array.

    The upper triangle is authoritative; it is mirrored to the lower one so
    that ``B[i, j] == B[j, i]`` holds exactly.
    """
    B = np.array(B, dtype=complex, ndmin=2)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {B.shape}")
    check_finite(B, "matrix")
    scale = max(1.0, float(np.abs(B).max(initial=0.0)))
    if np.abs(B - B.T).max(initial=0.0) > tol * scale:
        raise ValueError("matrix is not symmetric")
    B = np.triu(B) + np.triu(B, 1).T
    B.setflags(write=False)
    return B


def multi_index(counts: Iterable[int]) -> tuple[int, ...]:
    """Validate a photon-count vector and return it as a tuple."""
    out = tuple(int(c) for c in counts)
    if any(c < 0 for c in out):
        raise ValueError(f"negative photon count in {out}")
    return out


def pad_index(n: Sequence[int], nvars: int) -> tuple[int, ...]:
    n = multi_index(n)
    if len(n) > nvars:
        raise DimensionError(f"multi-index of length {len(n)} exceeds {nvars} variables")
    return n + (0,) * (nvars - len(n))
