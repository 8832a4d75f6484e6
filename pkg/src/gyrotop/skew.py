"""Small-matrix algebra over so(n).

Matrices are plain ``numpy`` arrays. Every constructor here writes the upper
triangle and mirrors it, so skew symmetry holds exactly rather than to
rounding error.

Sign conventions
----------------
``wedge(u, v)[i, j] = u[i] v[j] - u[j] v[i]`` and ``hat3(v) @ x = v x x``.
Together they give ``wedge(e1, e2) == -hat3(e3)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "skew",
    "is_skew",
    "skew_from_entries",
    "basis_bivector",
    "wedge",
    "commutator",
    "inner",
    "pack",
    "unpack",
    "SymmetryPattern",
    "Subalgebra",
    "project",
    "hat3",
    "vee3",
]


def skew(a: np.ndarray) -> np.ndarray:
    """Return the skew matrix carrying the strict upper triangle of ``a``."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    upper = np.triu(a, 1)
    return upper - upper.T


def is_skew(a: np.ndarray) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(np.all(a == -a.T))


def skew_from_entries(n: int, entries: Iterable[Sequence[float]]) -> np.ndarray:
    """Build a skew matrix from 1-indexed ``(i, j, value)`` triples.

    ``(i, j, v)`` with ``i > j`` is stored as ``(j, i, -v)``. Repeated pairs
    accumulate.
    """
    out = np.zeros((n, n))
    for i, j, v in entries:
        i, j = int(i) - 1, int(j) - 1
        if not (0 <= i < n and 0 <= j < n) or i == j:
            raise ValueError(f"bad index pair ({i + 1}, {j + 1}) for n={n}")
        if i > j:
            i, j, v = j, i, -v
        out[i, j] += v
    return skew(out)


def basis_bivector(n: int, i: int, j: int) -> np.ndarray:
    """``E_i ^ E_j`` with 0-based indices."""
    out = np.zeros((n, n))
    out[i, j] = 1.0
    out[j, i] = -1.0
    return out


def wedge(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"wedge needs two vectors of equal length, got {u.shape}, {v.shape}")
    return np.outer(u, v) - np.outer(v, u)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``[a, b] = ab - ba`` for skew ``a`` and ``b``; the result is re-mirrored."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return skew(a @ b - b @ a)


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Invariant scalar product ``-tr(ab)/2`` on so(n)."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return -0.5 * float(np.sum(a * b.T))


def pack(a: np.ndarray) -> np.ndarray:
    """Strict upper triangle, row-major. Orthonormal coordinates for ``inner``."""
    n = a.shape[0]
    return a[np.triu_indices(n, 1)].copy()


def unpack(v: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    out[np.triu_indices(n, 1)] = v
    return out - out.T


@dataclass(frozen=True)
class SymmetryPattern:
    """Block structure ``J = diag(a1 * Id_l1, ..., ap * Id_lp)``."""

    lengths: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.lengths) != len(self.values):
            raise ValueError("lengths and values differ in count")
        if any(l <= 0 for l in self.lengths):
            raise ValueError(f"block lengths must be positive: {self.lengths}")
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"block values must be pairwise distinct: {self.values}")

    @property
    def n(self) -> int:
        return sum(self.lengths)

    @classmethod
    def from_diagonal(cls, diag: Sequence[float]) -> "SymmetryPattern":
        """Group consecutive equal entries. Raises if a value recurs in a later block."""
        lengths: list[int] = []
        values: list[float] = []
        for d in diag:
            d = float(d)
            if values and values[-1] == d:
                lengths[-1] += 1
            else:
                lengths.append(1)
                values.append(d)
        return cls(tuple(lengths), tuple(values))

    def block_of(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.lengths)), self.lengths)

    def mask(self) -> np.ndarray:
        """Boolean n x n mask of entries inside a diagonal block."""
        b = self.block_of()
        return b[:, None] == b[None, :]

    def diagonal(self) -> np.ndarray:
        return np.repeat(np.asarray(self.values, dtype=float), self.lengths)

    @cached_property
    def subalgebra(self) -> "Subalgebra":
        return Subalgebra.blocks(self.lengths)


def project(pattern: SymmetryPattern, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split ``x`` into its block-diagonal part and the remainder."""
    if pattern.n != x.shape[0]:
        raise ValueError(f"pattern has n={pattern.n}, matrix has n={x.shape[0]}")
    xh = np.where(pattern.mask(), x, 0.0)
    return xh, x - xh


@dataclass(frozen=True)
class Subalgebra:
    """Subalgebra of so(n) given by a basis orthonormal for ``inner``."""

    n: int
    basis: tuple[np.ndarray, ...]
    commutative: bool

    @classmethod
    def blocks(cls, lengths: Sequence[int]) -> "Subalgebra":
        """so(l1) + ... + so(lp) embedded block-diagonally."""
        n = sum(lengths)
        b = np.repeat(np.arange(len(lengths)), lengths)
        basis = [basis_bivector(n, i, j) for i in range(n) for j in range(i + 1, n) if b[i] == b[j]]
        return cls(n, tuple(basis), commutative=all(l <= 2 for l in lengths))

    @classmethod
    def centralizer(cls, x: np.ndarray, tol: float = 1e-10) -> "Subalgebra":
        """``{y in so(n) : [y, x] = 0}`` via the null space of ``ad_x``."""
        n = x.shape[0]
        d = n * (n - 1) // 2
        ad = np.empty((d, d))
        for c in range(d):
            e = np.zeros(d)
            e[c] = 1.0
            ad[:, c] = pack(commutator(unpack(e, n), x))
        _, s, vt = np.linalg.svd(ad)
        scale = max(s[0] if s.size else 0.0, 1.0)
        null = vt[s <= tol * scale]
        basis = tuple(unpack(v, n) for v in null)
        comm = all(
            np.max(np.abs(commutator(a, b))) <= 1e-9 for k, a in enumerate(basis) for b in basis[k + 1:]
        )
        return cls(n, basis, comm)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def project(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        for b in self.basis:
            out += inner(x, b) * b
        return skew(out)

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        scale = max(1.0, float(np.max(np.abs(x))))
        return float(np.max(np.abs(x - self.project(x)))) <= tol * scale


def hat3(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"hat3 needs a 3-vector, got shape {v.shape}")
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee3(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (3, 3):
        raise ValueError(f"vee3 needs a 3x3 matrix, got shape {a.shape}")
    if not is_skew(a):
        raise ValueError("vee3 needs a skew-symmetric matrix")
    return np.array([a[2, 1], a[0, 2], a[1, 0]])
