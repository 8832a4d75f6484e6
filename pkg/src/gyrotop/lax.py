"""Polynomial Lax pairs and the first integrals they generate.

Products of matrix polynomials are computed by coefficient convolution, never
by sampling ``lambda``. Gradients of ``tr(P(x)^m)`` use the cyclic-trace rule
``d tr(P^m) = m tr(P^(m-1) dP)``, read off per power of ``lambda``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .models import (
    ModelSpec,
    angular_velocity,
    inertia_inverse,
    symmetry_subalgebra,
    to_representation,
    vector_field,
    require_valid,
)
from .poisson import IntegralFamily, PhasePoint, ScalarField, skew_gradient, total_momentum
from .skew import Subalgebra, inner

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LaxPolynomial:
    """``C_0 + lambda C_1 + ... + lambda^d C_d`` with square matrix coefficients."""

    coeffs: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, lam: float) -> np.ndarray:
        out = np.zeros_like(self.coeffs[-1])
        for c in reversed(self.coeffs):
            out = out * lam + c
        return out

    def __matmul__(self, other: "LaxPolynomial") -> "LaxPolynomial":
        return LaxPolynomial(tuple(convolve(self.coeffs, other.coeffs)))

    def __sub__(self, other: "LaxPolynomial") -> "LaxPolynomial":
        m = max(len(self.coeffs), len(other.coeffs))
        z = np.zeros_like(self.coeffs[0])
        a = list(self.coeffs) + [z] * (m - len(self.coeffs))
        b = list(other.coeffs) + [z] * (m - len(other.coeffs))
        return LaxPolynomial(tuple(x - y for x, y in zip(a, b)))

    def commutator(self, other: "LaxPolynomial") -> "LaxPolynomial":
        return (self @ other) - (other @ self)

    def trace(self) -> np.ndarray:
        return np.array([np.trace(c) for c in self.coeffs])


def convolve(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> list[np.ndarray]:
    out = [np.zeros((a[0].shape[0], b[0].shape[1])) for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x @ y
    return out


def powers(p: Sequence[np.ndarray], m: int) -> list[list[np.ndarray]]:
    """``[p^0, p^1, ..., p^m]`` as coefficient lists."""
    out = [[np.eye(p[0].shape[0])]]
    for _ in range(m):
        out.append(convolve(out[-1], p))
    return out


# --- hatted embedding of e(n) into so(n+1) ------------------------------------------


def hat_matrix(xi: np.ndarray) -> np.ndarray:
    n = xi.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = xi
    return out


def hat_vector(eta: np.ndarray) -> np.ndarray:
    n = eta.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[:n, n] = eta
    out[n, :n] = -eta
    return out


# --- Lax pairs --------------------------------------------------------------------


def _heavy_coefficient(spec: ModelSpec) -> float:
    if spec.family == "totally_symmetric":
        return 2.0 * spec.alpha[0]
    return spec.alpha[0] + spec.alpha[1]


def build_lax(spec: ModelSpec, x: PhasePoint, check: bool = True) -> tuple[LaxPolynomial, LaxPolynomial]:
    """Lax pair ``(L(lambda), A(lambda))`` at ``x``; standard points are converted to ``M``."""
    if check:
        require_valid(spec)
    x = to_representation(spec, x, "magnetic")
    om = angular_velocity(spec, x)
    f = spec.family
    if f == "manakov_gyro":
        J = np.diag(spec.J)
        return LaxPolynomial((x.momentum + spec.L, J @ J)), LaxPolynomial((om, J))
    if f in ("lagrange_so_so", "bitop", "totally_symmetric"):
        c = _heavy_coefficient(spec)
        lax = LaxPolynomial((np.array(x.field), x.momentum + spec.L, c * spec.chi))
        return lax, LaxPolynomial((om, np.array(spec.chi)))
    if f == "belyaev_e_n":
        c = _heavy_coefficient(spec)
        chi = hat_vector(spec.chi)
        lax = LaxPolynomial((hat_vector(x.field), hat_matrix(x.momentum + spec.L), c * chi))
        return lax, LaxPolynomial((hat_matrix(om), chi))
    raise ValueError(f"no Lax pair for {f}")


def _lax_derivative(spec: ModelSpec, xdot: PhasePoint, degree: int) -> LaxPolynomial:
    f = spec.family
    n = spec.n
    if f == "manakov_gyro":
        return LaxPolynomial((xdot.momentum, np.zeros((n, n))))
    if f == "belyaev_e_n":
        z = np.zeros((n + 1, n + 1))
        return LaxPolynomial((hat_vector(xdot.field), hat_matrix(xdot.momentum), z))
    return LaxPolynomial((np.array(xdot.field), np.array(xdot.momentum), np.zeros((n, n))))


def lax_residual_coefficients(spec: ModelSpec, x: PhasePoint, check: bool = True) -> list[float]:
    """Frobenius norm of ``dL/dt - [L, A]`` per power of lambda."""
    lax, a = build_lax(spec, x, check)
    xm = to_representation(spec, x, "magnetic")
    dot = _lax_derivative(spec, vector_field(spec, xm), lax.degree)
    diff = dot - lax.commutator(a)
    return [float(np.linalg.norm(c)) for c in diff.coeffs]


def lax_residual(spec: ModelSpec, x: PhasePoint, check: bool = True) -> float:
    return max(lax_residual_coefficients(spec, x, check))


# --- trace-power integrals --------------------------------------------------------


@dataclass(frozen=True)
class _Slot:
    """One lambda-coefficient of a Lax matrix as a function of the phase point."""

    source: str  # "momentum" | "field" | "const"
    skew: bool
    const: np.ndarray | None = None
    grade: int = 0  # block grading in so(n+1): 1 for off-diagonal (border) coefficients


def _surviving_powers(slots: Sequence[_Slot], m: int) -> list[int]:
    """Powers of lambda in ``tr(L^m)`` that are not identically constant.

    A coefficient survives when some multiset of ``m`` slots with the right
    total degree uses a phase-space slot, has an even number of skew factors
    (odd words cancel against their reversals) and has even total grade (odd
    words are block off-diagonal, hence traceless).
    """
    keep = set()
    d = len(slots)
    for counts in product(range(m + 1), repeat=d):
        if sum(counts) != m:
            continue
        if not any(counts[a] and slots[a].source != "const" for a in range(d)):
            continue
        if sum(counts[a] for a in range(d) if slots[a].skew) % 2:
            continue
        if sum(counts[a] * slots[a].grade for a in range(d)) % 2:
            continue
        keep.add(sum(a * counts[a] for a in range(d)))
    return sorted(keep)


class _TracePowers:
    """Shared evaluation of ``tr(L(lambda)^m)`` and its cyclic-trace gradients."""

    def __init__(self, slots: Sequence[_Slot], embed: Callable, adjoint: Callable, mmax: int,
                 coords: Callable[[PhasePoint], tuple[np.ndarray, np.ndarray | None]]):
        self.slots = list(slots)
        self.embed = embed
        self.adjoint = adjoint
        self.mmax = mmax
        self.coords = coords
        self._last: tuple[bytes, list] | None = None

    def chain(self, x: PhasePoint) -> list[list[np.ndarray]]:
        key = x.coords().tobytes() + x.representation.encode()
        last = self._last
        if last is not None and last[0] == key:
            return last[1]
        mom, fld = self.coords(x)
        coeffs = []
        for s in self.slots:
            if s.source == "const":
                coeffs.append(s.const)
            elif s.source == "momentum":
                coeffs.append(self.embed("momentum", mom))
            else:
                coeffs.append(self.embed("field", fld))
        chain = powers(coeffs, self.mmax)
        self._last = (key, chain)
        return chain

    def value(self, x: PhasePoint, m: int, c: int) -> float:
        p = self.chain(x)[m]
        return float(np.trace(p[c])) if c < len(p) else 0.0

    def grad(self, x: PhasePoint, m: int, c: int) -> PhasePoint:
        p = self.chain(x)[m - 1]
        parts = {}
        for a, s in enumerate(self.slots):
            if s.source == "const":
                continue
            j = c - a
            g = m * p[j].T if 0 <= j < len(p) else np.zeros_like(p[0])
            parts[s.source] = self.adjoint(s.source, g)
        return x.replace(momentum=parts.get("momentum", np.zeros_like(x.momentum)),
                         field=parts.get("field", None if x.field is None else np.zeros_like(x.field)))


def _trace_family(engine: _TracePowers, kind: str, prefix: str, ks: Sequence[int],
                  odd: bool = False) -> IntegralFamily:
    """Surviving coefficients of ``tr(L^(2k))`` (or ``tr(L^(2k+1))`` with ``odd``) for ``k`` in ``ks``."""
    fields = []
    for k in ks:
        m = 2 * k + 1 if odd else 2 * k
        kept = _surviving_powers(engine.slots, m)
        top = (len(engine.slots) - 1) * m
        dropped = [c for c in range(top + 1) if c not in kept]
        if dropped:
            log.debug("%s k=%d: dropping identically constant coefficients %s", prefix, k, dropped)
        for c in kept:
            fields.append(ScalarField(
                f"{prefix}{k}[{c}]", kind,
                lambda x, m=m, c=c: engine.value(x, m, c),
                lambda x, m=m, c=c: engine.grad(x, m, c),
            ))
    return IntegralFamily(fields)


def spectral_invariants(spec: ModelSpec) -> IntegralFamily:
    """Lambda-coefficients of ``tr(L_0(lambda)^(2k))``, ``L_0`` the Lax matrix in ``K`` with ``L = 0``.

    For the Manakov family ``L_0 = K + lambda J^2`` is not skew and the odd
    powers ``tr(L_0^(2k+1))`` are added; without them the family falls short
    of completeness for some block patterns, e.g. ``(2, 2, 2)``.
    """
    require_valid(spec)
    n, f = spec.n, spec.family

    def coords(x):
        return total_momentum(x, spec.L), x.field

    if f == "manakov_gyro":
        # K + lambda J^2 is not skew, so odd powers carry integrals too (in their odd coefficients)
        J2 = np.diag(spec.J ** 2)
        slots = [_Slot("momentum", True), _Slot("const", False, J2)]
        engine = _TracePowers(slots, lambda s, v: v, lambda s, g: skew_gradient(g), n, coords)
        return (_trace_family(engine, "spectral", "tr(K+lJ^2)^2k:", range(1, n // 2 + 1))
                + _trace_family(engine, "spectral", "tr(K+lJ^2)^(2k+1):", range(1, (n - 1) // 2 + 1), odd=True))
    c = _heavy_coefficient(spec)
    if f in ("lagrange_so_so", "bitop", "totally_symmetric"):
        slots = [_Slot("field", True), _Slot("momentum", True), _Slot("const", True, c * spec.chi)]
        engine = _TracePowers(slots, lambda s, v: v, lambda s, g: skew_gradient(g), 2 * (n // 2), coords)
        return _trace_family(engine, "spectral", "trL^2k:", range(1, n // 2 + 1))
    if f == "belyaev_e_n":
        def embed(s, v):
            return hat_matrix(v) if s == "momentum" else hat_vector(v)

        def adjoint(s, g):
            if s == "momentum":
                return skew_gradient(g[:n, :n])
            return g[:n, n] - g[n, :n]

        slots = [_Slot("field", True, grade=1), _Slot("momentum", True),
                 _Slot("const", True, c * hat_vector(spec.chi), grade=1)]
        kmax = (n + 1) // 2
        engine = _TracePowers(slots, embed, adjoint, 2 * kmax, coords)
        return _trace_family(engine, "spectral", "trL^2k:", range(1, kmax + 1))
    raise ValueError(f"no spectral invariants for {f}")


def noether_integrals(spec: ModelSpec, h: Subalgebra | None = None) -> IntegralFamily:
    """Linear functions ``<K, b>`` for an orthonormal basis ``b`` of h."""
    h = h or symmetry_subalgebra(spec)
    out = []
    for idx, b in enumerate(h.basis):
        ij = np.argwhere(np.triu(b != 0, 1))
        label = f"N{ij[0][0] + 1}{ij[0][1] + 1}" if len(ij) == 1 else f"N#{idx}"

        def value(x, b=b):
            return inner(total_momentum(x, spec.L), b)

        def grad(x, b=b):
            return x.replace(momentum=b.copy(), field=None if x.field is None else np.zeros_like(x.field))

        out.append(ScalarField(label, "noether", value, grad))
    return IntegralFamily(out)


def shift_integrals(spec: ModelSpec) -> IntegralFamily:
    """Argument-shift integrals ``tr((K_h + lambda I^-1 L)^(2i))`` plus the Noether functions.

    With ``L = 0`` only the Noether functions are returned.
    """
    require_valid(spec)
    if spec.classical:
        raise ValueError(f"{spec.family} has no symmetry-subalgebra integrals")
    h = symmetry_subalgebra(spec)
    noether = noether_integrals(spec, h)
    if not np.any(spec.L):
        return noether
    n = spec.n
    shift = inertia_inverse(spec, spec.L)

    def coords(x):
        return h.project(total_momentum(x, spec.L)), None

    slots = [_Slot("momentum", True), _Slot("const", True, shift)]
    engine = _TracePowers(slots, lambda s, v: v, lambda s, g: h.project(skew_gradient(g)), 2 * (n // 2), coords)
    return _trace_family(engine, "shift", "tr(Kh+lI^-1L)^2i:", range(1, n // 2 + 1)) + noether
