"""Numerical certification of involution, independence and the Poisson structure.

Two evaluations of the bracket are kept apart on purpose. The gradient form
lives in :mod:`gyrotop.poisson`; :func:`structure_matrix` below builds the
Poisson tensor entry by entry from the coordinate relations

    {M_ij, M_kl} = -(d_jk K_il - d_ik K_jl - d_jl K_ik + d_il K_jk),  K = M + L,

with ``Gamma`` in place of ``K`` for the mixed brackets and zero between
field coordinates. The two must agree.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lax
from .models import (
    ModelSpec,
    angular_velocity,
    euler_poisson_rhs,
    fourth_integral,
    hamiltonian_field,
    inertia_inverse,
    require_valid,
    symmetry_subalgebra,
    to_representation,
    vector_field,
)
from .poisson import (
    IntegralFamily,
    ModelMismatch,
    PhasePoint,
    ScalarField,
    bracket_grads,
    casimirs,
    coord_dim,
    fd_gradient,
    random_polynomial,
    total_momentum,
)
from .skew import inner, vee3

log = logging.getLogger(__name__)

RANK_RTOL = 1e-8

__all__ = [
    "RANK_RTOL",
    "bracket_gyro",
    "structure_matrix",
    "structure_bracket",
    "gradient_structure_matrix",
    "structure_relation_residual",
    "jacobi_residual",
    "extra_hamiltonians",
    "integrability_family",
    "asserted_pairs",
    "InvolutionReport",
    "involution_matrix",
    "gradient_singular_values",
    "independence_rank",
    "Completeness",
    "completeness_count",
    "poisson_rank",
    "expected_rank_oracle",
    "brute_force_rank",
    "poisson_map_check",
    "crosscheck_so3",
]


def bracket_gyro(spec: ModelSpec, x: PhasePoint) -> np.ndarray | None:
    """The shift entering the bracket at ``x``: ``L`` on magnetic points, none on standard ones."""
    return spec.L if x.representation == "magnetic" else None


# --- Poisson tensor from the coordinate relations -----------------------------------


def _so_pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _so_relation(i: int, j: int, k: int, l: int, A: np.ndarray) -> float:
    """``{X_ij, X_kl}`` for the so(n) relations with structure values ``A``."""
    out = 0.0
    if j == k:
        out -= A[i, l]
    if i == k:
        out += A[j, l]
    if j == l:
        out += A[i, k]
    if i == l:
        out -= A[j, k]
    return out


_EPS = np.zeros((3, 3, 3))
for _a, _b, _c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS[_a, _b, _c] = 1.0
    _EPS[_b, _a, _c] = -1.0


def structure_matrix(x: PhasePoint, gyro: np.ndarray | None = None) -> np.ndarray:
    """Matrix of coordinate brackets ``{z_a, z_b}`` at ``x`` in packed order."""
    model, n = x.model, x.n
    d = coord_dim(model, n)
    P = np.zeros((d, d))
    if model == "r3":
        K = x.momentum if gyro is None else x.momentum + gyro
        P[:3, :3] = -np.einsum("ijk,k->ij", _EPS, K)
        mixed = -np.einsum("ijk,k->ij", _EPS, x.field)
        P[:3, 3:] = mixed
        P[3:, :3] = -mixed.T
        return P
    K = x.momentum if gyro is None else x.momentum + gyro
    pairs = _so_pairs(n)
    m = len(pairs)
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            P[a, b] = _so_relation(i, j, k, l, K)
    if model == "so_so":
        for a, (i, j) in enumerate(pairs):
            for b, (k, l) in enumerate(pairs):
                v = _so_relation(i, j, k, l, x.field)
                P[a, m + b] = v
                P[m + b, a] = -v
    elif model == "e_n":
        g = x.field
        for a, (i, j) in enumerate(pairs):
            for k in range(n):
                v = (-g[i] if j == k else 0.0) + (g[j] if i == k else 0.0)
                P[a, m + k] = v
                P[m + k, a] = -v
    return P


def structure_bracket(F: ScalarField, G: ScalarField, x: PhasePoint, gyro: np.ndarray | None = None) -> float:
    """``{F, G}`` through :func:`structure_matrix` instead of the gradient form."""
    return float(F.grad(x).coords() @ structure_matrix(x, gyro) @ G.grad(x).coords())


def gradient_structure_matrix(x: PhasePoint, gyro: np.ndarray | None = None) -> np.ndarray:
    """Coordinate brackets ``{z_a, z_b}`` evaluated through the gradient form."""
    d = coord_dim(x.model, x.n)
    eye = np.eye(d)
    units = [PhasePoint.from_coords(x.model, x.n, eye[a], x.representation) for a in range(d)]
    P = np.zeros((d, d))
    for a in range(d):
        for b in range(a + 1, d):
            P[a, b] = bracket_grads(units[a], units[b], x, gyro)
            P[b, a] = bracket_grads(units[b], units[a], x, gyro)
    return P


def _literal_so(i: int, j: int, k: int, l: int, A: np.ndarray) -> float:
    """``{X_ij, X_kl}`` by cases: zero unless the pairs share exactly one index,
    otherwise reduced by antisymmetry to ``{X_as, X_sc} = -A_ac``."""
    shared = {i, j} & {k, l}
    if len(shared) != 1:
        return 0.0
    (s,) = shared
    a, sa = (i, 1.0) if j == s else (j, -1.0)
    c, sc = (l, 1.0) if k == s else (k, -1.0)
    return -sa * sc * A[a, c]


def _literal_r3(a: int, b: int, v: np.ndarray) -> float:
    """``{X_a, X_b} = -eps_abc v_c`` written out cyclically."""
    if b == (a + 1) % 3:
        return -v[(a + 2) % 3]
    if a == (b + 1) % 3:
        return v[(b + 2) % 3]
    return 0.0


def structure_relation_residual(x: PhasePoint, gyro: np.ndarray | None = None) -> float:
    """Max deviation of gradient-form coordinate brackets from the literal relations.

    Sweeps every ordered index tuple (``(i, j)`` and ``(j, i)`` both), so the
    antisymmetry of the coordinates is exercised along with the relations.
    """
    model, n = x.model, x.n
    P = gradient_structure_matrix(x, gyro)
    K = total_momentum(x, gyro) if gyro is not None else x.momentum
    worst = 0.0
    if model == "r3":
        g = x.field
        for a in range(3):
            for b in range(3):
                want = {
                    (0, 0): _literal_r3(a, b, K),
                    (0, 1): _literal_r3(a, b, g),
                    (1, 0): _literal_r3(a, b, g),
                    (1, 1): 0.0,
                }
                for (u, v), w in want.items():
                    worst = max(worst, abs(P[3 * u + a, 3 * v + b] - w))
        return worst

    pairs = _so_pairs(n)
    index = {p: q for q, p in enumerate(pairs)}
    m = len(pairs)

    def coord(i, j):
        return (index[(i, j)], 1.0) if i < j else (index[(j, i)], -1.0)

    ordered = [(i, j) for i in range(n) for j in range(n) if i != j]
    for i, j in ordered:
        a, sa = coord(i, j)
        for k, l in ordered:
            b, sb = coord(k, l)
            s = sa * sb
            worst = max(worst, abs(s * P[a, b] - _literal_so(i, j, k, l, K)))
            if model == "so_so":
                G = x.field
                worst = max(worst, abs(s * P[a, m + b] - _literal_so(i, j, k, l, G)))
                worst = max(worst, abs(s * P[m + a, b] + _literal_so(k, l, i, j, G)))
                worst = max(worst, abs(s * P[m + a, m + b]))
        if model == "e_n":
            g = x.field
            for k in range(n):
                want = -g[i] if k == j else (g[j] if k == i else 0.0)
                worst = max(worst, abs(sa * P[a, m + k] - want))
                worst = max(worst, abs(sa * P[m + k, a] + want))
    if model == "e_n":
        worst = max(worst, float(np.max(np.abs(P[m:, m:]))))
    return worst


def jacobi_residual(x: PhasePoint, gyro: np.ndarray | None, rng: np.random.Generator, triples: int = 20) -> float:
    """Max ``|{F,{G,H}} + {G,{H,F}} + {H,{F,G}}|`` over random linear ``F, G, H``.

    The bracket of two linear functions is affine in the point, so its
    gradient is read off exactly from the gradient-form tensor at unit points.
    """
    d = coord_dim(x.model, x.n)
    P0 = gradient_structure_matrix(PhasePoint.from_coords(x.model, x.n, np.zeros(d), x.representation), gyro)
    D = np.array([
        gradient_structure_matrix(PhasePoint.from_coords(x.model, x.n, np.eye(d)[c], x.representation), gyro) - P0
        for c in range(d)
    ])
    P = gradient_structure_matrix(x, gyro)

    def outer(f, g, h):
        return float(f @ P @ np.einsum("cab,a,b->c", D, g, h))

    worst = 0.0
    for _ in range(triples):
        f, g, h = (rng.uniform(-1, 1, d) for _ in range(3))
        worst = max(worst, abs(outer(f, g, h) + outer(g, h, f) + outer(h, f, g)))
    return worst


# --- the families being certified -----------------------------------------------------


def extra_hamiltonians(spec: ModelSpec) -> IntegralFamily:
    """``H_0`` (the Hamiltonian without gyroscope, in ``K``) and ``H_h = <I^-1 L, K>``.

    On standard points ``H = H_0 - H_h``.
    """
    chi = spec.chi

    def h0(x):
        K = total_momentum(x, spec.L)
        pot = 0.0
        if spec.model == "so_so":
            pot = inner(chi, x.field)
        elif spec.model in ("e_n", "r3"):
            pot = float(np.dot(chi, x.field))
        if spec.classical:
            return 0.5 * float(K @ (K / spec.J)) + pot
        return 0.5 * inner(K, inertia_inverse(spec, K)) + pot

    def h0_grad(x):
        K = total_momentum(x, spec.L)
        return x.replace(momentum=inertia_inverse(spec, K), field=None if x.field is None else np.array(chi, dtype=float))

    a = inertia_inverse(spec, spec.L)

    def hh(x):
        K = total_momentum(x, spec.L)
        return float(K @ a) if spec.classical else inner(K, a)

    def hh_grad(x):
        return x.replace(momentum=a.copy(), field=None if x.field is None else np.zeros_like(x.field))

    return IntegralFamily([
        ScalarField("H0", "hamiltonian", h0, h0_grad),
        ScalarField("Hh", "hamiltonian", hh, hh_grad),
    ])


def integrability_family(spec: ModelSpec, commutative: bool = False) -> IntegralFamily:
    """Casimirs, Hamiltonians, spectral invariants, shift and Noether integrals of ``spec``.

    With ``commutative=True`` the Noether functions are dropped when h is not
    commutative, leaving a family that Poisson-commutes pairwise.
    """
    require_valid(spec)
    fam = casimirs(spec.model, spec.n, spec.L) + IntegralFamily([hamiltonian_field(spec)])
    if spec.classical:
        return fam + IntegralFamily([fourth_integral(spec)])
    fam = fam + extra_hamiltonians(spec) + lax.spectral_invariants(spec)
    shift = lax.shift_integrals(spec)
    fam = fam + shift.of_kind("shift")
    if not commutative or symmetry_subalgebra(spec).commutative:
        fam = fam + shift.of_kind("noether")
    return fam


def asserted_pairs(spec: ModelSpec, fam: IntegralFamily) -> np.ndarray:
    """Mask of pairs whose bracket the integrability theorems assert to vanish.

    Casimirs commute with everything. The spectral invariants, ``H_0``, ``H``,
    ``H_h`` and the shift integrals commute pairwise. Noether functions always
    commute with ``H_0`` and the spectral invariants; with each other, with
    ``H``, ``H_h`` and with the shift integrals only when h is commutative.
    """
    k = len(fam)
    mask = np.ones((k, k), dtype=bool)
    if spec.classical or symmetry_subalgebra(spec).commutative:
        return mask
    free = {"noether", "shift"}
    for a, F in enumerate(fam):
        for b, G in enumerate(fam):
            if a == b or "casimir" in (F.kind, G.kind):
                continue
            if "noether" in (F.kind, G.kind):
                other = G if F.kind == "noether" else F
                if other.kind in free or (other.kind == "hamiltonian" and other.label != "H0"):
                    mask[a, b] = False
    return mask


@dataclass(frozen=True)
class InvolutionReport:
    labels: list[str]
    kinds: list[str]
    matrix: np.ndarray  # max |{f_i, f_j}| over the points
    asserted: np.ndarray
    normalized: np.ndarray  # max |{f_i, f_j}| / (|grad f_i| |grad f_j|)

    def max_asserted(self, normalized: bool = False) -> float:
        vals = (self.normalized if normalized else self.matrix)[self.asserted]
        return float(vals.max()) if vals.size else 0.0

    def worst_pair(self) -> tuple[str, str, float]:
        m = np.where(self.asserted, self.matrix, -1.0)
        a, b = np.unravel_index(int(np.argmax(m)), m.shape)
        return self.labels[a], self.labels[b], float(self.matrix[a, b])

    def failures(self, tol: float) -> list[tuple[str, str, float]]:
        out = []
        for a in range(len(self.labels)):
            for b in range(a + 1, len(self.labels)):
                if self.asserted[a, b] and self.matrix[a, b] > tol:
                    out.append((self.labels[a], self.labels[b], float(self.matrix[a, b])))
        return out


def involution_matrix(spec: ModelSpec, fam: IntegralFamily, points: Sequence[PhasePoint]) -> InvolutionReport:
    """Max over ``points`` of ``|{f_i, f_j}|`` using the analytic gradients."""
    k = len(fam)
    out = np.zeros((k, k))
    rel = np.zeros((k, k))
    for x in points:
        if x.model != spec.model or x.n != spec.n:
            raise ModelMismatch(f"point {x!r} does not belong to {spec.family}")
        gyro = bracket_gyro(spec, x)
        grads = [F.grad(x) for F in fam]
        norms = [float(np.linalg.norm(g.coords())) for g in grads]
        for a in range(k):
            for b in range(a + 1, k):
                v = abs(bracket_grads(grads[a], grads[b], x, gyro))
                out[a, b] = out[b, a] = max(out[a, b], v)
                scale = norms[a] * norms[b]
                r = v / scale if scale > 0 else 0.0
                rel[a, b] = rel[b, a] = max(rel[a, b], r)
    return InvolutionReport(fam.labels, [F.kind for F in fam], out, asserted_pairs(spec, fam), rel)


# --- independence ----------------------------------------------------------------------


def gradient_singular_values(fam: IntegralFamily, x: PhasePoint, normalize: bool = True) -> np.ndarray:
    """Singular values of the stacked gradients; rows are scaled to unit norm first."""
    rows = np.array([F.grad(x).coords() for F in fam])
    if normalize:
        norms = np.linalg.norm(rows, axis=1)
        rows = rows[norms > 0] / norms[norms > 0, None]
    if rows.size == 0:
        return np.zeros(0)
    return np.linalg.svd(rows, compute_uv=False)


def independence_rank(fam: IntegralFamily, x: PhasePoint, rtol: float = RANK_RTOL) -> int:
    """Number of singular values above ``rtol * sigma_max``."""
    s = gradient_singular_values(fam, x)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass(frozen=True)
class Completeness:
    leaf_dim: int
    dof: int
    casimirs: int
    expected_rank: int


def completeness_count(spec: ModelSpec) -> Completeness:
    """Generic leaf dimension, degrees of freedom and the rank a complete family reaches."""
    n = spec.n
    if spec.model == "so_so":
        leaf, cas = n * (n - 1) - 2 * (n // 2), 2 * (n // 2)
    elif spec.model == "e_n":
        cas = (n + 1) // 2
        leaf = n * (n - 1) // 2 + n - cas
    elif spec.model == "so":
        cas = n // 2
        leaf = n * (n - 1) // 2 - cas
    else:
        leaf, cas = 4, 2
    return Completeness(leaf, leaf // 2, cas, leaf // 2 + cas)


def poisson_rank(x: PhasePoint, gyro: np.ndarray | None = None, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(structure_matrix(x, gyro), compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0


def expected_rank_oracle(spec: ModelSpec, points: Sequence[PhasePoint]) -> Completeness:
    """Leaf dimension measured as the generic rank of the Poisson tensor.

    Independent of the closed formulas in :func:`completeness_count`: the
    Casimir count is whatever the tensor leaves over.
    """
    leaf = max(poisson_rank(x, bracket_gyro(spec, x)) for x in points)
    d = coord_dim(spec.model, spec.n)
    return Completeness(leaf, leaf // 2, d - leaf, leaf // 2 + d - leaf)


def brute_force_rank(fam: IntegralFamily, x: PhasePoint, rtol: float = 1e-6) -> int:
    """Rank of finite-difference gradients, a check on the analytic ones.

    Central differences carry errors near ``1e-9`` relative, hence the looser threshold.
    """
    rows = np.array([fd_gradient(F, x).coords() for F in fam])
    norms = np.linalg.norm(rows, axis=1)
    rows = rows[norms > 0] / norms[norms > 0, None]
    s = np.linalg.svd(rows, compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s.size else 0


# --- Poisson map and the n = 3 dictionary ---------------------------------------------------


def poisson_map_check(gyro: np.ndarray, points: Sequence[PhasePoint], rng: np.random.Generator,
                      pairs: int = 50, shift_factor: float = 1.0) -> float:
    """Max of ``|{F o phi, G o phi}_L - {F, G}_0 o phi|`` with ``phi(M, Gamma) = (M + c L, Gamma)``.

    Both sides use :func:`structure_matrix`. ``shift_factor`` is ``c``; only
    ``c = 1`` is a Poisson map, other values serve as a control.
    """
    if not points:
        raise ValueError("need at least one point")
    gyro = np.asarray(gyro, dtype=float)
    model, n = points[0].model, points[0].n
    polys = [(random_polynomial(model, n, rng), random_polynomial(model, n, rng)) for _ in range(pairs)]
    worst = 0.0
    for x in points:
        if x.representation != "magnetic":
            raise ValueError("poisson_map_check expects magnetic points")
        y = x.replace(momentum=x.momentum + shift_factor * gyro, representation="standard")
        lhs_tensor = structure_matrix(x, gyro)
        rhs_tensor = structure_matrix(y, None)
        for F, G in polys:
            # gradients of F o phi at x equal those of F at phi(x): phi is a translation
            gF, gG = F.grad(y).coords(), G.grad(y).coords()
            worst = max(worst, abs(float(gF @ lhs_tensor @ gG) - float(gF @ rhs_tensor @ gG)))
    return worst


def _vec(a: np.ndarray | None) -> np.ndarray:
    if a is None:
        return np.zeros(3)
    a = np.asarray(a, dtype=float)
    return a if a.ndim == 1 else vee3(a)


def classical_inertia(spec: ModelSpec) -> np.ndarray:
    """Principal moments acting on ``vee3`` coordinates: ``I_1 = J_2 + J_3`` and cyclic."""
    J = spec.J
    return np.array([J[1] + J[2], J[0] + J[2], J[0] + J[1]])


def crosscheck_so3(spec: ModelSpec, x: PhasePoint) -> float:
    """Compare the matrix field (through ``vee3``) with the vector Euler-Poisson field."""
    if spec.classical or spec.n != 3:
        raise ValueError(f"crosscheck_so3 needs a matrix model with n=3, got {spec.family} n={spec.n}")
    xm = to_representation(spec, x, "magnetic")
    dot = vector_field(spec, xm)
    I = classical_inertia(spec)
    m = vee3(xm.momentum)
    g = _vec(xm.field)
    chi = _vec(spec.chi)
    dm, dg = euler_poisson_rhs(I, chi, vee3(spec.L), m, g)
    res = float(np.max(np.abs(vee3(dot.momentum) - dm)))
    if xm.field is not None:
        res = max(res, float(np.max(np.abs(_vec(dot.field) - dg))))
    om = vee3(angular_velocity(spec, xm))
    res = max(res, float(np.max(np.abs(om - m / I))))
    return res
