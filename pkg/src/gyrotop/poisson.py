"""Lie-Poisson brackets on (so(n) x so(n))*, e(n)*, so(n)* and R^3 x R^3.

Gradients are taken with respect to the pairing of each phase space, so a
gradient lives in the same space as a point and ``dF(x)[v] = <grad F(x), v>``.
In packed coordinates (strict upper triangles, then the field part) the
pairing is the plain dot product.

The magnetic bracket with gyroscope momentum ``L`` reads, for the so x so
model::

    {F, G}_L = -<M + L, [F_M, G_M]> - <Gamma, [F_M, G_Gamma] + [F_Gamma, G_M]>

and ``L = 0`` gives the standard bracket in the variables ``K = M + L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from itertools import combinations
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .skew import commutator, inner, is_skew, pack, unpack

MODELS = ("so_so", "e_n", "so", "r3")
REPRESENTATIONS = ("magnetic", "standard")
KINDS = ("casimir", "noether", "spectral", "shift", "hamiltonian", "classical", "other")


class ModelMismatch(ValueError):
    pass


def coord_dim(model: str, n: int) -> int:
    m = n * (n - 1) // 2
    if model == "so_so":
        return 2 * m
    if model == "e_n":
        return m + n
    if model == "so":
        return m
    if model == "r3":
        return 6
    raise ModelMismatch(f"unknown model {model!r}")


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A point (or tangent vector) of one of the phase spaces.

    ``momentum`` is ``M`` in the magnetic representation and ``K = M + L`` in
    the standard one. ``field`` is the skew matrix ``Gamma`` (so_so), the
    vector ``Gamma`` (e_n, r3), or ``None`` (so).
    """

    model: str
    momentum: np.ndarray
    field: np.ndarray | None = None
    representation: str = "magnetic"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ModelMismatch(f"unknown model {self.model!r}")
        if self.representation not in REPRESENTATIONS:
            raise ValueError(f"unknown representation {self.representation!r}")
        m = np.array(self.momentum, dtype=float)
        f = None if self.field is None else np.array(self.field, dtype=float)
        if self.model == "r3":
            if m.shape != (3,) or f is None or f.shape != (3,):
                raise ValueError("r3 points need two 3-vectors")
        else:
            if not is_skew(m):
                raise ValueError("momentum must be an exactly skew square matrix")
            n = m.shape[0]
            if self.model == "so_so" and (f is None or f.shape != (n, n) or not is_skew(f)):
                raise ValueError("so_so field must be an exactly skew n x n matrix")
            if self.model == "e_n" and (f is None or f.shape != (n,)):
                raise ValueError("e_n field must be an n-vector")
            if self.model == "so" and f is not None:
                raise ValueError("so points carry no field")
        if not np.all(np.isfinite(m)) or (f is not None and not np.all(np.isfinite(f))):
            raise ValueError("non-finite phase point")
        m.flags.writeable = False
        if f is not None:
            f.flags.writeable = False
        object.__setattr__(self, "momentum", m)
        object.__setattr__(self, "field", f)

    @property
    def n(self) -> int:
        return 3 if self.model == "r3" else self.momentum.shape[0]

    def coords(self) -> np.ndarray:
        if self.model == "r3":
            return np.concatenate([self.momentum, self.field])
        parts = [pack(self.momentum)]
        if self.model == "so_so":
            parts.append(pack(self.field))
        elif self.model == "e_n":
            parts.append(self.field)
        return np.concatenate(parts)

    @classmethod
    def from_coords(cls, model: str, n: int, z: np.ndarray, representation: str = "magnetic") -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        if z.shape != (coord_dim(model, n),):
            raise ValueError(f"expected {coord_dim(model, n)} coordinates, got {z.shape}")
        if model == "r3":
            return cls(model, z[:3], z[3:], representation)
        m = n * (n - 1) // 2
        mom = unpack(z[:m], n)
        if model == "so_so":
            fld = unpack(z[m:], n)
        elif model == "e_n":
            fld = z[m:]
        else:
            fld = None
        return cls(model, mom, fld, representation)

    def replace(self, **changes) -> "PhasePoint":
        kw = dict(model=self.model, momentum=self.momentum, field=self.field, representation=self.representation)
        kw.update(changes)
        return PhasePoint(**kw)

    def __repr__(self) -> str:
        return f"PhasePoint({self.model}, n={self.n}, {self.representation})"


def total_momentum(x: PhasePoint, gyro: np.ndarray | None) -> np.ndarray:
    """``K`` at ``x``: ``M + L`` for magnetic points, the momentum itself otherwise."""
    if x.representation == "magnetic" and gyro is not None:
        return x.momentum + gyro
    return x.momentum


def pairing(x: PhasePoint, y: PhasePoint) -> float:
    """so x so: ``-tr(xi1 xi2)/2 - tr(eta1 eta2)/2``; e(n): matrix part plus dot product."""
    if x.model != y.model or x.n != y.n:
        raise ModelMismatch(f"cannot pair {x!r} with {y!r}")
    return float(np.dot(x.coords(), y.coords()))


def skew_gradient(g: np.ndarray) -> np.ndarray:
    """Turn a Euclidean entrywise gradient into a gradient for ``inner``."""
    return g - g.T


@dataclass(frozen=True)
class ScalarField:
    """Scalar function on a phase space with an optional analytic gradient.

    Without ``gradient``, :meth:`grad` falls back to central differences.
    """

    label: str
    kind: str
    value: Callable[[PhasePoint], float]
    gradient: Callable[[PhasePoint], PhasePoint] | None = None

    def __call__(self, x: PhasePoint) -> float:
        return float(self.value(x))

    def grad(self, x: PhasePoint) -> PhasePoint:
        if self.gradient is None:
            return fd_gradient(self.value, x)
        return self.gradient(x)


def fd_gradient(f: Callable[[PhasePoint], float], x: PhasePoint, rel_step: float = 1e-6) -> PhasePoint:
    z = x.coords()
    h = rel_step * (1.0 + float(np.max(np.abs(z))))
    g = np.empty_like(z)
    for c in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[c] += h
        zm[c] -= h
        fp = f(PhasePoint.from_coords(x.model, x.n, zp, x.representation))
        fm = f(PhasePoint.from_coords(x.model, x.n, zm, x.representation))
        g[c] = (fp - fm) / (2 * h)
    return PhasePoint.from_coords(x.model, x.n, g, x.representation)


@dataclass
class IntegralFamily:
    """Labeled list of scalar fields, tagged by kind."""

    fields: list[ScalarField] = dc_field(default_factory=list)

    def __iter__(self) -> Iterator[ScalarField]:
        return iter(self.fields)

    def __len__(self) -> int:
        return len(self.fields)

    def __getitem__(self, i):
        return self.fields[i]

    def __add__(self, other: "IntegralFamily") -> "IntegralFamily":
        return IntegralFamily(list(self.fields) + list(other.fields))

    def of_kind(self, *kinds: str) -> "IntegralFamily":
        return IntegralFamily([f for f in self.fields if f.kind in kinds])

    @property
    def labels(self) -> list[str]:
        return [f.label for f in self.fields]


def bracket_grads(a: PhasePoint, b: PhasePoint, x: PhasePoint, gyro: np.ndarray | None = None) -> float:
    """Bracket of two functions with gradients ``a``, ``b`` at ``x``.

    ``gyro`` is added to the momentum before pairing; ``None`` means zero.
    """
    if not (a.model == b.model == x.model):
        raise ModelMismatch(f"model mismatch: {a.model}, {b.model}, {x.model}")
    K = x.momentum if gyro is None else x.momentum + gyro
    if x.model == "r3":
        return float(
            -np.dot(K, np.cross(a.momentum, b.momentum))
            - np.dot(x.field, np.cross(a.momentum, b.field) + np.cross(a.field, b.momentum))
        )
    out = -inner(K, commutator(a.momentum, b.momentum))
    if x.model == "so_so":
        out -= inner(x.field, commutator(a.momentum, b.field) + commutator(a.field, b.momentum))
    elif x.model == "e_n":
        out -= float(np.dot(x.field, a.momentum @ b.field - b.momentum @ a.field))
    return float(out)


def bracket(F: ScalarField, G: ScalarField, x: PhasePoint, gyro: np.ndarray | None = None) -> float:
    """``{F, G}(x)``, magnetic with shift ``gyro`` or standard when ``gyro`` is None/zero."""
    if gyro is not None and x.model != "r3" and not is_skew(np.asarray(gyro)):
        raise ValueError("gyroscope momentum must be skew")
    return bracket_grads(F.grad(x), G.grad(x), x, gyro)


def coordinate_field(model: str, n: int, index: int, label: str | None = None) -> ScalarField:
    """The linear function picking packed coordinate ``index``."""
    d = coord_dim(model, n)
    e = np.zeros(d)
    e[index] = 1.0

    def grad(x: PhasePoint) -> PhasePoint:
        return PhasePoint.from_coords(model, n, e, x.representation)

    return ScalarField(label or f"z{index}", "other", lambda x: float(x.coords()[index]), grad)


def coordinate_labels(model: str, n: int) -> list[str]:
    if model == "r3":
        return ["M1", "M2", "M3", "G1", "G2", "G3"]
    pairs = [f"{i + 1}{j + 1}" for i in range(n) for j in range(i + 1, n)]
    labels = [f"M{p}" for p in pairs]
    if model == "so_so":
        labels += [f"G{p}" for p in pairs]
    elif model == "e_n":
        labels += [f"G{i + 1}" for i in range(n)]
    return labels


def hamiltonian_vector_field(H: ScalarField, x: PhasePoint, gyro: np.ndarray | None = None) -> PhasePoint:
    """Tangent whose coordinates are ``{z_c, H}`` for every packed coordinate ``z_c``."""
    gH = H.grad(x)
    d = coord_dim(x.model, x.n)
    out = np.empty(d)
    e = np.zeros(d)
    for c in range(d):
        e[c] = 1.0
        out[c] = bracket_grads(PhasePoint.from_coords(x.model, x.n, e, x.representation), gH, x, gyro)
        e[c] = 0.0
    return PhasePoint.from_coords(x.model, x.n, out, x.representation)


# --- Casimirs -----------------------------------------------------------------


def _mpow(a: np.ndarray, k: int) -> np.ndarray:
    return np.linalg.matrix_power(a, k)


def bordered(K: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """``K`` in the leading block, ``gamma`` as last column, ``-gamma`` as last row."""
    n = K.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = K
    out[:n, n] = gamma
    out[n, :n] = -gamma
    return out


def _cofactors(a: np.ndarray) -> np.ndarray:
    """Cofactor matrix by explicit minors; valid for singular ``a``."""
    m = a.shape[0]
    if m == 1:
        return np.ones((1, 1))
    out = np.empty_like(a)
    idx = np.arange(m)
    for i in range(m):
        rows = idx[idx != i]
        for j in range(m):
            cols = idx[idx != j]
            out[i, j] = (-1) ** (i + j) * np.linalg.det(a[np.ix_(rows, cols)])
    return out


def contracted_invariant(K: np.ndarray, gamma: np.ndarray, k: int, with_grad: bool = False):
    """``q_k``: sum of principal ``2k x 2k`` minors of the bordered matrix that contain the border."""
    n = K.shape[0]
    A = bordered(K, gamma)
    total = 0.0
    G = np.zeros_like(A) if with_grad else None
    for idx in combinations(range(n), 2 * k - 1):
        s = list(idx) + [n]
        sub = A[np.ix_(s, s)]
        total += np.linalg.det(sub)
        if with_grad:
            G[np.ix_(s, s)] += _cofactors(sub)
    if not with_grad:
        return float(total)
    gK = skew_gradient(G[:n, :n])
    gg = G[:n, n] - G[n, :n]
    return float(total), gK, gg


def casimirs(model: str, n: int, gyro: np.ndarray | None = None) -> IntegralFamily:
    """Casimir functions of the standard bracket, precomposed with ``K = M + L`` on magnetic points."""
    fams: list[ScalarField] = []
    if model == "so_so":
        for k in range(1, n // 2 + 1):
            fams.append(_trace_power_casimir(n, k, gyro))
            fams.append(_mixed_casimir(n, k, gyro))
    elif model == "e_n":
        for k in range(1, (n + 1) // 2 + 1):
            fams.append(_contracted_casimir(n, k, gyro))
    elif model == "so":
        for k in range(1, n // 2 + 1):
            fams.append(_so_casimir(n, k, gyro))
    elif model == "r3":
        fams.extend(_r3_casimirs(gyro))
    else:
        raise ModelMismatch(f"unknown model {model!r}")
    return IntegralFamily(fams)


def _trace_power_casimir(n: int, k: int, gyro) -> ScalarField:
    def value(x):
        return float(np.trace(_mpow(x.field, 2 * k)))

    def grad(x):
        return x.replace(momentum=np.zeros((n, n)), field=skew_gradient(2 * k * _mpow(x.field, 2 * k - 1).T))

    return ScalarField(f"P{k}", "casimir", value, grad)


def _mixed_casimir(n: int, k: int, gyro) -> ScalarField:
    def value(x):
        K = total_momentum(x, gyro)
        return float(np.trace(K @ _mpow(x.field, 2 * k - 1)))

    def grad(x):
        K = total_momentum(x, gyro)
        G = x.field
        powers = [np.eye(n)]
        for _ in range(2 * k - 1):
            powers.append(powers[-1] @ G)
        gK = skew_gradient(powers[2 * k - 1].T)
        eg = np.zeros((n, n))
        for j in range(2 * k - 1):
            eg += (powers[j] @ K @ powers[2 * k - 2 - j]).T
        return x.replace(momentum=gK, field=skew_gradient(eg))

    return ScalarField(f"Q{k}", "casimir", value, grad)


def _contracted_casimir(n: int, k: int, gyro) -> ScalarField:
    def value(x):
        return contracted_invariant(total_momentum(x, gyro), x.field, k)

    def grad(x):
        _, gK, gg = contracted_invariant(total_momentum(x, gyro), x.field, k, with_grad=True)
        return x.replace(momentum=gK, field=gg)

    return ScalarField(f"q{k}", "casimir", value, grad)


def _so_casimir(n: int, k: int, gyro) -> ScalarField:
    def value(x):
        return float(np.trace(_mpow(total_momentum(x, gyro), 2 * k)))

    def grad(x):
        K = total_momentum(x, gyro)
        return x.replace(momentum=skew_gradient(2 * k * _mpow(K, 2 * k - 1).T))

    return ScalarField(f"C{k}", "casimir", value, grad)


def _r3_casimirs(gyro) -> list[ScalarField]:
    def K_of(x):
        return total_momentum(x, gyro)

    geometric = ScalarField(
        "<G,G>",
        "casimir",
        lambda x: float(x.field @ x.field),
        lambda x: x.replace(momentum=np.zeros(3), field=2 * x.field),
    )
    area = ScalarField(
        "<K,G>",
        "casimir",
        lambda x: float(K_of(x) @ x.field),
        lambda x: x.replace(momentum=x.field.copy(), field=K_of(x).copy()),
    )
    return [geometric, area]


# --- field algebra --------------------------------------------------------------


def product_field(F: ScalarField, G: ScalarField) -> ScalarField:
    """``F * G`` with gradient by the product rule."""

    def grad(x):
        a, b = F.grad(x), G.grad(x)
        z = F(x) * b.coords() + G(x) * a.coords()
        return PhasePoint.from_coords(x.model, x.n, z, x.representation)

    return ScalarField(f"({F.label})*({G.label})", "other", lambda x: F(x) * G(x), grad)


def bracket_field(F: ScalarField, G: ScalarField, gyro: np.ndarray | None = None) -> ScalarField:
    """``{F, G}`` as a scalar field; its gradient uses finite differences."""
    return ScalarField(f"{{{F.label},{G.label}}}", "other", lambda x: bracket(F, G, x, gyro))


def polynomial_field(coeffs_lin: np.ndarray, quad: np.ndarray, cubic: Sequence[np.ndarray], model: str, n: int,
                     label: str = "poly") -> ScalarField:
    """``a.z + z^T B z / 2 + (u.z)(v.z)(w.z)`` in packed coordinates ``z``."""
    a = np.asarray(coeffs_lin, dtype=float)
    B = 0.5 * (np.asarray(quad, dtype=float) + np.asarray(quad, dtype=float).T)
    u, v, w = (np.asarray(c, dtype=float) for c in cubic)

    def value(x):
        z = x.coords()
        return float(a @ z + 0.5 * z @ B @ z + (u @ z) * (v @ z) * (w @ z))

    def grad(x):
        z = x.coords()
        uz, vz, wz = u @ z, v @ z, w @ z
        g = a + B @ z + u * vz * wz + v * uz * wz + w * uz * vz
        return PhasePoint.from_coords(model, n, g, x.representation)

    return ScalarField(label, "other", value, grad)


def random_polynomial(model: str, n: int, rng: np.random.Generator, label: str = "poly") -> ScalarField:
    d = coord_dim(model, n)
    return polynomial_field(
        rng.uniform(-1, 1, d),
        rng.uniform(-1, 1, (d, d)),
        [rng.uniform(-1, 1, d) for _ in range(3)],
        model,
        n,
        label,
    )


def iter_coordinate_fields(model: str, n: int) -> Iterable[ScalarField]:
    for c, lab in enumerate(coordinate_labels(model, n)):
        yield coordinate_field(model, n, c, lab)
