"""Integrable heavy-top families with a gyroscope.

Every n-dimensional family uses the Manakov inertia operator
``M = J Omega + Omega J`` with a diagonal mass tensor ``J``. The n = 3
"classical" families use the vector form with principal moments ``I``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .poisson import PhasePoint, ScalarField, total_momentum
from .skew import Subalgebra, basis_bivector, commutator, inner, is_skew, skew, skew_from_entries, wedge

FAMILY_MODEL = {
    "manakov_gyro": "so",
    "lagrange_so_so": "so_so",
    "bitop": "so_so",
    "totally_symmetric": "so_so",
    "belyaev_e_n": "e_n",
    "classical3_euler": "r3",
    "classical3_lagrange": "r3",
    "classical3_kowalevski": "r3",
}
CLASSICAL = ("classical3_euler", "classical3_lagrange", "classical3_kowalevski")


class ModelError(ValueError):
    """Raised when a spec violates its family's structural hypotheses."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A member of one integrable family.

    ``J`` is the diagonal of the mass tensor (principal moments ``A, B, C``
    for the classical families). ``chi`` and ``L`` are skew matrices for the
    so x so and so families, vectors for e(n) (``chi``) and for the classical
    families. For ``belyaev_e_n`` the gyroscope ``L`` is still a skew matrix.
    """

    family: str
    n: int
    J: np.ndarray
    chi: np.ndarray | None
    L: np.ndarray
    alpha: tuple[float, ...] = ()
    representation: str = "magnetic"

    def __post_init__(self):
        if self.family not in FAMILY_MODEL:
            raise ValueError(f"unknown family {self.family!r}")
        for name in ("J", "chi", "L"):
            v = getattr(self, name)
            if v is not None:
                a = np.array(v, dtype=float)
                a.flags.writeable = False
                object.__setattr__(self, name, a)

    @property
    def model(self) -> str:
        return FAMILY_MODEL[self.family]

    @property
    def classical(self) -> bool:
        return self.family in CLASSICAL

    def with_(self, **changes) -> "ModelSpec":
        return dc_replace(self, **changes)


# --- constructors -----------------------------------------------------------------


def lagrange_top(n: int, alpha1: float, alpha2: float, chi12: float, L=None) -> ModelSpec:
    J = np.array([alpha1, alpha1] + [alpha2] * (n - 2), dtype=float)
    chi = chi12 * basis_bivector(n, 0, 1)
    return ModelSpec("lagrange_so_so", n, J, chi, _skew_or_zero(L, n), (alpha1, alpha2))


def lagrange_bitop(alpha1: float, alpha2: float, chi12: float, chi34: float, L=None) -> ModelSpec:
    J = np.array([alpha1, alpha1, alpha2, alpha2], dtype=float)
    chi = chi12 * basis_bivector(4, 0, 1) + chi34 * basis_bivector(4, 2, 3)
    return ModelSpec("bitop", 4, J, chi, _skew_or_zero(L, 4), (alpha1, alpha2))


def totally_symmetric(n: int, alpha1: float, chi: np.ndarray, L=None) -> ModelSpec:
    return ModelSpec("totally_symmetric", n, np.full(n, float(alpha1)), skew(chi), _skew_or_zero(L, n), (alpha1,))


def belyaev_top(n: int, alpha1: float, alpha2: float, chi_n: float, L=None) -> ModelSpec:
    J = np.array([alpha1] * (n - 1) + [alpha2], dtype=float)
    chi = np.zeros(n)
    chi[-1] = chi_n
    return ModelSpec("belyaev_e_n", n, J, chi, _skew_or_zero(L, n), (alpha1, alpha2))


def manakov_gyro(J, L=None) -> ModelSpec:
    J = np.asarray(J, dtype=float)
    return ModelSpec("manakov_gyro", J.size, J, None, _skew_or_zero(L, J.size))


def classical_euler(I, L=(0.0, 0.0, 0.0)) -> ModelSpec:
    return ModelSpec("classical3_euler", 3, np.asarray(I, dtype=float), np.zeros(3), np.asarray(L, dtype=float))


def classical_lagrange(A: float, C: float, chi3: float, eta: float) -> ModelSpec:
    return ModelSpec("classical3_lagrange", 3, np.array([A, A, C]), np.array([0.0, 0.0, chi3]), np.array([0.0, 0.0, eta]))


def classical_kowalevski(chi1: float, eta: float) -> ModelSpec:
    return ModelSpec(
        "classical3_kowalevski", 3, np.array([1.0, 1.0, 0.5]), np.array([chi1, 0.0, 0.0]), np.array([0.0, 0.0, eta])
    )


def _skew_or_zero(L, n: int) -> np.ndarray:
    if L is None:
        return np.zeros((n, n))
    L = np.asarray(L, dtype=float)
    if L.ndim == 2:
        return skew(L)
    return skew_from_entries(n, L)


# --- inertia ----------------------------------------------------------------------


def manakov_apply(J: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """``J Omega + Omega J``, entrywise ``(J_i + J_j) Omega_ij``."""
    J = np.asarray(J, dtype=float)
    return skew(np.add.outer(J, J) * omega)


def manakov_invert(J: np.ndarray, M: np.ndarray) -> np.ndarray:
    J = np.asarray(J, dtype=float)
    return skew(M / np.add.outer(J, J))


def inertia_inverse(spec: ModelSpec, m: np.ndarray) -> np.ndarray:
    if spec.classical:
        return m / spec.J
    return manakov_invert(spec.J, m)


def angular_velocity(spec: ModelSpec, x: PhasePoint) -> np.ndarray:
    """``Omega = I^-1 M``; on standard points ``M = K - L``."""
    if x.representation == "magnetic":
        return inertia_inverse(spec, x.momentum)
    return inertia_inverse(spec, x.momentum - spec.L)


def to_representation(spec: ModelSpec, x: PhasePoint, representation: str) -> PhasePoint:
    """Exact change of variables ``K = M + L``."""
    if x.representation == representation:
        return x
    shift = spec.L if representation == "standard" else -spec.L
    return x.replace(momentum=x.momentum + shift, representation=representation)


def symmetry_subalgebra(spec: ModelSpec) -> Subalgebra:
    """The subalgebra h carrying the Noether integrals and the gyroscope."""
    n = spec.n
    f = spec.family
    if f == "lagrange_so_so":
        return Subalgebra.blocks((2, n - 2))
    if f == "bitop":
        return Subalgebra.blocks((2, 2))
    if f == "belyaev_e_n":
        return Subalgebra.blocks((n - 1, 1))
    if f == "manakov_gyro":
        lengths = []
        for k, d in enumerate(spec.J):
            if k and d == spec.J[k - 1]:
                lengths[-1] += 1
            else:
                lengths.append(1)
        return Subalgebra.blocks(tuple(lengths))
    if f == "totally_symmetric":
        return Subalgebra.centralizer(spec.chi)
    raise ValueError(f"{f} has no symmetry subalgebra")


# --- energy -----------------------------------------------------------------------


def _potential(spec: ModelSpec, x: PhasePoint) -> float:
    if spec.model == "so":
        return 0.0
    if spec.model == "so_so":
        return inner(spec.chi, x.field)
    return float(np.dot(spec.chi, x.field))


def hamiltonian(spec: ModelSpec, x: PhasePoint) -> float:
    """``H(M, Gamma)`` on magnetic points, ``H_1(K, Gamma)`` on standard points.

    The two differ by ``<L, I^-1 L>/2`` under ``K = M + L``.
    """
    _check_point(spec, x)
    if spec.classical:
        if x.representation == "magnetic":
            kin = 0.5 * float(x.momentum @ (x.momentum / spec.J))
        else:
            K = x.momentum
            kin = 0.5 * float(K @ (K / spec.J)) - float(K @ (spec.L / spec.J))
        return kin + _potential(spec, x)
    if x.representation == "magnetic":
        kin = 0.5 * inner(x.momentum, manakov_invert(spec.J, x.momentum))
    else:
        K = x.momentum
        kin = 0.5 * inner(K, manakov_invert(spec.J, K)) - inner(K, manakov_invert(spec.J, spec.L))
    return kin + _potential(spec, x)


def hamiltonian_field(spec: ModelSpec) -> ScalarField:
    def grad(x):
        om = angular_velocity(spec, x)
        if spec.model == "so":
            return x.replace(momentum=om)
        return x.replace(momentum=om, field=np.array(spec.chi))

    return ScalarField("H", "hamiltonian", lambda x: hamiltonian(spec, x), grad)


def gyro_energy_offset(spec: ModelSpec) -> float:
    """``H_1(M + L, Gamma) - H(M, Gamma)``, independent of the point."""
    if spec.classical:
        return -0.5 * float(spec.L @ (spec.L / spec.J))
    return -0.5 * inner(spec.L, manakov_invert(spec.J, spec.L))


# --- equations of motion ----------------------------------------------------------


def euler_poisson_rhs(I, chi, L, m, g) -> tuple[np.ndarray, np.ndarray]:
    """Vector Euler-Poisson equations with gyroscope, magnetic variables."""
    om = m / I
    return np.cross(m + L, om) + np.cross(g, chi), np.cross(g, om)


def vector_field(spec: ModelSpec, x: PhasePoint) -> PhasePoint:
    _check_point(spec, x)
    om = angular_velocity(spec, x)
    K = total_momentum(x, spec.L)
    if spec.classical:
        dm = np.cross(K, om) + np.cross(x.field, spec.chi)
        return x.replace(momentum=dm, field=np.cross(x.field, om))
    dm = commutator(K, om)
    if spec.model == "so":
        return x.replace(momentum=dm)
    if spec.model == "so_so":
        return x.replace(momentum=dm + commutator(x.field, spec.chi), field=commutator(x.field, om))
    return x.replace(momentum=dm + wedge(spec.chi, x.field), field=-om @ x.field)


def _check_point(spec: ModelSpec, x: PhasePoint) -> None:
    if x.model != spec.model or x.n != spec.n:
        raise ValueError(f"point {x!r} does not belong to {spec.family} (n={spec.n})")


# --- validation -------------------------------------------------------------------


def _comm_small(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    c = a @ b - b @ a
    scale = max(1.0, float(np.max(np.abs(a))) * float(np.max(np.abs(b))))
    return float(np.max(np.abs(c))) <= tol * scale


def validate(spec: ModelSpec) -> list[str]:
    """All structural violations of ``spec``; empty when the model is valid."""
    v: list[str] = []
    n, f, J = spec.n, spec.family, spec.J
    if spec.representation not in ("magnetic", "standard"):
        v.append(f"unknown representation {spec.representation!r}")
    if J.shape != (n,):
        return v + [f"mass tensor needs {n} entries, got {J.shape}"]
    if not np.all(np.isfinite(J)) or np.any(J <= 0):
        v.append("mass tensor / inertia entries must be positive")

    if spec.classical:
        if n != 3:
            v.append(f"{f} requires n=3")
        if spec.chi is None or spec.chi.shape != (3,) or spec.L.shape != (3,):
            return v + ["classical families need 3-vectors chi and L"]
        if f == "classical3_euler" and np.any(spec.chi != 0):
            v.append("Euler case requires chi = 0")
        if f == "classical3_lagrange":
            if J[0] != J[1]:
                v.append("Lagrange case requires I = diag(A, A, C)")
            if np.any(spec.chi[:2] != 0):
                v.append("Lagrange case requires chi = (0, 0, chi3)")
            if np.any(spec.L[:2] != 0):
                v.append("Lagrange case requires L = (0, 0, eta)")
        if f == "classical3_kowalevski":
            if not np.array_equal(J, [1.0, 1.0, 0.5]):
                v.append("Kowalevski case requires I = diag(1, 1, 1/2)")
            if np.any(spec.chi[1:] != 0):
                v.append("Kowalevski case requires chi = (chi1, 0, 0)")
            if np.any(spec.L[:2] != 0):
                v.append("Kowalevski case requires L = (0, 0, eta)")
        return v

    if n < 3:
        v.append("n must be at least 3")
    if spec.L.shape != (n, n) or not is_skew(spec.L):
        return v + ["L must be a skew n x n matrix"]

    if f == "manakov_gyro":
        if spec.chi is not None:
            v.append("manakov_gyro has no field chi")
        seen = []
        for k, d in enumerate(J):
            if k and d == J[k - 1]:
                continue
            if d in seen:
                v.append("equal mass-tensor values must be contiguous")
                break
            seen.append(d)
        if not _comm_small(spec.L, np.diag(J)):
            v.append("L ∉ so(n)_J: [L, J] != 0")
        return v

    if f == "belyaev_e_n":
        if spec.chi is None or spec.chi.shape != (n,):
            return v + ["belyaev_e_n needs chi as an n-vector"]
        if np.any(J[:-1] != J[0]):
            v.append("belyaev_e_n requires J_1 = ... = J_(n-1) = alpha1")
        if np.any(spec.chi[:-1] != 0):
            v.append("belyaev_e_n requires chi = chi_n E_n")
        if np.any(spec.L[:, -1] != 0):
            v.append("L ∉ 𝔥: gyroscope must be supported on indices 1..n-1")
        return v

    if spec.chi is None or spec.chi.shape != (n, n) or not is_skew(spec.chi):
        return v + [f"{f} needs chi as a skew n x n matrix"]

    if f == "totally_symmetric":
        if np.any(J != J[0]):
            v.append("totally_symmetric requires J = alpha1 * Id")
        if not _comm_small(spec.L, spec.chi):
            v.append("L ∉ so(n)_chi: [L, chi] != 0")
        return v

    if f == "bitop":
        if n != 4:
            return v + ["bitop requires n=4"]
        if not (J[0] == J[1] and J[2] == J[3]):
            v.append("bitop requires J = diag(a1, a1, a2, a2)")
    elif f == "lagrange_so_so":
        if not (J[0] == J[1] and np.all(J[2:] == J[2])):
            v.append("lagrange_so_so requires J = diag(a1, a1, a2, ..., a2)")
    h = symmetry_subalgebra(spec)
    chi_allowed = h.project(spec.chi) if f == "bitop" else spec.chi[0, 1] * basis_bivector(n, 0, 1)
    if np.any(spec.chi != chi_allowed):
        v.append("chi must be chi12 E1^E2" + (" + chi34 E3^E4" if f == "bitop" else ""))
    if not h.contains(spec.L):
        v.append("L ∉ 𝔥: gyroscope momentum has a component outside the symmetry subalgebra")
    return v


def require_valid(spec: ModelSpec) -> ModelSpec:
    problems = validate(spec)
    if problems:
        raise ModelError(problems)
    return spec


# --- sampling ---------------------------------------------------------------------


def random_point(spec: ModelSpec, rng: np.random.Generator, representation: str | None = None,
                 scale: float = 1.0) -> PhasePoint:
    """Entries uniform in ``[-scale, scale]``, matrices skew-symmetrized from the upper triangle."""
    n = spec.n
    rep = representation or spec.representation
    if spec.classical:
        return PhasePoint("r3", scale * rng.uniform(-1, 1, 3), scale * rng.uniform(-1, 1, 3), rep)
    mom = skew(scale * rng.uniform(-1, 1, (n, n)))
    if spec.model == "so":
        fld = None
    elif spec.model == "so_so":
        fld = skew(scale * rng.uniform(-1, 1, (n, n)))
    else:
        fld = scale * rng.uniform(-1, 1, n)
    return PhasePoint(spec.model, mom, fld, rep)


def dyadic_coefficients(rng: np.random.Generator, count: int, denom: int = 64) -> np.ndarray:
    """Distinct values ``k/denom`` in ``[1, 2]``."""
    ks = rng.choice(np.arange(denom, 2 * denom + 1), size=count, replace=False)
    return ks / denom


def generic_gyro(spec: ModelSpec, rng: np.random.Generator) -> np.ndarray:
    """A gyroscope momentum in h with distinct dyadic coefficients."""
    if spec.classical:
        c = dyadic_coefficients(rng, 3)
        if spec.family == "classical3_euler":
            return c
        return np.array([0.0, 0.0, c[0]])
    if spec.family == "totally_symmetric":
        k = spec.n // 2
        c = dyadic_coefficients(rng, k)
        out = np.zeros((spec.n, spec.n))
        p = spec.chi.copy()
        sq = spec.chi @ spec.chi
        for j in range(k):
            out += c[j] * p
            p = p @ sq
        return skew(out)
    h = symmetry_subalgebra(spec)
    out = np.zeros((spec.n, spec.n))
    for ci, b in zip(dyadic_coefficients(rng, h.dim), h.basis):
        out += ci * b
    return skew(out)


# --- classical fourth integrals ---------------------------------------------------


def classical3_integral(spec: ModelSpec, x: PhasePoint) -> float:
    return fourth_integral(spec)(x)


def fourth_integral(spec: ModelSpec) -> ScalarField:
    """The additional integral of the Euler, Lagrange and Kowalevski cases."""
    f = spec.family
    L = spec.L

    def mom(x):
        # integrals are written in M; standard points carry K = M + L
        return x.momentum if x.representation == "magnetic" else x.momentum - L

    if f == "classical3_euler":
        def value(x):
            k = mom(x) + L
            return float(k @ k)

        def grad(x):
            return x.replace(momentum=2 * (mom(x) + L), field=np.zeros(3))

        return ScalarField("F_euler", "classical", value, grad)
    if f == "classical3_lagrange":
        e3 = np.array([0.0, 0.0, 1.0])
        return ScalarField(
            "F_lagrange", "classical", lambda x: float(mom(x)[2]), lambda x: x.replace(momentum=e3, field=np.zeros(3))
        )
    if f == "classical3_kowalevski":
        c = spec.chi[0]
        eta = L[2]

        # the displayed formula is in the standard variables K = M + L (only K3 differs from M3)
        def parts(x):
            m, g = mom(x) + L, x.field
            a = m[0] ** 2 - m[1] ** 2 - 2 * c * g[0]
            b = 2 * m[0] * m[1] - 2 * c * g[1]
            return m, g, a, b

        def value(x):
            m, g, a, b = parts(x)
            return float(a * a + b * b + 8 * eta * (m[2] - 2 * eta) * (m[0] ** 2 + m[1] ** 2)
                         - 16 * c * eta * m[0] * g[2])

        def grad(x):
            m, g, a, b = parts(x)
            t = m[2] - 2 * eta
            gm = np.array([
                4 * a * m[0] + 4 * b * m[1] + 16 * eta * t * m[0] - 16 * c * eta * g[2],
                -4 * a * m[1] + 4 * b * m[0] + 16 * eta * t * m[1],
                8 * eta * (m[0] ** 2 + m[1] ** 2),
            ])
            gg = np.array([-4 * c * a, -4 * c * b, -16 * c * eta * m[0]])
            return x.replace(momentum=gm, field=gg)

        return ScalarField("F_kowalevski", "classical", value, grad)
    raise ValueError(f"{f} is not a classical n=3 family")
