"""Fixed-step integration of the model vector fields and drift reporting.

States are advanced in packed coordinates (strict upper triangles plus the
field vector), so every stored matrix is skew-symmetric by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .models import ModelSpec, require_valid
from .poisson import IntegralFamily, ModelMismatch, PhasePoint

METHODS = ("rk4", "implicit_midpoint")

MIDPOINT_TOL = 1e-13
MIDPOINT_MAXITER = 50


class MidpointNonConvergence(RuntimeError):
    """Fixed-point iteration of the implicit midpoint rule did not settle."""

    def __init__(self, iterations: int, increment: float, step_index: int | None = None):
        self.iterations = iterations
        self.increment = increment
        self.step_index = step_index
        where = "" if step_index is None else f" at step {step_index}"
        super().__init__(
            f"implicit midpoint did not converge{where}: increment {increment:.3e} after "
            f"{iterations} iterations; try a smaller dt"
        )


def _rhs(spec: ModelSpec, x: PhasePoint) -> Callable[[np.ndarray], np.ndarray]:
    """The closed-form vector field in packed coordinates.

    Same formulas as ``models.vector_field`` without building a PhasePoint
    per evaluation; the two are cross-checked in the tests.
    """
    if x.model != spec.model or x.n != spec.n:
        raise ModelMismatch(f"point {x!r} does not belong to {spec.family} (n={spec.n})")
    n = spec.n
    standard = x.representation == "standard"
    if spec.classical:
        I, chi, L = spec.J, spec.chi, spec.L

        def f3(z):
            mom, g = z[:3], z[3:]
            m = mom - L if standard else mom
            om = m / I
            k = m + L
            return np.concatenate([np.cross(k, om) + np.cross(g, chi), np.cross(g, om)])

        return f3

    iu = np.triu_indices(n, 1)
    d = iu[0].size
    jsum = np.add.outer(spec.J, spec.J)[iu]
    Lp = spec.L[iu]
    model = spec.model
    chi = np.asarray(spec.chi) if spec.chi is not None else None

    def full(v):
        a = np.zeros((n, n))
        a[iu] = v
        return a - a.T

    def f(z):
        mom = z[:d]
        m = mom - Lp if standard else mom
        om = full(m / jsum)
        K = full(m + Lp)
        dm = (K @ om - om @ K)[iu]
        if model == "so":
            return dm
        if model == "so_so":
            G = full(z[d:])
            dm = dm + (G @ chi - chi @ G)[iu]
            return np.concatenate([dm, (G @ om - om @ G)[iu]])
        g = z[d:]
        dm = dm + (np.outer(chi, g) - np.outer(g, chi))[iu]
        return np.concatenate([dm, -om @ g])

    return f


def _rk4_increment(f, z: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(z)
    k2 = f(z + 0.5 * dt * k1)
    k3 = f(z + 0.5 * dt * k2)
    k4 = f(z + dt * k3)
    return dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _midpoint_increment(f, z: np.ndarray, dt: float) -> np.ndarray:
    tol = MIDPOINT_TOL * (1.0 + float(np.max(np.abs(z), initial=0.0)))
    dz = dt * f(z)
    inc = math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(1, MIDPOINT_MAXITER + 1):
            nxt = dt * f(z + 0.5 * dz)
            inc = float(np.max(np.abs(nxt - dz), initial=0.0))
            dz = nxt
            if inc <= tol:
                return dz
            if not math.isfinite(inc):
                # the iteration has blown up; more sweeps cannot recover it
                raise MidpointNonConvergence(it, inc)
    raise MidpointNonConvergence(MIDPOINT_MAXITER, inc)


_INCREMENTS = {"rk4": _rk4_increment, "implicit_midpoint": _midpoint_increment}


def step(method: str, spec: ModelSpec, x: PhasePoint, dt: float) -> PhasePoint:
    """Advance ``x`` by one step of size ``dt`` (negative ``dt`` runs backwards)."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if not np.isfinite(dt) or dt == 0:
        raise ValueError(f"dt must be finite and nonzero, got {dt}")
    z = x.coords()
    z = z + _INCREMENTS[method](_rhs(spec, x), z, dt)
    return PhasePoint.from_coords(x.model, x.n, z, x.representation)


@dataclass(frozen=True)
class Trajectory:
    """Uniform-step samples ``states[i]`` at times ``t[i] = i * dt``."""

    spec: ModelSpec
    method: str
    dt: float
    t: np.ndarray
    states: np.ndarray  # packed coordinates, one row per sample
    representation: str

    def __len__(self) -> int:
        return self.states.shape[0]

    def point(self, i: int) -> PhasePoint:
        return PhasePoint.from_coords(self.spec.model, self.spec.n, self.states[i], self.representation)

    def points(self, stride: int = 1):
        for i in range(0, len(self), stride):
            yield self.point(i)


def n_steps(dt: float, T: float) -> int:
    """``ceil(T / dt)``, forgiving the last bit of rounding in ``T / dt``."""
    return max(1, math.ceil(T / dt - 1e-9))


def simulate(method: str, spec: ModelSpec, x0: PhasePoint, dt: float, T: float) -> Trajectory:
    """``ceil(T / dt)`` fixed steps from ``x0``.

    Increments are accumulated with compensated (Kahan) summation so that
    rounding in the running state stays at the level of a single step; the
    drift left over is then the scheme's truncation error.
    """
    if not (np.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    if not (np.isfinite(T) and T >= dt):
        raise ValueError(f"T must satisfy T >= dt, got T={T}, dt={dt}")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    require_valid(spec)
    steps = n_steps(dt, T)
    f = _rhs(spec, x0)
    increment = _INCREMENTS[method]
    z = x0.coords()
    carry = np.zeros_like(z)
    out = np.empty((steps + 1, z.size))
    out[0] = z
    for i in range(steps):
        try:
            y = increment(f, z, dt) - carry
        except MidpointNonConvergence as exc:
            raise MidpointNonConvergence(exc.iterations, exc.increment, i) from None
        znew = z + y
        carry = (znew - z) - y
        z = znew
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"state became non-finite at step {i}")
        out[i + 1] = z
    return Trajectory(spec, method, float(dt), dt * np.arange(steps + 1), out, x0.representation)


@dataclass(frozen=True)
class DriftRow:
    label: str
    kind: str
    initial: float
    max_drift: float


DRIFT_FLOOR = 1e-8


def drift_report(traj: Trajectory, fam: IntegralFamily, stride: int = 1) -> list[DriftRow]:
    """Max relative deviation of each field from its initial value.

    The denominator is ``max(|initial|, 1e-8)``. ``stride`` subsamples the
    trajectory; the last sample is always included.
    """
    x0 = traj.point(0)
    idx = list(range(0, len(traj), stride))
    if idx[-1] != len(traj) - 1:
        idx.append(len(traj) - 1)
    pts = [traj.point(i) for i in idx]
    rows = []
    for F in fam:
        try:
            f0 = F(x0)
        except ModelMismatch:
            raise
        except (ValueError, AttributeError, TypeError, IndexError) as exc:
            raise ModelMismatch(f"{F.label} cannot be evaluated on {traj.spec.family}: {exc}") from exc
        denom = max(abs(f0), DRIFT_FLOOR)
        worst = max(abs(F(p) - f0) for p in pts) / denom
        rows.append(DriftRow(F.label, F.kind, float(f0), float(worst)))
    return rows
