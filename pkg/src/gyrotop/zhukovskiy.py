"""Zhukovskiy's geometric picture of a free gyrostat in R^3.

Everything lives in the body frame. For inertia ``I = diag(A, B, C)``,
gyroscope momentum ``L`` and angular velocity ``Omega``:

* ``N = M / sqrt(2 m h)`` lies on the MacCullagh ellipsoid
  ``X^2/A + Y^2/B + Z^2/C = 1/m``;
* ``S`` is the foot of the perpendicular from ``O`` to the tangent plane at ``N``;
* ``L_pt = -L / sqrt(2 m h)`` is the centre of the sphere through ``N`` of radius
  ``k / sqrt(2 m h)``;
* ``K_pt`` is where the ray along ``K = M + L`` meets that tangent plane, and
  ``F`` is the point of the line ``K_pt S`` with ``OF`` orthogonal to ``K``.

The rolling and sliding speeds are ``theta = sqrt(2h/m) / |OK_pt|`` and
``theta' = sqrt(2h/m) / |OF|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .integrate import Trajectory

DEGENERATE_CONE = "degenerate cone"
PARALLEL_PLANE = "K parallel to tangent plane"

# sine of the angle between K and Omega below which the cone is treated as degenerate
PARALLEL_TOL = 1e-9

RESIDUALS = ("a", "b", "c", "d", "e_theta", "e_theta_prime", "f")
SKIPPED = "skipped"


@dataclass(frozen=True)
class ZhGeometry:
    h: float
    k: float
    m: float
    N: np.ndarray
    S: np.ndarray
    p: float
    r: float
    L_pt: np.ndarray
    K_pt: np.ndarray | None
    F: np.ndarray | None
    alpha: float
    theta: float
    theta_prime: float
    D: np.ndarray
    omega: np.ndarray
    K: np.ndarray
    flags: tuple[str, ...] = field(default_factory=tuple)


def _unit_sine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.linalg.norm(np.cross(u, v)) / (nu * nv))


def zh_state(I, L_vec, m: float, omega) -> ZhGeometry:
    """All points and speeds of the construction for one body-frame state."""
    I = np.asarray(I, dtype=float)
    if I.shape == (3, 3):
        I = np.diag(I)
    L_vec = np.asarray(L_vec, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if I.shape != (3,) or np.any(I <= 0):
        raise ValueError(f"principal moments must be three positive numbers, got {I}")
    if not m > 0:
        raise ValueError(f"m must be positive, got {m}")
    M = I * omega
    if not np.any(omega) or not np.any(M):
        raise ValueError("Omega and M = I Omega must be nonzero")
    h = 0.5 * float(M @ omega)
    K = M + L_vec
    k = float(np.linalg.norm(K))
    scale = math.sqrt(2.0 * m * h)
    N = M / scale
    g = N / I  # normal of the tangent plane at N, equal to Omega / sqrt(2 m h)
    S = g / (m * float(g @ g))
    p = float(np.linalg.norm(S))
    L_pt = -L_vec / scale
    D = (2.0 * h + float(L_vec @ omega)) * K - k * k * omega
    speed = math.sqrt(2.0 * h / m)

    flags = []
    gK = float(g @ K)
    K_pt = F = None
    alpha = theta = theta_p = math.nan
    if abs(gK) <= PARALLEL_TOL * np.linalg.norm(g) * k:
        flags.append(PARALLEL_PLANE)
    else:
        K_pt = K / (m * gK)
        cos_a = float(S @ K_pt) / (p * np.linalg.norm(K_pt))
        alpha = math.acos(min(1.0, max(-1.0, cos_a)))
        theta = speed / float(np.linalg.norm(K_pt))
        if _unit_sine(K, omega) <= PARALLEL_TOL:
            flags.append(DEGENERATE_CONE)
            alpha, theta_p = 0.0, 0.0
        else:
            s = float(K @ K_pt) / float(K @ (K_pt - S))
            F = K_pt + s * (S - K_pt)
            theta_p = speed / float(np.linalg.norm(F))
    return ZhGeometry(h, k, float(m), N, S, p, float(np.linalg.norm(N)), L_pt, K_pt, F, alpha, theta,
                      theta_p, D, omega, K, tuple(flags))


def zh_verify(geom: ZhGeometry, K=None, omega=None) -> dict[str, float | str]:
    """Residuals of the identities of the construction.

    (a) ``p |Omega| - sqrt(2h/m)``; (b) ``|L_pt - N| sqrt(2mh) - k``;
    (c) ``<F, K_pt>`` normalised (right angle at O); (d) sine of the angle
    between ``S - K_pt`` and ``F - K_pt``; (e) ``theta - |Omega| cos(alpha)``
    and ``theta' - |Omega| sin(alpha)``; (f) sine of the angle between ``F``
    and ``D``. Residuals that a degeneracy flag makes meaningless are
    reported as ``"skipped"``.
    """
    K = geom.K if K is None else np.asarray(K, dtype=float)
    omega = geom.omega if omega is None else np.asarray(omega, dtype=float)
    m, h = geom.m, geom.h
    w = float(np.linalg.norm(omega))
    speed = math.sqrt(2.0 * h / m)
    out: dict[str, float | str] = {
        "a": abs(geom.p * w - speed),
        "b": abs(float(np.linalg.norm(geom.L_pt - geom.N)) * math.sqrt(2.0 * m * h) - float(np.linalg.norm(K))),
    }
    if geom.K_pt is None:
        for key in ("c", "d", "e_theta", "e_theta_prime", "f"):
            out[key] = SKIPPED
        return out
    out["e_theta"] = abs(geom.theta - w * math.cos(geom.alpha))
    out["e_theta_prime"] = abs(geom.theta_prime - w * math.sin(geom.alpha))
    if geom.F is None:
        for key in ("c", "d", "f"):
            out[key] = SKIPPED
        return out
    F, Kp = geom.F, geom.K_pt
    out["c"] = abs(float(F @ Kp)) / (float(np.linalg.norm(F)) * float(np.linalg.norm(Kp)))
    out["d"] = _unit_sine(geom.S - Kp, F - Kp)
    out["f"] = _unit_sine(F, geom.D)
    return out


def max_residual(res: dict[str, float | str]) -> float:
    vals = [v for v in res.values() if v != SKIPPED]
    return max(vals) if vals else 0.0


@dataclass(frozen=True)
class ZhTrace:
    t: np.ndarray
    samples: list[ZhGeometry]
    drift: dict[str, float]  # relative drift of h, k and |L_pt - N|
    flagged_fraction: float


def zh_trace(traj: Trajectory, m: float = 1.0, stride: int = 1) -> ZhTrace:
    """Per-sample geometry along an Euler-gyrostat trajectory (no gravity)."""
    spec = traj.spec
    if spec.family != "classical3_euler":
        raise ValueError(f"zh_trace needs a classical3_euler trajectory, got {spec.family}")
    if np.any(spec.chi):
        raise ValueError("zh_trace needs chi = 0")
    samples, times = [], []
    for i in range(0, len(traj), stride):
        x = traj.point(i)
        M = x.momentum if x.representation == "magnetic" else x.momentum - spec.L
        samples.append(zh_state(spec.J, spec.L, m, M / spec.J))
        times.append(traj.t[i])
    series = {
        "h": np.array([s.h for s in samples]),
        "k": np.array([s.k for s in samples]),
        "|L_pt-N|": np.array([np.linalg.norm(s.L_pt - s.N) for s in samples]),
    }
    drift = {key: float(np.max(np.abs(v - v[0])) / max(abs(v[0]), 1e-8)) for key, v in series.items()}
    flagged = sum(1 for s in samples if s.flags) / len(samples)
    return ZhTrace(np.array(times), samples, drift, flagged)


ZH_COLUMNS = (
    "t", "h", "k",
    "N1", "N2", "N3", "S1", "S2", "S3", "p",
    "K_pt1", "K_pt2", "K_pt3", "F1", "F2", "F3",
    "alpha", "theta", "theta_prime", "flags",
)


def trace_rows(trace: ZhTrace):
    """Rows in :data:`ZH_COLUMNS` order; missing points are NaN."""
    nan3 = [math.nan] * 3
    for t, s in zip(trace.t, trace.samples):
        kp = nan3 if s.K_pt is None else list(s.K_pt)
        f = nan3 if s.F is None else list(s.F)
        yield [float(t), s.h, s.k, *s.N, *s.S, s.p, *kp, *f, s.alpha, s.theta, s.theta_prime, ";".join(s.flags)]
