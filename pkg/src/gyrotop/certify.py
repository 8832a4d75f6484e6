"""Certification checks for one model spec.

Each check draws its random points from its own generator, seeded by the
run seed and the check's position in :data:`CHECK_ORDER`, so a check gives
the same numbers whether it runs alone, inside ``certify_all`` or in a
worker process.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import diagnostics as dg
from . import lax
from .config import DEFAULT_TOLERANCES, RunParams
from .integrate import drift_report, n_steps, simulate
from .models import (
    ModelSpec,
    fourth_integral,
    hamiltonian_field,
    random_point,
    require_valid,
    symmetry_subalgebra,
)
from .poisson import IntegralFamily, PhasePoint, casimirs, hamiltonian_vector_field
from .skew import inner, skew
from .zhukovskiy import DEGENERATE_CONE, PARALLEL_PLANE, max_residual, zh_state, zh_trace, zh_verify

POINTS = 20
LAX_POINTS = 100
ZH_STATES = 1000
DRIFT_SAMPLES = 200


@dataclass(frozen=True)
class Check:
    """One line of a report. ``gated=False`` lines are informational."""

    name: str
    max_residual: float
    tolerance: float
    passed: bool
    gated: bool = True
    detail: str = ""

    def as_dict(self) -> dict:
        r = self.max_residual
        return {
            "name": self.name,
            "max_residual": r if math.isfinite(r) else None,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
            "gated": self.gated,
            "detail": self.detail,
        }


def _upper(name: str, value: float, tol: float, detail: str = "", gated: bool = True) -> Check:
    return Check(name, float(value), float(tol), bool(value <= tol), gated, detail)


def _points(spec: ModelSpec, rng: np.random.Generator, count: int, representation: str | None = None):
    return [random_point(spec, rng, representation) for _ in range(count)]


# --- Lax identity ------------------------------------------------------------------


def broken_gyro(spec: ModelSpec, rng: np.random.Generator, size: float = 0.1) -> np.ndarray:
    """``L`` plus a component of pairing norm ``size`` outside h."""
    h = symmetry_subalgebra(spec)
    w = skew(rng.uniform(-1, 1, (spec.n, spec.n)))
    v = w - h.project(w)
    return spec.L + size * v / math.sqrt(inner(v, v))


def _has_complement(spec: ModelSpec) -> bool:
    return not spec.classical and symmetry_subalgebra(spec).dim < spec.n * (spec.n - 1) // 2


def check_lax(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    tol = params.tolerances
    res = [lax.lax_residual(spec, x) for x in _points(spec, rng, LAX_POINTS)]
    out = [_upper("lax.residual", max(res), tol["lax"], f"{LAX_POINTS} random unit-scale points")]
    if _has_complement(spec):
        bad = spec.with_(L=broken_gyro(spec, rng))
        neg = np.array([lax.lax_residual(bad, x, check=False) for x in _points(bad, rng, LAX_POINTS)])
        frac = float(np.mean(neg >= tol["lax_negative"]))
        q = float(np.quantile(neg, 0.1))
        out.append(Check(
            "lax.negative_control", q, tol["lax_negative"], frac >= 0.9, True,
            f"L shifted off h by norm 0.1; max_residual is the 10% quantile (a lower bound); "
            f"fraction of points >= tolerance: {frac:.2f}",
        ))
    return out


# --- conservation ------------------------------------------------------------------


def monitored_family(spec: ModelSpec) -> IntegralFamily:
    """Hamiltonian, Casimirs, spectral invariants and shift integrals (classical: fourth integral)."""
    fam = IntegralFamily([hamiltonian_field(spec)]) + casimirs(spec.model, spec.n, spec.L)
    if spec.classical:
        return fam + IntegralFamily([fourth_integral(spec)])
    return fam + lax.spectral_invariants(spec) + lax.shift_integrals(spec).of_kind("shift")


def initial_point(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> PhasePoint:
    return params.init if params.init is not None else random_point(spec, rng)


def check_conservation(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    """rk4 drift at ``dt`` and ``dt/2``; the ratio measures the order of convergence."""
    tol = params.tolerances
    x0 = initial_point(spec, params, rng)
    fam = monitored_family(spec)
    stride = max(1, n_steps(params.dt, params.T) // DRIFT_SAMPLES)
    coarse = drift_report(simulate("rk4", spec, x0, params.dt, params.T), fam, stride)
    fine = drift_report(simulate("rk4", spec, x0, params.dt / 2, params.T), fam, 2 * stride)
    worst = max(coarse, key=lambda r: r.max_drift)
    if spec.classical:
        return [_upper("conservation.drift", worst.max_drift, tol["classical_drift"],
                       f"worst: {worst.label}; rk4 dt={params.dt:g}, T={params.T:g}")]
    out = [_upper("conservation.drift", worst.max_drift, tol["drift"],
                  f"worst: {worst.label}; rk4 dt={params.dt:g}, T={params.T:g}")]
    lo, hi, floor = tol["ratio_low"], tol["ratio_high"], tol["ratio_floor"]
    ratios = []
    for a, b in zip(coarse, fine):
        if a.max_drift >= floor:
            ratios.append((a.label, a.max_drift / b.max_drift if b.max_drift > 0 else math.inf))
    miss = [max(lo - r, r - hi, 0.0) for _, r in ratios]
    dist = max(miss, default=0.0)
    if ratios:
        rs = [r for _, r in ratios]
        worst_label = ratios[int(np.argmax(miss))][0]
        detail = (f"{len(ratios)} of {len(coarse)} quantities above the {floor:g} floor; ratios in "
                  f"[{min(rs):.2f}, {max(rs):.2f}], window [{lo:g}, {hi:g}]; furthest: {worst_label}")
    else:
        detail = f"all {len(coarse)} drifts below the {floor:g} floor; ratio not resolvable"
    out.append(Check("conservation.ratio", dist, 0.0, dist == 0.0, True, detail))
    return out


# --- involution, Casimirs, rank ------------------------------------------------------


def check_involution(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    fam = dg.integrability_family(spec)
    rep = dg.involution_matrix(spec, fam, _points(spec, rng, POINTS))
    norm = rep.max_asserted(normalized=True)
    pairs = int(np.triu(rep.asserted, 1).sum())
    a, b, _ = rep.worst_pair()
    # the raw bracket is the literal criterion; in double precision its rounding floor grows
    # with |grad f| |grad g|, so the scale-free normalized residual is reported beside it
    return [
        _upper("involution.raw", rep.max_asserted(), params.tolerances["involution"],
               f"{len(fam)} integrals, {pairs} asserted pairs, {POINTS} points; worst pair {{{a}, {b}}}"),
        _upper("involution.normalized", norm, params.tolerances["involution"],
               "|{f,g}| / (|grad f| |grad g|) over the same pairs"),
    ]


def check_casimirs(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    """``{C, z}`` for every Casimir ``C`` and coordinate ``z``, relative to ``|grad C|``."""
    cas = casimirs(spec.model, spec.n, spec.L)
    worst = 0.0
    for x in _points(spec, rng, POINTS):
        gyro = dg.bracket_gyro(spec, x)
        for C in cas:
            g = float(np.linalg.norm(C.grad(x).coords()))
            v = float(np.max(np.abs(hamiltonian_vector_field(C, x, gyro).coords())))
            worst = max(worst, v / g if g > 0 else v)
    return [_upper("casimirs.annihilate", worst, params.tolerances["casimir"],
                   f"{len(cas)} Casimirs ({', '.join(cas.labels)}) against all coordinates, {POINTS} points")]


def check_rank(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    rtol = params.tolerances["rank_rtol"]
    pts = _points(spec, rng, POINTS)
    count = dg.completeness_count(spec)
    oracle = dg.expected_rank_oracle(spec, pts)
    fam = dg.integrability_family(spec, commutative=True)
    ranks = [dg.independence_rank(fam, x, rtol) for x in pts]
    missed = sum(r != count.expected_rank for r in ranks)
    brute = dg.brute_force_rank(fam, pts[0])
    return [
        _upper("rank.count_vs_oracle", abs(count.expected_rank - oracle.expected_rank), 0.0,
               f"closed-form expected rank {count.expected_rank}, Poisson-tensor oracle {oracle.expected_rank}"),
        _upper("rank.missed_points", missed, 1.0,
               f"expected {count.expected_rank} from {len(fam)} commuting integrals; ranks seen {sorted(set(ranks))}"),
        _upper("rank.brute_force", abs(brute - ranks[0]), 0.0,
               f"finite-difference rank {brute} vs analytic {ranks[0]} at the first point"),
    ]


# --- bracket structure --------------------------------------------------------------


def check_poisson_map(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    tol = params.tolerances
    pts = _points(spec, rng, 5, "magnetic")
    good = dg.poisson_map_check(spec.L, pts, np.random.default_rng(rng.integers(2**63)), pairs=50)
    wrong = dg.poisson_map_check(spec.L, pts, np.random.default_rng(rng.integers(2**63)), pairs=50,
                                 shift_factor=-1.0)
    return [
        _upper("poisson_map.shift", good, tol["poisson_map"], "(M, Gamma) -> (M + L, Gamma), 50 polynomial pairs"),
        Check("poisson_map.wrong_shift_control", wrong, tol["wrong_shift"], wrong >= tol["wrong_shift"], True,
              "shift by -L must fail; max_residual is the detected violation (a lower bound)"),
    ]


def check_structure(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    tol = params.tolerances
    rel = jac = 0.0
    for rep in ("magnetic", "standard"):
        for x in _points(spec, rng, 3, rep):
            gyro = dg.bracket_gyro(spec, x)
            rel = max(rel, dg.structure_relation_residual(x, gyro))
            jac = max(jac, dg.jacobi_residual(x, gyro, rng))
    return [
        _upper("structure.relations", rel, tol["structure"], "every ordered index tuple, both representations"),
        _upper("structure.jacobi", jac, tol["jacobi"], "20 random linear triples at 6 points"),
    ]


def check_crosscheck(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    res = max(dg.crosscheck_so3(spec, x) for x in _points(spec, rng, LAX_POINTS))
    return [_upper("crosscheck_so3", res, params.tolerances["crosscheck"],
                   f"matrix field vs vector Euler-Poisson field, {LAX_POINTS} points")]


# --- Zhukovskiy --------------------------------------------------------------------


def check_zhukovskiy(spec: ModelSpec, params: RunParams, rng: np.random.Generator) -> list[Check]:
    tol = params.tolerances
    m = params.m_transformed
    I, L = spec.J, spec.L
    worst, skipped = 0.0, 0
    for _ in range(ZH_STATES):
        geom = zh_state(I, L, m, rng.uniform(-1, 1, 3))
        if geom.flags:
            skipped += 1
            continue
        worst = max(worst, max_residual(zh_verify(geom)))
    homog = 0.0
    for _ in range(POINTS):
        om, c = rng.uniform(-1, 1, 3), rng.uniform(0.5, 2.0)
        for gyro in (np.zeros(3), L):
            a = zh_state(I, gyro, m, om).theta
            b = zh_state(I, c * gyro, m, c * om).theta
            homog = max(homog, abs(b - c * a) / abs(c * a))
    x0 = initial_point(spec, params, rng)
    trace = zh_trace(simulate("rk4", spec, x0, params.dt, params.T), m,
                     stride=max(1, n_steps(params.dt, params.T) // DRIFT_SAMPLES))
    drift = max(trace.drift.values())
    which = max(trace.drift, key=trace.drift.get)
    return [
        _upper("zhukovskiy.residuals", worst, tol["zh_residual"],
               f"{ZH_STATES - skipped} non-degenerate states ({skipped} flagged {DEGENERATE_CONE!r} or "
               f"{PARALLEL_PLANE!r} and skipped)"),
        _upper("zhukovskiy.homogeneity", homog, tol["zh_homogeneity"],
               "theta(c Omega) = c theta(Omega) with L = 0 and with L scaled by c"),
        _upper("zhukovskiy.trajectory_drift", drift, tol["zh_drift"],
               f"relative drift of h, k, |L_pt - N|; worst {which}; flagged fraction {trace.flagged_fraction:.3f}"),
        _upper("zhukovskiy.flagged_fraction", trace.flagged_fraction, 0.01,
               "share of trajectory samples flagged degenerate", gated=False),
    ]


# --- registry ----------------------------------------------------------------------

CheckFn = Callable[[ModelSpec, RunParams, np.random.Generator], "list[Check]"]

CHECKS: dict[str, CheckFn] = {
    "lax": check_lax,
    "conservation": check_conservation,
    "involution": check_involution,
    "casimirs": check_casimirs,
    "rank": check_rank,
    "poisson-map": check_poisson_map,
    "structure": check_structure,
    "crosscheck-so3": check_crosscheck,
    "zhukovskiy": check_zhukovskiy,
}
CHECK_ORDER = tuple(CHECKS)


def applicable(spec: ModelSpec, name: str) -> str | None:
    """``None`` if ``name`` applies to ``spec``, else the reason it does not."""
    if name == "lax" and spec.classical:
        return "the classical vector families have no Lax pair here"
    if name == "poisson-map" and not np.any(spec.L):
        return "L = 0: the shift map is the identity"
    if name == "crosscheck-so3" and (spec.classical or spec.n != 3):
        return "needs a matrix family with n = 3"
    if name == "zhukovskiy" and (spec.family != "classical3_euler" or np.any(spec.chi)):
        return "needs classical3_euler with chi = 0"
    return None


def check_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, CHECK_ORDER.index(name)])


def run_check(name: str, spec: ModelSpec, params: RunParams) -> list[Check]:
    """Run one registered check; raises ``ValueError`` when it does not apply."""
    reason = applicable(spec, name)
    if reason:
        raise ValueError(f"{name} does not apply to {spec.family} (n={spec.n}): {reason}")
    require_valid(spec)
    return CHECKS[name](spec, params, check_rng(params.seed, name))


def _run_named(args: tuple[str, ModelSpec, RunParams]) -> list[Check]:
    return run_check(*args)


def certify_all(spec: ModelSpec, params: RunParams, workers: int = 1) -> list[Check]:
    """Every applicable check, in :data:`CHECK_ORDER` regardless of ``workers``."""
    require_valid(spec)
    names = [c for c in CHECK_ORDER if applicable(spec, c) is None]
    tasks = [(c, spec, params) for c in names]
    if workers <= 1:
        results = [_run_named(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_named, tasks))
    return [chk for group in results for chk in group]


def all_passed(checks: list[Check]) -> bool:
    return all(c.passed for c in checks if c.gated)


__all__ = [
    "Check",
    "CHECKS",
    "CHECK_ORDER",
    "DEFAULT_TOLERANCES",
    "applicable",
    "broken_gyro",
    "certify_all",
    "monitored_family",
    "run_check",
    "all_passed",
]
