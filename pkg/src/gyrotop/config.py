"""JSON run configurations: schema validation and spec construction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .models import ModelSpec, require_valid
from .poisson import PhasePoint
from .skew import skew_from_entries

DEFAULT_TOLERANCES: dict[str, float] = {
    "lax": 1e-12,
    "lax_negative": 1e-4,
    "drift": 1e-6,
    "ratio_low": 12.0,
    "ratio_high": 20.0,
    "ratio_floor": 1e-12,
    "involution": 1e-9,
    "casimir": 1e-9,
    "rank_rtol": 1e-8,
    "poisson_map": 1e-10,
    "wrong_shift": 1e-3,
    "structure": 1e-13,
    "jacobi": 1e-9,
    "crosscheck": 1e-12,
    "classical_drift": 1e-6,
    "zh_residual": 1e-10,
    "zh_drift": 1e-7,
    "zh_homogeneity": 1e-12,
}


class ConfigError(ValueError):
    """Malformed configuration or command-line input (exit code 2)."""


@dataclass(frozen=True)
class RunParams:
    integrator: str = "rk4"
    dt: float = 1e-3
    T: float = 10.0
    m_transformed: float = 1.0
    seed: int = 0
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    init: PhasePoint | None = None


def load_schema() -> dict[str, Any]:
    text = resources.files("gyrotop").joinpath("data/config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def merge_tolerances(base: dict[str, float], overrides: dict[str, float]) -> dict[str, float]:
    unknown = sorted(set(overrides) - set(DEFAULT_TOLERANCES))
    if unknown:
        raise ConfigError(f"unknown tolerance name(s): {', '.join(unknown)}; known: {', '.join(DEFAULT_TOLERANCES)}")
    out = dict(base)
    out.update({k: float(v) for k, v in overrides.items()})
    return out


def _is_triples(entries) -> bool:
    return bool(entries) and all(isinstance(e, list) for e in entries)


def _matrix(entries, n: int, what: str) -> np.ndarray:
    if entries is None or len(entries) == 0:
        return np.zeros((n, n))
    if not _is_triples(entries):
        raise ConfigError(f"{what} must be a list of [i, j, value] triples")
    try:
        return skew_from_entries(n, entries)
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _vector(entries, n: int, what: str) -> np.ndarray:
    if entries is None:
        return np.zeros(n)
    if _is_triples(entries) or len(entries) != n:
        raise ConfigError(f"{what} must be a list of {n} reals")
    return np.asarray(entries, dtype=float)


def _mass_tensor(cfg: dict, family: str, n: int) -> tuple[np.ndarray, tuple[float, ...]]:
    given = [k for k in ("J", "alpha", "I") if k in cfg]
    if len(given) != 1:
        raise ConfigError(f"give exactly one of J, alpha, I; got {given or 'none'}")
    key = given[0]
    vals = [float(v) for v in cfg[key]]
    if key in ("J", "I"):
        if key == "I" and not family.startswith("classical3"):
            raise ConfigError("I is only used by the classical families; use J or alpha")
        if len(vals) != n:
            raise ConfigError(f"{key} needs {n} entries, got {len(vals)}")
        J = np.array(vals)
        if family == "totally_symmetric":
            return J, (vals[0],)
        if family in ("lagrange_so_so", "bitop", "belyaev_e_n"):
            return J, (vals[0], vals[-1])
        return J, ()
    if family == "totally_symmetric":
        if len(vals) != 1:
            raise ConfigError("totally_symmetric takes alpha = [alpha1]")
        return np.full(n, vals[0]), (vals[0],)
    if family not in ("lagrange_so_so", "bitop", "belyaev_e_n"):
        raise ConfigError(f"alpha is not defined for {family}; give J" + (" or I" if family.startswith("classical3") else ""))
    if len(vals) != 2:
        raise ConfigError(f"{family} takes alpha = [alpha1, alpha2]")
    a1, a2 = vals
    if family == "belyaev_e_n":
        return np.array([a1] * (n - 1) + [a2]), (a1, a2)
    return np.array([a1, a1] + [a2] * (n - 2)), (a1, a2)


def build_spec(cfg: dict) -> ModelSpec:
    """Spec described by an already schema-checked config; not yet validated."""
    family, n = cfg["family"], int(cfg["n"])
    J, alpha = _mass_tensor(cfg, family, n)
    rep = cfg.get("representation", "magnetic")
    if family.startswith("classical3"):
        chi = _vector(cfg.get("chi"), 3, "chi")
        L = _vector(cfg.get("L"), 3, "L")
    elif family == "manakov_gyro":
        if cfg.get("chi"):
            raise ConfigError("manakov_gyro has no field chi")
        chi = None
        L = _matrix(cfg.get("L"), n, "L")
    elif family == "belyaev_e_n":
        chi = _vector(cfg.get("chi"), n, "chi")
        L = _matrix(cfg.get("L"), n, "L")
    else:
        chi = _matrix(cfg.get("chi"), n, "chi")
        L = _matrix(cfg.get("L"), n, "L")
    return ModelSpec(family, n, J, chi, L, alpha, rep)


def build_init(cfg: dict, spec: ModelSpec) -> PhasePoint | None:
    init = cfg.get("init")
    if init is None:
        return None
    n, model = spec.n, spec.model
    if spec.classical:
        mom = _vector(init["momentum"], 3, "init.momentum")
        fld = _vector(init.get("field"), 3, "init.field")
    else:
        mom = _matrix(init["momentum"], n, "init.momentum")
        if model == "so":
            if init.get("field"):
                raise ConfigError("manakov_gyro states have no field part")
            fld = None
        elif model == "e_n":
            fld = _vector(init.get("field"), n, "init.field")
        else:
            fld = _matrix(init.get("field"), n, "init.field")
    return PhasePoint(model, mom, fld, spec.representation)


def parse_config_dict(cfg: Any, validate: bool = True) -> tuple[ModelSpec, RunParams]:
    """Schema-check ``cfg``, build the model spec and run parameters.

    Raises :class:`ConfigError` on schema or encoding problems and
    :class:`~gyrotop.models.ModelError` when the model breaks its family's
    hypotheses (only with ``validate=True``).
    """
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config does not match schema at {where}: {exc.message}") from None
    spec = build_spec(cfg)
    if validate:
        require_valid(spec)
    T = float(cfg.get("T", 10.0))
    dt = float(cfg.get("dt", 1e-3))
    if T < dt:
        raise ConfigError(f"T must be at least dt, got T={T}, dt={dt}")
    params = RunParams(
        integrator=cfg.get("integrator", "rk4"),
        dt=dt,
        T=T,
        m_transformed=float(cfg.get("m_transformed", 1.0)),
        seed=int(cfg.get("seed", 0)),
        tolerances=merge_tolerances(DEFAULT_TOLERANCES, cfg.get("tolerances", {})),
        init=build_init(cfg, spec),
    )
    return spec, params


def parse_config(path: str | Path, validate: bool = True) -> tuple[ModelSpec, RunParams]:
    """Read a JSON config file; see :func:`parse_config_dict`."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None
    return parse_config_dict(cfg, validate)
