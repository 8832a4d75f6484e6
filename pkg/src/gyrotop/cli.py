"""Command-line entry point: ``gyrotop COMMAND --config FILE [options]``.

Exit codes: 0 all gated checks pass, 1 a gated check failed (or the
integration broke down), 2 bad input, 3 the model violates its family's
hypotheses.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .certify import (
    Check,
    all_passed,
    applicable,
    certify_all,
    check_rng,
    initial_point,
    monitored_family,
    run_check,
)
from .config import ConfigError, RunParams, merge_tolerances, parse_config
from .integrate import MidpointNonConvergence, drift_report, simulate
from .models import ModelError, ModelSpec
from .poisson import coordinate_labels
from .zhukovskiy import ZH_COLUMNS, trace_rows, zh_trace

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_MODEL = 0, 1, 2, 3

# single-check commands and the registered check each one runs
CHECK_COMMANDS = {
    "check-lax": "lax",
    "check-involution": "involution",
    "check-casimirs": "casimirs",
    "check-rank": "rank",
    "check-poisson-map": "poisson-map",
    "crosscheck-so3": "crosscheck-so3",
}
COMMANDS = ("simulate", *CHECK_COMMANDS, "zhukovskiy-trace", "certify-all")


def fmt(v) -> str:
    """17 significant digits, enough to round-trip a double."""
    if isinstance(v, str):
        return v
    return f"{float(v):.17g}"


def write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def report_json(command: str, spec: ModelSpec, params: RunParams, checks: list[Check]) -> str:
    doc = {
        "command": command,
        "family": spec.family,
        "n": spec.n,
        "seed": params.seed,
        "pass": all_passed(checks),
        "checks": [c.as_dict() for c in checks],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _parse_tol(items: list[str]) -> dict[str, float]:
    out = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        try:
            v = float(value)
        except ValueError:
            raise ConfigError(f"--tol {name}: {value!r} is not a number") from None
        if not v > 0:
            raise ConfigError(f"--tol {name}: tolerance must be positive")
        out[name.strip()] = v
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gyrotop", description="Simulate and certify integrable heavy tops with a gyroscope.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE", help="override one tolerance")
    p.add_argument("--workers", type=int, default=1, help="worker processes for certify-all")
    p.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _print_checks(args, checks: list[Check]) -> None:
    for c in checks:
        mark = "info" if not c.gated else ("PASS" if c.passed else "FAIL")
        _say(args, f"{mark:4s}  {c.name:34s} {c.max_residual:10.3e}  (tol {c.tolerance:g})")


def _finish(args, command: str, spec, params, checks: list[Check]) -> int:
    out = Path(args.out)
    (out / f"{command}.json").write_text(report_json(command, spec, params, checks), encoding="utf-8")
    _print_checks(args, checks)
    return EXIT_OK if all_passed(checks) else EXIT_FAIL


def cmd_simulate(args, spec: ModelSpec, params: RunParams) -> int:
    # same initial state as the conservation check when the config has no init
    x0 = initial_point(spec, params, check_rng(params.seed, "conservation"))
    traj = simulate(params.integrator, spec, x0, params.dt, params.T)
    out = Path(args.out)
    header = ["t", *coordinate_labels(spec.model, spec.n)]
    write_csv(out / "trajectory.csv", header, ([t, *z] for t, z in zip(traj.t, traj.states)))
    rows = drift_report(traj, monitored_family(spec))
    write_csv(out / "drift.csv", ["label", "kind", "initial", "max_rel_drift"],
              ([r.label, r.kind, r.initial, r.max_drift] for r in rows))
    worst = max(rows, key=lambda r: r.max_drift)
    _say(args, f"{len(traj)} samples, {params.integrator} dt={params.dt:g}; worst drift {worst.max_drift:.3e} ({worst.label})")
    return EXIT_OK


def cmd_zhukovskiy(args, spec: ModelSpec, params: RunParams) -> int:
    reason = applicable(spec, "zhukovskiy")
    if reason:
        raise ConfigError(f"zhukovskiy-trace: {reason}")
    x0 = initial_point(spec, params, check_rng(params.seed, "conservation"))
    trace = zh_trace(simulate(params.integrator, spec, x0, params.dt, params.T), params.m_transformed)
    write_csv(Path(args.out) / "zhukovskiy.csv", ZH_COLUMNS, trace_rows(trace))
    return _finish(args, "zhukovskiy-trace", spec, params, run_check("zhukovskiy", spec, params))


def run(args) -> int:
    if args.seed is not None and args.seed < 0:
        raise ConfigError("--seed must be nonnegative")
    spec, params = parse_config(args.config)
    overrides = _parse_tol(args.tol)
    params = RunParams(
        params.integrator, params.dt, params.T, params.m_transformed,
        params.seed if args.seed is None else args.seed,
        merge_tolerances(params.tolerances, overrides), params.init,
    )
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    if args.command in CHECK_COMMANDS:
        name = CHECK_COMMANDS[args.command]
        reason = applicable(spec, name)
        if reason:
            raise ConfigError(f"{args.command}: {reason}")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    if args.command == "simulate":
        return cmd_simulate(args, spec, params)
    if args.command == "zhukovskiy-trace":
        return cmd_zhukovskiy(args, spec, params)
    if args.command == "certify-all":
        return _finish(args, "certify-all", spec, params, certify_all(spec, params, args.workers))
    return _finish(args, args.command, spec, params, run_check(CHECK_COMMANDS[args.command], spec, params))


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ModelError as exc:
        print("model validation failed:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_MODEL
    except (MidpointNonConvergence, FloatingPointError) as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["main", "run", "build_parser", "COMMANDS", "fmt", "write_csv", "report_json"]
