"""Command-line front end.

Exit codes: 0 success (or entanglement-breaking consistent), 1 semantic
failure (invalid POVM, counterexample found, failed scenario check,
rejected Zeno configuration), 2 usage or parse error.  JSON payloads go to
stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import entanglement, measurement, povm, scenarios, serialize
from .serialize import FormatError, dumps


class UsageError(Exception):
    pass


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def _emit(payload) -> None:
    sys.stdout.write(dumps(payload) + "\n")


def cmd_povm(args) -> int:
    p = serialize.povm_from_json(_load_json(args.input))
    if args.tol is not None:
        p = dataclasses.replace(p, tol=args.tol)
    report = povm.validate_povm(p)
    if args.action == "validate":
        _emit(report.to_dict())
        return 0 if report.passed else 1
    if not report.passed:
        print(
            f"invalid POVM: normalization residual {report.normalization_residual:.6g}",
            file=sys.stderr,
        )
        _emit(report.to_dict())
        return 1
    if args.action == "refine":
        _emit(serialize.refined_to_json(povm.maximally_refine(p)))
    elif args.action == "ic":
        ic, span = povm.is_informationally_complete(p)
        _emit({"ic": ic, "span": span})
    elif args.action == "luders":
        _emit(serialize.instrument_to_json(measurement.luders_instrument(p)))
    elif args.action == "complete":
        n = povm.SharpObservable.from_basis(range(p.dim), np.eye(p.dim), p.tol)
        _emit(serialize.instrument_to_json(measurement.complete_measurement(p, n)))
    return 0


def cmd_ebcheck(args) -> int:
    inst = serialize.instrument_from_json(_load_json(args.input))
    env_dim = args.env_dim if args.env_dim is not None else inst.input_dim
    if env_dim < 2 or inst.input_dim < 2:
        raise UsageError("environment and system dimensions must be at least 2")
    cert = entanglement.certify_entanglement_breaking(inst, env_dim, args.trials, args.seed)
    _emit(cert.to_dict())
    return 0 if cert.verdict == "entanglement_breaking_consistent" else 1


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def _position(args):
    grid = scenarios.uniform_grid(args.grid_points, args.grid_halfwidth)
    ex = scenarios.build_position_spin_example(grid)
    report = scenarios.run_position_example(ex)
    half = [j for j, x in enumerate(grid.points) if x >= 0]
    half_report = scenarios.run_position_example(ex, half)
    probs = np.abs(ex.vacuum) ** 2
    rows = [(j, x, p, 0.5 * p, 0.5 * p) for j, (x, p) in enumerate(zip(grid.points, probs))]
    summary = {
        "scenario": "position-example",
        "grid_points": len(grid),
        "grid_halfwidth": args.grid_halfwidth,
        "all_bins": report.to_dict(),
        "positive_half_line": half_report.to_dict(),
        "passed": report.passed and half_report.passed,
    }
    return summary, ("bin", "x", "probability", "probability_spin_plus", "probability_spin_minus"), rows


def _zeno(args):
    overrides = {}
    if args.config:
        cfg = scenarios.zeno_config_from_json(_load_json(args.config))
        if args.time is not None:
            overrides["total_time"] = args.time  # generator kept as given
    else:
        # canonical generator is rescaled so the rotation angle stays fixed
        cfg = scenarios.canonical_zeno_config(total_time=1.0 if args.time is None else args.time)
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.mode is not None:
        overrides["mode"] = args.mode
    if args.tol is not None:
        overrides["tol"] = args.tol
    cfg = dataclasses.replace(cfg, **overrides)
    res = scenarios.zeno_simulate(cfg)
    checks = res.checks()
    summary = {
        "scenario": "zeno",
        "mode": res.mode,
        "steps": res.steps,
        "total_time": cfg.total_time,
        "preparation_probability": res.preparation_probability,
        "final_survival": res.final_survival,
        "final_fidelity": res.final_fidelity,
        "certified_survival": res.certified_survival,
        "max_negativity": float(np.max(res.negativity)),
        "checks": checks,
        "passed": all(checks.values()),
    }
    return summary, ("step", "survival", "negativity", "fidelity"), res.rows()


def cmd_scenario(args) -> int:
    runner = {"position-example": _position, "zeno": _zeno}[args.name]
    try:
        summary, header, rows = runner(args)
    except (scenarios.CommutantError, scenarios.ZeroProbabilityError, scenarios.NormalizationError) as exc:
        print(f"{args.name}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        stem = args.name.replace("-", "_")
        _write_csv(out / f"{stem}.csv", header, rows)
        (out / f"{stem}_summary.json").write_text(dumps(summary) + "\n")
    _emit(summary)
    return 0 if summary["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compmeas", description="Complete POVM measurements toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("povm", help="validate, refine or analyse a POVM file")
    p.add_argument("action", choices=["validate", "refine", "ic", "luders", "complete"])
    p.add_argument("input")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_povm)

    e = sub.add_parser("ebcheck", help="Monte Carlo entanglement-breaking check of an instrument")
    e.add_argument("input")
    e.add_argument("--trials", type=int, default=200)
    e.add_argument("--seed", type=int, default=42)
    e.add_argument("--env-dim", type=int)
    e.set_defaults(func=cmd_ebcheck)

    s = sub.add_parser("scenario", help="run a worked scenario")
    s.add_argument("name", choices=["position-example", "zeno"])
    s.add_argument("--config")
    s.add_argument("--out")
    s.add_argument("--tol", type=float)
    s.add_argument("--grid-points", type=int, default=64)
    s.add_argument("--grid-halfwidth", type=float, default=6.0)
    s.add_argument("--steps", type=int)
    s.add_argument("--time", type=float)
    s.add_argument("--mode", choices=list(scenarios.MODES))
    s.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "tol", None) is not None and args.tol <= 0:
        parser.error("--tol must be positive")
    try:
        return args.func(args)
    except (ValueError, UsageError) as exc:
        # FormatError and invalid-instrument errors are ValueErrors too
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
