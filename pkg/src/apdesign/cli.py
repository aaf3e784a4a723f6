"""Command-line pipeline: decompose -> randomize -> estimate, plus design tools."""

from __future__ import annotations

import argparse
import csv
import io as _stdio
import sys
from pathlib import Path

import numpy as np

from . import io
from .decomposition import decompose_one_to_one
from .design import SEED_MAX, DesignParams, ap_randomize, check_assignment
from .errors import APDesignError, ParseError
from .estimation import estimate
from .many_to_one import decompose_many_to_one, validate_decomposition
from .matching import Mode, build_disagreement
from .optimize import optimize_p, table
from .simulation import ScenarioSpec, run_simulation


def _resolve_seed(args, fallback=None) -> int:
    if args.seed is not None:
        return args.seed
    if fallback is not None:
        return fallback
    if not args.allow_entropy:
        raise ParseError("--seed is required (pass --allow-entropy to draw a fresh one)")
    seed = int(np.random.SeedSequence().entropy) & SEED_MAX
    print(f"seed={seed}", file=sys.stderr)
    return seed


def _seed_arg(text: str) -> int:
    value = int(text)
    if not 0 <= value <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def cmd_decompose(args) -> int:
    mode = Mode(args.mode)
    if mode is Mode.MANY_TO_ONE and args.capacity is None:
        cap_t = io.read_population(io.sidecar_path(args.treatment)) or {}
        if cap_t.get("capacity") is None:
            raise ParseError("--capacity is required for many-to-one")
    mt = io.read_matching(args.treatment, mode, args.capacity)
    mc = io.read_matching(args.control, mode, args.capacity)
    d = build_disagreement(mt, mc)
    if len(d) == 0:
        print("warning: treatment and control plans are identical", file=sys.stderr)
    if mode is Mode.ONE_TO_ONE:
        comps = decompose_one_to_one(d)
    else:
        comps = decompose_many_to_one(d)
    io.write_components(args.output, comps, mode, mt.capacity)
    if args.disagreement_out:
        io.write_json(args.disagreement_out, io.disagreement_to_dict(d, mt.capacity))
    print(f"components={len(comps)} edges={len(d)}")
    return 0


def cmd_randomize(args) -> int:
    comps = io.read_components(args.components).components
    p_map = io.read_p_map(args.p_map) if args.p_map else {}
    params = DesignParams(args.p, _resolve_seed(args), p_map)
    assignment = ap_randomize(comps, params, threads=args.threads)
    io.write_assignment(args.output, assignment)
    print(f"components={len(comps)} selected={sum(map(sum, assignment.w))}")
    return 0


def cmd_estimate(args) -> int:
    cf = io.read_components(args.components)
    assignment = io.read_assignment(args.assignment)
    check_assignment(cf.components, assignment.w)
    y = io.read_outcomes(args.outcomes, cf.mode)
    report = estimate(cf.components, assignment, y, args.n, args.alpha)
    io.write_json(args.output, report.to_dict())
    lo, hi = report.ci
    print(f"tau_hat={report.tau_hat:.6f} ci=[{lo:.6f},{hi:.6f}]")
    return 0


def cmd_optimize_p(args) -> int:
    if args.table:
        rows = table()
    else:
        if args.kind is None or args.length is None:
            raise ParseError("--kind and --length are required without --table")
        rows = [optimize_p(args.kind, args.length)]
    buf = _stdio.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "k", "p_star", "value_per_edge"])
    for r in rows:
        w.writerow([r.kind.value, r.k, repr(r.p_star), repr(r.value_per_edge * args.bound**2)])
    if args.output:
        Path(args.output).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def cmd_simulate(args) -> int:
    try:
        spec = ScenarioSpec.from_file(args.config)
    except OSError as exc:
        raise ParseError(f"{args.config}: {exc.strerror}") from None
    except (ValueError, TypeError, KeyError) as exc:
        raise ParseError(f"{args.config}: {exc}") from None
    spec.seed = _resolve_seed(args, fallback=spec.seed if "seed" in _config_keys(args.config) else None)
    report = run_simulation(spec, threads=args.threads)
    io.write_json(args.output, report.to_dict())
    if args.qq:
        with open(args.qq, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["empirical_q", "normal_q"])
            w.writerows((repr(a), repr(b)) for a, b in report.qq)
    var = "undefined" if report.empirical_variance is None else f"{report.empirical_variance:.6g}"
    print(
        f"bias={report.bias:.6g} empirical_variance={var} "
        f"true_variance={report.true_variance:.6g} ci_coverage={report.ci_coverage:.4f}"
    )
    return 0


def _config_keys(path) -> set:
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return set(tomllib.loads(path.read_text(encoding="utf-8")))
    return set(io.load_json(path))


def cmd_validate(args) -> int:
    comps = io.read_components(args.components).components
    d, _ = io.read_disagreement(args.disagreement)
    report = validate_decomposition(d, comps, args.capacity)
    text = io.dump_json(report.to_dict())
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for c in report.conditions:
        if not c.passed:
            print(f"violation: {c.name} {c.witnesses}", file=sys.stderr)
    return 0 if report.ok else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apdesign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=_seed_arg)
        sp.add_argument("--allow-entropy", action="store_true", help="draw a fresh seed when --seed is absent")

    sp = sub.add_parser("decompose", help="split the disagreement set into alternating components")
    sp.add_argument("--treatment", required=True)
    sp.add_argument("--control", required=True)
    sp.add_argument("--mode", choices=[m.value for m in Mode], required=True)
    sp.add_argument("--capacity", type=_positive_int)
    sp.add_argument("--output", default="components.json")
    sp.add_argument("--disagreement-out", help="also write the disagreement set as JSON")
    common(sp)
    sp.set_defaults(func=cmd_decompose)

    sp = sub.add_parser("randomize", help="draw an AP assignment")
    sp.add_argument("--components", required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--p-map", help="JSON object of per-component p overrides")
    sp.add_argument("--threads", type=_positive_int, default=1)
    sp.add_argument("--output", default="assignment.json")
    common(sp)
    sp.set_defaults(func=cmd_randomize)

    sp = sub.add_parser("estimate", help="HT estimate, variance bound and interval")
    sp.add_argument("--components", required=True)
    sp.add_argument("--assignment", required=True)
    sp.add_argument("--outcomes", required=True)
    sp.add_argument("--alpha", type=float, default=0.95)
    sp.add_argument("--n", type=float, required=True, help="estimand normalizer")
    sp.add_argument("--output", default="report.json")
    common(sp)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("optimize-p", help="minimax selection probability")
    sp.add_argument("--kind", choices=["path", "cycle"])
    sp.add_argument("--length", type=_positive_int)
    sp.add_argument("--table", action="store_true", help="emit the standard grid as CSV")
    sp.add_argument("--bound", type=float, default=1.0)
    sp.add_argument("--output")
    common(sp)
    sp.set_defaults(func=cmd_optimize_p)

    sp = sub.add_parser("simulate", help="Monte Carlo scenario run")
    sp.add_argument("--config", required=True)
    sp.add_argument("--threads", type=_positive_int, default=1)
    sp.add_argument("--output", default="sim_report.json")
    sp.add_argument("--qq", help="write Q-Q pairs CSV")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("validate", help="check a many-to-one decomposition")
    sp.add_argument("--components", required=True)
    sp.add_argument("--disagreement", required=True)
    sp.add_argument("--capacity", type=_positive_int, required=True)
    sp.add_argument("--output")
    common(sp)
    sp.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except APDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
