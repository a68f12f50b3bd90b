"""Command-line front end.

Exit codes: 0 success, 1 a bound or cascade inequality failed, 2 bad input
(including size guards), 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from .capacity import DEFAULT_TOL, capacity, scale_to_doubly_stochastic
from .cascade import BOUND_NAMES, best_order_bound, build_cascade, certify_bound, verify_step_inequality
from .constants import G, vdw
from .errors import CapacityGuardError, NotAttainedError, NumericError, StableCapError
from .matrices import (
    PsdTuple,
    det_polynomial,
    enumerate_lambda,
    lambda_first_rows,
    mixed_discriminant,
    permanent,
    permanent_naive,
    prod_polynomial,
    read_matrix_csv,
)
from .poly import HomPoly
from .stability import ROOT_TOL, h_stable_test

DEFAULT_SEED = 20240229
EXIT_OK, EXIT_VIOLATED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_matrix(path: str) -> np.ndarray:
    try:
        return read_matrix_csv(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_input(path: str) -> tuple[HomPoly, np.ndarray | None]:
    """A matrix CSV gives ``Prod_A``; JSON is a polynomial or a PSD tuple (then ``Det``)."""
    if Path(path).suffix.lower() == ".csv":
        A = _load_matrix(path)
        return prod_polynomial(A), A
    obj = _read_json(path)
    if "matrices" in obj:
        return det_polynomial(PsdTuple.from_json_obj(obj)), None
    return HomPoly.from_json_obj(obj), None


def _load_poly(path: str) -> HomPoly:
    return _load_input(path)[0]


def _lambda_shard(args):
    k, n, first_row = args
    count, best, argmin = 0, None, None
    for M in enumerate_lambda(k, n, first_row=first_row):
        count += 1
        v = permanent(M.tolist(), exact=True)
        if best is None or v < best:
            best, argmin = v, M.tolist()
    return count, best, argmin


def lambda_min(k: int, n: int, jobs: int = 1) -> dict:
    """Exhaustive ``min per`` over ``Lambda(k, n)`` against the sparse lower bound."""
    # enumerate_lambda enforces the budget; call it once so guards fire before forking
    next(enumerate_lambda(k, n))
    shards = [(k, n, tuple(r)) for r in lambda_first_rows(k, n)] if n > 1 else [(k, n, None)]
    if jobs > 1 and len(shards) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_lambda_shard, shards))
    else:
        results = [_lambda_shard(s) for s in shards]
    count, best, argmin = 0, None, None
    for c, v, a in results:
        count += c
        if v is not None and (best is None or v < best):
            best, argmin = v, a
    if k <= n:
        bound = Fraction(k) ** n * Fraction(G(k)) ** (n - k) * Fraction(vdw(k))
    else:
        bound = Fraction(k) ** n * Fraction(vdw(n))
    return {
        "k": k,
        "n": n,
        "count": count,
        "min_per": float(best),
        "argmin": argmin,
        "bound": float(bound),
        "slack": float(best - bound),
    }


# -- output ---------------------------------------------------------------------


def _plain(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _emit(obj: dict, fmt: str, out) -> None:
    obj = _plain(obj)
    if fmt == "json":
        out.write(json.dumps(obj) + "\n")
        return
    width = max((len(k) for k in obj), default=0)
    for key, val in obj.items():
        text = format(val, ".10g") if isinstance(val, float) else json.dumps(val) if isinstance(val, (list, dict)) else str(val)
        out.write(f"{key:<{width}}  {text}\n")


# -- subcommands -------------------------------------------------------------------


def cmd_permanent(args, out) -> int:
    A = _load_matrix(args.input)
    v = permanent_naive(A) if args.method == "naive" else permanent(A)
    if args.format == "json":
        _emit({"permanent": float(v)}, "json", out)
    else:
        out.write(format(float(v), ".10g") + "\n")
    return EXIT_OK


def cmd_mixed_disc(args, out) -> int:
    T = PsdTuple.from_json_obj(_read_json(args.input))
    v = float(mixed_discriminant(T))
    if args.format == "json":
        _emit({"mixed_discriminant": v}, "json", out)
    else:
        out.write(format(v, ".10g") + "\n")
    return EXIT_OK


def cmd_capacity(args, out) -> int:
    res = capacity(_load_poly(args.input), tol=args.tol)
    _emit(res.to_json_obj(), args.format, out)
    return EXIT_OK


def cmd_scale(args, out) -> int:
    res = scale_to_doubly_stochastic(_load_poly(args.input))
    _emit(res.to_json_obj(), args.format, out)
    return EXIT_OK


def cmd_certify(args, out) -> int:
    p, A = _load_input(args.input)
    src = A if A is not None else p
    if args.order_samples:
        cert = best_order_bound(src, args.bound, samples=args.order_samples, seed=args.seed, k=args.k)
    else:
        cert = certify_bound(src, args.bound, k=args.k)
    _emit(cert.to_json_obj(), args.format, out)
    return EXIT_OK if cert.holds() else EXIT_VIOLATED


def cmd_lambda_min(args, out) -> int:
    _emit(lambda_min(args.k, args.n, args.jobs), args.format, out)
    return EXIT_OK


def cmd_stability(args, out) -> int:
    verdict = h_stable_test(_load_poly(args.input), trials=args.trials, tol=args.tol or ROOT_TOL, seed=args.seed)
    _emit(verdict.to_json_obj(), args.format, out)
    return EXIT_OK


def cmd_cascade(args, out) -> int:
    steps = build_cascade(_load_poly(args.input))
    rows = []
    ok = True
    for s in steps:
        row = {
            "level": s.level,
            "top_degree": s.top_degree,
            "step_factor": float(s.step_factor),
            "capacity": s.capacity.value,
            "degenerate": s.degenerate,
        }
        if s.level >= 2:
            rep = verify_step_inequality(steps, s.level)
            row.update(slack=rep.slack, slack_uniform=rep.slack_uniform, holds=rep.holds)
            ok &= rep.holds
        rows.append(row)
    report = {"steps": rows, "q1": steps[-1].capacity.value, "all_hold": ok}
    if args.format == "json":
        _emit(report, "json", out)
    else:
        for row in rows:
            _emit(row, "table", out)
            out.write("\n")
    return EXIT_OK if ok else EXIT_VIOLATED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "table"], default=None)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(prog="stablecap", description="Capacity, permanents and stable-polynomial bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("permanent", parents=[common], help="permanent of a CSV matrix")
    p.add_argument("input")
    p.add_argument("--method", choices=["ryser", "naive"], default="ryser")
    p.set_defaults(func=cmd_permanent, default_format="table")

    p = sub.add_parser("mixed-disc", parents=[common], help="mixed discriminant of a PSD tuple (JSON)")
    p.add_argument("input")
    p.set_defaults(func=cmd_mixed_disc, default_format="table")

    p = sub.add_parser("capacity", parents=[common], help="capacity of a polynomial, matrix or PSD tuple")
    p.add_argument("input")
    p.set_defaults(func=cmd_capacity, default_format="json")

    p = sub.add_parser("scale", parents=[common], help="doubly-stochastic scaling")
    p.add_argument("input")
    p.set_defaults(func=cmd_scale, default_format="json")

    p = sub.add_parser("certify", parents=[common], help="certify a permanent-type lower bound")
    p.add_argument("input")
    p.add_argument("--bound", choices=BOUND_NAMES, default="vdw")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--order-samples", type=int, default=0, help="also try this many random variable orders")
    p.set_defaults(func=cmd_certify, default_format="json")

    p = sub.add_parser("lambda-min", parents=[common], help="minimum permanent over Lambda(k, n)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_lambda_min, default_format="json")

    p = sub.add_parser("stability", parents=[common], help="randomized H-stability test")
    p.add_argument("input")
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_stability, default_format="json")

    p = sub.add_parser("cascade", parents=[common], help="derivative cascade and per-step inequalities")
    p.add_argument("input")
    p.set_defaults(func=cmd_cascade, default_format="json")
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.format is None:
        args.format = args.default_format
    if args.tol is None and args.command == "capacity":
        args.tol = DEFAULT_TOL
    try:
        return args.func(args, out)
    except (NumericError, NotAttainedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, CapacityGuardError, StableCapError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
