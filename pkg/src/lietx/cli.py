"""Command-line front end ``lietx``.

Exit codes: 0 success, 2 malformed input, 3 grading violation, 4 resonance
abort, 5 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from importlib import resources

import numpy as np

from . import io as lio
from .algebra import DimensionError
from .normalform import (
    Diagnostics,
    NormalFormResult,
    ResonanceError,
    conjugacy_defect,
    normalize,
)
from .oracle import conjugacy_residual, iterate_numeric
from .represent import (
    GradingError,
    bch_compose,
    compose_transforms,
    factor_map,
    map_from_left_factor,
    map_from_right_factor,
)

EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_GRADING = 3
EXIT_RESONANCE = 4
EXIT_VERIFY = 5

BUILTIN_PREFIX = "builtin:"
FLOAT_REL_TOL = 1e-10


class VerifyFailure(Exception):
    def __init__(self, report: dict):
        super().__init__("verification failed")
        self.report = report


def _read_json(path: str):
    try:
        if path.startswith(BUILTIN_PREFIX):
            name = path[len(BUILTIN_PREFIX):]
            text = resources.files("lietx").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
        else:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
    except (OSError, FileNotFoundError) as exc:
        raise lio.SpecError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise lio.SpecError(f"{path}: invalid JSON ({exc})") from exc


def _spec(args):
    doc = _read_json(args.spec)
    return lio.spec_from_json(doc, order=args.order, cutoff=args.cutoff, mode=args.mode)


def _emit(args, doc) -> None:
    text = lio.dumps(doc, args.format)
    if args.out and args.out != "-":
        lio.write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _seq_or_empty(doc, key, ring):
    if key not in doc:
        raise lio.SpecError(f"result file has no {key!r} series")
    seq, _ = lio.sequence_from_json(doc[key], ring)
    return seq


# ---------------------------------------------------------------------------
# commands


def cmd_represent(args) -> int:
    spec = _spec(args)
    V, W = factor_map(spec)
    _emit(args, {"V": lio.sequence_to_json(V, spec.order), "W": lio.sequence_to_json(W, spec.order)})
    return EXIT_OK


def cmd_normalize(args) -> int:
    spec = _spec(args)
    result = normalize(spec, args.driver, tol_resonance=args.tol_resonance, divisor_floor=args.divisor_floor)
    _emit(args, lio.result_to_json(result))
    return EXIT_OK


def _split_ref(ref: str):
    """``PATH:KEY`` selects one series inside a result document."""
    if ref.startswith(BUILTIN_PREFIX):
        return ref, None
    head, sep, tail = ref.rpartition(":")
    if sep and head and "/" not in tail and not tail.endswith(".json"):
        return head, tail
    return ref, None


def _load_sequence(ref: str, mode: str | None):
    path, key = _split_ref(ref)
    doc = _read_json(path)
    if key is not None:
        if key not in doc:
            raise lio.SpecError(f"{path} has no series {key!r}")
        doc = doc[key]
    if "terms" not in doc:
        raise lio.SpecError(f"{path}: not a series document (select one with PATH:KEY)")
    if mode is not None:
        doc = dict(doc, mode=mode)
    return lio.sequence_from_json(doc)


def cmd_compose(args) -> int:
    A, na = _load_sequence(args.first, args.mode)
    B, nb = _load_sequence(args.second, args.mode)
    if A.ring != B.ring:
        raise DimensionError("sequences live in different rings")
    N = args.order if args.order is not None else min(na, nb)
    if args.bch:
        Z = bch_compose(A[1], B[1], N)
    else:
        Z = compose_transforms(A, B, N)
    _emit(args, {"Z": lio.sequence_to_json(Z, N)})
    return EXIT_OK


def _tol(exact: bool, *seqs) -> float | None:
    if exact:
        return None
    scale = max([1.0] + [X.max_abs() for S in seqs for _, X in S.items()])
    return FLOAT_REL_TOL * scale


def _first_bad_order(diff, tol) -> int | None:
    orders = sorted(diff.orders())
    for o in orders:
        part = diff.part(o)
        if tol is None or part.max_abs() > tol:
            return o
    return None


def cmd_verify(args) -> int:
    spec = _spec(args)
    doc = _read_json(args.result)
    ring = spec.ring
    exact = ring.domain.exact
    N = spec.order
    if "X" in doc and "Z" in doc:
        X = _seq_or_empty(doc, "X", ring)
        Z = _seq_or_empty(doc, "Z", ring)
        W = _seq_or_empty(doc, "W", ring) if "W" in doc else factor_map(spec)[1]
        driver = doc.get("driver", "transform")
        if driver not in ("transform", "series"):
            raise lio.SpecError(f"unknown driver {driver!r} in result")
        _, W_ref = factor_map(spec)
        tol = _tol(exact, X, Z, W)
        result = NormalFormResult(spec, X, Z, W, {}, Diagnostics(), driver)
        defect = conjugacy_defect(result)
        bad = _first_bad_order(defect, tol)
        w_bad = None
        for s in range(1, N + 1):
            if not W[s].equals(W_ref[s], tol):
                w_bad = s
                break
        report = {
            "check": "conjugacy",
            "driver": driver,
            "order": N,
            "mode": "exact" if exact else "float",
            "conjugacy_identity": bad is None,
            "factorization_matches": w_bad is None,
            "max_defect": defect.max_abs(),
        }
        if bad is not None or w_bad is not None:
            report["failed_order"] = min(o for o in (bad, w_bad) if o is not None)
        if not exact:
            rho = args.radius
            r1 = conjugacy_residual(spec, result, rho, seed=args.seed)
            r2 = conjugacy_residual(spec, result, rho / 2, seed=args.seed)
            report["residual"] = r1
            report["residual_half"] = r2
            report["residual_ratio"] = (r1["max_residual"] / r2["max_residual"]) if r2["max_residual"] > 0 else None
        report["pass"] = bad is None and w_bad is None
    elif "V" in doc and "W" in doc:
        V = _seq_or_empty(doc, "V", ring)
        W = _seq_or_empty(doc, "W", ring)
        tol = _tol(exact, V, W)
        target = spec.coordinates().truncate(N)
        U = spec.unperturbed
        left = map_from_left_factor(U, V, N) - target
        right = map_from_right_factor(U, W, N) - target
        bad = [o for o in (_first_bad_order(left, tol), _first_bad_order(right, tol)) if o is not None]
        report = {
            "check": "factorization",
            "order": N,
            "mode": "exact" if exact else "float",
            "reconstruction_error": max(left.max_abs(), right.max_abs()),
            "pass": not bad,
        }
        if bad:
            report["failed_order"] = min(bad)
    else:
        raise lio.SpecError("result file holds neither a normal form (X, Z) nor a factorization (V, W)")
    _emit(args, report)
    if not report["pass"]:
        raise VerifyFailure(report)
    return EXIT_OK


def _parse_point(text: str, n: int, torus: bool):
    try:
        vals = [complex(t.strip().replace(" ", "")) for t in text.split(",")]
    except ValueError as exc:
        raise lio.SpecError(f"bad point {text!r}") from exc
    if len(vals) != n:
        raise lio.SpecError(f"point needs {n} coordinates")
    if torus:
        if any(v.imag for v in vals):
            raise lio.SpecError("angles and actions are real")
        return np.array([v.real for v in vals])
    return np.array(vals)


def cmd_iterate(args) -> int:
    spec = _spec(args)
    torus = spec.kind == "kronecker"
    x0 = _parse_point(args.point, spec.ring.nvars, torus)
    traj = iterate_numeric(spec, x0, args.steps)
    if torus:
        pts = [[float(v) for v in p] for p in traj.points]
    else:
        pts = [[[float(v.real), float(v.imag)] for v in p] for p in traj.points]
    _emit(args, {"steps": traj.steps, "diverged": traj.diverged, "trajectory": pts})
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=_positive_int, help="truncation order N (overrides the map file)")
    common.add_argument("--cutoff", type=_positive_int, help="Fourier cutoff K1 (overrides the map file)")
    common.add_argument("--mode", choices=["float", "exact"], help="coefficient arithmetic")
    common.add_argument("--out", help="output file (default: stdout); written atomically")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--tol-resonance", type=_positive_float, default=1e-10)
    common.add_argument("--divisor-floor", type=_positive_float, default=1e-6)

    p = argparse.ArgumentParser(prog="lietx", description="Lie-series representation and normal forms of maps.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("represent", parents=[common], help="factor a map as R o T_V and T_W o R")
    s.add_argument("spec", help="map specification (JSON file or builtin:NAME)")
    s.set_defaults(func=cmd_represent)

    s = sub.add_parser("normalize", parents=[common], help="compute the normal form")
    s.add_argument("spec")
    s.add_argument("--driver", choices=["transform", "series"], default="transform")
    s.set_defaults(func=cmd_normalize)

    s = sub.add_parser("verify", parents=[common], help="check a result against the oracles")
    s.add_argument("spec")
    s.add_argument("result", help="output of normalize or represent")
    s.add_argument("--radius", type=_positive_float, default=0.05,
                   help="sample radius (perturbation size for torus maps)")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("compose", parents=[common], help="generating sequence of T_A o T_B")
    s.add_argument("first", help="series file, optionally PATH:KEY")
    s.add_argument("second", help="series file, optionally PATH:KEY")
    s.add_argument("--bch", action="store_true", help="compose exp(L_A1) o exp(L_B1) of two order-1 fields")
    s.set_defaults(func=cmd_compose)

    s = sub.add_parser("iterate", parents=[common], help="iterate the map numerically")
    s.add_argument("spec")
    s.add_argument("--point", required=True, help="comma-separated start point (complex allowed)")
    s.add_argument("--steps", type=_positive_int, default=10)
    s.set_defaults(func=cmd_iterate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return args.func(args)
    except VerifyFailure as exc:
        print(f"lietx: verification failed at order {exc.report.get('failed_order')}", file=sys.stderr)
        return EXIT_VERIFY
    except GradingError as exc:
        print(f"lietx: grading violation: {exc}", file=sys.stderr)
        return EXIT_GRADING
    except ResonanceError as exc:
        print(f"lietx: resonance at order {exc.order}, mode {exc.mode}: {exc}", file=sys.stderr)
        return EXIT_RESONANCE
    except (lio.SpecError, DimensionError, ValueError, TypeError, KeyError) as exc:
        print(f"lietx: malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
