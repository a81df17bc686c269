"""Command-line front end.

Every subcommand prints one JSON report on stdout and a one-line summary on
stderr.  Exit status: 0 success, 1 boundary classification, 2 usage or input
error, 3 numeric failure (wrong class, budget exceeded, no convergence).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from ._scalars import DEFAULT_RTOL, to_json_scalar
from .classify import (
    bounded_orbit_witness,
    classify_shadowing,
    fhc_check,
    uniform_expansivity_class,
)
from .conjugacy import (
    conjugacy_residual,
    conjugate_forward,
    conjugate_inverse,
    epsilon_budget,
    perturbation_from_spec,
)
from .errors import (
    BudgetExceededError,
    ClassificationError,
    ConvergenceError,
    TrajectoryError,
    WeightSpecError,
)
from .shadowing import (
    PseudoTrajectory,
    adversarial_pseudotrajectory,
    defect,
    oracle_best_shadow,
    random_pseudotrajectory,
    shadow_bilateral,
    shadow_positive,
)
from .spaces import SeqVector, SpaceSpec
from .weights import WeightSequence, parse_weight_spec

EXIT_OK, EXIT_BOUNDARY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

# flags whose values may legitimately start with '-'
_RANGE_FLAGS = ("--window", "--support")


class UsageError(Exception):
    pass


def _range(text: str):
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected A:B, got {text!r}") from exc


def _params(text: str) -> dict:
    out = {}
    for part in filter(None, text.split(",")):
        key, _, value = part.partition("=")
        if not value:
            raise argparse.ArgumentTypeError(f"expected key=value, got {part!r}")
        out[key.strip()] = int(value)
    return out


def _space(text: str) -> SpaceSpec:
    try:
        return SpaceSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load_json(source: str):
    """JSON from a file path, or inline JSON text."""
    if os.path.exists(source):
        with open(source) as fh:
            return json.load(fh)
    try:
        return json.loads(source)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{source!r} is neither a file nor JSON") from exc


def _vector(source: str, exact: bool) -> SeqVector:
    """``e<k>`` for a basis vector, otherwise a {lo, coeffs} document."""
    if source.startswith("e") and source[1:].lstrip("-").isdigit():
        return SeqVector.basis(int(source[1:]))
    try:
        return SeqVector.from_json(_load_json(source), exact)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _weights(args) -> WeightSequence:
    if not args.weights:
        raise UsageError("--weights is required")
    if not os.path.exists(args.weights):
        raise UsageError(f"no such weight file {args.weights}")
    with open(args.weights) as fh:
        return parse_weight_spec(fh.read(), exact=args.exact)


def _trajectory(args, w: WeightSequence) -> PseudoTrajectory:
    if args.traj:
        return PseudoTrajectory.from_json(_load_json(args.traj), args.exact)
    source = args.pseudo or "random"
    if source == "random":
        window = args.window or (-40, 40)
        return random_pseudotrajectory(w, args.space, args.delta, window, args.seed)
    if source == "adversarial":
        if not args.kind:
            raise UsageError("--kind is required for adversarial trajectories")
        return adversarial_pseudotrajectory(w, args.space, args.kind, args.delta, args.params or {})
    raise UsageError(f"unknown trajectory source {source!r}")


# -- subcommands -------------------------------------------------------------------


def _classify_file(path: str, exact: bool, rtol: float) -> dict:
    try:
        with open(path) as fh:
            w = parse_weight_spec(fh.read(), exact=exact)
    except (OSError, WeightSpecError) as exc:
        return {"file": path, "shadowing_class": None, "error": str(exc)}
    out = classify_shadowing(w, rtol).to_dict()
    out["file"] = path
    return out


def cmd_classify(args):
    if args.batch:
        files = sorted(str(p) for p in Path(args.batch).glob("*.json"))
        if not files:
            raise UsageError(f"no .json files in {args.batch}")
        with ProcessPoolExecutor() as pool:
            reports = list(pool.map(_classify_file, files, [args.exact] * len(files),
                                    [args.tol or DEFAULT_RTOL] * len(files)))
        boundary = any(r["shadowing_class"] == "BOUNDARY" for r in reports)
        counts = Counter(r["shadowing_class"] or "invalid" for r in reports)
        if counts["invalid"] == len(reports):
            code = EXIT_USAGE
        else:
            code = EXIT_BOUNDARY if boundary else EXIT_OK
        return {"reports": reports}, f"classified {len(files)} files: {dict(counts)}", code
    w = _weights(args)
    report = classify_shadowing(w, args.tol or DEFAULT_RTOL)
    code = EXIT_BOUNDARY if report.shadowing_class == "BOUNDARY" else EXIT_OK
    return report.to_dict(), f"class {report.shadowing_class}", code


def cmd_expansivity(args):
    w = _weights(args)
    verdict = uniform_expansivity_class(w, args.tol or DEFAULT_RTOL)
    out = {"uniform_expansivity": verdict}
    if args.horizon:
        witness = bounded_orbit_witness(w, args.space, args.horizon, args.bound)
        out["bounded_orbit_witness"] = witness.to_json() if witness is not None else None
        out["horizon"], out["bound"] = args.horizon, args.bound
    code = EXIT_BOUNDARY if verdict == "boundary" else EXIT_OK
    return out, f"uniform expansivity: {verdict}", code


def cmd_pseudo(args):
    w = _weights(args)
    args.pseudo = args.source
    traj = _trajectory(args, w)
    out = traj.to_json()
    out["measured_defect"] = to_json_scalar(defect(w, args.space, traj)) if len(traj) > 1 else 0
    return out, f"{len(traj)} points from n0={traj.n0}, delta={float(traj.delta):g}", EXIT_OK


def cmd_shadow(args):
    w = _weights(args)
    traj = _trajectory(args, w)
    shadow = shadow_positive if args.positive else shadow_bilateral
    result = shadow(w, args.space, traj, split_index=args.split_index)
    out = result.to_json()
    out["error_bounds"] = {"a_priori": result.error_bound}
    return out, f"max_error {float(result.max_error):.6g} <= bound {result.error_bound:.6g}", EXIT_OK


def cmd_oracle(args):
    w = _weights(args)
    traj = _trajectory(args, w)
    window = args.support or (traj.n0 - 20, traj.n1 + 20)
    result = oracle_best_shadow(w, args.space, traj, window)
    return result.to_json(), f"best error {float(result.best_error):.6g}", EXIT_OK


def cmd_conjugate(args):
    w = _weights(args)
    if not args.alpha:
        raise UsageError("--alpha is required")
    alpha = perturbation_from_spec(_load_json(args.alpha), args.space, args.exact)
    x = _vector(args.point, args.exact) if args.point else SeqVector.zero()
    tol = args.tol or 1e-10
    solver = conjugate_inverse if args.inverse else conjugate_forward
    result = solver(w, args.space, alpha, x, tol)
    out = result.to_json()
    out["epsilon_budget"] = epsilon_budget(w, args.space)
    if not args.inverse:
        out["conjugacy_residual"] = conjugacy_residual(w, args.space, alpha, x, tol)
    out["error_bounds"] = {"series_tail": result.series_tail_bound, "total": result.error_bound}
    return out, f"h{'^-1' if args.inverse else ''}(x) after {result.fixed_point_iterations} sweeps", EXIT_OK


def cmd_fhc(args):
    w = _weights(args)
    y = _vector(args.vector or "e0", args.exact)
    report = fhc_check(w, args.space, y, tol=args.tol or 1e-9)
    out = report.to_dict()
    out["error_bounds"] = {"tail": out["tail_bound"]}
    return out, f"series {'converge' if report.converges else 'diverge'}", EXIT_OK


# -- parser --------------------------------------------------------------------


def _common(p: argparse.ArgumentParser):
    p.add_argument("--weights", metavar="FILE", help="weight-spec JSON file")
    p.add_argument("--space", type=_space, default=SpaceSpec("c0"), help="lp:P or c0 (default c0)")
    p.add_argument("--tol", type=float, help="tolerance (meaning depends on the subcommand)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="read decimal literals as exact rationals")
    p.add_argument("--out", metavar="FILE", help="also write the report here")


def _traj_flags(p: argparse.ArgumentParser):
    p.add_argument("--traj", metavar="FILE", help="trajectory JSON file")
    p.add_argument("--pseudo", choices=["random", "adversarial"], help="generate the trajectory")
    p.add_argument("--window", type=_range, help="A:B time window for random trajectories")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--kind", choices=["backward_necessity", "bilateral_e0", "forward_unilateral"])
    p.add_argument("--params", type=_params, help="t=..,m=..")


def _split_choice(text: str):
    if text in ("min_constant", "min_error"):
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad split choice {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shadowshift", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="shadowing class and hyperbolicity")
    _common(p)
    p.add_argument("--batch", metavar="DIR", help="classify every *.json file in DIR")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("expansivity", help="uniform expansivity and a bounded-orbit search")
    _common(p)
    p.add_argument("--horizon", type=int, default=60)
    p.add_argument("--bound", type=float, default=4.0)
    p.set_defaults(func=cmd_expansivity)

    p = sub.add_parser("pseudo", help="generate a pseudotrajectory")
    p.add_argument("action", choices=["gen"])
    p.add_argument("source", choices=["random", "adversarial"])
    _common(p)
    _traj_flags(p)
    p.set_defaults(func=cmd_pseudo)

    p = sub.add_parser("shadow", help="shadow a pseudotrajectory by the splitting series")
    _common(p)
    _traj_flags(p)
    p.add_argument("--positive", action="store_true", help="one-sided window starting at 0")
    p.add_argument("--split-index", type=_split_choice, default=None,
                   help="class-C cut: an integer, min_constant (default) or min_error")
    p.set_defaults(func=cmd_shadow)

    p = sub.add_parser("oracle", help="best achievable shadowing error (minimax oracle)")
    _common(p)
    _traj_flags(p)
    p.add_argument("--support", type=_range, help="A:B support window for the candidate point")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("conjugate", help="evaluate the conjugacy h (or its inverse) at a point")
    _common(p)
    p.add_argument("--alpha", metavar="FILE", help="perturbation-map JSON")
    p.add_argument("--point", help="e<k> or {lo, coeffs} JSON / file (default 0)")
    p.add_argument("--inverse", action="store_true")
    p.set_defaults(func=cmd_conjugate)

    p = sub.add_parser("fhc", help="orbit-series convergence for one vector")
    _common(p)
    p.add_argument("--vector", help="e<k> or {lo, coeffs} JSON / file (default e0)")
    p.set_defaults(func=cmd_fhc)
    return parser


def _normalise_argv(argv: Sequence[str]) -> list:
    """Glue range flags to their values so ``--window -40:40`` parses."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in _RANGE_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def _emit(args, payload: dict, summary: str, mode: Optional[str]):
    report = {"tool": "shadowshift", "version": __version__, "command": args.command,
              "arithmetic_mode": mode, "result": payload}
    text = json.dumps(report, indent=2, default=to_json_scalar)
    print(text)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(f"[{args.command}] {summary}", file=sys.stderr)


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(_normalise_argv(list(sys.argv[1:] if argv is None else argv)))
    except SystemExit as exc:
        return int(exc.code or 0)
    mode = None
    try:
        if getattr(args, "weights", None) and os.path.exists(args.weights):
            mode = _weights(args).mode
        payload, summary, code = args.func(args)
    except (UsageError, WeightSpecError, TrajectoryError, FileNotFoundError) as exc:
        print(f"[{args.command}] error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ClassificationError as exc:
        boundary = exc.report is not None and exc.report.shadowing_class == "BOUNDARY"
        _emit(args, {"error": str(exc), "classification": exc.report.to_dict() if exc.report else None},
              str(exc), mode)
        return EXIT_BOUNDARY if boundary else EXIT_NUMERIC
    except (BudgetExceededError, ConvergenceError) as exc:
        _emit(args, {"error": str(exc)}, str(exc), mode)
        return EXIT_NUMERIC
    _emit(args, payload, summary, mode)
    return code


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
