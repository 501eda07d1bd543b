"""Command line front end: ``envcalc check | lift | differential | rank``.

Exit status is 0 when everything passes, 1 when some check fails and 2 on a
usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Sequence

from .calculus import (
    DerivationA,
    NonFiniteFamily,
    apply_derivation_env,
    d_env,
    forms_equal,
    nabla,
    phi,
    phi_inverse,
    point_as_mapping,
    point_cotangent_rank,
    restrict_Pi,
    smoothened_normalize,
)
from .envelope import AElement, EnvelopeElement, ProductModel, embed_A
from .oracle import (
    FD_STEP,
    OracleConfig,
    SampleStream,
    Verdict,
    directional_fd,
    finite_points,
    tier_tolerance,
)
from .parser import ParseError
from .session import load_session, parse_session
from .suites import SUITES, Report, Session, UnknownSuite, run_suite
from .symbolic import compile_expr, normalize, to_string

DEFAULT_SEED = 42
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- argument parsing ---------------------------------------------------------


def _model(text: str) -> ProductModel:
    try:
        m, n = (int(p) for p in text.split(","))
        return ProductModel(m, n)
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"expected m,n with positive integers, got {text!r}") from None


def _point(text: str) -> list[Fraction]:
    try:
        return [Fraction(p.strip()) for p in text.split(",")]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad point {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _default_seed() -> int:
    raw = os.environ.get("ENVCALC_SEED")
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"ENVCALC_SEED must be an integer, got {raw!r}") from None


def build_parser(default_seed: int = DEFAULT_SEED) -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="envcalc", description="Smooth-envelope calculus checker.")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, samples_help: str = "oracle sample count"):
        p.add_argument("--seed", type=int, default=default_seed, help="seed (default: $ENVCALC_SEED or 42)")
        p.add_argument("--samples", type=_positive_int, default=64, help=samples_help)
        p.add_argument("--tol", type=float, default=1e-9, help="equality oracle tolerance")
        p.add_argument("--model", type=_model, default=ProductModel(2, 2), help="dimensions m,n (default 2,2)")
        p.add_argument("--format", choices=("text", "json"), default="text")

    check = sub.add_parser("check", help="run property suites")
    check.add_argument("--suite", default="all", help=f"one of: all, {', '.join(SUITES)}")
    check.add_argument("--verbose", action="store_true", help="list passing cases too")
    check.add_argument("--timing", action="store_true", help="include runtimes in JSON output")
    common(check)

    lift = sub.add_parser("lift", help="apply the lifted derivation of X to a function f")
    lift.add_argument("session", help="session file ('-' for stdin)")
    lift.add_argument("derivation", help="declared derivation name")
    lift.add_argument("function", help="declared function name")
    lift.add_argument("--points", type=_positive_int, default=50, help="finite-difference points")
    common(lift)

    diff = sub.add_parser("differential", help="print d(f) and its preimage under phi")
    diff.add_argument("session")
    diff.add_argument("function")
    common(diff)

    rank = sub.add_parser("rank", help="pointwise cotangent rank of a family")
    rank.add_argument("session")
    rank.add_argument("--family", help="comma-separated function names (default: all functions)")
    rank.add_argument("--point", type=_point, action="append", default=[], help="x1,..,xm,y1,..,yn (repeatable)")
    rank.add_argument("--points", type=_positive_int, default=5, help="seeded points when --point is absent")
    common(rank)
    return top


def _oracle(args) -> OracleConfig:
    return OracleConfig(seed=args.seed, samples=args.samples, tolerance=args.tol)


def _load(args) -> Session:
    if args.session == "-":
        return parse_session(sys.stdin.read(), args.model, _oracle(args))
    try:
        return load_session(args.session, args.model, _oracle(args))
    except OSError as exc:
        raise UsageError(f"cannot read session file: {exc}") from None


def _lookup(session: Session, name: str, kind):
    if name not in session.declarations:
        raise UsageError(f"{name!r} is not declared")
    value = session.declarations[name]
    if not isinstance(value, kind):
        want = "derivation" if kind is DerivationA else "function"
        raise UsageError(f"{name!r} is not a {want}")
    return value


def _as_env(f) -> EnvelopeElement:
    return embed_A(f) if isinstance(f, AElement) else f


def _emit(args, doc: dict, lines: Sequence[str]):
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        print("\n".join(lines))


# -- subcommands --------------------------------------------------------------


def cmd_check(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    for n in names:
        if n not in SUITES:
            raise UsageError(str(UnknownSuite(n)))
    session = Session(args.model, _oracle(args))
    reports: list[Report] = [run_suite(n, session) for n in names]
    if args.format == "json":
        if len(reports) == 1:
            doc = reports[0].as_dict(args.timing)
        else:
            total = {"pass": 0, "fail": 0, "undetermined": 0}
            for r in reports:
                for k, v in r.summary.items():
                    total[k] += v
            doc = {
                "suite": "all",
                "model": {"m": args.model.m, "n": args.model.n},
                "seed": args.seed,
                "suites": [r.as_dict(args.timing) for r in reports],
                "summary": total,
            }
        print(json.dumps(doc, indent=2))
    else:
        for r in reports:
            print(r.to_text(args.verbose))
        failed = sum(r.summary["fail"] for r in reports)
        print(f"{'FAIL' if failed else 'OK'}: {len(reports)} suite(s), {failed} failing case(s)")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAIL


def cmd_lift(args) -> int:
    session = _load(args)
    model = session.model
    X = _lookup(session, args.derivation, DerivationA)
    f = _as_env(_lookup(session, args.function, (AElement, EnvelopeElement)))
    NX = nabla(X)
    value = apply_derivation_env(NX, f)
    flat = normalize(value.flat)
    structural = restrict_Pi(NX) == X

    direction = {z: X.values[b].flat for b, z in enumerate(model.coordinates)}
    tol = max(tier_tolerance(f.flat), *(tier_tolerance(v) for v in direction.values()))
    fv = compile_expr(flat)
    stream = SampleStream(args.seed, session.oracle.domain(model.coordinates), args.points)
    worst = 0.0
    used = 0
    for p in finite_points([f.flat, flat, *direction.values()], stream, args.points, margin=2 * FD_STEP):
        fd = directional_fd(f.flat, direction, p)
        worst = max(worst, abs(fv(p) - fd) / (1 + abs(fd)))
        used += 1
    ok = structural and worst <= tol
    doc = {
        "derivation": args.derivation,
        "function": args.function,
        "result": to_string(flat),
        "restriction_is_identity": structural,
        "points": used,
        "residual": worst,
        "tolerance": tol,
        "verdict": "pass" if ok else "fail",
    }
    _emit(
        args,
        doc,
        [
            f"lift of {args.derivation} applied to {args.function}: {to_string(flat)}",
            f"restriction of the lift equals {args.derivation}: {structural}",
            f"finite-difference residual {worst:.3e} over {used} points (tol {tol:g}): {doc['verdict']}",
        ],
    )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_differential(args) -> int:
    session = _load(args)
    model = session.model
    f = _as_env(_lookup(session, args.function, (AElement, EnvelopeElement)))
    w = d_env(model, f)
    pre = phi_inverse(w)
    back = forms_equal(phi(pre), w, session.oracle)
    coeffs = [to_string(normalize(c)) for c in w.flats()]
    basis = [to_string(normalize(c)) for c in smoothened_normalize(pre).flats()]
    ok = back.verdict is not Verdict.NOT_EQUAL
    doc = {
        "function": args.function,
        "differential": dict(zip(model.coordinates, coeffs)),
        "phi_inverse": {
            "summands": [[to_string(normalize(s.flat)), str(a)] for s, a in pre.summands],
            "basis_coefficients": dict(zip(model.coordinates, basis)),
        },
        "round_trip": back.verdict.value,
        "verdict": "pass" if ok else "fail",
    }
    lines = [f"d({args.function}) = {w}"]
    lines.append(f"phi_inverse(d({args.function})) = {pre}")
    lines.append("  in the basis 1⊗dz: " + ", ".join(f"{z}: {c}" for z, c in zip(model.coordinates, basis)))
    lines.append(f"phi(phi_inverse(d({args.function}))) == d({args.function}): {back.verdict.value}")
    _emit(args, doc, lines)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_rank(args) -> int:
    session = _load(args)
    model = session.model
    if args.family:
        names = [n.strip() for n in args.family.split(",") if n.strip()]
    else:
        names = [n for n, v in session.declarations.items() if not isinstance(v, DerivationA)]
    family = [_as_env(_lookup(session, n, (AElement, EnvelopeElement))) for n in names]
    if args.point:
        try:
            points = [point_as_mapping(model, p) for p in args.point]
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        stream = SampleStream(args.seed, session.oracle.domain(model.coordinates), args.points)
        points = list(stream.points())
    rows = []
    ok = True
    for p in points:
        coords = ",".join(str(p[z]) for z in model.coordinates)
        try:
            r = point_cotangent_rank(model, family, p)
            rows.append({"point": coords, "rank": r})
            ok = ok and r <= model.dim
        except NonFiniteFamily as exc:
            rows.append({"point": coords, "rank": None, "detail": str(exc)})
            ok = False
    doc = {
        "family": names,
        "model": {"m": model.m, "n": model.n},
        "bound": model.dim,
        "points": rows,
        "verdict": "pass" if ok else "fail",
    }
    lines = [f"family [{', '.join(names)}] on m={model.m} n={model.n} (rank is at most {model.dim})"]
    for row in rows:
        lines.append(f"  ({row['point']}): rank {row['rank']}" + (f"  {row['detail']}" if "detail" in row else ""))
    _emit(args, doc, lines)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"check": cmd_check, "lift": cmd_lift, "differential": cmd_differential, "rank": cmd_rank}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        parser = build_parser(_default_seed())
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_OK if exc.code == 0 else EXIT_USAGE
        return COMMANDS[args.command](args)
    except (UsageError, ParseError) as exc:
        print(f"envcalc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
