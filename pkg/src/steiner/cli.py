"""Command-line front door: seeding, solving, certifying, and the small
calculators.

Machine-readable documents go to stdout (or the --out file); human
progress and summaries go to stderr.  Exit codes: 0 success, 1 usage
error, 2 input parse error, 3 incomplete solve (non-generic instance or
failed paths), 4 incomplete certification.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INCOMPLETE = 3
EXIT_UNCERTIFIED = 4


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract wants 1 for usage errors
    def error(self, message):
        raise UsageError(message)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if out:
        Path(out).write_text(text + "\n")
        _say(f"wrote {out}")
    else:
        print(text)


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_instance(path: str):
    from .conics import Quintuple

    try:
        return Quintuple.from_document(_load_json(path))
    except (ValueError, TypeError) as exc:
        raise InputError(f"bad instance document {path}: {exc}") from exc


def _load_db(path: str):
    from .seeds import DatabaseError, load_db

    try:
        return load_db(path)
    except OSError as exc:
        raise InputError(
            f"cannot read seed database {path}: {exc} (run `steiner seed --out {path}` first)"
        ) from exc
    except DatabaseError as exc:
        raise InputError(f"seed database {path} rejected: {exc}") from exc


def _conic_literal(text: str):
    from .conics import Conic

    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 6:
        raise InputError(
            f"a conic literal needs 6 comma-separated coefficients, got {len(parts)}"
        )
    try:
        return Conic.from_strings(parts)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad conic literal {text!r}: {exc}") from exc


def _vectors_from_solutions_doc(doc: dict):
    import numpy as np

    sols = doc.get("solutions")
    if not isinstance(sols, list) or not sols:
        raise InputError('solutions document needs a non-empty "solutions" list')

    def c(pair) -> complex:
        return complex(float(pair[0]), float(pair[1]))

    vectors = []
    for k, s in enumerate(sols):
        try:
            u = [c(p) for p in s["u"]]
            pts = [[c(xy[0]), c(xy[1])] for xy in s["tangency_points"]]
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise InputError(f"solution {k} is malformed: {exc}") from exc
        if len(u) != 5 or len(pts) != 5:
            raise InputError(f"solution {k} needs 5 coefficients and 5 points")
        vectors.append(np.array(u + [w for p in pts for w in p], dtype=complex))
    return vectors


def _progress(label: str):
    def cb(done: int, total: int) -> None:
        if done % 200 == 0 or done == total:
            _say(f"{label}: {done}/{total}")

    return cb


def cmd_seed(args) -> int:
    from .seeds import build_seed_database, save_db, verify_db

    _say(f"building seed database (rng seed {args.rng_seed})")
    db = build_seed_database(rng_seed=args.rng_seed, progress=_progress("monodromy"))
    rep = verify_db(db)
    if not rep.ok:
        _say("seed database failed verification: " + "; ".join(rep.failures))
        return EXIT_INCOMPLETE
    save_db(db, args.out)
    _say(
        f"{rep.n_solutions} seed solutions, max residual {rep.max_residual:.2e}, "
        f"written to {args.out}"
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    from .certify import certificate_document, certify_solution_set
    from .seeds import TARGET_COUNT
    from .solver import report_document, solve_instance

    q = _load_instance(args.instance)
    db = _load_db(args.db)
    _say(f"tracking {TARGET_COUNT} paths")
    report = solve_instance(q, db)
    for w in report.warnings:
        _say("warning: " + w)
    doc = report_document(report)
    code = EXIT_OK if report.generic else EXIT_INCOMPLETE
    line = f"{report.n_complex_solutions} complex, {report.n_real_numeric} real (numeric)"
    if args.certify:
        _say("certifying (exact arithmetic)")
        cert = certify_solution_set(
            q,
            [r.vector for r in report.solutions],
            progress=_progress("certify"),
        )
        doc["certification"] = certificate_document(cert)
        if cert.complete:
            line = (
                f"{report.n_complex_solutions} complex, {cert.n_distinct} distinct, "
                f"{cert.n_real if cert.n_real is not None else 0} real (certified)"
            )
        else:
            line += f"; certification incomplete ({cert.n_certified}/{cert.n_points})"
            code = EXIT_UNCERTIFIED
    _say(line)
    _emit(doc, args.out)
    return code


def cmd_certify(args) -> int:
    from .certify import certificate_document, certify_solution_set

    q = _load_instance(args.instance)
    vectors = _vectors_from_solutions_doc(_load_json(args.solutions))
    _say(f"certifying {len(vectors)} candidates (exact arithmetic)")
    cert = certify_solution_set(q, vectors, progress=_progress("certify"))
    real = "n/a" if cert.n_real is None else cert.n_real
    _say(
        f"{cert.n_certified}/{cert.n_points} certified, {cert.n_distinct} distinct, "
        f"{real} real"
    )
    _emit(certificate_document(cert), args.out)
    return EXIT_OK if cert.complete else EXIT_UNCERTIFIED


def cmd_chow(args) -> int:
    from .chow import intersection_count

    if args.points + args.lines + args.conics != 5:
        raise UsageError("the three condition counts must sum to 5")
    if min(args.points, args.lines, args.conics) < 0:
        raise UsageError("condition counts must be nonnegative")
    print(intersection_count(args.points, args.lines, args.conics))
    return EXIT_OK


def cmd_tangent(args) -> int:
    from .conics import IdenticalConicsError, check_tangency
    from .scalars import format_float

    a = _conic_literal(args.conic1)
    u = _conic_literal(args.conic2)
    try:
        points = check_tangency(a, u)
    except IdenticalConicsError as exc:
        raise InputError(str(exc)) from exc
    doc = {
        "tangent": bool(points),
        "points": [
            [
                [format_float(complex(p.x).real), format_float(complex(p.x).imag)],
                [format_float(complex(p.y).real), format_float(complex(p.y).imag)],
            ]
            for p in points
        ],
    }
    _say("tangent" if points else "not tangent")
    _emit(doc, None)
    return EXIT_OK


def cmd_classify(args) -> int:
    from .conics import DegenerateConicError, classify

    conic = _conic_literal(args.conic)
    try:
        print(classify(conic).value)
    except (DegenerateConicError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    return EXIT_OK


def cmd_pentagon(args) -> int:
    from .instances import pentagon_instance, regular_pentagon_params
    from .scalars import parse_rational

    try:
        eps = parse_rational(args.eps)
        delta = parse_rational(args.delta)
        params = regular_pentagon_params(eps, delta)
        q = pentagon_instance(params)
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(str(exc)) from exc
    _emit(q.to_document(), args.out)
    return EXIT_OK


def cmd_fulton(args) -> int:
    from .instances import fulton_instance

    _emit(fulton_instance().to_document(), args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .server import ServerConfig, create_app

    host, _, port = args.bind.rpartition(":")
    if not host or not port.isdigit():
        raise UsageError(f"--bind wants HOST:PORT, got {args.bind!r}")
    app = create_app(ServerConfig(db_path=args.db))
    uvicorn.run(app, host=host, port=int(port), log_level="info")
    return EXIT_OK


def build_parser() -> _Parser:
    p = _Parser(prog="steiner", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("seed", help="build the seed database by monodromy")
    s.add_argument("--out", required=True, help="database file to write")
    s.add_argument("--rng-seed", type=int, default=3264)
    s.set_defaults(func=cmd_seed)

    s = sub.add_parser("solve", help="solve an instance file against a seed database")
    s.add_argument("instance", help="instance document (JSON)")
    s.add_argument("--db", required=True, help="seed database file")
    s.add_argument("--certify", action="store_true", help="exact certification pass")
    s.add_argument("--out", help="write the result document here instead of stdout")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("certify", help="certify a solutions document")
    s.add_argument("instance")
    s.add_argument("solutions")
    s.add_argument("--out", help="write the certification document here")
    s.set_defaults(func=cmd_certify)

    s = sub.add_parser("chow", help="intersection number for a condition mix")
    s.add_argument("points", type=int)
    s.add_argument("lines", type=int)
    s.add_argument("conics", type=int)
    s.set_defaults(func=cmd_chow)

    s = sub.add_parser("tangent", help="tangency check for two conic literals")
    s.add_argument("conic1")
    s.add_argument("conic2")
    s.set_defaults(func=cmd_tangent)

    s = sub.add_parser("classify", help="classify a real conic literal")
    s.add_argument("conic")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("pentagon", help="pentagon-family instance document")
    s.add_argument("--eps", required=True)
    s.add_argument("--delta", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_pentagon)

    s = sub.add_parser("fulton", help="built-in fully-real instance document")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fulton)

    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--db", required=True)
    s.add_argument("--bind", default="127.0.0.1:8000")
    s.set_defaults(func=cmd_serve)

    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        _say(f"usage error: {exc}")
        return EXIT_USAGE
    except InputError as exc:
        _say(f"input error: {exc}")
        return EXIT_PARSE


def main() -> None:
    sys.exit(run())
