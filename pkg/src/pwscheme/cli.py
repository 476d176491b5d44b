"""Command-line front end.

Exit status: 0 when every check passes, 1 when a check fails (the report
is still written), 2 for usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from . import cliques as K
from . import triples
from .geometry import DEFAULT_Q_BOUND, GeometryError, build_model
from .parameters import expected_parameters, krein_zero_triples, order_from_size
from .pipeline import STAGES, ConfigError, RunConfig, run_pipeline
from .report import FORMAT_VERSION, Record, Report, jsonable
from .scheme import SchemeError, build_pw_scheme, intersection_numbers, load_scheme, save_scheme
from .spectral import SpectralError, eigenmatrices_from_intersection

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _write_json(doc: dict, path: Optional[str]) -> None:
    text = json.dumps(jsonable(doc), indent=2)
    if path is None or path == "-":
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _triple(text: str) -> tuple:
    try:
        parts = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A,B,C integers, got {text!r}")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three classes, got {text!r}")
    return parts


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _input_file(path: Optional[str]) -> Optional[Path]:
    """Reject missing or non-JSON scheme files as input errors."""
    if path is None:
        return None
    p = Path(path)
    try:
        json.loads(p.read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}")
    return p


def _config(args, checks: Optional[Sequence[str]]) -> RunConfig:
    scheme_file = _input_file(getattr(args, "file", None))
    return RunConfig(q=None if scheme_file else args.q, mode="abstract" if scheme_file else "geometric",
                     scheme_file=scheme_file, checks=checks, threads=args.threads, seed=args.seed,
                     sample=getattr(args, "sample", None), q_bound=args.q_bound)


def _finish(report: Report, args) -> int:
    print(report.text(), file=sys.stderr if args.json in (None, "-") else sys.stdout)
    if args.json is not None:
        _write_json(report.to_json(timing=args.timing), args.json)
    return EXIT_OK if report.passed else EXIT_FAIL


def _run_stages(args, checks: Optional[Sequence[str]]):
    return run_pipeline(_config(args, checks))


# ---------------------------------------------------------------------------
# subcommands


def cmd_build_gq(args) -> int:
    try:
        model = build_model(args.q, args.q_bound)
    except GeometryError as exc:
        raise UsageError(str(exc))
    _write_json(model.to_json(), args.json)
    return EXIT_OK


def cmd_build_scheme(args) -> int:
    try:
        model = build_model(args.q, args.q_bound)
    except GeometryError as exc:
        raise UsageError(str(exc))
    _write_json(build_pw_scheme(model).to_json(), args.json)
    return EXIT_OK


def cmd_save(args) -> int:
    try:
        model = build_model(args.q, args.q_bound)
    except GeometryError as exc:
        raise UsageError(str(exc))
    save_scheme(build_pw_scheme(model), args.file)
    print(f"wrote {args.file}", file=sys.stderr)
    return EXIT_OK


def cmd_load(args) -> int:
    path = _input_file(args.file)
    report = Report(config={"file": str(path)})
    try:
        scheme = load_scheme(path)
    except SchemeError as exc:
        report.add(Record("scheme_axioms", False, {"error": str(exc), "at": exc.witness}, stage="parameters"))
    else:
        report.add(Record("scheme_axioms", True, None,
                          {"size": scheme.size, "classes": scheme.classes, "valencies": scheme.valencies},
                          stage="parameters"))
    return _finish(report, args)


def cmd_stage(stages: Sequence[str]):
    def run(args) -> int:
        report, _ = _run_stages(args, stages)
        return _finish(report, args)
    return run


def cmd_cliques(args) -> int:
    report, ctx = _run_stages(args, ["cliques"])
    if args.emit_cliques and ctx.cliques is not None:
        cc = parts = None
        try:
            cc = K.congruence_classes(ctx.cliques)
            parts = K.partition_set(ctx.cliques, cc, threads=args.threads)
        except K.CharacterizationError as exc:
            report.add(Record("congruence_classes", False, {"error": str(exc), "at": exc.witness}, stage="cliques"))
        _write_json(K.emit_json(ctx.cliques, cc, parts), args.emit_cliques)
    return _finish(report, args)


def cmd_reconstruct(args) -> int:
    report, ctx = _run_stages(args, ["reconstruction"])
    if args.out and ctx.reconstruction is not None:
        _write_json(ctx.reconstruction.to_json(), args.out)
    return _finish(report, args)


def cmd_pipeline(args) -> int:
    checks = None
    if args.checks:
        checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    report, _ = _run_stages(args, checks)
    return _finish(report, args)


def cmd_triples(args) -> int:
    """Solve one triple system and report it after nonnegativity propagation."""
    A, B, C = args.triple
    if args.file:
        scheme = load_scheme(_input_file(args.file))
        r = order_from_size(scheme.size)
        if r is None:
            raise UsageError(f"a scheme with {scheme.size} vertices has no PW order")
        p = intersection_numbers(scheme, threads=args.threads)
        Q = eigenmatrices_from_intersection(p, scheme.size).Q
    else:
        if args.q not in (3, 5, 7) or args.q > args.q_bound:
            raise UsageError(f"q must be one of 3, 5, 7 and at most {args.q_bound}, got {args.q}")
        r = args.q
        params = expected_parameters(r)
        p, Q = params.p, params.Q
    try:
        system = triples.build_system(p, A, B, C, symmetry=args.symmetry, krein=args.krein,
                                      Q=Q, krein_triples=krein_zero_triples())
    except ValueError as exc:
        raise UsageError(str(exc))
    try:
        space = triples.solve(system)
    except triples.InconsistentSystem as exc:
        _write_json({"format_version": FORMAT_VERSION, "triple": [A, B, C], "consistent": False,
                     "reason": str(exc)}, args.json)
        return EXIT_FAIL
    doc = {"format_version": FORMAT_VERSION, "r": r, "equations": len(system.rows),
           "dimension": space.dimension}
    try:
        prop = triples.nonneg_propagate(space)
    except triples.NonnegativityContradiction as exc:
        doc.update(space.to_json())
        doc["nonnegativity"] = {"contradiction": str(exc)}
        _write_json(doc, args.json)
        return EXIT_FAIL
    doc.update(prop.space.to_json())
    doc["before_nonnegativity"] = space.to_json()
    doc["nonnegativity"] = triples.propagation_to_json(prop)
    _write_json(doc, args.json)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", metavar="OUT", help="write the JSON document here ('-' for stdout)")
    common.add_argument("--threads", type=_positive, default=1)
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--q-bound", type=int, default=DEFAULT_Q_BOUND, dest="q_bound")
    common.add_argument("--timing", action="store_true", help="include elapsed seconds in JSON reports")
    common.add_argument("-v", "--verbose", action="store_true")

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument("--q", type=int, default=3, help="field order (3, 5 or 7)")
    source.add_argument("--file", help="scheme JSON file (abstract mode)")

    qonly = argparse.ArgumentParser(add_help=False)
    qonly.add_argument("--q", type=int, required=True)

    parser = argparse.ArgumentParser(prog="pwscheme", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-gq", parents=[common, qonly], help="emit Q(5,q) and its Q(4,q) as JSON")
    p.set_defaults(func=cmd_build_gq)
    p = sub.add_parser("build-scheme", parents=[common, qonly], help="emit the relation table as JSON")
    p.set_defaults(func=cmd_build_scheme)
    p = sub.add_parser("save", parents=[common, qonly], help="build the scheme and save it")
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_save)
    p = sub.add_parser("load", parents=[common], help="load and verify a scheme file")
    p.add_argument("--file", required=True)
    p.set_defaults(func=cmd_load)

    for name, stages, text in (("verify-params", ["parameters"], "valencies and intersection numbers"),
                               ("eigen", ["eigen"], "eigenmatrices, Krein parameters, spherical Gram")):
        p = sub.add_parser(name, parents=[common, source], help=text)
        p.set_defaults(func=cmd_stage(stages))

    p = sub.add_parser("triples", parents=[common, source], help="solve a triple intersection system")
    p.add_argument("--triple", type=_triple, required=True, metavar="A,B,C")
    p.add_argument("--krein", action="store_true", help="add the vanishing Krein rows")
    p.add_argument("--symmetry", action="store_true", help="add the symmetry rows")
    p.set_defaults(func=cmd_triples)

    p = sub.add_parser("cliques", parents=[common, source], help="clique structure checks")
    p.add_argument("--emit-cliques", metavar="PATH", help="write cliques, classes and partitions as JSON")
    p.set_defaults(func=cmd_cliques)

    p = sub.add_parser("hypotheses", parents=[common, source], help="both hypotheses and the class structure")
    p.add_argument("--sample", type=_positive, help="check the first hypothesis on N sampled vertices")
    p.set_defaults(func=cmd_stage(["hypotheses"]))

    p = sub.add_parser("reconstruct", parents=[common, source], help="rebuild the quadrangle and verify it")
    p.add_argument("--out", metavar="PATH", help="write the reconstructed incidence structure")
    p.add_argument("--sample", type=_positive, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("pipeline", parents=[common, source], help="run the staged verification")
    p.add_argument("--checks", help=f"comma-separated stages from: {', '.join(STAGES)}")
    p.add_argument("--sample", type=_positive, help="sample size for the first hypothesis")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SchemeError, SpectralError) as exc:
        print(f"{parser.prog} {args.command}: invalid scheme: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
